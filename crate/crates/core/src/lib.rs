//! Fidelity of a Rabi pulse on an impurity atom held in an optical tweezer
//! inside a Bose–Einstein condensate, to second order in the coupling to
//! Bogoliubov phonons.
//!
//! The pipeline runs configuration → Thomas–Fermi condensate → hydrodynamic
//! mode basis → tweezer ground state → coupling integrals → fidelity. A
//! small exact spin–boson solver checks the perturbative formula.

pub mod condensate;
pub mod config;
pub mod coupling;
pub mod error;
pub mod fidelity;
pub mod modes;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod summation;
pub mod sweep;
pub mod table;
pub mod tweezer;
pub mod units;

pub use error::{ConfigError, Error, NumericsError, Result, UnitError, Warning};
