//! Thomas–Fermi mean field of the condensate in a spherical harmonic trap.
//!
//! All quantities are in oscillator units (ħ = M = ω_b = 1): lengths in
//! a_ho, energies in ħω_b, densities in a_ho⁻³.

use serde::{Deserialize, Serialize};

use crate::config::{InternalModel, Population};
use crate::error::Warning;

/// Below this value of N·a_b/a_ho the kinetic term is no longer negligible.
pub const TF_VALIDITY_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfProfile {
    /// Chemical potential μ.
    pub chemical_potential: f64,
    /// Thomas–Fermi radius R = √(2μ).
    pub radius: f64,
    /// n₀ = μ/g_b.
    pub central_density: f64,
    pub coupling: f64,
    pub atom_number: f64,
}

impl TfProfile {
    /// n(r) = max(0, (μ − r²/2)/g_b).
    pub fn density(&self, r: f64) -> f64 {
        ((self.chemical_potential - 0.5 * r * r) / self.coupling).max(0.0)
    }

    /// φ_b(r) = √n(r), real and non-negative.
    pub fn wavefunction(&self, r: f64) -> f64 {
        self.density(r).sqrt()
    }
}

/// Closed-form Thomas–Fermi solution. `scattering_length` and `coupling` are
/// a_b/a_ho and g_b = 4π a_b/a_ho.
pub fn solve_tf(population: Population, scattering_length: f64, coupling: f64) -> (TfProfile, Vec<Warning>) {
    let (mu, atom_number) = match population {
        Population::AtomNumber(n) => (0.5 * (15.0 * n * scattering_length).powf(0.4), n),
        Population::CentralDensity(n0) => {
            let mu = coupling * n0;
            (mu, (2.0 * mu).powf(2.5) / (15.0 * scattering_length))
        }
    };
    let profile = TfProfile {
        chemical_potential: mu,
        radius: (2.0 * mu).sqrt(),
        central_density: mu / coupling,
        coupling,
        atom_number,
    };
    let parameter = atom_number * scattering_length;
    let warnings = if parameter < TF_VALIDITY_THRESHOLD {
        vec![Warning::ThomasFermi { parameter }]
    } else {
        Vec::new()
    };
    (profile, warnings)
}

pub fn solve_tf_model(model: &InternalModel) -> (TfProfile, Vec<Warning>) {
    solve_tf(model.population, model.scattering_length, model.g_b)
}
