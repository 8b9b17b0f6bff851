//! Bogoliubov quasiparticles of the spherical Thomas–Fermi condensate in the
//! hydrodynamic approximation.
//!
//! A mode (j, ℓ, m = 0) has density fluctuation
//! δn(r) = C r^ℓ S_j^{(ℓ)}(r²/R²) Y_ℓ0, frequency ω_b√(2j² + 2jℓ + 3j + ℓ),
//! and Bogoliubov combinations u − v = δn/√n and u + v = (2g_b n/ħω)(u − v).
//! C is fixed by ∫|δn|² = ħω/(2g_b), equivalent to ∫(u² − v²) = 1.
//!
//! u − v grows as n^{-1/2} toward the surface. The evaluators refuse
//! r ≥ R; coupling integrals only sample the tweezer region near r = 0.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condensate::TfProfile;
use crate::config::ModeBasisConfig;
use crate::error::NumericsError;
use crate::special::{legendre, radial_norm, radial_polynomial};

/// Radial index j and angular momentum ℓ; the azimuthal number is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub j: u32,
    pub l: u32,
}

impl ModeIndex {
    pub fn new(j: u32, l: u32) -> Self {
        Self { j, l }
    }

    /// (0, 0) is the zero-frequency phase mode of the condensate itself.
    pub fn is_goldstone(&self) -> bool {
        self.j == 0 && self.l == 0
    }
}

/// Basis order: ascending ℓ, then ascending j.
impl Ord for ModeIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.l, self.j).cmp(&(other.l, other.j))
    }
}

impl PartialOrd for ModeIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j={}, l={})", self.j, self.l)
    }
}

/// ω_{j,ℓ}/ω_b = √(2j² + 2jℓ + 3j + ℓ).
pub fn dispersion(j: u32, l: u32) -> f64 {
    let (j, l) = (j as f64, l as f64);
    (2.0 * j * j + 2.0 * j * l + 3.0 * j + l).sqrt()
}

/// Bose occupation 1/(e^{ħω/k_BT} − 1); frequency and temperature in the
/// same energy units. Zero at T = 0.
pub fn thermal_occupation(frequency: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (frequency / temperature).exp_m1()
}

/// Y_ℓ0 as a function of cos θ.
pub fn spherical_harmonic(l: u32, cos_theta: f64) -> f64 {
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre(l, cos_theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: ModeIndex,
    pub frequency: f64,
    pub occupation: f64,
    /// C_{jℓ}.
    pub amplitude: f64,
}

impl Mode {
    pub fn new(index: ModeIndex, profile: &TfProfile, temperature: f64) -> Self {
        let frequency = dispersion(index.j, index.l);
        let l = index.l;
        let r = profile.radius;
        // ∫δn² d³r = C² (R^{2ℓ+3}/2) ∫₀¹ x^{ℓ+1/2} S² dx = ω/(2g)
        let amplitude = (frequency / profile.coupling / (r.powi(2 * l as i32 + 3) * radial_norm(index.j, l))).sqrt();
        Self { index, frequency, occupation: thermal_occupation(frequency, temperature), amplitude }
    }

    /// Radial part C r^ℓ S(r²/R²) of δn, without the spherical harmonic.
    pub fn radial_density(&self, profile: &TfProfile, r: f64) -> f64 {
        let x = (r / profile.radius).powi(2);
        self.amplitude * r.powi(self.index.l as i32) * radial_polynomial(self.index.j, self.index.l, x)
    }

    /// Radial part of u − v. Valid for r < R only.
    pub fn f_minus_radial(&self, profile: &TfProfile, r: f64) -> f64 {
        self.radial_density(profile, r) / profile.wavefunction(r)
    }

    /// Radial part of u + v. Valid for r < R only.
    pub fn f_plus_radial(&self, profile: &TfProfile, r: f64) -> f64 {
        2.0 * profile.coupling * profile.wavefunction(r) * self.radial_density(profile, r) / self.frequency
    }

    fn check(&self, profile: &TfProfile, r: f64) -> Result<(), NumericsError> {
        if r >= 0.0 && r < profile.radius {
            Ok(())
        } else {
            Err(NumericsError::Domain { r, radius: profile.radius })
        }
    }

    /// δn_q(r, θ̂).
    pub fn density_fluctuation(&self, profile: &TfProfile, r: f64, cos_theta: f64) -> Result<f64, NumericsError> {
        self.check(profile, r)?;
        Ok(self.radial_density(profile, r) * spherical_harmonic(self.index.l, cos_theta))
    }

    /// (u − v)(r, θ̂).
    pub fn f_minus(&self, profile: &TfProfile, r: f64, cos_theta: f64) -> Result<f64, NumericsError> {
        self.check(profile, r)?;
        Ok(self.f_minus_radial(profile, r) * spherical_harmonic(self.index.l, cos_theta))
    }

    /// (u + v)(r, θ̂).
    pub fn f_plus(&self, profile: &TfProfile, r: f64, cos_theta: f64) -> Result<f64, NumericsError> {
        self.check(profile, r)?;
        Ok(self.f_plus_radial(profile, r) * spherical_harmonic(self.index.l, cos_theta))
    }
}

/// All modes of the basis in ascending (ℓ, j) order, Goldstone mode excluded.
pub fn build_basis(config: &ModeBasisConfig, profile: &TfProfile, temperature: f64) -> Vec<Mode> {
    let mut ls = config.angular_momenta.clone();
    ls.sort_unstable();
    ls.dedup();
    ls.iter()
        .flat_map(|&l| (config.j_min..=config.j_max).map(move |j| ModeIndex::new(j, l)))
        .filter(|ix| !ix.is_goldstone())
        .map(|ix| Mode::new(ix, profile, temperature))
        .collect()
}
