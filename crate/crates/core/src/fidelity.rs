//! Second-order transfer fidelity at the ideal pulse length τ₀ = 2θ/Ω_eff.
//!
//! P(θ, τ₀) = 1 − g(θ, τ₀) with
//! g = π² Σ_q { A₁ cosθ + (2n̄_q + 1)[A₂ cos 2θ + A₃ + A₄] },
//! where the A's are products of the couplings and finite-time windows
//! δ^(τ)(x) = sin(xτ/2)/(πx) at ω_q and ω_q ± Ω_eff.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingRecord, CouplingSet};
use crate::error::Warning;
use crate::modes::ModeIndex;
use crate::summation::Compensated;

/// sin(xτ/2)/(πx), continuous through x = 0.
pub fn delta_window(x: f64, tau: f64) -> f64 {
    let s = 0.5 * x * tau;
    if (x * tau).abs() < 1e-4 {
        tau / (2.0 * PI) * (1.0 - s * s / 6.0)
    } else {
        s.sin() / (PI * x)
    }
}

/// Ideal transfer time for Bloch angle θ.
pub fn transfer_time(theta: f64, rabi_eff: f64) -> f64 {
    2.0 * theta / rabi_eff
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ACoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

pub fn a_coefficients(rec: &CouplingRecord, rabi_eff: f64, tau: f64) -> ACoefficients {
    let alpha_plus = rec.alpha_y + 2.0 * rec.alpha_z;
    let alpha_minus = rec.alpha_y - 2.0 * rec.alpha_z;
    let d0 = delta_window(rec.frequency, tau);
    let dm = alpha_minus * delta_window(rec.frequency - rabi_eff, tau);
    let dp = alpha_plus * delta_window(rec.frequency + rabi_eff, tau);
    let dx = rec.alpha_x * d0;
    ACoefficients {
        a1: -dx * (dm + dp),
        a2: 0.5 * dm * dp,
        a3: 0.25 * (dm * dm + dp * dp),
        a4: dx * dx,
    }
}

/// ω_q α_y − 2Ω_eff α_z, and its size relative to the two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchResidual {
    pub residual: f64,
    /// 0 for perfect cancellation, 1 when one channel is absent.
    pub ratio: f64,
}

pub fn quench_residual(rec: &CouplingRecord, rabi_eff: f64) -> QuenchResidual {
    let a = rec.frequency * rec.alpha_y;
    let b = 2.0 * rabi_eff * rec.alpha_z;
    let scale = a.abs() + b.abs();
    let residual = a - b;
    QuenchResidual { residual, ratio: if scale > 0.0 { residual.abs() / scale } else { 0.0 } }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeContribution {
    pub index: ModeIndex,
    pub frequency: f64,
    pub occupation: f64,
    pub coefficients: ACoefficients,
    /// π²{A₁cosθ + (2n̄+1)[A₂cos2θ + A₃ + A₄]}.
    pub weighted: f64,
    pub quench: QuenchResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub theta: f64,
    pub rabi_eff: f64,
    pub tau: f64,
    pub g: f64,
    pub fidelity: f64,
    /// Noise floor π²Σ(2n̄+1)A₄ at θ = π/2.
    pub g_min: f64,
    pub g_warn: f64,
    /// g below `g_warn`.
    pub valid: bool,
    pub modes: Vec<ModeContribution>,
}

impl FidelityResult {
    pub fn warnings(&self) -> Vec<Warning> {
        if self.valid {
            Vec::new()
        } else {
            vec![Warning::Perturbative { g: self.g, threshold: self.g_warn }]
        }
    }
}

/// Records sorted into basis order, so that every reduction below is
/// independent of the order the couplings were produced in.
fn ordered(set: &CouplingSet) -> Vec<&CouplingRecord> {
    let mut recs: Vec<_> = set.records.iter().collect();
    recs.sort_by_key(|r| r.index);
    recs
}

/// g(θ, τ₀) and the per-mode breakdown.
pub fn g_function(theta: f64, set: &CouplingSet, g_warn: f64) -> FidelityResult {
    let rabi = set.rabi_eff;
    let tau = transfer_time(theta, rabi);
    let (c1, c2) = (theta.cos(), (2.0 * theta).cos());
    let modes: Vec<ModeContribution> = ordered(set)
        .par_iter()
        .map(|rec| {
            let a = a_coefficients(rec, rabi, tau);
            let weight = 2.0 * rec.occupation + 1.0;
            ModeContribution {
                index: rec.index,
                frequency: rec.frequency,
                occupation: rec.occupation,
                coefficients: a,
                weighted: PI * PI * (a.a1 * c1 + weight * (a.a2 * c2 + a.a3 + a.a4)),
                quench: quench_residual(rec, rabi),
            }
        })
        .collect();
    let g = modes.iter().map(|m| m.weighted).collect::<Compensated>().value();
    FidelityResult {
        theta,
        rabi_eff: rabi,
        tau,
        g,
        fidelity: 1.0 - g,
        g_min: g_min_floor(set),
        g_warn,
        valid: g < g_warn,
        modes,
    }
}

/// π²Σ(2n̄+1)A₄ at θ = π/2, τ₀ = π/Ω_eff.
pub fn g_min_floor(set: &CouplingSet) -> f64 {
    let tau = transfer_time(0.5 * PI, set.rabi_eff);
    let sum = ordered(set)
        .iter()
        .map(|rec| (2.0 * rec.occupation + 1.0) * (rec.alpha_x * delta_window(rec.frequency, tau)).powi(2))
        .collect::<Compensated>()
        .value();
    PI * PI * sum
}
