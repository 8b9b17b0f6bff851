//! Single-atom ground state of the tweezer and the collisional-blockade
//! diagnostics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Warning;

/// Harmonic ground state of the tweezer at the condensate centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TweezerState {
    /// ω_a (internal units).
    pub frequency: f64,
    /// a_a = √(ħ/Mω_a).
    pub oscillator_length: f64,
}

impl TweezerState {
    /// φ_a(r) = (π a_a²)^{-3/4} exp(−r²/2a_a²).
    pub fn wavefunction(&self, r: f64) -> f64 {
        let a = self.oscillator_length;
        (PI * a * a).powf(-0.75) * (-0.5 * r * r / (a * a)).exp()
    }

    /// ω_gap = (g_a/2ħ) ∫|φ_a|⁴ d³r = (g_a/2) (2π)^{-3/2} a_a^{-3}.
    pub fn gap_frequency(&self, g_a: f64) -> f64 {
        0.5 * g_a * (2.0 * PI).powf(-1.5) / self.oscillator_length.powi(3)
    }
}

/// Ground state for tweezer frequency ω_a (with ħ = M = 1).
pub fn ground_state(frequency: f64) -> TweezerState {
    TweezerState { frequency, oscillator_length: frequency.sqrt().recip() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub min_gap_times_tau: f64,
    pub max_rabi_over_gap: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { min_gap_times_tau: 50.0, max_rabi_over_gap: 0.1 }
    }
}

/// ω_gap τ ≫ 1 and Ω_eff ≪ ω_gap, made quantitative by the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub gap_times_tau: f64,
    pub rabi_over_gap: f64,
    pub gap_time_ok: bool,
    pub rabi_ok: bool,
}

impl RegimeDiagnostics {
    pub fn pass(&self) -> bool {
        self.gap_time_ok && self.rabi_ok
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut w = Vec::new();
        if !self.gap_time_ok {
            w.push(Warning::BlockadeTime { gap_times_tau: self.gap_times_tau });
        }
        if !self.rabi_ok {
            w.push(Warning::BlockadeRabi { rabi_over_gap: self.rabi_over_gap });
        }
        w
    }
}

pub fn regime_check(rabi: f64, tau: f64, gap: f64, thresholds: RegimeThresholds) -> RegimeDiagnostics {
    let gap_times_tau = gap * tau;
    let rabi_over_gap = rabi / gap;
    RegimeDiagnostics {
        gap_times_tau,
        rabi_over_gap,
        gap_time_ok: gap_times_tau >= thresholds.min_gap_times_tau,
        rabi_ok: rabi_over_gap <= thresholds.max_rabi_over_gap,
    }
}
