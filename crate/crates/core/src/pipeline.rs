//! End-to-end evaluation: configuration → condensate → modes → tweezer →
//! couplings → fidelity, with cheap re-evaluation for parameters that only
//! touch the last stages.
//!
//! | changed input          | rebuilt                          |
//! |------------------------|----------------------------------|
//! | g_ab                   | α_z (rescaled overlaps)          |
//! | Ω_eff / Ω₀             | α_x, α_y (rescaled overlaps)     |
//! | T                      | thermal occupations              |
//! | θ                      | nothing (τ₀ only)                |
//! | anything else          | everything                       |

use serde::{Deserialize, Serialize};

use crate::condensate::{solve_tf_model, TfProfile};
use crate::config::{to_internal, Config, DriveStrength, InternalModel};
use crate::coupling::{build_couplings, CouplingSet, OverlapEngine, QuadratureSpec};
use crate::error::{NumericsError, Result, Warning};
use crate::fidelity::{g_function, FidelityResult};
use crate::modes::{build_basis, thermal_occupation, Mode};
use crate::oracle::{OracleConfig, OracleMode};
use crate::tweezer::{ground_state, regime_check, RegimeDiagnostics, RegimeThresholds, TweezerState};

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: Config,
    pub model: InternalModel,
    pub profile: TfProfile,
    pub tweezer: TweezerState,
    pub basis: Vec<Mode>,
    pub couplings: CouplingSet,
    /// Warnings from configuration and condensate stages.
    pub warnings: Vec<Warning>,
}

impl Pipeline {
    pub fn new(config: &Config) -> Result<Self> {
        config.validate()?;
        let model = to_internal(config);
        let (profile, tf_warnings) = solve_tf_model(&model);
        let tweezer = ground_state(model.tweezer_frequency);
        let basis = build_basis(&model.basis, &profile, model.temperature);
        let spec = QuadratureSpec::with_tolerance(model.numerics.quadrature_tolerance);
        let engine = OverlapEngine::new(&profile, &tweezer, model.wave_number, spec);
        let couplings = build_couplings(&engine, &basis, model.drive, model.g_ab)?;
        let mut warnings = config.warnings();
        warnings.extend(tf_warnings);
        Ok(Self { config: config.clone(), model, profile, tweezer, basis, couplings, warnings })
    }

    /// Interspecies coupling as a multiple of g_b.
    pub fn with_interspecies_ratio(&self, ratio: f64) -> Self {
        let mut out = self.clone();
        out.config.species.g_ab_ratio = ratio;
        out.model.g_ab = ratio * self.model.g_b;
        out.couplings = self.couplings.with_interspecies(out.model.g_ab);
        out
    }

    /// Drive strength in SI (rad/s).
    pub fn with_drive(&self, strength: DriveStrength) -> Self {
        let mut out = self.clone();
        let w = self.model.units.trap_frequency;
        out.config.drive.strength = strength;
        out.couplings = match strength {
            DriveStrength::Bare(v) => {
                out.model.drive = DriveStrength::Bare(v / w);
                self.couplings.with_bare_rabi(v / w)
            }
            DriveStrength::Effective(v) => {
                out.model.drive = DriveStrength::Effective(v / w);
                self.couplings.with_effective_rabi(v / w)
            }
        };
        out
    }

    /// Temperature in kelvin.
    pub fn with_temperature(&self, kelvin: f64) -> Self {
        let mut out = self.clone();
        out.config.condensate.temperature = kelvin;
        let t = kelvin / self.model.units.temperature();
        out.model.temperature = t;
        out.basis.iter_mut().for_each(|m| m.occupation = thermal_occupation(m.frequency, t));
        out.couplings = self.couplings.with_occupations(|w| thermal_occupation(w, t));
        out
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        let mut out = self.clone();
        out.config.drive.theta = theta;
        out.model.theta = theta;
        out
    }

    /// Same pipeline restricted to modes with j ≤ `j_max`.
    pub fn truncated(&self, j_max: u32) -> Self {
        let mut out = self.clone();
        out.config.basis.j_max = j_max;
        out.model.basis.j_max = j_max;
        out.basis.retain(|m| m.index.j <= j_max);
        out.couplings.records.retain(|r| r.index.j <= j_max);
        out
    }

    pub fn regime(&self, tau: f64) -> RegimeDiagnostics {
        let thresholds = RegimeThresholds {
            min_gap_times_tau: self.model.numerics.min_gap_times_tau,
            max_rabi_over_gap: self.model.numerics.max_rabi_over_gap,
        };
        regime_check(self.couplings.rabi_eff, tau, self.tweezer.gap_frequency(self.model.g_a), thresholds)
    }

    /// Oracle problem on the lowest `count` s-wave modes. Their couplings are
    /// rescaled together so that the largest |α| equals `strength` (in units
    /// of ω_b); the coupling scale λ of the oracle then multiplies these.
    pub fn oracle_config(&self, count: usize, strength: f64, n_max: usize) -> Result<OracleConfig> {
        let mut s_wave: Vec<_> = self.couplings.records.iter().filter(|r| r.index.l == 0).collect();
        s_wave.sort_by_key(|r| r.index);
        if count == 0 || s_wave.len() < count {
            return Err(NumericsError::Invalid(format!(
                "oracle needs {count} s-wave modes, basis has {}",
                s_wave.len()
            ))
            .into());
        }
        let modes: Vec<OracleMode> = s_wave[..count].iter().map(|r| OracleMode::from(*r)).collect();
        let largest = modes.iter().map(|m| m.alpha_x.abs().max(m.alpha_y.abs()).max(m.alpha_z.abs())).fold(0.0, f64::max);
        if !(largest > 0.0) || !(strength > 0.0) {
            return Err(NumericsError::Invalid("oracle modes are uncoupled".into()).into());
        }
        let scale = strength / largest;
        let modes = modes
            .into_iter()
            .map(|m| OracleMode { alpha_x: scale * m.alpha_x, alpha_y: scale * m.alpha_y, alpha_z: scale * m.alpha_z, ..m })
            .collect();
        let cfg = OracleConfig { modes, n_max, rabi_eff: self.couplings.rabi_eff, theta: self.model.theta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn evaluate(&self) -> Evaluation {
        let fidelity = g_function(self.model.theta, &self.couplings, self.model.numerics.g_warn);
        let regime = self.regime(fidelity.tau);
        let mut warnings = self.warnings.clone();
        warnings.extend(regime.warnings());
        warnings.extend(fidelity.warnings());
        let summary = Summary::new(self, &fidelity, &regime);
        Evaluation { fidelity, regime, summary, warnings }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Internal units (ω_b = 1).
    pub fidelity: FidelityResult,
    pub regime: RegimeDiagnostics,
    pub summary: Summary,
    pub warnings: Vec<Warning>,
}

/// Headline numbers in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub theta: f64,
    /// rad/s
    pub omega_eff: f64,
    /// rad/s
    pub omega_0: f64,
    /// Ω_eff/Ω₀
    pub rabi_overlap: f64,
    /// s
    pub tau0: f64,
    #[serde(rename = "P")]
    pub fidelity: f64,
    pub g: f64,
    pub g_min: f64,
    pub g_warn: f64,
    pub valid: bool,
    pub regime_ok: bool,
    /// rad/s
    pub omega_gap: f64,
    pub gap_times_tau: f64,
    pub rabi_over_gap: f64,
    /// rad/s
    pub omega_b: f64,
    pub g_ab_over_g_b: f64,
    /// K
    pub temperature: f64,
    /// m⁻³
    pub n0: f64,
    #[serde(rename = "N")]
    pub atom_number: f64,
    /// m
    pub thomas_fermi_radius: f64,
    /// m
    pub tweezer_length: f64,
    pub modes: usize,
    pub quadrature_achieved: f64,
    /// Largest quench-residual ratio among the ten most strongly
    /// contributing modes.
    pub worst_quench_ratio: f64,
}

impl Summary {
    fn new(p: &Pipeline, f: &FidelityResult, regime: &RegimeDiagnostics) -> Self {
        let u = &p.model.units;
        let w = u.trap_frequency;
        let mut dominant: Vec<_> = f.modes.iter().collect();
        dominant.sort_by(|a, b| b.weighted.abs().total_cmp(&a.weighted.abs()));
        Self {
            theta: f.theta,
            omega_eff: p.couplings.rabi_eff * w,
            omega_0: p.couplings.rabi_bare * w,
            rabi_overlap: p.couplings.rabi_overlap,
            tau0: f.tau / w,
            fidelity: f.fidelity,
            g: f.g,
            g_min: f.g_min,
            g_warn: f.g_warn,
            valid: f.valid,
            regime_ok: regime.pass(),
            omega_gap: p.tweezer.gap_frequency(p.model.g_a) * w,
            gap_times_tau: regime.gap_times_tau,
            rabi_over_gap: regime.rabi_over_gap,
            omega_b: w,
            g_ab_over_g_b: p.model.g_ab / p.model.g_b,
            temperature: p.model.temperature * u.temperature(),
            n0: p.profile.central_density / u.volume(),
            atom_number: p.profile.atom_number,
            thomas_fermi_radius: p.profile.radius * u.length(),
            tweezer_length: p.tweezer.oscillator_length * u.length(),
            modes: f.modes.len(),
            quadrature_achieved: p.couplings.achieved_tolerance,
            worst_quench_ratio: dominant.iter().take(10).map(|m| m.quench.ratio).fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> Config {
        let mut c = Config::baseline();
        c.basis.j_max = 60;
        c
    }

    #[test]
    fn cached_rescaling_matches_rebuild() {
        let base = Pipeline::new(&small()).unwrap();
        let mut c = small();
        c.species.g_ab_ratio = 0.5;
        c.drive.strength = DriveStrength::Effective(2.0 * PI * 3.4e3);
        c.condensate.temperature = 100e-9;
        let rebuilt = Pipeline::new(&c).unwrap().evaluate();
        let cached = base
            .with_interspecies_ratio(0.5)
            .with_drive(DriveStrength::Effective(2.0 * PI * 3.4e3))
            .with_temperature(100e-9)
            .evaluate();
        assert!((rebuilt.fidelity.g - cached.fidelity.g).abs() < 1e-13 * rebuilt.fidelity.g);
    }

    #[test]
    fn bare_and_effective_drive_agree() {
        let p = Pipeline::new(&small()).unwrap();
        let s = p.evaluate().summary;
        let bare = p.with_drive(DriveStrength::Bare(s.omega_0)).evaluate().summary;
        assert!((bare.omega_eff - s.omega_eff).abs() < 1e-9 * s.omega_eff);
        assert!((bare.g - s.g).abs() < 1e-12 * s.g);
    }

    #[test]
    fn summary_in_si() {
        let e = Pipeline::new(&small()).unwrap().evaluate();
        let s = &e.summary;
        assert!((s.tau0 - PI / (2.0 * PI * 1.7e3)).abs() < 1e-15);
        assert!((s.n0 - 2.0e21).abs() < 0.05 * 2.0e21);
        assert!((s.omega_gap / (2.0 * PI) - 0.2e6).abs() < 0.02e6);
        assert!(s.regime_ok && s.valid);
        assert_eq!(s.fidelity, 1.0 - s.g);
        assert!(e.warnings.is_empty(), "{:?}", e.warnings);
        assert_eq!(s.modes, 60);
    }

    #[test]
    fn truncation_keeps_prefix() {
        let p = Pipeline::new(&small()).unwrap();
        let t = p.truncated(10);
        assert_eq!(t.couplings.records.len(), 10);
        assert_eq!(t.couplings.records[..], p.couplings.records[..10]);
    }

    #[test]
    fn oracle_problem_from_lowest_modes() {
        let p = Pipeline::new(&small()).unwrap();
        let o = p.oracle_config(2, 1.0, 4).unwrap();
        assert_eq!(o.modes.len(), 2);
        assert_eq!((o.modes[0].index.j, o.modes[1].index.j), (1, 2));
        let largest = o.modes.iter().map(|m| m.alpha_x.abs().max(m.alpha_y.abs()).max(m.alpha_z.abs())).fold(0.0, f64::max);
        assert!((largest - 1.0).abs() < 1e-15);
        assert!(p.oracle_config(4, 1.0, 4).is_err());
        assert!(p.oracle_config(2, 1.0, 100).is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = small();
        c.tweezer.trap_frequency = 0.0;
        assert!(matches!(Pipeline::new(&c), Err(crate::Error::Config(_))));
    }
}
