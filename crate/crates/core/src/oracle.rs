//! Exact dynamics of the driven two-level atom coupled to a handful of
//! Bogoliubov modes on a truncated number-state space, used to validate the
//! second-order fidelity formula.
//!
//! ```text
//! H = (Ω_eff/2)σ_x + Σ ω_q b_q†b_q
//!     + ½ Σ [(α_x σ_x + iα_y σ_y + 2α_z σ_z) b_q + h.c.]
//! ```
//!
//! with every α multiplied by a scale λ. The spin basis is (|1⟩, |0⟩) with the
//! standard Pauli matrices. The plateau Hamiltonian is time independent, so
//! the propagator is obtained exactly from its eigendecomposition.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingRecord, CouplingSet};
use crate::error::NumericsError;
use crate::fidelity::{g_function, transfer_time};
use crate::modes::ModeIndex;

type C64 = Complex<f64>;

pub const DIMENSION_CAP: usize = 4096;
pub const MAX_MODES: usize = 3;
/// Cumulative weight kept from each mode's thermal distribution.
pub const THERMAL_WEIGHT: f64 = 0.999;
/// Default largest |α| (units of ω_b) at λ = 1 when couplings are taken from
/// a physical mode set and rescaled: strong enough that the fourth-order
/// discrepancy stays well above round-off at λ = 0.01.
pub const DEFAULT_STRENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMode {
    pub index: ModeIndex,
    pub frequency: f64,
    pub occupation: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
}

impl From<&CouplingRecord> for OracleMode {
    fn from(r: &CouplingRecord) -> Self {
        Self {
            index: r.index,
            frequency: r.frequency,
            occupation: r.occupation,
            alpha_x: r.alpha_x,
            alpha_y: r.alpha_y,
            alpha_z: r.alpha_z,
        }
    }
}

impl OracleMode {
    fn scaled(&self, lambda: f64) -> CouplingRecord {
        CouplingRecord {
            index: self.index,
            frequency: self.frequency,
            occupation: self.occupation,
            laser_minus: 0.0,
            laser_plus: 0.0,
            collision: 0.0,
            alpha_x: lambda * self.alpha_x,
            alpha_y: lambda * self.alpha_y,
            alpha_z: lambda * self.alpha_z,
            achieved: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub modes: Vec<OracleMode>,
    /// Highest occupation kept per mode.
    pub n_max: usize,
    pub rabi_eff: f64,
    pub theta: f64,
}

impl OracleConfig {
    pub fn new(modes: Vec<OracleMode>, rabi_eff: f64, theta: f64) -> Self {
        Self { modes, n_max: 3, rabi_eff, theta }
    }

    pub fn dimension(&self) -> usize {
        state_dimension(self.modes.len(), self.n_max)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.modes.is_empty() || self.modes.len() > MAX_MODES {
            return Err(NumericsError::Invalid(format!(
                "oracle takes 1 to {MAX_MODES} modes, got {}",
                self.modes.len()
            )));
        }
        let dim = self.dimension();
        if dim > DIMENSION_CAP {
            return Err(NumericsError::DimensionCap { dim, cap: DIMENSION_CAP });
        }
        Ok(())
    }
}

fn state_dimension(modes: usize, n_max: usize) -> usize {
    (0..modes).try_fold(2usize, |d, _| d.checked_mul(n_max + 1)).unwrap_or(usize::MAX)
}

/// H on the truncated space; index = spin·(n_max+1)^M + Σ n_k (n_max+1)^{M−1−k}.
pub fn build_hamiltonian(
    modes: &[OracleMode],
    n_max: usize,
    rabi_eff: f64,
    lambda: f64,
) -> Result<DMatrix<C64>, NumericsError> {
    let dim = state_dimension(modes.len(), n_max);
    if dim > DIMENSION_CAP {
        return Err(NumericsError::DimensionCap { dim, cap: DIMENSION_CAP });
    }
    let d = n_max + 1;
    let bath = dim / 2;
    let stride = |k: usize| d.pow((modes.len() - 1 - k) as u32);
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..2 {
        for b in 0..bath {
            let i = s * bath + b;
            let mut energy = 0.0;
            for (k, m) in modes.iter().enumerate() {
                energy += m.frequency * ((b / stride(k)) % d) as f64;
            }
            h[(i, i)] = C64::new(energy, 0.0);
            h[(i, (1 - s) * bath + b)] = C64::new(0.5 * rabi_eff, 0.0);
        }
    }
    for (k, m) in modes.iter().enumerate() {
        // α_x σ_x + iα_y σ_y + 2α_z σ_z is real in this basis
        let spin = [
            [2.0 * m.alpha_z, m.alpha_x + m.alpha_y],
            [m.alpha_x - m.alpha_y, -2.0 * m.alpha_z],
        ];
        let st = stride(k);
        for s in 0..2 {
            for b in 0..bath {
                let n = (b / st) % d;
                if n == 0 {
                    continue;
                }
                let col = s * bath + b;
                for (t, row_spin) in spin.iter().enumerate() {
                    let v = 0.5 * lambda * row_spin[s] * (n as f64).sqrt();
                    let row = t * bath + b - st;
                    h[(row, col)] += C64::new(v, 0.0);
                    h[(col, row)] += C64::new(v, 0.0);
                }
            }
        }
    }
    Ok(h)
}

/// Product of per-mode number distributions, each truncated at cumulative
/// weight ≥ [`THERMAL_WEIGHT`] and renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct BathState {
    /// (weight, occupation per mode).
    pub components: Vec<(f64, Vec<usize>)>,
}

impl BathState {
    pub fn vacuum(modes: usize) -> Self {
        Self { components: vec![(1.0, vec![0; modes])] }
    }

    pub fn thermal(occupations: &[f64], n_max: usize) -> Result<Self, NumericsError> {
        let mut per_mode = Vec::new();
        for &nbar in occupations {
            if nbar <= 0.0 {
                per_mode.push(vec![1.0]);
                continue;
            }
            let q = nbar / (nbar + 1.0);
            let mut weights = Vec::new();
            let mut total = 0.0;
            while total < THERMAL_WEIGHT {
                let p = q.powi(weights.len() as i32) / (nbar + 1.0);
                weights.push(p);
                total += p;
            }
            // the highest kept level must still be able to absorb a phonon
            if weights.len() > n_max {
                return Err(NumericsError::Invalid(format!(
                    "n_max = {n_max} too small for a thermal mode with occupation {nbar} (needs {})",
                    weights.len()
                )));
            }
            weights.iter_mut().for_each(|w| *w /= total);
            per_mode.push(weights);
        }
        let mut components = vec![(1.0, Vec::new())];
        for weights in &per_mode {
            components = components
                .into_iter()
                .flat_map(|(w, occ)| {
                    weights.iter().enumerate().map(move |(n, p)| {
                        let mut o: Vec<usize> = occ.clone();
                        o.push(n);
                        (w * p, o)
                    })
                })
                .collect();
        }
        Ok(Self { components })
    }
}

/// Spectral propagator of a time-independent Hamiltonian.
pub struct Propagator {
    eigen: SymmetricEigen<C64, nalgebra::Dyn>,
}

impl Propagator {
    pub fn new(h: DMatrix<C64>) -> Self {
        Self { eigen: SymmetricEigen::new(h) }
    }

    /// e^{−iHτ}ψ.
    pub fn evolve(&self, psi: &DVector<C64>, tau: f64) -> DVector<C64> {
        let v = &self.eigen.eigenvectors;
        let mut c = v.ad_mul(psi);
        for (ci, &e) in c.iter_mut().zip(self.eigen.eigenvalues.iter()) {
            *ci *= C64::from_polar(1.0, -e * tau);
        }
        v * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub fidelity: f64,
    /// Largest |‖ψ(τ)‖² − 1| over the bath components.
    pub norm_error: f64,
}

/// P = Σ_b w_b Σ_n |⟨θ, n|e^{−iHτ}|0, b⟩|² with ⟨θ| = cosθ⟨0| + i sinθ⟨1|.
pub fn evolve_and_measure(
    propagator: &Propagator,
    n_max: usize,
    theta: f64,
    tau: f64,
    bath: &BathState,
) -> Measurement {
    let dim = propagator.eigen.eigenvalues.len();
    let half = dim / 2;
    let d = n_max + 1;
    let mut fidelity = 0.0;
    let mut norm_error: f64 = 0.0;
    for (w, occ) in &bath.components {
        let b = occ.iter().fold(0, |acc, &n| acc * d + n);
        let mut psi0 = DVector::<C64>::zeros(dim);
        psi0[half + b] = C64::new(1.0, 0.0);
        let psi = propagator.evolve(&psi0, tau);
        let mut p = 0.0;
        for n in 0..half {
            // amplitude on cosθ|0⟩ − i sinθ|1⟩
            let amp = psi[half + n] * theta.cos() + psi[n] * C64::new(0.0, theta.sin());
            p += amp.norm_sqr();
        }
        fidelity += w * p;
        norm_error = norm_error.max((psi.norm_squared() - 1.0).abs());
    }
    Measurement { fidelity, norm_error }
}

/// Exact and perturbative fidelity at one coupling scale, τ = τ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub lambda: f64,
    pub exact: f64,
    pub perturbative: f64,
    pub g: f64,
    /// (1 − P_exact) − g.
    pub discrepancy: f64,
    pub norm_error: f64,
}

impl OracleRow {
    pub fn relative_discrepancy(&self) -> f64 {
        self.discrepancy.abs() / self.g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub config: OracleConfig,
    pub tau: f64,
    pub dimension: usize,
    pub rows: Vec<OracleRow>,
    /// Least-squares slope of ln|discrepancy| against ln λ.
    pub fitted_order: f64,
    /// Discrepancy falls faster than λ².
    pub converged: bool,
}

pub fn oracle_point(config: &OracleConfig, lambda: f64) -> Result<OracleRow, NumericsError> {
    config.validate()?;
    let tau = transfer_time(config.theta, config.rabi_eff);
    let h = build_hamiltonian(&config.modes, config.n_max, config.rabi_eff, lambda)?;
    let occupations: Vec<f64> = config.modes.iter().map(|m| m.occupation).collect();
    let bath = BathState::thermal(&occupations, config.n_max)?;
    let m = evolve_and_measure(&Propagator::new(h), config.n_max, config.theta, tau, &bath);
    let set = CouplingSet {
        rabi_bare: config.rabi_eff,
        rabi_eff: config.rabi_eff,
        rabi_overlap: 1.0,
        g_ab: 0.0,
        records: config.modes.iter().map(|md| md.scaled(lambda)).collect(),
        achieved_tolerance: 0.0,
    };
    let g = g_function(config.theta, &set, f64::INFINITY).g;
    Ok(OracleRow {
        lambda,
        exact: m.fidelity,
        perturbative: 1.0 - g,
        g,
        discrepancy: (1.0 - m.fidelity) - g,
        norm_error: m.norm_error,
    })
}

/// Runs the λ grid (independent points in parallel) and fits the order of
/// the exact-minus-perturbative discrepancy.
pub fn convergence_check(config: &OracleConfig, lambdas: &[f64]) -> Result<OracleReport, NumericsError> {
    config.validate()?;
    if lambdas.len() < 2 || lambdas.iter().any(|&l| l <= 0.0 || l > 1.0) {
        return Err(NumericsError::Invalid("λ grid needs at least two values in (0, 1]".into()));
    }
    let (lo, hi) = lambdas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    if hi / lo < 10.0 {
        return Err(NumericsError::Invalid("λ grid must span at least one decade".into()));
    }
    let rows = lambdas.par_iter().map(|&l| oracle_point(config, l)).collect::<Result<Vec<_>, _>>()?;
    let fitted_order = fit_slope(rows.iter().map(|r| (r.lambda.ln(), r.discrepancy.abs().ln())));
    if !fitted_order.is_finite() {
        return Err(NumericsError::Invalid("discrepancy vanished; cannot fit its order".into()));
    }
    Ok(OracleReport {
        config: config.clone(),
        tau: transfer_time(config.theta, config.rabi_eff),
        dimension: config.dimension(),
        rows,
        fitted_order,
        converged: fitted_order > 2.0,
    })
}

fn fit_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<_> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
