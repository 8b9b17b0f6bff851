//! Effective Rabi frequency and per-mode couplings α_x, α_y (drive) and α_z
//! (interspecies collisions).
//!
//! The integrands are weighted by the tweezer ground state, so the radial
//! integration runs over r ∈ [0, 8 a_a] where φ_b and u ± v are smooth. The
//! drive standing wave cos(kz) and the mode's Y_ℓ0 are integrated over cos θ
//! with a Gauss–Legendre rule whose order is fixed once per integral by
//! doubling until the angular moment at the outer radius is stable.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condensate::TfProfile;
use crate::config::DriveStrength;
use crate::error::NumericsError;
use crate::modes::{spherical_harmonic, Mode, ModeIndex};
use crate::quadrature::{integrate_composite, GaussLegendre, Integral};
use crate::special::legendre;
use crate::tweezer::TweezerState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub tolerance: f64,
    /// Radial cutoff in units of a_a.
    pub extent: f64,
    /// Points per radial panel.
    pub radial_order: usize,
    pub max_panels: usize,
    pub min_angular_order: usize,
    pub max_angular_order: usize,
}

impl QuadratureSpec {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            extent: 8.0,
            radial_order: 16,
            max_panels: 1 << 14,
            min_angular_order: 8,
            max_angular_order: 4096,
        }
    }
}

/// Quadrature over the tweezer region for a fixed condensate, tweezer and
/// drive wave number.
pub struct OverlapEngine<'a> {
    pub profile: &'a TfProfile,
    pub tweezer: &'a TweezerState,
    pub wave_number: f64,
    pub spec: QuadratureSpec,
    radial_rule: GaussLegendre,
    r_max: f64,
}

impl<'a> OverlapEngine<'a> {
    pub fn new(profile: &'a TfProfile, tweezer: &'a TweezerState, wave_number: f64, spec: QuadratureSpec) -> Self {
        // never sample within 10⁻³R of the surface, where u − v diverges
        let r_max = (spec.extent * tweezer.oscillator_length).min((1.0 - 1e-3) * profile.radius);
        Self { profile, tweezer, wave_number, spec, radial_rule: GaussLegendre::new(spec.radial_order), r_max }
    }

    pub fn outer_radius(&self) -> f64 {
        self.r_max
    }

    /// Gauss–Legendre rule adequate for ∫₋₁¹ cos(k r u) P_ℓ(u) du for all r
    /// up to the outer radius.
    fn angular_rule(&self, l: u32) -> Result<GaussLegendre, f64> {
        let probe = |rule: &GaussLegendre, x: f64| rule.integrate(-1.0, 1.0, |u| (x * u).cos() * legendre(l, u));
        let xs = [self.wave_number * self.r_max, 0.5 * self.wave_number * self.r_max];
        let mut order = self.spec.min_angular_order.max(l as usize + 2);
        let mut rule = GaussLegendre::new(order);
        let mut change = f64::INFINITY;
        while order < self.spec.max_angular_order {
            let next = GaussLegendre::new(order * 2);
            change = xs.iter().map(|&x| (probe(&next, x) - probe(&rule, x)).abs()).fold(0.0, f64::max);
            // the moment is bounded by ∫|P_ℓ| ≤ 2
            if change <= self.spec.tolerance * 1e-3 {
                return Ok(rule);
            }
            order *= 2;
            rule = next;
        }
        Err(change)
    }

    /// ∫ cos(kz) φ_a(r) F(r) A(θ) d³r with A = Y_ℓ0 (or A = 1 when
    /// `harmonic` is false, which requires ℓ = 0).
    pub fn drive_integral(&self, l: u32, harmonic: bool, radial: impl Fn(f64) -> f64) -> Result<Integral, f64> {
        if l % 2 == 1 {
            return Ok(Integral { value: 0.0, magnitude: 0.0, achieved: 0.0, panels: 0 });
        }
        let norm = if harmonic { spherical_harmonic(l, 1.0) } else { 1.0 };
        let rule = self.angular_rule(l)?;
        let k = self.wave_number;
        integrate_composite(&self.radial_rule, 0.0, self.r_max, self.spec.tolerance, self.spec.max_panels, |r| {
            let moment = if k == 0.0 {
                if l == 0 { 2.0 } else { 0.0 }
            } else {
                rule.integrate(-1.0, 1.0, |u| (k * r * u).cos() * legendre(l, u))
            };
            2.0 * PI * r * r * self.tweezer.wavefunction(r) * radial(r) * norm * moment
        })
    }

    /// ∫ |φ_a|² F(r) Y_ℓ0 d³r; zero for ℓ ≠ 0 by angular orthogonality.
    pub fn density_integral(&self, l: u32, radial: impl Fn(f64) -> f64) -> Result<Integral, f64> {
        if l != 0 {
            return Ok(Integral { value: 0.0, magnitude: 0.0, achieved: 0.0, panels: 0 });
        }
        let y00 = spherical_harmonic(0, 1.0);
        integrate_composite(&self.radial_rule, 0.0, self.r_max, self.spec.tolerance, self.spec.max_panels, |r| {
            4.0 * PI * r * r * self.tweezer.wavefunction(r).powi(2) * radial(r) * y00
        })
    }

    /// Ω_eff/Ω₀ = ∫ cos(kz) φ_a φ_b d³r.
    pub fn rabi_overlap(&self) -> Result<Integral, NumericsError> {
        self.drive_integral(0, false, |r| self.profile.wavefunction(r))
            .map_err(|achieved| NumericsError::Convergence { quantity: "Omega_eff", mode: None, achieved })
    }

    /// (∫cos(kz) φ_a (u−v), ∫cos(kz) φ_a (u+v)).
    pub fn laser_overlaps(&self, mode: &Mode) -> Result<(Integral, Integral), NumericsError> {
        let l = mode.index.l;
        let p = self.profile;
        let err = |quantity| move |achieved| NumericsError::Convergence { quantity, mode: Some(mode.index), achieved };
        let minus = self.drive_integral(l, true, |r| mode.f_minus_radial(p, r)).map_err(err("alpha_x"))?;
        let plus = self.drive_integral(l, true, |r| mode.f_plus_radial(p, r)).map_err(err("alpha_y"))?;
        Ok((minus, plus))
    }

    /// ∫ |φ_a|² φ_b (u−v) d³r; φ_b(u−v) = δn is evaluated directly.
    pub fn collision_overlap(&self, mode: &Mode) -> Result<Integral, NumericsError> {
        let p = self.profile;
        self.density_integral(mode.index.l, |r| mode.radial_density(p, r)).map_err(|achieved| {
            NumericsError::Convergence { quantity: "alpha_z", mode: Some(mode.index), achieved }
        })
    }
}

/// Couplings of one mode. The overlaps are stored so that α_x, α_y can be
/// rescaled with Ω₀ and α_z with g_ab without redoing quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub index: ModeIndex,
    pub frequency: f64,
    pub occupation: f64,
    /// ∫ cos(kz) φ_a (u − v).
    pub laser_minus: f64,
    /// ∫ cos(kz) φ_a (u + v).
    pub laser_plus: f64,
    /// ∫ |φ_a|² φ_b (u − v).
    pub collision: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
    pub achieved: f64,
}

impl CouplingRecord {
    fn rescale(&mut self, rabi_bare: f64, g_ab: f64) {
        self.alpha_x = 0.5 * rabi_bare * self.laser_minus;
        self.alpha_y = 0.5 * rabi_bare * self.laser_plus;
        self.alpha_z = 0.5 * g_ab * self.collision;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub rabi_bare: f64,
    pub rabi_eff: f64,
    /// Ω_eff/Ω₀.
    pub rabi_overlap: f64,
    pub g_ab: f64,
    pub records: Vec<CouplingRecord>,
    /// Worst relative change at the final refinement over all integrals.
    pub achieved_tolerance: f64,
}

impl CouplingSet {
    /// Same overlaps with a new bare Rabi frequency.
    pub fn with_bare_rabi(&self, rabi_bare: f64) -> Self {
        let mut out = self.clone();
        out.rabi_bare = rabi_bare;
        out.rabi_eff = rabi_bare * self.rabi_overlap;
        out.records.iter_mut().for_each(|r| r.rescale(rabi_bare, self.g_ab));
        out
    }

    pub fn with_effective_rabi(&self, rabi_eff: f64) -> Self {
        self.with_bare_rabi(rabi_eff / self.rabi_overlap)
    }

    /// Same overlaps with a new interspecies coupling (internal units).
    pub fn with_interspecies(&self, g_ab: f64) -> Self {
        let mut out = self.clone();
        out.g_ab = g_ab;
        out.records.iter_mut().for_each(|r| r.rescale(self.rabi_bare, g_ab));
        out
    }

    /// Same couplings with new thermal occupations.
    pub fn with_occupations(&self, occupation: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.records.iter_mut().for_each(|r| r.occupation = occupation(r.frequency));
        out
    }

    pub fn get(&self, index: ModeIndex) -> Option<&CouplingRecord> {
        self.records.iter().find(|r| r.index == index)
    }
}

/// Couplings for every mode of `basis`, in basis order.
pub fn build_couplings(
    engine: &OverlapEngine<'_>,
    basis: &[Mode],
    drive: DriveStrength,
    g_ab: f64,
) -> Result<CouplingSet, NumericsError> {
    let overlap = engine.rabi_overlap()?;
    let rabi_overlap = overlap.value;
    let (rabi_bare, rabi_eff) = match drive {
        DriveStrength::Bare(w0) => (w0, w0 * rabi_overlap),
        DriveStrength::Effective(w) => (w / rabi_overlap, w),
    };
    let records = basis
        .par_iter()
        .map(|mode| {
            let (minus, plus) = engine.laser_overlaps(mode)?;
            let coll = engine.collision_overlap(mode)?;
            let mut rec = CouplingRecord {
                index: mode.index,
                frequency: mode.frequency,
                occupation: mode.occupation,
                laser_minus: minus.value,
                laser_plus: plus.value,
                collision: coll.value,
                alpha_x: 0.0,
                alpha_y: 0.0,
                alpha_z: 0.0,
                achieved: minus.achieved.max(plus.achieved).max(coll.achieved),
            };
            rec.rescale(rabi_bare, g_ab);
            Ok(rec)
        })
        .collect::<Result<Vec<_>, NumericsError>>()?;
    let achieved_tolerance = records.iter().map(|r| r.achieved).fold(overlap.achieved, f64::max);
    Ok(CouplingSet { rabi_bare, rabi_eff, rabi_overlap, g_ab, records, achieved_tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condensate::solve_tf_model;
    use crate::config::{to_internal, Config, InternalModel};
    use crate::modes::build_basis;
    use crate::tweezer::ground_state;

    struct Fixture {
        model: InternalModel,
        profile: TfProfile,
        tweezer: TweezerState,
    }

    fn fixture() -> Fixture {
        let model = to_internal(&Config::baseline());
        let profile = solve_tf_model(&model).0;
        let tweezer = ground_state(model.tweezer_frequency);
        Fixture { model, profile, tweezer }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// ∫φ_a d³r = 2^{3/2} π^{3/4} a_a^{3/2}.
    fn gaussian_integral(a: f64) -> f64 {
        2f64.powf(1.5) * PI.powf(0.75) * a.powf(1.5)
    }

    #[test]
    fn rabi_overlap_matches_point_tweezer() {
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        let v = e.rabi_overlap().unwrap().value;
        let point = f.profile.central_density.sqrt() * gaussian_integral(f.tweezer.oscillator_length);
        assert!(rel(v, point) < 0.02, "{v} vs {point}");
        assert!(rel(v, 0.34) < 0.02, "{v}");
        assert!(v > 0.0);
    }

    #[test]
    fn uniform_condensate_at_zero_k_is_closed_form() {
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, 0.0, QuadratureSpec::default());
        let s = f.profile.central_density.sqrt();
        let v = e.drive_integral(0, false, |_| s).unwrap().value;
        // the 8 a_a cutoff drops a tail of relative size ~e^{-32}
        assert!(rel(v, s * gaussian_integral(f.tweezer.oscillator_length)) < 1e-10);
    }

    #[test]
    fn fast_standing_wave_suppresses_overlap() {
        let f = fixture();
        let k = 50.0 / f.tweezer.oscillator_length;
        let e0 = OverlapEngine::new(&f.profile, &f.tweezer, 0.0, QuadratureSpec::default());
        let ek = OverlapEngine::new(&f.profile, &f.tweezer, k, QuadratureSpec::default());
        let v0 = e0.rabi_overlap().unwrap().value;
        let vk = ek.rabi_overlap().unwrap().value;
        assert!(vk.abs() < 1e-6 * v0, "{vk} vs {v0}");
    }

    #[test]
    fn angular_moment_matches_spherical_bessel() {
        // ∫₋₁¹ cos(xu) P_ℓ(u) du = 2(−1)^{ℓ/2} j_ℓ(x) for even ℓ
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, 30.0, QuadratureSpec::default());
        for l in [0u32, 2] {
            let rule = e.angular_rule(l).unwrap();
            for &x in &[0.01, 0.3, 1.0, 2.5] {
                let m = rule.integrate(-1.0, 1.0, |u| (x * u).cos() * legendre(l, u));
                let j = if l == 0 {
                    x.sin() / x
                } else if x < 0.1 {
                    // the closed form cancels catastrophically here
                    x * x / 15.0 - x.powi(4) / 210.0 + x.powi(6) / 7560.0
                } else {
                    (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x)
                };
                let want = 2.0 * if l == 0 { 1.0 } else { -1.0 } * j;
                assert!((m - want).abs() < 1e-12, "l={l} x={x}: {m} vs {want}");
            }
        }
    }

    #[test]
    fn odd_modes_do_not_couple() {
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        for j in 0..4 {
            let m = Mode::new(ModeIndex::new(j, 1), &f.profile, 0.0);
            let (a, b) = e.laser_overlaps(&m).unwrap();
            assert_eq!((a.value, b.value), (0.0, 0.0));
            assert_eq!(e.collision_overlap(&m).unwrap().value, 0.0);
        }
        let q = Mode::new(ModeIndex::new(2, 2), &f.profile, 0.0);
        assert_eq!(e.collision_overlap(&q).unwrap().value, 0.0);
    }

    #[test]
    fn s_wave_coupling_at_zero_k_against_fixed_grid() {
        // Independent route: a single 400-point Gauss–Legendre rule on
        // [0, 8 a_a] with the angular integral done analytically (4π Y₀₀).
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, 0.0, QuadratureSpec::default());
        let rule = GaussLegendre::new(400);
        let y00 = spherical_harmonic(0, 1.0);
        for j in [1, 5, 40, 300] {
            let m = Mode::new(ModeIndex::new(j, 0), &f.profile, 0.0);
            let (minus, _) = e.laser_overlaps(&m).unwrap();
            let grid = rule.integrate(0.0, 8.0 * f.tweezer.oscillator_length, |r| {
                4.0 * PI * r * r * f.tweezer.wavefunction(r) * m.f_minus_radial(&f.profile, r) * y00
            });
            assert!(rel(minus.value, grid) < 1e-8, "j={j}: {} vs {grid}", minus.value);
        }
    }

    #[test]
    fn point_tweezer_limits_for_low_modes() {
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        let a = f.tweezer.oscillator_length;
        let k = f.model.wave_number;
        for j in 1..=3 {
            let m = Mode::new(ModeIndex::new(j, 0), &f.profile, 0.0);
            let f0 = m.f_minus(&f.profile, 0.0, 1.0).unwrap();
            let (minus, _) = e.laser_overlaps(&m).unwrap();
            let point = f0 * gaussian_integral(a) * (-0.5 * k * k * a * a).exp();
            assert!(rel(minus.value, point) < 0.01);
            let coll = e.collision_overlap(&m).unwrap().value;
            let point = f.profile.central_density.sqrt() * f0;
            assert!(rel(coll, point) < 0.01);
        }
    }

    #[test]
    fn tweezer_normalisation_through_engine() {
        let f = fixture();
        let e = OverlapEngine::new(&f.profile, &f.tweezer, 0.0, QuadratureSpec::default());
        let y00 = spherical_harmonic(0, 1.0);
        let v = e.density_integral(0, |_| 1.0 / y00).unwrap().value;
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tolerance_refinement_is_consistent() {
        let f = fixture();
        let basis = build_basis(&f.model.basis, &f.profile, 0.0);
        let basis = &basis[..40];
        for t in [1e-6, 1e-8] {
            let coarse = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::with_tolerance(t));
            let fine = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::with_tolerance(t / 10.0));
            let a = build_couplings(&coarse, basis, f.model.drive, f.model.g_ab).unwrap();
            let b = build_couplings(&fine, basis, f.model.drive, f.model.g_ab).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                assert!(rel(x.alpha_x, y.alpha_x) < 10.0 * t);
                assert!(rel(x.alpha_y, y.alpha_y) < 10.0 * t);
                assert!(rel(x.alpha_z, y.alpha_z) < 10.0 * t);
            }
        }
    }

    #[test]
    fn linear_in_drive_and_collision_strength() {
        let f = fixture();
        let basis = build_basis(&f.model.basis, &f.profile, 0.0);
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        let set = build_couplings(&e, &basis[..20], DriveStrength::Bare(10.0), f.model.g_b).unwrap();
        let doubled = build_couplings(&e, &basis[..20], DriveStrength::Bare(20.0), 3.0 * f.model.g_b).unwrap();
        for (a, b) in set.records.iter().zip(&doubled.records) {
            assert!(rel(b.alpha_x, 2.0 * a.alpha_x) < 1e-12);
            assert!(rel(b.alpha_y, 2.0 * a.alpha_y) < 1e-12);
            assert!(rel(b.alpha_z, 3.0 * a.alpha_z) < 1e-12);
        }
        let zero = set.with_interspecies(0.0);
        assert!(zero.records.iter().all(|r| r.alpha_z == 0.0));
        let back = set.with_bare_rabi(20.0).with_interspecies(3.0 * f.model.g_b);
        for (a, b) in back.records.iter().zip(&doubled.records) {
            assert!(rel(a.alpha_x, b.alpha_x) < 1e-14 && rel(a.alpha_z, b.alpha_z) < 1e-14);
        }
    }

    #[test]
    fn record_order_is_independent_of_basis_order() {
        let f = fixture();
        let mut cfg = f.model.basis.clone();
        cfg.j_max = 30;
        cfg.angular_momenta = vec![0, 2];
        let basis = build_basis(&cfg, &f.profile, 0.0);
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        let fwd = build_couplings(&e, &basis, f.model.drive, f.model.g_ab).unwrap();
        let mut rev_basis = basis.clone();
        rev_basis.reverse();
        let rev = build_couplings(&e, &rev_basis, f.model.drive, f.model.g_ab).unwrap();
        for r in &fwd.records {
            assert_eq!(Some(r), rev.get(r.index));
        }
    }

    #[test]
    fn full_basis_is_finite() {
        let f = fixture();
        let mut cfg = f.model.basis.clone();
        cfg.angular_momenta = vec![0, 2];
        let basis = build_basis(&cfg, &f.profile, 0.0);
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, QuadratureSpec::default());
        let set = build_couplings(&e, &basis, f.model.drive, f.model.g_ab).unwrap();
        assert_eq!(set.records.len(), 1000);
        assert!(set.records.iter().all(|r| r.alpha_x.is_finite() && r.alpha_y.is_finite() && r.alpha_z.is_finite()));
        assert!(set.achieved_tolerance <= 1e-8);
        // quadrupole modes couple to the drive only through the curvature of cos(kz)
        let q = set.get(ModeIndex::new(1, 2)).unwrap();
        let s = set.get(ModeIndex::new(1, 0)).unwrap();
        assert!(q.alpha_y != 0.0 && q.alpha_y.abs() < 1e-2 * s.alpha_y.abs());
    }

    #[test]
    fn convergence_failure_names_the_mode() {
        let f = fixture();
        let spec = QuadratureSpec { max_panels: 2, tolerance: 1e-14, ..QuadratureSpec::default() };
        let e = OverlapEngine::new(&f.profile, &f.tweezer, f.model.wave_number, spec);
        let m = Mode::new(ModeIndex::new(400, 0), &f.profile, 0.0);
        match e.laser_overlaps(&m) {
            Err(NumericsError::Convergence { mode: Some(ix), .. }) => assert_eq!(ix, m.index),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
