//! End-to-end checks across module boundaries.

use std::f64::consts::PI;

use nalgebra::Complex;

use tweezer_core::config::{Config, DriveStrength};
use tweezer_core::fidelity::quench_residual;
use tweezer_core::oracle::{oracle_point, OracleConfig};
use tweezer_core::pipeline::Pipeline;
use tweezer_core::sweep::{convergence_vs_basis, optimize_gab, run_sweep, Grid, SweepParameter, SweepRequest, OPTIMIZER_TOLERANCE};
use tweezer_core::table::{read_sweep_csv, write_sweep_csv};

type C = Complex<f64>;

fn reduced(j_max: u32) -> Config {
    let mut c = Config::baseline();
    c.basis.j_max = j_max;
    c
}

#[test]
fn noise_floor_bounds_g_at_half_pi() {
    let base = Pipeline::new(&reduced(120)).unwrap();
    for ratio in [0.0, 0.5, 1.0, 1.5, 3.0] {
        for t in [0.0, 100e-9, 300e-9] {
            let f = base.with_interspecies_ratio(ratio).with_temperature(t).evaluate().fidelity;
            assert!(f.g_min <= f.g * (1.0 + 1e-12), "ratio {ratio}, T {t}: g_min {} > g {}", f.g_min, f.g);
            assert!(f.g_min > 0.0);
        }
    }
}

#[test]
fn optimizer_agrees_with_dense_grid() {
    let cfg = reduced(100);
    let pipeline = Pipeline::new(&cfg).unwrap();
    let opt = optimize_gab(&pipeline, (0.0, 4.0), OPTIMIZER_TOLERANCE).unwrap();
    let request = SweepRequest::new(SweepParameter::GabRatio, Grid::Linear { start: 0.0, stop: 4.0, count: 801 }, cfg);
    let dense = run_sweep(&request).unwrap();
    let best = dense.argmax().unwrap();
    assert!((opt.g_ab_over_g_b - best.value).abs() <= 4.0 * OPTIMIZER_TOLERANCE + 0.005, "{} vs {}", opt.g_ab_over_g_b, best.value);
    assert!(opt.fidelity >= best.fidelity - 1e-12);
    assert!(opt.refined && !opt.at_boundary);
}

#[test]
fn g_is_quadratic_in_interspecies_coupling() {
    // α_z enters linearly, so g(g_ab) is an exact parabola
    let p = Pipeline::new(&reduced(80)).unwrap();
    let g = |r: f64| p.with_interspecies_ratio(r).evaluate().fidelity.g;
    let (g0, g1, g2, g3) = (g(0.0), g(1.0), g(2.0), g(3.0));
    let third_difference = g3 - 3.0 * g2 + 3.0 * g1 - g0;
    assert!(third_difference.abs() < 1e-12 * g0, "{third_difference:e}");
}

#[test]
fn collision_sensitive_part_converges_but_floor_does_not() {
    // Splits g into the laser-only floor g_min and the rest, which is what
    // the interspecies collisions can cancel.
    let p = Pipeline::new(&Config::baseline()).unwrap().with_interspecies_ratio(0.0);
    let split = |j: u32| {
        let f = p.truncated(j).evaluate().fidelity;
        (f.g - f.g_min, f.g_min)
    };
    let (s250, f250) = split(250);
    let (s300, _) = split(300);
    let (s400, _) = split(400);
    let (s500, f500) = split(500);
    assert!((s500 - s250) / s500 < 0.1, "{s250:e} -> {s500:e}");
    assert!(s500 - s400 < 2.0 * (s300 - s250) && s500 > s400 && s400 > s300);
    // the floor keeps growing roughly linearly with the cutoff
    let growth = f500 / f250;
    assert!((2.0..3.0).contains(&growth), "{growth}");
    let rows = convergence_vs_basis(&Config::baseline(), &[250, 500]).unwrap();
    assert!(!rows[1].converged);
}

#[test]
fn matched_coupling_removes_collision_sensitive_noise() {
    let p = Pipeline::new(&Config::baseline()).unwrap();
    let part = |r: f64| {
        let f = p.with_interspecies_ratio(r).evaluate().fidelity;
        f.g - f.g_min
    };
    let ratio = part(1.0) / part(0.0);
    assert!(ratio < 0.01, "{ratio}");
}

#[test]
fn lowest_modes_are_quenched_at_matched_coupling() {
    let p = Pipeline::new(&reduced(40)).unwrap();
    let set = &p.couplings;
    for rec in set.records.iter().take(5) {
        let q = quench_residual(rec, set.rabi_eff);
        assert!(q.ratio < 0.1, "{}: ratio {}", rec.index, q.ratio);
    }
    let off = p.with_interspecies_ratio(0.0);
    let q = quench_residual(&off.couplings.records[0], off.couplings.rabi_eff);
    assert_eq!(q.ratio, 1.0);
}

/// Exact single-mode dynamics by RK4 in the (|1⟩, |0⟩) ⊗ Fock basis,
/// written out independently of the library propagator.
fn rk4_fidelity(omega: f64, rabi: f64, ax: f64, ay: f64, az: f64, n_max: usize, theta: f64, start: usize) -> f64 {
    let d = n_max + 1;
    let idx = |s: usize, n: usize| s * d + n;
    let apply = |psi: &[C]| -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); 2 * d];
        // spin coupling S = α_xσ_x + iα_yσ_y + 2α_zσ_z with σ's in (|1⟩, |0⟩)
        let s = [[2.0 * az, ax + ay], [ax - ay, -2.0 * az]];
        for sp in 0..2 {
            for n in 0..d {
                let v = psi[idx(sp, n)];
                out[idx(sp, n)] += v * (omega * n as f64);
                out[idx(1 - sp, n)] += v * (0.5 * rabi);
                for t in 0..2 {
                    // ½ S b: |sp, n⟩ → |t, n−1⟩
                    if n > 0 {
                        out[idx(t, n - 1)] += v * (0.5 * s[t][sp] * (n as f64).sqrt());
                    }
                    // ½ Sᵀ b†: |sp, n⟩ → |t, n+1⟩
                    if n + 1 < d {
                        out[idx(t, n + 1)] += v * (0.5 * s[sp][t] * ((n + 1) as f64).sqrt());
                    }
                }
            }
        }
        out.iter().map(|x| x * C::new(0.0, -1.0)).collect()
    };
    let tau = 2.0 * theta / rabi;
    let steps = 20_000;
    let h = tau / steps as f64;
    let mut psi = vec![C::new(0.0, 0.0); 2 * d];
    psi[idx(1, start)] = C::new(1.0, 0.0);
    for _ in 0..steps {
        let k1 = apply(&psi);
        let y: Vec<C> = psi.iter().zip(&k1).map(|(p, k)| p + k * (h / 2.0)).collect();
        let k2 = apply(&y);
        let y: Vec<C> = psi.iter().zip(&k2).map(|(p, k)| p + k * (h / 2.0)).collect();
        let k3 = apply(&y);
        let y: Vec<C> = psi.iter().zip(&k3).map(|(p, k)| p + k * h).collect();
        let k4 = apply(&y);
        for i in 0..psi.len() {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    (0..d)
        .map(|n| (psi[idx(1, n)] * theta.cos() + psi[idx(0, n)] * C::new(0.0, theta.sin())).norm_sqr())
        .sum()
}

#[test]
fn single_mode_oracle_matches_independent_integration() {
    let p = Pipeline::new(&reduced(10)).unwrap();
    let mut oracle: OracleConfig = p.oracle_config(1, 0.5, 8).unwrap();
    for theta in [PI / 2.0, PI / 3.0] {
        oracle.theta = theta;
        let row = oracle_point(&oracle, 0.2).unwrap();
        let m = &oracle.modes[0];
        let l = 0.2;
        let rk = rk4_fidelity(m.frequency, oracle.rabi_eff, l * m.alpha_x, l * m.alpha_y, l * m.alpha_z, 8, theta, 0);
        assert!((rk - row.exact).abs() < 1e-10, "theta {theta}: rk4 {rk} vs eigen {}", row.exact);
    }
}

#[test]
fn thermal_single_mode_matches_weighted_integration() {
    let mut cfg = reduced(10);
    cfg.condensate.temperature = 20e-9;
    let p = Pipeline::new(&cfg).unwrap();
    let oracle = p.oracle_config(1, 0.5, 10).unwrap();
    let m = oracle.modes[0];
    assert!(m.occupation > 0.1);
    let l = 0.1;
    let row = oracle_point(&oracle, l).unwrap();
    // Bose weights over the kept levels, renormalised
    let x = (1.0 + 1.0 / m.occupation).ln();
    let weights: Vec<f64> = (0..=10).map(|n| -(-x).exp_m1() * (-x * n as f64).exp()).collect();
    let mut cum = 0.0;
    let mut kept = Vec::new();
    for (n, w) in weights.iter().enumerate() {
        kept.push((n, *w));
        cum += w;
        if cum >= 0.999 {
            break;
        }
    }
    let norm: f64 = kept.iter().map(|(_, w)| w).sum();
    let rk: f64 = kept
        .iter()
        .map(|&(n, w)| {
            w / norm * rk4_fidelity(m.frequency, oracle.rabi_eff, l * m.alpha_x, l * m.alpha_y, l * m.alpha_z, 10, oracle.theta, n)
        })
        .sum();
    assert!((rk - row.exact).abs() < 1e-9, "rk4 {rk} vs eigen {}", row.exact);
}

#[test]
fn cached_drive_changes_match_fresh_pipelines() {
    let base = Pipeline::new(&reduced(60)).unwrap();
    for hz in [300.0, 5e3] {
        let w = 2.0 * PI * hz;
        let cached = base.with_drive(DriveStrength::Effective(w)).evaluate().summary;
        let mut c = reduced(60);
        c.drive.strength = DriveStrength::Effective(w);
        let fresh = Pipeline::new(&c).unwrap().evaluate().summary;
        assert!(((cached.g - fresh.g) / fresh.g).abs() < 1e-12);
        assert!((cached.tau0 - fresh.tau0).abs() < 1e-18);
    }
}

#[test]
fn sweep_table_survives_csv() {
    let request = SweepRequest::new(
        SweepParameter::Temperature,
        Grid::Values(vec![0.0, 50e-9, 300e-9]),
        reduced(40),
    );
    let table = run_sweep(&request).unwrap();
    let mut text = Vec::new();
    write_sweep_csv(&table, &mut text).unwrap();
    let back = read_sweep_csv(&text[..]).unwrap();
    assert_eq!(back.metadata, table.metadata);
    for (a, b) in table.rows.iter().zip(&back.rows) {
        assert!(((a.g - b.g) / a.g).abs() < 1e-11);
        assert_eq!(a.valid, b.valid);
    }
    assert!(back.rows[0].fidelity > back.rows[2].fidelity);
}
