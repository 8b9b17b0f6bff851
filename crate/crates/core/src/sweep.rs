//! One-parameter sweeps, the g_ab optimiser, basis-convergence studies, and
//! the preset parameter studies (figure presets 2a–2d and 3).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condensate::solve_tf_model;
use crate::config::{to_internal, Config, DriveStrength, Population};
use crate::error::{ConfigError, Error, Result, Warning};
use crate::pipeline::{Evaluation, Pipeline};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    RabiEff,
    GabRatio,
    Temperature,
    TrapFrequency,
    Theta,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::RabiEff,
        SweepParameter::GabRatio,
        SweepParameter::Temperature,
        SweepParameter::TrapFrequency,
        SweepParameter::Theta,
    ];

    /// Configuration key of the swept quantity.
    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::RabiEff => "Omega_eff",
            SweepParameter::GabRatio => "g_ab_over_g_b",
            SweepParameter::Temperature => "T",
            SweepParameter::TrapFrequency => "omega_b",
            SweepParameter::Theta => "theta",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            SweepParameter::RabiEff | SweepParameter::TrapFrequency => Dimension::AngularFrequency,
            SweepParameter::GabRatio => Dimension::Dimensionless,
            SweepParameter::Temperature => Dimension::Temperature,
            SweepParameter::Theta => Dimension::Angle,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepParameter {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, ConfigError> {
        SweepParameter::ALL.into_iter().find(|p| p.key() == s).ok_or_else(|| {
            let keys: Vec<_> = SweepParameter::ALL.iter().map(|p| p.key()).collect();
            ConfigError::invalid("param", format!("cannot sweep `{s}`; choose one of {}", keys.join(", ")))
        })
    }
}

/// What is held fixed while ω_b changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Constraint {
    #[default]
    FixedAtomNumber,
    FixedDensity,
}

impl Constraint {
    pub fn key(self) -> &'static str {
        match self {
            Constraint::FixedAtomNumber => "fixed-N",
            Constraint::FixedDensity => "fixed-n0",
        }
    }
}

impl FromStr for Constraint {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, ConfigError> {
        match s {
            "fixed-N" => Ok(Constraint::FixedAtomNumber),
            "fixed-n0" => Ok(Constraint::FixedDensity),
            _ => Err(ConfigError::invalid("constraint", format!("expected fixed-N or fixed-n0, got `{s}`"))),
        }
    }
}

/// Grid points in SI units of the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Values(Vec<f64>),
    Linear { start: f64, stop: f64, count: usize },
    Log { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> std::result::Result<Vec<f64>, ConfigError> {
        let pts = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Linear { start, stop, count } | Grid::Log { start, stop, count } => {
                if count == 0 {
                    return Err(ConfigError::invalid("range", "grid needs at least one point"));
                }
                let log = matches!(self, Grid::Log { .. });
                if log && !(start > 0.0 && stop > 0.0) {
                    return Err(ConfigError::invalid("range", "log grid needs positive end points"));
                }
                let (a, b) = if log { (start.ln(), stop.ln()) } else { (start, stop) };
                (0..count)
                    .map(|i| {
                        // end points exactly as given
                        if i == 0 {
                            return start;
                        }
                        if i + 1 == count {
                            return stop;
                        }
                        let x = a + (b - a) * i as f64 / (count - 1) as f64;
                        if log {
                            x.exp()
                        } else {
                            x
                        }
                    })
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(ConfigError::invalid("values", "grid is empty"));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::invalid("values", "grid contains a non-finite value"));
        }
        let up = pts.windows(2).all(|w| w[1] > w[0]);
        let down = pts.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(ConfigError::invalid("values", "grid must be strictly monotone"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub parameter: SweepParameter,
    pub grid: Grid,
    pub constraint: Constraint,
    pub base: Config,
    /// Label carried into every row (used by figure presets).
    pub series: String,
}

impl SweepRequest {
    pub fn new(parameter: SweepParameter, grid: Grid, base: Config) -> Self {
        Self { parameter, grid, constraint: Constraint::default(), base, series: String::new() }
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// One grid point. Failed points carry NaN numbers and a message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: String,
    #[serde(with = "nan_as_null")]
    pub value: f64,
    #[serde(rename = "P", with = "nan_as_null")]
    pub fidelity: f64,
    #[serde(with = "nan_as_null")]
    pub g: f64,
    #[serde(with = "nan_as_null")]
    pub g_min: f64,
    pub valid: bool,
    pub regime_ok: bool,
    /// rad/s
    #[serde(with = "nan_as_null")]
    pub omega_eff: f64,
    /// s
    #[serde(with = "nan_as_null")]
    pub tau0: f64,
    /// m⁻³
    #[serde(with = "nan_as_null")]
    pub n0: f64,
    #[serde(rename = "N", with = "nan_as_null")]
    pub atom_number: f64,
    /// m
    #[serde(rename = "R", with = "nan_as_null")]
    pub radius: f64,
    pub error: String,
}

impl SweepRow {
    fn from_evaluation(series: &str, value: f64, e: &Evaluation) -> Self {
        let s = &e.summary;
        Self {
            series: series.to_string(),
            value,
            fidelity: s.fidelity,
            g: s.g,
            g_min: s.g_min,
            valid: s.valid,
            regime_ok: s.regime_ok,
            omega_eff: s.omega_eff,
            tau0: s.tau0,
            n0: s.n0,
            atom_number: s.atom_number,
            radius: s.thomas_fermi_radius,
            error: String::new(),
        }
    }

    fn failed(series: &str, value: f64, error: String) -> Self {
        Self {
            series: series.to_string(),
            value,
            fidelity: f64::NAN,
            g: f64::NAN,
            g_min: f64::NAN,
            valid: false,
            regime_ok: false,
            omega_eff: f64::NAN,
            tau0: f64::NAN,
            n0: f64::NAN,
            atom_number: f64::NAN,
            radius: f64::NAN,
            error,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Ordered `key: value` metadata (configuration snapshot, basis, …).
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
    /// Warnings raised by any row, deduplicated by kind, in row order.
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

impl SweepTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rows of one series.
    pub fn series<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.series == name)
    }

    /// Row with the highest P among successful rows (first on ties).
    pub fn argmax(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.is_ok())
            .fold(None, |best: Option<&SweepRow>, r| match best {
                Some(b) if b.fidelity >= r.fidelity => Some(b),
                _ => Some(r),
            })
    }
}

fn snapshot(base: &Config) -> Vec<(String, String)> {
    base.to_text().lines().map(|l| ("config".to_string(), l.to_string())).collect()
}

fn apply(cfg: &Config, parameter: SweepParameter, value: f64) -> Config {
    let mut c = cfg.clone();
    match parameter {
        SweepParameter::RabiEff => c.drive.strength = DriveStrength::Effective(value),
        SweepParameter::GabRatio => c.species.g_ab_ratio = value,
        SweepParameter::Temperature => c.condensate.temperature = value,
        SweepParameter::TrapFrequency => c.condensate.trap_frequency = value,
        SweepParameter::Theta => c.drive.theta = value,
    }
    c
}

fn push_unique(warnings: &mut Vec<Warning>, new: Vec<Warning>) {
    for w in new {
        if !warnings.iter().any(|x| std::mem::discriminant(x) == std::mem::discriminant(&w)) {
            warnings.push(w);
        }
    }
}

/// Evaluates every grid point (in parallel) and returns rows in grid order.
/// Failures at individual points are recorded in the row.
pub fn run_sweep(request: &SweepRequest) -> Result<SweepTable> {
    let grid = request.grid.points()?;
    request.base.validate()?;
    let p = request.parameter;
    let mut metadata = vec![
        ("parameter".to_string(), p.key().to_string()),
        ("unit".to_string(), p.dimension().si_unit().to_string()),
    ];
    let mut base = request.base.clone();
    let results: Vec<(SweepRow, Vec<Warning>)> = if p == SweepParameter::TrapFrequency {
        metadata.push(("constraint".to_string(), request.constraint.key().to_string()));
        // Hold N or n₀ at the base configuration's value.
        let model = to_internal(&base);
        let (reference, _) = solve_tf_model(&model);
        base.condensate.population = match request.constraint {
            Constraint::FixedAtomNumber => Population::AtomNumber(reference.atom_number),
            Constraint::FixedDensity => Population::CentralDensity(reference.central_density / model.units.volume()),
        };
        grid.par_iter()
            .map(|&v| {
                let cfg = apply(&base, p, v);
                match Pipeline::new(&cfg) {
                    Ok(pl) => {
                        let e = pl.evaluate();
                        (SweepRow::from_evaluation(&request.series, v, &e), e.warnings)
                    }
                    Err(err) => (SweepRow::failed(&request.series, v, err.to_string()), Vec::new()),
                }
            })
            .collect()
    } else {
        let pipeline = Pipeline::new(&base)?;
        grid.par_iter()
            .map(|&v| {
                if let Err(err) = apply(&base, p, v).validate() {
                    return (SweepRow::failed(&request.series, v, err.to_string()), Vec::new());
                }
                let pl = match p {
                    SweepParameter::RabiEff => pipeline.with_drive(DriveStrength::Effective(v)),
                    SweepParameter::GabRatio => pipeline.with_interspecies_ratio(v),
                    SweepParameter::Temperature => pipeline.with_temperature(v),
                    SweepParameter::Theta => pipeline.with_theta(v),
                    SweepParameter::TrapFrequency => unreachable!(),
                };
                let e = pl.evaluate();
                (SweepRow::from_evaluation(&request.series, v, &e), e.warnings)
            })
            .collect()
    };
    let b = &base.basis;
    let ells: Vec<String> = b.angular_momenta.iter().map(|l| l.to_string()).collect();
    metadata.push(("basis".to_string(), format!("j={}..{} ells={}", b.j_min, b.j_max, ells.join(","))));
    metadata.extend(snapshot(&base));
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for (row, w) in results {
        push_unique(&mut warnings, w);
        rows.push(row);
    }
    Ok(SweepTable { metadata, rows, warnings })
}

/// Several sweeps concatenated, each tagged by its series label.
pub fn run_series(requests: &[SweepRequest]) -> Result<SweepTable> {
    let mut out: Option<SweepTable> = None;
    for r in requests {
        let t = run_sweep(r)?;
        match out.as_mut() {
            None => out = Some(t),
            Some(o) => {
                o.rows.extend(t.rows);
                push_unique(&mut o.warnings, t.warnings);
            }
        }
    }
    let mut t = out.ok_or_else(|| Error::Table("no series requested".into()))?;
    let labels: Vec<_> = requests.iter().map(|r| r.series.clone()).collect();
    t.metadata.insert(2, ("series".to_string(), labels.join(",")));
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub g_ab_over_g_b: f64,
    #[serde(rename = "P")]
    pub fidelity: f64,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub g_ab_over_g_b: f64,
    #[serde(rename = "P")]
    pub fidelity: f64,
    pub g: f64,
    /// Optimum sits at an end of the bracket.
    pub at_boundary: bool,
    /// Pre-scan was unimodal and golden-section refinement ran.
    pub refined: bool,
    pub iterates: Vec<Iterate>,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
}

pub const OPTIMIZER_TOLERANCE: f64 = 1e-3;
const PRESCAN_POINTS: usize = 21;

/// Maximises P over g_ab/g_b ∈ `bracket` with a coarse pre-scan followed by
/// golden-section search. `tol` is relative to the bracket width; an optimum
/// within that distance of an end of the bracket is reported at the end.
/// Falls back to the pre-scan argmax with a warning when P is not unimodal
/// on the bracket.
pub fn optimize_gab(pipeline: &Pipeline, bracket: (f64, f64), tol: f64) -> Result<Optimum> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(ConfigError::invalid("bracket", format!("need 0 ≤ lo < hi, got [{lo}, {hi}]")).into());
    }
    if !(tol > 0.0) {
        return Err(ConfigError::invalid("tolerance", "must be positive").into());
    }
    let abs_tol = tol * (hi - lo);
    let p_at = |r: f64| pipeline.with_interspecies_ratio(r).evaluate().summary.fidelity;
    let mut iterates = Vec::new();
    let scan: Vec<(f64, f64)> = (0..PRESCAN_POINTS)
        .into_par_iter()
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (PRESCAN_POINTS - 1) as f64;
            (r, p_at(r))
        })
        .collect();
    iterates.extend(scan.iter().map(|&(r, p)| Iterate { g_ab_over_g_b: r, fidelity: p, stage: "scan".into() }));
    let best = (0..scan.len()).fold(0, |b, i| if scan[i].1 > scan[b].1 { i } else { b });
    // unimodal: non-decreasing up to the best point, non-increasing after
    let unimodal =
        scan[..=best].windows(2).all(|w| w[1].1 >= w[0].1) && scan[best..].windows(2).all(|w| w[1].1 <= w[0].1);
    let mut warnings = Vec::new();
    let (mut r, refined) = if unimodal {
        let a = scan[best.saturating_sub(1)].0;
        let b = scan[(best + 1).min(scan.len() - 1)].0;
        (golden_section(a, b, abs_tol, p_at, &mut iterates), true)
    } else {
        warnings.push(Warning::NotUnimodal);
        (scan[best].0, false)
    };
    let at_boundary = if r - lo <= abs_tol {
        r = lo;
        true
    } else if hi - r <= abs_tol {
        r = hi;
        true
    } else {
        false
    };
    let e = pipeline.with_interspecies_ratio(r).evaluate();
    warnings.extend(e.warnings.iter().cloned());
    Ok(Optimum {
        g_ab_over_g_b: r,
        fidelity: e.summary.fidelity,
        g: e.summary.g,
        at_boundary,
        refined,
        iterates,
        warnings,
    })
}

fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64, log: &mut Vec<Iterate>) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    log.push(Iterate { g_ab_over_g_b: c, fidelity: fc, stage: "golden".into() });
    log.push(Iterate { g_ab_over_g_b: d, fidelity: fd, stage: "golden".into() });
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            log.push(Iterate { g_ab_over_g_b: c, fidelity: fc, stage: "golden".into() });
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            log.push(Iterate { g_ab_over_g_b: d, fidelity: fd, stage: "golden".into() });
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRow {
    pub j_max: u32,
    pub g: f64,
    /// g(j_max) − g(previous j_max); NaN for the first row.
    #[serde(with = "nan_as_null")]
    pub increment: f64,
    /// |increment| < 10⁻³ g.
    pub converged: bool,
}

/// g as a function of the radial cutoff. Couplings are computed once at the
/// largest cutoff and truncated.
pub fn convergence_vs_basis(base: &Config, j_max: &[u32]) -> Result<Vec<BasisRow>> {
    if j_max.is_empty() || j_max.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::invalid("j_max", "grid must be non-empty and strictly increasing").into());
    }
    let mut cfg = base.clone();
    cfg.basis.j_max = *j_max.last().unwrap();
    let full = Pipeline::new(&cfg)?;
    let mut rows: Vec<BasisRow> = Vec::new();
    for &j in j_max {
        let g = full.truncated(j).evaluate().summary.g;
        let increment = rows.last().map_or(f64::NAN, |r| g - r.g);
        rows.push(BasisRow { j_max: j, g, increment, converged: increment.abs() < 1e-3 * g.abs() });
    }
    Ok(rows)
}

pub const FIGURES: [&str; 5] = ["2a", "2b", "2c", "2d", "3"];

/// The preset sweeps for a figure, built on top of `base` (normally the
/// reference baseline). Series are labelled by basis, temperature and coupling.
pub fn figure_requests(figure: &str, base: &Config) -> std::result::Result<Vec<SweepRequest>, ConfigError> {
    let khz = |f: f64| 2.0 * PI * 1e3 * f;
    let variants = |cfg: &Config| -> Vec<(String, Config)> {
        let mut out = Vec::new();
        for (ells, tag) in [(vec![0], "l0"), (vec![0, 2], "l02")] {
            for (t, ttag) in [(0.0, "T0"), (300e-9, "T300nK")] {
                let mut c = cfg.clone();
                c.basis.angular_momenta = ells.clone();
                c.condensate.temperature = t;
                out.push((format!("{tag}_{ttag}"), c));
            }
        }
        out
    };
    let gab_grid = Grid::Linear { start: 0.0, stop: 2.0, count: 41 };
    let mut cfg = base.clone();
    cfg.species.g_ab_ratio = 1.0;
    let requests = match figure {
        "2a" => {
            cfg.drive.theta = PI / 2.0;
            variants(&cfg)
                .into_iter()
                .map(|(s, c)| SweepRequest {
                    series: s,
                    ..SweepRequest::new(SweepParameter::RabiEff, Grid::Log { start: khz(0.1), stop: khz(100.0), count: 31 }, c)
                })
                .collect()
        }
        "2b" | "2c" | "2d" => {
            let rabi = if figure == "2c" { khz(17.0) } else { khz(1.7) };
            cfg.drive.strength = DriveStrength::Effective(rabi);
            cfg.drive.theta = if figure == "2d" { PI / 4.0 } else { PI / 2.0 };
            let mut reqs: Vec<SweepRequest> = variants(&cfg)
                .into_iter()
                .map(|(s, c)| SweepRequest { series: s, ..SweepRequest::new(SweepParameter::GabRatio, gab_grid.clone(), c) })
                .collect();
            if figure == "2d" {
                // the θ = π/2 reference curve drawn in the same panel
                let mut c = cfg.clone();
                c.drive.theta = PI / 2.0;
                c.basis.angular_momenta = vec![0, 2];
                c.condensate.temperature = 0.0;
                reqs.push(SweepRequest {
                    series: "l02_T0_theta_pi2".into(),
                    ..SweepRequest::new(SweepParameter::GabRatio, gab_grid.clone(), c)
                });
            }
            reqs
        }
        "3" => {
            cfg.condensate.temperature = 0.0;
            cfg.drive.theta = PI / 2.0;
            let mut reqs = Vec::new();
            for (constraint, ctag) in [(Constraint::FixedAtomNumber, "fixedN"), (Constraint::FixedDensity, "fixedn0")] {
                for (ratio, gtag) in [(4.0, "gab4"), (1.0, "gab1")] {
                    let mut c = cfg.clone();
                    c.species.g_ab_ratio = ratio;
                    reqs.push(SweepRequest {
                        parameter: SweepParameter::TrapFrequency,
                        grid: Grid::Linear { start: 2.0 * PI * 100.0, stop: 2.0 * PI * 600.0, count: 26 },
                        constraint,
                        base: c,
                        series: format!("{ctag}_{gtag}"),
                    });
                }
            }
            reqs
        }
        other => {
            return Err(ConfigError::invalid("figure", format!("unknown figure `{other}`; choose one of {}", FIGURES.join(", "))))
        }
    };
    Ok(requests)
}
