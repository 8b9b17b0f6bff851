//! Physical inputs with explicit units, their validation, and the boundary
//! conversion into the dimensionless model used by every other module.
//!
//! The text format is one `key = value [unit]` per line; `#` starts a
//! comment. Keys are listed in [`KEYS`] and documented in
//! `configs/SCHEMA.md`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Warning};
use crate::units::{self, format_quantity, parse_quantity, Dimension, UnitSystem, HBAR};

/// Every accepted key with its dimension.
pub const KEYS: &[(&str, Dimension)] = &[
    ("mass", Dimension::Mass),
    ("a_b", Dimension::Length),
    ("g_a_over_g_b", Dimension::Dimensionless),
    ("g_a", Dimension::Coupling),
    ("g_ab_over_g_b", Dimension::Dimensionless),
    ("g_ab", Dimension::Coupling),
    ("omega_b", Dimension::AngularFrequency),
    ("N", Dimension::Dimensionless),
    ("n0", Dimension::Density),
    ("T", Dimension::Temperature),
    ("omega_a", Dimension::AngularFrequency),
    ("k", Dimension::WaveNumber),
    ("drive_wavelength", Dimension::Length),
    ("Omega_0", Dimension::AngularFrequency),
    ("Omega_eff", Dimension::AngularFrequency),
    ("theta", Dimension::Angle),
    ("j_min", Dimension::Dimensionless),
    ("j_max", Dimension::Dimensionless),
    ("ells", Dimension::Dimensionless),
    ("quad_tol", Dimension::Dimensionless),
    ("g_warn", Dimension::Dimensionless),
    ("min_gap_tau", Dimension::Dimensionless),
    ("max_rabi_over_gap", Dimension::Dimensionless),
];

const REQUIRED: &[&[&str]] =
    &[&["omega_b"], &["N", "n0"], &["omega_a"], &["Omega_0", "Omega_eff"]];

const EXCLUSIVE: &[&[&str]] = &[
    &["N", "n0"],
    &["Omega_0", "Omega_eff"],
    &["g_a_over_g_b", "g_a"],
    &["g_ab_over_g_b", "g_ab"],
    &["k", "drive_wavelength"],
];

pub const RB87_MASS: f64 = 1.4431e-25;
pub const RB87_SCATTERING_LENGTH: f64 = 5.31e-9;
pub const RB87_D2_WAVELENGTH: f64 = 780e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// kg
    pub mass: f64,
    /// s-wave scattering length of the condensate state, m.
    pub scattering_length: f64,
    /// g_a / g_b.
    pub g_a_ratio: f64,
    /// g_ab / g_b.
    pub g_ab_ratio: f64,
}

impl AtomSpecies {
    pub fn rubidium87() -> Self {
        Self {
            mass: RB87_MASS,
            scattering_length: RB87_SCATTERING_LENGTH,
            g_a_ratio: 1.0,
            g_ab_ratio: 1.0,
        }
    }

    /// g_b = 4πħ²a_b/M, J·m³.
    pub fn g_b(&self) -> f64 {
        4.0 * PI * HBAR * HBAR * self.scattering_length / self.mass
    }

    pub fn g_a(&self) -> f64 {
        self.g_a_ratio * self.g_b()
    }

    pub fn g_ab(&self) -> f64 {
        self.g_ab_ratio * self.g_b()
    }
}

/// Exactly one of atom number and central density fixes the condensate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    AtomNumber(f64),
    /// m⁻³ (internal: a_ho⁻³).
    CentralDensity(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensateConfig {
    /// Spherical trap frequency ω_b, rad/s.
    pub trap_frequency: f64,
    pub population: Population,
    /// K
    pub temperature: f64,
}

/// Isotropic harmonic tweezer at the condensate centre, drive along z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweezerConfig {
    /// ω_a, rad/s.
    pub trap_frequency: f64,
    /// Standing-wave wave number k, rad/m.
    pub wave_number: f64,
}

/// Exactly one of the bare and the effective Rabi frequency is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveStrength {
    Bare(f64),
    Effective(f64),
}

impl DriveStrength {
    pub fn value(&self) -> f64 {
        match *self {
            DriveStrength::Bare(v) | DriveStrength::Effective(v) => v,
        }
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            DriveStrength::Bare(v) => DriveStrength::Bare(f(v)),
            DriveStrength::Effective(v) => DriveStrength::Effective(f(v)),
        }
    }
}

/// Step-envelope pulse; the duration is fixed downstream to τ₀ = 2θ/Ω_eff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub strength: DriveStrength,
    /// Bloch angle θ of the target state cosθ|0⟩ − i sinθ|1⟩, rad.
    pub theta: f64,
}

/// Modes (j, ℓ, m = 0) with j_min ≤ j ≤ j_max for each ℓ in the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasisConfig {
    pub j_min: u32,
    pub j_max: u32,
    pub angular_momenta: Vec<u32>,
}

impl Default for ModeBasisConfig {
    fn default() -> Self {
        Self { j_min: 1, j_max: 500, angular_momenta: vec![0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericsConfig {
    pub quadrature_tolerance: f64,
    /// Perturbative-validity threshold on g.
    pub g_warn: f64,
    /// Pass threshold for ω_gap·τ.
    pub min_gap_times_tau: f64,
    /// Pass threshold for Ω_eff/ω_gap.
    pub max_rabi_over_gap: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self { quadrature_tolerance: 1e-8, g_warn: 0.1, min_gap_times_tau: 50.0, max_rabi_over_gap: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub species: AtomSpecies,
    pub condensate: CondensateConfig,
    pub tweezer: TweezerConfig,
    pub drive: DriveConfig,
    pub basis: ModeBasisConfig,
    pub numerics: NumericsConfig,
}

impl Config {
    /// ⁸⁷Rb condensate, ω_b = 2π×200 Hz, N = 3×10⁶, T = 0; tweezer at
    /// ω_a = 2π×1 MHz; Ω_eff = 2π×1.7 kHz; θ = π/2; g_ab = g_b; j ≤ 500, ℓ = 0.
    pub fn baseline() -> Self {
        Self {
            species: AtomSpecies::rubidium87(),
            condensate: CondensateConfig {
                trap_frequency: 2.0 * PI * 200.0,
                population: Population::AtomNumber(3e6),
                temperature: 0.0,
            },
            tweezer: TweezerConfig {
                trap_frequency: 2.0 * PI * 1e6,
                wave_number: 2.0 * PI / RB87_D2_WAVELENGTH,
            },
            drive: DriveConfig { strength: DriveStrength::Effective(2.0 * PI * 1.7e3), theta: PI / 2.0 },
            basis: ModeBasisConfig::default(),
            numerics: NumericsConfig::default(),
        }
    }

    /// Check every invariant; the first violation is returned, naming its field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be positive and finite, got {v}")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be non-negative and finite, got {v}")))
            }
        };
        let unit_interval = |field: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must lie in (0, 1), got {v}")))
            }
        };

        positive("mass", self.species.mass)?;
        positive("a_b", self.species.scattering_length)?;
        positive("g_a_over_g_b", self.species.g_a_ratio)?;
        non_negative("g_ab_over_g_b", self.species.g_ab_ratio)?;

        positive("omega_b", self.condensate.trap_frequency)?;
        match self.condensate.population {
            Population::AtomNumber(n) => positive("N", n)?,
            Population::CentralDensity(n) => positive("n0", n)?,
        }
        non_negative("T", self.condensate.temperature)?;

        positive("omega_a", self.tweezer.trap_frequency)?;
        non_negative("k", self.tweezer.wave_number)?;

        match self.drive.strength {
            DriveStrength::Bare(v) => positive("Omega_0", v)?,
            DriveStrength::Effective(v) => positive("Omega_eff", v)?,
        }
        let theta = self.drive.theta;
        if !(theta > 0.0 && theta <= PI) {
            return Err(ConfigError::invalid("theta", format!("must lie in (0, pi], got {theta}")));
        }

        let b = &self.basis;
        if b.j_max < 1 {
            return Err(ConfigError::invalid("j_max", "must be at least 1"));
        }
        if b.j_min > b.j_max {
            return Err(ConfigError::invalid("j_min", format!("{} exceeds j_max = {}", b.j_min, b.j_max)));
        }
        if b.angular_momenta.is_empty() {
            return Err(ConfigError::invalid("ells", "must list at least one angular momentum"));
        }
        if let Some(l) = b.angular_momenta.iter().find(|&&l| l % 2 != 0) {
            return Err(ConfigError::invalid("ells", format!("only even angular momenta couple, got {l}")));
        }

        unit_interval("quad_tol", self.numerics.quadrature_tolerance)?;
        unit_interval("g_warn", self.numerics.g_warn)?;
        unit_interval("max_rabi_over_gap", self.numerics.max_rabi_over_gap)?;
        positive("min_gap_tau", self.numerics.min_gap_times_tau)?;
        Ok(())
    }

    /// Soft checks that do not block computation.
    pub fn warnings(&self) -> Vec<Warning> {
        let ratio = self.tweezer.trap_frequency / self.condensate.trap_frequency;
        if ratio < 100.0 {
            vec![Warning::TrapRatio { ratio }]
        } else {
            Vec::new()
        }
    }

    /// Canonical key-value text in SI units. `load_config` reads it back to
    /// an identical configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("mass", format_quantity(self.species.mass, Dimension::Mass));
        line("a_b", format_quantity(self.species.scattering_length, Dimension::Length));
        line("g_a_over_g_b", format_quantity(self.species.g_a_ratio, Dimension::Dimensionless));
        line("g_ab_over_g_b", format_quantity(self.species.g_ab_ratio, Dimension::Dimensionless));
        line("omega_b", format_quantity(self.condensate.trap_frequency, Dimension::AngularFrequency));
        match self.condensate.population {
            Population::AtomNumber(n) => line("N", format_quantity(n, Dimension::Dimensionless)),
            Population::CentralDensity(n) => line("n0", format_quantity(n, Dimension::Density)),
        }
        line("T", format_quantity(self.condensate.temperature, Dimension::Temperature));
        line("omega_a", format_quantity(self.tweezer.trap_frequency, Dimension::AngularFrequency));
        line("k", format_quantity(self.tweezer.wave_number, Dimension::WaveNumber));
        match self.drive.strength {
            DriveStrength::Bare(v) => line("Omega_0", format_quantity(v, Dimension::AngularFrequency)),
            DriveStrength::Effective(v) => line("Omega_eff", format_quantity(v, Dimension::AngularFrequency)),
        }
        line("theta", format_quantity(self.drive.theta, Dimension::Angle));
        line("j_min", self.basis.j_min.to_string());
        line("j_max", self.basis.j_max.to_string());
        let ells: Vec<String> = self.basis.angular_momenta.iter().map(|l| l.to_string()).collect();
        line("ells", ells.join(","));
        line("quad_tol", format_quantity(self.numerics.quadrature_tolerance, Dimension::Dimensionless));
        line("g_warn", format_quantity(self.numerics.g_warn, Dimension::Dimensionless));
        line("min_gap_tau", format_quantity(self.numerics.min_gap_times_tau, Dimension::Dimensionless));
        line("max_rabi_over_gap", format_quantity(self.numerics.max_rabi_over_gap, Dimension::Dimensionless));
        out
    }

    /// Apply `key=value` overrides on top of this configuration and re-validate.
    /// Overriding one member of an exclusive pair (e.g. `n0` over `N`)
    /// replaces the other.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Config, ConfigError> {
        let mut entries = parse_entries(&self.to_text())?;
        let mut seen = BTreeMap::new();
        for (i, o) in overrides.iter().enumerate() {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line: i + 1, message: format!("override `{o}` is not key=value") })?;
            let k = k.trim().to_string();
            if !KEYS.iter().any(|(key, _)| *key == k) {
                return Err(ConfigError::UnknownKey(k));
            }
            if seen.insert(k.clone(), ()).is_some() {
                return Err(ConfigError::DuplicateKey(k));
            }
            if let Some(group) = EXCLUSIVE.iter().find(|g| g.contains(&k.as_str())) {
                for other in group.iter().filter(|o| **o != k) {
                    entries.remove(*other);
                }
            }
            entries.insert(k, v.trim().to_string());
        }
        from_entries(&entries)
    }
}

/// Parse configuration text into a validated [`Config`].
///
/// Keys not given take the baseline defaults, except the required ones:
/// `omega_b`, one of `N`/`n0`, `omega_a`, and one of `Omega_0`/`Omega_eff`.
pub fn load_config(source: &str) -> Result<Config, ConfigError> {
    let entries = parse_entries(source)?;
    for group in REQUIRED {
        if !group.iter().any(|k| entries.contains_key(*k)) {
            return Err(ConfigError::invalid(group[0], "required field missing"));
        }
    }
    from_entries(&entries)
}

/// Resolve a configuration source name: `baseline` is the built-in reference
/// baseline, anything else is read as a file path.
pub fn resolve_source(name: &str) -> Result<String, std::io::Error> {
    if name == "baseline" {
        Ok(Config::baseline().to_text())
    } else {
        std::fs::read_to_string(name)
    }
}

fn parse_entries(source: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line: i + 1, message: format!("expected `key = value`, got `{line}`") })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Parse { line: i + 1, message: "empty key or value".into() });
        }
        if !KEYS.iter().any(|(key, _)| *key == k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
    }
    Ok(entries)
}

fn from_entries(entries: &BTreeMap<String, String>) -> Result<Config, ConfigError> {
    for group in EXCLUSIVE {
        if group.iter().filter(|k| entries.contains_key(**k)).count() > 1 {
            return Err(ConfigError::Exclusive(group.join(", ")));
        }
    }
    let get = |key: &str| -> Result<Option<f64>, ConfigError> {
        let Some(text) = entries.get(key) else { return Ok(None) };
        let dim = KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).unwrap_or(Dimension::Dimensionless);
        parse_quantity(text, dim)
            .map(Some)
            .map_err(|source| ConfigError::Unit { field: key.to_string(), source })
    };
    let get_int = |key: &str| -> Result<Option<u32>, ConfigError> {
        let Some(text) = entries.get(key) else { return Ok(None) };
        text.trim()
            .parse::<u32>()
            .map(Some)
            .map_err(|_| ConfigError::invalid(key, format!("expected a non-negative integer, got `{text}`")))
    };

    let mut cfg = Config::baseline();
    if let Some(v) = get("mass")? {
        cfg.species.mass = v;
    }
    if let Some(v) = get("a_b")? {
        cfg.species.scattering_length = v;
    }
    if let Some(v) = get("g_a_over_g_b")? {
        cfg.species.g_a_ratio = v;
    }
    if let Some(v) = get("g_ab_over_g_b")? {
        cfg.species.g_ab_ratio = v;
    }
    // Absolute couplings are stored as ratios, so they need the final g_b.
    let g_b = cfg.species.g_b();
    if let Some(v) = get("g_a")? {
        cfg.species.g_a_ratio = v / g_b;
    }
    if let Some(v) = get("g_ab")? {
        cfg.species.g_ab_ratio = v / g_b;
    }

    if let Some(v) = get("omega_b")? {
        cfg.condensate.trap_frequency = v;
    }
    if let Some(v) = get("N")? {
        cfg.condensate.population = Population::AtomNumber(v);
    }
    if let Some(v) = get("n0")? {
        cfg.condensate.population = Population::CentralDensity(v);
    }
    if let Some(v) = get("T")? {
        cfg.condensate.temperature = v;
    }

    if let Some(v) = get("omega_a")? {
        cfg.tweezer.trap_frequency = v;
    }
    if let Some(v) = get("k")? {
        cfg.tweezer.wave_number = v;
    }
    if let Some(v) = get("drive_wavelength")? {
        if !(v > 0.0) {
            return Err(ConfigError::invalid("drive_wavelength", format!("must be positive, got {v}")));
        }
        cfg.tweezer.wave_number = 2.0 * PI / v;
    }

    if let Some(v) = get("Omega_0")? {
        cfg.drive.strength = DriveStrength::Bare(v);
    }
    if let Some(v) = get("Omega_eff")? {
        cfg.drive.strength = DriveStrength::Effective(v);
    }
    if let Some(v) = get("theta")? {
        cfg.drive.theta = v;
    }

    if let Some(v) = get_int("j_min")? {
        cfg.basis.j_min = v;
    }
    if let Some(v) = get_int("j_max")? {
        cfg.basis.j_max = v;
    }
    if let Some(text) = entries.get("ells") {
        cfg.basis.angular_momenta = text
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ConfigError::invalid("ells", format!("expected a comma-separated list of integers, got `{text}`")))?;
        cfg.basis.angular_momenta.sort_unstable();
        cfg.basis.angular_momenta.dedup();
    }

    if let Some(v) = get("quad_tol")? {
        cfg.numerics.quadrature_tolerance = v;
    }
    if let Some(v) = get("g_warn")? {
        cfg.numerics.g_warn = v;
    }
    if let Some(v) = get("min_gap_tau")? {
        cfg.numerics.min_gap_times_tau = v;
    }
    if let Some(v) = get("max_rabi_over_gap")? {
        cfg.numerics.max_rabi_over_gap = v;
    }

    cfg.validate()?;
    Ok(cfg)
}

/// The configuration expressed in oscillator units of the condensate trap
/// (ħ = M = ω_b = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalModel {
    pub units: UnitSystem,
    /// a_b / a_ho.
    pub scattering_length: f64,
    pub g_b: f64,
    pub g_a: f64,
    pub g_ab: f64,
    /// Atom number, or central density in a_ho⁻³.
    pub population: Population,
    /// k_B T / ħω_b.
    pub temperature: f64,
    /// ω_a / ω_b.
    pub tweezer_frequency: f64,
    /// k·a_ho.
    pub wave_number: f64,
    /// Ω / ω_b.
    pub drive: DriveStrength,
    pub theta: f64,
    pub basis: ModeBasisConfig,
    pub numerics: NumericsConfig,
}

pub fn to_internal(cfg: &Config) -> InternalModel {
    let units = UnitSystem::new(cfg.species.mass, cfg.condensate.trap_frequency);
    let length = units.length();
    let scattering_length = cfg.species.scattering_length / length;
    // One multiplication chain from a_b, consistent with g_b = 4πħ²a_b/M.
    let g_b = 4.0 * PI * scattering_length;
    let w = cfg.condensate.trap_frequency;
    InternalModel {
        units,
        scattering_length,
        g_b,
        g_a: cfg.species.g_a_ratio * g_b,
        g_ab: cfg.species.g_ab_ratio * g_b,
        population: match cfg.condensate.population {
            Population::AtomNumber(n) => Population::AtomNumber(n),
            Population::CentralDensity(n) => Population::CentralDensity(n * units.volume()),
        },
        temperature: cfg.condensate.temperature / units.temperature(),
        tweezer_frequency: cfg.tweezer.trap_frequency / w,
        wave_number: cfg.tweezer.wave_number * length,
        drive: cfg.drive.strength.map(|v| v / w),
        theta: cfg.drive.theta,
        basis: cfg.basis.clone(),
        numerics: cfg.numerics.clone(),
    }
}

pub fn from_internal(model: &InternalModel) -> Config {
    let units = model.units;
    let length = units.length();
    let w = units.trap_frequency;
    Config {
        species: AtomSpecies {
            mass: units.mass,
            scattering_length: model.scattering_length * length,
            g_a_ratio: model.g_a / model.g_b,
            g_ab_ratio: model.g_ab / model.g_b,
        },
        condensate: CondensateConfig {
            trap_frequency: w,
            population: match model.population {
                Population::AtomNumber(n) => Population::AtomNumber(n),
                Population::CentralDensity(n) => Population::CentralDensity(n / units.volume()),
            },
            temperature: model.temperature * units.temperature(),
        },
        tweezer: TweezerConfig { trap_frequency: model.tweezer_frequency * w, wave_number: model.wave_number / length },
        drive: DriveConfig { strength: model.drive.map(|v| v * w), theta: model.theta },
        basis: model.basis.clone(),
        numerics: model.numerics.clone(),
    }
}

/// Hand-check helper: g_b in SI from a scattering length and a mass.
pub fn contact_coupling(scattering_length: f64, mass: f64) -> f64 {
    4.0 * PI * units::HBAR * units::HBAR * scattering_length / mass
}
