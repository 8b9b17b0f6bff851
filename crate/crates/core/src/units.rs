//! Physical constants, unit-suffixed quantity parsing, and the internal
//! oscillator unit system (ħ = M = ω_b = 1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::UnitError;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Physical dimension of a configuration quantity. Each dimension has a
/// fixed SI base unit and a table of accepted suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Mass,
    Length,
    /// Angular frequency, rad/s.
    AngularFrequency,
    Temperature,
    /// Number density, m⁻³.
    Density,
    /// Wave number, rad/m.
    WaveNumber,
    /// Angle in radians; the numeric part may be a multiple of `pi`.
    Angle,
    /// Coupling strength, J·m³.
    Coupling,
    Dimensionless,
}

impl Dimension {
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Mass => "kg",
            Dimension::Length => "m",
            Dimension::AngularFrequency => "rad/s",
            Dimension::Temperature => "K",
            Dimension::Density => "m^-3",
            Dimension::WaveNumber => "rad/m",
            Dimension::Angle => "rad",
            Dimension::Coupling => "J*m^3",
            Dimension::Dimensionless => "",
        }
    }

    /// Multiplier taking a value in `unit` to SI. `None` if the suffix is not
    /// recognised for this dimension.
    pub fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Dimension::Mass, "kg") => 1.0,
            (Dimension::Mass, "g") => 1e-3,
            (Dimension::Mass, "amu" | "u" | "Da") => AMU,

            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "um" | "µm") => 1e-6,
            (Dimension::Length, "nm") => 1e-9,
            (Dimension::Length, "a0" | "bohr") => BOHR_RADIUS,

            (Dimension::AngularFrequency, "rad/s") => 1.0,
            (Dimension::AngularFrequency, "Hz_x2pi") => 2.0 * PI,
            (Dimension::AngularFrequency, "kHz_x2pi") => 2.0 * PI * 1e3,
            (Dimension::AngularFrequency, "MHz_x2pi") => 2.0 * PI * 1e6,

            (Dimension::Temperature, "K") => 1.0,
            (Dimension::Temperature, "mK") => 1e-3,
            (Dimension::Temperature, "uK" | "µK") => 1e-6,
            (Dimension::Temperature, "nK") => 1e-9,
            (Dimension::Temperature, "pK") => 1e-12,

            (Dimension::Density, "m^-3") => 1.0,
            (Dimension::Density, "cm^-3") => 1e6,
            (Dimension::Density, "um^-3") => 1e18,

            (Dimension::WaveNumber, "rad/m" | "1/m") => 1.0,
            (Dimension::WaveNumber, "rad/um" | "1/um") => 1e6,
            (Dimension::WaveNumber, "rad/nm" | "1/nm") => 1e9,

            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "deg") => PI / 180.0,

            (Dimension::Coupling, "J*m^3" | "J m^3") => 1.0,

            (Dimension::Dimensionless, "") => 1.0,
            _ => return None,
        };
        Some(s)
    }
}

/// Parse a bare number. Besides ordinary floats this accepts multiples and
/// fractions of `pi` (`pi`, `pi/2`, `3*pi/4`, `2pi`), as used for angles.
pub fn parse_number(text: &str) -> Result<f64, UnitError> {
    let t = text.trim();
    let bad = || UnitError::BadNumber(t.to_string());
    if !t.contains("pi") {
        return t.parse::<f64>().map_err(|_| bad());
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (t, None),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?.trim_end();
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff).trim();
    let coeff = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match den {
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None => 1.0,
    };
    Ok(coeff * PI / den)
}

/// Parse `"<number> [unit]"` into the SI value for `dim`.
///
/// A missing suffix is accepted only for dimensionless quantities and for
/// angles (radians).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let t = text.trim();
    let (num, unit) = match t.split_once(char::is_whitespace) {
        Some((n, u)) => (n, u.trim()),
        None => (t, ""),
    };
    let value = parse_number(num)?;
    let unit = if unit.is_empty() && dim == Dimension::Angle { "rad" } else { unit };
    if unit.is_empty() && dim != Dimension::Dimensionless {
        return Err(UnitError::MissingUnit { expected: dim.si_unit() });
    }
    let scale = dim
        .scale(unit)
        .ok_or_else(|| UnitError::UnknownUnit { unit: unit.to_string(), expected: dim.si_unit() })?;
    Ok(value * scale)
}

/// Render an SI value with its base-unit suffix so that `parse_quantity`
/// reads it back exactly.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    match dim {
        Dimension::Dimensionless => format!("{value:e}"),
        _ => format!("{value:e} {}", dim.si_unit()),
    }
}

/// Oscillator units of the condensate trap: lengths in a_ho = √(ħ/Mω_b),
/// times in 1/ω_b, energies in ħω_b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mass: f64,
    pub trap_frequency: f64,
}

impl UnitSystem {
    pub fn new(mass: f64, trap_frequency: f64) -> Self {
        Self { mass, trap_frequency }
    }

    /// a_ho in metres.
    pub fn length(&self) -> f64 {
        (HBAR / (self.mass * self.trap_frequency)).sqrt()
    }

    /// 1/ω_b in seconds.
    pub fn time(&self) -> f64 {
        1.0 / self.trap_frequency
    }

    /// ħω_b in joules.
    pub fn energy(&self) -> f64 {
        HBAR * self.trap_frequency
    }

    /// Volume unit a_ho³.
    pub fn volume(&self) -> f64 {
        self.length().powi(3)
    }

    /// Coupling constants are energy × volume.
    pub fn coupling(&self) -> f64 {
        self.energy() * self.volume()
    }

    /// ħω_b / k_B in kelvin.
    pub fn temperature(&self) -> f64 {
        self.energy() / K_B
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_expressions() {
        assert_eq!(parse_number("pi").unwrap(), PI);
        assert_eq!(parse_number("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_number("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_number("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_number("-pi/4").unwrap(), -PI / 4.0);
        assert!(parse_number("pie").is_err());
        assert!(parse_number("x/2").is_err());
    }

    #[test]
    fn quantities_with_suffixes() {
        let w = parse_quantity("200 Hz_x2pi", Dimension::AngularFrequency).unwrap();
        assert!((w - 2.0 * PI * 200.0).abs() < 1e-12);
        let t = parse_quantity("300 nK", Dimension::Temperature).unwrap();
        assert!((t - 300e-9).abs() < 1e-21);
        assert_eq!(parse_quantity("1.0", Dimension::Dimensionless).unwrap(), 1.0);
        assert_eq!(parse_quantity("pi/2", Dimension::Angle).unwrap(), PI / 2.0);
        assert_eq!(parse_quantity("90 deg", Dimension::Angle).unwrap(), PI / 2.0);
    }

    #[test]
    fn unit_errors() {
        assert!(matches!(
            parse_quantity("200", Dimension::AngularFrequency),
            Err(UnitError::MissingUnit { .. })
        ));
        assert!(matches!(
            parse_quantity("200 Hz", Dimension::AngularFrequency),
            Err(UnitError::UnknownUnit { .. })
        ));
        assert!(matches!(parse_quantity("abc nK", Dimension::Temperature), Err(UnitError::BadNumber(_))));
    }

    #[test]
    fn formatted_quantities_parse_back() {
        for (v, d) in [
            (1.4431e-25, Dimension::Mass),
            (2.0 * PI * 200.0, Dimension::AngularFrequency),
            (3e-7, Dimension::Temperature),
            (0.25, Dimension::Dimensionless),
            (1.2345678901234567e21, Dimension::Density),
        ] {
            assert_eq!(parse_quantity(&format_quantity(v, d), d).unwrap(), v);
        }
    }

    #[test]
    fn oscillator_length_rb87() {
        // a_ho = √(ħ/Mω_b), evaluated by hand for M = 1.4431e-25 kg, ω_b = 2π·200 Hz.
        let units = UnitSystem::new(1.4431e-25, 2.0 * PI * 200.0);
        let hand = (1.054_571_817e-34_f64 / (1.4431e-25 * 1256.637_061_435_917_3)).sqrt();
        assert!((units.length() - hand).abs() / hand < 1e-14);
        assert!((units.length() - 7.6e-7).abs() / 7.6e-7 < 0.01);
    }
}
