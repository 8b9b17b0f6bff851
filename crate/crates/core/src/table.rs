//! CSV and JSON encodings of result tables.
//!
//! CSV layout: a block of `# key: value` metadata lines, one header row,
//! then data. Numbers are written in scientific notation with 12
//! significant digits, so emitting a parsed table reproduces the text.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sweep::{SweepRow, SweepTable};

/// 12 significant digits, scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

fn parse_number(field: &str, text: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::Table(format!("column {field}: cannot parse `{text}`")))
}

fn parse_bool(field: &str, text: &str) -> Result<bool> {
    match text.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Table(format!("column {field}: expected true/false, got `{other}`"))),
    }
}

/// Writes metadata, header and rows.
pub fn write_csv<W: Write>(
    mut out: W,
    metadata: &[(String, String)],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Splits CSV text into its metadata and a CSV reader over the remainder.
pub fn read_csv<R: Read>(mut input: R) -> Result<(Vec<(String, String)>, csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut metadata = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        let rest = rest.trim_end_matches(['\n', '\r']).strip_prefix(' ').unwrap_or(rest.trim_end());
        let (k, v) = rest
            .split_once(": ")
            .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
            .ok_or_else(|| Error::Table(format!("metadata line `{}` is not `# key: value`", line.trim_end())))?;
        metadata.push((k.to_string(), v.to_string()));
        body_start += line.len();
    }
    let mut r = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
    let header = r.headers()?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((metadata, header, rows))
}

pub const SWEEP_COLUMNS: [&str; 13] =
    ["series", "value", "P", "g", "g_min", "valid", "regime_ok", "omega_eff", "tau0", "n0", "N", "R", "error"];

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.series.clone(),
        format_number(r.value),
        format_number(r.fidelity),
        format_number(r.g),
        format_number(r.g_min),
        r.valid.to_string(),
        r.regime_ok.to_string(),
        format_number(r.omega_eff),
        format_number(r.tau0),
        format_number(r.n0),
        format_number(r.atom_number),
        format_number(r.radius),
        r.error.clone(),
    ]
}

pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    write_csv(out, &table.metadata, &SWEEP_COLUMNS, table.rows.iter().map(sweep_record))
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<SweepTable> {
    let (metadata, header, records) = read_csv(input)?;
    if header.iter().collect::<Vec<_>>() != SWEEP_COLUMNS {
        return Err(Error::Table(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let rows = records
        .iter()
        .map(|rec| {
            let f = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| parse_number(SWEEP_COLUMNS[i], f(i));
            Ok(SweepRow {
                series: f(0).to_string(),
                value: num(1)?,
                fidelity: num(2)?,
                g: num(3)?,
                g_min: num(4)?,
                valid: parse_bool("valid", f(5))?,
                regime_ok: parse_bool("regime_ok", f(6))?,
                omega_eff: num(7)?,
                tau0: num(8)?,
                n0: num(9)?,
                atom_number: num(10)?,
                radius: num(11)?,
                error: f(12).to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { metadata, rows, warnings: Vec::new() })
}

pub fn write_sweep_json<W: Write>(table: &SweepTable, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, table).map_err(|e| Error::Table(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_sweep_json<R: Read>(input: R) -> Result<SweepTable> {
    serde_json::from_reader(input).map_err(|e| Error::Table(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: f64) -> SweepRow {
        SweepRow {
            series: "l0_T0".into(),
            value: v,
            fidelity: 1.0 - 1.234567890123456e-4 * v,
            g: 1.234567890123456e-4 * v,
            g_min: 3.3e-7,
            valid: true,
            regime_ok: false,
            omega_eff: 2.0 * std::f64::consts::PI * 1.7e3,
            tau0: 2.94117647e-4,
            n0: 2.0348e21,
            atom_number: 3e6,
            radius: 9.6e-6,
            error: String::new(),
        }
    }

    fn table() -> SweepTable {
        let mut failed = row(3.0);
        failed.fidelity = f64::NAN;
        failed.error = "theta: must lie in (0, pi], got 4".into();
        SweepTable {
            metadata: vec![
                ("parameter".into(), "g_ab_over_g_b".into()),
                ("config".into(), "mass = 1.4431e-25 kg".into()),
                ("empty".into(), String::new()),
            ],
            rows: vec![row(0.25), row(0.5), failed],
            warnings: Vec::new(),
        }
    }

    fn emit(t: &SweepTable) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(t, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = emit(&table());
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# parameter: g_ab_over_g_b");
        assert_eq!(lines[3], SWEEP_COLUMNS.join(","));
        assert_eq!(lines.len(), 7);
        assert!(lines[4].starts_with("l0_T0,2.50000000000e-1,"));
    }

    #[test]
    fn csv_round_trip() {
        let t = table();
        let text = emit(&t);
        let back = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(back.metadata, t.metadata);
        assert_eq!(emit(&back), text);
        for (a, b) in t.rows.iter().zip(&back.rows) {
            if a.is_ok() {
                assert!(((a.g - b.g) / a.g).abs() < 1e-11);
            } else {
                assert!(b.fidelity.is_nan());
                assert_eq!(a.error, b.error);
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = table();
        let mut buf = Vec::new();
        write_sweep_json(&t, &mut buf).unwrap();
        let back = read_sweep_json(&buf[..]).unwrap();
        assert_eq!(back.rows[..2], t.rows[..2]);
        assert!(back.rows[2].fidelity.is_nan());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_sweep_csv("a,b\n1,2\n".as_bytes()).is_err());
        let text = emit(&table()).replace("true", "maybe");
        assert!(read_sweep_csv(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn twelve_digit_numbers_are_stable(x in proptest::num::f64::NORMAL) {
            let s = format_number(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(format_number(y), s);
            prop_assert!(((x - y) / x).abs() <= 5e-12);
        }
    }
}
