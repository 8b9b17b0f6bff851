//! `tweezer` — command-line driver for the tweezer transfer-fidelity model.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 0 success, 1 I/O or table failure, 2 configuration error, 3 numerical
//! failure, 4 a validity check failed under `--strict` (the data is still
//! written first).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tweezer_core::config::{load_config, resolve_source, Config};
use tweezer_core::fidelity::quench_residual;
use tweezer_core::oracle::{convergence_check, DEFAULT_STRENGTH};
use tweezer_core::pipeline::{Pipeline, Summary};
use tweezer_core::sweep::{
    figure_requests, optimize_gab, run_series, run_sweep, Constraint, Grid, SweepParameter, SweepRequest, SweepTable,
    FIGURES, OPTIMIZER_TOLERANCE,
};
use tweezer_core::table::{format_number, write_csv, write_sweep_csv, write_sweep_json};
use tweezer_core::units::parse_number;
use tweezer_core::{ConfigError, Error, Warning};

#[derive(Parser, Debug)]
#[command(name = "tweezer", version, about = "Atom transfer from a condensate into a quantum tweezer")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file, or `baseline` for the built-in parameter set.
    #[arg(long, default_value = "baseline")]
    config: String,
    /// Override one configuration key (`key=value`, repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write data here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Exit with status 4 when g exceeds g_warn or the regime check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transfer fidelity at the configured point.
    Fidelity {
        #[command(flatten)]
        common: Common,
    },
    /// One-parameter sweep, or a preset figure sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Maximise P over g_ab/g_b.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Search bracket in units of g_b, `lo:hi`.
        #[arg(long, default_value = "0:4")]
        bracket: String,
        /// Tolerance relative to the bracket width.
        #[arg(long, default_value_t = OPTIMIZER_TOLERANCE)]
        tol: f64,
    },
    /// Compare the perturbative result with exact evolution of a few modes.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Number of lowest s-wave modes kept.
        #[arg(long, default_value_t = 2)]
        modes: usize,
        /// Fock-space cutoff per mode.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Coupling scales λ, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2,0.3")]
        lambdas: Vec<f64>,
        /// Largest |α| of the kept modes at λ = 1, in units of ω_b.
        #[arg(long, default_value_t = DEFAULT_STRENGTH)]
        strength: f64,
    },
    /// Mode table with couplings.
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Parse, validate and print the canonical configuration.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Swept key: Omega_eff, g_ab_over_g_b, T, omega_b or theta.
    #[arg(long, required_unless_present = "figure")]
    param: Option<String>,
    /// `start:stop:count`.
    #[arg(long, conflicts_with_all = ["values", "figure"])]
    range: Option<String>,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "figure")]
    values: Vec<String>,
    /// Logarithmic spacing for `--range`.
    #[arg(long, requires = "range")]
    log: bool,
    /// Unit of the grid numbers (default SI).
    #[arg(long)]
    unit: Option<String>,
    /// fixed-N or fixed-n0 (omega_b sweeps).
    #[arg(long, default_value = "fixed-N")]
    constraint: String,
    /// Preset sweep reproducing one of the published parameter studies.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(FIGURES))]
    figure: Option<String>,
}

enum Failure {
    Core(Error),
    Strict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Core(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Strict(msg)) => {
            eprintln!("error: strict: {msg}");
            ExitCode::from(4)
        }
        // downstream reader closed early (`| head`): not our failure
        Err(Failure::Core(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            let code = match e {
                Error::Config(_) => 2,
                Error::Numerics(_) => 3,
                Error::Table(_) | Error::Io(_) => 1,
            };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Fidelity { common } => fidelity(&common),
        Command::Sweep { common, sweep: args } => sweep(&common, &args),
        Command::Optimize { common, bracket, tol } => optimize(&common, &bracket, tol),
        Command::OracleCheck { common, modes, n_max, lambdas, strength } => {
            oracle_check(&common, modes, n_max, &lambdas, strength)
        }
        Command::Modes { common } => modes(&common),
        Command::ValidateConfig { common } => validate_config(&common),
    }
}

fn load(common: &Common) -> Result<Config, Failure> {
    let text = resolve_source(&common.config).map_err(|e| ConfigError::Invalid {
        field: "config".into(),
        reason: format!("cannot read `{}`: {e}", common.config),
    })?;
    let cfg = load_config(&text)?.with_overrides(&common.overrides)?;
    Ok(cfg)
}

fn sink(common: &Common) -> io::Result<Box<dyn Write>> {
    Ok(match &common.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn report(warnings: &[Warning]) {
    let mut seen: Vec<String> = Vec::new();
    for w in warnings {
        let line = w.to_string();
        if !seen.contains(&line) {
            eprintln!("warning: {line}");
            seen.push(line);
        }
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn strict_check(common: &Common, valid: bool, regime_ok: bool) -> Outcome {
    if !common.strict {
        return Ok(());
    }
    match (valid, regime_ok) {
        (true, true) => Ok(()),
        (false, _) => Err(Failure::Strict("g exceeds g_warn".into())),
        (true, false) => Err(Failure::Strict("blockade regime check failed".into())),
    }
}

/// Summary fields as `key: value` metadata.
fn summary_metadata(summary: &Summary) -> Vec<(String, String)> {
    let value = serde_json::to_value(summary).expect("summary serializes");
    value
        .as_object()
        .map(|m| {
            m.iter()
                .map(|(k, v)| {
                    let text = match v.as_f64() {
                        Some(x) if !v.is_u64() => format_number(x),
                        _ => v.to_string(),
                    };
                    (k.clone(), text)
                })
                .collect()
        })
        .unwrap_or_default()
}

#[derive(Serialize)]
struct FidelityReport<'a> {
    #[serde(flatten)]
    summary: &'a Summary,
    warnings: Vec<String>,
}

fn fidelity(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let eval = Pipeline::new(&cfg)?.evaluate();
    report(&eval.warnings);
    let w = eval.summary.omega_b;
    let mut out = sink(common)?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => write_json(
            &mut *out,
            &FidelityReport { summary: &eval.summary, warnings: eval.warnings.iter().map(|w| w.to_string()).collect() },
        )?,
        Format::Csv => {
            let header = [
                "j", "l", "omega", "occupation", "A1", "A2", "A3", "A4", "weighted", "quench_residual", "quench_ratio",
            ];
            let rows = eval.fidelity.modes.iter().map(|m| {
                let c = m.coefficients;
                vec![
                    m.index.j.to_string(),
                    m.index.l.to_string(),
                    format_number(m.frequency * w),
                    format_number(m.occupation),
                    format_number(c.a1),
                    format_number(c.a2),
                    format_number(c.a3),
                    format_number(c.a4),
                    format_number(m.weighted),
                    format_number(m.quench.residual * w * w),
                    format_number(m.quench.ratio),
                ]
            });
            write_csv(&mut *out, &summary_metadata(&eval.summary), &header, rows)?;
        }
    }
    out.flush()?;
    strict_check(common, eval.summary.valid, eval.summary.regime_ok)
}

fn parse_grid(args: &SweepArgs, parameter: SweepParameter) -> Result<Grid, ConfigError> {
    let scale = match &args.unit {
        Some(u) => parameter
            .dimension()
            .scale(u)
            .ok_or_else(|| ConfigError::Invalid { field: "unit".into(), reason: format!("`{u}` is not a unit of {parameter}") })?,
        None => 1.0,
    };
    let num = |field: &str, s: &str| {
        parse_number(s).map(|x| x * scale).map_err(|e| ConfigError::Unit { field: field.into(), source: e })
    };
    if let Some(range) = &args.range {
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(ConfigError::Invalid { field: "range".into(), reason: format!("expected start:stop:count, got `{range}`") });
        };
        let count = count
            .trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::Invalid { field: "range".into(), reason: format!("count `{count}` is not an integer") })?;
        let (start, stop) = (num("range", start)?, num("range", stop)?);
        Ok(if args.log { Grid::Log { start, stop, count } } else { Grid::Linear { start, stop, count } })
    } else if !args.values.is_empty() {
        Ok(Grid::Values(args.values.iter().map(|v| num("values", v)).collect::<Result<_, _>>()?))
    } else {
        Err(ConfigError::Invalid { field: "range".into(), reason: "give --range or --values".into() })
    }
}

fn sweep(common: &Common, args: &SweepArgs) -> Outcome {
    let cfg = load(common)?;
    let table: SweepTable = if let Some(fig) = &args.figure {
        let mut t = run_series(&figure_requests(fig, &cfg)?)?;
        t.metadata.insert(0, ("figure".into(), fig.clone()));
        t
    } else {
        let parameter: SweepParameter = args.param.as_deref().unwrap_or_default().parse()?;
        let mut request = SweepRequest::new(parameter, parse_grid(args, parameter)?, cfg);
        request.constraint = args.constraint.parse::<Constraint>()?;
        run_sweep(&request)?
    };
    report(&table.warnings);
    for r in table.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("warning: point {} of series `{}` failed: {}", r.value, r.series, r.error);
    }
    let mut out = sink(common)?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_sweep_csv(&table, &mut out)?,
        Format::Json => write_sweep_json(&table, &mut out)?,
    }
    out.flush()?;
    let valid = table.rows.iter().all(|r| r.is_ok() && r.valid);
    let regime_ok = table.rows.iter().all(|r| r.regime_ok);
    strict_check(common, valid, regime_ok)
}

fn optimize(common: &Common, bracket: &str, tol: f64) -> Outcome {
    let cfg = load(common)?;
    let bad = || ConfigError::Invalid { field: "bracket".into(), reason: format!("expected lo:hi, got `{bracket}`") };
    let (lo, hi) = bracket.split_once(':').ok_or_else(bad)?;
    let lo = parse_number(lo).map_err(|_| bad())?;
    let hi = parse_number(hi).map_err(|_| bad())?;
    let pipeline = Pipeline::new(&cfg)?;
    let optimum = optimize_gab(&pipeline, (lo, hi), tol)?;
    let at = pipeline.with_interspecies_ratio(optimum.g_ab_over_g_b).evaluate();
    let mut warnings = pipeline.warnings.clone();
    warnings.extend(optimum.warnings.iter().cloned());
    warnings.extend(at.warnings.iter().cloned());
    report(&warnings);
    if common.format == Some(Format::Csv) {
        return Err(ConfigError::Invalid { field: "format".into(), reason: "optimize emits JSON only".into() }.into());
    }
    let mut out = sink(common)?;
    write_json(&mut *out, &optimum)?;
    out.flush()?;
    strict_check(common, at.summary.valid, at.summary.regime_ok)
}

fn oracle_check(common: &Common, modes: usize, n_max: usize, lambdas: &[f64], strength: f64) -> Outcome {
    let cfg = load(common)?;
    if common.format == Some(Format::Csv) {
        return Err(ConfigError::Invalid { field: "format".into(), reason: "oracle-check emits JSON only".into() }.into());
    }
    let pipeline = Pipeline::new(&cfg)?;
    report(&pipeline.warnings);
    let problem = pipeline.oracle_config(modes, strength, n_max)?;
    let result = convergence_check(&problem, lambdas).map_err(Error::from)?;
    let mut out = sink(common)?;
    write_json(&mut *out, &result)?;
    out.flush()?;
    if common.strict && !result.converged {
        return Err(Failure::Strict(format!("discrepancy order {:.3} is not above 2", result.fitted_order)));
    }
    Ok(())
}

#[derive(Serialize)]
struct ModeRow {
    j: u32,
    l: u32,
    /// rad/s
    omega: f64,
    omega_over_omega_b: f64,
    occupation: f64,
    /// rad/s
    alpha_x: f64,
    alpha_y: f64,
    alpha_z: f64,
    /// ω α_y − 2 Ω_eff α_z, rad²/s²
    residual: f64,
}

const MODE_COLUMNS: [&str; 9] =
    ["j", "l", "omega", "omega_over_omega_b", "occupation", "alpha_x", "alpha_y", "alpha_z", "residual"];

fn modes(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let pipeline = Pipeline::new(&cfg)?;
    report(&pipeline.warnings);
    let w = pipeline.model.units.trap_frequency;
    let set = &pipeline.couplings;
    let rows: Vec<ModeRow> = set
        .records
        .iter()
        .map(|r| ModeRow {
            j: r.index.j,
            l: r.index.l,
            omega: r.frequency * w,
            omega_over_omega_b: r.frequency,
            occupation: r.occupation,
            alpha_x: r.alpha_x * w,
            alpha_y: r.alpha_y * w,
            alpha_z: r.alpha_z * w,
            residual: quench_residual(r, set.rabi_eff).residual * w * w,
        })
        .collect();
    let mut out = sink(common)?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&mut *out, &rows)?,
        Format::Csv => {
            let metadata = vec![
                ("omega_eff".to_string(), format_number(set.rabi_eff * w)),
                ("g_ab_over_g_b".to_string(), format_number(cfg.species.g_ab_ratio)),
            ];
            let records = rows.iter().map(|m| {
                let mut rec = vec![m.j.to_string(), m.l.to_string()];
                rec.extend(
                    [m.omega, m.omega_over_omega_b, m.occupation, m.alpha_x, m.alpha_y, m.alpha_z, m.residual]
                        .map(format_number),
                );
                rec
            });
            write_csv(&mut *out, &metadata, &MODE_COLUMNS, records)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn validate_config(common: &Common) -> Outcome {
    let cfg = load(common)?;
    report(&cfg.warnings());
    let mut out = sink(common)?;
    match common.format {
        Some(Format::Json) => write_json(&mut *out, &cfg)?,
        Some(Format::Csv) => {
            return Err(ConfigError::Invalid { field: "format".into(), reason: "validate-config emits text or JSON".into() }.into())
        }
        None => write!(out, "{}", cfg.to_text())?,
    }
    out.flush()?;
    Ok(())
}
