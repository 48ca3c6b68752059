//! The `mwqubit` command line.
//!
//! ```text
//! mwqubit [--out DIR] [--seed N] [--format csv|json|svg] <COMMAND>
//!   simulate --config run.json
//!   scan     --config run.json
//!   fit      --trace signal.csv [--config run.json] [--tau-d-ms X] [--guess fit.json] [--rotary [--tie-rates]]
//!   leakage  --config run.json
//!   fidelity --config run.json [--fit fit.json]
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure. `MWQUBIT_THREADS` sets the worker count.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use commands::{
    cmd_fidelity, cmd_fit, cmd_leakage, cmd_scan, cmd_simulate, ChannelSummary, FidelityReport,
    FitEstimate, FitOutput, FitRequest, LeakageReport, SimulateOutput,
};
pub use config::RunConfig;

use crate::diagnostics::FitReport;
use crate::error::{Error, Result};
use crate::trace::TimedTrace;
use crate::units::DecayRates;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "MWQUBIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(
    name = "mwqubit",
    version,
    about = "Microwave-driven qubit ensemble simulation and diagnostics"
)]
pub struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for noise and Monte Carlo; overrides `numerics.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format. Traces and tables default to csv, reports to json;
    /// svg writes the csv plus a plot.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble-averaged population and polarimetry signal traces.
    Simulate(ConfigArg),
    /// Robustness of pulse families against a deliberate error.
    Scan(ConfigArg),
    /// Fit a signal trace.
    Fit(FitArgs),
    /// Population leaked out of the qubit during one gate.
    Leakage(ConfigArg),
    /// Ensemble gate fidelity of the configured sequence.
    Fidelity(FidelityArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Two-column CSV trace (time_s, value).
    #[arg(long)]
    pub trace: PathBuf,
    /// Supplies the decay section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Echo decay time; sets gamma1 = gamma2 = 1 / (2 tau_d).
    #[arg(long)]
    pub tau_d_ms: Option<f64>,
    /// Starting point from an earlier fit report.
    #[arg(long)]
    pub guess: Option<PathBuf>,
    /// Zero-spread model for rotary-echo traces.
    #[arg(long)]
    pub rotary: bool,
    /// Constrain the rotary-model decay rates to be equal.
    #[arg(long, requires = "rotary")]
    pub tie_rates: bool,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Fit report whose ensemble predicts a pi-gate fidelity.
    #[arg(long)]
    pub fit: Option<PathBuf>,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged(_)
        | Error::Singular(_)
        | Error::Node { .. }
        | Error::TruncatedWeight(_)
        | Error::NonFinite(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(&cli) {
        Ok(Status::Done) => 0,
        Ok(Status::NotConverged) => {
            eprintln!("error: fit did not converge");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::config(
                THREADS_ENV,
                format!("must be a positive integer, got `{value}`"),
            )
        })?;
    // A pool configured earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

enum Status {
    Done,
    NotConverged,
}

fn execute(cli: &Cli) -> Result<Status> {
    let load = |path: &Path| RunConfig::load(path, cli.seed);
    match &cli.command {
        Command::Simulate(a) => {
            let out = cmd_simulate(&load(&a.config)?)?;
            write_simulate(&cli.out, cli.format.unwrap_or(Format::Csv), &out)?;
        }
        Command::Scan(a) => {
            let tables = cmd_scan(&load(&a.config)?)?;
            write_scan(&cli.out, cli.format.unwrap_or(Format::Csv), &tables)?;
        }
        Command::Fit(a) => {
            reject_format(cli.format, "fit")?;
            let cfg = a.config.as_deref().map(load).transpose()?;
            let decay = match (a.tau_d_ms, &cfg) {
                (Some(ms), _) => {
                    if !(ms.is_finite() && ms > 0.0) {
                        return Err(Error::config(
                            "--tau-d-ms",
                            format!("must be positive, got {ms}"),
                        ));
                    }
                    DecayRates::from_echo_decay_time(ms * 1e-3)?
                }
                (None, Some(c)) => c.decay()?,
                (None, None) => DecayRates::NONE,
            };
            let guess = a
                .guess
                .as_deref()
                .map(read_fit_report)
                .transpose()?
                .map(|r| r.to_guess());
            let trace = TimedTrace::load(&a.trace)
                .map_err(|e| Error::config("--trace", format!("{}: {e}", a.trace.display())))?;
            let req = FitRequest {
                rotary: a.rotary,
                tie_rates: a.tie_rates,
                decay,
                guess,
            };
            let fit = cmd_fit(&trace, &req)?;
            let json = fit.to_json();
            write_file(&cli.out, "fit.json", &format!("{json}\n"))?;
            println!("{json}");
            if !fit.converged() {
                return Ok(Status::NotConverged);
            }
        }
        Command::Leakage(a) => {
            let (report, result) = cmd_leakage(&load(&a.config)?)?;
            let json = to_json(&report);
            write_file(&cli.out, "leakage.json", &format!("{json}\n"))?;
            write_file(&cli.out, "leakage.csv", &leakage_csv(&report, &result)?)?;
            if cli.format == Some(Format::Svg) {
                let series: Vec<svg::Series<'_>> = std::iter::once(svg::Series {
                    label: "combined",
                    xs: &result.combined.times,
                    ys: &result.combined.values,
                })
                .chain(
                    report
                        .channels
                        .iter()
                        .zip(&result.per_channel)
                        .map(|(c, ys)| svg::Series {
                            label: &c.label,
                            xs: &result.combined.times,
                            ys,
                        }),
                )
                .collect();
                let plot = svg::line_plot("Leaked population", "time (s)", "population", &series);
                write_file(&cli.out, "leakage.svg", &plot)?;
            }
            println!("{json}");
        }
        Command::Fidelity(a) => {
            reject_format(cli.format, "fidelity")?;
            let cfg = load(&a.config)?;
            let fit = a.fit.as_deref().map(read_fit_report).transpose()?;
            let report = cmd_fidelity(&cfg, fit.as_ref())?;
            let json = to_json(&report);
            write_file(&cli.out, "fidelity.json", &format!("{json}\n"))?;
            println!("{json}");
        }
    }
    Ok(Status::Done)
}

fn reject_format(format: Option<Format>, command: &str) -> Result<()> {
    match format {
        None | Some(Format::Json) => Ok(()),
        Some(f) => Err(Error::config(
            "--format",
            format!("{command} only writes json, not {f:?}"),
        )),
    }
}

fn read_fit_report(path: &Path) -> Result<FitReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("--fit", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config("fit report", format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn write_simulate(dir: &Path, format: Format, out: &SimulateOutput) -> Result<()> {
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Both<'a> {
                population: &'a TimedTrace,
                signal: &'a TimedTrace,
            }
            let both = Both {
                population: &out.population,
                signal: &out.signal,
            };
            report_written(write_file(
                dir,
                "simulate.json",
                &format!("{}\n", to_json(&both)),
            )?);
        }
        Format::Csv | Format::Svg => {
            report_written(write_file(
                dir,
                "population.csv",
                &out.population.to_csv_string(),
            )?);
            report_written(write_file(dir, "signal.csv", &out.signal.to_csv_string())?);
            if format == Format::Svg {
                let plot = svg::line_plot(
                    "Polarimetry signal",
                    "time (s)",
                    "signal",
                    &[svg::Series {
                        label: "S(t)",
                        xs: &out.signal.times,
                        ys: &out.signal.values,
                    }],
                );
                report_written(write_file(dir, "signal.svg", &plot)?);
            }
        }
    }
    Ok(())
}

fn write_scan(dir: &Path, format: Format, tables: &[crate::sequences::ScanTable]) -> Result<()> {
    let axis = tables.first().map_or("error", |t| t.axis.name());
    match format {
        Format::Json => {
            report_written(write_file(
                dir,
                &format!("scan_{axis}.json"),
                &format!("{}\n", to_json(&tables)),
            )?);
        }
        Format::Csv | Format::Svg => {
            for t in tables {
                let name = format!("scan_{axis}_{}.csv", t.label);
                report_written(write_file(dir, &name, &t.to_csv_string())?);
            }
            if format == Format::Svg {
                let xs: Vec<Vec<f64>> = tables
                    .iter()
                    .map(|t| t.rows.iter().map(|r| r.error_value).collect())
                    .collect();
                let ys: Vec<Vec<f64>> = tables
                    .iter()
                    .map(|t| t.rows.iter().map(|r| r.fidelity).collect())
                    .collect();
                let series: Vec<svg::Series<'_>> = tables
                    .iter()
                    .zip(xs.iter().zip(&ys))
                    .map(|(t, (x, y))| svg::Series {
                        label: &t.label,
                        xs: x,
                        ys: y,
                    })
                    .collect();
                let plot = svg::line_plot(
                    &format!("Fidelity vs {axis} error"),
                    axis,
                    "fidelity",
                    &series,
                );
                report_written(write_file(dir, &format!("scan_{axis}.svg"), &plot)?);
            }
        }
    }
    Ok(())
}

fn report_written(path: PathBuf) {
    println!("wrote {}", path.display());
}

fn leakage_csv(report: &LeakageReport, result: &crate::dynamics::LeakageResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time_s".to_string(), "combined".to_string()];
    header.extend(report.channels.iter().map(|c| c.label.clone()));
    w.write_record(&header)?;
    for (k, (t, c)) in result
        .combined
        .times
        .iter()
        .zip(&result.combined.values)
        .enumerate()
    {
        let mut row = vec![t.to_string(), c.to_string()];
        row.extend(result.per_channel.iter().map(|ch| ch[k].to_string()));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
