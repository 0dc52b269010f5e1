mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Common, DecayArgs, PsdArgs, StatsArgs};
use qpjumps::experiments::{Experiment, ExperimentOptions};
use qpjumps::Error;

/// Simulate and analyze quasiparticle-driven quantum jumps.
#[derive(Parser)]
#[command(name = "qpjumps", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the ground-truth trajectory next to simulated records.
    #[arg(long, global = true)]
    emit_truth: bool,
    /// Configuration override `key=value`; repeatable.
    #[arg(long = "set", global = true, value_parser = parse_kv)]
    set: Vec<(String, String)>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("`{s}` is not key=value"))?;
    Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the readout record.
    Simulate,
    /// Convert a record into a filtered state trajectory.
    Filter {
        record: PathBuf,
        /// Pointer-state half-separation in noise units (default: from the
        /// readout parameters).
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Dwell histograms, fidelity and per-window report of a record.
    Stats {
        record: PathBuf,
        /// Window length in seconds.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
        #[arg(long, default_value_t = 10)]
        bins_per_decade: usize,
        /// Windows with fewer dwells report no fidelity.
        #[arg(long, default_value_t = 20)]
        min_dwells: usize,
        /// Use the sample-weighted mean dwell for the prediction.
        #[arg(long)]
        sample_weighted: bool,
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Fit `A / (B + ω^α) + C` to a time series or spectrum.
    FitPsd {
        input: PathBuf,
        /// The input holds a spectrum rather than a time series.
        #[arg(long)]
        spectrum: bool,
        /// Averaged segments (Welch for series; bias correction for spectra).
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        /// Time (series) or frequency (spectrum) column.
        #[arg(long)]
        x_column: Option<String>,
        /// Value (series) or power (spectrum) column.
        #[arg(long)]
        y_column: Option<String>,
    },
    /// Fit the QP density relaxation to post-pulse excited-state lifetimes.
    FitRecovery {
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value = "t_s")]
        x_column: String,
        #[arg(long, default_value = "tau_e_corrected_s")]
        y_column: String,
    },
    /// Fit an exponential bath-temperature relaxation.
    FitThermal {
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value = "t_s")]
        x_column: String,
        #[arg(long, default_value = "t_eff_k")]
        y_column: String,
    },
    /// Readout signal-to-noise of the configured measurement.
    Snr,
    /// Run a named experiment end to end.
    Experiment {
        /// One of quiet-noisy, qp-pulses, field-cool, recovery, psd.
        name: String,
        /// Mean ground dwell above which a window counts as quiet (s).
        #[arg(long)]
        quiet_threshold: Option<f64>,
        #[arg(long)]
        bootstrap: Option<usize>,
    },
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;
const EXIT_WARNED: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config { .. } | Error::ConfigSyntax(_) | Error::NoSteadyState { .. } | Error::InfiniteRelaxation => {
            EXIT_CONFIG
        }
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_FORMAT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let common = Common {
        config: cli.global.config,
        seed: cli.global.seed,
        out: cli.global.out,
        emit_truth: cli.global.emit_truth,
        set: cli.global.set,
    };
    let result = match cli.command {
        Command::Simulate => commands::simulate(&common),
        Command::Filter { record, separation } => commands::filter(&common, &record, separation),
        Command::Stats {
            record,
            window,
            bins_per_decade,
            min_dwells,
            sample_weighted,
            separation,
        } => commands::stats(
            &common,
            &record,
            &StatsArgs {
                window,
                bins_per_decade,
                min_dwells,
                sample_weighted,
                separation,
            },
        ),
        Command::FitPsd {
            input,
            spectrum,
            segments,
            bootstrap,
            x_column,
            y_column,
        } => {
            let (x, y) = if spectrum { ("f_hz", "power") } else { ("t_s", "value") };
            commands::fit_psd(
                &common,
                &input,
                &PsdArgs {
                    spectrum,
                    segments,
                    bootstrap,
                    time_column: x_column.unwrap_or_else(|| x.into()),
                    value_column: y_column.unwrap_or_else(|| y.into()),
                },
            )
        }
        Command::FitRecovery {
            input,
            bootstrap,
            x_column,
            y_column,
        } => commands::fit_recovery(
            &common,
            &input,
            &DecayArgs {
                bootstrap,
                time_column: x_column,
                value_column: y_column,
            },
        ),
        Command::FitThermal {
            input,
            bootstrap,
            x_column,
            y_column,
        } => commands::fit_thermal(
            &common,
            &input,
            &DecayArgs {
                bootstrap,
                time_column: x_column,
                value_column: y_column,
            },
        ),
        Command::Snr => commands::snr(&common),
        Command::Experiment {
            name,
            quiet_threshold,
            bootstrap,
        } => {
            let mut opts = ExperimentOptions::default();
            if let Some(q) = quiet_threshold {
                opts.quiet_threshold = q;
            }
            if let Some(b) = bootstrap {
                opts.bootstrap = b;
            }
            if name.parse::<Experiment>().is_err() {
                eprintln!("error: unknown experiment `{name}`");
                eprintln!("available experiments: {}", Experiment::available());
                return ExitCode::from(EXIT_CONFIG);
            }
            commands::experiment(&common, &name, &opts)
        }
    };
    match result {
        Ok(outcome) if outcome.warnings.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(EXIT_WARNED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
