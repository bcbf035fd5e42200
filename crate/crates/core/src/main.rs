//! Command-line front end: single scenarios, parameter sweeps, and the
//! preconfigured experiment reproductions.

use clap::{Args, Parser, Subcommand, ValueEnum};
use irs_rx::channel::SystemConfig;
use irs_rx::harness::{
    emit_outputs, run_sweep, to_db, ExperimentSpec, Method, SweepAxis, SweepOutcome,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "irs-rx",
    version,
    about = "Two-stage tensor receiver simulator for IRS-assisted MIMO uplinks under channel aging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scenario file with flat `key = value` lines (M, Q, N, T0, ...).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Monte Carlo runs per sweep point.
    #[arg(long)]
    runs: Option<usize>,

    /// Master seed for all random substreams.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for results.csv and plot-data files.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Methods to evaluate (subset of parkron,krf,ls).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,

    /// Disable channel noise (oracle mode).
    #[arg(long)]
    noiseless: bool,

    /// Execute runs on a single thread.
    #[arg(long)]
    serial: bool,

    /// Evaluate the combined-channel NMSE on frame 1 only.
    #[arg(long)]
    frame1_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single scenario at the configured operating point.
    Run(CommonOpts),
    /// Sweep the training SNR in dB.
    SweepSnr {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40")]
        values: Vec<f64>,
    },
    /// Sweep the per-block pilot length; the block length Tp+Td stays fixed.
    SweepPilots {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        values: Vec<usize>,
    },
    /// Sweep the IRS element count; T0 follows as Q*N.
    SweepIrs {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        values: Vec<usize>,
    },
    /// Preconfigured experiment reproductions.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum Figure {
    /// Combined-channel NMSE of all methods across SNR.
    Fig3,
    /// Effective-channel NMSE of tracking vs the static baseline across SNR.
    Fig4,
    /// BER across the pilot length at the configured SNR.
    Fig6,
    /// BER across the IRS element count at the configured SNR.
    Fig7,
}

fn build_spec(common: &CommonOpts, sweep: SweepAxis, default_runs: usize) -> Result<ExperimentSpec, irs_rx::Error> {
    let mut config = match &common.config {
        Some(path) => SystemConfig::from_file(path)?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let mut spec = ExperimentSpec::new(config);
    spec.sweep = sweep;
    spec.runs = common.runs.unwrap_or(default_runs);
    spec.noiseless = common.noiseless;
    spec.parallel = !common.serial;
    spec.frame1_only = common.frame1_only;
    if let Some(methods) = &common.methods {
        let mut parsed = Vec::new();
        for m in methods {
            parsed.push(Method::parse(m)?);
        }
        parsed.sort();
        parsed.dedup();
        spec.methods = parsed;
    }
    Ok(spec)
}

fn print_summary(spec: &ExperimentSpec, outcome: &SweepOutcome) {
    println!("scenario: {}", spec.config);
    println!(
        "runs: {} per point ({} attempted, {} failed), elapsed {:.2?}",
        spec.runs, outcome.runs_attempted, outcome.failures, outcome.elapsed
    );
    for (value, reason) in &outcome.skipped {
        println!("skipped {} = {}: {}", spec.sweep.name(), value, reason);
    }
    println!(
        "{:<9} {:<16} {:>10} {:>13} {:>11} {:>11} {:>6}",
        "method", "metric", spec.sweep.name(), "mean", "mean_dB", "stderr", "runs"
    );
    for row in &outcome.rows {
        let db = if row.metric.starts_with("nmse") && row.mean > 0.0 {
            format!("{:.2}", to_db(row.mean))
        } else {
            "-".into()
        };
        println!(
            "{:<9} {:<16} {:>10} {:>13.6e} {:>11} {:>11.3e} {:>6}",
            row.method.to_string(),
            row.metric,
            row.sweep_value,
            row.mean,
            db,
            row.stderr,
            row.runs
        );
    }
}

fn execute(common: &CommonOpts, sweep: SweepAxis, default_runs: usize) -> Result<(), irs_rx::Error> {
    let spec = build_spec(common, sweep, default_runs)?;
    let outcome = run_sweep(&spec)?;
    print_summary(&spec, &outcome);
    let written = emit_outputs(&outcome.rows, &common.out)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => execute(common, SweepAxis::None, 200),
        Command::SweepSnr { common, values } => {
            execute(common, SweepAxis::SnrDb(values.clone()), 200)
        }
        Command::SweepPilots { common, values } => {
            execute(common, SweepAxis::PilotLen(values.clone()), 500)
        }
        Command::SweepIrs { common, values } => {
            execute(common, SweepAxis::IrsElements(values.clone()), 500)
        }
        Command::Reproduce { figure, common } => {
            let mut common = common.clone();
            match figure {
                Figure::Fig3 => execute(&common, SweepAxis::SnrDb(vec![0.0, 10.0, 20.0, 30.0, 40.0]), 200),
                Figure::Fig4 => {
                    if common.methods.is_none() {
                        common.methods = Some(vec!["parkron".into(), "krf".into()]);
                    }
                    execute(&common, SweepAxis::SnrDb(vec![0.0, 10.0, 20.0, 30.0, 40.0]), 200)
                }
                Figure::Fig6 => {
                    if common.methods.is_none() {
                        common.methods = Some(vec!["parkron".into()]);
                    }
                    execute(&common, SweepAxis::PilotLen(vec![4, 8, 16, 32]), 500)
                }
                Figure::Fig7 => {
                    if common.methods.is_none() {
                        common.methods = Some(vec!["parkron".into()]);
                    }
                    execute(&common, SweepAxis::IrsElements(vec![16, 32, 64]), 500)
                }
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
