//! Monte Carlo experiment runner: scenario composition, NMSE/BER metrics,
//! parameter sweeps, and CSV/plot-data emission.
//!
//! Every run is a pure function of (config, run index), so runs may execute
//! on a worker pool; per-run values are collected in run order and reduced
//! with pairwise summation, making serial and parallel execution produce
//! byte-identical outputs.

use crate::baselines::{krf_static_baseline, KrfStaticEstimate};
use crate::channel::{
    bpsk_data, design_training, evolve_fading, realize_channels, synthesize_stage1,
    synthesize_stage2, GeometryParams, SystemConfig, TrainingDesign,
};
use crate::parkron::{estimate_combined, run_stage1, AlsOptions, Stage1Estimate};
use crate::rng::{Purpose, RunStreams};
use crate::tbt::{
    bals_detect, bit_errors, build_core_tensor, demap_bpsk, init_fading, pilot_companion,
    reconstruct_w, stack_received_blocks, BalsOptions,
};
use crate::tensor::Matrix;
use crate::Error;
use rayon::prelude::*;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Receiver chains the harness can evaluate and compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Parkron,
    Krf,
    Ls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Parkron, Method::Krf, Method::Ls];

    pub fn parse(s: &str) -> Result<Method, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parkron" => Ok(Method::Parkron),
            "krf" => Ok(Method::Krf),
            "ls" => Ok(Method::Ls),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Parkron => "parkron",
            Method::Krf => "krf",
            Method::Ls => "ls",
        })
    }
}

/// Swept parameter and its values.
#[derive(Clone, Debug)]
pub enum SweepAxis {
    /// Single point at the base configuration.
    None,
    SnrDb(Vec<f64>),
    /// Pilot length; the block length Tp + Td is held fixed.
    PilotLen(Vec<usize>),
    /// IRS elements; T0 follows as Q*N.
    IrsElements(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::None | SweepAxis::SnrDb(_) => "snr_db",
            SweepAxis::PilotLen(_) => "t_p",
            SweepAxis::IrsElements(_) => "n",
        }
    }
}

/// Full experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub sweep: SweepAxis,
    /// Monte Carlo runs per sweep point.
    pub runs: usize,
    pub methods: Vec<Method>,
    pub noiseless: bool,
    /// Restrict the combined-channel NMSE to frame 1 (default averages all
    /// frames).
    pub frame1_only: bool,
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn new(config: SystemConfig) -> Self {
        ExperimentSpec {
            config,
            sweep: SweepAxis::None,
            runs: 200,
            methods: Method::ALL.to_vec(),
            noiseless: false,
            frame1_only: false,
            parallel: true,
        }
    }
}

/// Per-run metric bundle (frames and blocks kept separate for breakdowns).
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub run: usize,
    /// Combined-channel NMSE per frame.
    pub ls_nmse_r: Vec<f64>,
    pub krf_nmse_r: Vec<f64>,
    pub parkron_nmse_r: Vec<f64>,
    /// Effective-channel NMSE per frame and block (k = 2..K+1).
    pub krf_nmse_w: Vec<Vec<f64>>,
    pub tbt_nmse_w: Vec<Vec<f64>>,
    pub bit_errors: u64,
    pub bits: u64,
    pub als_iterations: usize,
    pub als_converged: bool,
    /// Bilinear-LS iterations per frame.
    pub bals_iterations: Vec<usize>,
}

/// All runs of one scenario point.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub records: Vec<RunRecord>,
    /// (run index, reason) for runs that failed; excluded from aggregates.
    pub failures: Vec<(usize, String)>,
    pub elapsed: Duration,
}

impl ScenarioResult {
    pub fn runs_attempted(&self) -> usize {
        self.records.len() + self.failures.len()
    }
}

/// Normalized squared error `||T - E||_F^2 / ||T||_F^2` of one realization.
pub fn nmse(truth: &Matrix, estimate: &Matrix) -> Result<f64, Error> {
    let denom = truth.fro_norm();
    if denom == 0.0 {
        return Err(Error::ZeroInput("NMSE reference is zero".into()));
    }
    let num = truth.sub(estimate).fro_norm();
    Ok((num / denom).powi(2))
}

/// Linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Pairwise (cascade) summation; order-independent reduction used for all
/// aggregates so worker scheduling cannot perturb the result.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let half = n / 2;
            pairwise_sum(&xs[..half]) + pairwise_sum(&xs[half..])
        }
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One simulation run: stage-1 pilots and estimation on every frame, IRS
/// configuration, stage-2 tracking and detection on the remaining blocks,
/// plus the two reference estimators on the same realizations.
pub fn simulate_run(
    config: &SystemConfig,
    design: &TrainingDesign,
    run: usize,
    noiseless: bool,
) -> Result<RunRecord, Error> {
    let streams = RunStreams::new(config.seed, run as u64);
    let snr = if noiseless { None } else { Some(config.snr_db) };

    let geometry = GeometryParams::draw(config, &mut streams.stream(0, 0, Purpose::Geometry));
    let fading = evolve_fading(config, &streams);
    let channel = realize_channels(&geometry, &fading, config);

    // Stage 1 on the first block of every frame; the calibrated noise
    // variance of each training block also sets the frame's stage-2 noise.
    let mut combined = Vec::with_capacity(config.frames);
    let mut noise_vars = Vec::with_capacity(config.frames);
    for i in 1..=config.frames {
        let mut noise = streams.stream(i as u64, 1, Purpose::Noise);
        let (y, variance) = synthesize_stage1(&channel, design, i, snr, &mut noise);
        noise_vars.push(variance);
        combined.push(estimate_combined(&y, design, config)?);
    }
    let mut als_init = streams.stream(0, 0, Purpose::AlsInit);
    let stage1: Stage1Estimate = run_stage1(
        &combined,
        &channel.steering.a_rx,
        config,
        &AlsOptions::default(),
        &mut als_init,
    )?;
    let s_opt = &stage1.s_opt;

    // Combined-channel metrics and the cascaded baseline per frame.
    let mut ls_nmse_r = Vec::with_capacity(config.frames);
    let mut krf_nmse_r = Vec::with_capacity(config.frames);
    let mut parkron_nmse_r = Vec::with_capacity(config.frames);
    let mut splits: Vec<KrfStaticEstimate> = Vec::with_capacity(config.frames);
    for i in 1..=config.frames {
        let truth = channel.combined_r(i);
        ls_nmse_r.push(nmse(&truth, &combined[i - 1].r)?);
        parkron_nmse_r.push(nmse(&truth, &stage1.reconstruct_combined(i))?);
        let split = krf_static_baseline(
            &combined[i - 1].r,
            config.bs_antennas,
            config.ue_antennas,
        )?;
        krf_nmse_r.push(nmse(&truth, &split.r_hat)?);
        splits.push(split);
    }

    // Stage 2 on blocks 2..K+1 of every frame.
    let core = build_core_tensor(&stage1.b_tx, &stage1.b_rx, s_opt);
    let companion = pilot_companion(&stage1.a_tx, &design.stage2_pilots);
    let mut krf_nmse_w = Vec::with_capacity(config.frames);
    let mut tbt_nmse_w = Vec::with_capacity(config.frames);
    let mut bals_iterations = Vec::with_capacity(config.frames);
    let mut errors = 0u64;
    let mut bits = 0u64;
    let tp = config.pilot_len;
    for i in 1..=config.frames {
        let data = bpsk_data(
            config.ue_antennas,
            config.data_len,
            &mut streams.stream(i as u64, 0, Purpose::DataBits),
        );
        let mut pilot_blocks = Vec::with_capacity(config.blocks);
        let mut data_blocks = Vec::with_capacity(config.blocks);
        for k in 2..=config.blocks + 1 {
            let mut noise = streams.stream(i as u64, k as u64, Purpose::Noise);
            let y = synthesize_stage2(
                &channel,
                design,
                &data,
                s_opt,
                i,
                k,
                noise_vars[i - 1],
                &mut noise,
            );
            pilot_blocks.push(Matrix::from_fn(y.rows(), tp, |r, c| y[(r, c)]));
            data_blocks.push(Matrix::from_fn(y.rows(), config.data_len, |r, c| {
                y[(r, tp + c)]
            }));
        }
        let pilot_tensor = stack_received_blocks(&pilot_blocks);
        let data_tensor = stack_received_blocks(&data_blocks);

        let f_init = init_fading(&pilot_tensor, &core, &stage1.a_rx, &companion)?;
        let track = bals_detect(
            &data_tensor,
            &core,
            &stage1.a_rx,
            &stage1.a_tx,
            &f_init,
            &BalsOptions::default(),
        )?;
        errors += bit_errors(&demap_bpsk(&track.x_hat), &data.bits);
        bits += data.bits.len() as u64;
        bals_iterations.push(track.iterations);

        let w_static = splits[i - 1].effective_w(s_opt);
        let mut krf_frame = Vec::with_capacity(config.blocks);
        let mut tbt_frame = Vec::with_capacity(config.blocks);
        for k in 2..=config.blocks + 1 {
            let truth = channel.effective_w(i, k, s_opt);
            krf_frame.push(nmse(&truth, &w_static)?);
            let w_hat = reconstruct_w(
                &stage1.a_rx,
                &stage1.a_tx,
                &core.j,
                &track.f_hat.column(k - 2),
            );
            tbt_frame.push(nmse(&truth, &w_hat)?);
        }
        krf_nmse_w.push(krf_frame);
        tbt_nmse_w.push(tbt_frame);
    }

    Ok(RunRecord {
        run,
        ls_nmse_r,
        krf_nmse_r,
        parkron_nmse_r,
        krf_nmse_w,
        tbt_nmse_w,
        bit_errors: errors,
        bits,
        als_iterations: stage1.als_iterations,
        als_converged: stage1.als_converged,
        bals_iterations,
    })
}

/// Runs every Monte Carlo realization of one scenario point.
pub fn run_scenario(spec: &ExperimentSpec) -> Result<ScenarioResult, Error> {
    spec.config.validate()?;
    let design = design_training(&spec.config)?;
    let started = Instant::now();
    let outcomes: Vec<Result<RunRecord, Error>> = if spec.parallel {
        (0..spec.runs)
            .into_par_iter()
            .map(|r| simulate_run(&spec.config, &design, r, spec.noiseless))
            .collect()
    } else {
        (0..spec.runs)
            .map(|r| simulate_run(&spec.config, &design, r, spec.noiseless))
            .collect()
    };
    let mut records = Vec::with_capacity(spec.runs);
    let mut failures = Vec::new();
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((run, e.to_string())),
        }
    }
    Ok(ScenarioResult {
        records,
        failures,
        elapsed: started.elapsed(),
    })
}

/// One aggregated CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
}

fn flat_mean(values: &[Vec<f64>]) -> f64 {
    let flat: Vec<f64> = values.iter().flat_map(|v| v.iter().copied()).collect();
    pairwise_sum(&flat) / flat.len() as f64
}

/// Reduces per-run records into per-method metric rows. Linear NMSE values
/// are averaged across runs (convert to dB afterwards); BER is total errors
/// over total bits.
pub fn aggregate(
    spec: &ExperimentSpec,
    sweep_value: f64,
    result: &ScenarioResult,
) -> Vec<AggregateRow> {
    let name = spec.sweep.name().to_string();
    let records = &result.records;
    let n = records.len();
    let mut rows = Vec::new();
    if n == 0 {
        return rows;
    }
    let row = |method: Method, metric: &str, per_run: Vec<f64>, mean_override: Option<f64>| {
        let (mean, stderr) = mean_and_stderr(&per_run);
        AggregateRow {
            method,
            sweep_name: name.clone(),
            sweep_value,
            metric: metric.to_string(),
            mean: mean_override.unwrap_or(mean),
            stderr,
            runs: n,
        }
    };
    let frame_mean = |per_frame: &[f64]| {
        if spec.frame1_only {
            per_frame[0]
        } else {
            pairwise_sum(per_frame) / per_frame.len() as f64
        }
    };

    for &method in &spec.methods {
        match method {
            Method::Ls => {
                let v: Vec<f64> = records.iter().map(|r| frame_mean(&r.ls_nmse_r)).collect();
                rows.push(row(method, "nmse_r", v, None));
            }
            Method::Krf => {
                let v: Vec<f64> = records.iter().map(|r| frame_mean(&r.krf_nmse_r)).collect();
                rows.push(row(method, "nmse_r", v, None));
                let w: Vec<f64> = records.iter().map(|r| flat_mean(&r.krf_nmse_w)).collect();
                rows.push(row(method, "nmse_w", w, None));
            }
            Method::Parkron => {
                let v: Vec<f64> = records
                    .iter()
                    .map(|r| frame_mean(&r.parkron_nmse_r))
                    .collect();
                rows.push(row(method, "nmse_r", v, None));
                let w: Vec<f64> = records.iter().map(|r| flat_mean(&r.tbt_nmse_w)).collect();
                rows.push(row(method, "nmse_w", w, None));
                let per_run_ber: Vec<f64> = records
                    .iter()
                    .map(|r| r.bit_errors as f64 / r.bits as f64)
                    .collect();
                let total_errors: u64 = records.iter().map(|r| r.bit_errors).sum();
                let total_bits: u64 = records.iter().map(|r| r.bits).sum();
                rows.push(row(
                    method,
                    "ber",
                    per_run_ber,
                    Some(total_errors as f64 / total_bits as f64),
                ));
                let als: Vec<f64> = records.iter().map(|r| r.als_iterations as f64).collect();
                rows.push(row(method, "als_iterations", als, None));
                let bals: Vec<f64> = records
                    .iter()
                    .map(|r| {
                        pairwise_sum(&r.bals_iterations.iter().map(|&x| x as f64).collect::<Vec<_>>())
                            / r.bals_iterations.len() as f64
                    })
                    .collect();
                rows.push(row(method, "bals_iterations", bals, None));
            }
        }
    }
    rows
}

/// Derives the scenario configuration at one sweep point.
pub fn config_at(spec: &ExperimentSpec, value: f64) -> Result<SystemConfig, Error> {
    let mut cfg = spec.config.clone();
    match spec.sweep {
        SweepAxis::None => {}
        SweepAxis::SnrDb(_) => cfg.snr_db = value,
        SweepAxis::PilotLen(_) => {
            let total = cfg.pilot_len + cfg.data_len;
            let tp = value as usize;
            if tp >= total {
                return Err(Error::Config(format!(
                    "Tp = {tp} does not leave room for data in a block of {total}"
                )));
            }
            cfg.pilot_len = tp;
            cfg.data_len = total - tp;
        }
        SweepAxis::IrsElements(_) => {
            cfg = cfg.with_irs_elements(value as usize)?;
            cfg.stage1_len = cfg.ue_antennas * cfg.irs_elements;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of a full sweep: aggregated rows plus skipped points.
#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<AggregateRow>,
    pub skipped: Vec<(f64, String)>,
    pub failures: usize,
    pub runs_attempted: usize,
    pub elapsed: Duration,
}

/// Runs the scenario at every sweep value and aggregates each point.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutcome, Error> {
    let values: Vec<f64> = match &spec.sweep {
        SweepAxis::None => vec![spec.config.snr_db],
        SweepAxis::SnrDb(v) => v.clone(),
        SweepAxis::PilotLen(v) => v.iter().map(|&x| x as f64).collect(),
        SweepAxis::IrsElements(v) => v.iter().map(|&x| x as f64).collect(),
    };
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut failures = 0;
    let mut attempted = 0;
    for &value in &values {
        let point = match config_at(spec, value) {
            Ok(cfg) => ExperimentSpec {
                config: cfg,
                ..spec.clone()
            },
            Err(e) => {
                skipped.push((value, e.to_string()));
                continue;
            }
        };
        let result = match run_scenario(&point) {
            Ok(r) => r,
            Err(e) => {
                skipped.push((value, e.to_string()));
                continue;
            }
        };
        failures += result.failures.len();
        attempted += result.runs_attempted();
        rows.extend(aggregate(spec, value, &result));
    }
    Ok(SweepOutcome {
        rows,
        skipped,
        failures,
        runs_attempted: attempted,
        elapsed: started.elapsed(),
    })
}

/// Exact CSV header of `results.csv`.
pub const CSV_HEADER: &str = "method,sweep_name,sweep_value,metric,mean,stderr,runs";

/// Writes `results.csv` plus one plot-data file per (metric, method) with
/// `x mean stderr` lines. Emission is a pure function of the rows, so
/// identical rows produce byte-identical files.
pub fn emit_outputs(rows: &[AggregateRow], dir: &Path) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method, r.sweep_name, r.sweep_value, r.metric, r.mean, r.stderr, r.runs
        ));
    }
    let csv_path = dir.join("results.csv");
    std::fs::write(&csv_path, csv)?;
    written.push(csv_path);

    let mut pairs: Vec<(String, Method)> = rows
        .iter()
        .map(|r| (r.metric.clone(), r.method))
        .collect();
    pairs.sort();
    pairs.dedup();
    for (metric, method) in pairs {
        let mut body = String::new();
        for r in rows.iter().filter(|r| r.metric == metric && r.method == method) {
            body.push_str(&format!("{} {} {}\n", r.sweep_value, r.mean, r.stderr));
        }
        let path = dir.join(format!("plot_{metric}_{method}.dat"));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
