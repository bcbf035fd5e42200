//! Scenario configuration, geometric channel synthesis, double-timescale
//! AR(1) fading, training design, and received-signal generation.
//!
//! The protocol spans `I` frames of `K + 1` blocks each. Block 1 of every
//! frame carries stage-1 pilots over `T0` symbols through a time-varying IRS
//! pattern; blocks 2..K+1 carry `Tp` pilot and `Td` data symbols through the
//! configured IRS pattern. The BS-IRS channel is constant within a frame
//! while the IRS-UE channel changes every block.

use crate::rng::{Purpose, RunStreams, Stream};
use crate::tensor::{diag, khatri_rao, kron_vec, Matrix, C64};
use crate::Error;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

/// All scenario constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// M: BS receive antennas.
    pub bs_antennas: usize,
    /// Q: UE transmit antennas.
    pub ue_antennas: usize,
    /// N: IRS reflecting elements (= irs_rows * irs_cols).
    pub irs_elements: usize,
    /// N1: IRS panel rows.
    pub irs_rows: usize,
    /// N2: IRS panel columns.
    pub irs_cols: usize,
    /// L1: BS-IRS propagation paths.
    pub bs_irs_paths: usize,
    /// L2: IRS-UE propagation paths.
    pub irs_ue_paths: usize,
    /// T0: stage-1 block length in symbols.
    pub stage1_len: usize,
    /// Tp: stage-2 pilot symbols per block.
    pub pilot_len: usize,
    /// Td: stage-2 data symbols per block.
    pub data_len: usize,
    /// I: frames per run.
    pub frames: usize,
    /// K: stage-2 blocks per frame (the frame has K + 1 blocks in total).
    pub blocks: usize,
    /// delta: AR coefficient of the slow BS-IRS fading.
    pub bs_irs_corr: f64,
    /// lambda: AR coefficient of the fast IRS-UE fading.
    pub irs_ue_corr: f64,
    /// Training SNR in dB.
    pub snr_db: f64,
    /// Master seed for all substreams.
    pub seed: u64,
}

impl Default for SystemConfig {
    /// Reference scenario: M=2, Q=2, L1=L2=2, N=32 (8x4), T0=64, Tp=16,
    /// Td=48, I=2, K=5, delta=lambda=0.75, 30 dB.
    fn default() -> Self {
        SystemConfig {
            bs_antennas: 2,
            ue_antennas: 2,
            irs_elements: 32,
            irs_rows: 8,
            irs_cols: 4,
            bs_irs_paths: 2,
            irs_ue_paths: 2,
            stage1_len: 64,
            pilot_len: 16,
            data_len: 48,
            frames: 2,
            blocks: 5,
            bs_irs_corr: 0.75,
            irs_ue_corr: 0.75,
            snr_db: 30.0,
            seed: 1,
        }
    }
}

/// Near-square, power-of-two-friendly panel split: N1 = 2^ceil(log2 sqrt(N)).
pub fn default_panel_split(n: usize) -> Option<(usize, usize)> {
    let mut n1 = 1usize;
    while (n1 * n1) < n {
        n1 *= 2;
    }
    if n % n1 == 0 {
        Some((n1, n / n1))
    } else {
        None
    }
}

impl SystemConfig {
    /// Combined path count L1 * L2.
    pub fn combined_paths(&self) -> usize {
        self.bs_irs_paths * self.irs_ue_paths
    }

    /// Checks every structural invariant and identifiability condition.
    pub fn validate(&self) -> Result<(), Error> {
        let c = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        let (m, q, n) = (self.bs_antennas, self.ue_antennas, self.irs_elements);
        let (l1, l2) = (self.bs_irs_paths, self.irs_ue_paths);
        let ll = l1 * l2;
        c(
            m > 0 && q > 0 && n > 0 && l1 > 0 && l2 > 0,
            "M, Q, N, L1, L2 must be positive",
        )?;
        c(
            self.stage1_len > 0
                && self.pilot_len > 0
                && self.data_len > 0
                && self.frames > 0
                && self.blocks > 0,
            "T0, Tp, Td, I, K must be positive",
        )?;
        c(self.irs_rows * self.irs_cols == n, "N1 * N2 must equal N")?;
        c(
            (0.0..=1.0).contains(&self.bs_irs_corr) && (0.0..=1.0).contains(&self.irs_ue_corr),
            "delta and lambda must lie in [0, 1]",
        )?;
        c(
            self.stage1_len >= q * n,
            "T0 >= Q*N is required for LS identifiability",
        )?;
        c(
            q * n * self.frames >= ll && q * m * self.frames >= ll && q * m * n >= ll,
            "ALS uniqueness needs QNI, QMI, QMN >= L1*L2",
        )?;
        c(
            m * self.pilot_len >= ll,
            "M*Tp >= L1*L2 is required for fading initialization",
        )?;
        c(m * self.blocks >= q, "M*K >= Q is required for symbol detection")?;
        c(
            m * self.data_len >= ll,
            "M*Td >= L1*L2 is required for fading refinement",
        )?;
        c(q <= self.pilot_len, "Q <= Tp is required for orthogonal pilot rows")?;
        Ok(())
    }

    /// Parses a flat key/value configuration ("key = value" lines, `#`
    /// comments). Unset keys keep their defaults; N1/N2 are derived from N
    /// when not given.
    pub fn parse_str(text: &str) -> Result<Self, Error> {
        let mut cfg = SystemConfig::default();
        let mut panel_set = false;
        let mut n_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let as_usize = || -> Result<usize, Error> {
                value
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad integer '{value}'")))
            };
            let as_f64 = || -> Result<f64, Error> {
                value
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad number '{value}'")))
            };
            match key {
                "M" => cfg.bs_antennas = as_usize()?,
                "Q" => cfg.ue_antennas = as_usize()?,
                "N" => {
                    cfg.irs_elements = as_usize()?;
                    n_set = true;
                }
                "N1" => {
                    cfg.irs_rows = as_usize()?;
                    panel_set = true;
                }
                "N2" => {
                    cfg.irs_cols = as_usize()?;
                    panel_set = true;
                }
                "L1" => cfg.bs_irs_paths = as_usize()?,
                "L2" => cfg.irs_ue_paths = as_usize()?,
                "T0" => cfg.stage1_len = as_usize()?,
                "Tp" => cfg.pilot_len = as_usize()?,
                "Td" => cfg.data_len = as_usize()?,
                "I" => cfg.frames = as_usize()?,
                "K" => cfg.blocks = as_usize()?,
                "delta" => cfg.bs_irs_corr = as_f64()?,
                "lambda" => cfg.irs_ue_corr = as_f64()?,
                "snr_db" => cfg.snr_db = as_f64()?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| Error::Config(format!("seed: bad integer '{value}'")))?
                }
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        if n_set && !panel_set {
            let (n1, n2) = default_panel_split(cfg.irs_elements).ok_or_else(|| {
                Error::Config(format!(
                    "no default N1 x N2 split for N = {}; set N1 and N2 explicitly",
                    cfg.irs_elements
                ))
            })?;
            cfg.irs_rows = n1;
            cfg.irs_cols = n2;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Applies the default panel split after changing N.
    pub fn with_irs_elements(mut self, n: usize) -> Result<Self, Error> {
        let (n1, n2) = default_panel_split(n)
            .ok_or_else(|| Error::Config(format!("no default panel split for N = {n}")))?;
        self.irs_elements = n;
        self.irs_rows = n1;
        self.irs_cols = n2;
        Ok(self)
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} Q={} N={} ({}x{}) L1={} L2={} T0={} Tp={} Td={} I={} K={} delta={} lambda={} snr={} dB seed={}",
            self.bs_antennas,
            self.ue_antennas,
            self.irs_elements,
            self.irs_rows,
            self.irs_cols,
            self.bs_irs_paths,
            self.irs_ue_paths,
            self.stage1_len,
            self.pilot_len,
            self.data_len,
            self.frames,
            self.blocks,
            self.bs_irs_corr,
            self.irs_ue_corr,
            self.snr_db,
            self.seed
        )
    }
}

/// Uniform linear array response for spatial frequency `mu`: entry m is
/// `exp(-j m mu)` (0-based), so the first entry is always 1.
pub fn ula_steering(mu: f64, size: usize) -> Vec<C64> {
    assert!(size >= 1);
    (0..size)
        .map(|m| C64::from_polar(1.0, -(m as f64) * mu))
        .collect()
}

/// Uniform rectangular array response: Kronecker product of the two 1-D
/// responses, length n1 * n2.
pub fn ura_steering(mu: f64, psi: f64, n1: usize, n2: usize) -> Vec<C64> {
    kron_vec(&ula_steering(mu, n1), &ula_steering(psi, n2))
}

/// Angles drawn for one realization.
#[derive(Clone, Debug)]
pub struct GeometryParams {
    /// AoA at the BS per BS-IRS path (radians).
    pub phi_bs: Vec<f64>,
    /// AoD at the UE per IRS-UE path.
    pub phi_ue: Vec<f64>,
    /// (azimuth, elevation) AoA at the IRS per IRS-UE path.
    pub irs_aoa: Vec<(f64, f64)>,
    /// (azimuth, elevation) AoD at the IRS per BS-IRS path.
    pub irs_aod: Vec<(f64, f64)>,
}

impl GeometryParams {
    /// BS/UE angles uniform on [-pi, pi]; IRS angles uniform on [-pi/2, pi/2].
    pub fn draw(config: &SystemConfig, stream: &mut Stream) -> Self {
        let l1 = config.bs_irs_paths;
        let l2 = config.irs_ue_paths;
        GeometryParams {
            phi_bs: (0..l1).map(|_| stream.uniform(-PI, PI)).collect(),
            phi_ue: (0..l2).map(|_| stream.uniform(-PI, PI)).collect(),
            irs_aoa: (0..l2)
                .map(|_| {
                    (
                        stream.uniform(-PI / 2.0, PI / 2.0),
                        stream.uniform(-PI / 2.0, PI / 2.0),
                    )
                })
                .collect(),
            irs_aod: (0..l1)
                .map(|_| {
                    (
                        stream.uniform(-PI / 2.0, PI / 2.0),
                        stream.uniform(-PI / 2.0, PI / 2.0),
                    )
                })
                .collect(),
        }
    }

    /// mu = pi cos(phi) for the linear arrays.
    pub fn mu_bs(&self) -> Vec<f64> {
        self.phi_bs.iter().map(|p| PI * p.cos()).collect()
    }

    pub fn mu_ue(&self) -> Vec<f64> {
        self.phi_ue.iter().map(|p| PI * p.cos()).collect()
    }

    /// (mu, psi) = (pi cos(az) sin(el), pi cos(az)) for the planar array.
    fn irs_freqs(angles: &[(f64, f64)]) -> Vec<(f64, f64)> {
        angles
            .iter()
            .map(|&(az, el)| (PI * az.cos() * el.sin(), PI * az.cos()))
            .collect()
    }

    /// Materializes the four steering matrices.
    pub fn steering(&self, config: &SystemConfig) -> SteeringSet {
        let m = config.bs_antennas;
        let q = config.ue_antennas;
        let (n1, n2) = (config.irs_rows, config.irs_cols);
        let a_rx = Matrix::from_columns(
            &self
                .mu_bs()
                .iter()
                .map(|&mu| ula_steering(mu, m))
                .collect::<Vec<_>>(),
        );
        let a_tx = Matrix::from_columns(
            &self
                .mu_ue()
                .iter()
                .map(|&mu| ula_steering(mu, q))
                .collect::<Vec<_>>(),
        );
        let b_rx = Matrix::from_columns(
            &Self::irs_freqs(&self.irs_aoa)
                .iter()
                .map(|&(mu, psi)| ura_steering(mu, psi, n1, n2))
                .collect::<Vec<_>>(),
        );
        let b_tx = Matrix::from_columns(
            &Self::irs_freqs(&self.irs_aod)
                .iter()
                .map(|&(mu, psi)| ura_steering(mu, psi, n1, n2))
                .collect::<Vec<_>>(),
        );
        SteeringSet {
            a_rx,
            a_tx,
            b_rx,
            b_tx,
        }
    }
}

/// The four array-response matrices of one realization.
#[derive(Clone, Debug)]
pub struct SteeringSet {
    /// M x L1, BS receive.
    pub a_rx: Matrix,
    /// Q x L2, UE transmit.
    pub a_tx: Matrix,
    /// N x L2, IRS receive.
    pub b_rx: Matrix,
    /// N x L1, IRS transmit.
    pub b_tx: Matrix,
}

/// Fading coefficients for every frame and block.
#[derive(Clone, Debug)]
pub struct FadingTrajectory {
    /// alpha[i]: BS-IRS coefficients of frame i+1 (length L1).
    pub alpha: Vec<Vec<C64>>,
    /// beta[i][k]: IRS-UE coefficients of frame i+1, block k+1 (length L2);
    /// each frame has K + 1 blocks.
    pub beta: Vec<Vec<Vec<C64>>>,
}

/// Runs the two AR(1) recursions. Coefficients start from CN(0, 1), slow
/// innovations have variance (1 - delta^2), fast ones (1 - lambda^2), and
/// the fast chain restarts each frame from block K of the previous frame.
pub fn evolve_fading(config: &SystemConfig, streams: &RunStreams) -> FadingTrajectory {
    let l1 = config.bs_irs_paths;
    let l2 = config.irs_ue_paths;
    let delta = config.bs_irs_corr;
    let lambda = config.irs_ue_corr;
    let blocks = config.blocks + 1;

    let mut alpha = Vec::with_capacity(config.frames);
    let mut prev_alpha = streams.stream(0, 0, Purpose::AlphaFading).cn_vector(l1, 1.0);
    for i in 1..=config.frames {
        let mut s = streams.stream(i as u64, 0, Purpose::AlphaFading);
        let innov = s.cn_vector(l1, 1.0 - delta * delta);
        let cur: Vec<C64> = prev_alpha
            .iter()
            .zip(&innov)
            .map(|(a, z)| a * delta + z)
            .collect();
        alpha.push(cur.clone());
        prev_alpha = cur;
    }

    let mut beta = Vec::with_capacity(config.frames);
    // The chain seed plays the role of block K of a fictitious frame 0.
    let mut boundary = streams.stream(0, 0, Purpose::BetaFading).cn_vector(l2, 1.0);
    for i in 1..=config.frames {
        let mut frame = Vec::with_capacity(blocks);
        let mut prev = boundary.clone();
        for k in 1..=blocks {
            let mut s = streams.stream(i as u64, k as u64, Purpose::BetaFading);
            let innov = s.cn_vector(l2, 1.0 - lambda * lambda);
            let cur: Vec<C64> = prev.iter().zip(&innov).map(|(b, z)| b * lambda + z).collect();
            if k == config.blocks {
                boundary = cur.clone();
            }
            frame.push(cur.clone());
            prev = cur;
        }
        beta.push(frame);
    }

    FadingTrajectory { alpha, beta }
}

/// Steering matrices plus the materialized per-frame and per-block channels.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub steering: SteeringSet,
    /// g[i]: M x N BS-IRS channel of frame i+1.
    pub g: Vec<Matrix>,
    /// h[i][k]: N x Q IRS-UE channel of frame i+1, block k+1.
    pub h: Vec<Vec<Matrix>>,
    pub fading: FadingTrajectory,
}

/// Materializes G_i = A_rx D(alpha_i) B_tx^H and H_{i,k} = B_rx D(beta_{i,k}) A_tx^H.
pub fn realize_channels(
    geometry: &GeometryParams,
    fading: &FadingTrajectory,
    config: &SystemConfig,
) -> ChannelRealization {
    let steering = geometry.steering(config);
    let b_tx_h = steering.b_tx.hermitian();
    let a_tx_h = steering.a_tx.hermitian();
    let g: Vec<Matrix> = fading
        .alpha
        .iter()
        .map(|a| steering.a_rx.mul(&diag(a)).mul(&b_tx_h))
        .collect();
    let h: Vec<Vec<Matrix>> = fading
        .beta
        .iter()
        .map(|frame| {
            frame
                .iter()
                .map(|b| steering.b_rx.mul(&diag(b)).mul(&a_tx_h))
                .collect()
        })
        .collect();
    ChannelRealization {
        steering,
        g,
        h,
        fading: fading.clone(),
    }
}

impl ChannelRealization {
    /// Combined stage-1 channel R_i = H_{i,1}^T krp G_i (frames 1-based).
    pub fn combined_r(&self, frame: usize) -> Matrix {
        khatri_rao(&self.h[frame - 1][0].transpose(), &self.g[frame - 1])
    }

    /// Effective stage-2 channel W_{i,k} = G_i D(s) H_{i,k} (frame and block
    /// 1-based; blocks 2..K+1 carry data).
    pub fn effective_w(&self, frame: usize, block: usize, s_opt: &[C64]) -> Matrix {
        self.g[frame - 1]
            .mul(&diag(s_opt))
            .mul(&self.h[frame - 1][block - 1])
    }
}

/// Deterministic training design: IRS patterns and pilots.
#[derive(Clone, Debug)]
pub struct TrainingDesign {
    /// S: N x T0 stage-1 IRS phase patterns, unit modulus.
    pub irs_patterns: Matrix,
    /// Z: Q x T0 stage-1 pilot sequences.
    pub stage1_pilots: Matrix,
    /// Xp: Q x Tp stage-2 pilots with orthogonal rows.
    pub stage2_pilots: Matrix,
    /// Pseudoinverse of (S krp Z)^T, cached for the combined-channel LS.
    pub combined_pinv: Matrix,
}

fn dft_entry(freq: usize, t: usize, len: usize) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * (freq as f64) * (t as f64) / len as f64)
}

fn hadamard_entry(q: usize, t: usize) -> C64 {
    C64::new(if (q & t).count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
}

/// Builds S from the first N rows of the T0-point DFT, Z from Hadamard rows
/// when T0 is a power of two (DFT rows spaced by N otherwise), and Xp from
/// Hadamard or DFT rows of length Tp. Fails if (S krp Z)^T does not reach
/// full column rank Q*N.
pub fn design_training(config: &SystemConfig) -> Result<TrainingDesign, Error> {
    let n = config.irs_elements;
    let q = config.ue_antennas;
    let t0 = config.stage1_len;
    if t0 < q * n {
        return Err(Error::Config(format!("T0 = {t0} < Q*N = {}", q * n)));
    }

    let irs_patterns = Matrix::from_fn(n, t0, |r, c| dft_entry(r, c, t0));

    let dft_z = || Matrix::from_fn(q, t0, |r, c| dft_entry(r * n, c, t0));
    let mut stage1_pilots = if t0.is_power_of_two() {
        Matrix::from_fn(q, t0, hadamard_entry)
    } else {
        dft_z()
    };

    let rank_of =
        |z: &Matrix| khatri_rao(&irs_patterns, z).transpose().numerical_rank(1e-10);
    if rank_of(&stage1_pilots) < q * n {
        // Hadamard selection failed for this geometry; DFT rows spaced by N
        // are orthogonal by construction.
        stage1_pilots = dft_z();
        let rank = rank_of(&stage1_pilots);
        if rank < q * n {
            return Err(Error::RankDeficient {
                what: "(S krp Z)^T".into(),
                rank,
                needed: q * n,
            });
        }
    }

    let tp = config.pilot_len;
    if q > tp {
        return Err(Error::Config(format!("Q = {q} > Tp = {tp}")));
    }
    let stage2_pilots = if tp.is_power_of_two() {
        Matrix::from_fn(q, tp, hadamard_entry)
    } else {
        Matrix::from_fn(q, tp, |r, c| dft_entry(r, c, tp))
    };

    let combined_pinv = khatri_rao(&irs_patterns, &stage1_pilots).transpose().pinv();

    Ok(TrainingDesign {
        irs_patterns,
        stage1_pilots,
        stage2_pilots,
        combined_pinv,
    })
}

/// BPSK data block: bit 0 maps to +1, bit 1 to -1.
#[derive(Clone, Debug)]
pub struct DataBlock {
    /// Row-major bits, Q rows of Td bits.
    pub bits: Vec<u8>,
    /// Q x Td symbol matrix.
    pub symbols: Matrix,
}

pub fn bpsk_data(q: usize, td: usize, stream: &mut Stream) -> DataBlock {
    let bits: Vec<u8> = (0..q * td).map(|_| stream.next_bit()).collect();
    let symbols = Matrix::from_fn(q, td, |r, c| {
        C64::new(if bits[r * td + c] == 0 { 1.0 } else { -1.0 }, 0.0)
    });
    DataBlock { bits, symbols }
}

/// Adds circularly-symmetric noise of the given per-sample variance.
fn add_awgn(y: &mut Matrix, variance: f64, stream: &mut Stream) {
    if variance <= 0.0 {
        return;
    }
    let noisy = Matrix::from_fn(y.rows(), y.cols(), |r, c| {
        y[(r, c)] + stream.next_cn(variance)
    });
    *y = noisy;
}

/// Stage-1 received block of one frame: column t is
/// `G_i D(s_t) H_{i,1} z_t + v_t`, so `vec` of the returned M x T0 matrix is
/// the stacked stage-1 observation. The noise variance is calibrated so the
/// per-sample training SNR equals `snr_db` for this realization; it is
/// returned so the frame's later blocks can reuse the same noise level.
pub fn synthesize_stage1(
    channel: &ChannelRealization,
    design: &TrainingDesign,
    frame: usize,
    snr_db: Option<f64>,
    noise: &mut Stream,
) -> (Matrix, f64) {
    let g = &channel.g[frame - 1];
    let h = &channel.h[frame - 1][0];
    let t0 = design.irs_patterns.cols();
    let mut y = Matrix::zeros(g.rows(), t0);
    for t in 0..t0 {
        let s_t = design.irs_patterns.column(t);
        let z_t = design.stage1_pilots.column(t);
        let hz = h.mul_vec(&z_t);
        let col = g.mul(&diag(&s_t)).mul_vec(&hz);
        y.set_column(t, &col);
    }
    let variance = match snr_db {
        None => 0.0,
        Some(snr) => {
            let mean_power =
                y.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / y.data().len() as f64;
            mean_power / 10f64.powf(snr / 10.0)
        }
    };
    add_awgn(&mut y, variance, noise);
    (y, variance)
}

/// Stage-2 received block k of one frame:
/// `G_i D(s_opt) H_{i,k} [Xp | Xd] + V`, M x (Tp + Td). The noise variance
/// is the one calibrated on the frame's training block, so the configured
/// IRS keeps its beamforming gain relative to the noise floor.
pub fn synthesize_stage2(
    channel: &ChannelRealization,
    design: &TrainingDesign,
    data: &DataBlock,
    s_opt: &[C64],
    frame: usize,
    block: usize,
    noise_variance: f64,
    noise: &mut Stream,
) -> Matrix {
    debug_assert!(block >= 2);
    let w = channel.effective_w(frame, block, s_opt);
    let tp = design.stage2_pilots.cols();
    let td = data.symbols.cols();
    let mut x = Matrix::zeros(w.cols(), tp + td);
    for c in 0..tp {
        x.set_column(c, &design.stage2_pilots.column(c));
    }
    for c in 0..td {
        x.set_column(tp + c, &data.symbols.column(c));
    }
    let mut y = w.mul(&x);
    add_awgn(&mut y, noise_variance, noise);
    y
}
