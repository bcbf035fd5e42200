//! Stage 1: pilot-based estimation of the static channel geometry and IRS
//! phase-shift configuration.
//!
//! Pipeline per run: a structural LS inverts the stage-1 observations into
//! per-frame combined channels, the frames are stacked into a 4-way tensor,
//! a constrained alternating-least-squares loop (with the BS steering matrix
//! known and held fixed) recovers the UE steering matrix, the combined IRS
//! factor, and the per-frame fading, Khatri-Rao/Kronecker rank-1 splits peel
//! the IRS factor and fading apart, and the IRS phases are read off the
//! dominant right singular vector of the rebuilt frame-1 combined channel.
//!
//! Column ordering of the combined path dimension is p = l2 * L1 + l1
//! (0-based, BS-IRS path fastest), the ordering induced by f_i = beta_i kron
//! alpha_i.

use crate::channel::{SystemConfig, TrainingDesign};
use crate::rng::Stream;
use crate::tensor::{
    diag, khatri_rao_excluding, kron, Matrix, Tensor, C64,
};
use crate::Error;

/// Combined-channel LS estimate for one frame.
#[derive(Clone, Debug)]
pub struct CombinedChannelEstimate {
    /// Stacked estimate, length M*Q*N.
    pub u_hat: Vec<C64>,
    /// MQ x N reshaped estimate.
    pub r: Matrix,
}

/// Structural LS inversion of one stage-1 block: `u = [(S krp Z)^T]+ vec-wise
/// applied to Y`, never materializing the MT0 x MQN regression matrix.
pub fn estimate_combined(
    y: &Matrix,
    design: &TrainingDesign,
    config: &SystemConfig,
) -> Result<CombinedChannelEstimate, Error> {
    let m = config.bs_antennas;
    let q = config.ue_antennas;
    let n = config.irs_elements;
    assert_eq!(y.rows(), m, "received block must have M rows");
    assert_eq!(y.cols(), config.stage1_len, "received block must have T0 columns");
    // (P+ kron I_M) vec(Y) == vec(Y (P+)^T) with P = (S krp Z)^T.
    let u_mat = y.mul(&design.combined_pinv.transpose());
    let u_hat = u_mat.vec();
    let r = Matrix::unvec(&u_hat, m * q, n);
    Ok(CombinedChannelEstimate { u_hat, r })
}

/// Stacks per-frame MQ x N combined channels into an M x Q x N x I tensor;
/// entry (m, q, n, i) is R_i(q*M + m, n).
pub fn assemble_r_tensor(rs: &[Matrix], m: usize, q: usize) -> Tensor {
    assert!(!rs.is_empty(), "need at least one frame");
    let n = rs[0].cols();
    assert_eq!(rs[0].rows(), m * q, "R_i must be MQ x N");
    let mut data = Vec::with_capacity(m * q * n * rs.len());
    for r in rs {
        assert_eq!(
            (r.rows(), r.cols()),
            (m * q, n),
            "all frames must share the MQ x N shape"
        );
        // The (m, q, n) linearization of one slice coincides with the
        // column-major MQ x N buffer.
        data.extend_from_slice(r.data());
    }
    Tensor::from_data(&[m, q, n, rs.len()], data)
}

/// Replication matrix for the mode-0 factor: picks the BS-IRS path index
/// out of p = l2 * L1 + l1.
pub fn bs_path_selector(l1: usize, l2: usize) -> Matrix {
    Matrix::from_fn(l1, l1 * l2, |r, p| {
        C64::new(if p % l1 == r { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Replication matrix for the mode-1 factor: picks the IRS-UE path index.
pub fn ue_path_selector(l1: usize, l2: usize) -> Matrix {
    Matrix::from_fn(l2, l1 * l2, |r, p| {
        C64::new(if p / l1 == r { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Stopping rule and restart count for the alternating LS loop.
#[derive(Clone, Copy, Debug)]
pub struct AlsOptions {
    /// Stop when the relative residual decrease falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Random restarts; the lowest-residual run wins.
    pub restarts: usize,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            tol: 1e-6,
            max_iter: 100,
            restarts: 3,
        }
    }
}

/// Output of the constrained alternating LS.
#[derive(Clone, Debug)]
pub struct AlsOutcome {
    /// Q x L2 UE steering estimate (unnormalized).
    pub a_tx: Matrix,
    /// N x L1L2 combined IRS factor (mode-2 factor of the tensor).
    pub p_b: Matrix,
    /// I x L1L2 combined fading estimate.
    pub f: Matrix,
    pub iterations: usize,
    /// Relative residual after the initialization and after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone)]
struct AlsState {
    a_tx: Matrix,
    p_b: Matrix,
    f: Matrix,
}

impl AlsState {
    fn lerp(&self, to: &AlsState, step: f64) -> AlsState {
        let s = C64::new(step, 0.0);
        AlsState {
            a_tx: self.a_tx.add(&to.a_tx.sub(&self.a_tx).scale(s)),
            p_b: self.p_b.add(&to.p_b.sub(&self.p_b).scale(s)),
            f: self.f.add(&to.f.sub(&self.f).scale(s)),
        }
    }

    fn is_finite(&self) -> bool {
        self.a_tx.is_finite() && self.p_b.is_finite() && self.f.is_finite()
    }
}

fn als_effective_factors(fixed_mode0: &Matrix, phi_ue: &Matrix, st: &AlsState) -> [Matrix; 4] {
    [
        fixed_mode0.clone(),
        st.a_tx.conj().mul(phi_ue),
        st.p_b.clone(),
        st.f.clone(),
    ]
}

fn als_residual(tensor: &Tensor, factors: &[Matrix; 4], norm: f64) -> f64 {
    let refs: Vec<&Matrix> = factors.iter().collect();
    let w = khatri_rao_excluding(&refs, 0);
    let rec = factors[0].mul(&w.transpose());
    let diff = tensor.unfold(0).sub(&rec).fro_norm();
    diff / norm
}

/// Closed-form eigendecomposition of a 2x2 complex matrix; returns the two
/// eigenvector columns, or None when the matrix is (nearly) defective.
fn eig2(m: &Matrix) -> Option<Matrix> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    let scale = l1.norm().max(l2.norm()).max(1e-300);
    if (l1 - l2).norm() < 1e-9 * scale {
        return None;
    }
    let mut out = Matrix::zeros(2, 2);
    for (col, lambda) in [l1, l2].into_iter().enumerate() {
        // Rows of (M - lambda I) are proportional; pick the larger residual row.
        let v1 = [b, lambda - a];
        let v2 = [lambda - d, c];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        let v = if n1 >= n2 { v1 } else { v2 };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n < 1e-12 {
            return None;
        }
        out[(0, col)] = v[0] / n;
        out[(1, col)] = v[1] / n;
    }
    Some(out)
}

/// Algebraic warm start for the constrained decomposition when L2 == 2:
/// the known BS factor is stripped off with a pseudoinverse, deterministic
/// slab combinations form a matrix pencil whose eigenvectors recover the UE
/// steering columns, and rank-1 splits of the stripped slabs seed the
/// combined IRS and fading factors. Exact (up to conditioning) on noiseless
/// data, which keeps the alternating refinement out of its slow-progress
/// regime.
fn algebraic_init(
    r_tensor: &Tensor,
    a_rx: &Matrix,
    l1: usize,
    l2: usize,
) -> Option<AlsState> {
    if l2 != 2 {
        return None;
    }
    let [m, q, n, frames] = match *r_tensor.shape() {
        [a, b, c, d] => [a, b, c, d],
        _ => return None,
    };
    if q < l2 || frames < 2 {
        return None;
    }
    let ll = l1 * l2;
    let a_rx_pinv = a_rx.pinv();

    // Stripped slabs: S[i][j] (Q x N) = A_tx* D_{i,j} P_j^T for BS path j.
    let mq = m * q;
    let mut slabs: Vec<Vec<Matrix>> = Vec::with_capacity(frames);
    for i in 0..frames {
        let slice = Matrix::from_data(
            m,
            q * n,
            r_tensor.data()[i * mq * n..(i + 1) * mq * n].to_vec(),
        );
        let stripped = a_rx_pinv.mul(&slice); // L1 x (QN), q fastest
        let mut per_path = Vec::with_capacity(l1);
        for j in 0..l1 {
            per_path.push(Matrix::from_fn(q, n, |qq, nn| stripped[(j, nn * q + qq)]));
        }
        slabs.push(per_path);
    }

    // Pencil per BS path from two deterministic slab combinations; keep the
    // path with the best-separated eigenvalues.
    let mut best: Option<(f64, Matrix, usize)> = None;
    for j in 0..l1 {
        let mut sa = Matrix::zeros(q, n);
        let mut sb = Matrix::zeros(q, n);
        for i in 0..frames {
            sa = sa.add(&slabs[i][j]);
            sb = sb.add(&slabs[i][j].scale(C64::new(1.0 + i as f64, 0.0)));
        }
        let pencil = sa.mul(&sb.pinv());
        // Project onto the dominant 2-dimensional column space.
        let svd = sb.svd();
        if svd.sigma.len() < 2 || svd.sigma[1] <= 1e-10 * svd.sigma[0] {
            continue;
        }
        let basis = Matrix::from_fn(q, 2, |r, c| svd.u[(r, c)]);
        let reduced = basis.hermitian().mul(&pencil).mul(&basis);
        let Some(eigvecs) = eig2(&reduced) else { continue };
        let cand = basis.mul(&eigvecs); // columns ~ A_tx* columns
        let sep = {
            let (a, b, c, d) = (
                reduced[(0, 0)],
                reduced[(0, 1)],
                reduced[(1, 0)],
                reduced[(1, 1)],
            );
            let disc = ((a - d) * 0.5).powi(2) + b * c;
            2.0 * disc.sqrt().norm() / (a + d).norm().max(1e-300)
        };
        if best.as_ref().is_none_or(|(s, _, _)| sep > *s) {
            best = Some((sep, cand, j));
        }
    }
    let (_, a_tx_conj, _) = best?;

    // Strip the UE factor and split each (frame x element) sheet, which is
    // rank-1 per combined path, into fading and IRS columns.
    let a_tx_conj_pinv = a_tx_conj.pinv();
    let mut p_b = Matrix::zeros(n, ll);
    let mut f = Matrix::zeros(frames, ll);
    for j in 0..l1 {
        for l in 0..l2 {
            let p = l * l1 + j;
            let mut sheet = Matrix::zeros(frames, n);
            for i in 0..frames {
                let rows = a_tx_conj_pinv.mul(&slabs[i][j]); // L2 x N
                for nn in 0..n {
                    sheet[(i, nn)] = rows[(l, nn)];
                }
            }
            let (u, sigma, v) = sheet.dominant_singular_triplet().ok()?;
            for i in 0..frames {
                f[(i, p)] = u[i] * sigma;
            }
            for nn in 0..n {
                p_b[(nn, p)] = v[nn].conj();
            }
        }
    }

    let st = AlsState {
        a_tx: a_tx_conj.conj(),
        p_b,
        f,
    };
    st.is_finite().then_some(st)
}

/// Alternating exact-LS recovery of (A_tx, P_B, F) with the mode-0 factor
/// fixed at `a_rx` through its replication structure. The residual is
/// non-increasing across iterations because every update is the exact LS
/// minimizer of the shared objective.
pub fn constrained_cp_als(
    r_tensor: &Tensor,
    a_rx: &Matrix,
    config: &SystemConfig,
    options: &AlsOptions,
    init: &mut Stream,
) -> Result<AlsOutcome, Error> {
    let [m, q, n, frames] = match *r_tensor.shape() {
        [a, b, c, d] => [a, b, c, d],
        _ => return Err(Error::Precondition("combined tensor must be 4-way".into())),
    };
    let l1 = config.bs_irs_paths;
    let l2 = config.irs_ue_paths;
    let ll = l1 * l2;
    if q * n * frames < ll || q * m * frames < ll || q * m * n < ll {
        return Err(Error::Precondition(format!(
            "uniqueness conditions violated: QNI={} QMI={} QMN={} < L1L2={ll}",
            q * n * frames,
            q * m * frames,
            q * m * n
        )));
    }
    assert_eq!((a_rx.rows(), a_rx.cols()), (m, l1), "A_rx must be M x L1");

    let phi_bs = bs_path_selector(l1, l2);
    let phi_ue = ue_path_selector(l1, l2);
    let fixed_mode0 = a_rx.mul(&phi_bs);
    let norm = r_tensor.fro_norm();
    if norm == 0.0 {
        return Err(Error::ZeroInput("combined tensor is zero".into()));
    }
    let unfold1 = r_tensor.unfold(1);
    let unfold2 = r_tensor.unfold(2);
    let unfold3 = r_tensor.unfold(3);

    // Extrapolation candidates tried after each sweep; kept only when they
    // lower the residual, so the recorded trajectory stays non-increasing.
    const EXTRAPOLATION_STEPS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

    let warm_start = algebraic_init(r_tensor, a_rx, l1, l2);
    let mut best: Option<AlsOutcome> = None;
    for restart in 0..options.restarts.max(1) {
        let mut st = match (restart, &warm_start) {
            (0, Some(ws)) => ws.clone(),
            _ => AlsState {
                a_tx: Matrix::from_fn(q, l2, |_, _| init.next_cn(1.0)),
                p_b: Matrix::from_fn(n, ll, |_, _| init.next_cn(1.0)),
                f: Matrix::from_fn(frames, ll, |_, _| init.next_cn(1.0)),
            },
        };
        let eval = |cand: &AlsState| {
            als_residual(
                r_tensor,
                &als_effective_factors(&fixed_mode0, &phi_ue, cand),
                norm,
            )
        };
        let mut residuals = vec![eval(&st)];
        let mut converged = false;
        let mut iterations = 0;

        for _iter in 0..options.max_iter {
            let previous = st.clone();
            let mut factors = als_effective_factors(&fixed_mode0, &phi_ue, &st);
            // UE steering: exact LS over the replicated family.
            {
                let refs: Vec<&Matrix> = factors.iter().collect();
                let w = khatri_rao_excluding(&refs, 1);
                let lifted = phi_ue.mul(&w.transpose());
                st.a_tx = unfold1.mul(&lifted.pinv()).conj();
                factors[1] = st.a_tx.conj().mul(&phi_ue);
            }
            // Combined IRS factor.
            {
                let refs: Vec<&Matrix> = factors.iter().collect();
                let w = khatri_rao_excluding(&refs, 2);
                st.p_b = unfold2.mul(&w.transpose().pinv());
                factors[2] = st.p_b.clone();
            }
            // Combined fading.
            {
                let refs: Vec<&Matrix> = factors.iter().collect();
                let w = khatri_rao_excluding(&refs, 3);
                st.f = unfold3.mul(&w.transpose().pinv());
            }
            if !st.is_finite() {
                return Err(Error::Numerical("alternating LS diverged".into()));
            }
            let mut res = eval(&st);
            for step in EXTRAPOLATION_STEPS {
                let cand = previous.lerp(&st, step);
                if !cand.is_finite() {
                    continue;
                }
                let cand_res = eval(&cand);
                if cand_res < res {
                    res = cand_res;
                    st = cand;
                }
            }
            iterations += 1;
            let prev = *residuals.last().unwrap();
            residuals.push(res);
            if res <= 1e-13 || prev - res <= options.tol * prev.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }

        let outcome = AlsOutcome {
            a_tx: st.a_tx,
            p_b: st.p_b,
            f: st.f,
            iterations,
            residuals,
            converged,
        };
        let better = match &best {
            None => true,
            Some(b) => outcome.residuals.last().unwrap() < b.residuals.last().unwrap(),
        };
        if better {
            best = Some(outcome);
        }
        // A numerically clean fit cannot be improved by further restarts.
        if best.as_ref().unwrap().residuals.last().unwrap() <= &1e-12 {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Removes the column-scaling ambiguity using the array structure: the
/// first row of the true UE steering matrix and of the true combined IRS
/// factor are all ones, so both estimates are rescaled onto that form and
/// the fading factor absorbs the compensation, leaving the reconstructed
/// tensor untouched.
pub fn remove_scaling_ambiguity(als: &mut AlsOutcome, l1: usize) {
    let l2 = als.a_tx.cols();
    let ll = als.p_b.cols();
    let mut ue_scale = vec![C64::new(1.0, 0.0); l2];
    for c in 0..l2 {
        let z = als.a_tx[(0, c)];
        if z.norm() > 1e-12 {
            ue_scale[c] = z;
        }
    }
    let mut irs_scale = vec![C64::new(1.0, 0.0); ll];
    for p in 0..ll {
        let z = als.p_b[(0, p)];
        if z.norm() > 1e-12 {
            irs_scale[p] = z;
        }
    }
    for c in 0..l2 {
        let inv = C64::new(1.0, 0.0) / ue_scale[c];
        for r in 0..als.a_tx.rows() {
            als.a_tx[(r, c)] *= inv;
        }
    }
    for p in 0..ll {
        let inv = C64::new(1.0, 0.0) / irs_scale[p];
        for r in 0..als.p_b.rows() {
            als.p_b[(r, p)] *= inv;
        }
    }
    for p in 0..ll {
        let comp = irs_scale[p] * ue_scale[p / l1].conj();
        for r in 0..als.f.rows() {
            als.f[(r, p)] *= comp;
        }
    }
}

/// Khatri-Rao factorization: splits the L1L2 x N matrix `B_rx^T krp B_tx^H`
/// into the two IRS steering matrices by a rank-1 split of every column.
/// Each row pair carries an unavoidable reciprocal scalar that cancels in
/// every downstream product.
pub fn krf_factorize(p_b_t: &Matrix, l1: usize, l2: usize) -> Result<(Matrix, Matrix), Error> {
    assert_eq!(p_b_t.rows(), l1 * l2, "expected L1L2 rows");
    let n = p_b_t.cols();
    let mut b_rx = Matrix::zeros(n, l2);
    let mut b_tx = Matrix::zeros(n, l1);
    for elem in 0..n {
        let col = p_b_t.column(elem);
        let m = Matrix::unvec(&col, l1, l2);
        let (u, sigma, v) = m.dominant_singular_triplet().map_err(|_| {
            Error::ZeroInput(format!("zero column {elem} in Khatri-Rao factorization"))
        })?;
        // m ~= t r^T with t = sigma u, r = conj(v); the row of B_tx is conj(t).
        for (l, uu) in u.iter().enumerate() {
            b_tx[(elem, l)] = (uu * sigma).conj();
        }
        for (l, vv) in v.iter().enumerate() {
            b_rx[(elem, l)] = vv.conj();
        }
    }
    Ok((b_rx, b_tx))
}

/// Kronecker factorization of f = beta kron alpha via the dominant rank-1
/// split; the magnitude lands in alpha and the first entry of alpha is made
/// real-positive.
pub fn kron_factorize(f: &[C64], l1: usize, l2: usize) -> Result<(Vec<C64>, Vec<C64>), Error> {
    assert_eq!(f.len(), l1 * l2, "expected length L1*L2");
    let m = Matrix::unvec(f, l1, l2);
    let (u, sigma, v) = m
        .dominant_singular_triplet()
        .map_err(|_| Error::ZeroInput("Kronecker factorization of a zero vector".into()))?;
    let mut alpha: Vec<C64> = u.iter().map(|z| z * sigma).collect();
    let mut beta: Vec<C64> = v.iter().map(|z| z.conj()).collect();
    let anchor = alpha
        .iter()
        .find(|z| z.norm() > 1e-12)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let rot = anchor.conj() / anchor.norm();
    for a in &mut alpha {
        *a *= rot;
    }
    let rot_inv = rot.conj();
    for b in &mut beta {
        *b *= rot_inv;
    }
    Ok((beta, alpha))
}

/// Divides each column by its first entry so the first row is all ones
/// (entries with negligible first element are left untouched).
pub fn normalize_steering_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for c in 0..m.cols() {
        let z = m[(0, c)];
        if z.norm() > 1e-12 {
            let inv = C64::new(1.0, 0.0) / z;
            for r in 0..m.rows() {
                out[(r, c)] *= inv;
            }
        }
    }
    out
}

/// IRS phase configuration from the dominant right singular vector of the
/// rebuilt combined channel: each phase conjugates the vector's phase, all
/// entries unit modulus.
pub fn configure_irs(r1_hat: &Matrix) -> Result<Vec<C64>, Error> {
    let (_, _, v) = r1_hat.dominant_singular_triplet()?;
    Ok(v.iter()
        .map(|z| {
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect())
}

/// Everything stage 1 hands to stage 2 and the metrics.
#[derive(Clone, Debug)]
pub struct Stage1Estimate {
    /// M x L1 BS steering matrix (known input, kept for reconstructions).
    pub a_rx: Matrix,
    /// Q x L2 UE steering estimate, first row ones.
    pub a_tx: Matrix,
    /// N x L1L2 combined IRS factor, first row ones.
    pub p_b: Matrix,
    /// I x L1L2 combined fading estimate.
    pub f: Matrix,
    /// N x L2 IRS receive steering estimate, columns normalized.
    pub b_rx: Matrix,
    /// N x L1 IRS transmit steering estimate, columns normalized.
    pub b_tx: Matrix,
    /// Per-frame fast-fading estimates (length L2 each).
    pub beta: Vec<Vec<C64>>,
    /// Per-frame slow-fading estimates (length L1 each).
    pub alpha: Vec<Vec<C64>>,
    /// Configured IRS phases, length N, unit modulus.
    pub s_opt: Vec<C64>,
    pub als_iterations: usize,
    pub als_residuals: Vec<f64>,
    pub als_converged: bool,
}

impl Stage1Estimate {
    /// Rebuilt combined channel of one frame (1-based):
    /// `(A_tx* kron A_rx) D_i(F) P_B^T`. Invariant to the scaling
    /// normalization because the compensations cancel in the product.
    pub fn reconstruct_combined(&self, frame: usize) -> Matrix {
        let lift = kron(&self.a_tx.conj(), &self.a_rx);
        lift.mul(&diag(&self.f.row(frame - 1)))
            .mul(&self.p_b.transpose())
    }
}

/// Algorithm-1 steps 4..8: tensor assembly, constrained ALS, ambiguity
/// removal, rank-1 factorizations, and IRS configuration.
pub fn run_stage1(
    combined: &[CombinedChannelEstimate],
    a_rx: &Matrix,
    config: &SystemConfig,
    options: &AlsOptions,
    init: &mut Stream,
) -> Result<Stage1Estimate, Error> {
    let rs: Vec<Matrix> = combined.iter().map(|c| c.r.clone()).collect();
    let tensor = assemble_r_tensor(&rs, config.bs_antennas, config.ue_antennas);
    let mut als = constrained_cp_als(&tensor, a_rx, config, options, init)?;
    remove_scaling_ambiguity(&mut als, config.bs_irs_paths);

    let (b_rx_raw, b_tx_raw) = krf_factorize(
        &als.p_b.transpose(),
        config.bs_irs_paths,
        config.irs_ue_paths,
    )?;
    let b_rx = normalize_steering_columns(&b_rx_raw);
    let b_tx = normalize_steering_columns(&b_tx_raw);

    let mut alpha = Vec::with_capacity(config.frames);
    let mut beta = Vec::with_capacity(config.frames);
    for i in 0..config.frames {
        let (b, a) = kron_factorize(
            &als.f.row(i),
            config.bs_irs_paths,
            config.irs_ue_paths,
        )?;
        alpha.push(a);
        beta.push(b);
    }

    let estimate = Stage1Estimate {
        a_rx: a_rx.clone(),
        a_tx: als.a_tx,
        p_b: als.p_b,
        f: als.f,
        b_rx,
        b_tx,
        beta,
        alpha,
        s_opt: Vec::new(),
        als_iterations: als.iterations,
        als_residuals: als.residuals,
        als_converged: als.converged,
    };
    let r1 = estimate.reconstruct_combined(1);
    let s_opt = configure_irs(&r1)?;
    Ok(Stage1Estimate { s_opt, ..estimate })
}
