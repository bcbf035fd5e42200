//! Stage 2: block-fading tracking and BPSK symbol detection.
//!
//! The stage-2 observations of one frame form tensors whose core is a sparse
//! L1 x L2 x L1L2 expansion of J = B_tx^H D(s_opt) B_rx. Pilots give an LS
//! initialization of the combined fading matrix (one column per block), and
//! a bilinear alternating LS then refines the fading while estimating the
//! data matrix shared by the frame's blocks. Symbols are hard-decided only
//! after convergence.

use crate::parkron::kron_factorize;
use crate::tensor::{diag, kron, Matrix, Tensor, C64};
use crate::Error;

/// Core coupling matrix and its sparse tensor expansion.
#[derive(Clone, Debug)]
pub struct CoreTensorJ {
    /// J = B_tx^H D(s_opt) B_rx, L1 x L2.
    pub j: Matrix,
    /// L1 x L2 x L1L2 tensor whose mode-2 unfolding is D(vec(J)).
    pub j_tensor: Tensor,
}

/// Builds J and its tensor expansion; entry (l1, l2, p) is vec(J)[p] when
/// p = l2*L1 + l1 and zero otherwise.
pub fn build_core_tensor(b_tx: &Matrix, b_rx: &Matrix, s_opt: &[C64]) -> CoreTensorJ {
    let j = b_tx.hermitian().mul(&diag(s_opt)).mul(b_rx);
    let l1 = j.rows();
    let l2 = j.cols();
    let vec_j = j.vec();
    let mut t = Tensor::zeros(&[l1, l2, l1 * l2]);
    for (p, &z) in vec_j.iter().enumerate() {
        t.set(&[p % l1, p / l1, p], z);
    }
    CoreTensorJ { j, j_tensor: t }
}

/// Stacks per-block M x T received matrices into an M x T x K tensor.
pub fn stack_received_blocks(blocks: &[Matrix]) -> Tensor {
    assert!(!blocks.is_empty(), "need at least one block");
    let rows = blocks[0].rows();
    let cols = blocks[0].cols();
    let mut data = Vec::with_capacity(rows * cols * blocks.len());
    for b in blocks {
        assert_eq!(
            (b.rows(), b.cols()),
            (rows, cols),
            "all blocks must share a shape"
        );
        data.extend_from_slice(b.data());
    }
    Tensor::from_data(&[rows, cols, blocks.len()], data)
}

/// Known pilot companion C = Xp^T conj(A_tx), Tp x L2.
pub fn pilot_companion(a_tx: &Matrix, stage2_pilots: &Matrix) -> Matrix {
    stage2_pilots.transpose().mul(&a_tx.conj())
}

/// LS initialization of the combined fading matrix from the pilot tensor:
/// `F = ([Y](2) ([J](2) (C kron A_rx)^T)+)^T`, L1L2 x K with one column per
/// block.
pub fn init_fading(
    pilot_tensor: &Tensor,
    core: &CoreTensorJ,
    a_rx: &Matrix,
    c: &Matrix,
) -> Result<Matrix, Error> {
    let ll = core.j.rows() * core.j.cols();
    let m = a_rx.rows();
    let tp = c.rows();
    if m * tp < ll {
        return Err(Error::Precondition(format!(
            "M*Tp = {} < L1*L2 = {ll}: pilot LS is underdetermined",
            m * tp
        )));
    }
    let basis = core.j_tensor.unfold(2).mul(&kron(c, a_rx).transpose());
    let (pinv, rank) = basis.pinv_with_rank();
    if rank < ll {
        return Err(Error::RankDeficient {
            what: "[J](2) (C kron A_rx)^T".into(),
            rank,
            needed: ll,
        });
    }
    Ok(pilot_tensor.unfold(2).mul(&pinv).transpose())
}

/// Stopping rule for the bilinear alternating LS.
#[derive(Clone, Copy, Debug)]
pub struct BalsOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BalsOptions {
    fn default() -> Self {
        BalsOptions {
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

/// Joint tracking and detection output for one frame.
#[derive(Clone, Debug)]
pub struct TrackingState {
    /// Q x Td continuous data estimate (hard-decide with `demap_bpsk`).
    pub x_hat: Matrix,
    /// L1L2 x K refined combined fading, one column per block.
    pub f_hat: Matrix,
    pub iterations: usize,
    /// Relative residual after every half-step (X update, then F update).
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Alternates the two exact LS steps (data from the mode-1 unfolding, fading
/// from the mode-2 unfolding) starting from the pilot-anchored fading. The
/// residual is non-increasing per half-step.
pub fn bals_detect(
    data_tensor: &Tensor,
    core: &CoreTensorJ,
    a_rx: &Matrix,
    a_tx: &Matrix,
    f_init: &Matrix,
    options: &BalsOptions,
) -> Result<TrackingState, Error> {
    let [m, td, k] = match *data_tensor.shape() {
        [a, b, c] => [a, b, c],
        _ => return Err(Error::Precondition("data tensor must be 3-way".into())),
    };
    let q = a_tx.rows();
    let ll = core.j.rows() * core.j.cols();
    if m * k < q {
        return Err(Error::Precondition(format!(
            "M*K = {} < Q = {q}: symbol LS is underdetermined",
            m * k
        )));
    }
    if m * td < ll {
        return Err(Error::Precondition(format!(
            "M*Td = {} < L1*L2 = {ll}: fading LS is underdetermined",
            m * td
        )));
    }

    let norm = data_tensor.fro_norm();
    if norm == 0.0 {
        return Err(Error::ZeroInput("data tensor is zero".into()));
    }
    let unfold_t = data_tensor.unfold(1);
    let unfold_k = data_tensor.unfold(2);
    let j1 = core.j_tensor.unfold(1);
    let j2 = core.j_tensor.unfold(2);
    let a_tx_conj = a_tx.conj();
    let a_tx_h = a_tx.hermitian();

    let residual = |x: &Matrix, f: &Matrix| {
        let rec = core
            .j_tensor
            .mode_product(a_rx, 0)
            .mode_product(&a_tx_h.mul(x).transpose(), 1)
            .mode_product(&f.transpose(), 2);
        data_tensor.sub(&rec).fro_norm() / norm
    };

    let mut f_hat = f_init.clone();
    let mut x_hat = Matrix::zeros(q, td);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _iter in 0..options.max_iter {
        // Data update from the time-mode unfolding.
        let gain_x = a_tx_conj
            .mul(&j1)
            .mul(&kron(&f_hat.transpose(), a_rx).transpose());
        x_hat = unfold_t.mul(&gain_x.pinv()).transpose();
        if !x_hat.is_finite() {
            return Err(Error::Numerical("bilinear LS diverged".into()));
        }
        residuals.push(residual(&x_hat, &f_hat));

        // Fading update from the block-mode unfolding.
        let gain_f = j2
            .mul(&kron(&a_tx_h.mul(&x_hat).transpose(), a_rx).transpose());
        f_hat = unfold_k.mul(&gain_f.pinv()).transpose();
        if !f_hat.is_finite() {
            return Err(Error::Numerical("bilinear LS diverged".into()));
        }
        let res = residual(&x_hat, &f_hat);
        residuals.push(res);
        iterations += 1;

        if res <= 1e-13 {
            converged = true;
            break;
        }
        if residuals.len() >= 4 {
            let prev = residuals[residuals.len() - 3];
            if prev - res <= options.tol * prev.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }

    Ok(TrackingState {
        x_hat,
        f_hat,
        iterations,
        residuals,
        converged,
    })
}

/// Hard BPSK decisions, row-major: bit 0 for Re >= 0, bit 1 otherwise.
pub fn demap_bpsk(x: &Matrix) -> Vec<u8> {
    let mut bits = Vec::with_capacity(x.rows() * x.cols());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            bits.push(if x[(r, c)].re >= 0.0 { 0 } else { 1 });
        }
    }
    bits
}

/// Number of positions where the two bit strings disagree.
pub fn bit_errors(a: &[u8], b: &[u8]) -> u64 {
    assert_eq!(a.len(), b.len(), "bit strings must have equal length");
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Effective-channel reconstruction for one block straight from the fading
/// column: unvec of `(A_tx* kron A_rx) D(vec(J)) f`, M x Q.
pub fn reconstruct_w(a_rx: &Matrix, a_tx: &Matrix, j: &Matrix, f_col: &[C64]) -> Matrix {
    let lift = kron(&a_tx.conj(), a_rx);
    let w_vec = lift.mul(&diag(&j.vec())).mul_vec(f_col);
    Matrix::unvec(&w_vec, a_rx.rows(), a_tx.rows())
}

/// Effective-channel reconstruction through the rank-1 split of the fading
/// column: `A_rx D(alpha) J D(beta) A_tx^H`. Agrees with `reconstruct_w`
/// when the column is exactly a Kronecker product; under noise it projects
/// onto the separable structure first.
pub fn reconstruct_w_from_split(
    a_rx: &Matrix,
    a_tx: &Matrix,
    j: &Matrix,
    f_col: &[C64],
) -> Result<Matrix, Error> {
    let (beta, alpha) = kron_factorize(f_col, j.rows(), j.cols())?;
    Ok(a_rx
        .mul(&diag(&alpha))
        .mul(j)
        .mul(&diag(&beta))
        .mul(&a_tx.hermitian()))
}
