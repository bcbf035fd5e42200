//! Singular value decomposition, Moore-Penrose pseudoinverse, and the
//! dominant singular triplet.
//!
//! The decomposition is a one-sided Jacobi iteration on columns, which is
//! simple, deterministic, and accurate to near machine precision at the
//! matrix sizes that occur here. A fixed phase convention (first non-zero
//! entry of each right singular vector real-positive) makes the factors
//! reproducible across runs.

use super::matrix::{C64, Matrix};
use crate::Error;

/// Relative threshold below which singular values are truncated in `pinv`.
pub const PINV_RTOL: f64 = 1e-12;

/// Entries of a unit right singular vector below this magnitude are treated
/// as zero when picking the phase anchor.
const PHASE_ANCHOR_TOL: f64 = 1e-8;

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(sigma) V^H` with `sigma` sorted descending.
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// Number of singular values above `rtol * sigma_max`.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rtol * smax).count()
    }
}

/// One-sided Jacobi SVD of a tall matrix (rows >= cols).
fn svd_tall(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);
    let mut b = a.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C64::new(0.0, 0.0);
                for r in 0..m {
                    let bp = b[(r, p)];
                    let bq = b[(r, q)];
                    app += bp.norm_sqr();
                    aqq += bq.norm_sqr();
                    apq += bp.conj() * bq;
                }
                let off = apq.norm();
                if off <= JACOBI_TOL * (app * aqq).sqrt() || off == 0.0 {
                    continue;
                }
                rotated = true;
                // Unitary rotation orthogonalizing columns p and q. The phase
                // of the cross term is absorbed into column q so the core
                // rotation is the real Jacobi one.
                let phase = apq / off;
                let tau = (aqq - app) / (2.0 * off);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                let pc = phase.conj();
                for r in 0..m {
                    let bp = b[(r, p)];
                    let bq = b[(r, q)] * pc;
                    b[(r, p)] = bp * cs - bq * sn;
                    b[(r, q)] = bp * sn + bq * cs;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)] * pc;
                    v[(r, p)] = vp * cs - vq * sn;
                    v[(r, q)] = vp * sn + vq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|c| (0..m).map(|r| b[(r, c)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = Matrix::zeros(m, n);
    let mut vv = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            let inv = 1.0 / s;
            for r in 0..m {
                u[(r, dst)] = b[(r, src)] * inv;
            }
        }
        for r in 0..n {
            vv[(r, dst)] = v[(r, src)];
        }
    }

    let mut out = Svd { u, sigma, v: vv };
    apply_phase_convention(&mut out);
    out
}

/// Rotates each singular pair so the first non-zero entry of the right
/// singular vector is real-positive.
fn apply_phase_convention(svd: &mut Svd) {
    let n = svd.v.rows();
    for j in 0..svd.sigma.len() {
        let mut anchor = None;
        for r in 0..n {
            if svd.v[(r, j)].norm() > PHASE_ANCHOR_TOL {
                anchor = Some(svd.v[(r, j)]);
                break;
            }
        }
        if let Some(z) = anchor {
            let rot = z.conj() / z.norm();
            for r in 0..n {
                svd.v[(r, j)] *= rot;
            }
            for r in 0..svd.u.rows() {
                svd.u[(r, j)] *= rot;
            }
        }
    }
}

impl Matrix {
    /// Thin SVD with descending singular values and the fixed phase convention.
    pub fn svd(&self) -> Svd {
        if self.rows() >= self.cols() {
            svd_tall(self)
        } else {
            // A = U S V^H  <=>  A^H = V S U^H
            let t = svd_tall(&self.hermitian());
            let mut out = Svd {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            };
            apply_phase_convention(&mut out);
            out
        }
    }

    /// Moore-Penrose pseudoinverse with singular values below
    /// `PINV_RTOL * sigma_max` truncated.
    pub fn pinv(&self) -> Matrix {
        self.pinv_with_rank().0
    }

    /// Pseudoinverse plus the numerical rank used for the truncation.
    pub fn pinv_with_rank(&self) -> (Matrix, usize) {
        let svd = self.svd();
        let rank = svd.rank(PINV_RTOL);
        let mut out = Matrix::zeros(self.cols(), self.rows());
        // A+ = V S+ U^H accumulated as a sum of scaled outer products.
        for j in 0..rank {
            let inv = 1.0 / svd.sigma[j];
            for c in 0..self.rows() {
                let uh = svd.u[(c, j)].conj() * inv;
                for r in 0..self.cols() {
                    out[(r, c)] += svd.v[(r, j)] * uh;
                }
            }
        }
        (out, rank)
    }

    /// Number of singular values above `rtol * sigma_max`.
    pub fn numerical_rank(&self, rtol: f64) -> usize {
        self.svd().rank(rtol)
    }

    /// Leading singular triplet `(u, sigma_1, v)`; errors on a zero matrix.
    pub fn dominant_singular_triplet(&self) -> Result<(Vec<C64>, f64, Vec<C64>), Error> {
        let svd = self.svd();
        let s1 = svd.sigma.first().copied().unwrap_or(0.0);
        if s1 <= 0.0 {
            return Err(Error::ZeroInput(
                "dominant singular triplet of a zero matrix".into(),
            ));
        }
        Ok((svd.u.column(0), s1, svd.v.column(0)))
    }
}
