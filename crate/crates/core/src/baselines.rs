//! Reference estimators: plain LS on the combined channel and the cascaded
//! Khatri-Rao estimator that splits it into unstructured per-frame factors.
//!
//! The cascaded estimator refines the LS combined channel by the best rank-1
//! fit of every IRS-element column, but holds the frame-start factors fixed
//! across the frame's blocks, so it cannot follow the fast fading.

use crate::channel::{SystemConfig, TrainingDesign};
use crate::parkron::{estimate_combined, CombinedChannelEstimate};
use crate::tensor::{diag, khatri_rao, Matrix, C64};
use crate::Error;

/// Plain LS estimate of the combined channel; shares the code path of the
/// stage-1 front end and applies no tensor refinement.
pub fn ls_baseline(
    y: &Matrix,
    design: &TrainingDesign,
    config: &SystemConfig,
) -> Result<CombinedChannelEstimate, Error> {
    estimate_combined(y, design, config)
}

/// Unstructured per-frame factors recovered from the combined channel.
#[derive(Clone, Debug)]
pub struct KrfStaticEstimate {
    /// M x N BS-IRS factor.
    pub g_hat: Matrix,
    /// N x Q IRS-UE factor.
    pub h_hat: Matrix,
    /// Rank-1-projected combined channel `H^T krp G`, MQ x N.
    pub r_hat: Matrix,
}

impl KrfStaticEstimate {
    /// Effective channel `G D(s) H`, held fixed for every block of the frame.
    pub fn effective_w(&self, s_opt: &[C64]) -> Matrix {
        self.g_hat.mul(&diag(s_opt)).mul(&self.h_hat)
    }
}

/// Splits the MQ x N combined-channel estimate column by column: the n-th
/// column reshaped M x Q is (near) rank one, its best rank-1 factors give
/// column n of G and row n of H. The scale split is normalized so the first
/// entry of each H row is 1 when it is not negligible; the reciprocal
/// per-element scalars cancel in `G D(s) H` either way.
pub fn krf_static_baseline(
    r_hat: &Matrix,
    m: usize,
    q: usize,
) -> Result<KrfStaticEstimate, Error> {
    assert_eq!(r_hat.rows(), m * q, "combined channel must be MQ x N");
    let n = r_hat.cols();
    let mut g_hat = Matrix::zeros(m, n);
    let mut h_hat = Matrix::zeros(n, q);
    for elem in 0..n {
        let col = r_hat.column(elem);
        let sheet = Matrix::unvec(&col, m, q);
        let (u, sigma, v) = sheet.dominant_singular_triplet().map_err(|_| {
            Error::ZeroInput(format!("zero column {elem} in cascaded factorization"))
        })?;
        // sheet ~= g h^T with g = sigma u, h = conj(v).
        let mut g: Vec<C64> = u.iter().map(|z| z * sigma).collect();
        let mut h: Vec<C64> = v.iter().map(|z| z.conj()).collect();
        let anchor = h[0];
        if anchor.norm() > 1e-12 {
            for x in &mut h {
                *x /= anchor;
            }
            for x in &mut g {
                *x *= anchor;
            }
        }
        for (r, &z) in g.iter().enumerate() {
            g_hat[(r, elem)] = z;
        }
        for (c, &z) in h.iter().enumerate() {
            h_hat[(elem, c)] = z;
        }
    }
    let r_hat_proj = khatri_rao(&h_hat.transpose(), &g_hat);
    Ok(KrfStaticEstimate {
        g_hat,
        h_hat,
        r_hat: r_hat_proj,
    })
}
