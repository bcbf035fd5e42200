//! Complex multilinear-algebra kernel: matrices, N-way tensors, products,
//! unfoldings, SVD, and pseudoinverses.
//!
//! All operations are pure functions of their inputs and safe to use from
//! multiple worker threads.

mod dense;
mod matrix;
mod svd;

pub use dense::{cp_tensor, khatri_rao_excluding, Tensor};
pub use matrix::{diag, diag_row, khatri_rao, kron, kron_vec, Matrix, C64};
pub use svd::{Svd, PINV_RTOL};
