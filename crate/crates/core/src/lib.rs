//! Two-stage tensor receiver for IRS-assisted MIMO uplinks under channel
//! aging, with a Monte Carlo link-level simulation harness.
//!
//! The first stage estimates the static channel geometry from pilots via a
//! constrained PARAFAC decomposition followed by Khatri-Rao and Kronecker
//! factorizations, and configures the IRS phase shifts from the dominant
//! right singular vector of the rebuilt combined channel. The second stage
//! tracks the block-fading coefficients and detects BPSK data symbols with a
//! bilinear alternating least squares loop. Reference LS and cascaded-KRF
//! estimators are included for comparison, and the harness reproduces the
//! NMSE/BER experiments at configurable scale.

pub mod baselines;
pub mod channel;
pub mod harness;
pub mod parkron;
pub mod rng;
pub mod tbt;
pub mod tensor;

use thiserror::Error as ThisError;

/// Errors surfaced by estimators, designs, and the harness.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} is rank deficient: rank {rank}, need {needed}")]
    RankDeficient {
        what: String,
        rank: usize,
        needed: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("zero input: {0}")]
    ZeroInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
