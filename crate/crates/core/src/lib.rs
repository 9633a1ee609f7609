//! Signal detection in a union of low-rank subspaces.
//!
//! A dictionary of unit-norm atoms acts as a bank of matched subspaces. A
//! signal is coded sparsely over the dictionary and the detector thresholds
//! the correlation between the observation and its reconstruction. The crate
//! contains every piece of that chain:
//!
//! - [`sparse_coding`]: OMP, least squares, ridge, ℓ1 (lasso), the robust
//!   identity-extended solver and a brute-force ℓ0 oracle.
//! - [`dictionary`]: K-means, K-SVD and overcomplete DCT dictionaries, plus
//!   coherence and error-to-signal ratio measurements.
//! - [`detector`]: the sufficient statistic, plain / sparsity-penalized /
//!   robust decision rules, classical baselines and closed-form detection
//!   curves.
//! - [`harness`]: synthetic union-of-subspaces data, Monte Carlo ROC curves
//!   and the sparsity/ESR sweep.
//! - [`vad`]: a voice activity detection pipeline built on the detector.
//!
//! Coders, dictionary learners and decision rules are strategies behind
//! traits and can be looked up by name at runtime.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod detector;
pub mod dictionary;
pub mod error;
pub mod harness;
mod linalg;
pub mod sparse_coding;
pub mod vad;

pub use detector::{
    sr_decide, sr_statistic, Detection, DetectorParams, Hypothesis,
};
pub use dictionary::{coherence, esr_estimate, Dictionary, LearnSpec, LearnStats};
pub use error::{Error, Result};
pub use sparse_coding::{SolverConfig, SparseCode};

/// Column-major real matrix used for dictionaries and signal sets.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Real signal or coefficient vector.
pub type Vector = nalgebra::DVector<f64>;
