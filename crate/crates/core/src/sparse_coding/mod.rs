//! Coefficient estimation over a fixed dictionary.
//!
//! Every solver returns a [`SparseCode`]: the coefficient vector with an
//! explicit support and the residual norm it leaves. The solvers used by the
//! detector are wrapped as [`SparseCoder`] strategies and registered by name
//! (see [`coder_by_name`]).

use nalgebra::{DMatrix, DVector};

use crate::dictionary::Dictionary;
use crate::error::{check_len, invalid, Error, Result};

mod exhaustive;
mod l1;
mod least_squares;
mod omp;
mod robust;

pub use exhaustive::{exhaustive_sparse, EXHAUSTIVE_BUDGET};
pub use l1::{kkt_residual, l1_objective, l1_solve, l1_solve_traced, L1Trace};
pub use least_squares::{least_squares, ridge};
pub use omp::{omp, omp_traced, OmpStep, OmpStop};
pub use robust::{robust_solve, RobustCode};

/// Relative magnitude below which a coefficient counts as zero:
/// `|xⱼ| > SUPPORT_TOL · max(1, ‖x‖_∞)` is in the support.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Coefficient vector with an explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    coefficients: DVector<f64>,
    support: Vec<usize>,
    residual_norm: f64,
}

impl SparseCode {
    /// The all-zero code over `k` atoms for a signal of norm `signal_norm`.
    pub fn zero(k: usize, signal_norm: f64) -> Self {
        Self {
            coefficients: DVector::zeros(k),
            support: Vec::new(),
            residual_norm: signal_norm,
        }
    }

    /// Builds a code from dense coefficients: entries at or below the
    /// numerical-zero level are cleared and the residual is recomputed.
    pub fn from_dense(design: &DMatrix<f64>, y: &DVector<f64>, mut coefficients: DVector<f64>) -> Self {
        let cutoff = SUPPORT_TOL * coefficients.amax().max(1.0);
        let mut support = Vec::new();
        for (j, c) in coefficients.iter_mut().enumerate() {
            if c.abs() > cutoff {
                support.push(j);
            } else {
                *c = 0.0;
            }
        }
        let residual_norm = (y - design * &coefficients).norm();
        Self {
            coefficients,
            support,
            residual_norm,
        }
    }

    /// Full coefficient vector (length `K`).
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Indices of the nonzero coefficients, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `‖x‖₀`.
    pub fn l0(&self) -> usize {
        self.support.len()
    }

    /// `‖y − D·x‖₂` for the signal this code was computed from.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn into_coefficients(self) -> DVector<f64> {
        self.coefficients
    }
}

/// Solver settings shared by the coders and decision rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// OMP sparsity limit `T`.
    pub sparsity_limit: usize,
    /// Ridge penalty.
    pub l2_penalty: f64,
    /// ℓ1 penalty `λ` of `‖y − Dx‖² + λ‖x‖₁`.
    pub l1_penalty: f64,
    /// Robust solver penalty `ρ`.
    pub robust_rho: f64,
    /// Robust solver breakpoint `λ`; the identity block is scaled by `ρ/λ`.
    pub robust_lambda: f64,
    /// Small positive guard against division by zero.
    pub epsilon_delta: f64,
    pub max_iterations: usize,
    /// KKT tolerance of the ℓ1 solver.
    pub convergence_tol: f64,
    /// Absolute residual at which OMP stops early (0 disables).
    pub residual_tol: f64,
    /// OMP stops once `‖r‖ ≤ residual_fraction · ‖y‖` (0 disables).
    pub residual_fraction: f64,
    /// OMP per-atom penalty `λ` of `‖y − Dx‖² + λ‖x‖₀` (0 disables).
    pub l0_penalty: f64,
    /// Registry name of the coder used by the plain and sparsity-penalized rules.
    pub coder: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sparsity_limit: 3,
            l2_penalty: 0.0,
            l1_penalty: 0.1,
            robust_rho: 0.1,
            robust_lambda: 1.0,
            epsilon_delta: 1e-12,
            max_iterations: 20_000,
            convergence_tol: 1e-10,
            residual_tol: 0.0,
            residual_fraction: 0.0,
            l0_penalty: 0.0,
            coder: "omp".to_string(),
        }
    }
}

impl SolverConfig {
    /// Checks the settings against a dictionary with `k` atoms.
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.sparsity_limit == 0 || self.sparsity_limit > k {
            return Err(invalid(format!(
                "sparsity limit {} outside [1, {k}]",
                self.sparsity_limit
            )));
        }
        if !(self.epsilon_delta > 0.0) {
            return Err(invalid("epsilon_delta must be positive"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(invalid("convergence_tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        if !(self.l2_penalty >= 0.0) || !(self.l1_penalty >= 0.0) {
            return Err(invalid("penalties must be nonnegative"));
        }
        if !(self.robust_rho > 0.0) || !(self.robust_lambda > 0.0) {
            return Err(invalid("robust rho and lambda must be positive"));
        }
        if !(self.residual_tol >= 0.0) || !(self.residual_fraction >= 0.0) || !(self.l0_penalty >= 0.0) {
            return Err(invalid("OMP residual stops must be nonnegative"));
        }
        Ok(())
    }

    /// OMP stopping rule implied by this configuration.
    pub fn omp_stop(&self) -> OmpStop {
        OmpStop {
            max_atoms: self.sparsity_limit,
            residual: self.residual_tol,
            residual_fraction: self.residual_fraction,
            l0_penalty: self.l0_penalty,
        }
    }
}

/// A coefficient estimator over a fixed dictionary.
pub trait SparseCoder: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode>;
}

/// Greedy ℓ0 coder.
#[derive(Debug, Clone, Copy)]
pub struct OmpCoder(pub OmpStop);

impl SparseCoder for OmpCoder {
    fn name(&self) -> &'static str {
        "omp"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        omp(dict, y, self.0)
    }
}

/// ℓ1-regularized coder.
#[derive(Debug, Clone)]
pub struct L1Coder {
    pub lambda: f64,
    pub config: SolverConfig,
}

impl SparseCoder for L1Coder {
    fn name(&self) -> &'static str {
        "l1"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        l1_solve(dict.atoms(), y, self.lambda, &self.config)
    }
}

/// Robust coder; only the dictionary part `x` of `[x; e]` is returned.
#[derive(Debug, Clone)]
pub struct RobustCoder {
    pub config: SolverConfig,
}

impl SparseCoder for RobustCoder {
    fn name(&self) -> &'static str {
        "robust"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        let c = &self.config;
        robust_solve(dict, y, c.robust_rho, c.robust_lambda, c).map(|r| r.code)
    }
}

/// Unconstrained least squares.
#[derive(Debug, Clone, Copy)]
pub struct LeastSquaresCoder;

impl SparseCoder for LeastSquaresCoder {
    fn name(&self) -> &'static str {
        "least-squares"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        let x = least_squares(dict.atoms(), y)?;
        Ok(SparseCode::from_dense(dict.atoms(), y, x))
    }
}

/// Ridge regression.
#[derive(Debug, Clone, Copy)]
pub struct RidgeCoder(pub f64);

impl SparseCoder for RidgeCoder {
    fn name(&self) -> &'static str {
        "ridge"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        let x = ridge(dict.atoms(), y, self.0)?;
        Ok(SparseCode::from_dense(dict.atoms(), y, x))
    }
}

/// Exact ℓ0 search; only viable for small dictionaries.
#[derive(Debug, Clone, Copy)]
pub struct ExhaustiveCoder(pub usize);

impl SparseCoder for ExhaustiveCoder {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>) -> Result<SparseCode> {
        exhaustive_sparse(dict, y, self.0)
    }
}

type CoderCtor = fn(&SolverConfig) -> Box<dyn SparseCoder>;

const CODERS: &[(&str, CoderCtor)] = &[
    ("omp", |c| Box::new(OmpCoder(c.omp_stop()))),
    ("l1", |c| {
        Box::new(L1Coder {
            lambda: c.l1_penalty,
            config: c.clone(),
        })
    }),
    ("robust", |c| Box::new(RobustCoder { config: c.clone() })),
    ("least-squares", |_| Box::new(LeastSquaresCoder)),
    ("ridge", |c| Box::new(RidgeCoder(c.l2_penalty))),
    ("exhaustive", |c| Box::new(ExhaustiveCoder(c.sparsity_limit))),
];

/// Names accepted by [`coder_by_name`].
pub fn coder_names() -> Vec<&'static str> {
    CODERS.iter().map(|(name, _)| *name).collect()
}

/// Looks up a coder by registry name and configures it from `config`.
pub fn coder_by_name(name: &str, config: &SolverConfig) -> Result<Box<dyn SparseCoder>> {
    CODERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor(config))
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "sparse coder",
            name: name.to_string(),
            available: coder_names().join(", "),
        })
}

pub(crate) fn check_signal(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    check_len("signal length", design.nrows(), y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("signal contains NaN or infinite entries"));
    }
    Ok(())
}
