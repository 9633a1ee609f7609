use nalgebra::{DMatrix, DVector};

use super::{check_signal, SparseCode};
use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};
use crate::linalg::lstsq_on_columns;

/// Correlations below this fraction of `‖y‖` are treated as zero: the
/// residual is orthogonal to every atom and no further atom can help.
const CORRELATION_FLOOR: f64 = 1e-12;

/// When to stop adding atoms. OMP stops at the first condition met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpStop {
    /// Maximum support size `T`.
    pub max_atoms: usize,
    /// Absolute residual norm `ε` (0 disables).
    pub residual: f64,
    /// Residual norm relative to `‖y‖` (0 disables).
    pub residual_fraction: f64,
    /// Penalty `λ` per atom. When positive, the greedy path is followed up to
    /// the other stops and the prefix minimizing `‖r_k‖² + λ·k` is returned,
    /// a greedy solution of `min ‖y − Dx‖² + λ‖x‖₀`.
    pub l0_penalty: f64,
}

impl OmpStop {
    /// Stop after exactly `t` atoms (or earlier if `y` is already represented).
    pub fn sparsity(t: usize) -> Self {
        Self {
            max_atoms: t,
            residual: 0.0,
            residual_fraction: 0.0,
            l0_penalty: 0.0,
        }
    }

    /// Stop once `‖r‖₂ ≤ eps`.
    pub fn residual(eps: f64) -> Self {
        Self {
            max_atoms: usize::MAX,
            residual: eps,
            residual_fraction: 0.0,
            l0_penalty: 0.0,
        }
    }
}

/// One OMP iteration: the atom added and the residual norm after refitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpStep {
    pub atom: usize,
    pub residual_norm: f64,
}

/// Orthogonal matching pursuit.
///
/// Each iteration adds the atom most correlated with the residual (lowest
/// index on ties) and refits all selected coefficients by least squares.
pub fn omp(dict: &Dictionary, y: &DVector<f64>, stop: OmpStop) -> Result<SparseCode> {
    omp_traced(dict, y, stop).map(|(code, _)| code)
}

/// [`omp`] that also returns the per-iteration trace.
pub fn omp_traced(
    dict: &Dictionary,
    y: &DVector<f64>,
    stop: OmpStop,
) -> Result<(SparseCode, Vec<OmpStep>)> {
    let d: &DMatrix<f64> = dict.atoms();
    check_signal(d, y)?;
    let k = dict.k();
    if stop.max_atoms == 0 {
        return Err(invalid("OMP sparsity must be at least 1"));
    }
    if stop.max_atoms != usize::MAX && stop.max_atoms > k {
        return Err(invalid(format!(
            "OMP sparsity {} exceeds the {k} available atoms",
            stop.max_atoms
        )));
    }
    if !(stop.residual >= 0.0) || !(stop.residual_fraction >= 0.0) {
        return Err(invalid("OMP residual stop must be nonnegative"));
    }
    if !(stop.l0_penalty >= 0.0) || !stop.l0_penalty.is_finite() {
        return Err(invalid("OMP l0 penalty must be nonnegative"));
    }

    let y_norm = y.norm();
    let max_atoms = stop.max_atoms.min(k).min(dict.n());
    let target = stop.residual.max(stop.residual_fraction * y_norm);

    let mut selected: Vec<usize> = Vec::new();
    let mut in_support = vec![false; k];
    let mut coefficients = DVector::zeros(k);
    let mut residual = y.clone();
    let mut residual_norm = y_norm;
    let mut trace = Vec::new();
    // Best penalized prefix so far: (cost, coefficients).
    let mut best_prefix = (y_norm * y_norm, coefficients.clone());

    while selected.len() < max_atoms && residual_norm > target {
        let correlations = d.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in correlations.iter().enumerate() {
            if in_support[j] {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((atom, corr)) = best else { break };
        if corr <= CORRELATION_FLOOR * y_norm {
            break;
        }

        selected.push(atom);
        in_support[atom] = true;
        let mut sorted = selected.clone();
        sorted.sort_unstable();
        let fit = lstsq_on_columns(d, &sorted, y)?;
        coefficients.fill(0.0);
        for (&j, &c) in sorted.iter().zip(fit.iter()) {
            coefficients[j] = c;
        }
        residual = y - d * &coefficients;
        residual_norm = residual.norm();
        trace.push(OmpStep {
            atom,
            residual_norm,
        });
        if stop.l0_penalty > 0.0 {
            let cost = residual_norm * residual_norm + stop.l0_penalty * selected.len() as f64;
            if cost < best_prefix.0 {
                best_prefix = (cost, coefficients.clone());
            }
        }
    }

    if stop.l0_penalty > 0.0 {
        coefficients = best_prefix.1;
    }
    Ok((SparseCode::from_dense(d, y, coefficients), trace))
}
