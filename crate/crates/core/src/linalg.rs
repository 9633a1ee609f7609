//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose Gram matrix has a condition estimate above this are singular.
pub(crate) const GRAM_CONDITION_LIMIT: f64 = 1e12;

pub(crate) fn select_columns(design: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(design.nrows(), cols.len(), |i, j| design[(i, cols[j])])
}

/// Least-squares fit of `y` on the columns `cols` of `design`.
///
/// Returns the coefficients in the order of `cols`. Fails when the Gram matrix
/// of the selected columns has a condition estimate above
/// [`GRAM_CONDITION_LIMIT`].
pub(crate) fn lstsq_on_columns(
    design: &DMatrix<f64>,
    cols: &[usize],
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    if cols.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let sub = select_columns(design, cols);
    lstsq_full(&sub).and_then(|solver| solver(y)).map_err(|e| match e {
        Error::RankDeficient { condition } => Error::SingularSupport {
            support: cols.to_vec(),
            condition,
        },
        other => other,
    })
}

/// Prepares a least-squares solve against a tall (or square) full-rank matrix.
pub(crate) fn lstsq_full(
    m: &DMatrix<f64>,
) -> Result<impl Fn(&DVector<f64>) -> Result<DVector<f64>> + '_> {
    if m.ncols() > m.nrows() {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let svd = m.clone().svd(true, true);
    let condition = gram_condition(&svd.singular_values);
    if !(condition <= GRAM_CONDITION_LIMIT) {
        return Err(Error::RankDeficient { condition });
    }
    Ok(move |y: &DVector<f64>| {
        svd.solve(y, 0.0)
            .map_err(|e| Error::DegenerateData(e.to_string()))
    })
}

/// Condition number of `AᵀA` given the singular values of `A`.
pub(crate) fn gram_condition(singular_values: &DVector<f64>) -> f64 {
    let max = singular_values.max();
    let min = singular_values.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).powi(2)
    }
}

/// Orthonormal basis of the column space of `m`, dropping directions whose
/// singular value is below `rel_tol · σ_max`.
pub(crate) fn orthonormal_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || m.iter().all(|v| *v == 0.0) {
        return DMatrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rel_tol * sigma_max)
        .map(|(i, _)| i)
        .collect();
    select_columns(&u, &keep)
}

/// Leading left singular vector of `e` by power iteration on `e·eᵀ`, warm
/// started from `init`.
///
/// Stops when the Rayleigh quotient changes by less than `rel_tol`
/// (relative) or after `max_iter` steps. Starting from `init` the captured
/// energy `‖eᵀu‖²` never falls below `‖eᵀ·init‖²` for a unit `init`.
pub(crate) fn leading_left_singular_vector(
    e: &DMatrix<f64>,
    init: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> DVector<f64> {
    let gram = e * e.transpose();
    let mut u = init.normalize();
    if !u.iter().all(|v| v.is_finite()) {
        u = DVector::from_element(e.nrows(), 1.0 / (e.nrows() as f64).sqrt());
    }
    let mut rayleigh = u.dot(&(&gram * &u));
    for _ in 0..max_iter {
        let next = &gram * &u;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        let candidate = next / norm;
        let value = candidate.dot(&(&gram * &candidate));
        if value < rayleigh {
            // Rounding only; keep the better vector.
            break;
        }
        let change = (value - rayleigh).abs();
        u = candidate;
        let converged = change <= rel_tol * value.abs();
        rayleigh = value;
        if converged {
            break;
        }
    }
    u
}
