use nalgebra::DVector;

use super::{check_signal, SparseCode};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::lstsq_on_columns;

/// Maximum number of supports [`exhaustive_sparse`] will enumerate.
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Brute-force ℓ0 oracle: the support of size at most `t` with the smallest
/// least-squares residual. Supports are visited by size, then
/// lexicographically, and only a strictly smaller residual replaces the
/// incumbent, so ties go to the smallest support. Supports whose columns are
/// numerically dependent are skipped (a smaller support spans the same space).
pub fn exhaustive_sparse(dict: &Dictionary, y: &DVector<f64>, t: usize) -> Result<SparseCode> {
    let d = dict.atoms();
    check_signal(d, y)?;
    let k = dict.k();
    let t = t.min(k);
    let combinations: u128 = (0..=t).map(|s| binomial(k, s)).sum();
    if combinations > EXHAUSTIVE_BUDGET {
        return Err(Error::BudgetExceeded {
            combinations,
            budget: EXHAUSTIVE_BUDGET,
        });
    }

    let mut best = SparseCode::zero(k, y.norm());
    let mut support: Vec<usize> = Vec::with_capacity(t);
    for size in 1..=t {
        support.clear();
        support.extend(0..size);
        loop {
            match lstsq_on_columns(d, &support, y) {
                Ok(fit) => {
                    let mut x = DVector::zeros(k);
                    for (&j, &c) in support.iter().zip(fit.iter()) {
                        x[j] = c;
                    }
                    let candidate = SparseCode::from_dense(d, y, x);
                    if candidate.residual_norm() < best.residual_norm() {
                        best = candidate;
                    }
                }
                Err(Error::SingularSupport { .. }) => {}
                Err(e) => return Err(e),
            }
            if !next_combination(&mut support, k) {
                break;
            }
        }
    }
    Ok(best)
}

/// Advances `c` to the next `c.len()`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let size = c.len();
    let mut i = size;
    while i > 0 {
        i -= 1;
        if c[i] < n - size + i {
            c[i] += 1;
            for j in (i + 1)..size {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn zero_sparsity_returns_zero_code() {
        let d = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let y = DVector::from_vec(vec![3.0, 4.0]);
        let code = exhaustive_sparse(&d, &y, 0).unwrap();
        assert_eq!(code.l0(), 0);
        assert_abs_diff_eq!(code.residual_norm(), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_single_atom() {
        let d = Dictionary::new(DMatrix::identity(2, 2)).unwrap();
        let code = exhaustive_sparse(&d, &DVector::from_vec(vec![3.0, 1.0]), 1).unwrap();
        assert_eq!(code.support(), &[0]);
        assert_abs_diff_eq!(code.coefficients()[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(code.residual_norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let d = Dictionary::normalized(DMatrix::from_element(4, 60, 1.0) + DMatrix::identity(4, 60)).unwrap();
        let err = exhaustive_sparse(&d, &DVector::zeros(4), 5).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(5, 0), 1);
    }
}
