//! Classical detectors: the matched filter and the matched subspace detector.

use nalgebra::{DMatrix, DVector};

use crate::dictionary::Dictionary;
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::orthonormal_basis;

/// Condition estimate above which an interference basis is rank deficient.
const INTERFERENCE_CONDITION_LIMIT: f64 = 1e10;
const RANK_TOL: f64 = 1e-10;

/// `sᵀR⁻¹y` for a symmetric positive definite covariance `R`.
pub fn matched_filter_stat(s: &DVector<f64>, r: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let n = s.len();
    check_len("covariance rows", n, r.nrows())?;
    check_len("covariance columns", n, r.ncols())?;
    check_len("signal length", n, y.len())?;
    let scale = r.amax().max(f64::MIN_POSITIVE);
    if (r - r.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = r.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(s.dot(&chol.solve(y)))
}

/// Known interference subspace `span(C)` with `p < n` independent columns.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceBasis {
    columns: DMatrix<f64>,
    orthonormal: DMatrix<f64>,
}

impl InterferenceBasis {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let (n, p) = columns.shape();
        if p == 0 || p >= n {
            return Err(invalid(format!("interference basis needs 1 ≤ p < n (p = {p}, n = {n})")));
        }
        let sv = columns.singular_values();
        let condition = sv.max() / sv.min();
        if !(condition <= INTERFERENCE_CONDITION_LIMIT) {
            return Err(Error::RankDeficient { condition });
        }
        let orthonormal = orthonormal_basis(&columns, 0.0);
        Ok(Self { columns, orthonormal })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn rank(&self) -> usize {
        self.orthonormal.ncols()
    }

    /// `P_C^⊥ m`, column by column.
    fn project_out(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m - &self.orthonormal * self.orthonormal.tr_mul(m)
    }
}

/// Energy of `y` in the part of `span(D)` outside the interference subspace:
/// `yᵀ P_C^⊥ P_DC P_C^⊥ y`. Without interference this is `‖P_D y‖²`.
pub fn matched_subspace_stat(
    dict: &Dictionary,
    interference: Option<&InterferenceBasis>,
    y: &DVector<f64>,
) -> Result<f64> {
    let n = dict.n();
    check_len("signal length", n, y.len())?;
    let y_mat = DMatrix::from_column_slice(n, 1, y.as_slice());
    let (d, y_clean) = match interference {
        None => (dict.atoms().clone(), y_mat),
        Some(c) => {
            check_len("interference basis rows", n, c.columns.nrows())?;
            (c.project_out(dict.atoms()), c.project_out(&y_mat))
        }
    };
    let basis = orthonormal_basis(&d, RANK_TOL);
    if basis.ncols() == 0 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    if let Some(c) = interference {
        if c.rank() + basis.ncols() >= n {
            return Err(invalid(format!(
                "interference rank {} plus signal rank {} leaves no room in dimension {n}",
                c.rank(),
                basis.ncols()
            )));
        }
    }
    let coords = basis.tr_mul(&y_clean);
    Ok(coords.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn matched_filter_examples() {
        let s = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let y = DVector::from_vec(vec![0.5, 1.0, 3.0]);
        assert_abs_diff_eq!(
            matched_filter_stat(&s, &DMatrix::identity(3, 3), &y).unwrap(),
            s.dot(&y),
            epsilon = 1e-15
        );
        let orth = DVector::from_vec(vec![2.0, -1.0, 0.0]);
        assert_eq!(matched_filter_stat(&s, &DMatrix::identity(3, 3), &orth).unwrap(), 0.0);
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let ones = DVector::from_element(2, 1.0);
        assert_abs_diff_eq!(matched_filter_stat(&ones, &r, &ones).unwrap(), 1.25, epsilon = 1e-15);
    }

    #[test]
    fn matched_filter_rejects_indefinite() {
        let ones = DVector::from_element(2, 1.0);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(matched_filter_stat(&ones, &r, &ones), Err(Error::NotPositiveDefinite)));
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(matched_filter_stat(&ones, &r, &ones), Err(Error::NotPositiveDefinite)));
    }

    fn dict2in4() -> Dictionary {
        let m = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        Dictionary::normalized(m).unwrap()
    }

    #[test]
    fn subspace_without_interference() {
        let d = dict2in4();
        let inside = DVector::from_vec(vec![2.0, -1.0, -1.0, 0.0]);
        assert_abs_diff_eq!(matched_subspace_stat(&d, None, &inside).unwrap(), 6.0, epsilon = 1e-12);
        let outside = DVector::from_vec(vec![0.0, 1.0, -1.0, 3.0]);
        assert_abs_diff_eq!(matched_subspace_stat(&d, None, &outside).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn subspace_with_interference() {
        let d = dict2in4();
        let c = InterferenceBasis::new(DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 0.0, 0.0])).unwrap();
        let y = DVector::from_vec(vec![3.0, 3.0, 0.0, 0.0]);
        assert_abs_diff_eq!(matched_subspace_stat(&d, Some(&c), &y).unwrap(), 0.0, epsilon = 1e-12);

        // Oracle: project with explicit matrices.
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 4.0]);
        let cm = c.columns();
        let pc_perp = DMatrix::identity(4, 4) - cm * (cm.tr_mul(cm)).try_inverse().unwrap() * cm.transpose();
        let dp = &pc_perp * d.atoms();
        let pdc = &dp * (dp.tr_mul(&dp)).try_inverse().unwrap() * dp.transpose();
        let oracle = (y.transpose() * &pc_perp * pdc * &pc_perp * &y)[(0, 0)];
        assert_abs_diff_eq!(matched_subspace_stat(&d, Some(&c), &y).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn interference_validation() {
        assert!(InterferenceBasis::new(DMatrix::zeros(4, 0)).is_err());
        assert!(InterferenceBasis::new(DMatrix::identity(3, 3)).is_err());
        let dependent = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(InterferenceBasis::new(dependent), Err(Error::RankDeficient { .. })));
        // Signal subspace swallowed by the interference.
        let d = Dictionary::new(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let c = InterferenceBasis::new(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        assert!(matched_subspace_stat(&d, Some(&c), &DVector::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn subspace_energy_is_bounded(seed in 0u64..10_000, k in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = Dictionary::normalized(DMatrix::from_fn(8, k, |_, _| StandardNormal.sample(&mut rng))).unwrap();
            let y = DVector::from_fn(8, |_, _| StandardNormal.sample(&mut rng));
            let stat = matched_subspace_stat(&d, None, &y).unwrap();
            prop_assert!(stat >= 0.0 && stat <= y.norm_squared() * (1.0 + 1e-12));
        }
    }
}
