use nalgebra::{DMatrix, DVector};

use super::check_signal;
use crate::error::{invalid, Error, Result};
use crate::linalg::lstsq_full;

/// Unconstrained fit `x = (DᵀD)⁻¹Dᵀy`.
///
/// Requires `D` to have full column rank (so `K ≤ n`); a rank-deficient
/// design is an error rather than a silent pseudo-inverse.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_signal(design, y)?;
    let solve = lstsq_full(design)?;
    solve(y)
}

/// Ridge regression `x = (DᵀD + λI)⁻¹Dᵀy`.
pub fn ridge(design: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_signal(design, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("ridge penalty {lambda} must be a nonnegative number")));
    }
    if lambda == 0.0 {
        return least_squares(design, y);
    }
    let k = design.ncols();
    let system = design.tr_mul(design) + DMatrix::identity(k, k) * lambda;
    let rhs = design.tr_mul(y);
    system
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::NotPositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn orthonormal_design_is_a_transpose() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let d = DMatrix::from_row_slice(2, 2, &[c, -c, c, c]);
        let y = DVector::from_vec(vec![0.3, -1.7]);
        let x = least_squares(&d, &y).unwrap();
        assert_abs_diff_eq!(x, d.tr_mul(&y), epsilon = 1e-14);
        assert_eq!(least_squares(&d, &DVector::zeros(2)).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn two_by_two_normal_equations() {
        // Columns (1,0) and (1,1); y = (1,2). By hand: x₁ + x₂ = 1, x₂ = 2.
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let x = least_squares(&d, &y).unwrap();
        assert_abs_diff_eq!(x[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let wide = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            least_squares(&wide, &DVector::zeros(2)),
            Err(Error::RankDeficient { .. })
        ));
        let repeated = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            least_squares(&repeated, &DVector::zeros(3)),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            ridge(&repeated, &DVector::zeros(3), 0.0),
            Err(Error::RankDeficient { .. })
        ));
        assert!(ridge(&repeated, &DVector::zeros(3), 0.5).is_ok());
    }

    #[test]
    fn scalar_ridge() {
        let d = DMatrix::from_element(1, 1, 1.0);
        let x = ridge(&d, &DVector::from_element(1, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-15);
        assert!(ridge(&d, &DVector::from_element(1, 1.0), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_every_column(
            entries in proptest::collection::vec(-1.0f64..1.0, 18),
            y in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let mut d = DMatrix::from_vec(6, 3, entries);
            d += DMatrix::identity(6, 3) * 2.0;
            let y = DVector::from_vec(y);
            let x = least_squares(&d, &y).unwrap();
            let r = &y - &d * &x;
            prop_assert!(d.tr_mul(&r).amax() <= 1e-8);
            let x0 = ridge(&d, &y, 0.0).unwrap();
            prop_assert!((&x0 - &x).amax() <= 1e-10);
        }

        #[test]
        fn ridge_norm_bound(
            entries in proptest::collection::vec(-1.0f64..1.0, 24),
            y in proptest::collection::vec(-3.0f64..3.0, 4),
            lambda in 0.01f64..10.0,
        ) {
            let d = DMatrix::from_vec(4, 6, entries);
            let y = DVector::from_vec(y);
            let x = ridge(&d, &y, lambda).unwrap();
            prop_assert!(x.norm() <= d.tr_mul(&y).norm() / lambda + 1e-12);
        }
    }
}
