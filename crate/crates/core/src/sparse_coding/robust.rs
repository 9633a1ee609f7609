//! Robust coding against gross errors.
//!
//! The signal is modelled as `y = Dx + e + n` with a sparse gross-error
//! vector `e`. Stacking `B = [D | (ρ/λ)·I]` and `z = [x; e]` turns the
//! Huber-type fit into a plain ℓ1 problem `min ‖y − Bz‖² + ρ‖z‖₁`, which is
//! handed to [`l1_solve`] unchanged.

use nalgebra::{DMatrix, DVector};

use super::{check_signal, l1_solve, SolverConfig, SparseCode};
use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};

/// Output of [`robust_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct RobustCode {
    /// Dictionary part `x`; its residual is `‖y − Dx‖`.
    pub code: SparseCode,
    /// Gross-error coefficients `e` (length `n`), in units of the scaled
    /// identity block: the modelled error signal is `(ρ/λ)·e`.
    pub error: DVector<f64>,
    /// The solution `z = [x; e]` over the extended dictionary.
    pub extended: SparseCode,
    /// Scale `ρ/λ` of the identity block.
    pub identity_scale: f64,
}

impl RobustCode {
    /// The modelled gross-error signal `(ρ/λ)·e`.
    pub fn error_signal(&self) -> DVector<f64> {
        &self.error * self.identity_scale
    }
}

/// `[D | scale·I]`.
pub fn extended_dictionary(dict: &Dictionary, scale: f64) -> DMatrix<f64> {
    let n = dict.n();
    let k = dict.k();
    let mut b = DMatrix::zeros(n, k + n);
    b.columns_mut(0, k).copy_from(dict.atoms());
    for i in 0..n {
        b[(i, k + i)] = scale;
    }
    b
}

/// Robust sparse coding over the identity-extended dictionary.
pub fn robust_solve(
    dict: &Dictionary,
    y: &DVector<f64>,
    rho: f64,
    lambda: f64,
    config: &SolverConfig,
) -> Result<RobustCode> {
    check_signal(dict.atoms(), y)?;
    if !(rho > 0.0) || !(lambda > 0.0) || !rho.is_finite() || !lambda.is_finite() {
        return Err(invalid("robust rho and lambda must be positive"));
    }
    let scale = rho / lambda;
    let b = extended_dictionary(dict, scale);
    let extended = l1_solve(&b, y, rho, config)?;

    let k = dict.k();
    let z = extended.coefficients();
    let x = z.rows(0, k).into_owned();
    let error = z.rows(k, dict.n()).into_owned();
    let code = SparseCode::from_dense(dict.atoms(), y, x);
    Ok(RobustCode {
        code,
        error,
        extended,
        identity_scale: scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dict(seed: u64, n: usize, k: usize) -> Dictionary {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Dictionary::normalized(DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng))).unwrap()
    }

    fn sparse_signal(dict: &Dictionary, atoms: &[(usize, f64)]) -> DVector<f64> {
        let mut x = DVector::zeros(dict.k());
        for &(j, c) in atoms {
            x[j] = c;
        }
        dict.synthesize(&x)
    }

    #[test]
    fn clean_signal_leaves_error_empty() {
        let dict = random_dict(11, 16, 24);
        let y = sparse_signal(&dict, &[(3, 2.0), (17, -1.5)]);
        let cfg = SolverConfig::default();
        let rho = 0.05;
        let plain = l1_solve(dict.atoms(), &y, rho, &cfg).unwrap();
        // Breakpoint far above any residual entry of the plain solution.
        let lambda = 10.0 * y.norm();
        let robust = robust_solve(&dict, &y, rho, lambda, &cfg).unwrap();
        assert!(robust.error.amax() < 1e-6 * y.norm());
        assert_eq!(robust.code.support(), plain.support());
        assert!((robust.code.coefficients() - plain.coefficients()).amax() < 1e-8);
    }

    #[test]
    fn spike_lands_in_the_error_part() {
        let dict = random_dict(5, 24, 40);
        let mut y = sparse_signal(&dict, &[(1, 1.0), (9, -0.8), (30, 0.6)]);
        let spike_at = 13;
        y[spike_at] += 10.0 * y.amax();
        let robust = robust_solve(&dict, &y, 0.05, 0.05, &SolverConfig::default()).unwrap();
        assert_eq!(robust.error.iamax(), spike_at);
    }

    #[test]
    fn overwhelming_penalty_zeroes_everything() {
        let dict = random_dict(2, 8, 12);
        let y = sparse_signal(&dict, &[(0, 1.0), (5, 2.0)]);
        let r = robust_solve(&dict, &y, 1e9, 0.5, &SolverConfig::default()).unwrap();
        assert_eq!(r.code.l0(), 0);
        assert!(r.error.amax() < 1e-6);
        // With the breakpoint above 2‖y‖∞ the error part is exactly zero.
        let r = robust_solve(&dict, &y, 1e9, 2.5 * y.amax(), &SolverConfig::default()).unwrap();
        assert_eq!(r.code.l0(), 0);
        assert_eq!(r.error.amax(), 0.0);
    }

    #[test]
    fn identical_to_l1_on_the_extended_dictionary() {
        let dict = random_dict(8, 10, 15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let y = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
        let cfg = SolverConfig::default();
        let robust = robust_solve(&dict, &y, 0.2, 0.7, &cfg).unwrap();
        let direct = l1_solve(&extended_dictionary(&dict, 0.2 / 0.7), &y, 0.2, &cfg).unwrap();
        assert_eq!(robust.extended, direct);
        let recon = dict.synthesize(robust.code.coefficients()) + robust.error_signal();
        assert!(((&y - recon).norm() - direct.residual_norm()).abs() < 1e-12);
    }
}
