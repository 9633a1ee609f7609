//! ℓ1-regularized least squares, `min ‖y − Dx‖₂² + λ‖x‖₁`.
//!
//! A homotopy pass along the regularization path supplies a warm start; when
//! its end point already satisfies the optimality conditions it is returned
//! directly. Otherwise cyclic coordinate descent with soft thresholding runs
//! from the better of that point and zero. Once the sign pattern stops
//! changing between sweeps the solver tries the closed-form solution on that
//! pattern and keeps it when it satisfies the optimality conditions, which
//! takes the KKT residual down to rounding level.

use nalgebra::{DMatrix, DVector};

use super::{check_signal, SolverConfig, SparseCode};
use crate::error::{invalid, Error, Result};
use crate::linalg::select_columns;

/// Objective values recorded by [`l1_solve_traced`]: entry 0 is the value at
/// `x = 0`, then one entry per accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Trace {
    pub objectives: Vec<f64>,
    pub sweeps: usize,
}

/// `‖y − Dx‖₂² + λ‖x‖₁`.
pub fn l1_objective(design: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    (y - design * x).norm_squared() + lambda * x.lp_norm(1)
}

/// Largest violation of the optimality conditions at `x`.
///
/// With `g = 2Dᵀ(y − Dx)`: on the support the condition is `gⱼ = λ·sign(xⱼ)`,
/// off the support it is `|gⱼ| ≤ λ`.
pub fn kkt_residual(design: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    let g = design.tr_mul(&(y - design * x)) * 2.0;
    kkt_from_gradient(&g, x, lambda)
}

fn kkt_from_gradient(g: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    g.iter()
        .zip(x.iter())
        .map(|(gj, xj)| {
            if *xj != 0.0 {
                (gj - lambda * xj.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Solves the lasso problem to `config.convergence_tol` in KKT residual.
pub fn l1_solve(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    config: &SolverConfig,
) -> Result<SparseCode> {
    l1_solve_traced(design, y, lambda, config).map(|(code, _)| code)
}

/// [`l1_solve`] that also returns the objective trace.
pub fn l1_solve_traced(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    config: &SolverConfig,
) -> Result<(SparseCode, L1Trace)> {
    check_signal(design, y)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("l1 penalty {lambda} must be positive")));
    }
    let tol = config.convergence_tol;
    if !(tol > 0.0) {
        return Err(invalid("convergence_tol must be positive"));
    }
    let k = design.ncols();
    let col_sq: Vec<f64> = design.column_iter().map(|c| c.norm_squared()).collect();

    let mut x = DVector::zeros(k);
    let mut objective = y.norm_squared();
    let mut trace = L1Trace {
        objectives: vec![objective],
        sweeps: 0,
    };
    let finish = |x: DVector<f64>, trace: L1Trace| Ok((SparseCode::from_dense(design, y, x), trace));

    let gradient = design.tr_mul(y) * 2.0;
    if kkt_from_gradient(&gradient, &x, lambda) <= tol {
        return finish(x, trace);
    }

    if let Some(start) = homotopy(design, y, lambda, 4 * (k + design.nrows())) {
        let start_objective = l1_objective(design, y, &start, lambda);
        if start_objective <= objective {
            trace.objectives.push(start_objective);
            objective = start_objective;
            if kkt_residual(design, y, &start, lambda) <= tol {
                return finish(start, trace);
            }
            x = start;
        }
    }
    let mut residual = y - design * &x;

    let mut previous_signs: Vec<i8> = vec![0; k];
    for sweep in 1..=config.max_iterations {
        trace.sweeps = sweep;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = design.column(j);
            let rho = col.dot(&residual) + col_sq[j] * x[j];
            let updated = soft_threshold(rho, 0.5 * lambda) / col_sq[j];
            let delta = updated - x[j];
            if delta != 0.0 {
                residual.axpy(-delta, &col, 1.0);
                x[j] = updated;
            }
        }
        residual = y - design * &x;
        objective = residual.norm_squared() + lambda * x.lp_norm(1);
        trace.objectives.push(objective);

        let gradient = design.tr_mul(&residual) * 2.0;
        if kkt_from_gradient(&gradient, &x, lambda) <= tol {
            return finish(x, trace);
        }

        let signs: Vec<i8> = x.iter().map(|v| v.signum() as i8 * (*v != 0.0) as i8).collect();
        if signs == previous_signs {
            if let Some(candidate) = solve_on_pattern(design, y, &signs, lambda) {
                let cand_objective = l1_objective(design, y, &candidate, lambda);
                if cand_objective <= objective * (1.0 + 1e-12)
                    && kkt_residual(design, y, &candidate, lambda) <= tol
                {
                    trace.objectives.push(cand_objective);
                    return finish(candidate, trace);
                }
            }
        }
        previous_signs = signs;
    }
    Err(Error::NotConverged {
        iterations: config.max_iterations,
        last_objective: objective,
    })
}

/// Follows the piecewise-linear solution path from `λ = 2‖Dᵀy‖∞` down to
/// `lambda`, adding and dropping atoms at the path kinks, then re-solves the
/// final sign pattern in closed form. Returns `None` when a step hits a
/// singular active set or the step budget runs out.
fn homotopy(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    max_steps: usize,
) -> Option<DVector<f64>> {
    let k = design.ncols();
    let target = 0.5 * lambda;
    let mut x = DVector::zeros(k);
    let mut signs = vec![0i8; k];
    let mut corr = design.tr_mul(y);
    let (first, mut mu) = corr.iter().enumerate().fold((0, 0.0f64), |best, (j, c)| {
        if c.abs() > best.1 {
            (j, c.abs())
        } else {
            best
        }
    });
    if mu <= target {
        return Some(x);
    }
    signs[first] = corr[first].signum() as i8;
    for _ in 0..max_steps {
        let active: Vec<usize> = (0..k).filter(|&j| signs[j] != 0).collect();
        if active.len() > design.nrows() {
            return None;
        }
        let sub = select_columns(design, &active);
        let s = DVector::from_iterator(active.len(), active.iter().map(|&j| signs[j] as f64));
        let direction = sub.tr_mul(&sub).cholesky()?.solve(&s);
        let a = design.tr_mul(&(&sub * &direction));

        let mut step = mu - target;
        let mut event: Option<(usize, bool)> = None;
        for j in 0..k {
            if signs[j] != 0 {
                continue;
            }
            for (num, den) in [(mu - corr[j], 1.0 - a[j]), (mu + corr[j], 1.0 + a[j])] {
                if den > 1e-12 {
                    let g = num / den;
                    if g > 1e-14 * mu && g < step {
                        step = g;
                        event = Some((j, true));
                    }
                }
            }
        }
        for (c, &j) in active.iter().enumerate() {
            if direction[c] != 0.0 {
                let g = -x[j] / direction[c];
                if g > 1e-14 * mu && g < step {
                    step = g;
                    event = Some((j, false));
                }
            }
        }

        for (c, &j) in active.iter().enumerate() {
            x[j] += step * direction[c];
        }
        mu -= step;
        match event {
            None => break,
            Some((j, true)) => {
                corr = design.tr_mul(&(y - design * &x));
                signs[j] = corr[j].signum() as i8;
            }
            Some((j, false)) => {
                x[j] = 0.0;
                signs[j] = 0;
                corr = design.tr_mul(&(y - design * &x));
            }
        }
    }
    if signs.iter().all(|s| *s == 0) {
        return Some(DVector::zeros(k));
    }
    solve_on_pattern(design, y, &signs, lambda)
}

/// Closed-form minimizer when the sign pattern `s` of the solution is known:
/// `x_A = (D_AᵀD_A)⁻¹(D_Aᵀy − λ/2·s_A)`, zero elsewhere. Returns `None` when
/// the system is singular or the signs come out inconsistent.
fn solve_on_pattern(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    signs: &[i8],
    lambda: f64,
) -> Option<DVector<f64>> {
    let active: Vec<usize> = (0..signs.len()).filter(|&j| signs[j] != 0).collect();
    if active.is_empty() || active.len() > design.nrows() {
        return None;
    }
    let sub = select_columns(design, &active);
    let s = DVector::from_iterator(active.len(), active.iter().map(|&j| signs[j] as f64));
    let rhs = sub.tr_mul(y) - s.clone() * (0.5 * lambda);
    let z = sub.tr_mul(&sub).cholesky()?.solve(&rhs);
    if z.iter().zip(s.iter()).any(|(zi, si)| zi * si <= 0.0 || !zi.is_finite()) {
        return None;
    }
    let mut x = DVector::zeros(design.ncols());
    for (&j, zi) in active.iter().zip(z.iter()) {
        x[j] = *zi;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn config() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn scalar_soft_threshold() {
        let d = DMatrix::from_element(1, 1, 1.0);
        let code = l1_solve(&d, &DVector::from_element(1, 3.0), 2.0, &config()).unwrap();
        assert_abs_diff_eq!(code.coefficients()[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn large_penalty_gives_zero() {
        let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, -0.2, 0.3, 1.0, 0.9]);
        let y = DVector::from_vec(vec![1.0, -2.0]);
        let lambda = 2.0 * d.tr_mul(&y).amax();
        let code = l1_solve(&d, &y, lambda, &config()).unwrap();
        assert_eq!(code.l0(), 0);
        assert_abs_diff_eq!(code.residual_norm(), y.norm(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_nonpositive_penalty() {
        let d = DMatrix::from_element(1, 1, 1.0);
        assert!(l1_solve(&d, &DVector::from_element(1, 1.0), 0.0, &config()).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let d = DMatrix::from_fn(10, 20, |_, _| StandardNormal.sample(&mut rng));
        let y = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
        let cfg = SolverConfig {
            max_iterations: 1,
            convergence_tol: 1e-300,
            ..config()
        };
        match l1_solve(&d, &y, 0.1, &cfg) {
            Err(Error::NotConverged {
                iterations,
                last_objective,
            }) => {
                assert_eq!(iterations, 1);
                assert!(last_objective.is_finite() && last_objective > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn objective_decreases_and_kkt_holds(seed in 0u64..100_000, lambda in 0.01f64..3.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = DMatrix::from_fn(10, 20, |_, _| StandardNormal.sample(&mut rng));
            let y = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
            let (code, trace) = l1_solve_traced(&d, &y, lambda, &config()).unwrap();
            for pair in trace.objectives.windows(2) {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
            }
            prop_assert!(kkt_residual(&d, &y, code.coefficients(), lambda) <= 1e-8);
        }
    }
}
