//! Empirical Neyman–Pearson calibration of the threshold constant.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{decision_score, DetectorParams};
use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};

/// Minimum number of H0 draws for [`calibrate_threshold`].
pub const MIN_CALIBRATION_TRIALS: usize = 100;

/// Linear-interpolation quantile (the "type 7" definition): for sorted
/// values `v₀ ≤ … ≤ v_{m−1}` the `p` quantile is read at position `p·(m − 1)`.
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("quantile level {p} outside [0, 1]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid("quantile of a sample containing NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    })
}

/// `(1 − α)` quantile of `statistic` over `trials` draws of `h0_sampler`.
///
/// Draw `i` uses a ChaCha8 generator seeded with `seed` on stream `i`, so the
/// result does not depend on how the draws are scheduled.
pub fn calibrate_threshold<S, G>(
    statistic: S,
    h0_sampler: G,
    seed: u64,
    alpha: f64,
    trials: usize,
) -> Result<f64>
where
    S: Fn(&DVector<f64>) -> Result<f64> + Sync,
    G: Fn(&mut ChaCha8Rng) -> DVector<f64> + Sync,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie strictly inside (0, 1)")));
    }
    if trials < MIN_CALIBRATION_TRIALS {
        return Err(invalid(format!(
            "calibration needs at least {MIN_CALIBRATION_TRIALS} trials (got {trials})"
        )));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            statistic(&h0_sampler(&mut rng))
        })
        .collect::<Result<_>>()?;
    empirical_quantile(&values, 1.0 - alpha)
}

/// Draws white Gaussian noise of per-entry variance `variance`.
pub fn white_noise(rng: &mut ChaCha8Rng, n: usize, variance: f64) -> DVector<f64> {
    let sd = variance.sqrt();
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })
}

/// Calibrates `C` for `params` against white noise of variance `σ_n²`.
pub fn calibrate_detector(
    dict: &Dictionary,
    params: &DetectorParams,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    params.validate()?;
    let n = dict.n();
    calibrate_threshold(
        |y| decision_score(dict, y, params),
        |rng| white_noise(rng, n, params.sigma_n2),
        seed,
        alpha,
        trials,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{sr_decide, Hypothesis};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use statrs::distribution::{Binomial, DiscreteCDF};

    #[test]
    fn quantile_examples() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 4.0);
        assert_abs_diff_eq!(empirical_quantile(&v, 0.5).unwrap(), 2.5);
        assert_abs_diff_eq!(empirical_quantile(&v, 0.25).unwrap(), 1.75);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&v, 1.5).is_err());
    }

    #[test]
    fn constant_statistic() {
        let c = calibrate_threshold(|_| Ok(4.2), |_| DVector::zeros(1), 0, 0.05, 100).unwrap();
        assert_eq!(c, 4.2);
    }

    #[test]
    fn half_alpha_is_the_median() {
        let trials = 101;
        let sampler = |rng: &mut ChaCha8Rng| white_noise(rng, 1, 1.0);
        let c = calibrate_threshold(|y| Ok(y[0]), sampler, 7, 0.5, trials).unwrap();
        let mut draws: Vec<f64> = (0..trials)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                rng.set_stream(i as u64);
                sampler(&mut rng)[0]
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        assert_eq!(c, draws[50]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = |_: &DVector<f64>| Ok(0.0);
        let g = |_: &mut ChaCha8Rng| DVector::zeros(1);
        assert!(calibrate_threshold(s, g, 0, 0.0, 200).is_err());
        assert!(calibrate_threshold(s, g, 0, 0.1, 99).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let s = |y: &DVector<f64>| Ok(y.norm());
        let g = |rng: &mut ChaCha8Rng| white_noise(rng, 5, 2.0);
        assert_eq!(
            calibrate_threshold(s, g, 3, 0.1, 500).unwrap(),
            calibrate_threshold(s, g, 3, 0.1, 500).unwrap()
        );
    }

    #[test]
    fn held_out_false_alarm_rate_is_near_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = Dictionary::normalized(DMatrix::from_fn(12, 20, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let mut params = DetectorParams::new(0.5);
        params.solver.sparsity_limit = 2;
        let alpha = 0.1;
        params.threshold_c = Some(calibrate_detector(&d, &params, alpha, 4000, 1).unwrap());

        let held_out = 4000;
        let alarms = (0..held_out)
            .filter(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(999);
                rng.set_stream(*i);
                let y = white_noise(&mut rng, 12, 0.5);
                sr_decide(&y, &d, &params).unwrap().decision == Hypothesis::H1
            })
            .count() as u64;
        // 99% two-sided binomial acceptance region for the alarm count.
        let binom = Binomial::new(alpha, held_out).unwrap();
        let lo = (0..=held_out).find(|&k| binom.cdf(k) >= 0.005).unwrap();
        let hi = (0..=held_out).find(|&k| binom.cdf(k) >= 0.995).unwrap();
        // Calibration noise widens the spread; allow the calibration sample's
        // own 99% band on top.
        let slack = hi - lo;
        assert!(
            alarms + slack / 2 >= lo && alarms <= hi + slack / 2,
            "{alarms} alarms outside [{lo}, {hi}]"
        );
    }
}
