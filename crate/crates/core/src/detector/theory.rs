//! Closed-form detection curves.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{invalid, Result};

/// Standard normal upper tail, `Q(x) = P(Z > x)`.
pub fn q_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_tail`] on `(0, 1)`.
pub fn q_tail_inv(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie strictly inside (0, 1)")));
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * alpha);
    // Newton steps on Q(x) − α; Q'(x) = −φ(x).
    for _ in 0..3 {
        let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if density == 0.0 {
            break;
        }
        x += (q_tail(x) - alpha) / density;
    }
    Ok(x)
}

/// Detection probability at false-alarm rate `alpha` for linear `snr`
/// degraded by the model-error ratio: `Q(Q⁻¹(α) − √(snr/(1 + esr)))`.
pub fn theoretical_pd(alpha: f64, snr: f64, esr: f64) -> Result<f64> {
    theoretical_pd_sparse(alpha, snr, esr, |_| 1.0, 0)
}

/// Sparsity-aware variant `Q(f(s)·Q⁻¹(α) − √(snr/(1 + esr)))` for a
/// caller-supplied increasing `f` with `f(0) > 0`.
pub fn theoretical_pd_sparse(
    alpha: f64,
    snr: f64,
    esr: f64,
    f: impl Fn(usize) -> f64,
    s: usize,
) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(invalid(format!("snr = {snr} must be nonnegative")));
    }
    if !(esr >= 0.0) {
        return Err(invalid(format!("esr = {esr} must be nonnegative")));
    }
    let f0 = f(0);
    let fs = f(s);
    if !(f0 > 0.0) || !(fs >= f0) || !fs.is_finite() {
        return Err(invalid(format!(
            "sparsity factor must satisfy f(s) ≥ f(0) > 0 (f(0) = {f0}, f({s}) = {fs})"
        )));
    }
    let q_inv = q_tail_inv(alpha)?;
    Ok(q_tail(fs * q_inv - (snr / (1.0 + esr)).sqrt()))
}

/// `f(s) = 1 + c·s`.
pub fn linear_sparsity_factor(c: f64) -> impl Fn(usize) -> f64 {
    move |s| 1.0 + c * s as f64
}
