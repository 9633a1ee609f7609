//! Empirical ROC curves.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub pf: f64,
    pub pd: f64,
    /// Decide H1 when the statistic is strictly above this value.
    pub threshold: f64,
}

/// ROC curve with strictly increasing `pf` and non-decreasing `pd`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    auc: f64,
}

impl RocCurve {
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// Probability that an H1 statistic exceeds an H0 statistic, ties counted
    /// half (the area under the empirical curve).
    pub fn auc(&self) -> f64 {
        self.auc
    }

    /// Best detection rate achievable at false-alarm rate at most `pf`.
    pub fn pd_at(&self, pf: f64) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.pf <= pf)
            .map(|p| p.pd)
            .fold(0.0, f64::max)
    }
}

/// ROC of a statistic from its values under both hypotheses.
///
/// The threshold sweeps every distinct pooled value from the largest down,
/// then `−∞`. At threshold `τ`, `pf` and `pd` are the fractions of H0 and H1
/// values strictly above `τ`. Among thresholds sharing one `pf` the point with
/// the largest `pd` is kept.
pub fn roc_from_scores(h0: &[f64], h1: &[f64]) -> Result<RocCurve> {
    if h0.is_empty() || h1.is_empty() {
        return Err(invalid("ROC needs statistics under both hypotheses"));
    }
    if h0.iter().chain(h1).any(|v| v.is_nan()) {
        return Err(invalid("ROC statistics contain NaN"));
    }
    let mut s0 = h0.to_vec();
    let mut s1 = h1.to_vec();
    s0.sort_by(|a, b| b.total_cmp(a));
    s1.sort_by(|a, b| b.total_cmp(a));
    let (n0, n1) = (s0.len() as f64, s1.len() as f64);

    let mut pooled: Vec<f64> = s0.iter().chain(&s1).copied().collect();
    pooled.sort_by(|a, b| b.total_cmp(a));
    pooled.dedup();
    pooled.push(f64::NEG_INFINITY);

    let mut points: Vec<RocPoint> = Vec::new();
    let (mut above0, mut above1) = (0usize, 0usize);
    for tau in pooled {
        while above0 < s0.len() && s0[above0] > tau {
            above0 += 1;
        }
        while above1 < s1.len() && s1[above1] > tau {
            above1 += 1;
        }
        let point = RocPoint {
            pf: above0 as f64 / n0,
            pd: above1 as f64 / n1,
            threshold: tau,
        };
        match points.last_mut() {
            Some(last) if last.pf == point.pf => *last = point,
            _ => points.push(point),
        }
    }
    Ok(RocCurve {
        points,
        auc: mann_whitney(&s0, &s1),
    })
}

/// `P(h1 > h0) + ½·P(h1 = h0)` from descending-sorted samples.
fn mann_whitney(s0: &[f64], s1: &[f64]) -> f64 {
    // For each H1 value count H0 values strictly below and equal.
    let mut asc0 = s0.to_vec();
    asc0.reverse();
    let mut wins = 0.0;
    for &v in s1 {
        let below = asc0.partition_point(|x| *x < v);
        let not_above = asc0.partition_point(|x| *x <= v);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    wins / (s0.len() as f64 * s1.len() as f64)
}

/// Evaluates `statistic` on every column of both sets (in parallel, results
/// kept in column order) and builds the ROC curve.
pub fn monte_carlo_roc<S>(statistic: S, h0: &DMatrix<f64>, h1: &DMatrix<f64>) -> Result<RocCurve>
where
    S: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let eval = |set: &DMatrix<f64>| -> Result<Vec<f64>> {
        (0..set.ncols())
            .into_par_iter()
            .map(|i| statistic(&set.column(i).into_owned()))
            .collect()
    };
    roc_from_scores(&eval(h0)?, &eval(h1)?)
}
