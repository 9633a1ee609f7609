//! Evaluation harness: synthetic data, Monte Carlo ROC curves and the
//! error-to-signal ratio versus sparsity trade-off.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;

use crate::dictionary::{esr_estimate, Dictionary, DictionaryLearner, LearnSpec};
use crate::error::{invalid, Result};

mod roc;
mod synth;

pub use roc::{monte_carlo_roc, roc_from_scores, RocCurve, RocPoint};
pub use synth::{energy_statistic, synth_uos, SynthConfig, SynthData};

/// ESR of `training` over a fixed dictionary for every coding sparsity in
/// `t_range`.
pub fn esr_by_sparsity(
    dict: &Dictionary,
    training: &DMatrix<f64>,
    t_range: RangeInclusive<usize>,
) -> Result<Vec<(usize, f64)>> {
    if t_range.is_empty() || *t_range.start() == 0 || *t_range.end() > dict.k() {
        return Err(invalid(format!(
            "sparsity range {t_range:?} must lie within [1, {}]",
            dict.k()
        )));
    }
    t_range
        .map(|t| esr_estimate(dict, training, t).map(|esr| (t, esr)))
        .collect()
}

/// Learns one dictionary with `learner` and reports [`esr_by_sparsity`].
pub fn sparsity_esr_sweep(
    training: &DMatrix<f64>,
    learner: &dyn DictionaryLearner,
    spec: &LearnSpec,
    t_range: RangeInclusive<usize>,
) -> Result<Vec<(usize, f64)>> {
    if t_range.is_empty() || *t_range.start() == 0 || *t_range.end() > spec.atoms {
        return Err(invalid(format!(
            "sparsity range {t_range:?} must lie within [1, {}]",
            spec.atoms
        )));
    }
    let (dict, _) = learner.learn(training, spec)?;
    esr_by_sparsity(&dict, training, t_range)
}
