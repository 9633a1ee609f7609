//! The sparse-representation detector and its classical baselines.
//!
//! A signal `y` is coded over the dictionary as `x`. The sufficient
//! statistic is `t = ⟨y, Dx⟩` and the likelihood-ratio test between
//! `H1: y = Dx + e + n` and `H0: y = n` (white `e` and `n` with per-entry
//! variances `σ_e²` and `σ_n²`) reads
//!
//! ```text
//! 2t − ‖Dx‖² + ‖y‖²·σ_e²/σ_n² − w·‖x‖₀ > C
//! ```
//!
//! with `w = γ` for the sparsity-penalized rule and `w = 0` otherwise. A
//! [`Detection`] reports `t` together with the value it must exceed,
//! `(C + ‖Dx‖² − ‖y‖²·σ_e²/σ_n² + w·‖x‖₀) / 2`.

use std::fmt;

use nalgebra::DVector;

use crate::dictionary::Dictionary;
use crate::error::{check_len, invalid, Error, Result};
use crate::sparse_coding::{coder_by_name, robust_solve, SolverConfig, SparseCode};

mod baselines;
mod calibrate;
mod theory;

pub use baselines::{matched_filter_stat, matched_subspace_stat, InterferenceBasis};
pub use calibrate::{calibrate_detector, calibrate_threshold, empirical_quantile, white_noise};
pub use theory::{linear_sparsity_factor, q_tail, q_tail_inv, theoretical_pd, theoretical_pd_sparse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

/// Settings of the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    /// Per-entry noise variance `σ_n²`.
    pub sigma_n2: f64,
    /// Per-entry model-error variance `σ_e²`.
    pub sigma_e2: f64,
    /// Sparsity penalty `γ`, used by the `sparse` rule.
    pub gamma: f64,
    /// Calibrated constant `C`; `None` until calibrated.
    pub threshold_c: Option<f64>,
    /// Registry name of the decision rule.
    pub rule: String,
    pub solver: SolverConfig,
}

impl DetectorParams {
    /// Plain rule, `σ_e² = 0`, `γ = 0`, uncalibrated.
    pub fn new(sigma_n2: f64) -> Self {
        Self {
            sigma_n2,
            sigma_e2: 0.0,
            gamma: 0.0,
            threshold_c: None,
            rule: "plain".to_string(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_n2 > 0.0) || !self.sigma_n2.is_finite() {
            return Err(invalid(format!("sigma_n2 = {} must be positive", self.sigma_n2)));
        }
        if !(self.sigma_e2 >= 0.0) || !self.sigma_e2.is_finite() {
            return Err(invalid(format!("sigma_e2 = {} must be nonnegative", self.sigma_e2)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid(format!("gamma = {} must be nonnegative", self.gamma)));
        }
        if let Some(c) = self.threshold_c {
            if !c.is_finite() {
                return Err(invalid("threshold constant C must be finite"));
            }
        }
        Ok(())
    }

    /// `σ_e² / σ_n²`.
    pub fn error_noise_ratio(&self) -> f64 {
        self.sigma_e2 / self.sigma_n2
    }
}

/// Outcome of [`sr_decide`] for one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub statistic_t: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
    pub code: SparseCode,
}

impl Detection {
    /// `t − threshold`; positive exactly when the decision is H1.
    pub fn margin(&self) -> f64 {
        self.statistic_t - self.threshold
    }
}

/// A decision rule: how the signal is coded and how strongly the code's
/// sparsity enters the threshold.
pub trait DecisionRule: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// The code whose reconstruction enters the statistic.
    fn code(&self, dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<SparseCode>;

    /// Weight `w` of `‖x‖₀` on the threshold side.
    fn sparsity_weight(&self, params: &DetectorParams) -> f64;
}

/// Equal-weight rule: threshold built from `C`, `‖Dx‖²` and `‖y‖²σ_e²/σ_n²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlainRule;

/// Plain rule plus `γ·‖x‖₀` on the threshold side.
#[derive(Debug, Clone, Copy, Default)]
pub struct SparsityPenalizedRule;

/// Plain threshold on the signal part of the identity-extended ℓ1 code.
#[derive(Debug, Clone, Copy, Default)]
pub struct RobustRule;

fn configured_code(dict: &Dictionary, y: &DVector<f64>, solver: &SolverConfig) -> Result<SparseCode> {
    coder_by_name(&solver.coder, solver)?.code(dict, y)
}

impl DecisionRule for PlainRule {
    fn name(&self) -> &'static str {
        "plain"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<SparseCode> {
        configured_code(dict, y, &params.solver)
    }

    fn sparsity_weight(&self, _: &DetectorParams) -> f64 {
        0.0
    }
}

impl DecisionRule for SparsityPenalizedRule {
    fn name(&self) -> &'static str {
        "sparse"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<SparseCode> {
        configured_code(dict, y, &params.solver)
    }

    fn sparsity_weight(&self, params: &DetectorParams) -> f64 {
        params.gamma
    }
}

impl DecisionRule for RobustRule {
    fn name(&self) -> &'static str {
        "robust"
    }

    fn code(&self, dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<SparseCode> {
        let s = &params.solver;
        Ok(robust_solve(dict, y, s.robust_rho, s.robust_lambda, s)?.code)
    }

    fn sparsity_weight(&self, _: &DetectorParams) -> f64 {
        0.0
    }
}

type RuleCtor = fn() -> Box<dyn DecisionRule>;

const RULES: &[(&str, RuleCtor)] = &[
    ("plain", || Box::new(PlainRule)),
    ("sparse", || Box::new(SparsityPenalizedRule)),
    ("robust", || Box::new(RobustRule)),
];

/// Names accepted by [`rule_by_name`].
pub fn rule_names() -> Vec<&'static str> {
    RULES.iter().map(|(name, _)| *name).collect()
}

pub fn rule_by_name(name: &str) -> Result<Box<dyn DecisionRule>> {
    RULES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor())
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "decision rule",
            name: name.to_string(),
            available: rule_names().join(", "),
        })
}

/// Everything the decision needs about one signal.
struct Evaluation {
    t: f64,
    reconstruction_energy: f64,
    signal_energy: f64,
    l0: usize,
    weight: f64,
    code: SparseCode,
}

impl Evaluation {
    /// `2t − ‖Dx‖² + ‖y‖²σ_e²/σ_n² − w‖x‖₀`.
    fn score(&self, params: &DetectorParams) -> f64 {
        2.0 * self.t - self.reconstruction_energy
            + self.signal_energy * params.error_noise_ratio()
            - self.weight * self.l0 as f64
    }

    /// The value `t` must exceed for a calibrated constant `c`.
    fn threshold(&self, params: &DetectorParams, c: f64) -> f64 {
        0.5 * (c + self.reconstruction_energy - self.signal_energy * params.error_noise_ratio()
            + self.weight * self.l0 as f64)
    }
}

fn evaluate(dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<Evaluation> {
    params.validate()?;
    check_len("signal length", dict.n(), y.len())?;
    let rule = rule_by_name(&params.rule)?;
    let code = rule.code(dict, y, params)?;
    let reconstruction = dict.synthesize(code.coefficients());
    Ok(Evaluation {
        t: y.dot(&reconstruction),
        reconstruction_energy: reconstruction.norm_squared(),
        signal_energy: y.norm_squared(),
        l0: code.l0(),
        weight: rule.sparsity_weight(params),
        code,
    })
}

/// The sufficient statistic `t = ⟨y, Dx⟩` and the code it was computed from.
pub fn sr_statistic(dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<(f64, SparseCode)> {
    let e = evaluate(dict, y, params)?;
    Ok((e.t, e.code))
}

/// Left-hand side of the likelihood-ratio test before the constant `C`:
/// `2t − ‖Dx‖² + ‖y‖²σ_e²/σ_n² − w‖x‖₀`. The rule decides H1 exactly when
/// this exceeds `C`, so it is the quantity to calibrate and to sweep in ROC
/// curves.
pub fn decision_score(dict: &Dictionary, y: &DVector<f64>, params: &DetectorParams) -> Result<f64> {
    evaluate(dict, y, params).map(|e| e.score(params))
}

/// Applies the configured rule to `y`.
pub fn sr_decide(y: &DVector<f64>, dict: &Dictionary, params: &DetectorParams) -> Result<Detection> {
    let c = params.threshold_c.ok_or(Error::UncalibratedThreshold)?;
    let e = evaluate(dict, y, params)?;
    let threshold = e.threshold(params, c);
    let decision = if e.t > threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(Detection {
        statistic_t: e.t,
        threshold,
        decision,
        code: e.code,
    })
}
