//! Dictionaries: the bank of matched subspaces.
//!
//! A [`Dictionary`] is an `n × K` matrix whose columns (atoms) have unit
//! ℓ2 norm. Dictionaries are either designed ([`dct::overcomplete_dct`]) or
//! learned from training signals by one of the [`DictionaryLearner`]
//! strategies, which are registered by name (see [`learner_by_name`]).

use nalgebra::{DMatrix, DVector, DVectorView};
use rayon::prelude::*;

use crate::error::{check_len, invalid, Error, Result};
use crate::sparse_coding::{omp, OmpStop, SparseCode};

pub mod dct;
pub mod kmeans;
pub mod ksvd;

pub use dct::{overcomplete_dct, DctDesign};
pub use kmeans::{kmeans_learn, KMeans};
pub use ksvd::{ksvd_learn, Ksvd, KsvdIteration};

/// Allowed deviation of an atom norm from one.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// `n × K` matrix of unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    /// Wraps `atoms`, checking that every column has unit norm within
    /// [`UNIT_NORM_TOL`] and that all entries are finite.
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        validate_shape(&atoms)?;
        for (j, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(invalid(format!("atom {j} has norm {norm}, expected 1")));
            }
        }
        Ok(Self { atoms })
    }

    /// Builds a dictionary by scaling every column of `atoms` to unit norm.
    pub fn normalized(mut atoms: DMatrix<f64>) -> Result<Self> {
        validate_shape(&atoms)?;
        for (j, mut col) in atoms.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(invalid(format!("atom {j} is the zero vector")));
            }
            col /= norm;
        }
        Ok(Self { atoms })
    }

    /// Ambient signal dimension.
    pub fn n(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms.
    pub fn k(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> DVectorView<'_, f64> {
        self.atoms.column(j)
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.atoms
    }

    /// `D·x`.
    pub fn synthesize(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        &self.atoms * coefficients
    }

    /// Dictionary with its atoms reordered: atom `j` of the result is atom
    /// `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_len("atom permutation", self.k(), order.len())?;
        let mut seen = vec![false; self.k()];
        for &j in order {
            if j >= self.k() || std::mem::replace(&mut seen[j], true) {
                return Err(invalid("atom order is not a permutation"));
            }
        }
        Ok(Self {
            atoms: crate::linalg::select_columns(&self.atoms, order),
        })
    }
}

impl AsRef<DMatrix<f64>> for Dictionary {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.atoms
    }
}

fn validate_shape(atoms: &DMatrix<f64>) -> Result<()> {
    if atoms.nrows() == 0 || atoms.ncols() == 0 {
        return Err(invalid("dictionary needs n ≥ 1 and K ≥ 1"));
    }
    if atoms.iter().any(|v| !v.is_finite()) {
        return Err(invalid("dictionary contains NaN or infinite entries"));
    }
    Ok(())
}

/// Flips the sign of `atom` so that its largest-magnitude entry is positive.
/// Returns `true` when the sign was flipped.
pub(crate) fn canonical_sign(atom: &mut DVector<f64>) -> bool {
    let mut best = 0.0f64;
    let mut value = 0.0;
    for v in atom.iter() {
        if v.abs() > best {
            best = v.abs();
            value = *v;
        }
    }
    if value < 0.0 {
        atom.neg_mut();
        true
    } else {
        false
    }
}

/// Mutual coherence `max_{i≠j} |dᵢᵀdⱼ|`.
pub fn coherence(dict: &Dictionary) -> Result<f64> {
    if dict.k() < 2 {
        return Err(invalid("coherence needs at least two atoms"));
    }
    let gram = dict.atoms.transpose() * &dict.atoms;
    let mut mu = 0.0f64;
    for i in 0..dict.k() {
        for j in (i + 1)..dict.k() {
            mu = mu.max(gram[(i, j)].abs());
        }
    }
    Ok(mu.min(1.0))
}

/// Energy split of a signal set coded over a dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsrReport {
    /// Mean `‖y − Dx‖²` over the signals.
    pub mean_residual_energy: f64,
    /// Mean `‖Dx‖²` over the signals.
    pub mean_signal_energy: f64,
    /// Signal dimension `n`.
    pub dimension: usize,
}

impl EsrReport {
    /// Error-to-signal ratio.
    pub fn esr(&self) -> f64 {
        self.mean_residual_energy / self.mean_signal_energy
    }

    /// Per-entry variance of the model error, `σ_e²`.
    pub fn model_error_variance(&self) -> f64 {
        self.mean_residual_energy / self.dimension as f64
    }
}

/// Codes every column of `signals` with OMP at sparsity `t` and reports the
/// residual and represented energies.
pub fn esr_report(dict: &Dictionary, signals: &DMatrix<f64>, t: usize) -> Result<EsrReport> {
    if signals.ncols() == 0 {
        return Err(invalid("ESR needs at least one signal"));
    }
    check_len("signal dimension", dict.n(), signals.nrows())?;
    if t == 0 || t > dict.k() {
        return Err(invalid(format!("sparsity {t} outside [1, {}]", dict.k())));
    }
    let codes = code_signals(dict, signals, OmpStop::sparsity(t))?;
    let mut residual = 0.0;
    let mut represented = 0.0;
    for code in &codes {
        residual += code.residual_norm().powi(2);
        represented += dict.synthesize(code.coefficients()).norm_squared();
    }
    let count = signals.ncols() as f64;
    if represented == 0.0 {
        return Err(Error::DegenerateData(
            "every sparse code is zero; ESR is undefined".into(),
        ));
    }
    Ok(EsrReport {
        mean_residual_energy: residual / count,
        mean_signal_energy: represented / count,
        dimension: dict.n(),
    })
}

/// Error-to-signal ratio `mean‖y − Dx‖² / mean‖Dx‖²` with OMP codes of
/// sparsity `t`.
pub fn esr_estimate(dict: &Dictionary, signals: &DMatrix<f64>, t: usize) -> Result<f64> {
    esr_report(dict, signals, t).map(|r| r.esr())
}

/// OMP codes of every column of `signals`, in column order.
pub fn code_signals(
    dict: &Dictionary,
    signals: &DMatrix<f64>,
    stop: OmpStop,
) -> Result<Vec<SparseCode>> {
    (0..signals.ncols())
        .into_par_iter()
        .map(|i| omp(dict, &signals.column(i).into_owned(), stop))
        .collect()
}

/// Settings shared by the dictionary learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnSpec {
    /// Number of atoms `K`.
    pub atoms: usize,
    /// Sparse-coding limit `T` (ignored by K-means, which always uses one atom).
    pub sparsity: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// Training trace of a learner.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnStats {
    /// Training RMSE after each iteration.
    pub per_iteration_rmse: Vec<f64>,
    /// ESR of the training set over the final dictionary.
    pub final_esr: f64,
    pub iterations_run: usize,
    /// K-SVD only: Frobenius error before and after each dictionary-update stage.
    pub stages: Vec<KsvdIteration>,
}

/// A dictionary construction strategy.
pub trait DictionaryLearner: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Learns (or designs) a dictionary for the columns of `training`.
    fn learn(&self, training: &DMatrix<f64>, spec: &LearnSpec) -> Result<(Dictionary, LearnStats)>;
}

type LearnerCtor = fn() -> Box<dyn DictionaryLearner>;

const LEARNERS: &[(&str, LearnerCtor)] = &[
    ("kmeans", || Box::new(KMeans)),
    ("ksvd", || Box::new(Ksvd)),
    ("dct", || Box::new(DctDesign)),
];

/// Names accepted by [`learner_by_name`].
pub fn learner_names() -> Vec<&'static str> {
    LEARNERS.iter().map(|(name, _)| *name).collect()
}

/// Looks up a dictionary learner by its registry name.
pub fn learner_by_name(name: &str) -> Result<Box<dyn DictionaryLearner>> {
    LEARNERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor())
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "dictionary learner",
            name: name.to_string(),
            available: learner_names().join(", "),
        })
}

/// Checks the training matrix shared preconditions and returns `n`.
pub(crate) fn check_training(training: &DMatrix<f64>, atoms: usize) -> Result<usize> {
    if atoms == 0 {
        return Err(invalid("need at least one atom"));
    }
    if training.ncols() < atoms {
        return Err(invalid(format!(
            "{} training signals cannot seed {atoms} atoms",
            training.ncols()
        )));
    }
    if training.nrows() == 0 {
        return Err(invalid("training signals are empty vectors"));
    }
    if training.iter().any(|v| !v.is_finite()) {
        return Err(invalid("training data contains NaN or infinite entries"));
    }
    Ok(training.nrows())
}
