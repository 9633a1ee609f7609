//! K-SVD dictionary learning.

use nalgebra::{DMatrix, DVector};

use super::kmeans::kmeans_centroids;
use super::{
    canonical_sign, check_training, code_signals, esr_estimate, Dictionary, DictionaryLearner,
    LearnSpec, LearnStats,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::leading_left_singular_vector;
use crate::sparse_coding::OmpStop;

/// K-means iterations used to seed K-SVD.
pub const KMEANS_INIT_ITERATIONS: usize = 10;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 1000;
/// Atoms correlated above this with another atom are replaced.
const DUPLICATE_CORRELATION: f64 = 0.99;
/// Atoms used by fewer signals than this are replaced.
const MIN_USERS: usize = 4;

/// Frobenius training error around one dictionary-update stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsvdIteration {
    /// `‖Y − DX‖_F` after sparse coding with the previous dictionary.
    pub after_coding: f64,
    /// `‖Y − DX‖_F` after all atoms were updated.
    pub after_update: f64,
    /// Atoms replaced after the update (rarely used or duplicated).
    pub replaced: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ksvd;

impl DictionaryLearner for Ksvd {
    fn name(&self) -> &'static str {
        "ksvd"
    }

    fn learn(&self, training: &DMatrix<f64>, spec: &LearnSpec) -> Result<(Dictionary, LearnStats)> {
        ksvd_learn(training, spec.atoms, spec.sparsity, spec.iterations, spec.seed)
    }
}

/// K-SVD: alternates OMP coding at sparsity `t` with a sequential rank-1
/// update of every atom and its coefficients.
///
/// Atoms are signed so that their largest-magnitude entry is positive.
/// After each update, an atom used by fewer than four signals or nearly
/// parallel to another atom is replaced by a poorly represented training
/// signal, normalized.
pub fn ksvd_learn(
    training: &DMatrix<f64>,
    k: usize,
    t: usize,
    iterations: usize,
    seed: u64,
) -> Result<(Dictionary, LearnStats)> {
    let n = check_training(training, k)?;
    if t == 0 || t >= n {
        return Err(invalid(format!("K-SVD sparsity must satisfy 1 ≤ T < n (T = {t}, n = {n})")));
    }
    if training.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateData("all training signals are zero".into()));
    }
    let count = training.ncols();
    let (centroids, _) = kmeans_centroids(training, k, KMEANS_INIT_ITERATIONS, seed)?;
    let mut atoms = centroids;
    for j in 0..k {
        let mut col = atoms.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            col = DVector::from_fn(n, |i, _| if i == j % n { 1.0 } else { 0.0 });
        } else {
            col /= norm;
        }
        canonical_sign(&mut col);
        atoms.set_column(j, &col);
    }
    let mut dict = Dictionary::new(atoms)?;

    let mut stats = LearnStats::default();
    for _ in 0..iterations {
        let codes = code_signals(&dict, training, OmpStop::sparsity(t))?;
        let mut x = DMatrix::zeros(k, count);
        for (i, code) in codes.iter().enumerate() {
            x.set_column(i, code.coefficients());
        }
        let mut atoms = dict.into_matrix();
        let mut residual = training - &atoms * &x;
        let after_coding = residual.norm();

        let mut usage = vec![0usize; k];
        for j in 0..k {
            let users: Vec<usize> = (0..count).filter(|&i| x[(j, i)] != 0.0).collect();
            usage[j] = users.len();
            if users.is_empty() {
                continue;
            }
            let old = atoms.column(j).into_owned();
            // Restricted error with atom j's contribution put back.
            let mut e = DMatrix::zeros(n, users.len());
            for (c, &i) in users.iter().enumerate() {
                e.set_column(c, &(residual.column(i) + &old * x[(j, i)]));
            }
            let mut u = leading_left_singular_vector(&e, &old, POWER_TOL, POWER_MAX_ITER);
            canonical_sign(&mut u);
            let coeffs = e.tr_mul(&u);
            for (c, &i) in users.iter().enumerate() {
                x[(j, i)] = coeffs[c];
                residual.set_column(i, &(e.column(c) - &u * coeffs[c]));
            }
            atoms.set_column(j, &u);
        }

        let after_update = residual.norm();
        let replaced = clear_atoms(&mut atoms, &usage, &residual, training);
        stats.stages.push(KsvdIteration {
            after_coding,
            after_update,
            replaced,
        });
        stats
            .per_iteration_rmse
            .push(after_update / ((count * n) as f64).sqrt());
        stats.iterations_run += 1;
        dict = Dictionary::normalized(atoms)?;
    }
    stats.final_esr = esr_estimate(&dict, training, t)?;
    Ok((dict, stats))
}

/// Replaces rarely used and duplicated atoms with the worst-represented
/// training signals, each signal used at most once. Returns the count.
fn clear_atoms(
    atoms: &mut DMatrix<f64>,
    usage: &[usize],
    residual: &DMatrix<f64>,
    training: &DMatrix<f64>,
) -> usize {
    let k = atoms.ncols();
    let mut worst: Vec<usize> = (0..training.ncols())
        .filter(|&i| training.column(i).norm() > 0.0)
        .collect();
    worst.sort_by(|&a, &b| {
        residual
            .column(b)
            .norm_squared()
            .total_cmp(&residual.column(a).norm_squared())
            .then(a.cmp(&b))
    });
    let mut candidates = worst.into_iter();
    let mut replaced = 0;
    for j in 0..k {
        let duplicated = (0..k)
            .filter(|&i| i != j)
            .any(|i| atoms.column(i).dot(&atoms.column(j)).abs() > DUPLICATE_CORRELATION);
        if usage[j] >= MIN_USERS && !duplicated {
            continue;
        }
        let Some(i) = candidates.next() else { break };
        let mut col = training.column(i).normalize();
        canonical_sign(&mut col);
        atoms.set_column(j, &col);
        replaced += 1;
    }
    replaced
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn planted(n: usize, k: usize, t: usize, count: usize, seed: u64) -> (Dictionary, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth =
            Dictionary::normalized(DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng)))
                .unwrap();
        let mut y = DMatrix::zeros(n, count);
        for i in 0..count {
            let support = rand::seq::index::sample(&mut rng, k, t);
            for j in support.iter() {
                let mag: f64 = rng.random_range(0.5..1.5);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut col = y.column_mut(i);
                col += truth.atom(j) * (sign * mag);
            }
        }
        (truth, y)
    }

    #[test]
    fn each_update_stage_is_monotone() {
        let (_, y) = planted(10, 20, 2, 300, 5);
        let (_, stats) = ksvd_learn(&y, 20, 2, 8, 1).unwrap();
        assert_eq!(stats.stages.len(), 8);
        for stage in &stats.stages {
            assert!(
                stage.after_update <= stage.after_coding * (1.0 + 1e-12) + 1e-12,
                "{stage:?}"
            );
        }
    }

    #[test]
    fn atoms_are_unit_norm_and_signed() {
        let (_, y) = planted(8, 12, 2, 200, 8);
        let (dict, _) = ksvd_learn(&y, 12, 2, 5, 2).unwrap();
        for col in dict.atoms().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-9);
            let peak = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(peak > 0.0);
        }
    }

    #[test]
    fn rejects_bad_sparsity() {
        let y = DMatrix::from_element(4, 10, 1.0);
        assert!(ksvd_learn(&y, 5, 0, 3, 0).is_err());
        assert!(ksvd_learn(&y, 5, 4, 3, 0).is_err());
        assert!(matches!(
            ksvd_learn(&DMatrix::zeros(4, 10), 5, 1, 3, 0),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let (_, y) = planted(6, 10, 2, 100, 3);
        assert_eq!(ksvd_learn(&y, 10, 2, 3, 7).unwrap(), ksvd_learn(&y, 10, 2, 3, 7).unwrap());
    }
}
