//! K-means: a dictionary of normalized cluster centroids.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_training, esr_estimate, Dictionary, DictionaryLearner, LearnSpec, LearnStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct KMeans;

impl DictionaryLearner for KMeans {
    fn name(&self) -> &'static str {
        "kmeans"
    }

    fn learn(&self, training: &DMatrix<f64>, spec: &LearnSpec) -> Result<(Dictionary, LearnStats)> {
        kmeans_learn(training, spec.atoms, spec.iterations, spec.seed)
    }
}

/// Lloyd's algorithm on the columns of `training`.
///
/// Initial centroids are `k` distinct training signals drawn uniformly
/// without replacement. A cluster that ends up empty is re-seeded with the
/// training signal farthest from its current centroid. The recorded RMSE is
/// the clustering error of the raw (unnormalized) centroids; the returned
/// atoms are the centroids scaled to unit norm.
pub fn kmeans_learn(
    training: &DMatrix<f64>,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<(Dictionary, LearnStats)> {
    let (centroids, rmse) = kmeans_centroids(training, k, iterations, seed)?;
    let iterations_run = rmse.len();
    let dict = normalize_centroids(training, centroids)?;
    let final_esr = esr_estimate(&dict, training, 1)?;
    Ok((
        dict,
        LearnStats {
            per_iteration_rmse: rmse,
            final_esr,
            iterations_run,
            stages: Vec::new(),
        },
    ))
}

/// Raw centroids (`n × k`) and the per-iteration clustering RMSE.
pub(crate) fn kmeans_centroids(
    training: &DMatrix<f64>,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = check_training(training, k)?;
    let count = training.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, count, k).into_vec();
    chosen.sort_unstable();
    let mut centroids = crate::linalg::select_columns(training, &chosen);

    let mut rmse = Vec::with_capacity(iterations);
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..iterations {
        let nearest: Vec<(usize, f64)> = (0..count)
            .into_par_iter()
            .map(|i| nearest_centroid(&centroids, &training.column(i).into_owned()))
            .collect();
        let mut next: Vec<usize> = nearest.iter().map(|(j, _)| *j).collect();
        let mut dist: Vec<f64> = nearest.iter().map(|(_, d)| *d).collect();

        let mut sizes = vec![0usize; k];
        for &j in &next {
            sizes[j] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            // Farthest point among clusters that can spare a member.
            let donor = (0..count)
                .filter(|&i| sizes[next[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                });
            let Some(i) = donor else { break };
            sizes[next[i]] -= 1;
            next[i] = empty;
            sizes[empty] = 1;
            dist[i] = 0.0;
            centroids.set_column(empty, &training.column(i));
        }

        let mut sums = DMatrix::zeros(n, k);
        for (i, &j) in next.iter().enumerate() {
            let mut col = sums.column_mut(j);
            col += training.column(i);
        }
        for j in 0..k {
            if sizes[j] > 0 {
                centroids.set_column(j, &(sums.column(j) / sizes[j] as f64));
            }
        }
        let sse: f64 = next
            .iter()
            .enumerate()
            .map(|(i, &j)| (training.column(i) - centroids.column(j)).norm_squared())
            .sum();
        rmse.push((sse / (count * n) as f64).sqrt());

        let converged = next == assignment;
        assignment = next;
        if converged {
            break;
        }
    }
    Ok((centroids, rmse))
}

fn nearest_centroid(centroids: &DMatrix<f64>, y: &DVector<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.column_iter().enumerate() {
        let d = (y - c).norm_squared();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Scales centroids to unit norm. A zero centroid is replaced by the
/// training signal with the largest norm that is not already used.
fn normalize_centroids(training: &DMatrix<f64>, mut centroids: DMatrix<f64>) -> Result<Dictionary> {
    let mut by_norm: Vec<usize> = (0..training.ncols()).collect();
    by_norm.sort_by(|&a, &b| {
        training
            .column(b)
            .norm()
            .total_cmp(&training.column(a).norm())
            .then(a.cmp(&b))
    });
    let mut spare = by_norm.into_iter();
    for j in 0..centroids.ncols() {
        if centroids.column(j).norm() == 0.0 {
            let i = spare
                .next()
                .filter(|&i| training.column(i).norm() > 0.0)
                .ok_or_else(|| Error::DegenerateData("all training signals are zero".into()))?;
            centroids.set_column(j, &training.column(i));
        }
    }
    Dictionary::normalized(centroids)
}
