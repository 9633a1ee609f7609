use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{esr_estimate, Dictionary, DictionaryLearner, LearnSpec, LearnStats};
use crate::error::{invalid, Result};

/// Overcomplete DCT dictionary: `K` cosine atoms
/// `dₖ(i) ∝ cos(π(i + ½)k / K)` over `n` samples, each normalized.
///
/// For `K = n` this is the orthonormal DCT-II basis.
pub fn overcomplete_dct(n: usize, k: usize) -> Result<Dictionary> {
    if n == 0 {
        return Err(invalid("DCT dictionary needs n ≥ 1"));
    }
    if k < n {
        return Err(invalid(format!("DCT dictionary needs K ≥ n (got K = {k}, n = {n})")));
    }
    let atoms = DMatrix::from_fn(n, k, |i, j| (PI * (i as f64 + 0.5) * j as f64 / k as f64).cos());
    Dictionary::normalized(atoms)
}

/// Parametric design; the training signals only fix `n` and the reported ESR.
#[derive(Debug, Clone, Copy, Default)]
pub struct DctDesign;

impl DictionaryLearner for DctDesign {
    fn name(&self) -> &'static str {
        "dct"
    }

    fn learn(&self, training: &DMatrix<f64>, spec: &LearnSpec) -> Result<(Dictionary, LearnStats)> {
        let dict = overcomplete_dct(training.nrows(), spec.atoms)?;
        let final_esr = if training.ncols() > 0 {
            esr_estimate(&dict, training, spec.sparsity.clamp(1, dict.k()))?
        } else {
            f64::NAN
        };
        Ok((
            dict,
            LearnStats {
                final_esr,
                ..LearnStats::default()
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::coherence;

    #[test]
    fn square_dct_is_orthonormal() {
        let d = overcomplete_dct(8, 8).unwrap();
        assert!(coherence(&d).unwrap() < 1e-12);
        let gram = d.atoms().tr_mul(d.atoms());
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-12);
    }

    #[test]
    fn overcomplete_dct_is_coherent_but_not_degenerate() {
        let d = overcomplete_dct(8, 16).unwrap();
        for col in d.atoms().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        let mu = coherence(&d).unwrap();
        assert!(mu > 0.0 && mu < 1.0, "{mu}");
    }

    #[test]
    fn undercomplete_is_rejected() {
        assert!(overcomplete_dct(8, 7).is_err());
    }
}
