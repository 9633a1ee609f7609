//! Synthetic union-of-subspaces data.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    /// Atoms per H1 signal.
    pub t: usize,
    /// Signals per hypothesis.
    pub count: usize,
    /// `10·log₁₀(mean‖Dx‖² / σ_n²)`.
    pub snr_db: f64,
    /// `σ_e² / mean‖Dx‖²`.
    pub esr: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.t == 0 {
            return Err(invalid("n, K and T must be positive"));
        }
        if self.t > self.k {
            return Err(invalid(format!("T = {} exceeds K = {}", self.t, self.k)));
        }
        if self.count == 0 {
            return Err(invalid("count must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        if !(self.esr >= 0.0) || !self.esr.is_finite() {
            return Err(invalid(format!("esr = {} must be nonnegative", self.esr)));
        }
        Ok(())
    }

    /// Linear SNR.
    pub fn snr(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Output of [`synth_uos`]. Signal sets hold one signal per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub dict: Dictionary,
    /// `Dx + e + n`.
    pub h1: DMatrix<f64>,
    /// White noise.
    pub h0: DMatrix<f64>,
    /// Ground-truth codes, `K × count`, exactly `T` nonzeros per column.
    pub codes: DMatrix<f64>,
    /// `Dx` for every H1 signal.
    pub clean: DMatrix<f64>,
    /// Realized per-entry noise variance of the H1 set (also the H0 variance).
    pub sigma_n2: f64,
    /// Realized per-entry model-error variance.
    pub sigma_e2: f64,
}

impl SynthData {
    /// `mean‖Dx‖²` over the H1 set.
    pub fn mean_clean_energy(&self) -> f64 {
        self.clean.norm_squared() / self.clean.ncols() as f64
    }

    pub fn realized_snr(&self) -> f64 {
        self.mean_clean_energy() / self.sigma_n2
    }

    pub fn realized_esr(&self) -> f64 {
        self.sigma_e2 / self.mean_clean_energy()
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Per-entry sample variance around zero.
fn entry_power(m: &DMatrix<f64>) -> f64 {
    m.norm_squared() / m.len() as f64
}

/// Draws a random unit-norm dictionary, `count` H1 signals `Dx + e + n` and
/// `count` H0 signals `n`.
///
/// Codes have a uniformly random support of size `T` with standard normal
/// entries. The model error `e` and the H1 noise are white and rescaled so
/// that the sample values `σ_e² / mean‖Dx‖²` and `mean‖Dx‖² / σ_n²` equal the
/// configured ESR and SNR exactly. H0 noise is drawn with the same `σ_n`.
///
/// Independent pieces come from separate ChaCha8 streams of `seed`, so the
/// output is fully determined by the configuration.
pub fn synth_uos(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(s);
        rng
    };

    let dict = Dictionary::normalized(gaussian_matrix(&mut stream(0), cfg.n, cfg.k))?;

    let mut rng = stream(1);
    let mut codes = DMatrix::zeros(cfg.k, cfg.count);
    for i in 0..cfg.count {
        let support = rand::seq::index::sample(&mut rng, cfg.k, cfg.t);
        for j in support.iter() {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            while v == 0.0 {
                v = StandardNormal.sample(&mut rng);
            }
            codes[(j, i)] = v;
        }
    }
    let clean = dict.atoms() * &codes;
    let mean_energy = clean.norm_squared() / cfg.count as f64;

    let sigma_e2 = cfg.esr * mean_energy;
    let mut error = gaussian_matrix(&mut stream(2), cfg.n, cfg.count);
    if sigma_e2 > 0.0 {
        error *= (sigma_e2 / entry_power(&error)).sqrt();
    } else {
        error.fill(0.0);
    }

    let sigma_n2 = mean_energy / cfg.snr();
    let mut noise = gaussian_matrix(&mut stream(3), cfg.n, cfg.count);
    noise *= (sigma_n2 / entry_power(&noise)).sqrt();
    let h1 = &clean + error + noise;

    let h0 = gaussian_matrix(&mut stream(4), cfg.n, cfg.count) * sigma_n2.sqrt();

    Ok(SynthData {
        dict,
        h1,
        h0,
        codes,
        clean,
        sigma_n2,
        sigma_e2,
    })
}

/// Energy of a signal, the structure-blind detector.
pub fn energy_statistic(y: &DVector<f64>) -> f64 {
    y.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_basis;

    fn cfg() -> SynthConfig {
        SynthConfig {
            n: 12,
            k: 20,
            t: 3,
            count: 400,
            snr_db: 15.0,
            esr: 0.2,
            seed: 11,
        }
    }

    #[test]
    fn codes_have_exactly_t_nonzeros() {
        let data = synth_uos(&cfg()).unwrap();
        for col in data.codes.column_iter() {
            assert_eq!(col.iter().filter(|v| **v != 0.0).count(), 3);
        }
    }

    #[test]
    fn realized_ratios_match_configuration() {
        let data = synth_uos(&cfg()).unwrap();
        let snr_db = 10.0 * data.realized_snr().log10();
        assert!((snr_db - 15.0).abs() < 0.5);
        assert!((data.realized_esr() - 0.2).abs() < 1e-12);
        // Independent recomputation from the signals themselves.
        let noise_and_error = &data.h1 - &data.clean;
        let total = noise_and_error.norm_squared() / noise_and_error.len() as f64;
        let expected = data.sigma_n2 + data.sigma_e2;
        assert!((total - expected).abs() < 0.1 * expected, "{total} vs {expected}");
    }

    #[test]
    fn noiseless_error_free_signals_lie_in_their_subspace() {
        let c = SynthConfig { esr: 0.0, ..cfg() };
        let data = synth_uos(&c).unwrap();
        assert_eq!(data.sigma_e2, 0.0);
        for i in 0..20 {
            let support: Vec<usize> = (0..c.k).filter(|&j| data.codes[(j, i)] != 0.0).collect();
            let sub = crate::linalg::select_columns(data.dict.atoms(), &support);
            let q = orthonormal_basis(&sub, 1e-12);
            let y = data.clean.column(i);
            let proj = &q * q.tr_mul(&y);
            assert!((proj - y).norm() < 1e-10 * y.norm());
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(synth_uos(&cfg()).unwrap(), synth_uos(&cfg()).unwrap());
        let other = SynthConfig { seed: 12, ..cfg() };
        assert_ne!(synth_uos(&cfg()).unwrap().h1, synth_uos(&other).unwrap().h1);
    }

    #[test]
    fn validation() {
        assert!(synth_uos(&SynthConfig { t: 21, ..cfg() }).is_err());
        assert!(synth_uos(&SynthConfig { count: 0, ..cfg() }).is_err());
        assert!(synth_uos(&SynthConfig { esr: -0.1, ..cfg() }).is_err());
    }
}
