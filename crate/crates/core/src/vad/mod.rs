//! Voice activity detection on 24-dimensional frame features.
//!
//! Audio is cut into frames, each frame becomes a feature vector, the
//! features are referenced to the recording's noise floor and every frame is
//! passed through the detector.
//!
//! The detector's H0 model is zero-mean white noise, while raw log-energy
//! features of background noise sit far from zero. Subtracting the mean
//! features of the quietest frames (the noise floor) moves noise-only frames
//! to the origin, where that model applies.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use rand::Rng;

use crate::detector::{calibrate_threshold, decision_score, sr_decide, Detection, DetectorParams};
use crate::dictionary::Dictionary;
use crate::error::{check_len, invalid, Error, Result};

mod corpus;
mod features;
mod wav;

pub use corpus::{frame_labels, synth_speech, white_noise_signal, SpeechCorpus, SpeechCorpusConfig};
pub use features::{
    extract_features, frame_signal, FeatureExtractor, FeatureVector, FrameConfig, CEPSTRA,
    FEATURE_DIM, LOG_FLOOR, MEL_BANDS,
};
pub use wav::{read_wav, write_wav, REQUIRED_RATE_HZ};

/// Index of the total log energy in a feature vector.
pub const LOG_ENERGY_INDEX: usize = CEPSTRA + MEL_BANDS;
/// Fraction of quietest frames that defines the noise floor.
pub const NOISE_FLOOR_FRACTION: f64 = 0.1;
/// Training frames below this fraction of the median frame energy are silent.
pub const SILENCE_FRACTION: f64 = 0.01;
/// SNRs at or above this are treated as noise-free by [`mix_noise`].
pub const CLEAN_SNR_DB: f64 = 200.0;

/// Features of every frame, one column per frame.
pub fn signal_features(samples: &[f64], cfg: &FrameConfig) -> Result<DMatrix<f64>> {
    let extractor = FeatureExtractor::new(*cfg);
    let frames = frame_signal(samples, cfg);
    let cols: Vec<DVector<f64>> = frames
        .par_iter()
        .map(|f| extractor.extract(f))
        .collect::<Result<_>>()?;
    Ok(if cols.is_empty() {
        DMatrix::zeros(FEATURE_DIM, 0)
    } else {
        DMatrix::from_columns(&cols)
    })
}

/// Mean features of the quietest frames and their per-entry spread.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFloor {
    pub mean: DVector<f64>,
    /// Per-entry variance of the floor frames around `mean`.
    pub variance: f64,
}

impl NoiseFloor {
    /// Uses the `fraction` of frames with the lowest total log energy
    /// (at least one frame).
    pub fn estimate(features: &DMatrix<f64>, fraction: f64) -> Result<Self> {
        check_len("feature dimension", FEATURE_DIM, features.nrows())?;
        if features.ncols() == 0 {
            return Err(Error::DegenerateData("no frames to estimate a noise floor".into()));
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(format!("noise-floor fraction {fraction} outside (0, 1]")));
        }
        let mut order: Vec<usize> = (0..features.ncols()).collect();
        order.sort_by(|&a, &b| {
            features[(LOG_ENERGY_INDEX, a)]
                .total_cmp(&features[(LOG_ENERGY_INDEX, b)])
                .then(a.cmp(&b))
        });
        let count = ((fraction * features.ncols() as f64).ceil() as usize).max(1);
        let chosen = &order[..count];
        let mut mean = DVector::zeros(FEATURE_DIM);
        for &i in chosen {
            mean += features.column(i);
        }
        mean /= count as f64;
        let spread: f64 = chosen
            .iter()
            .map(|&i| (features.column(i) - &mean).norm_squared())
            .sum();
        Ok(Self {
            mean,
            variance: spread / (count * FEATURE_DIM) as f64,
        })
    }

    /// `features − mean` column by column.
    pub fn apply(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = features.clone();
        for mut col in out.column_iter_mut() {
            col -= &self.mean;
        }
        out
    }
}

/// Frame features referenced to the signal's own noise floor.
pub fn referenced_features(samples: &[f64], cfg: &FrameConfig) -> Result<(DMatrix<f64>, Option<NoiseFloor>)> {
    let features = signal_features(samples, cfg)?;
    if features.ncols() == 0 {
        return Ok((features, None));
    }
    let floor = NoiseFloor::estimate(&features, NOISE_FLOOR_FRACTION)?;
    Ok((floor.apply(&features), Some(floor)))
}

/// Referenced features of clean training audio with silent frames dropped
/// (frame energy below [`SILENCE_FRACTION`] of the median frame energy).
pub fn training_features(samples: &[f64], cfg: &FrameConfig) -> Result<DMatrix<f64>> {
    let (features, _) = referenced_features(samples, cfg)?;
    let energies: Vec<f64> = frame_signal(samples, cfg)
        .iter()
        .map(|f| f.iter().map(|x| x * x).sum())
        .collect();
    if energies.is_empty() {
        return Err(Error::DegenerateData("training audio is shorter than one frame".into()));
    }
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let keep: Vec<usize> = (0..energies.len())
        .filter(|&i| energies[i] >= SILENCE_FRACTION * median)
        .collect();
    Ok(crate::linalg::select_columns(&features, &keep))
}

/// `clean + g·noise` with `g` chosen so that `10·log₁₀(P_clean / P_gnoise)`
/// equals `snr_db`. Noise longer than `clean` is truncated.
pub fn mix_noise(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<Vec<f64>> {
    if noise.len() < clean.len() {
        return Err(invalid(format!(
            "noise has {} samples but the clean signal has {}",
            noise.len(),
            clean.len()
        )));
    }
    if snr_db.is_nan() {
        return Err(invalid("snr_db is NaN"));
    }
    let power = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
    let p_clean = power(clean);
    if !(p_clean > 0.0) {
        return Err(Error::DegenerateData("clean signal is silent".into()));
    }
    if snr_db >= CLEAN_SNR_DB {
        return Ok(clean.to_vec());
    }
    let noise = &noise[..clean.len()];
    let p_noise = power(noise);
    if !(p_noise > 0.0) {
        return Err(Error::DegenerateData("noise signal is silent".into()));
    }
    let gain = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    Ok(clean.iter().zip(noise).map(|(c, n)| c + gain * n).collect())
}

fn check_dim(dict: &Dictionary) -> Result<()> {
    check_len("dictionary dimension (feature length)", FEATURE_DIM, dict.n())
}

/// One detection per frame, in frame order.
pub fn vad_run(
    samples: &[f64],
    dict: &Dictionary,
    params: &DetectorParams,
    cfg: &FrameConfig,
) -> Result<Vec<Detection>> {
    check_dim(dict)?;
    let (features, _) = referenced_features(samples, cfg)?;
    (0..features.ncols())
        .into_par_iter()
        .map(|i| sr_decide(&features.column(i).into_owned(), dict, params))
        .collect()
}

/// Per-frame detector scores (the quantity compared against `C`), for ROC
/// curves over the decision threshold.
pub fn vad_scores(
    samples: &[f64],
    dict: &Dictionary,
    params: &DetectorParams,
    cfg: &FrameConfig,
) -> Result<Vec<f64>> {
    check_dim(dict)?;
    let (features, _) = referenced_features(samples, cfg)?;
    (0..features.ncols())
        .into_par_iter()
        .map(|i| decision_score(dict, &features.column(i).into_owned(), params))
        .collect()
}

/// Calibrates `C` for a false-alarm rate `alpha` on a noise-only recording.
///
/// Each H0 draw is a uniformly chosen frame of `noise`, referenced to the
/// noise recording's own floor. Referenced features do not depend on the
/// recording gain, so the noise may be supplied at any level.
pub fn calibrate_on_noise(
    noise: &[f64],
    dict: &Dictionary,
    params: &DetectorParams,
    cfg: &FrameConfig,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(dict)?;
    let (features, _) = referenced_features(noise, cfg)?;
    if features.ncols() == 0 {
        return Err(Error::DegenerateData("noise recording is shorter than one frame".into()));
    }
    let frames = features.ncols();
    calibrate_threshold(
        |y| decision_score(dict, y, params),
        |rng| features.column(rng.random_range(0..frames)).into_owned(),
        seed,
        alpha,
        trials,
    )
}

/// `(pd, pf)` of speech decisions against reference labels. A rate whose
/// reference class is empty is NaN.
pub fn vad_score(decisions: &[bool], reference: &[bool]) -> Result<(f64, f64)> {
    check_len("reference labels", decisions.len(), reference.len())?;
    let (mut hits, mut speech, mut alarms, mut silence) = (0usize, 0usize, 0usize, 0usize);
    for (&d, &r) in decisions.iter().zip(reference) {
        if r {
            speech += 1;
            hits += usize::from(d);
        } else {
            silence += 1;
            alarms += usize::from(d);
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    Ok((rate(hits, speech), rate(alarms, silence)))
}
