//! Synthetic harmonic speech with exact activity labels.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::FrameConfig;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeechCorpusConfig {
    pub seconds: f64,
    pub sample_rate_hz: u32,
    /// Level of the white floor under the whole signal, relative to the
    /// active-speech power.
    pub floor_db: f64,
    pub seed: u64,
}

impl Default for SpeechCorpusConfig {
    fn default() -> Self {
        Self {
            seconds: 20.0,
            sample_rate_hz: 8000,
            floor_db: -70.0,
            seed: 0,
        }
    }
}

/// Samples plus per-sample speech activity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechCorpus {
    pub samples: Vec<f64>,
    pub active: Vec<bool>,
}

const EDGE_S: f64 = 0.02;

/// Alternating pauses and voiced syllables.
///
/// Each syllable is a harmonic series on a gliding pitch between 100 and
/// 220 Hz, shaped by three random formant resonances and a raised-cosine
/// onset and release. The result is scaled to a peak of 0.5 and a white floor
/// at `floor_db` is added everywhere.
pub fn synth_speech(cfg: &SpeechCorpusConfig) -> Result<SpeechCorpus> {
    if !(cfg.seconds > 0.0) || cfg.sample_rate_hz == 0 {
        return Err(invalid("corpus duration and sample rate must be positive"));
    }
    let rate = f64::from(cfg.sample_rate_hz);
    let total = (cfg.seconds * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = vec![0.0; total];
    let mut active = vec![false; total];

    let mut pos = 0usize;
    while pos < total {
        pos += (rng.random_range(0.15..0.5) * rate) as usize;
        let len = (rng.random_range(0.12..0.35) * rate) as usize;
        if pos >= total {
            break;
        }
        let end = (pos + len).min(total);
        let f0_start: f64 = rng.random_range(100.0..220.0);
        let f0_end = f0_start * rng.random_range(0.8..1.2);
        let formants = [
            (rng.random_range(300.0..900.0), 80.0),
            (rng.random_range(900.0..2500.0), 120.0),
            (rng.random_range(2400.0..3500.0), 200.0),
        ];
        let level: f64 = rng.random_range(0.3..1.0);
        let harmonics = (0.5 * rate / f0_start.max(f0_end)).floor() as usize;
        let mean_f0 = 0.5 * (f0_start + f0_end);
        let amps: Vec<f64> = (1..=harmonics)
            .map(|h| {
                let f = h as f64 * mean_f0;
                formants
                    .iter()
                    .map(|(fc, bw)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
                    .sum::<f64>()
                    / (h as f64).sqrt()
            })
            .collect();
        let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let edge = (EDGE_S * rate) as usize;
        let mut phase = 0.0;
        for (i, idx) in (pos..end).enumerate() {
            let frac = i as f64 / len as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += 2.0 * PI * f0 / rate;
            let env = if i < edge {
                0.5 * (1.0 - (PI * i as f64 / edge as f64).cos())
            } else if len - i < edge {
                0.5 * (1.0 - (PI * (len - i) as f64 / edge as f64).cos())
            } else {
                1.0
            };
            let v: f64 = amps
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(h, (a, p))| a * ((h + 1) as f64 * phase + p).sin())
                .sum();
            samples[idx] = level * env * v;
            active[idx] = true;
        }
        pos = end;
    }

    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        samples.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    let active_count = active.iter().filter(|a| **a).count();
    if active_count > 0 {
        let power = samples
            .iter()
            .zip(&active)
            .filter(|(_, a)| **a)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            / active_count as f64;
        let sd = (power * 10f64.powf(cfg.floor_db / 10.0)).sqrt();
        for v in samples.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sd * z;
        }
    }
    Ok(SpeechCorpus { samples, active })
}

/// Per-frame labels: a frame is speech when at least half its samples are.
pub fn frame_labels(active: &[bool], cfg: &FrameConfig) -> Vec<bool> {
    let (l, hop) = (cfg.frame_len(), cfg.hop_len());
    (0..cfg.frame_count(active.len()))
        .map(|i| {
            let on = active[i * hop..i * hop + l].iter().filter(|a| **a).count();
            2 * on >= l
        })
        .collect()
}

/// Unit-variance white Gaussian noise.
pub fn white_noise_signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}
