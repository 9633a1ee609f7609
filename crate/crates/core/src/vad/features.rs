//! Framing and the 24-dimensional frame features.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, invalid, Result};

/// Mel bands in the filterbank.
pub const MEL_BANDS: usize = 10;
/// Cepstral coefficients in the feature stack.
pub const CEPSTRA: usize = 12;
/// Length of a feature vector: cepstra, band log energies, total log energy,
/// spectral entropy.
pub const FEATURE_DIM: usize = CEPSTRA + MEL_BANDS + 2;
/// Floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// One frame's features.
pub type FeatureVector = DVector<f64>;

/// Frame length and hop derived from a sample rate and durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    sample_rate_hz: u32,
    frame_ms: f64,
    hop_ms: f64,
}

impl Default for FrameConfig {
    /// 8 kHz, 25 ms frames, 10 ms hop.
    fn default() -> Self {
        Self {
            sample_rate_hz: 8000,
            frame_ms: 25.0,
            hop_ms: 10.0,
        }
    }
}

impl FrameConfig {
    pub fn new(sample_rate_hz: u32, frame_ms: f64, hop_ms: f64) -> Result<Self> {
        let cfg = Self {
            sample_rate_hz,
            frame_ms,
            hop_ms,
        };
        if !(frame_ms > 0.0) || !(hop_ms > 0.0) || sample_rate_hz == 0 {
            return Err(invalid("sample rate and durations must be positive"));
        }
        if cfg.frame_len() < 1 || cfg.hop_len() < 1 {
            return Err(invalid("frame and hop must each span at least one sample"));
        }
        if cfg.hop_len() > cfg.frame_len() {
            return Err(invalid("hop must not exceed the frame length"));
        }
        Ok(cfg)
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    fn samples(&self, ms: f64) -> usize {
        (ms * f64::from(self.sample_rate_hz) / 1000.0).round() as usize
    }

    pub fn frame_len(&self) -> usize {
        self.samples(self.frame_ms)
    }

    pub fn hop_len(&self) -> usize {
        self.samples(self.hop_ms)
    }

    /// `floor((len − L)/hop) + 1` for `len ≥ L`, else 0.
    pub fn frame_count(&self, len: usize) -> usize {
        let l = self.frame_len();
        if len < l {
            0
        } else {
            (len - l) / self.hop_len() + 1
        }
    }

    /// FFT size: the smallest power of two not below the frame length.
    pub fn fft_len(&self) -> usize {
        self.frame_len().next_power_of_two()
    }
}

/// Consecutive frames of `samples`; no padding.
pub fn frame_signal<'a>(samples: &'a [f64], cfg: &FrameConfig) -> Vec<&'a [f64]> {
    let (l, hop) = (cfg.frame_len(), cfg.hop_len());
    (0..cfg.frame_count(samples.len()))
        .map(|i| &samples[i * hop..i * hop + l])
        .collect()
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Hamming window, power spectrum, mel filterbank and cepstral transform for
/// one frame configuration.
pub struct FeatureExtractor {
    cfg: FrameConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    /// `MEL_BANDS × bins` triangular weights.
    filters: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
}

impl std::fmt::Debug for FeatureExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureExtractor").field("cfg", &self.cfg).finish()
    }
}

impl FeatureExtractor {
    pub fn new(cfg: FrameConfig) -> Self {
        let l = cfg.frame_len();
        let window = (0..l)
            .map(|i| {
                if l == 1 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * PI * i as f64 / (l - 1) as f64).cos()
                }
            })
            .collect();
        let nfft = cfg.fft_len();
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        let bins = nfft / 2 + 1;
        let rate = f64::from(cfg.sample_rate_hz);
        let top = hz_to_mel(rate / 2.0);
        let edges: Vec<f64> = (0..MEL_BANDS + 2)
            .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
            .collect();
        let filters = (0..MEL_BANDS)
            .map(|b| {
                let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * rate / nfft as f64;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            cfg,
            window,
            fft,
            filters,
            centers_hz: edges[1..=MEL_BANDS].to_vec(),
        }
    }

    pub fn config(&self) -> &FrameConfig {
        &self.cfg
    }

    /// Center frequencies of the mel bands in Hz.
    pub fn band_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Power spectrum of the windowed, zero-padded frame (`fft_len/2 + 1` bins).
    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>> {
        check_len("frame length", self.window.len(), frame.len())?;
        let nfft = self.cfg.fft_len();
        let mut buf = vec![Complex::new(0.0, 0.0); nfft];
        for (slot, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
            *slot = Complex::new(x * w, 0.0);
        }
        self.fft.process(&mut buf);
        Ok(buf[..nfft / 2 + 1].iter().map(|c| c.norm_sqr()).collect())
    }

    /// Mel band energies of a frame.
    pub fn band_energies(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let power = self.power_spectrum(frame)?;
        Ok(self
            .filters
            .iter()
            .map(|w| w.iter().zip(&power).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `[12 cepstra, 10 log band energies, total log energy, spectral entropy]`.
    pub fn extract(&self, frame: &[f64]) -> Result<FeatureVector> {
        let power = self.power_spectrum(frame)?;
        let log_bands: Vec<f64> = self
            .filters
            .iter()
            .map(|w| {
                let e: f64 = w.iter().zip(&power).map(|(a, b)| a * b).sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();

        let mut out = DVector::zeros(FEATURE_DIM);
        // Orthonormal DCT-II over the band log energies zero-padded to CEPSTRA.
        let m = CEPSTRA as f64;
        for q in 0..CEPSTRA {
            let scale = if q == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            out[q] = scale
                * log_bands
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * (i as f64 + 0.5) * q as f64 / m).cos())
                    .sum::<f64>();
        }
        for (b, v) in log_bands.iter().enumerate() {
            out[CEPSTRA + b] = *v;
        }
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        out[CEPSTRA + MEL_BANDS] = energy.max(LOG_FLOOR).ln();
        out[CEPSTRA + MEL_BANDS + 1] = spectral_entropy(&power);
        Ok(out)
    }
}

/// Shannon entropy (nats) of the normalized power spectrum; `ln(bins)` for an
/// all-zero spectrum.
fn spectral_entropy(power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    if !(total > 0.0) {
        return (power.len() as f64).ln();
    }
    -power
        .iter()
        .map(|p| p / total)
        .filter(|p| *p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Features of a single frame.
pub fn extract_features(frame: &[f64], cfg: &FrameConfig) -> Result<FeatureVector> {
    FeatureExtractor::new(*cfg).extract(frame)
}
