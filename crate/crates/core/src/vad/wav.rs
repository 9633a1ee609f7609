//! 16-bit mono PCM WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// The only sample rate the pipeline accepts.
pub const REQUIRED_RATE_HZ: u32 = 8000;

/// Reads a 16-bit mono 8 kHz PCM file as samples in `[−1, 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav(format!(
            "expected 1 channel, found {}",
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "expected 16-bit integer PCM, found {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if spec.sample_rate != REQUIRED_RATE_HZ {
        return Err(Error::UnsupportedWav(format!(
            "expected a {REQUIRED_RATE_HZ} Hz sample rate, found {} Hz",
            spec.sample_rate
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((samples, spec.sample_rate))
}

/// Writes samples as 16-bit mono PCM, clipping to the representable range.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], rate: u32) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, channels: u16, rate: u32, bits: u16, values: &[i32]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &v in values {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn scaling_law() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, 1, 8000, 16, &[0, 16384, -16384, 32767]);
        let (s, rate) = read_wav(&p).unwrap();
        assert_eq!(rate, 8000);
        assert_eq!(s, vec![0.0, 0.5, -0.5, 32767.0 / 32768.0]);
    }

    #[test]
    fn rejects_stereo_rate_and_depth() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("s.wav");
        write_raw(&stereo, 2, 8000, 16, &[0, 0, 1, 1]);
        let err = read_wav(&stereo).unwrap_err().to_string();
        assert!(err.contains("channel"), "{err}");

        let fast = dir.path().join("r.wav");
        write_raw(&fast, 1, 44100, 16, &[0, 1]);
        let err = read_wav(&fast).unwrap_err().to_string();
        assert!(err.contains("44100"), "{err}");

        let deep = dir.path().join("d.wav");
        write_raw(&deep, 1, 8000, 24, &[0, 1]);
        let err = read_wav(&deep).unwrap_err().to_string();
        assert!(err.contains("24-bit"), "{err}");
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.wav");
        let samples = vec![0.25, -0.75, 0.0, 0.999];
        write_wav(&p, &samples, 8000).unwrap();
        let (back, _) = read_wav(&p).unwrap();
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }
}
