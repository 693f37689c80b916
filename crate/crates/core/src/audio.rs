//! 16 kHz mono 16-bit PCM WAV files.

use std::path::Path;

use crate::error::CoreError;

pub const SAMPLE_RATE_HZ: u32 = 16_000;

fn wav_error(path: &Path, e: hound::Error) -> CoreError {
    let source = match e {
        hound::Error::IoError(io) => io,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string()),
    };
    CoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `samples` (clipped to [-1, 1]) as 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[f32], sample_rate_hz: u32) -> Result<(), CoreError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(q).map_err(|e| wav_error(path, e))?;
    }
    w.finalize().map_err(|e| wav_error(path, e))
}

/// Reads a mono 16-bit WAV and returns samples in [-1, 1] with the rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f32>, u32), CoreError> {
    let mut r = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = r.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(CoreError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!(
                    "expected mono 16-bit PCM, got {} channels / {} bits",
                    spec.channels, spec.bits_per_sample
                ),
            ),
        });
    }
    let samples = r
        .samples::<i16>()
        .map(|s| s.map(|v| f32::from(v) / 32767.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    Ok((samples, spec.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f32> = (0..1000).map(|i| (i as f32 * 0.01).sin() * 0.5).collect();
        write_wav(&path, &samples, SAMPLE_RATE_HZ).unwrap();
        let (back, sr) = read_wav(&path).unwrap();
        assert_eq!(sr, SAMPLE_RATE_HZ);
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() <= 1.0 / 32767.0);
        }
    }
}
