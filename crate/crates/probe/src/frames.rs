//! Framewise pitch and energy tracks.

use serde::{Deserialize, Serialize};

pub const FRAME_LENGTH_S: f64 = 0.075;
pub const HOP_S: f64 = 0.020;
pub const F0_MIN_HZ: f64 = 60.0;
pub const F0_MAX_HZ: f64 = 400.0;
/// Peak normalized autocorrelation below which a frame is unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    F0,
    Rms,
}

/// Values per analysis frame. For pitch, unvoiced frames hold 0 and are
/// flagged in `voiced`; for energy every frame is marked voiced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSeries {
    pub kind: SeriesKind,
    pub values: Vec<f64>,
    pub voiced: Vec<bool>,
    pub frame_length_s: f64,
    pub hop_s: f64,
}

impl FrameSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Centre time of frame `i`.
    pub fn frame_center_s(&self, i: usize) -> f64 {
        i as f64 * self.hop_s + self.frame_length_s / 2.0
    }
}

fn frame_geometry(sample_rate: u32) -> (usize, usize) {
    let sr = f64::from(sample_rate);
    ((FRAME_LENGTH_S * sr).round() as usize, (HOP_S * sr).round() as usize)
}

/// `floor((n − frame) / hop) + 1` full frames, or none for short input.
pub fn n_frames(n_samples: usize, sample_rate: u32) -> usize {
    let (frame, hop) = frame_geometry(sample_rate);
    if n_samples < frame {
        0
    } else {
        (n_samples - frame) / hop + 1
    }
}

fn frames(wav: &[f32], sample_rate: u32) -> impl Iterator<Item = &[f32]> {
    let (frame, hop) = frame_geometry(sample_rate);
    (0..n_frames(wav.len(), sample_rate)).map(move |i| &wav[i * hop..i * hop + frame])
}

pub fn compute_rms(wav: &[f32], sample_rate: u32) -> FrameSeries {
    let values: Vec<f64> = frames(wav, sample_rate)
        .map(|f| (f.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>() / f.len() as f64).sqrt())
        .collect();
    FrameSeries {
        kind: SeriesKind::Rms,
        voiced: vec![true; values.len()],
        values,
        frame_length_s: FRAME_LENGTH_S,
        hop_s: HOP_S,
    }
}

/// Pitch from the normalized autocorrelation of each frame.
///
/// Lags cover 60–400 Hz. The chosen lag is the shortest local maximum
/// reaching 90% of the best correlation, which avoids picking a multiple
/// of the period; it is refined by parabolic interpolation.
pub fn compute_f0(wav: &[f32], sample_rate: u32) -> FrameSeries {
    let sr = f64::from(sample_rate);
    let min_lag = (sr / F0_MAX_HZ).floor() as usize;
    let max_lag = (sr / F0_MIN_HZ).ceil() as usize;
    let mut values = Vec::new();
    let mut voiced = Vec::new();
    for f in frames(wav, sample_rate) {
        let mean = f.iter().map(|&x| f64::from(x)).sum::<f64>() / f.len() as f64;
        let x: Vec<f64> = f.iter().map(|&v| f64::from(v) - mean).collect();
        match pitch_of_frame(&x, min_lag, max_lag.min(x.len() - 2)) {
            Some(lag) => {
                values.push(sr / lag);
                voiced.push(true);
            }
            None => {
                values.push(0.0);
                voiced.push(false);
            }
        }
    }
    FrameSeries {
        kind: SeriesKind::F0,
        values,
        voiced,
        frame_length_s: FRAME_LENGTH_S,
        hop_s: HOP_S,
    }
}

fn normalized_autocorrelation(x: &[f64], lag: usize) -> f64 {
    let (a, b) = (&x[..x.len() - lag], &x[lag..]);
    let num: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let den = (a.iter().map(|v| v * v).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if den <= 1e-12 {
        0.0
    } else {
        num / den
    }
}

fn pitch_of_frame(x: &[f64], min_lag: usize, max_lag: usize) -> Option<f64> {
    if max_lag <= min_lag + 1 {
        return None;
    }
    // One extra lag on each side so the range ends can be local maxima.
    let lo = min_lag.saturating_sub(1).max(1);
    let r: Vec<f64> = (lo..=max_lag + 1).map(|l| normalized_autocorrelation(x, l)).collect();
    let at = |lag: usize| r[lag - lo];
    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&l| at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .collect();
    let best = peaks.iter().map(|&l| at(l)).fold(f64::NEG_INFINITY, f64::max);
    if !(best >= VOICING_THRESHOLD) {
        return None;
    }
    let lag = *peaks.iter().find(|&&l| at(l) >= 0.9 * best)?;
    let (y0, y1, y2) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = y0 - 2.0 * y1 + y2;
    let shift = if curvature < 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(lag as f64 + shift)
}
