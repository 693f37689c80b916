//! Log-mel filterbank features with frame stacking.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use stress_nn::{Matrix, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub sample_rate_hz: u32,
    pub n_mels: usize,
    /// Analysis window in samples (25 ms at 16 kHz).
    pub win_length: usize,
    /// Hop in samples (10 ms at 16 kHz).
    pub hop_length: usize,
    pub n_fft: usize,
    /// Consecutive mel frames concatenated into one encoder frame.
    pub stack: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 16_000,
            n_mels: 80,
            win_length: 400,
            hop_length: 160,
            n_fft: 512,
            stack: 4,
        }
    }
}

impl FrontendConfig {
    pub fn feature_dim(&self) -> usize {
        self.n_mels * self.stack
    }

    /// Encoder frames per second.
    pub fn frame_rate_hz(&self) -> f64 {
        f64::from(self.sample_rate_hz) / (self.hop_length * self.stack) as f64
    }

    /// Centre time of encoder frame `i` in seconds.
    pub fn frame_center_s(&self, i: usize) -> f64 {
        let first = i * self.stack;
        let mid_sample = first as f64 * self.hop_length as f64
            + (self.stack - 1) as f64 * self.hop_length as f64 / 2.0
            + self.win_length as f64 / 2.0;
        mid_sample / f64::from(self.sample_rate_hz)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_mels == 0 || self.stack == 0 || self.hop_length == 0 {
            return Err("frontend sizes must be positive".into());
        }
        if self.win_length == 0 || self.win_length > self.n_fft {
            return Err(format!(
                "window {} must be in 1..={} (n_fft)",
                self.win_length, self.n_fft
            ));
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale between 0 Hz and Nyquist, stored
/// sparsely as (bin, weight) lists.
fn mel_filters(cfg: &FrontendConfig) -> Vec<Vec<(usize, f32)>> {
    let n_bins = cfg.n_fft / 2 + 1;
    let nyquist = f64::from(cfg.sample_rate_hz) / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = f64::from(cfg.sample_rate_hz) / cfg.n_fft as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .filter_map(|b| {
                    let f = b as f64 * bin_hz;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((b, w as f32))
                })
                .collect()
        })
        .collect()
}

/// Precomputed window, filterbank and FFT plan.
#[derive(Clone)]
pub struct LogMel {
    cfg: FrontendConfig,
    window: Vec<f32>,
    filters: Vec<Vec<(usize, f32)>>,
    fft: Arc<dyn Fft<f32>>,
}

impl std::fmt::Debug for LogMel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogMel").field("cfg", &self.cfg).finish()
    }
}

impl LogMel {
    pub fn new(cfg: FrontendConfig) -> Self {
        let n = cfg.win_length;
        let window = (0..n)
            .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()) as f32)
            .collect();
        let filters = mel_filters(&cfg);
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Self {
            cfg,
            window,
            filters,
            fft,
        }
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.cfg
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.cfg.win_length {
            0
        } else {
            1 + (n_samples - self.cfg.win_length) / self.cfg.hop_length
        }
    }

    /// Log-mel frames (`n_frames × n_mels`), compressed to roughly [-1, 2]:
    /// log10 power floored 8 decades below the loudest value, then
    /// shifted and scaled as `(x + 4) / 4`.
    pub fn log_mel(&self, waveform: &[f32]) -> Vec<Vec<f32>> {
        let n_frames = self.n_frames(waveform.len());
        let mut buf = vec![Complex::new(0f32, 0f32); self.cfg.n_fft];
        let mut scratch = vec![Complex::new(0f32, 0f32); self.fft.get_inplace_scratch_len()];
        let mut frames = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            let start = t * self.cfg.hop_length;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < self.cfg.win_length {
                    Complex::new(waveform[start + i] * self.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            let mel: Vec<f32> = self
                .filters
                .iter()
                .map(|f| {
                    let e: f32 = f.iter().map(|&(b, w)| w * buf[b].norm_sqr()).sum();
                    e.max(1e-10).log10()
                })
                .collect();
            frames.push(mel);
        }
        let peak = frames
            .iter()
            .flatten()
            .copied()
            .fold(f32::NEG_INFINITY, f32::max);
        for v in frames.iter_mut().flatten() {
            *v = ((*v).max(peak - 8.0) + 4.0) / 4.0;
        }
        frames
    }

    /// Stacked encoder input (`ceil(n_frames / stack) × n_mels·stack`).
    /// Inputs shorter than one window yield a single frame of the floor
    /// value so the encoder never sees an empty sequence.
    pub fn features<T: Scalar>(&self, waveform: &[f32]) -> Matrix<T> {
        let frames = self.log_mel(waveform);
        let floor = frames
            .iter()
            .flatten()
            .copied()
            .fold(f32::INFINITY, f32::min);
        let floor = if floor.is_finite() { floor } else { -1.0 };
        let rows = frames.len().div_ceil(self.cfg.stack).max(1);
        let dim = self.cfg.feature_dim();
        let mut data = Vec::with_capacity(rows * dim);
        for r in 0..rows {
            for k in 0..self.cfg.stack {
                match frames.get(r * self.cfg.stack + k) {
                    Some(f) => data.extend(f.iter().map(|&v| T::of(f64::from(v)))),
                    None => data.extend(std::iter::repeat_n(T::of(f64::from(floor)), self.cfg.n_mels)),
                }
            }
        }
        Matrix::from_vec(rows, dim, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64, amp: f64) -> Vec<f32> {
        (0..(secs * 16000.0) as usize)
            .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / 16000.0).sin()) as f32)
            .collect()
    }

    #[test]
    fn frame_arithmetic() {
        let lm = LogMel::new(FrontendConfig::default());
        assert_eq!(lm.n_frames(399), 0);
        assert_eq!(lm.n_frames(400), 1);
        assert_eq!(lm.n_frames(16000), 98);
        let f = lm.features::<f32>(&tone(440.0, 1.0, 0.1));
        assert_eq!(f.shape(), (25, 320));
        assert_eq!(lm.features::<f64>(&[]).shape(), (1, 320));
        assert!((lm.config().frame_rate_hz() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn tone_energy_lands_in_the_right_band() {
        let lm = LogMel::new(FrontendConfig::default());
        let frames = lm.log_mel(&tone(1000.0, 0.5, 0.1));
        let mid = &frames[frames.len() / 2];
        let best = (0..mid.len()).max_by(|&a, &b| mid[a].total_cmp(&mid[b])).unwrap();
        let centre = mel_to_hz(hz_to_mel(8000.0) * (best + 1) as f64 / 81.0);
        assert!((centre - 1000.0).abs() < 120.0, "peak band centred at {centre}");
    }

    #[test]
    fn louder_input_gives_larger_features_relative_to_floor() {
        let lm = LogMel::new(FrontendConfig::default());
        let mut w = tone(300.0, 0.5, 0.05);
        w.extend(tone(300.0, 0.5, 0.2));
        let frames = lm.log_mel(&w);
        let quiet: f32 = frames[10].iter().sum();
        let loud: f32 = frames[frames.len() - 10].iter().sum();
        assert!(loud > quiet);
    }
}
