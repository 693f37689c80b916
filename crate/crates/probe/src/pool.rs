//! Window pooling of frame tracks and encoder states.

use serde::{Deserialize, Serialize};
use stress_nn::{Matrix, Scalar};

use crate::frames::{FrameSeries, SeriesKind};

pub const WINDOW_S: f64 = 0.300;

/// Pooled values with their window bounds in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledTargets {
    pub values: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
}

/// Non-overlapping windows of `window_s / hop` frames; a trailing partial
/// window is dropped. Pitch takes the maximum over voiced frames and
/// drops windows without any, energy takes the mean.
pub fn pool_targets(series: &FrameSeries, window_s: f64) -> PooledTargets {
    let per = ((window_s / series.hop_s).round() as usize).max(1);
    let mut out = PooledTargets {
        values: Vec::new(),
        windows: Vec::new(),
    };
    for w in 0..series.len() / per {
        let range = w * per..(w + 1) * per;
        let value = match series.kind {
            SeriesKind::F0 => series.values[range.clone()]
                .iter()
                .zip(&series.voiced[range])
                .filter(|(_, &v)| v)
                .map(|(&x, _)| x)
                .reduce(f64::max),
            SeriesKind::Rms => Some(series.values[range].iter().sum::<f64>() / per as f64),
        };
        if let Some(v) = value {
            out.values.push(v);
            let start = w as f64 * window_s;
            out.windows.push((start, start + window_s));
        }
    }
    out
}

/// Mean state vector per window over frames whose centres, `(i + ½) /
/// rate`, fall inside `[start, end)`. Windows without frames are `None`.
pub fn pool_embeddings<T: Scalar>(
    states: &Matrix<T>,
    frame_rate_hz: f64,
    windows: &[(f64, f64)],
) -> Vec<Option<Vec<f64>>> {
    windows
        .iter()
        .map(|&(start, end)| {
            let mut sum = vec![0.0; states.cols()];
            let mut n = 0usize;
            for i in 0..states.rows() {
                let c = (i as f64 + 0.5) / frame_rate_hz;
                if c >= start && c < end {
                    for (s, v) in sum.iter_mut().zip(states.row(i)) {
                        *s += v.f64();
                    }
                    n += 1;
                }
            }
            (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
        })
        .collect()
}

/// Pairs pooled targets with pooled embeddings, dropping windows that
/// received no frames together with their targets.
pub fn align_windows<T: Scalar>(
    targets: &PooledTargets,
    states: &Matrix<T>,
    frame_rate_hz: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    pool_embeddings(states, frame_rate_hz, &targets.windows)
        .into_iter()
        .zip(&targets.values)
        .filter_map(|(e, &t)| e.map(|e| (e, t)))
        .unzip()
}
