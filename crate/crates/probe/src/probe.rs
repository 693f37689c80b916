//! One regression probe: held-out error of predicting a prosodic target
//! from layer embeddings, with a bootstrap interval.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stress_core::seed::derive_seed;

use crate::forest::{ForestConfig, RandomForest};
use crate::ProbeError;

pub const MIN_PROBE_SAMPLES: usize = 50;
pub const TEST_FRACTION: f64 = 0.2;
pub const BOOTSTRAP_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    F0,
    Rms,
    Duration,
}

impl ProbeTarget {
    pub const ALL: [ProbeTarget; 3] = [ProbeTarget::F0, ProbeTarget::Rms, ProbeTarget::Duration];

    pub fn name(self) -> &'static str {
        match self {
            Self::F0 => "f0",
            Self::Rms => "rms",
            Self::Duration => "duration",
        }
    }

    /// Pitch and energy are probed on encoder layers, duration on decoder
    /// layers.
    pub fn uses_decoder(self) -> bool {
        self == Self::Duration
    }
}

impl fmt::Display for ProbeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeTarget {
    type Err = ProbeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| ProbeError::Config(format!("unknown probe target {s:?} (f0, rms, duration)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProbeResult {
    pub layer: usize,
    pub target: ProbeTarget,
    pub mae_pct: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Fits on the training rows and predicts the test rows.
pub trait Regressor: Sync {
    fn fit_predict(&self, train_x: &[Vec<f64>], train_y: &[f64], test_x: &[Vec<f64>], seed: u64) -> Vec<f64>;
}

#[derive(Debug, Clone, Default)]
pub struct ForestRegressor(pub ForestConfig);

impl Regressor for ForestRegressor {
    fn fit_predict(&self, train_x: &[Vec<f64>], train_y: &[f64], test_x: &[Vec<f64>], seed: u64) -> Vec<f64> {
        let forest = RandomForest::fit(train_x, train_y, &self.0, seed);
        test_x.iter().map(|x| forest.predict(x)).collect()
    }
}

/// Mean absolute error as a percentage of the target range.
pub fn mae_pct(pred: &[f64], truth: &[f64], range: f64) -> f64 {
    let mae = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / truth.len() as f64;
    100.0 * mae / range
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn probe_layer(
    layer: usize,
    target: ProbeTarget,
    embeddings: &[Vec<f64>],
    targets: &[f64],
    seed: u64,
) -> Result<LayerProbeResult, ProbeError> {
    probe_layer_with(&ForestRegressor::default(), layer, target, embeddings, targets, seed)
}

/// Seeded 80/20 split, fit, MAE% on the test part normalized by the
/// target range of the whole probe set, and a 95% percentile interval
/// over bootstrap resamples of the test part. The interval is widened to
/// contain the point estimate if needed.
pub fn probe_layer_with<R: Regressor>(
    regressor: &R,
    layer: usize,
    target: ProbeTarget,
    embeddings: &[Vec<f64>],
    targets: &[f64],
    seed: u64,
) -> Result<LayerProbeResult, ProbeError> {
    if embeddings.len() != targets.len() {
        return Err(ProbeError::Config(format!(
            "{} embeddings for {} targets",
            embeddings.len(),
            targets.len()
        )));
    }
    let n = targets.len();
    if n < MIN_PROBE_SAMPLES {
        return Err(ProbeError::TooFewSamples { n, min: MIN_PROBE_SAMPLES });
    }
    let (lo, hi) = targets
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    if !(hi > lo) {
        return Err(ProbeError::DegenerateTarget(target.name().into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "split")));
    let n_test = ((n as f64 * TEST_FRACTION).round() as usize).max(1);
    let (test_idx, train_idx) = order.split_at(n_test);
    let pick_x = |idx: &[usize]| idx.iter().map(|&i| embeddings[i].clone()).collect::<Vec<_>>();
    let pick_y = |idx: &[usize]| idx.iter().map(|&i| targets[i]).collect::<Vec<_>>();
    let test_y = pick_y(test_idx);
    let pred = regressor.fit_predict(
        &pick_x(train_idx),
        &pick_y(train_idx),
        &pick_x(test_idx),
        derive_seed(seed, "fit"),
    );
    let range = hi - lo;
    let point = mae_pct(&pred, &test_y, range);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "bootstrap"));
    let mut boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let (mut p, mut t) = (Vec::with_capacity(n_test), Vec::with_capacity(n_test));
            for _ in 0..n_test {
                let k = rng.random_range(0..n_test);
                p.push(pred[k]);
                t.push(test_y[k]);
            }
            mae_pct(&p, &t, range)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    Ok(LayerProbeResult {
        layer,
        target,
        mae_pct: point,
        ci_low: percentile(&boots, 2.5).min(point),
        ci_high: percentile(&boots, 97.5).max(point),
        n_train: train_idx.len(),
        n_test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert!((percentile(&v, 2.5) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn targets_parse() {
        assert_eq!("F0".parse::<ProbeTarget>().unwrap(), ProbeTarget::F0);
        assert_eq!(" duration".parse::<ProbeTarget>().unwrap(), ProbeTarget::Duration);
        assert!("pitch".parse::<ProbeTarget>().is_err());
    }

    #[test]
    fn degenerate_and_small_inputs_fail() {
        let x = vec![vec![0.0]; 60];
        assert!(matches!(
            probe_layer(0, ProbeTarget::Rms, &x, &[1.0; 60], 0),
            Err(ProbeError::DegenerateTarget(_))
        ));
        assert!(matches!(
            probe_layer(0, ProbeTarget::Rms, &x[..10], &[1.0; 10], 0),
            Err(ProbeError::TooFewSamples { .. })
        ));
    }
}
