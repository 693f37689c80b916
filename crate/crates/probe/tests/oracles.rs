use std::collections::HashMap;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stress_backbone::{LayeredAsr, LayeredStates};
use stress_core::audio::read_wav;
use stress_core::{read_manifest, tokenize};
use stress_nn::Matrix;
use stress_probe::{probe_layer, probe_layer_with, probe_report, ProbeTarget, Regressor};

fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn with_noise(targets: &[f64], dims: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    targets
        .iter()
        .map(|&t| std::iter::once(t).chain((0..dims).map(|_| rng.random::<f64>())).collect())
        .collect()
}

struct Identity;

impl Regressor for Identity {
    fn fit_predict(&self, _: &[Vec<f64>], _: &[f64], test_x: &[Vec<f64>], _: u64) -> Vec<f64> {
        test_x.iter().map(|x| x[0]).collect()
    }
}

#[test]
fn constructive_signal_is_recovered() {
    let y: Vec<f64> = uniform(500, 1).iter().map(|v| 80.0 + 200.0 * v).collect();
    let x = with_noise(&y, 9, 2);
    let r = probe_layer(0, ProbeTarget::F0, &x, &y, 3).unwrap();
    assert!(r.mae_pct < 5.0, "{r:?}");
    assert!(r.ci_low <= r.mae_pct && r.mae_pct <= r.ci_high);
}

#[test]
fn pure_noise_matches_the_mean_predictor() {
    let y = uniform(500, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Vec<f64>> = (0..500).map(|_| (0..10).map(|_| rng.random()).collect()).collect();
    let r = probe_layer(2, ProbeTarget::Rms, &x, &y, 6).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let baseline = 100.0 * y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64 / (hi - lo);
    let rel = (r.mae_pct - baseline).abs() / baseline;
    assert!(rel <= 0.2, "forest {:.2} vs mean predictor {baseline:.2}", r.mae_pct);
}

#[test]
fn perfect_predictions_have_zero_error_and_interval() {
    let y = uniform(100, 7);
    let x = with_noise(&y, 2, 8);
    let r = probe_layer_with(&Identity, 1, ProbeTarget::Duration, &x, &y, 0).unwrap();
    assert_eq!((r.mae_pct, r.ci_low, r.ci_high), (0.0, 0.0, 0.0));
}

#[test]
fn fixed_seed_reproduces_the_interval() {
    let y = uniform(120, 9);
    let x = with_noise(&y, 4, 10);
    let a = probe_layer(1, ProbeTarget::Rms, &x, &y, 11).unwrap();
    assert_eq!(a, probe_layer(1, ProbeTarget::Rms, &x, &y, 11).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mae_pct_is_scale_invariant(c in 0.001f64..1000.0, seed in 0u64..1000) {
        let y = uniform(60, seed);
        let x: Vec<Vec<f64>> = with_noise(&y, 1, seed + 1)
            .into_iter()
            .map(|r| vec![r[0] + 0.1 * r[1]])
            .collect();
        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        let xs: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] * c]).collect();
        let a = probe_layer_with(&Identity, 0, ProbeTarget::F0, &x, &y, seed).unwrap();
        let b = probe_layer_with(&Identity, 0, ProbeTarget::F0, &xs, &ys, seed).unwrap();
        prop_assert!((a.mae_pct - b.mae_pct).abs() < 1e-9 * a.mae_pct.max(1.0));
        prop_assert!((a.ci_low - b.ci_low).abs() < 1e-9 * a.mae_pct.max(1.0));
        prop_assert!((a.ci_high - b.ci_high).abs() < 1e-9 * a.mae_pct.max(1.0));
        prop_assert!(a.ci_low <= a.mae_pct && a.mae_pct <= a.ci_high);
    }
}

/// Recognizer stand-in: encoder frames carry the local signal energy,
/// decoder states are noise over the gold tokens.
struct EnergyAsr {
    texts: HashMap<usize, String>,
}

impl EnergyAsr {
    fn new(manifest: &Path) -> Self {
        let texts = read_manifest(manifest)
            .unwrap()
            .into_iter()
            .map(|r| (read_wav(&r.audio_path(manifest)).unwrap().0.len(), r.text))
            .collect();
        Self { texts }
    }
}

impl LayeredAsr<f32> for EnergyAsr {
    fn d_model(&self) -> usize {
        4
    }
    fn n_encoder_layers(&self) -> usize {
        2
    }
    fn n_decoder_layers(&self) -> usize {
        2
    }
    fn digest(&self) -> String {
        "energy".into()
    }
    fn transcribe_with_states(&self, wav: &[f32]) -> LayeredStates<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(wav.len() as u64);
        let frames = wav.len() / 640;
        let enc = |scale: f32, rng: &mut ChaCha8Rng| {
            let mut m = Matrix::zeros(frames, 4);
            for i in 0..frames {
                let e = (wav[i * 640..(i + 1) * 640].iter().map(|x| x * x).sum::<f32>() / 640.0).sqrt();
                m.set(i, 0, scale * e);
                for c in 1..4 {
                    m.set(i, c, rng.random::<f32>());
                }
            }
            m
        };
        let text = self.texts.get(&wav.len()).cloned().unwrap_or_default();
        let tok = tokenize(&text);
        let dec = |rng: &mut ChaCha8Rng| {
            Matrix::from_vec(tok.len(), 4, (0..tok.len() * 4).map(|_| rng.random::<f32>()).collect())
        };
        LayeredStates {
            encoder_states: vec![enc(1.0, &mut rng), enc(0.0, &mut rng), enc(1.0, &mut rng)],
            decoder_states: vec![dec(&mut rng), dec(&mut rng), dec(&mut rng)],
            tokens: (0..tok.len() as u32).collect(),
            token_strings: tok.tokens.clone(),
            word_index: tok.word_index,
            text,
            truncated: false,
            frame_rate_hz: 25.0,
        }
    }
}

#[test]
fn report_is_deterministic_and_tracks_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stress_datagen::GenerationConfig::toy(40, 3, dir.path());
    let data = stress_datagen::generate_dataset(&cfg).unwrap();
    let asr = EnergyAsr::new(&data.train_manifest);
    let targets = [ProbeTarget::F0, ProbeTarget::Rms, ProbeTarget::Duration];
    let a = probe_report(&asr, &data.train_manifest, None, &targets, 5).unwrap();
    let b = probe_report(&asr, &data.train_manifest, None, &targets, 5).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a.rows.len(), 9);
    assert!(a.rows.iter().all(|r| r.ci_low <= r.mae_pct && r.mae_pct <= r.ci_high && r.mae_pct >= 0.0));
    let rms = |l| a.rows.iter().find(|r| r.target == ProbeTarget::Rms && r.layer == l).unwrap().mae_pct;
    // Layer 1 carries no energy column.
    assert!(rms(0) < rms(1));
    assert!(a.to_csv().unwrap().starts_with("layer,target,mae_pct,ci_low,ci_high\n"));

    let out = dir.path().join("probe");
    a.write(&out).unwrap();
    for f in ["probe.csv", "probe.json", "probe_f0.svg", "probe_rms.svg", "probe_duration.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(out.join("probe_rms.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
