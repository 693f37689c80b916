#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stress_backbone::{LayeredAsr, LayeredStates};
use stress_core::audio::read_wav;
use stress_core::{read_manifest, tokenize};
use stress_nn::Matrix;

/// Layer from which the mock exposes a stress signal in decoder states.
pub const SIGNAL_LAYER: usize = 2;

/// A recognizer stand-in that looks utterances up by their audio. Its
/// decoder states carry a noisy stress cue from [`SIGNAL_LAYER`] upward,
/// and selected samples lose their last word to provoke rejections.
pub struct MockAsr {
    pub d: usize,
    pub layers: usize,
    table: HashMap<u64, (String, Vec<u8>)>,
}

pub fn audio_key(wav: &[f32]) -> u64 {
    let mut h = DefaultHasher::new();
    for x in wav {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

impl MockAsr {
    pub fn from_manifest(manifest: &Path, d: usize, drop_word: impl Fn(usize) -> bool) -> Self {
        let mut table = HashMap::new();
        for (i, r) in read_manifest(manifest).unwrap().iter().enumerate() {
            let (wav, _) = read_wav(&r.audio_path(manifest)).unwrap();
            let keep = if drop_word(i) { r.words.len() - 1 } else { r.words.len() };
            let text = format!("{}.", r.words[..keep].join(" "));
            table.insert(audio_key(&wav), (text, r.stress[..keep].to_vec()));
        }
        Self { d, layers: 4, table }
    }

    pub fn text_for(&self, wav: &[f32]) -> Option<&str> {
        self.table.get(&audio_key(wav)).map(|(t, _)| t.as_str())
    }
}

fn noise(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random::<f64>() - 0.5).collect())
}

impl LayeredAsr<f64> for MockAsr {
    fn d_model(&self) -> usize {
        self.d
    }

    fn n_encoder_layers(&self) -> usize {
        self.layers
    }

    fn n_decoder_layers(&self) -> usize {
        self.layers
    }

    fn digest(&self) -> String {
        format!("mock-{}-{}", self.d, self.table.len())
    }

    fn transcribe_with_states(&self, waveform: &[f32]) -> LayeredStates<f64> {
        let key = audio_key(waveform);
        let (text, stress) = self.table.get(&key).cloned().unwrap_or_default();
        let tok = tokenize(&text);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let frames = (waveform.len() / 640).max(1);
        let encoder_states = (0..=self.layers).map(|_| noise(frames, self.d, &mut rng)).collect();
        let decoder_states = (0..=self.layers)
            .map(|l| {
                let mut m = noise(tok.len(), self.d, &mut rng);
                if l >= SIGNAL_LAYER {
                    for (i, &w) in tok.word_index.iter().enumerate() {
                        if w >= 0 && stress[w as usize] == 1 {
                            m.set(i, 0, m.get(i, 0) + 1.5);
                        }
                    }
                }
                m
            })
            .collect();
        LayeredStates {
            encoder_states,
            decoder_states,
            tokens: (0..tok.len() as u32).collect(),
            token_strings: tok.tokens.clone(),
            word_index: tok.word_index.clone(),
            text,
            truncated: false,
            frame_rate_hz: 25.0,
        }
    }
}

/// A small generated corpus shared by the tests of one binary.
pub fn corpus(dir: &Path, sentences: usize) -> (PathBuf, PathBuf) {
    let cfg = stress_datagen::GenerationConfig::toy(sentences, 11, dir);
    let out = stress_datagen::generate_dataset(&cfg).unwrap();
    (out.train_manifest, out.test_manifest)
}
