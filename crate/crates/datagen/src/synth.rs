//! Offline parametric synthesizer with exact word onsets.
//!
//! Each word is a periodic tone on the voice's fundamental: the fundamental
//! plus its second and third harmonics (amplitudes 1, 1/2, 1/3). On top of
//! that every character occupies an equal share of the word and adds two
//! formant-like components. A character selects two target frequencies
//! from a fixed grid, and each is realised on the harmonic of the current
//! fundamental nearest to it. The spectral envelope therefore depends on
//! the character but not the voice, while the signal stays strictly
//! periodic in F0. Formant sets cross-fade over 5 ms at character
//! boundaries; phases are continuous within a word. The signal is exactly
//! zero outside the word segments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::plan::SynthesisPlan;
use crate::voice::voice;
use crate::DatagenError;

pub const SAMPLE_RATE_HZ: u32 = stress_core::audio::SAMPLE_RATE_HZ;
pub const SECONDS_PER_CHAR: f64 = 0.060;
pub const GAP_S: f64 = 0.080;
pub const RAMP_S: f64 = 0.010;
pub const BASE_AMPLITUDE: f64 = 0.1;
const CROSSFADE_S: f64 = 0.005;
/// Formant target grid in Hz. Spacing exceeds the highest fundamental so
/// neighbouring targets never land on the same harmonic.
const FORMANT_GRID_HZ: [f64; 10] = [900.0, 1300.0, 1700.0, 2100.0, 2500.0, 2900.0, 3300.0, 3700.0, 4100.0, 4500.0];
const FORMANT_AMPLITUDE: f64 = 0.5;
/// Lowest harmonic a formant may occupy, keeping clear of the base tone.
const MIN_FORMANT_HARMONIC: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechSample {
    pub waveform: Vec<f32>,
    pub sample_rate_hz: u32,
    pub transcript: String,
    pub word_start_s: Vec<f64>,
    pub duration_s: f64,
}

/// Anything that turns a plan into audio with word onsets.
pub trait SpeechSynthesizer: Sync {
    fn synthesize(&self, plan: &SynthesisPlan) -> Result<SpeechSample, DatagenError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToySynthesizer;

impl SpeechSynthesizer for ToySynthesizer {
    fn synthesize(&self, plan: &SynthesisPlan) -> Result<SpeechSample, DatagenError> {
        synthesize_toy(plan)
    }
}

/// Duration of word `i` in seconds: 60 ms per character, stretched by the
/// rate reduction.
pub fn word_duration_s(plan: &SynthesisPlan, i: usize) -> f64 {
    let chars = plan.words[i].chars().count() as f64;
    SECONDS_PER_CHAR * chars / (1.0 - plan.rate_reduction_pct[i] / 100.0)
}

fn samples(seconds: f64) -> usize {
    (seconds * f64::from(SAMPLE_RATE_HZ)).round() as usize
}

/// Word length in samples as rendered.
pub fn word_samples(plan: &SynthesisPlan, i: usize) -> usize {
    samples(word_duration_s(plan, i))
}

/// The two formant targets (Hz) assigned to a character.
pub fn formants(c: char) -> (f64, f64) {
    let n = FORMANT_GRID_HZ.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let lower = c.to_lowercase().next().unwrap_or(c);
    let index = match lower {
        'a'..='z' => lower as usize - 'a' as usize,
        '0'..='9' => 26 + (lower as usize - '0' as usize),
        '\'' | '\u{2019}' => 36,
        other => 37 + (other as usize % (pairs.len() - 37)),
    };
    let (a, b) = pairs[index];
    (FORMANT_GRID_HZ[a], FORMANT_GRID_HZ[b])
}

/// Harmonic number realising a formant target on fundamental `f0`.
pub fn formant_harmonic(target_hz: f64, f0: f64) -> usize {
    ((target_hz / f0).round() as usize).max(MIN_FORMANT_HARMONIC)
}

/// Sparse (harmonic, amplitude) list for one character.
fn components(c: char, f0: f64) -> Vec<(usize, f64)> {
    let (fa, fb) = formants(c);
    let mut out = vec![(1, 1.0), (2, 0.5), (3, 1.0 / 3.0)];
    for k in [formant_harmonic(fa, f0), formant_harmonic(fb, f0)] {
        match out.iter_mut().find(|(h, _)| *h == k) {
            Some((_, a)) => *a += FORMANT_AMPLITUDE,
            None => out.push((k, FORMANT_AMPLITUDE)),
        }
    }
    out
}

fn render_word(out: &mut [f32], word: &str, f0: f64, amplitude: f64) {
    let n = out.len();
    let chars: Vec<char> = word.chars().collect();
    let comps: Vec<_> = chars.iter().map(|&c| components(c, f0)).collect();
    let sr = f64::from(SAMPLE_RATE_HZ);
    let ramp = samples(RAMP_S).min(n / 2).max(1);
    let fade = samples(CROSSFADE_S).max(1);
    let bounds: Vec<usize> = (0..=chars.len()).map(|j| j * n / chars.len()).collect();
    let omega = 2.0 * PI * f0 / sr;
    for (j, comp) in comps.iter().enumerate() {
        for t in bounds[j]..bounds[j + 1] {
            let since = t - bounds[j];
            let mix = if j > 0 && since < fade {
                since as f64 / fade as f64
            } else {
                1.0
            };
            let env = if t < ramp {
                0.5 * (1.0 - (PI * t as f64 / ramp as f64).cos())
            } else if t >= n - ramp {
                0.5 * (1.0 - (PI * (n - t) as f64 / ramp as f64).cos())
            } else {
                1.0
            };
            let phase = omega * t as f64;
            let mut s: f64 = comp.iter().map(|&(k, a)| mix * a * (k as f64 * phase).sin()).sum();
            if mix < 1.0 {
                s += comps[j - 1]
                    .iter()
                    .map(|&(k, a)| (1.0 - mix) * a * (k as f64 * phase).sin())
                    .sum::<f64>();
            }
            out[t] = (amplitude * env * s) as f32;
        }
    }
}

/// Renders a plan with the toy voice model. Leading and trailing silence
/// equal the inter-word gap.
pub fn synthesize_toy(plan: &SynthesisPlan) -> Result<SpeechSample, DatagenError> {
    let v = voice(&plan.voice_id)
        .ok_or_else(|| DatagenError::Contract(format!("unknown voice {}", plan.voice_id)))?;
    if plan.is_empty() {
        return Err(DatagenError::Contract("plan has no words".into()));
    }
    let gap = samples(GAP_S);
    let lengths: Vec<usize> = (0..plan.len()).map(|i| word_samples(plan, i)).collect();
    let total = gap * (plan.len() + 1) + lengths.iter().sum::<usize>();
    let mut waveform = vec![0f32; total];
    let mut starts = Vec::with_capacity(plan.len());
    let mut cursor = gap;
    for (i, &len) in lengths.iter().enumerate() {
        starts.push(cursor as f64 / f64::from(SAMPLE_RATE_HZ));
        let f0 = v.base_f0_hz * 2f64.powf(plan.pitch_st[i] / 12.0);
        let amplitude = BASE_AMPLITUDE * 10f64.powf(plan.gain_db[i] / 20.0);
        render_word(&mut waveform[cursor..cursor + len], &plan.words[i], f0, amplitude);
        cursor += len + gap;
    }
    Ok(SpeechSample {
        waveform,
        sample_rate_hz: SAMPLE_RATE_HZ,
        transcript: plan.words.join(" "),
        word_start_s: starts,
        duration_s: total as f64 / f64::from(SAMPLE_RATE_HZ),
    })
}
