//! Per-word prosody adjustments for stressed words.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use stress_core::seed::derive_seed;

use crate::DatagenError;

pub const RATE_REDUCTION_RANGE: (f64, f64) = (30.0, 85.0);
pub const GAIN_DB_RANGE: (f64, f64) = (3.0, 6.0);
pub const PITCH_ST: f64 = 1.5;
pub const PITCH_ST_RANGE: (f64, f64) = (1.0, 2.0);
/// Character lengths are clamped to this range before the linear mapping.
pub const LENGTH_CLAMP: (usize, usize) = (2, 12);

/// Jitter standard deviations: rate points, dB, semitones.
pub const JITTER_SIGMA: (f64, f64, f64) = (5.0, 0.5, 0.15);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisPlan {
    pub words: Vec<String>,
    pub stress: Vec<u8>,
    /// Percent reduction of the speaking rate; 0 for unstressed words.
    pub rate_reduction_pct: Vec<f64>,
    pub gain_db: Vec<f64>,
    pub pitch_st: Vec<f64>,
    pub voice_id: String,
    pub seed: u64,
}

impl SynthesisPlan {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Noise-free adjustments for a stressed word of `chars` characters:
/// shorter words are slowed down more and made louder.
pub fn stressed_adjustment(chars: usize) -> (f64, f64) {
    let lc = chars.clamp(LENGTH_CLAMP.0, LENGTH_CLAMP.1) as f64;
    let t = (lc - LENGTH_CLAMP.0 as f64) / (LENGTH_CLAMP.1 - LENGTH_CLAMP.0) as f64;
    let rate = RATE_REDUCTION_RANGE.1 - (RATE_REDUCTION_RANGE.1 - RATE_REDUCTION_RANGE.0) * t;
    let gain = GAIN_DB_RANGE.1 - (GAIN_DB_RANGE.1 - GAIN_DB_RANGE.0) * t;
    (rate, gain)
}

pub fn build_synthesis_plan(
    words: &[String],
    stress: &[u8],
    voice_id: &str,
    seed: u64,
    noise_enabled: bool,
) -> Result<SynthesisPlan, DatagenError> {
    if words.len() != stress.len() {
        return Err(DatagenError::Contract(format!(
            "{} words but {} stress labels",
            words.len(),
            stress.len()
        )));
    }
    if let Some(pos) = words.iter().position(String::is_empty) {
        return Err(DatagenError::Contract(format!("empty word at position {pos}")));
    }
    if !stress.contains(&1) {
        return Err(DatagenError::Contract("plan needs at least one stressed word".into()));
    }
    let n = words.len();
    let mut rate = vec![0.0; n];
    let mut gain = vec![0.0; n];
    let mut pitch = vec![0.0; n];
    for i in 0..n {
        if stress[i] == 0 {
            continue;
        }
        let (r, g) = stressed_adjustment(words[i].chars().count());
        let mut p = PITCH_ST;
        let (mut r, mut g) = (r, g);
        if noise_enabled {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("jitter:{i}")));
            let std = Normal::new(0.0, 1.0).expect("unit normal");
            r += JITTER_SIGMA.0 * std.sample(&mut rng);
            g += JITTER_SIGMA.1 * std.sample(&mut rng);
            p += JITTER_SIGMA.2 * std.sample(&mut rng);
            r = r.clamp(RATE_REDUCTION_RANGE.0, RATE_REDUCTION_RANGE.1);
            g = g.clamp(GAIN_DB_RANGE.0, GAIN_DB_RANGE.1);
            p = p.clamp(PITCH_ST_RANGE.0, PITCH_ST_RANGE.1);
        }
        rate[i] = r;
        gain[i] = g;
        pitch[i] = p;
    }
    Ok(SynthesisPlan {
        words: words.to_vec(),
        stress: stress.to_vec(),
        rate_reduction_pct: rate,
        gain_db: gain,
        pitch_st: pitch,
        voice_id: voice_id.to_string(),
        seed,
    })
}
