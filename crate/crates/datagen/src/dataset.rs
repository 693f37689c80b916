//! End-to-end dataset generation: sentences → labels → plans → audio →
//! JSONL manifests plus a generation report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stress_core::audio::write_wav;
use stress_core::manifest::{to_jsonl, DatasetRecord};
use stress_core::seed::derive_seed;
use stress_core::{split_into_sentences, words};

use crate::corpus::toy_text;
use crate::plan::build_synthesis_plan;
use crate::provider::{ProviderError, RuleBasedProvider, StressLabelProvider};
use crate::synth::{SpeechSynthesizer, ToySynthesizer};
use crate::voice::{Voice, VOICES};
use crate::DatagenError;

/// Where sentences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SentenceSource {
    /// Prose file, segmented into sentences.
    File { path: PathBuf },
    /// Built-in toy grammar producing `sentences` distinct sentences.
    Toy { sentences: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    #[default]
    Rule,
    /// Remote LLM labeler; needs a transport supplied by the caller.
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub source: SentenceSource,
    /// Optional cap on the number of sentences used.
    #[serde(default)]
    pub max_sentences: Option<usize>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default)]
    pub provider: ProviderChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: PathBuf,
}

fn default_train_fraction() -> f64 {
    0.9
}

fn default_true() -> bool {
    true
}

impl GenerationConfig {
    pub fn toy(sentences: usize, seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source: SentenceSource::Toy { sentences },
            max_sentences: None,
            train_fraction: default_train_fraction(),
            noise: true,
            provider: ProviderChoice::Rule,
            seed,
            out_dir: out_dir.into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, DatagenError> {
        let text = fs::read_to_string(path).map_err(|e| DatagenError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let SentenceSource::File { path: p } = &mut cfg.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub sentences: usize,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub produced_train: usize,
    pub produced_test: usize,
    /// Skipped sentences or samples keyed by reason.
    pub skipped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub report: GenerationReport,
}

struct SampleSpec {
    id: String,
    text: String,
    words: Vec<String>,
    stress: Vec<u8>,
    variant: u8,
}

fn load_sentences(cfg: &GenerationConfig) -> Result<Vec<String>, DatagenError> {
    let text = match &cfg.source {
        SentenceSource::File { path } => fs::read_to_string(path).map_err(|e| DatagenError::io(path, e))?,
        SentenceSource::Toy { sentences } => toy_text(*sentences, derive_seed(cfg.seed, "corpus")),
    };
    let mut sentences = split_into_sentences(&text);
    if let Some(cap) = cfg.max_sentences {
        sentences.truncate(cap);
    }
    Ok(sentences)
}

/// Uniform voice draw for a sample, stable under reordering.
pub fn draw_voice(seed: u64, sample_id: &str) -> Voice {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("voice:{sample_id}")));
    VOICES[rng.random_range(0..VOICES.len())]
}

fn bump(report: &mut GenerationReport, reason: &str) {
    *report.skipped.entry(reason.to_string()).or_default() += 1;
}

/// Generates with the toy synthesizer and the provider named in the config.
/// A remote provider must be supplied through [`generate_with`].
pub fn generate_dataset(cfg: &GenerationConfig) -> Result<GeneratedDataset, DatagenError> {
    match cfg.provider {
        ProviderChoice::Rule => generate_with(cfg, &RuleBasedProvider, &ToySynthesizer),
        ProviderChoice::Llm => Err(DatagenError::Config(
            "the llm provider needs a configured transport; none is available offline".into(),
        )),
    }
}

pub fn generate_with(
    cfg: &GenerationConfig,
    provider: &dyn StressLabelProvider,
    synth: &dyn SpeechSynthesizer,
) -> Result<GeneratedDataset, DatagenError> {
    if !(0.0..=1.0).contains(&cfg.train_fraction) {
        return Err(DatagenError::Config(format!(
            "train_fraction {} outside [0, 1]",
            cfg.train_fraction
        )));
    }
    let wav_dir = cfg.out_dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| DatagenError::io(&wav_dir, e))?;

    let mut sentences = load_sentences(cfg)?;
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "split"));
    sentences.shuffle(&mut order_rng);
    let n_train = (sentences.len() as f64 * cfg.train_fraction).round() as usize;

    let mut report = GenerationReport {
        sentences: sentences.len(),
        ..Default::default()
    };
    let mut train_specs = Vec::new();
    let mut test_specs = Vec::new();
    for (idx, text) in sentences.iter().enumerate() {
        let sid = format!("s{idx:05}");
        let ws: Vec<String> = words(text).into_iter().map(String::from).collect();
        let options = match provider.label(&sid, &ws) {
            Ok(Some(o)) => o,
            Ok(None) => {
                log::info!("{sid}: no stressable word, skipped");
                bump(&mut report, "no_stressable_word");
                continue;
            }
            Err(e @ ProviderError::Retryable { .. }) | Err(e @ ProviderError::Fatal { .. }) => {
                log::warn!("{e}");
                bump(&mut report, "provider_error");
                continue;
            }
        };
        let is_train = idx < n_train;
        let variants: Vec<u8> = if is_train {
            vec![0, 1]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("variant:{sid}")));
            vec![u8::from(rng.random_bool(0.5))]
        };
        if is_train {
            report.train_sentences += 1;
        } else {
            report.test_sentences += 1;
        }
        for v in variants {
            let spec = SampleSpec {
                id: format!("{sid}-v{v}"),
                text: text.clone(),
                words: ws.clone(),
                stress: options[v as usize].clone(),
                variant: v,
            };
            if is_train {
                train_specs.push(spec);
            } else {
                test_specs.push(spec);
            }
        }
    }

    let render = |spec: &SampleSpec| -> Result<DatasetRecord, DatagenError> {
        let voice = draw_voice(cfg.seed, &spec.id);
        let plan = build_synthesis_plan(
            &spec.words,
            &spec.stress,
            voice.id,
            derive_seed(cfg.seed, &format!("plan:{}", spec.id)),
            cfg.noise,
        )?;
        let sample = synth.synthesize(&plan)?;
        let rel = format!("wav/{}.wav", spec.id);
        let path = cfg.out_dir.join(&rel);
        write_wav(&path, &sample.waveform, sample.sample_rate_hz)?;
        Ok(DatasetRecord {
            id: spec.id.clone(),
            text: spec.text.clone(),
            words: spec.words.clone(),
            stress: spec.stress.clone(),
            variant: spec.variant,
            audio: rel,
            word_start_s: sample.word_start_s,
            voice: voice.id.to_string(),
        })
    };

    let mut manifests = Vec::new();
    for (name, specs) in [("train", &train_specs), ("test", &test_specs)] {
        let results: Vec<Result<DatasetRecord, DatagenError>> = specs.par_iter().map(render).collect();
        let mut records = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(rec) => records.push(rec),
                Err(e @ DatagenError::Io { .. }) | Err(e @ DatagenError::Core(_)) => return Err(e),
                Err(e) => {
                    log::warn!("sample skipped: {e}");
                    bump(&mut report, "synthesis_error");
                }
            }
        }
        let path = cfg.out_dir.join(format!("{name}.jsonl"));
        fs::write(&path, to_jsonl(&records)).map_err(|e| DatagenError::io(&path, e))?;
        if name == "train" {
            report.produced_train = records.len();
        } else {
            report.produced_test = records.len();
        }
        manifests.push(path);
    }

    let report_path = cfg.out_dir.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .map_err(|e| DatagenError::io(&report_path, e))?;
    let test_manifest = manifests.pop().expect("two manifests");
    let train_manifest = manifests.pop().expect("two manifests");
    Ok(GeneratedDataset {
        train_manifest,
        test_manifest,
        report,
    })
}
