//! Teacher-forced pretraining of the toy recognizer.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stress_core::audio::read_wav;
use stress_core::seed::derive_seed;
use stress_core::{read_manifest, DatasetRecord};
use stress_nn::{Adam, Graph, Grads, Matrix, Scalar};

use crate::frontend::{FrontendConfig, LogMel};
use crate::model::{BackboneConfig, ToyBackbone};
use crate::vocab::{Vocabulary, BOS, EOS};
use crate::wer::word_accuracy;
use crate::BackboneError;

/// Architecture knobs of the pretraining config file. The vocabulary is
/// always derived from the training manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelShape {
    pub d_model: usize,
    pub n_encoder_layers: usize,
    pub n_decoder_layers: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    pub frontend: FrontendConfig,
    pub max_decode_len: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        let c = BackboneConfig::toy(Vocabulary::from_texts([]));
        Self {
            d_model: c.d_model,
            n_encoder_layers: c.n_encoder_layers,
            n_decoder_layers: c.n_decoder_layers,
            n_heads: c.n_heads,
            ffn_dim: c.ffn_dim,
            frontend: c.frontend,
            max_decode_len: c.max_decode_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub model: ModelShape,
    /// Step budget, expressed in passes over the training portion.
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub warmup_steps: usize,
    /// Training stops once held-out word accuracy reaches this value.
    pub target_accuracy: f64,
    /// Below this accuracy at the end of the budget the run is an error.
    pub min_accuracy: f64,
    /// Share of distinct sentences held out for accuracy checks.
    pub heldout_fraction: f64,
    /// Cap on held-out samples decoded per evaluation.
    pub max_heldout: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            model: ModelShape::default(),
            max_epochs: 30,
            batch_size: 8,
            learning_rate: 2e-3,
            warmup_steps: 200,
            target_accuracy: 0.9,
            min_accuracy: 0.6,
            heldout_fraction: 0.05,
            max_heldout: 100,
        }
    }
}

impl PretrainConfig {
    pub fn load(path: &Path) -> Result<Self, BackboneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackboneError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BackboneError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_token_loss: f64,
    pub heldout_word_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub train_samples: usize,
    pub heldout_samples: usize,
    pub vocab_size: usize,
    pub parameters: usize,
    pub steps: usize,
    pub epochs: Vec<EpochStats>,
    pub final_heldout_word_accuracy: f64,
    pub reached_target: bool,
    pub digest: String,
}

/// One training utterance: encoder input plus target token ids.
struct Example<T> {
    feats: Matrix<T>,
    targets: Vec<usize>,
    text: String,
}

pub(crate) fn load_audio(record: &DatasetRecord, manifest: &Path) -> Result<Vec<f32>, BackboneError> {
    let (wav, sr) = read_wav(&record.audio_path(manifest))?;
    if sr != 16_000 {
        return Err(BackboneError::Data(format!("{}: sample rate {sr}, expected 16000", record.id)));
    }
    Ok(wav)
}

fn is_heldout(text: &str, seed: u64, fraction: f64) -> bool {
    let draw = derive_seed(seed, &format!("heldout:{text}")) % 1_000_000;
    (draw as f64) < fraction * 1_000_000.0
}

/// Trains a fresh toy recognizer on `manifest` and returns it frozen.
///
/// Sentences are split by text into training and held-out parts so both
/// stress variants of one sentence land on the same side. Training is
/// single-threaded and fully determined by `seed`.
pub fn pretrain_toy_backbone<T: Scalar>(
    manifest: &Path,
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<(ToyBackbone<T>, PretrainReport), BackboneError> {
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(BackboneError::Config(format!("{} has no samples", manifest.display())));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(BackboneError::Config("batch_size and max_epochs must be positive".into()));
    }
    let (heldout, train): (Vec<&DatasetRecord>, Vec<&DatasetRecord>) = records
        .iter()
        .partition(|r| is_heldout(&r.text, seed, cfg.heldout_fraction));
    if train.is_empty() {
        return Err(BackboneError::Config("held-out split left no training samples".into()));
    }
    let vocab = Vocabulary::from_texts(train.iter().map(|r| r.text.as_str()));
    let shape = &cfg.model;
    let config = BackboneConfig {
        d_model: shape.d_model,
        n_encoder_layers: shape.n_encoder_layers,
        n_decoder_layers: shape.n_decoder_layers,
        n_heads: shape.n_heads,
        ffn_dim: shape.ffn_dim,
        frontend: shape.frontend.clone(),
        max_decode_len: shape.max_decode_len,
        vocab,
    };
    let mut model = ToyBackbone::<T>::new(config, derive_seed(seed, "init"))?;
    let frontend = LogMel::new(shape.frontend.clone());
    let prepare = |r: &DatasetRecord| -> Result<Example<T>, BackboneError> {
        let wav = load_audio(r, manifest)?;
        let mut targets: Vec<usize> = model.vocab().encode(&r.text).into_iter().map(|i| i as usize).collect();
        targets.push(EOS as usize);
        Ok(Example {
            feats: frontend.features(&wav),
            targets,
            text: r.text.clone(),
        })
    };
    let train_set: Vec<Example<T>> = train.iter().map(|r| prepare(r)).collect::<Result<_, _>>()?;
    let heldout_set: Vec<Example<T>> = heldout
        .iter()
        .take(cfg.max_heldout)
        .map(|r| prepare(r))
        .collect::<Result<_, _>>()?;
    let eval_set: Vec<&Example<T>> = if heldout_set.is_empty() {
        log::warn!("no held-out sentences; accuracy is measured on training samples");
        train_set.iter().take(cfg.max_heldout).collect()
    } else {
        heldout_set.iter().collect()
    };
    log::info!(
        "pretraining on {} samples ({} held out, vocab {}, {} parameters)",
        train_set.len(),
        heldout_set.len(),
        model.vocab().len(),
        model.params().num_scalars()
    );

    let mut adam = Adam::new(model.params(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "shuffle"));
    let mut epochs = Vec::new();
    let mut steps = 0usize;
    let mut accuracy = 0.0;
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut token_sum) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let n_tokens: usize = batch.iter().map(|&i| train_set[i].targets.len()).sum();
            let weight = T::of(1.0 / n_tokens as f64);
            let mut total = Grads::new(model.params().len());
            for &i in batch {
                let ex = &train_set[i];
                let mut g = Graph::new(model.params());
                let f = g.input(ex.feats.clone());
                let enc = model.encode_graph(&mut g, f);
                let mut inputs = vec![BOS as usize];
                inputs.extend_from_slice(&ex.targets[..ex.targets.len() - 1]);
                let dec = model.decode_graph(&mut g, enc.memory, &inputs);
                let weights = vec![weight; ex.targets.len()];
                let loss = g.cross_entropy(dec.logits, &ex.targets, &weights);
                loss_sum += g.value(loss).get(0, 0).f64() * n_tokens as f64;
                total.accumulate(&g.backward(loss));
            }
            token_sum += n_tokens;
            steps += 1;
            let warm = (steps as f64 / cfg.warmup_steps.max(1) as f64).min(1.0);
            adam.lr = T::of(cfg.learning_rate * warm);
            adam.step(model.params_mut(), &total);
        }
        accuracy = heldout_accuracy(&model, &eval_set);
        let stats = EpochStats {
            epoch,
            mean_token_loss: loss_sum / token_sum.max(1) as f64,
            heldout_word_accuracy: accuracy,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.4}, held-out word accuracy {:.4} ({:.1}s)",
            stats.mean_token_loss,
            accuracy,
            stats.seconds
        );
        epochs.push(stats);
        if accuracy >= cfg.target_accuracy {
            break;
        }
    }
    if accuracy < cfg.min_accuracy {
        return Err(BackboneError::Accuracy {
            achieved: accuracy,
            required: cfg.min_accuracy,
            diagnostics: format!(
                "{} epochs, {steps} steps, per-epoch loss {:?}",
                epochs.len(),
                epochs.iter().map(|e| e.mean_token_loss).collect::<Vec<_>>()
            ),
        });
    }
    let report = PretrainReport {
        train_samples: train_set.len(),
        heldout_samples: heldout_set.len(),
        vocab_size: model.vocab().len(),
        parameters: model.params().num_scalars(),
        steps,
        epochs,
        final_heldout_word_accuracy: accuracy,
        reached_target: accuracy >= cfg.target_accuracy,
        digest: model.digest(),
    };
    Ok((model, report))
}

fn heldout_accuracy<T: Scalar>(model: &ToyBackbone<T>, set: &[&Example<T>]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let hyps: Vec<String> = set.iter().map(|ex| model.transcribe_features(&ex.feats)).collect();
    word_accuracy(set.iter().zip(&hyps).map(|(ex, h)| (ex.text.as_str(), h.as_str())))
}
