//! Cross-entropy training of the head with the recognizer frozen.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stress_backbone::LayeredAsr;
use stress_core::read_manifest;
use stress_core::seed::derive_seed;
use stress_nn::{Adam, Graph, Grads, Scalar};

use crate::config::HeadConfig;
use crate::data::{prepare_samples, PreparedSample};
use crate::model::StressHead;
use crate::HeadError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to this fraction of its initial
    /// value over the run; 1 keeps it constant.
    pub final_lr_fraction: f64,
    pub seed: u64,
    /// Training aborts when a larger share of samples is rejected.
    pub max_rejected_fraction: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 4,
            batch_size: 4,
            learning_rate: 2e-3,
            final_lr_fraction: 0.0,
            seed: 0,
            max_rejected_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadEpochStats {
    pub epoch: usize,
    /// Weighted mean token cross-entropy over the epoch.
    pub mean_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainReport {
    pub samples: usize,
    pub used: usize,
    pub rejected: usize,
    pub rejected_ids: Vec<String>,
    /// Decodes that hit the length limit, whether rejected or not.
    pub truncated: usize,
    pub tokens: usize,
    pub positive_tokens: usize,
    pub parameters: usize,
    pub input_layer_enc: usize,
    pub input_layer_dec: usize,
    pub epochs: Vec<HeadEpochStats>,
    pub backbone_digest_before: String,
    pub backbone_digest_after: String,
    pub head_digest: String,
}

fn check_rejections<T: Scalar>(samples: &[PreparedSample<T>], opts: &TrainOptions) -> Result<(), HeadError> {
    let rejected: Vec<&PreparedSample<T>> = samples.iter().filter(|s| s.is_rejected()).collect();
    if samples.is_empty() || rejected.len() as f64 > opts.max_rejected_fraction * samples.len() as f64 {
        return Err(HeadError::TooManyRejected {
            rejected: rejected.len(),
            total: samples.len(),
            examples: rejected
                .iter()
                .take(5)
                .map(|s| {
                    format!(
                        "{}: {} gold words, heard {:?}",
                        s.id,
                        s.gold_words.len(),
                        s.states.text
                    )
                })
                .collect(),
        });
    }
    Ok(())
}

/// Trains a fresh head on already transcribed samples. Rejected samples
/// are skipped; everything is single-threaded and driven by `opts.seed`.
pub fn train_on_prepared<T: Scalar>(
    samples: &[PreparedSample<T>],
    config: HeadConfig,
    backbone_digest: &str,
    opts: &TrainOptions,
) -> Result<(StressHead<T>, HeadTrainReport), HeadError> {
    if opts.epochs == 0 || opts.batch_size == 0 {
        return Err(HeadError::Config("epochs and batch_size must be positive".into()));
    }
    check_rejections(samples, opts)?;
    let (le, ld) = (config.input_layer_enc, config.input_layer_dec);
    let mut head = StressHead::<T>::new(config, backbone_digest, derive_seed(opts.seed, "head-init"))?;
    let used: Vec<&PreparedSample<T>> = samples.iter().filter(|s| !s.is_rejected()).collect();
    for s in &used {
        s.encoder_layer(le)?;
        s.decoder_layer(ld)?;
    }
    let pos_w = head.config().positive_weight;
    let dropout = head.config().dropout > 0.0;
    let label_weight = |l: u8| if l == 1 { pos_w } else { 1.0 };

    let mut adam = Adam::new(head.params(), opts.learning_rate);
    let mut order: Vec<usize> = (0..used.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "head-shuffle"));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "head-dropout"));
    let mut epochs = Vec::with_capacity(opts.epochs);
    let total_steps = (opts.epochs * used.len().div_ceil(opts.batch_size)).max(1);
    let mut step = 0usize;
    for epoch in 1..=opts.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
        for batch in order.chunks(opts.batch_size) {
            let batch_weight: f64 = batch
                .iter()
                .flat_map(|&i| used[i].token_labels.as_deref().unwrap_or_default())
                .map(|&l| label_weight(l))
                .sum();
            if batch_weight == 0.0 {
                continue;
            }
            let mut total = Grads::new(head.params().len());
            for &i in batch {
                let s = used[i];
                let labels = s.token_labels.as_deref().unwrap_or_default();
                if labels.is_empty() {
                    continue;
                }
                let mut g = Graph::new(head.params());
                let enc = g.input(s.encoder_layer(le)?.clone());
                let dec = g.input(s.decoder_layer(ld)?.clone());
                let logits = head.forward_graph(&mut g, enc, dec, dropout.then_some(&mut dropout_rng));
                let targets: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
                let weights: Vec<T> = labels.iter().map(|&l| T::of(label_weight(l) / batch_weight)).collect();
                let loss = g.cross_entropy(logits, &targets, &weights);
                loss_sum += g.value(loss).get(0, 0).f64() * batch_weight;
                total.accumulate(&g.backward(loss));
            }
            weight_sum += batch_weight;
            let progress = step as f64 / total_steps as f64;
            adam.lr = T::of(opts.learning_rate * (1.0 - (1.0 - opts.final_lr_fraction) * progress));
            step += 1;
            adam.step(head.params_mut(), &total);
        }
        let stats = HeadEpochStats {
            epoch,
            mean_loss: loss_sum / weight_sum.max(f64::MIN_POSITIVE),
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("head epoch {epoch}: loss {:.4} ({:.1}s)", stats.mean_loss, stats.seconds);
        epochs.push(stats);
    }

    let labels = used.iter().flat_map(|s| s.token_labels.as_deref().unwrap_or_default());
    let (tokens, positive_tokens) = labels.fold((0, 0), |(n, p), &l| (n + 1, p + l as usize));
    let report = HeadTrainReport {
        samples: samples.len(),
        used: used.len(),
        rejected: samples.len() - used.len(),
        rejected_ids: samples.iter().filter(|s| s.is_rejected()).map(|s| s.id.clone()).collect(),
        truncated: samples.iter().filter(|s| s.states.truncated).count(),
        tokens,
        positive_tokens,
        parameters: head.params().num_scalars(),
        input_layer_enc: le,
        input_layer_dec: ld,
        epochs,
        backbone_digest_before: backbone_digest.to_string(),
        backbone_digest_after: backbone_digest.to_string(),
        head_digest: head.digest(),
    };
    Ok((head, report))
}

/// Transcribes `manifest` with the frozen backbone and trains a head on
/// the aligned samples. The backbone digest is taken before and after and
/// must be unchanged.
pub fn train_head<T: Scalar, B: LayeredAsr<T>>(
    backbone: &B,
    manifest: &Path,
    config: HeadConfig,
    opts: &TrainOptions,
) -> Result<(StressHead<T>, HeadTrainReport), HeadError> {
    if config.d_model != backbone.d_model() {
        return Err(HeadError::Config(format!(
            "head d_model {} does not match backbone width {}",
            config.d_model,
            backbone.d_model()
        )));
    }
    let before = backbone.digest();
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(HeadError::Config(format!("{} has no samples", manifest.display())));
    }
    let samples = prepare_samples(backbone, &records, manifest)?;
    log::info!(
        "{} of {} transcriptions match the gold word count",
        samples.iter().filter(|s| !s.is_rejected()).count(),
        samples.len()
    );
    let (head, mut report) = train_on_prepared(&samples, config, &before, opts)?;
    report.backbone_digest_after = backbone.digest();
    if report.backbone_digest_after != before {
        return Err(HeadError::Contract("backbone parameters changed during head training".into()));
    }
    Ok((head, report))
}
