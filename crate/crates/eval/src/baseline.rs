//! Bidirectional LSTM tagger over per-word acoustic features.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stress_core::audio::read_wav;
use stress_core::seed::derive_seed;
use stress_core::{read_manifest, DatasetRecord};
use stress_nn::layers::{Linear, Lstm};
use stress_nn::{Adam, Checkpoint, Graph, Grads, Matrix, NodeId, ParamSet, Scalar};

use crate::features::{boundaries_for, extract_baseline_features, AlignSource, AlignmentTable, BaselineWordFeatures};
use crate::EvalError;

pub const CHECKPOINT_KIND: &str = "blstm-baseline";

/// Per-feature mean and standard deviation over the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[[f64; 3]]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..3).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let std = (0..3)
            .map(|k| {
                let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
                // A constant feature is left centred but unscaled.
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, row: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| (row[k] - self.mean[k]) / self.std[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineHeader {
    pub hidden: usize,
    pub layers: usize,
    pub align: AlignSource,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone)]
pub struct BlstmTagger<T: Scalar> {
    header: BaselineHeader,
    params: ParamSet<T>,
    stack: Vec<(Lstm, Lstm)>,
    out: Linear,
}

impl<T: Scalar> BlstmTagger<T> {
    pub fn new(header: BaselineHeader, seed: u64) -> Result<Self, EvalError> {
        if header.hidden == 0 || header.layers == 0 {
            return Err(EvalError::Config("hidden size and layer count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let mut stack = Vec::with_capacity(header.layers);
        for l in 0..header.layers {
            let d_in = if l == 0 { BaselineWordFeatures::DIM } else { 2 * header.hidden };
            let fwd = Lstm::new(&mut params, &format!("blstm.{l}.fwd"), d_in, header.hidden, &mut rng);
            let bwd = Lstm::new(&mut params, &format!("blstm.{l}.bwd"), d_in, header.hidden, &mut rng);
            stack.push((fwd, bwd));
        }
        let out = Linear::new(&mut params, "blstm.out", 2 * header.hidden, 2, &mut rng);
        Ok(Self {
            header,
            params,
            stack,
            out,
        })
    }

    pub fn header(&self) -> &BaselineHeader {
        &self.header
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn digest(&self) -> String {
        self.params.digest()
    }

    fn inputs(&self, feats: &[BaselineWordFeatures]) -> Matrix<T> {
        let rows: Vec<Vec<T>> = feats
            .iter()
            .map(|f| self.header.standardizer.apply(f.to_array()).iter().map(|&v| T::of(v)).collect())
            .collect();
        Matrix::from_rows(&rows)
    }

    fn forward(&self, g: &mut Graph<'_, T>, x: NodeId) -> NodeId {
        let mut h = x;
        for (fwd, bwd) in &self.stack {
            let a = fwd.forward(g, h, false);
            let b = bwd.forward(g, h, true);
            h = g.concat_cols(&[a, b]);
        }
        self.out.forward(g, h)
    }

    /// Stress probability per word.
    pub fn word_scores(&self, feats: &[BaselineWordFeatures]) -> Vec<f64> {
        if feats.is_empty() {
            return Vec::new();
        }
        let mut g = Graph::new(&self.params);
        let x = g.input(self.inputs(feats));
        let logits = self.forward(&mut g, x);
        let m = g.value(logits);
        (0..m.rows())
            .map(|i| 1.0 / (1.0 + (m.get(i, 0).f64() - m.get(i, 1).f64()).exp()))
            .collect()
    }

    pub fn tag(&self, feats: &[BaselineWordFeatures]) -> Vec<u8> {
        self.word_scores(feats).into_iter().map(|p| u8::from(p >= 0.5)).collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            read_only: false,
            config: serde_json::to_value(&self.header).expect("header serializes"),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint<T>) -> Result<Self, EvalError> {
        if ckpt.kind != CHECKPOINT_KIND {
            return Err(EvalError::Config(format!("checkpoint kind {:?} is not {CHECKPOINT_KIND:?}", ckpt.kind)));
        }
        let header: BaselineHeader = serde_json::from_value(ckpt.config)?;
        let mut model = Self::new(header, 0)?;
        let same = model.params.len() == ckpt.params.len()
            && model
                .params
                .iter()
                .zip(ckpt.params.iter())
                .all(|((_, a, x), (_, b, y))| a == b && x.shape() == y.shape());
        if !same {
            return Err(EvalError::Config("baseline checkpoint does not match its header".into()));
        }
        model.params = ckpt.params;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineTrainOptions {
    pub hidden: usize,
    pub layers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BaselineTrainOptions {
    fn default() -> Self {
        Self {
            hidden: 64,
            layers: 2,
            epochs: 15,
            batch_size: 8,
            learning_rate: 3e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTrainReport {
    pub samples: usize,
    pub used: usize,
    pub skipped: usize,
    pub skipped_ids: Vec<String>,
    pub epoch_losses: Vec<f64>,
    pub seconds: f64,
    pub digest: String,
}

/// Features and gold labels of one sample, or why it was skipped.
pub(crate) fn sample_features(
    record: &DatasetRecord,
    manifest: &Path,
    source: &AlignSource,
    table: Option<&AlignmentTable>,
) -> Result<Result<Vec<BaselineWordFeatures>, String>, EvalError> {
    let (wav, sr) = read_wav(&record.audio_path(manifest))?;
    let end = wav.len() as f64 / f64::from(sr);
    let features = boundaries_for(record, end, source, table).and_then(|b| extract_baseline_features(&wav, sr, &b));
    Ok(match features {
        Ok(f) => Ok(f),
        Err(EvalError::Boundary(reason)) => Err(reason),
        Err(e) => return Err(e),
    })
}

pub(crate) fn load_table(source: &AlignSource) -> Result<Option<AlignmentTable>, EvalError> {
    match source {
        AlignSource::Gt => Ok(None),
        AlignSource::Csv { path } => {
            if !path.exists() {
                return Err(EvalError::Config(format!("alignment file {} not found", path.display())));
            }
            AlignmentTable::load(path).map(Some)
        }
    }
}

/// Trains the tagger on `manifest` with word boundaries from `source`.
/// Features are standardized with training-split statistics stored in the
/// checkpoint; training is single-threaded and seeded.
pub fn train_baseline(
    manifest: &Path,
    source: &AlignSource,
    opts: &BaselineTrainOptions,
) -> Result<(BlstmTagger<f32>, BaselineTrainReport), EvalError> {
    let started = Instant::now();
    let table = load_table(source)?;
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(EvalError::EmptyTestSet(manifest.display().to_string()));
    }
    let extracted: Vec<Result<Vec<BaselineWordFeatures>, String>> = records
        .par_iter()
        .map(|r| sample_features(r, manifest, source, table.as_ref()))
        .collect::<Result<_, _>>()?;
    let mut data = Vec::new();
    let mut skipped_ids = Vec::new();
    for (r, f) in records.iter().zip(extracted) {
        match f {
            Ok(f) => data.push((f, r.stress.clone())),
            Err(reason) => {
                log::warn!("{}: {reason}", r.id);
                skipped_ids.push(r.id.clone());
            }
        }
    }
    if data.is_empty() {
        return Err(EvalError::Config("no sample has usable word boundaries".into()));
    }
    let rows: Vec<[f64; 3]> = data.iter().flat_map(|(f, _)| f.iter().map(|w| w.to_array())).collect();
    let header = BaselineHeader {
        hidden: opts.hidden,
        layers: opts.layers,
        align: source.clone(),
        standardizer: Standardizer::fit(&rows),
    };
    let mut model = BlstmTagger::<f32>::new(header, derive_seed(opts.seed, "baseline-init"))?;
    let inputs: Vec<Matrix<f32>> = data.iter().map(|(f, _)| model.inputs(f)).collect();

    let mut adam = Adam::new(&model.params, opts.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "baseline-shuffle"));
    let mut epoch_losses = Vec::with_capacity(opts.epochs);
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut words) = (0.0, 0usize);
        for batch in order.chunks(opts.batch_size.max(1)) {
            let n: usize = batch.iter().map(|&i| data[i].1.len()).sum();
            let mut total = Grads::new(model.params.len());
            for &i in batch {
                let labels = &data[i].1;
                let mut g = Graph::new(&model.params);
                let x = g.input(inputs[i].clone());
                let logits = model.forward(&mut g, x);
                let targets: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
                let loss = g.cross_entropy(logits, &targets, &vec![1.0 / n as f32; labels.len()]);
                loss_sum += g.value(loss).get(0, 0).f64() * n as f64;
                total.accumulate(&g.backward(loss));
            }
            words += n;
            adam.step(&mut model.params, &total);
        }
        let mean = loss_sum / words.max(1) as f64;
        log::info!("baseline epoch {epoch}: loss {mean:.4}");
        epoch_losses.push(mean);
    }
    let report = BaselineTrainReport {
        samples: records.len(),
        used: data.len(),
        skipped: skipped_ids.len(),
        skipped_ids,
        epoch_losses,
        seconds: started.elapsed().as_secs_f64(),
        digest: model.digest(),
    };
    Ok((model, report))
}
