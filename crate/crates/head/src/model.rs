//! Decoder block with cross-attention followed by a two-layer classifier.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stress_nn::layers::{DecoderBlock, Linear};
use stress_nn::{Checkpoint, Graph, Grads, Matrix, NodeId, ParamSet, Scalar};

use crate::config::HeadConfig;
use crate::HeadError;

pub const CHECKPOINT_KIND: &str = "stress-head";

/// Header stored alongside head parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadHeader {
    pub head: HeadConfig,
    /// Digest of the frozen backbone the head was trained on.
    pub backbone_digest: String,
}

#[derive(Debug, Clone)]
struct Layout {
    block: Option<DecoderBlock>,
    hidden: Linear,
    out: Linear,
}

#[derive(Debug, Clone)]
pub struct StressHead<T: Scalar> {
    header: HeadHeader,
    params: ParamSet<T>,
    layout: Layout,
}

impl<T: Scalar> StressHead<T> {
    pub fn new(config: HeadConfig, backbone_digest: impl Into<String>, seed: u64) -> Result<Self, HeadError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let d = config.d_model;
        let block = config
            .use_block
            .then(|| DecoderBlock::new(&mut params, "head.block", d, config.n_heads, config.ffn_dim, &mut rng));
        let hidden = Linear::new(&mut params, "head.cls1", d, config.classifier_hidden, &mut rng);
        let out = Linear::new(&mut params, "head.cls2", config.classifier_hidden, 2, &mut rng);
        Ok(Self {
            header: HeadHeader {
                head: config,
                backbone_digest: backbone_digest.into(),
            },
            params,
            layout: Layout { block, hidden, out },
        })
    }

    pub fn config(&self) -> &HeadConfig {
        &self.header.head
    }

    pub fn backbone_digest(&self) -> &str {
        &self.header.backbone_digest
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Mutable parameters, for optimizers and numerical checks.
    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn digest(&self) -> String {
        self.params.digest()
    }

    fn check_inputs(&self, enc: &Matrix<T>, dec: &Matrix<T>) -> Result<(), HeadError> {
        let d = self.config().d_model;
        if enc.cols() != d || dec.cols() != d {
            return Err(HeadError::Contract(format!(
                "state widths {} (encoder) and {} (decoder) do not match d_model {d}",
                enc.cols(),
                dec.cols()
            )));
        }
        if self.layout.block.is_some() && enc.rows() == 0 && dec.rows() > 0 {
            return Err(HeadError::Contract("cross-attention needs at least one encoder frame".into()));
        }
        Ok(())
    }

    /// Builds the forward pass on `g` and returns the `tokens × 2` logits.
    /// With `dropout` set, the block output is masked with the given RNG.
    pub(crate) fn forward_graph(
        &self,
        g: &mut Graph<'_, T>,
        enc: NodeId,
        dec: NodeId,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> NodeId {
        let mut x = dec;
        if let Some(block) = &self.layout.block {
            x = block.forward(g, x, enc);
        }
        if let Some(rng) = dropout {
            let p = self.config().dropout;
            if p > 0.0 {
                let (r, c) = g.value(x).shape();
                let keep = T::of(1.0 / (1.0 - p));
                let mask = (0..r * c)
                    .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
                    .collect();
                let m = g.input(Matrix::from_vec(r, c, mask));
                x = g.mul(x, m);
            }
        }
        let h = self.layout.hidden.forward(g, x);
        let h = g.gelu(h);
        self.layout.out.forward(g, h)
    }

    /// Per-token binary logits (`tokens × 2`) from one sample's states.
    pub fn head_forward(&self, enc_states: &Matrix<T>, dec_states: &Matrix<T>) -> Result<Matrix<T>, HeadError> {
        self.check_inputs(enc_states, dec_states)?;
        if dec_states.rows() == 0 {
            return Ok(Matrix::zeros(0, 2));
        }
        let mut g = Graph::new(&self.params);
        let e = g.input(enc_states.clone());
        let d = g.input(dec_states.clone());
        let logits = self.forward_graph(&mut g, e, d, None);
        Ok(g.value(logits).clone())
    }

    /// Token cross-entropy against `labels` (weighted mean, positive
    /// tokens weighted by `positive_weight`) and its parameter gradients.
    pub fn loss_and_grads(
        &self,
        enc_states: &Matrix<T>,
        dec_states: &Matrix<T>,
        labels: &[u8],
    ) -> Result<(f64, Grads<T>), HeadError> {
        self.check_inputs(enc_states, dec_states)?;
        if labels.len() != dec_states.rows() || labels.is_empty() || labels.iter().any(|&l| l > 1) {
            return Err(HeadError::Contract(format!(
                "{} binary labels needed, got {:?}",
                dec_states.rows(),
                labels
            )));
        }
        let pw = self.config().positive_weight;
        let total: f64 = labels.iter().map(|&l| if l == 1 { pw } else { 1.0 }).sum();
        let mut g = Graph::new(&self.params);
        let e = g.input(enc_states.clone());
        let d = g.input(dec_states.clone());
        let logits = self.forward_graph(&mut g, e, d, None);
        let targets: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        let weights: Vec<T> = labels
            .iter()
            .map(|&l| T::of(if l == 1 { pw } else { 1.0 } / total))
            .collect();
        let loss = g.cross_entropy(logits, &targets, &weights);
        Ok((g.value(loss).get(0, 0).f64(), g.backward(loss)))
    }

    /// Stress probability per token: softmax of the logits, class 1.
    pub fn token_scores(&self, enc_states: &Matrix<T>, dec_states: &Matrix<T>) -> Result<Vec<f64>, HeadError> {
        let logits = self.head_forward(enc_states, dec_states)?;
        Ok((0..logits.rows())
            .map(|i| {
                let (a, b) = (logits.get(i, 0).f64(), logits.get(i, 1).f64());
                1.0 / (1.0 + (a - b).exp())
            })
            .collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            read_only: false,
            config: serde_json::to_value(&self.header).expect("header serializes"),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint<T>) -> Result<Self, HeadError> {
        if ckpt.kind != CHECKPOINT_KIND {
            return Err(HeadError::Config(format!("checkpoint kind {:?} is not {CHECKPOINT_KIND:?}", ckpt.kind)));
        }
        let header: HeadHeader = serde_json::from_value(ckpt.config)
            .map_err(|e| HeadError::Config(format!("head checkpoint header: {e}")))?;
        let mut fresh = Self::new(header.head.clone(), header.backbone_digest.clone(), 0)?;
        if fresh.params.len() != ckpt.params.len() {
            return Err(HeadError::Config("head checkpoint has the wrong parameter count".into()));
        }
        for (id, name, m) in ckpt.params.iter() {
            if fresh.params.name(id) != name || fresh.params.get(id).shape() != m.shape() {
                return Err(HeadError::Config(format!("head parameter {name} does not match the config")));
            }
        }
        fresh.params = ckpt.params;
        Ok(fresh)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HeadError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HeadError> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}
