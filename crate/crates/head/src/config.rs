use serde::{Deserialize, Serialize};
use stress_backbone::select_head_input_layer;

use crate::HeadError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub input_layer_enc: usize,
    pub input_layer_dec: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    pub classifier_hidden: usize,
    /// Dropout on the block output during training; 0 disables it.
    #[serde(default)]
    pub dropout: f64,
    /// Whether the decoder block precedes the classifier.
    #[serde(default = "yes")]
    pub use_block: bool,
    /// Loss weight of positive tokens; 1 is plain cross-entropy.
    #[serde(default = "one")]
    pub positive_weight: f64,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl HeadConfig {
    /// Defaults matched to a backbone: block width and heads follow the
    /// backbone, the classifier hidden width equals `d_model`, and both
    /// input layers sit at three quarters of the respective depth unless
    /// `layer` overrides them.
    pub fn for_backbone(
        d_model: usize,
        n_heads: usize,
        ffn_dim: usize,
        n_encoder_layers: usize,
        n_decoder_layers: usize,
        layer: Option<usize>,
    ) -> Result<Self, HeadError> {
        Ok(Self {
            input_layer_enc: select_head_input_layer(n_encoder_layers, layer)?,
            input_layer_dec: select_head_input_layer(n_decoder_layers, layer)?,
            d_model,
            n_heads,
            ffn_dim,
            classifier_hidden: d_model,
            dropout: 0.0,
            use_block: true,
            positive_weight: 1.0,
        })
    }

    pub fn validate(&self) -> Result<(), HeadError> {
        let bad = |m: String| Err(HeadError::Config(m));
        if self.d_model == 0 || self.classifier_hidden == 0 {
            return bad("d_model and classifier_hidden must be positive".into());
        }
        if self.use_block && (self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) || self.ffn_dim == 0) {
            return bad(format!(
                "block needs n_heads dividing d_model ({} / {}) and ffn_dim > 0",
                self.d_model, self.n_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.positive_weight <= 0.0 {
            return bad("positive_weight must be positive".into());
        }
        Ok(())
    }
}

/// Trainable scalars implied by the architecture: the optional decoder
/// block (three normalisations, two attention modules, feed-forward) plus
/// the two-layer classifier.
pub fn count_head_parameters(cfg: &HeadConfig) -> usize {
    let d = cfg.d_model;
    let block = if cfg.use_block {
        let norms = 3 * 2 * d;
        let attention = 2 * 4 * (d * d + d);
        let ffn = (d * cfg.ffn_dim + cfg.ffn_dim) + (cfg.ffn_dim * d + d);
        norms + attention + ffn
    } else {
        0
    };
    let h = cfg.classifier_hidden;
    block + (d * h + h) + (h * 2 + 2)
}

/// Same count assembled from the layer helpers, used as a cross-check.
#[cfg(test)]
pub(crate) fn count_from_layers(cfg: &HeadConfig) -> usize {
    use stress_nn::layers::{DecoderBlock, Linear};
    let block = if cfg.use_block {
        DecoderBlock::param_count(cfg.d_model, cfg.ffn_dim)
    } else {
        0
    };
    block + Linear::param_count(cfg.d_model, cfg.classifier_hidden) + Linear::param_count(cfg.classifier_hidden, 2)
}
