//! The toy encoder–decoder recognizer.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stress_core::word_index_of_tokens;
use stress_nn::layers::{sinusoid_table, DecoderBlock, EncoderBlock, LayerNorm, Linear};
use stress_nn::{Checkpoint, Graph, Matrix, NodeId, ParamId, ParamSet, Scalar};

use crate::frontend::{FrontendConfig, LogMel};
use crate::states::LayeredStates;
use crate::vocab::{Vocabulary, BOS, EOS};
use crate::BackboneError;

pub const CHECKPOINT_KIND: &str = "toy-backbone";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub d_model: usize,
    pub n_encoder_layers: usize,
    pub n_decoder_layers: usize,
    pub n_heads: usize,
    pub ffn_dim: usize,
    #[serde(default)]
    pub frontend: FrontendConfig,
    /// Generated tokens before decoding stops and the output is flagged
    /// as truncated.
    #[serde(default = "default_max_decode_len")]
    pub max_decode_len: usize,
    pub vocab: Vocabulary,
}

fn default_max_decode_len() -> usize {
    48
}

impl BackboneConfig {
    /// d=64, 4+4 layers, 4 heads, ffn=128.
    pub fn toy(vocab: Vocabulary) -> Self {
        Self {
            d_model: 64,
            n_encoder_layers: 4,
            n_decoder_layers: 4,
            n_heads: 4,
            ffn_dim: 128,
            frontend: FrontendConfig::default(),
            max_decode_len: default_max_decode_len(),
            vocab,
        }
    }

    pub fn validate(&self) -> Result<(), BackboneError> {
        let bad = |m: String| Err(BackboneError::Config(m));
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if !self.d_model.is_multiple_of(2) {
            return bad("d_model must be even for sinusoidal positions".into());
        }
        if self.n_encoder_layers == 0 || self.n_decoder_layers == 0 || self.ffn_dim == 0 {
            return bad("layer counts and ffn_dim must be positive".into());
        }
        if self.max_decode_len == 0 {
            return bad("max_decode_len must be positive".into());
        }
        if self.vocab.is_empty() {
            return bad("vocabulary has no regular tokens".into());
        }
        self.frontend.validate().map_err(BackboneError::Config)
    }
}

#[derive(Debug, Clone)]
struct Layout {
    input: Linear,
    encoder: Vec<EncoderBlock>,
    enc_norm: LayerNorm,
    embed: ParamId,
    decoder: Vec<DecoderBlock>,
    dec_norm: LayerNorm,
    output: Linear,
}

impl Layout {
    fn build<T: Scalar>(cfg: &BackboneConfig, ps: &mut ParamSet<T>, rng: &mut ChaCha8Rng) -> Self {
        let d = cfg.d_model;
        let input = Linear::new(ps, "enc.input", cfg.frontend.feature_dim(), d, rng);
        let encoder = (0..cfg.n_encoder_layers)
            .map(|i| EncoderBlock::new(ps, &format!("enc.block{i}"), d, cfg.n_heads, cfg.ffn_dim, rng))
            .collect();
        let enc_norm = LayerNorm::new(ps, "enc.norm", d);
        let embed = ps.add_normal("dec.embed", cfg.vocab.len(), d, 1.0, rng);
        let decoder = (0..cfg.n_decoder_layers)
            .map(|i| DecoderBlock::new(ps, &format!("dec.block{i}"), d, cfg.n_heads, cfg.ffn_dim, rng))
            .collect();
        let dec_norm = LayerNorm::new(ps, "dec.norm", d);
        let output = Linear::new(ps, "dec.output", d, cfg.vocab.len(), rng);
        Self {
            input,
            encoder,
            enc_norm,
            embed,
            decoder,
            dec_norm,
            output,
        }
    }

    fn bind<T: Scalar>(cfg: &BackboneConfig, ps: &ParamSet<T>) -> Option<Self> {
        let h = cfg.n_heads;
        Some(Self {
            input: Linear::bind(ps, "enc.input")?,
            encoder: (0..cfg.n_encoder_layers)
                .map(|i| EncoderBlock::bind(ps, &format!("enc.block{i}"), h))
                .collect::<Option<_>>()?,
            enc_norm: LayerNorm::bind(ps, "enc.norm")?,
            embed: ps.find("dec.embed")?,
            decoder: (0..cfg.n_decoder_layers)
                .map(|i| DecoderBlock::bind(ps, &format!("dec.block{i}"), h))
                .collect::<Option<_>>()?,
            dec_norm: LayerNorm::bind(ps, "dec.norm")?,
            output: Linear::bind(ps, "dec.output")?,
        })
    }
}

/// Graph nodes of one encoder pass.
pub(crate) struct EncoderNodes {
    pub layers: Vec<NodeId>,
    pub memory: NodeId,
}

/// Graph nodes of one teacher-forced decoder pass.
pub(crate) struct DecoderNodes {
    pub layers: Vec<NodeId>,
    pub logits: NodeId,
}

/// Encoder–decoder recognizer. Parameters cannot be mutated through the
/// public API; pretraining is the only writer.
#[derive(Debug, Clone)]
pub struct ToyBackbone<T: Scalar> {
    config: BackboneConfig,
    params: ParamSet<T>,
    layout: Layout,
    frontend: LogMel,
}

impl<T: Scalar> ToyBackbone<T> {
    /// Randomly initialised model.
    pub fn new(config: BackboneConfig, seed: u64) -> Result<Self, BackboneError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let layout = Layout::build(&config, &mut params, &mut rng);
        let frontend = LogMel::new(config.frontend.clone());
        Ok(Self {
            config,
            params,
            layout,
            frontend,
        })
    }

    pub fn from_parts(config: BackboneConfig, params: ParamSet<T>) -> Result<Self, BackboneError> {
        let expected = ToyBackbone::<T>::new(config.clone(), 0)?.params;
        if expected.len() != params.len() {
            return Err(BackboneError::Config("unexpected parameter count".into()));
        }
        for (_, name, a) in expected.iter() {
            let found = params.find(name).map(|id| params.get(id).shape());
            if found != Some(a.shape()) {
                return Err(BackboneError::Config(format!("parameter {name} missing or misshapen")));
            }
        }
        let layout = Layout::bind(&config, &params)
            .ok_or_else(|| BackboneError::Config("checkpoint lacks expected parameters".into()))?;
        let frontend = LogMel::new(config.frontend.clone());
        Ok(Self {
            config,
            params,
            layout,
            frontend,
        })
    }

    pub fn config(&self) -> &BackboneConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.config.vocab
    }

    pub fn frontend(&self) -> &LogMel {
        &self.frontend
    }

    /// SHA-256 over every parameter name, shape and value.
    pub fn digest(&self) -> String {
        self.params.digest()
    }

    pub fn features(&self, waveform: &[f32]) -> Matrix<T> {
        self.frontend.features(waveform)
    }

    pub(crate) fn encode_graph(&self, g: &mut Graph<'_, T>, feats: NodeId) -> EncoderNodes {
        let x = self.layout.input.forward(g, feats);
        let (t, d) = g.value(x).shape();
        let pos = g.input(sinusoid_table(t, d));
        let mut x = g.add(x, pos);
        let mut layers = vec![x];
        for block in &self.layout.encoder {
            x = block.forward(g, x);
            layers.push(x);
        }
        let memory = self.layout.enc_norm.forward(g, x);
        EncoderNodes { layers, memory }
    }

    pub(crate) fn decode_graph(&self, g: &mut Graph<'_, T>, memory: NodeId, ids: &[usize]) -> DecoderNodes {
        let table = g.param(self.layout.embed);
        let x = g.gather(table, ids);
        let pos = g.input(sinusoid_table(ids.len(), self.config.d_model));
        let mut x = g.add(x, pos);
        let mut layers = vec![x];
        for block in &self.layout.decoder {
            x = block.forward(g, x, memory);
            layers.push(x);
        }
        let h = self.layout.dec_norm.forward(g, x);
        let logits = self.layout.output.forward(g, h);
        DecoderNodes { layers, logits }
    }

    /// Encoder layer values (embedding output first) and the normalised
    /// memory the decoder attends to.
    pub fn encode(&self, feats: &Matrix<T>) -> (Vec<Matrix<T>>, Matrix<T>) {
        let mut g = Graph::new(&self.params);
        let f = g.input(feats.clone());
        let nodes = self.encode_graph(&mut g, f);
        let layers = nodes.layers.iter().map(|&n| g.value(n).clone()).collect();
        (layers, g.value(nodes.memory).clone())
    }

    fn decode_step(&self, memory: &Matrix<T>, ids: &[usize]) -> (Vec<Matrix<T>>, Matrix<T>) {
        let mut g = Graph::new(&self.params);
        let m = g.input(memory.clone());
        let nodes = self.decode_graph(&mut g, m, ids);
        let layers = nodes.layers.iter().map(|&n| g.value(n).clone()).collect();
        (layers, g.value(nodes.logits).clone())
    }

    /// Greedy decoding with every encoder and decoder layer's states.
    ///
    /// Decoder state row `i` is computed with generated token `i` as the
    /// input, so it has seen that token and everything before it.
    pub fn transcribe_with_states(&self, waveform: &[f32]) -> LayeredStates<T> {
        self.states_from_features(&self.features(waveform))
    }

    /// [`Self::transcribe_with_states`] on precomputed frontend features.
    pub fn states_from_features(&self, feats: &Matrix<T>) -> LayeredStates<T> {
        let (encoder_states, memory) = self.encode(feats);
        let mut ids = vec![BOS as usize];
        let mut truncated = false;
        let mut last_layers = None;
        loop {
            if ids.len() > self.config.max_decode_len {
                truncated = true;
                break;
            }
            let (layers, logits) = self.decode_step(&memory, &ids);
            let next = argmax_regular(logits.row(logits.rows() - 1));
            if next == EOS as usize {
                last_layers = Some(layers);
                break;
            }
            ids.push(next);
        }
        let layers = match last_layers {
            Some(l) => l,
            None => self.decode_step(&memory, &ids).0,
        };
        let n = ids.len() - 1;
        let decoder_states = layers.into_iter().map(|m| m.slice_rows(1, n)).collect();
        let tokens: Vec<u32> = ids[1..].iter().map(|&i| i as u32).collect();
        let token_strings = self.config.vocab.token_strings(&tokens);
        LayeredStates {
            encoder_states,
            decoder_states,
            word_index: word_index_of_tokens(&token_strings),
            text: self.config.vocab.decode(&tokens),
            token_strings,
            tokens,
            truncated,
            frame_rate_hz: self.config.frontend.frame_rate_hz(),
        }
    }

    pub fn transcribe(&self, waveform: &[f32]) -> String {
        self.transcribe_with_states(waveform).text
    }

    pub fn transcribe_features(&self, feats: &Matrix<T>) -> String {
        self.states_from_features(feats).text
    }

    pub fn to_checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            read_only: true,
            config: serde_json::to_value(&self.config).expect("config serializes"),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint<T>) -> Result<Self, BackboneError> {
        if ckpt.kind != CHECKPOINT_KIND {
            return Err(BackboneError::Config(format!(
                "checkpoint kind {:?} is not {CHECKPOINT_KIND:?}",
                ckpt.kind
            )));
        }
        let config: BackboneConfig = serde_json::from_value(ckpt.config)
            .map_err(|e| BackboneError::Config(format!("checkpoint config: {e}")))?;
        Self::from_parts(config, ckpt.params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BackboneError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackboneError> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

/// Best token excluding `<bos>`, which is never generated.
fn argmax_regular<T: Scalar>(row: &[T]) -> usize {
    let mut best = EOS as usize;
    for (i, &v) in row.iter().enumerate().skip(EOS as usize) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ToyBackbone<f64> {
        let vocab = Vocabulary::from_texts(["Tom ran home.", "Anna saw a cat."]);
        let mut cfg = BackboneConfig::toy(vocab);
        cfg.d_model = 16;
        cfg.n_heads = 2;
        cfg.ffn_dim = 32;
        cfg.n_encoder_layers = 2;
        cfg.n_decoder_layers = 3;
        cfg.max_decode_len = 5;
        ToyBackbone::new(cfg, 4).unwrap()
    }

    #[test]
    fn untrained_model_obeys_state_shapes() {
        let m = tiny();
        let wav: Vec<f32> = (0..8000).map(|i| (i as f32 * 0.07).sin() * 0.1).collect();
        let s = m.transcribe_with_states(&wav);
        assert_eq!(s.encoder_states.len(), 3);
        assert_eq!(s.decoder_states.len(), 4);
        s.check_shapes().unwrap();
        assert!(s.tokens.len() <= 5);
        assert_eq!(s.truncated, s.tokens.len() == 5);
        assert_eq!(m.transcribe_with_states(&wav), s);
    }

    #[test]
    fn silence_and_empty_input_do_not_crash() {
        let m = tiny();
        m.transcribe_with_states(&vec![0.0; 16000]).check_shapes().unwrap();
        m.transcribe_with_states(&[]).check_shapes().unwrap();
    }

    #[test]
    fn checkpoint_round_trip_preserves_digest() {
        let m = tiny();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.ckpt");
        m.save(&path).unwrap();
        let back = ToyBackbone::<f64>::load(&path).unwrap();
        assert_eq!(back.digest(), m.digest());
        assert_eq!(back.config(), m.config());
        let ckpt = Checkpoint::<f64>::load(&path).unwrap();
        assert!(ckpt.read_only);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let mut c = tiny().to_checkpoint();
        c.kind = "other".into();
        assert!(matches!(ToyBackbone::from_checkpoint(c), Err(BackboneError::Config(_))));
    }

    #[test]
    fn argmax_never_returns_bos() {
        assert_eq!(argmax_regular(&[9.0, 1.0, 2.0]), 2);
        assert_eq!(argmax_regular(&[9.0, 3.0, 2.0]), 1);
    }
}
