//! Transformer and recurrent building blocks on top of [`Graph`].
//!
//! Blocks use pre-normalization: every sub-layer sees `LayerNorm(x)` and
//! its output is added back onto the residual stream.

use rand::Rng;

use crate::graph::{Graph, NodeId};
use crate::params::{ParamId, ParamSet};
use crate::{Matrix, Scalar};

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let std = (2.0 / (d_in + d_out) as f64).sqrt();
        let w = ps.add_normal(format!("{name}.w"), d_in, d_out, std, rng);
        let b = ps.add_filled(format!("{name}.b"), 1, d_out, 0.0);
        Self { w, b, d_in, d_out }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str) -> Option<Self> {
        let w = ps.find(&format!("{name}.w"))?;
        let b = ps.find(&format!("{name}.b"))?;
        let (d_in, d_out) = ps.get(w).shape();
        Some(Self { w, b, d_in, d_out })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId) -> NodeId {
        let w = g.param(self.w);
        let b = g.param(self.b);
        let h = g.matmul(x, w);
        g.add_row(h, b)
    }

    pub fn param_count(d_in: usize, d_out: usize) -> usize {
        d_in * d_out + d_out
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new<T: Scalar>(ps: &mut ParamSet<T>, name: &str, d: usize) -> Self {
        Self {
            gamma: ps.add_filled(format!("{name}.gamma"), 1, d, 1.0),
            beta: ps.add_filled(format!("{name}.beta"), 1, d, 0.0),
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str) -> Option<Self> {
        Some(Self {
            gamma: ps.find(&format!("{name}.gamma"))?,
            beta: ps.find(&format!("{name}.beta"))?,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId) -> NodeId {
        let gamma = g.param(self.gamma);
        let beta = g.param(self.beta);
        g.layer_norm(x, gamma, beta)
    }

    pub fn param_count(d: usize) -> usize {
        2 * d
    }
}

/// Multi-head scaled dot-product attention with separate query and
/// key/value sources (self-attention passes the same node twice).
#[derive(Debug, Clone)]
pub struct Attention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub n_heads: usize,
}

impl Attention {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d: usize,
        n_heads: usize,
        rng: &mut R,
    ) -> Self {
        assert!(n_heads > 0 && d.is_multiple_of(n_heads), "d_model must divide into heads");
        Self {
            q: Linear::new(ps, &format!("{name}.q"), d, d, rng),
            k: Linear::new(ps, &format!("{name}.k"), d, d, rng),
            v: Linear::new(ps, &format!("{name}.v"), d, d, rng),
            o: Linear::new(ps, &format!("{name}.o"), d, d, rng),
            n_heads,
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str, n_heads: usize) -> Option<Self> {
        Some(Self {
            q: Linear::bind(ps, &format!("{name}.q"))?,
            k: Linear::bind(ps, &format!("{name}.k"))?,
            v: Linear::bind(ps, &format!("{name}.v"))?,
            o: Linear::bind(ps, &format!("{name}.o"))?,
            n_heads,
        })
    }

    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        x_q: NodeId,
        x_kv: NodeId,
        causal: bool,
    ) -> NodeId {
        let d = self.q.d_out;
        let hd = d / self.n_heads;
        let scale = T::of(1.0 / (hd as f64).sqrt());
        let q = self.q.forward(g, x_q);
        let k = self.k.forward(g, x_kv);
        let v = self.v.forward(g, x_kv);
        let mut heads = Vec::with_capacity(self.n_heads);
        for h in 0..self.n_heads {
            let (qh, kh, vh) = if self.n_heads == 1 {
                (q, k, v)
            } else {
                (
                    g.slice_cols(q, h * hd, hd),
                    g.slice_cols(k, h * hd, hd),
                    g.slice_cols(v, h * hd, hd),
                )
            };
            let scores = g.matmul_t(qh, kh);
            let scores = g.scale(scores, scale);
            let weights = g.softmax_rows(scores, causal);
            heads.push(g.matmul(weights, vh));
        }
        let ctx = if heads.len() == 1 {
            heads[0]
        } else {
            g.concat_cols(&heads)
        };
        self.o.forward(g, ctx)
    }

    pub fn param_count(d: usize) -> usize {
        4 * Linear::param_count(d, d)
    }
}

#[derive(Debug, Clone)]
pub struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

impl FeedForward {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d: usize,
        ffn: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            up: Linear::new(ps, &format!("{name}.up"), d, ffn, rng),
            down: Linear::new(ps, &format!("{name}.down"), ffn, d, rng),
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str) -> Option<Self> {
        Some(Self {
            up: Linear::bind(ps, &format!("{name}.up"))?,
            down: Linear::bind(ps, &format!("{name}.down"))?,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId) -> NodeId {
        let h = self.up.forward(g, x);
        let h = g.gelu(h);
        self.down.forward(g, h)
    }

    pub fn param_count(d: usize, ffn: usize) -> usize {
        Linear::param_count(d, ffn) + Linear::param_count(ffn, d)
    }
}

/// Self-attention + feed-forward block.
#[derive(Debug, Clone)]
pub struct EncoderBlock {
    pub ln_attn: LayerNorm,
    pub attn: Attention,
    pub ln_ffn: LayerNorm,
    pub ffn: FeedForward,
}

impl EncoderBlock {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d: usize,
        n_heads: usize,
        ffn: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            ln_attn: LayerNorm::new(ps, &format!("{name}.ln_attn"), d),
            attn: Attention::new(ps, &format!("{name}.attn"), d, n_heads, rng),
            ln_ffn: LayerNorm::new(ps, &format!("{name}.ln_ffn"), d),
            ffn: FeedForward::new(ps, &format!("{name}.ffn"), d, ffn, rng),
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str, n_heads: usize) -> Option<Self> {
        Some(Self {
            ln_attn: LayerNorm::bind(ps, &format!("{name}.ln_attn"))?,
            attn: Attention::bind(ps, &format!("{name}.attn"), n_heads)?,
            ln_ffn: LayerNorm::bind(ps, &format!("{name}.ln_ffn"))?,
            ffn: FeedForward::bind(ps, &format!("{name}.ffn"))?,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId) -> NodeId {
        let h = self.ln_attn.forward(g, x);
        let a = self.attn.forward(g, h, h, false);
        let x = g.add(x, a);
        let h = self.ln_ffn.forward(g, x);
        let f = self.ffn.forward(g, h);
        g.add(x, f)
    }

    pub fn param_count(d: usize, ffn: usize) -> usize {
        2 * LayerNorm::param_count(d) + Attention::param_count(d) + FeedForward::param_count(d, ffn)
    }
}

/// Causal self-attention, cross-attention into an encoded sequence, then
/// feed-forward.
#[derive(Debug, Clone)]
pub struct DecoderBlock {
    pub ln_self: LayerNorm,
    pub self_attn: Attention,
    pub ln_cross: LayerNorm,
    pub cross_attn: Attention,
    pub ln_ffn: LayerNorm,
    pub ffn: FeedForward,
    pub causal: bool,
}

impl DecoderBlock {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d: usize,
        n_heads: usize,
        ffn: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            ln_self: LayerNorm::new(ps, &format!("{name}.ln_self"), d),
            self_attn: Attention::new(ps, &format!("{name}.self_attn"), d, n_heads, rng),
            ln_cross: LayerNorm::new(ps, &format!("{name}.ln_cross"), d),
            cross_attn: Attention::new(ps, &format!("{name}.cross_attn"), d, n_heads, rng),
            ln_ffn: LayerNorm::new(ps, &format!("{name}.ln_ffn"), d),
            ffn: FeedForward::new(ps, &format!("{name}.ffn"), d, ffn, rng),
            causal: true,
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str, n_heads: usize) -> Option<Self> {
        Some(Self {
            ln_self: LayerNorm::bind(ps, &format!("{name}.ln_self"))?,
            self_attn: Attention::bind(ps, &format!("{name}.self_attn"), n_heads)?,
            ln_cross: LayerNorm::bind(ps, &format!("{name}.ln_cross"))?,
            cross_attn: Attention::bind(ps, &format!("{name}.cross_attn"), n_heads)?,
            ln_ffn: LayerNorm::bind(ps, &format!("{name}.ln_ffn"))?,
            ffn: FeedForward::bind(ps, &format!("{name}.ffn"))?,
            causal: true,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId, memory: NodeId) -> NodeId {
        let h = self.ln_self.forward(g, x);
        let a = self.self_attn.forward(g, h, h, self.causal);
        let x = g.add(x, a);
        let h = self.ln_cross.forward(g, x);
        let c = self.cross_attn.forward(g, h, memory, false);
        let x = g.add(x, c);
        let h = self.ln_ffn.forward(g, x);
        let f = self.ffn.forward(g, h);
        g.add(x, f)
    }

    pub fn param_count(d: usize, ffn: usize) -> usize {
        3 * LayerNorm::param_count(d)
            + 2 * Attention::param_count(d)
            + FeedForward::param_count(d, ffn)
    }
}

/// Single-direction LSTM layer; gate order is input, forget, cell, output.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub input: Linear,
    pub recurrent: ParamId,
    pub hidden: usize,
}

impl Lstm {
    pub fn new<T: Scalar, R: Rng>(
        ps: &mut ParamSet<T>,
        name: &str,
        d_in: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let input = Linear::new(ps, &format!("{name}.input"), d_in, 4 * hidden, rng);
        // forget gate bias starts at 1
        for j in hidden..2 * hidden {
            ps.get_mut(input.b).data_mut()[j] = T::one();
        }
        let std = (1.0 / hidden as f64).sqrt();
        let recurrent = ps.add_normal(format!("{name}.recurrent"), hidden, 4 * hidden, std, rng);
        Self {
            input,
            recurrent,
            hidden,
        }
    }

    pub fn bind(ps: &ParamSet<impl Scalar>, name: &str) -> Option<Self> {
        let input = Linear::bind(ps, &format!("{name}.input"))?;
        let recurrent = ps.find(&format!("{name}.recurrent"))?;
        Some(Self {
            hidden: input.d_out / 4,
            input,
            recurrent,
        })
    }

    /// Runs over the rows of `xs` (T×d_in) and returns T×hidden outputs in
    /// input order, regardless of direction.
    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, xs: NodeId, reverse: bool) -> NodeId {
        let steps = g.value(xs).rows();
        let hs = self.hidden;
        let projected = self.input.forward(g, xs);
        let wh = g.param(self.recurrent);
        let mut h = g.input(Matrix::zeros(1, hs));
        let mut c = g.input(Matrix::zeros(1, hs));
        let mut outputs = vec![h; steps];
        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };
        for t in order {
            let xt = g.slice_rows(projected, t, 1);
            let rec = g.matmul(h, wh);
            let z = g.add(xt, rec);
            let i = g.slice_cols(z, 0, hs);
            let f = g.slice_cols(z, hs, hs);
            let cand = g.slice_cols(z, 2 * hs, hs);
            let o = g.slice_cols(z, 3 * hs, hs);
            let i = g.sigmoid(i);
            let f = g.sigmoid(f);
            let cand = g.tanh(cand);
            let o = g.sigmoid(o);
            let keep = g.mul(f, c);
            let write = g.mul(i, cand);
            c = g.add(keep, write);
            let ct = g.tanh(c);
            h = g.mul(o, ct);
            outputs[t] = h;
        }
        g.concat_rows(&outputs)
    }

    pub fn param_count(d_in: usize, hidden: usize) -> usize {
        Linear::param_count(d_in, 4 * hidden) + hidden * 4 * hidden
    }
}

/// Fixed sinusoidal position table, `len`×`d`.
pub fn sinusoid_table<T: Scalar>(len: usize, d: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(len, d);
    for pos in 0..len {
        for i in 0..d / 2 {
            let rate = (10000f64).powf(-(2.0 * i as f64) / d as f64);
            let angle = pos as f64 * rate;
            m.set(pos, 2 * i, T::of(angle.sin()));
            m.set(pos, 2 * i + 1, T::of(angle.cos()));
        }
    }
    m
}
