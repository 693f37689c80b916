//! Tape-based reverse-mode differentiation over 2-D matrices.
//!
//! A [`Graph`] borrows a [`ParamSet`] and records every operation applied
//! to its nodes. Calling [`Graph::backward`] on a 1×1 loss node returns
//! gradients for all parameters that took part in the computation.
//! Nodes that depend only on inputs are never differentiated.

use crate::matrix::{gemm_into, matmul};
use crate::params::{Grads, ParamId, ParamSet};
use crate::{Matrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

const LN_EPS: f64 = 1e-5;

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(usize),
    MatMul { a: NodeId, b: NodeId, ta: bool, tb: bool },
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    Gelu(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Softmax(NodeId),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        xhat: Matrix<T>,
        inv_std: Vec<T>,
    },
    SliceCols { a: NodeId, start: usize },
    ConcatCols(Vec<NodeId>),
    SliceRows { a: NodeId, start: usize },
    ConcatRows(Vec<NodeId>),
    Gather { table: NodeId, ids: Vec<usize> },
    CrossEntropy {
        logits: NodeId,
        targets: Vec<usize>,
        weights: Vec<T>,
        probs: Matrix<T>,
    },
    Sum(NodeId),
}

#[derive(Debug)]
struct Node<T> {
    op: Op<T>,
    value: Option<Matrix<T>>,
    needs_grad: bool,
}

pub struct Graph<'p, T: Scalar> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
}

fn gelu_parts<T: Scalar>(x: T) -> (T, T) {
    // tanh approximation; returns (value, derivative)
    let c = T::of((2.0 / std::f64::consts::PI).sqrt());
    let k = T::of(0.044715);
    let half = T::of(0.5);
    let three = T::of(3.0);
    let u = c * (x + k * x * x * x);
    let t = u.tanh();
    let value = half * x * (T::one() + t);
    let du = c * (T::one() + three * k * x * x);
    let deriv = half * (T::one() + t) + half * x * (T::one() - t * t) * du;
    (value, deriv)
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix<T> {
        match &self.nodes[id.0].op {
            Op::Param(i) => self.params.get(ParamId(*i)),
            _ => self.nodes[id.0].value.as_ref().expect("node has a value"),
        }
    }

    fn shape(&self, id: NodeId) -> (usize, usize) {
        self.value(id).shape()
    }

    fn push(&mut self, op: Op<T>, value: Matrix<T>, parents: &[NodeId]) -> NodeId {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            op,
            value: Some(value),
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant input; never receives a gradient.
    pub fn input(&mut self, value: Matrix<T>) -> NodeId {
        self.nodes.push(Node {
            op: Op::Input,
            value: Some(value),
            needs_grad: false,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        self.nodes.push(Node {
            op: Op::Param(id.0),
            value: None,
            needs_grad: true,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn matmul_impl(&mut self, a: NodeId, b: NodeId, ta: bool, tb: bool) -> NodeId {
        let out = matmul(self.value(a), ta, self.value(b), tb);
        self.push(Op::MatMul { a, b, ta, tb }, out, &[a, b])
    }

    /// `a·b`
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.matmul_impl(a, b, false, false)
    }

    /// `a·bᵀ`
    pub fn matmul_t(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.matmul_impl(a, b, false, true)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(Op::Add(a, b), out, &[a, b])
    }

    /// Adds the 1×n `row` to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(row), (1, c), "add_row expects a 1×{c} row");
        let mut out = self.value(a).clone();
        let bias = self.value(row).data().to_vec();
        for i in 0..r {
            for (o, &b) in out.row_mut(i).iter_mut().zip(&bias) {
                *o += b;
            }
        }
        self.push(Op::AddRow(a, row), out, &[a, row])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.shape(a), self.shape(b), "shape mismatch in mul");
        let vb = self.value(b).data().to_vec();
        let mut out = self.value(a).clone();
        for (o, v) in out.data_mut().iter_mut().zip(vb) {
            *o *= v;
        }
        self.push(Op::Mul(a, b), out, &[a, b])
    }

    pub fn scale(&mut self, a: NodeId, s: T) -> NodeId {
        let out = self.value(a).map(|x| x * s);
        self.push(Op::Scale(a, s), out, &[a])
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(|x| gelu_parts(x).0);
        self.push(Op::Gelu(a), out, &[a])
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(|x| x.max(T::zero()));
        self.push(Op::Relu(a), out, &[a])
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), out, &[a])
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(T::tanh);
        self.push(Op::Tanh(a), out, &[a])
    }

    /// Row-wise softmax. With `causal`, entry (i, j) for j > i is masked out.
    pub fn softmax_rows(&mut self, a: NodeId, causal: bool) -> NodeId {
        let mut out = self.value(a).clone();
        let cols = out.cols();
        for i in 0..out.rows() {
            let limit = if causal { (i + 1).min(cols) } else { cols };
            let row = out.row_mut(i);
            let max = row[..limit]
                .iter()
                .copied()
                .fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for v in &mut row[..limit] {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in &mut row[..limit] {
                *v /= total;
            }
            for v in &mut row[limit..] {
                *v = T::zero();
            }
        }
        self.push(Op::Softmax(a), out, &[a])
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        let n = T::of(cols as f64);
        let eps = T::of(LN_EPS);
        let mut xhat = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for i in 0..rows {
            let row = xv.row(i);
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let inv = T::one() / (var + eps).sqrt();
            for (h, &v) in xhat.row_mut(i).iter_mut().zip(row) {
                *h = (v - mean) * inv;
            }
            inv_std.push(inv);
        }
        let g = self.value(gamma).data().to_vec();
        let b = self.value(beta).data().to_vec();
        assert_eq!(g.len(), cols, "layer norm gain width");
        let mut out = xhat.clone();
        for i in 0..rows {
            for ((o, &gj), &bj) in out.row_mut(i).iter_mut().zip(&g).zip(&b) {
                *o = *o * gj + bj;
            }
        }
        self.push(
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            out,
            &[x, gamma, beta],
        )
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(a);
        assert!(start + len <= v.cols(), "column slice out of range");
        let mut out = Matrix::zeros(v.rows(), len);
        for i in 0..v.rows() {
            out.row_mut(i).copy_from_slice(&v.row(i)[start..start + len]);
        }
        self.push(Op::SliceCols { a, start }, out, &[a])
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let rows = self.shape(parts[0]).0;
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows(), rows, "row mismatch in concat_cols");
            for i in 0..rows {
                out.row_mut(i)[offset..offset + v.cols()].copy_from_slice(v.row(i));
            }
            offset += v.cols();
        }
        self.push(Op::ConcatCols(parts.to_vec()), out, parts)
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let out = self.value(a).slice_rows(start, len);
        self.push(Op::SliceRows { a, start }, out, &[a])
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        let cols = self.shape(parts[0]).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols(), cols, "column mismatch in concat_rows");
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        self.push(
            Op::ConcatRows(parts.to_vec()),
            Matrix::from_vec(rows, cols, data),
            parts,
        )
    }

    /// Selects rows of `table` (embedding lookup).
    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let t = self.value(table);
        let mut out = Matrix::zeros(ids.len(), t.cols());
        for (i, &id) in ids.iter().enumerate() {
            out.row_mut(i).copy_from_slice(t.row(id));
        }
        self.push(
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
            out,
            &[table],
        )
    }

    /// Weighted sum of per-row negative log-likelihoods, as a 1×1 node.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[usize], weights: &[T]) -> NodeId {
        let lv = self.value(logits);
        assert_eq!(lv.rows(), targets.len(), "one target per row");
        assert_eq!(lv.rows(), weights.len(), "one weight per row");
        let mut probs = lv.clone();
        let mut loss = T::zero();
        for i in 0..probs.rows() {
            let row = probs.row_mut(i);
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
            let p = row[targets[i]].max(T::min_positive_value());
            loss -= weights[i] * p.ln();
        }
        self.push(
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
                probs,
            },
            Matrix::scalar(loss),
            &[logits],
        )
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).sum();
        self.push(Op::Sum(a), Matrix::scalar(s), &[a])
    }

    /// Gradients of the 1×1 node `loss` with respect to every parameter used.
    pub fn backward(&self, loss: NodeId) -> Grads<T> {
        assert_eq!(self.shape(loss), (1, 1), "loss must be a scalar node");
        let mut grads: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut out = Grads::new(self.params.len());
        grads[loss.0] = Some(Matrix::scalar(T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads, &mut out);
        }
        out
    }

    fn slot<'g>(
        &self,
        grads: &'g mut [Option<Matrix<T>>],
        id: NodeId,
    ) -> Option<&'g mut Matrix<T>> {
        if !self.nodes[id.0].needs_grad {
            return None;
        }
        let (r, c) = self.shape(id);
        Some(grads[id.0].get_or_insert_with(|| Matrix::zeros(r, c)))
    }

    fn propagate(
        &self,
        idx: usize,
        g: &Matrix<T>,
        grads: &mut [Option<Matrix<T>>],
        out: &mut Grads<T>,
    ) {
        let one = T::one();
        match &self.nodes[idx].op {
            Op::Input => {}
            Op::Param(i) => out.accumulate_one(*i, g),
            Op::MatMul { a, b, ta, tb } => {
                let (a, b, ta, tb) = (*a, *b, *ta, *tb);
                let av = self.value(a);
                let bv = self.value(b);
                if let Some(ga) = self.slot(grads, a) {
                    if ta {
                        gemm_into(bv, tb, g, true, ga, one, one);
                    } else {
                        gemm_into(g, false, bv, !tb, ga, one, one);
                    }
                }
                if let Some(gb) = self.slot(grads, b) {
                    if tb {
                        gemm_into(g, true, av, ta, gb, one, one);
                    } else {
                        gemm_into(av, !ta, g, false, gb, one, one);
                    }
                }
            }
            Op::Add(a, b) => {
                for p in [*a, *b] {
                    if let Some(gp) = self.slot(grads, p) {
                        gp.add_assign(g);
                    }
                }
            }
            Op::AddRow(a, row) => {
                if let Some(ga) = self.slot(grads, *a) {
                    ga.add_assign(g);
                }
                if let Some(gr) = self.slot(grads, *row) {
                    let d = gr.data_mut();
                    for i in 0..g.rows() {
                        for (acc, &v) in d.iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                let other = [(a, b), (b, a)];
                for (target, partner) in other {
                    let pv = self.value(partner).data().to_vec();
                    if let Some(gt) = self.slot(grads, target) {
                        for ((acc, &gv), p) in gt.data_mut().iter_mut().zip(g.data()).zip(pv) {
                            *acc += gv * p;
                        }
                    }
                }
            }
            Op::Scale(a, s) => {
                let s = *s;
                if let Some(ga) = self.slot(grads, *a) {
                    for (acc, &gv) in ga.data_mut().iter_mut().zip(g.data()) {
                        *acc += gv * s;
                    }
                }
            }
            Op::Gelu(a) => {
                let xs = self.value(*a).data().to_vec();
                if let Some(ga) = self.slot(grads, *a) {
                    for ((acc, &gv), x) in ga.data_mut().iter_mut().zip(g.data()).zip(xs) {
                        *acc += gv * gelu_parts(x).1;
                    }
                }
            }
            Op::Relu(a) => {
                let xs = self.value(*a).data().to_vec();
                if let Some(ga) = self.slot(grads, *a) {
                    for ((acc, &gv), x) in ga.data_mut().iter_mut().zip(g.data()).zip(xs) {
                        if x > T::zero() {
                            *acc += gv;
                        }
                    }
                }
            }
            Op::Sigmoid(a) | Op::Tanh(a) => {
                let is_sigmoid = matches!(self.nodes[idx].op, Op::Sigmoid(_));
                let ys = self.nodes[idx].value.as_ref().expect("value").data().to_vec();
                if let Some(ga) = self.slot(grads, *a) {
                    for ((acc, &gv), y) in ga.data_mut().iter_mut().zip(g.data()).zip(ys) {
                        let d = if is_sigmoid { y * (one - y) } else { one - y * y };
                        *acc += gv * d;
                    }
                }
            }
            Op::Softmax(a) => {
                let y = self.nodes[idx].value.as_ref().expect("value");
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..y.rows() {
                        let yr = y.row(i);
                        let gr = g.row(i);
                        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for ((acc, &yv), &gv) in ga.row_mut(i).iter_mut().zip(yr).zip(gr) {
                            *acc += yv * (gv - dot);
                        }
                    }
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (rows, cols) = xhat.shape();
                let gam = self.value(*gamma).data().to_vec();
                if let Some(gg) = self.slot(grads, *gamma) {
                    let d = gg.data_mut();
                    for i in 0..rows {
                        for j in 0..cols {
                            d[j] += g.get(i, j) * xhat.get(i, j);
                        }
                    }
                }
                if let Some(gb) = self.slot(grads, *beta) {
                    let d = gb.data_mut();
                    for i in 0..rows {
                        for (acc, &v) in d.iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                }
                if let Some(gx) = self.slot(grads, *x) {
                    let n = T::of(cols as f64);
                    let mut dxhat = vec![T::zero(); cols];
                    for i in 0..rows {
                        let mut s1 = T::zero();
                        let mut s2 = T::zero();
                        for j in 0..cols {
                            dxhat[j] = g.get(i, j) * gam[j];
                            s1 += dxhat[j];
                            s2 += dxhat[j] * xhat.get(i, j);
                        }
                        let k = inv_std[i] / n;
                        for (j, acc) in gx.row_mut(i).iter_mut().enumerate() {
                            *acc += k * (n * dxhat[j] - s1 - xhat.get(i, j) * s2);
                        }
                    }
                }
            }
            Op::SliceCols { a, start } => {
                let start = *start;
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.rows() {
                        let dst = &mut ga.row_mut(i)[start..start + g.cols()];
                        for (acc, &v) in dst.iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    if let Some(gp) = self.slot(grads, p) {
                        for i in 0..g.rows() {
                            for (acc, &v) in gp.row_mut(i).iter_mut().zip(&g.row(i)[offset..offset + w])
                            {
                                *acc += v;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::SliceRows { a, start } => {
                let start = *start;
                if let Some(ga) = self.slot(grads, *a) {
                    for i in 0..g.rows() {
                        for (acc, &v) in ga.row_mut(start + i).iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let h = self.shape(p).0;
                    if let Some(gp) = self.slot(grads, p) {
                        for i in 0..h {
                            for (acc, &v) in gp.row_mut(i).iter_mut().zip(g.row(offset + i)) {
                                *acc += v;
                            }
                        }
                    }
                    offset += h;
                }
            }
            Op::Gather { table, ids } => {
                if let Some(gt) = self.slot(grads, *table) {
                    for (i, &id) in ids.iter().enumerate() {
                        for (acc, &v) in gt.row_mut(id).iter_mut().zip(g.row(i)) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                targets,
                weights,
                probs,
            } => {
                let upstream = g.get(0, 0);
                if let Some(gl) = self.slot(grads, *logits) {
                    for i in 0..probs.rows() {
                        let w = weights[i] * upstream;
                        for (j, (acc, &p)) in gl.row_mut(i).iter_mut().zip(probs.row(i)).enumerate() {
                            let onehot = if j == targets[i] { one } else { T::zero() };
                            *acc += w * (p - onehot);
                        }
                    }
                }
            }
            Op::Sum(a) => {
                let upstream = g.get(0, 0);
                if let Some(ga) = self.slot(grads, *a) {
                    for acc in ga.data_mut() {
                        *acc += upstream;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central-difference check of every parameter entry for a graph builder.
    fn check<F>(params: &mut ParamSet<f64>, build: F)
    where
        F: Fn(&mut Graph<'_, f64>) -> NodeId,
    {
        let analytic = {
            let mut g = Graph::new(params);
            let loss = build(&mut g);
            g.backward(loss)
        };
        let eps = 1e-6;
        let ids: Vec<ParamId> = params.iter().map(|(id, _, _)| id).collect();
        for id in ids {
            for k in 0..params.get(id).len() {
                let orig = params.get(id).data()[k];
                params.get_mut(id).data_mut()[k] = orig + eps;
                let plus = {
                    let mut g = Graph::new(params);
                    let l = build(&mut g);
                    g.value(l).get(0, 0)
                };
                params.get_mut(id).data_mut()[k] = orig - eps;
                let minus = {
                    let mut g = Graph::new(params);
                    let l = build(&mut g);
                    g.value(l).get(0, 0)
                };
                params.get_mut(id).data_mut()[k] = orig;
                let numeric = (plus - minus) / (2.0 * eps);
                let a = analytic.get(id).map_or(0.0, |m| m.data()[k]);
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (a - numeric).abs() / denom < 1e-5,
                    "{}[{k}]: analytic {a} numeric {numeric}",
                    params.name(id)
                );
            }
        }
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = ParamSet::<f64>::new();
        let x = p.add_normal("x", 3, 4, 1.0, &mut rng);
        let w = p.add_normal("w", 4, 4, 0.5, &mut rng);
        let b = p.add_normal("b", 1, 4, 0.5, &mut rng);
        let gamma = p.add_normal("gamma", 1, 4, 1.0, &mut rng);
        let beta = p.add_normal("beta", 1, 4, 1.0, &mut rng);
        let emb = p.add_normal("emb", 5, 4, 1.0, &mut rng);
        let out = p.add_normal("out", 3, 4, 1.0, &mut rng);
        check(&mut p, |g| {
            let xv = g.param(x);
            let wv = g.param(w);
            let bv = g.param(b);
            let h = g.matmul(xv, wv);
            let h = g.add_row(h, bv);
            let gv = g.param(gamma);
            let be = g.param(beta);
            let h = g.layer_norm(h, gv, be);
            let act = g.gelu(h);
            let sig = g.sigmoid(act);
            let th = g.tanh(h);
            let m = g.mul(sig, th);
            let e = g.param(emb);
            let rows = g.gather(e, &[4, 0, 4]);
            let m = g.add(m, rows);
            let att = g.matmul_t(m, xv);
            let att = g.scale(att, 0.5);
            let sm = g.softmax_rows(att, true);
            let ctx = g.matmul(sm, xv);
            let left = g.slice_cols(ctx, 0, 2);
            let right = g.slice_cols(ctx, 2, 2);
            let joined = g.concat_cols(&[right, left]);
            let top = g.slice_rows(joined, 0, 1);
            let rest = g.slice_rows(joined, 1, 2);
            let stacked = g.concat_rows(&[rest, top]);
            let relu = g.relu(stacked);
            let ov = g.param(out);
            let mixed = g.matmul(relu, wv);
            let mixed = g.add(mixed, ov);
            let ce = g.cross_entropy(mixed, &[1, 3, 0], &[0.5, 1.0, 2.0]);
            let s = g.sum(relu);
            let s = g.scale(s, 0.1);
            g.add(ce, s)
        });
    }

    #[test]
    fn inputs_receive_no_gradient_and_skip_work() {
        let mut p = ParamSet::<f32>::new();
        let w = p.add_filled("w", 2, 2, 1.0);
        let mut g = Graph::new(&p);
        let x = g.input(Matrix::from_vec(1, 2, vec![1.0, 2.0]));
        let wv = g.param(w);
        let y = g.matmul(x, wv);
        let l = g.sum(y);
        let grads = g.backward(l);
        let gw = grads.get(w).unwrap();
        assert_eq!(gw.data(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn causal_softmax_zeroes_future_entries() {
        let p = ParamSet::<f64>::new();
        let mut g = Graph::new(&p);
        let a = g.input(Matrix::from_vec(2, 2, vec![1.0, 5.0, 1.0, 1.0]));
        let s = g.softmax_rows(a, true);
        assert_eq!(g.value(s).data(), &[1.0, 0.0, 0.5, 0.5]);
    }
}
