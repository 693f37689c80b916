use crate::params::{Grads, ParamSet};
use crate::{Matrix, Scalar};

/// Adam with optional global-norm gradient clipping.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub clip_norm: Option<T>,
    step: i32,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParamSet<T>, lr: f64) -> Self {
        let zeros = |p: &ParamSet<T>| {
            p.iter()
                .map(|(_, _, m)| Matrix::zeros(m.rows(), m.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            lr: T::of(lr),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            clip_norm: Some(T::of(1.0)),
            step: 0,
            m: zeros(params),
            v: zeros(params),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &Grads<T>) {
        self.step += 1;
        let mut scale = T::one();
        if let Some(max) = self.clip_norm {
            let norm = grads.norm();
            if norm > max {
                scale = max / norm;
            }
        }
        let bc1 = T::one() - self.beta1.powi(self.step);
        let bc2 = T::one() - self.beta2.powi(self.step);
        let one = T::one();
        for (i, value) in params.values_mut().enumerate() {
            let Some(g) = &grads.slots()[i] else {
                continue;
            };
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((p, &gv), mv), vv) in value
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                let gv = gv * scale;
                *mv = self.beta1 * *mv + (one - self.beta1) * gv;
                *vv = self.beta2 * *vv + (one - self.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}
