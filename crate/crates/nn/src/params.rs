use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::{Matrix, Scalar};

/// Handle to one named tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Ordered collection of named trainable tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet<T> {
    names: Vec<String>,
    values: Vec<Matrix<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix<T>) -> ParamId {
        let name = name.into();
        assert!(
            !self.names.contains(&name),
            "duplicate parameter name {name}"
        );
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Normal(0, std) initialised rows×cols tensor.
    pub fn add_normal<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        std: f64,
        rng: &mut R,
    ) -> ParamId {
        let dist = Normal::new(0.0, std).expect("valid std");
        let data = (0..rows * cols).map(|_| T::of(dist.sample(rng))).collect();
        self.add(name, Matrix::from_vec(rows, cols, data))
    }

    pub fn add_filled(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        value: f64,
    ) -> ParamId {
        self.add(name, Matrix::filled(rows, cols, T::of(value)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Matrix<T>)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut Matrix<T>> {
        self.values.iter_mut()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    /// SHA-256 over names, shapes and little-endian values, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        let mut buf = Vec::new();
        for (name, value) in self.names.iter().zip(&self.values) {
            hasher.update((name.len() as u64).to_le_bytes());
            hasher.update(name.as_bytes());
            hasher.update((value.rows() as u64).to_le_bytes());
            hasher.update((value.cols() as u64).to_le_bytes());
            buf.clear();
            for &v in value.data() {
                v.to_le(&mut buf);
            }
            hasher.update(&buf);
        }
        hex(&hasher.finalize())
    }

    /// Converts every tensor to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            names: self.names.clone(),
            values: self
                .values
                .iter()
                .map(|m| {
                    Matrix::from_vec(
                        m.rows(),
                        m.cols(),
                        m.data().iter().map(|v| U::of(v.f64())).collect(),
                    )
                })
                .collect(),
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Gradient buffers aligned with a [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Grads<T> {
    slots: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> Grads<T> {
    pub fn new(n_params: usize) -> Self {
        Self {
            slots: vec![None; n_params],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Matrix<T>> {
        self.slots.get(id.0).and_then(Option::as_ref)
    }

    pub(crate) fn accumulate_one(&mut self, index: usize, grad: &Matrix<T>) {
        match &mut self.slots[index] {
            Some(existing) => existing.add_assign(grad),
            slot @ None => *slot = Some(grad.clone()),
        }
    }

    pub fn accumulate(&mut self, other: &Grads<T>) {
        assert_eq!(self.slots.len(), other.slots.len());
        for (i, g) in other.slots.iter().enumerate() {
            if let Some(g) = g {
                self.accumulate_one(i, g);
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for g in self.slots.iter_mut().flatten() {
            g.scale_assign(s);
        }
    }

    /// Global L2 norm over all buffers.
    pub fn norm(&self) -> T {
        self.slots
            .iter()
            .flatten()
            .flat_map(|g| g.data().iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    pub fn slots(&self) -> &[Option<Matrix<T>>] {
        &self.slots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digest_changes_with_any_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = ParamSet::<f32>::new();
        let id = p.add_normal("w", 3, 3, 0.1, &mut rng);
        let before = p.digest();
        assert_eq!(before, p.clone().digest());
        p.get_mut(id).data_mut()[4] += 1e-6;
        assert_ne!(before, p.digest());
    }

    #[test]
    fn cast_round_trips_f32_through_f64() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ParamSet::<f32>::new();
        p.add_normal("a", 2, 5, 1.0, &mut rng);
        let back: ParamSet<f32> = p.cast::<f64>().cast();
        assert_eq!(back.digest(), p.digest());
    }
}
