//! Minimal dense-matrix autodiff used by the backbone, the stress head and
//! the recurrent baseline. Everything is generic over [`Scalar`] so the same
//! model code runs in `f32` for training and `f64` for gradient checks.

pub mod checkpoint;
pub mod graph;
pub mod layers;
pub mod matrix;
pub mod optim;
pub mod params;
mod scalar;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use graph::{Graph, NodeId};
pub use matrix::Matrix;
pub use optim::Adam;
pub use params::{Grads, ParamId, ParamSet};
pub use scalar::Scalar;

/// Seeded RNG used throughout the workspace.
pub type Rng = rand_chacha::ChaCha8Rng;
