//! Single-file parameter container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"STRSCKPT" | u32 version | u64 header_len | header JSON | tensor blob
//! ```
//!
//! The header carries the model kind, scalar dtype, a free-form config
//! object, the read-only flag, the tensor table (name, rows, cols, byte
//! offset into the blob) and the SHA-256 parameter digest. Loading
//! recomputes the digest and rejects the file on mismatch.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::params::ParamSet;
use crate::{Matrix, Scalar};

const MAGIC: &[u8; 8] = b"STRSCKPT";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint dtype is {found}, expected {expected}")]
    Dtype { expected: String, found: String },
    #[error("parameter digest mismatch (header {expected}, computed {actual})")]
    Digest { expected: String, actual: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    dtype: String,
    read_only: bool,
    config: serde_json::Value,
    tensors: Vec<TensorEntry>,
    digest: String,
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub kind: String,
    pub read_only: bool,
    pub config: serde_json::Value,
    pub params: ParamSet<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn digest(&self) -> String {
        self.params.digest()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CheckpointError> {
        let mut blob = Vec::with_capacity(self.params.num_scalars() * T::BYTES);
        let mut tensors = Vec::with_capacity(self.params.len());
        for (_, name, value) in self.params.iter() {
            tensors.push(TensorEntry {
                name: name.to_string(),
                rows: value.rows(),
                cols: value.cols(),
                offset: blob.len(),
            });
            for &v in value.data() {
                v.to_le(&mut blob);
            }
        }
        let header = Header {
            kind: self.kind.clone(),
            dtype: T::DTYPE.to_string(),
            read_only: self.read_only,
            config: self.config.clone(),
            tensors,
            digest: self.params.digest(),
        };
        let header = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(20 + header.len() + blob.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let bad = |m: &str| CheckpointError::Format(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = &bytes[20..];
        if body.len() < header_len {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..header_len])?;
        if header.dtype != T::DTYPE {
            return Err(CheckpointError::Dtype {
                expected: T::DTYPE.to_string(),
                found: header.dtype,
            });
        }
        let blob = &body[header_len..];
        let mut params = ParamSet::new();
        for t in &header.tensors {
            let n = t.rows * t.cols;
            let end = t.offset + n * T::BYTES;
            if end > blob.len() {
                return Err(bad(&format!("tensor {} exceeds blob", t.name)));
            }
            let data = blob[t.offset..end]
                .chunks_exact(T::BYTES)
                .map(T::from_le)
                .collect();
            params.add(t.name.clone(), Matrix::from_vec(t.rows, t.cols, data));
        }
        let actual = params.digest();
        if actual != header.digest {
            return Err(CheckpointError::Digest {
                expected: header.digest,
                actual,
            });
        }
        Ok(Self {
            kind: header.kind,
            read_only: header.read_only,
            config: header.config,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
