//! Binary model checkpoints.
//!
//! Layout, all little-endian: magic `BLAB`, format version `u32`, layer count
//! `u32`, then per layer `rows u32`, `cols u32`, `rows * cols` row-major `f64`
//! weights and `rows` `f64` biases.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{DenseLayer, MlpNetwork};
use crate::error::{Error, Result};
use crate::fsutil;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BLAB";
pub const CHECKPOINT_VERSION: u32 = 1;

impl MlpNetwork {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers().len() as u32).to_le_bytes());
        for layer in self.layers() {
            let (rows, cols) = layer.weights.dim();
            out.extend_from_slice(&(rows as u32).to_le_bytes());
            out.extend_from_slice(&(cols as u32).to_le_bytes());
            for v in layer.weights.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in layer.biases.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let weights = r.f64s(rows * cols)?;
            let biases = r.f64s(rows)?;
            layers.push(DenseLayer {
                weights: Array2::from_shape_vec((rows, cols), weights)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?,
                biases: Array1::from(biases),
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        MlpNetwork::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::Checkpoint("layer size overflow".into())
        })?)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

pub fn save_checkpoint(net: &MlpNetwork, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &net.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpNetwork> {
    MlpNetwork::from_bytes(&fsutil::read(path)?)
}
