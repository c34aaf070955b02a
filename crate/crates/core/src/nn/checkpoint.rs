//! Binary model container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "VTALARM\0"
//! version    u32
//! arch tag   u32 length + UTF-8
//! input      u64 T, u64 F
//! hyper      u64 n_filters, u64 filter_size, u64 stride, u64 n_heads, f64 dropout_p
//! tensors    u64 count, then per tensor: u64 rows, u64 cols, rows·cols f64
//! ```
//!
//! Tensors follow [`ModelGraph::state_tensors`] order.

use ndarray::Array2;

use super::model::{build_model, Architecture, ModelGraph, ModelHyperparams};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"VTALARM\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(model: &ModelGraph) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let tag = model.architecture.tag().as_bytes();
    out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
    out.extend_from_slice(tag);
    let h = &model.hyperparams;
    for v in [model.input_shape.0, model.input_shape.1, h.n_filters, h.filter_size, h.stride, h.n_heads] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&h.dropout_p.to_le_bytes());
    let tensors = model.state_tensors();
    out.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.ncols() as u64).to_le_bytes());
        for v in t.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::CorruptCheckpoint(format!("truncated while reading {what} at byte {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::CorruptCheckpoint(format!("{what} does not fit in memory")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Rebuilds the model described by a checkpoint.
pub fn load_checkpoint(bytes: &[u8]) -> Result<ModelGraph> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::CorruptCheckpoint("bad magic bytes".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { found: version, supported: CHECKPOINT_VERSION });
    }
    let tag_len = r.u32("architecture tag length")? as usize;
    let tag = std::str::from_utf8(r.take(tag_len, "architecture tag")?)
        .map_err(|_| Error::CorruptCheckpoint("architecture tag is not UTF-8".into()))?;
    let architecture: Architecture =
        tag.parse().map_err(|_| Error::CorruptCheckpoint(format!("unknown architecture tag {tag:?}")))?;
    let input_shape = (r.usize("input T")?, r.usize("input F")?);
    let hyperparams = ModelHyperparams {
        n_filters: r.usize("n_filters")?,
        filter_size: r.usize("filter_size")?,
        stride: r.usize("stride")?,
        n_heads: r.usize("n_heads")?,
        dropout_p: r.f64("dropout_p")?,
    };
    let count = r.usize("tensor count")?;
    let mut tensors = Vec::new();
    for i in 0..count {
        let rows = r.usize("tensor rows")?;
        let cols = r.usize("tensor cols")?;
        let n = rows.checked_mul(cols).ok_or_else(|| Error::CorruptCheckpoint(format!("tensor {i} size overflows")))?;
        let raw = r.take(n.checked_mul(8).unwrap_or(usize::MAX), "tensor data")?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.push(Array2::from_shape_vec((rows, cols), values).expect("length checked"));
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptCheckpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let mut model = build_model(architecture, input_shape, &hyperparams, 0)
        .map_err(|e| Error::CorruptCheckpoint(format!("stored hyperparameters rejected: {e}")))?;
    model.load_state_tensors(&tensors)?;
    Ok(model)
}

/// As [`load_checkpoint`], failing unless the stored architecture is `expected`.
pub fn load_checkpoint_as(bytes: &[u8], expected: Architecture) -> Result<ModelGraph> {
    let model = load_checkpoint(bytes)?;
    if model.architecture != expected {
        return Err(Error::ArchitectureMismatch { expected: expected.tag().into(), found: model.architecture.tag().into() });
    }
    Ok(model)
}
