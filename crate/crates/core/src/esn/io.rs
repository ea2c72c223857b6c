//! Binary model container.
//!
//! ```text
//! bytes  content
//! 8      magic "SWEESN\0\x01"
//! 8      header length H, u64 little endian
//! H      UTF-8 JSON header: { config, nnz, trained, meta }
//! 8·D·N  W_in, f64 LE, row-major
//! 16·nnz adjacency triplets (row: u32 LE, col: u32 LE, value: f64 LE), row-major
//! 8·N·D  W_out, f64 LE, row-major (only when "trained" is true)
//! ```
//!
//! The RNG seed travels inside `config`. Floats are stored as raw bits, so a
//! write/read round trip is bit-exact, and two writes of equal models produce
//! identical bytes. The reservoir state is not stored; loaded models start
//! from `r = 0`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CsrMatrix, EsnConfig, EsnModel};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SWEESN\0\x01";

/// Provenance carried next to the matrices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Hash of the experiment configuration that produced the model.
    pub config_hash: Option<String>,
    /// Free-form label, e.g. `"TEST_4 alpha=0.01"` for transferred readouts.
    pub tag: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: EsnConfig,
    nnz: usize,
    trained: bool,
    meta: ModelMeta,
}

fn push_matrix_row_major(buf: &mut Vec<u8>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

pub fn to_bytes(model: &EsnModel, meta: &ModelMeta) -> Vec<u8> {
    let header = Header {
        config: *model.config(),
        nnz: model.adjacency().nnz(),
        trained: model.is_trained(),
        meta: meta.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let (d, n) = (model.reservoir_dim(), model.io_dim());
    let mut buf = Vec::with_capacity(16 + json.len() + 16 * d * n + 16 * header.nnz);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    push_matrix_row_major(&mut buf, model.w_in());
    for (r, c, v) in model.adjacency().triplets() {
        buf.extend_from_slice(&(r as u32).to_le_bytes());
        buf.extend_from_slice(&(c as u32).to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(w) = model.w_out() {
        push_matrix_row_major(&mut buf, w);
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("model file", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<(EsnModel, ModelMeta)> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::format("model file", "bad magic"));
    }
    let hlen = cur.u64()? as usize;
    let header: Header = serde_json::from_slice(cur.take(hlen)?)
        .map_err(|e| Error::format("model file", format!("header: {e}")))?;
    let cfg = header.config;
    cfg.validate()?;
    let (d, n) = (cfg.reservoir_dim, cfg.io_dim);
    let w_in = cur.matrix(d, n)?;
    let mut triplets = Vec::with_capacity(header.nnz);
    for _ in 0..header.nnz {
        let r = cur.u32()? as usize;
        let c = cur.u32()? as usize;
        let v = cur.f64()?;
        if r >= d || c >= d {
            return Err(Error::format("model file", format!("triplet ({r}, {c}) out of range")));
        }
        triplets.push((r, c, v));
    }
    let a = CsrMatrix::from_triplets(d, &triplets);
    let w_out = if header.trained {
        Some(cur.matrix(n, d)?)
    } else {
        None
    };
    if cur.pos != bytes.len() {
        return Err(Error::format("model file", "trailing bytes"));
    }
    Ok((EsnModel::from_parts(cfg, w_in, a, w_out), header.meta))
}

pub fn write_model(path: &Path, model: &EsnModel, meta: &ModelMeta) -> Result<()> {
    std::fs::write(path, to_bytes(model, meta)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<(EsnModel, ModelMeta)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
