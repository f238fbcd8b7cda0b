//! EMB1 binary embedding files.
//!
//! Layout: `"EMB1"`, `n_rows: u32 LE`, `dim: u32 LE`, then `n_rows × dim`
//! little-endian `f32` values in row-major order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMB1_MAGIC: [u8; 4] = *b"EMB1";
pub const FIELD_DIM: usize = 768;
/// Query, question, five answer slots.
pub const N_FIELDS: usize = 7;
pub const EMBEDDING_DIM: usize = FIELD_DIM * N_FIELDS;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(n_rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != n_rows * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {n_rows}×{dim} embeddings",
                data.len()
            )));
        }
        Ok(Self { n_rows, dim, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Row `query_row`'s query slot joined with row `cp_row`'s question and
    /// answer slots, for CPs shown under a different query.
    pub fn composite_row(&self, query_row: usize, cp_row: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim);
        out.extend_from_slice(&self.row(query_row)[..FIELD_DIM]);
        out.extend_from_slice(&self.row(cp_row)[FIELD_DIM..]);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        out.extend_from_slice(&EMB1_MAGIC);
        out.extend_from_slice(&(self.n_rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

/// Decodes EMB1 bytes with any width (`expected_dim = None`) or a fixed one.
pub fn read_embeddings(bytes: &[u8], expected_dim: Option<usize>) -> Result<EmbeddingMatrix> {
    if bytes.len() < 12 {
        return Err(Error::TruncatedPayload {
            expected: 12,
            found: bytes.len(),
        });
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[..4]);
    if magic != EMB1_MAGIC {
        return Err(Error::BadMagic {
            expected: EMB1_MAGIC,
            found: magic,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (n_rows, dim) = (u32_at(4), u32_at(8));
    if let Some(expected) = expected_dim {
        if dim != expected {
            return Err(Error::DimMismatch { expected, found: dim });
        }
    }
    let expected = 12 + n_rows * dim * 4;
    if bytes.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(n_rows, dim, data)
}

/// Loads an EMB1 file whose width must be 5376.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(&bytes, Some(EMBEDDING_DIM))
}

pub fn write_embeddings(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
    fs::write(path, m.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Sidecar JSON written next to each EMB1 file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub source_file: PathBuf,
    pub sha256: String,
    pub dim: usize,
    pub n_rows: usize,
}

impl EmbeddingManifest {
    pub fn sidecar_path(emb_path: &Path) -> PathBuf {
        let mut p = emb_path.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    }

    pub fn check(&self, m: &EmbeddingMatrix) -> Result<()> {
        if self.dim != m.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: m.dim(),
            });
        }
        if self.n_rows != m.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "manifest lists {} rows, file has {}",
                self.n_rows,
                m.n_rows()
            )));
        }
        Ok(())
    }
}
