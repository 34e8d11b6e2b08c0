//! GEOEMB1: little-endian container for one layer's representation matrix.
//!
//! ```text
//! magic        8 bytes  "GEOEMB1\0"
//! rows         u32
//! cols         u32
//! layer        u32
//! dtype        u32      0 = f32
//! digest       u64      locations digest the rows are aligned with
//! id_len       u16
//! model_id     id_len bytes of UTF-8
//! data         rows*cols f32, row-major
//! ```

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"GEOEMB1\0";
pub const DTYPE_F32: u32 = 0;

const FIXED_HEADER: usize = 8 + 4 * 4 + 8 + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub model_id: String,
    pub layer: u32,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
    pub locations_digest: u64,
}

impl EmbeddingMatrix {
    pub fn new(
        model_id: impl Into<String>,
        layer: u32,
        rows: usize,
        cols: usize,
        data: Vec<f32>,
        locations_digest: u64,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "embedding data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        let m = Self {
            model_id: model_id.into(),
            layer,
            rows,
            cols,
            data,
            locations_digest,
        };
        m.check_finite()?;
        Ok(m)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) if self.cols > 0 => Err(Error::NonFinite {
                row: i / self.cols,
                col: i % self.cols,
            }),
            _ => Ok(()),
        }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Selected rows promoted to f64.
    pub fn rows_f64(&self, rows: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), self.cols));
        for (mut dst, &i) in out.rows_mut().into_iter().zip(rows) {
            for (d, &s) in dst.iter_mut().zip(self.row(i)) {
                *d = f64::from(s);
            }
        }
        out
    }

    pub fn all_rows_f64(&self) -> Array2<f64> {
        let all: Vec<usize> = (0..self.rows).collect();
        self.rows_f64(&all)
    }

    /// Errors unless the matrix is row-aligned with a dataset of `n` rows
    /// carrying `digest`.
    pub fn check_alignment(&self, n: usize, digest: u64) -> Result<()> {
        if self.rows != n {
            return Err(Error::RowMismatch {
                what: format!("embeddings {}@{}", self.model_id, self.layer),
                expected: n,
                found: self.rows,
            });
        }
        if self.locations_digest != digest {
            return Err(Error::DigestMismatch {
                expected: digest,
                found: self.locations_digest,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let id = self.model_id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::invalid("model_id longer than 65535 bytes"))?;
        let rows = u32::try_from(self.rows).map_err(|_| Error::invalid("too many rows"))?;
        let cols = u32::try_from(self.cols).map_err(|_| Error::invalid("too many columns"))?;
        let mut out = Vec::with_capacity(FIXED_HEADER + id.len() + 4 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&rows.to_le_bytes());
        out.extend_from_slice(&cols.to_le_bytes());
        out.extend_from_slice(&self.layer.to_le_bytes());
        out.extend_from_slice(&DTYPE_F32.to_le_bytes());
        out.extend_from_slice(&self.locations_digest.to_le_bytes());
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < FIXED_HEADER {
            return Err(Error::TruncatedPayload {
                expected: FIXED_HEADER,
                found: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let rows = u32_at(8) as usize;
        let cols = u32_at(12) as usize;
        let layer = u32_at(16);
        let dtype = u32_at(20);
        if dtype != DTYPE_F32 {
            return Err(Error::UnsupportedDtype(dtype));
        }
        let digest = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let id_len = u16::from_le_bytes(bytes[32..34].try_into().unwrap()) as usize;
        let data_start = FIXED_HEADER + id_len;
        let expected = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(4))
            .and_then(|c| c.checked_add(data_start))
            .ok_or_else(|| Error::invalid("header dimensions overflow"))?;
        if bytes.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::invalid(format!(
                "{} trailing bytes after payload",
                bytes.len() - expected
            )));
        }
        let model_id = std::str::from_utf8(&bytes[FIXED_HEADER..data_start])
            .map_err(|_| Error::invalid("model_id is not UTF-8"))?
            .to_string();
        let data = bytes[data_start..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(model_id, layer, rows, cols, data, digest)
    }
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes)
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = matrix.to_bytes()?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// `[X | X]`: doubles the dimensionality without adding information.
pub fn concat_duplicate_features(m: &EmbeddingMatrix) -> EmbeddingMatrix {
    let mut data = Vec::with_capacity(m.data.len() * 2);
    for i in 0..m.rows {
        data.extend_from_slice(m.row(i));
        data.extend_from_slice(m.row(i));
    }
    EmbeddingMatrix {
        model_id: format!("{}+dup", m.model_id),
        layer: m.layer,
        rows: m.rows,
        cols: m.cols * 2,
        data,
        locations_digest: m.locations_digest,
    }
}
