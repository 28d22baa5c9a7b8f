//! Immutable columnar tables.
//!
//! Columns are reference counted, so appending or projecting shares the
//! untouched column payloads with the source frame.

mod bitmap;
mod codec;
mod column;

use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value as Json};

pub use bitmap::Bitmap;
pub use codec::{decode_binary, encode_binary, FORMAT_VERSION, MAGIC};
pub use column::{Column, ColumnData, DType, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("length mismatch: expected {expected} rows, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("categorical column `{0}` has a code outside its dictionary")]
    InvalidCode(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("payload truncated")]
    TruncatedPayload,
    #[error("corrupt payload: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataFrame {
    columns: Vec<Arc<Column>>,
    row_count: usize,
}

impl DataFrame {
    /// A frame with no columns; `row_count` is still tracked.
    pub fn empty(row_count: usize) -> Self {
        Self {
            columns: Vec::new(),
            row_count,
        }
    }

    pub fn new(columns: Vec<Column>) -> Result<Self, FrameError> {
        Self::from_arcs(columns.into_iter().map(Arc::new).collect(), None)
    }

    /// `row_count` is required only when `columns` is empty.
    pub fn from_arcs(columns: Vec<Arc<Column>>, row_count: Option<usize>) -> Result<Self, FrameError> {
        let n = columns.first().map(|c| c.len()).or(row_count).unwrap_or(0);
        let mut seen = HashSet::new();
        for c in &columns {
            if c.len() != n {
                return Err(FrameError::LengthMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
            if !seen.insert(c.name()) {
                return Err(FrameError::DuplicateName(c.name().to_string()));
            }
        }
        Ok(Self {
            columns,
            row_count: n,
        })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Arc<Column>] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Arc<Column>> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn require(&self, name: &str) -> Result<&Arc<Column>, FrameError> {
        self.column(name)
            .ok_or_else(|| FrameError::UnknownColumn(name.to_string()))
    }

    pub fn append_column(&self, col: Column) -> Result<Self, FrameError> {
        self.append_arc(Arc::new(col))
    }

    pub fn append_arc(&self, col: Arc<Column>) -> Result<Self, FrameError> {
        if col.len() != self.row_count {
            return Err(FrameError::LengthMismatch {
                expected: self.row_count,
                found: col.len(),
            });
        }
        if self.column(col.name()).is_some() {
            return Err(FrameError::DuplicateName(col.name().to_string()));
        }
        let mut columns = self.columns.clone();
        columns.push(col);
        Ok(Self {
            columns,
            row_count: self.row_count,
        })
    }

    /// Replaces the column of the same name in place, or appends it.
    pub fn upsert_column(&self, col: Column) -> Result<Self, FrameError> {
        if col.len() != self.row_count {
            return Err(FrameError::LengthMismatch {
                expected: self.row_count,
                found: col.len(),
            });
        }
        let mut columns = self.columns.clone();
        match columns.iter().position(|c| c.name() == col.name()) {
            Some(i) => columns[i] = Arc::new(col),
            None => columns.push(Arc::new(col)),
        }
        Ok(Self {
            columns,
            row_count: self.row_count,
        })
    }

    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, FrameError> {
        let columns = names
            .iter()
            .map(|n| self.require(n.as_ref()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_arcs(columns, Some(self.row_count))
    }

    /// Rows at `indices`, in that order.
    pub fn take(&self, indices: &[usize]) -> Self {
        Self {
            columns: self.columns.iter().map(|c| Arc::new(c.take(indices))).collect(),
            row_count: indices.len(),
        }
    }

    /// Uniform sample of `n` rows without replacement, kept in source order.
    pub fn sample_rows(&self, n: usize, seed: u64) -> Self {
        if n >= self.row_count {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, self.row_count, n).into_vec();
        idx.sort_unstable();
        self.take(&idx)
    }

    /// Column-oriented JSON: `{name: [values...]}` with nulls as `null`.
    pub fn to_json_columns(&self) -> Map<String, Json> {
        self.columns
            .iter()
            .map(|c| (c.name().to_string(), Json::Array(c.to_json())))
            .collect()
    }

    pub fn byte_size(&self) -> usize {
        self.columns.iter().map(|c| c.byte_size()).sum()
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_binary(self)
    }
}
