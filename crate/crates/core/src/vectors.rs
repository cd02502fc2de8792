//! The in-memory point container.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Position of a point inside its owning [`VectorSet`].
///
/// Row order defines identity: point `i` is row `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointId(pub usize);

impl PointId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VectorError {
    #[error("vector set must contain at least one point")]
    Empty,
    #[error("vector dimension must be at least 1")]
    ZeroDim,
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("payload length {len} is not count {count} x dim {dim}")]
    ShapeMismatch { count: usize, dim: usize, len: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} ids, got {found}")]
    IdCount { expected: usize, found: usize },
    #[error("duplicate id {0}")]
    DuplicateId(u64),
}

/// An ordered set of `count` points in `dim` dimensions, stored row-major.
///
/// Immutable after construction. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet<T> {
    dim: usize,
    data: Vec<T>,
    ids: Vec<u64>,
}

impl<T: Scalar> VectorSet<T> {
    /// Builds a set from a flat row-major buffer.
    pub fn from_flat(count: usize, dim: usize, data: Vec<T>) -> Result<Self, VectorError> {
        if count == 0 {
            return Err(VectorError::Empty);
        }
        if dim == 0 {
            return Err(VectorError::ZeroDim);
        }
        if data.len() != count * dim {
            return Err(VectorError::ShapeMismatch {
                count,
                dim,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            dim,
            data,
            ids: (0..count as u64).collect(),
        })
    }

    /// Builds a set from explicit rows, which must all share one width.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, VectorError> {
        let first = rows.first().ok_or(VectorError::Empty)?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(VectorError::ZeroDim);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(VectorError::RaggedRow {
                    row: i,
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), dim, data)
    }

    /// Replaces the default `0..count` identities.
    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self, VectorError> {
        if ids.len() != self.count() {
            return Err(VectorError::IdCount {
                expected: self.count(),
                found: ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(VectorError::DuplicateId(id));
            }
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn count(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Row-major payload.
    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Returns the points at `indices`, in that order, carrying their ids along.
    ///
    /// Panics if an index is out of range.
    pub fn select(&self, indices: &[usize]) -> Result<Self, VectorError> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            ids.push(self.ids[i]);
        }
        Self::from_flat(indices.len(), self.dim, data)?.with_ids(ids)
    }

    /// Converts every entry to another scalar width.
    pub fn cast<U: Scalar>(&self) -> Result<VectorSet<U>, VectorError> {
        let data = self
            .data
            .iter()
            .map(|&v| <U as num_traits::NumCast>::from(v).unwrap_or_else(U::nan))
            .collect();
        VectorSet::from_flat(self.count(), self.dim, data)?.with_ids(self.ids.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_shape() {
        let vs = VectorSet::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(vs.count(), 3);
        assert_eq!(vs.dim(), 2);
        assert_eq!(vs.row(1), &[3.0, 4.0]);
        assert_eq!(vs.ids(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_non_finite() {
        let err = VectorSet::from_rows(&[[1.0, 2.0], [f64::NAN, 0.0]]).unwrap_err();
        assert_eq!(err, VectorError::NonFinite { row: 1, col: 0 });
        let err = VectorSet::from_flat(1, 1, vec![f32::INFINITY]).unwrap_err();
        assert_eq!(err, VectorError::NonFinite { row: 0, col: 0 });
    }

    #[test]
    fn rejects_empty_and_ragged() {
        let rows: [[f64; 2]; 0] = [];
        assert_eq!(VectorSet::from_rows(&rows).unwrap_err(), VectorError::Empty);
        let ragged: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(matches!(
            VectorSet::from_rows(&ragged),
            Err(VectorError::RaggedRow { row: 1, .. })
        ));
        assert_eq!(
            VectorSet::<f64>::from_flat(2, 0, vec![]).unwrap_err(),
            VectorError::ZeroDim
        );
    }

    #[test]
    fn ids_must_be_unique() {
        let vs = VectorSet::from_rows(&[[1.0], [2.0]]).unwrap();
        assert_eq!(
            vs.clone().with_ids(vec![4, 4]).unwrap_err(),
            VectorError::DuplicateId(4)
        );
        let vs = vs.with_ids(vec![9, 3]).unwrap();
        let sub = vs.select(&[1]).unwrap();
        assert_eq!(sub.ids(), &[3]);
        assert_eq!(sub.row(0), &[2.0]);
    }

    #[test]
    fn cast_widens() {
        let vs = VectorSet::from_rows(&[[0.5f32, 1.25]]).unwrap();
        let wide: VectorSet<f64> = vs.cast().unwrap();
        assert_eq!(wide.row(0), &[0.5, 1.25]);
    }
}
