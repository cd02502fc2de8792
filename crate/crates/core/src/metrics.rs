//! Pairwise distance functions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::vectors::VectorSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Sum of absolute coordinate differences.
    L1,
    /// Euclidean distance.
    L2,
    /// `1 - cos(angle)`, in `[0, 2]`.
    Cosine,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine distance undefined for zero-norm vector{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    ZeroNormVector { row: Option<usize> },
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::L1, Metric::L2, Metric::Cosine];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Cosine => "cosine",
        }
    }

    pub fn distance<T: Scalar>(self, u: &[T], v: &[T]) -> Result<T, MetricError> {
        if u.len() != v.len() {
            return Err(MetricError::DimensionMismatch {
                left: u.len(),
                right: v.len(),
            });
        }
        Ok(match self {
            Metric::L1 => l1(u, v),
            Metric::L2 => squared_l2(u, v).sqrt(),
            Metric::Cosine => {
                let (uu, vv) = (dot(u, u), dot(v, v));
                if uu == T::zero() || vv == T::zero() {
                    return Err(MetricError::ZeroNormVector { row: None });
                }
                cosine_from_parts(dot(u, v), uu, vv)
            }
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "cosine" | "cos" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric '{other}' (expected l1, l2 or cosine)")),
        }
    }
}

pub(crate) fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

fn l1<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs())
}

pub(crate) fn squared_l2<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| {
        let d = a - b;
        acc + d * d
    })
}

// `sqrt(uu * vv)` rather than `sqrt(uu) * sqrt(vv)`: for u == v it is exactly `uu`.
fn cosine_from_parts<T: Scalar>(uv: T, uu: T, vv: T) -> T {
    let two = T::one() + T::one();
    (T::one() - uv / (uu * vv).sqrt()).max(T::zero()).min(two)
}

/// Dense symmetric `m x m` distance matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.size..(i + 1) * self.size]
    }
}

pub fn pairwise_distances<T: Scalar>(
    metric: Metric,
    vs: &VectorSet<T>,
) -> Result<DistanceMatrix<T>, MetricError> {
    let m = vs.count();
    let norms: Vec<T> = match metric {
        Metric::Cosine => {
            let norms: Vec<T> = vs.rows().map(|r| dot(r, r)).collect();
            if let Some(row) = norms.iter().position(|&n| n == T::zero()) {
                return Err(MetricError::ZeroNormVector { row: Some(row) });
            }
            norms
        }
        _ => Vec::new(),
    };
    // Upper triangle only, row-parallel; each entry is computed independently.
    let upper: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let u = vs.row(i);
            (i + 1..m)
                .map(|j| {
                    let v = vs.row(j);
                    match metric {
                        Metric::L1 => l1(u, v),
                        Metric::L2 => squared_l2(u, v).sqrt(),
                        Metric::Cosine => cosine_from_parts(dot(u, v), norms[i], norms[j]),
                    }
                })
                .collect()
        })
        .collect();
    let mut data = vec![T::zero(); m * m];
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, d) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            data[i * m + j] = d;
            data[j * m + i] = d;
        }
    }
    Ok(DistanceMatrix { size: m, data })
}
