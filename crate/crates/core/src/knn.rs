//! Exact k-nearest-neighbor sets.
//!
//! Candidates are ranked by `(distance, PointId)` ascending and the first `k`
//! are kept, so ties always resolve toward the smaller id and every table is
//! a pure function of its input. The query point itself is never a candidate.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{pairwise_distances, DistanceMatrix, Metric, MetricError};
use crate::scalar::Scalar;
use crate::vectors::{PointId, VectorSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KnnError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} too large for {m} points (need k <= m - 1)")]
    KTooLarge { k: usize, m: usize },
    #[error("neighbor set for point {query} is invalid: {reason}")]
    InvalidSet { query: usize, reason: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// The unordered k-neighbor set of one query point.
///
/// Members are kept sorted by id; comparison is set comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NeighborSet {
    query: PointId,
    members: Vec<PointId>,
}

impl NeighborSet {
    pub fn query(&self) -> PointId {
        self.query
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Members in ascending id order.
    pub fn members(&self) -> &[PointId] {
        &self.members
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    /// Size of the intersection with another set (both sorted).
    pub fn overlap(&self, other: &NeighborSet) -> usize {
        let (mut a, mut b) = (self.members.iter().peekable(), other.members.iter().peekable());
        let mut n = 0;
        while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
            match x.cmp(y) {
                Ordering::Less => {
                    a.next();
                }
                Ordering::Greater => {
                    b.next();
                }
                Ordering::Equal => {
                    n += 1;
                    a.next();
                    b.next();
                }
            }
        }
        n
    }
}

/// One [`NeighborSet`] per point; `sets[i].query() == i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnTable {
    k: usize,
    metric: Metric,
    sets: Vec<NeighborSet>,
}

impl KnnTable {
    /// Builds a table from explicit member lists, validating every set.
    ///
    /// Useful for constructing tables by hand; `lists[i]` is the neighbor
    /// set of point `i`.
    pub fn from_lists(k: usize, metric: Metric, lists: &[Vec<usize>]) -> Result<Self, KnnError> {
        let m = lists.len();
        if k == 0 {
            return Err(KnnError::ZeroK);
        }
        if k >= m {
            return Err(KnnError::KTooLarge { k, m });
        }
        let mut sets = Vec::with_capacity(m);
        for (query, list) in lists.iter().enumerate() {
            let mut members: Vec<PointId> = list.iter().copied().map(PointId).collect();
            members.sort_unstable();
            members.dedup();
            let invalid = |reason: String| KnnError::InvalidSet { query, reason };
            if members.len() != k {
                return Err(invalid(format!("{} distinct members, expected {k}", members.len())));
            }
            if members.iter().any(|p| p.0 == query) {
                return Err(invalid("contains the query point".into()));
            }
            if let Some(p) = members.iter().find(|p| p.0 >= m) {
                return Err(invalid(format!("member {p} out of range")));
            }
            sets.push(NeighborSet {
                query: PointId(query),
                members,
            });
        }
        Ok(Self { k, metric, sets })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[NeighborSet] {
        &self.sets
    }

    pub fn get(&self, p: PointId) -> &NeighborSet {
        &self.sets[p.0]
    }
}

pub fn knn_table<T: Scalar>(vs: &VectorSet<T>, k: usize, metric: Metric) -> Result<KnnTable, KnnError> {
    check_k(k, vs.count())?;
    let dist = pairwise_distances(metric, vs)?;
    knn_from_distances(&dist, k, metric)
}

/// Same as [`knn_table`] but over a precomputed distance matrix.
pub fn knn_from_distances<T: Scalar>(
    dist: &DistanceMatrix<T>,
    k: usize,
    metric: Metric,
) -> Result<KnnTable, KnnError> {
    let m = dist.size();
    check_k(k, m)?;
    let sets = (0..m)
        .into_par_iter()
        .map(|i| NeighborSet {
            query: PointId(i),
            members: nearest(dist.row(i), i, k),
        })
        .collect();
    Ok(KnnTable { k, metric, sets })
}

fn check_k(k: usize, m: usize) -> Result<(), KnnError> {
    if k == 0 {
        return Err(KnnError::ZeroK);
    }
    if k >= m {
        return Err(KnnError::KTooLarge { k, m });
    }
    Ok(())
}

fn rank_order<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

fn nearest<T: Scalar>(row: &[T], query: usize, k: usize) -> Vec<PointId> {
    let mut cand: Vec<(T, usize)> = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != query)
        .map(|(j, &d)| (d, j))
        .collect();
    // Keys are unique (ids differ), so the selected prefix is a well-defined set.
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, rank_order);
        cand.truncate(k);
    }
    let mut members: Vec<PointId> = cand.into_iter().map(|(_, j)| PointId(j)).collect();
    members.sort_unstable();
    members
}
