//! Order-preserving measure and neighborhood-preservation accuracy.
//!
//! For a fixed point `i`, let `E` be the intersection of its k-neighbor set in
//! the original space X with its k-neighbor set in the reduced space Y. The
//! measure of any subset `F` of point indices is `|F ∩ E| / k`. Any subset of
//! `{0..m-1}` is measurable, so the power-set sigma-algebra is never built
//! explicitly.
//!
//! Accuracy averages, over all points, the measure of "every point except the
//! query", i.e. the fraction `|E| / k` of k-neighbors that survive the
//! reduction. Counts stay integral until the single division by `k`, which
//! keeps additivity checks exact.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knn::{KnnTable, NeighborSet};
use crate::metrics::Metric;
use crate::scalar::Scalar;
use crate::vectors::PointId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpmError {
    #[error("tables disagree: X has {m_x} points with k = {k_x}, Y has {m_y} points with k = {k_y}")]
    TableMismatch {
        m_x: usize,
        k_x: usize,
        m_y: usize,
        k_y: usize,
    },
    #[error("point {point} out of range for {m} points")]
    PointOutOfRange { point: usize, m: usize },
    #[error("subset member {member} out of range for {m} points")]
    SubsetOutOfRange { member: usize, m: usize },
    #[error("subsets {first} and {second} overlap at point {point}")]
    OverlappingSubsets {
        first: usize,
        second: usize,
        point: usize,
    },
}

/// A subset of point indices of one vector set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSubset {
    members: BTreeSet<PointId>,
}

impl IndexSubset {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Every point of an `m`-point set.
    pub fn full(m: usize) -> Self {
        Self {
            members: (0..m).map(PointId).collect(),
        }
    }

    /// Every point except `point`.
    pub fn all_but(m: usize, point: PointId) -> Self {
        let mut s = Self::full(m);
        s.members.remove(&point);
        s
    }

    pub fn new<I: IntoIterator<Item = usize>>(members: I, m: usize) -> Result<Self, OpmError> {
        let mut set = BTreeSet::new();
        for member in members {
            if member >= m {
                return Err(OpmError::SubsetOutOfRange { member, m });
            }
            set.insert(PointId(member));
        }
        Ok(Self { members: set })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.members.contains(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.members.iter().copied()
    }
}

/// The pair of neighbor tables and the fixed point a measure is taken over.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext<'a> {
    table_x: &'a KnnTable,
    table_y: &'a KnnTable,
    point: PointId,
}

impl<'a> MeasureContext<'a> {
    pub fn new(table_x: &'a KnnTable, table_y: &'a KnnTable, point: PointId) -> Result<Self, OpmError> {
        check_tables(table_x, table_y)?;
        if point.0 >= table_x.len() {
            return Err(OpmError::PointOutOfRange {
                point: point.0,
                m: table_x.len(),
            });
        }
        Ok(Self {
            table_x,
            table_y,
            point,
        })
    }

    pub fn k(&self) -> usize {
        self.table_x.k()
    }

    pub fn m(&self) -> usize {
        self.table_x.len()
    }

    pub fn point(&self) -> PointId {
        self.point
    }

    fn x_set(&self) -> &NeighborSet {
        self.table_x.get(self.point)
    }

    fn y_set(&self) -> &NeighborSet {
        self.table_y.get(self.point)
    }

    /// `|f ∩ E^Y ∩ E^X|`, the integer numerator of the measure.
    pub fn measure_count(&self, f: &IndexSubset) -> usize {
        let (x, y) = (self.x_set(), self.y_set());
        x.members()
            .iter()
            .filter(|&&p| y.contains(p) && f.contains(p))
            .count()
    }

    /// The measure of `f`, in `[0, 1]`.
    pub fn measure<T: Scalar>(&self, f: &IndexSubset) -> T {
        T::from_count(self.measure_count(f)) / T::from_count(self.k())
    }

    /// Checks `mu(empty) = 0` and `mu(union) = sum of mu(part)` over a family
    /// of pairwise disjoint subsets. The comparison is on integer counts and
    /// therefore exact.
    pub fn check_measure_axioms(&self, partition: &[IndexSubset]) -> Result<bool, OpmError> {
        let m = self.m();
        let mut owner: Vec<Option<usize>> = vec![None; m];
        for (idx, part) in partition.iter().enumerate() {
            for p in part.iter() {
                if p.0 >= m {
                    return Err(OpmError::SubsetOutOfRange { member: p.0, m });
                }
                if let Some(first) = owner[p.0] {
                    return Err(OpmError::OverlappingSubsets {
                        first,
                        second: idx,
                        point: p.0,
                    });
                }
                owner[p.0] = Some(idx);
            }
        }
        if self.measure_count(&IndexSubset::empty()) != 0 {
            return Ok(false);
        }
        let union = IndexSubset {
            members: partition.iter().flat_map(|s| s.iter()).collect(),
        };
        let parts: usize = partition.iter().map(|s| self.measure_count(s)).sum();
        Ok(self.measure_count(&union) == parts)
    }
}

fn check_tables(x: &KnnTable, y: &KnnTable) -> Result<(), OpmError> {
    if x.len() != y.len() || x.k() != y.k() {
        return Err(OpmError::TableMismatch {
            m_x: x.len(),
            k_x: x.k(),
            m_y: y.len(),
            k_y: y.k(),
        });
    }
    Ok(())
}

/// Per-point preservation fractions and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport<T> {
    pub k: usize,
    pub metric: Metric,
    pub accuracy: T,
    pub per_point: Vec<T>,
    /// Every neighbor set is preserved exactly (accuracy is exactly 1).
    #[serde(skip)]
    pub is_op_k: bool,
}

/// Mean fraction of k-neighbors of each point shared between X and Y.
///
/// The reported metric is `table_x`'s.
pub fn accuracy<T: Scalar>(table_x: &KnnTable, table_y: &KnnTable) -> Result<AccuracyReport<T>, OpmError> {
    check_tables(table_x, table_y)?;
    let k = table_x.k();
    let m = table_x.len();
    let counts: Vec<usize> = table_x
        .sets()
        .iter()
        .zip(table_y.sets())
        .map(|(x, y)| x.overlap(y))
        .collect();
    let kk = T::from_count(k);
    let per_point: Vec<T> = counts.iter().map(|&c| T::from_count(c) / kk).collect();
    let total = per_point.iter().fold(T::zero(), |acc, &v| acc + v);
    let accuracy = total / T::from_count(m);
    Ok(AccuracyReport {
        k,
        metric: table_x.metric(),
        accuracy,
        per_point,
        is_op_k: counts.iter().all(|&c| c == k),
    })
}

/// Whether the first `level` entries of two ranked lists agree as sets.
///
/// Level 0 always holds.
pub fn op_level<E: Ord>(ranked_x: &[E], ranked_y: &[E], level: usize) -> bool {
    let a: BTreeSet<&E> = ranked_x.iter().take(level).collect();
    let b: BTreeSet<&E> = ranked_y.iter().take(level).collect();
    a == b
}

/// A pair of ranked neighbor lists that agree at level 2 but not at level 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpLevelExample {
    pub ranked_x: Vec<char>,
    pub ranked_y: Vec<char>,
    /// `(level, holds)` for levels 0, 1, 2.
    pub levels: Vec<(usize, bool)>,
}

/// Ranked lists `(a, b, c)` in X and `(b, a, c)` in Y: swapping the two
/// nearest keeps the 2-set intact while changing the 1-set.
pub fn op_level_example() -> OpLevelExample {
    let ranked_x = vec!['a', 'b', 'c'];
    let ranked_y = vec!['b', 'a', 'c'];
    let levels = (0..=2)
        .map(|z| (z, op_level(&ranked_x, &ranked_y, z)))
        .collect();
    OpLevelExample {
        ranked_x,
        ranked_y,
        levels,
    }
}

/// Three points in the plane whose map preserves every 2-neighbor set but not
/// every 1-neighbor set.
///
/// In X the middle point sits closer to the left point; in Y it sits closer
/// to the right one, so its nearest neighbor flips from 0 to 2 while the set
/// `{0, 2}` stays the same.
pub fn non_inclusive_witness<T: Scalar>() -> (crate::vectors::VectorSet<T>, crate::vectors::VectorSet<T>) {
    let c = |v: f64| T::from_f64(v).unwrap();
    let x = crate::vectors::VectorSet::from_rows(&[[c(0.0), c(0.0)], [c(1.0), c(0.0)], [c(3.0), c(0.0)]])
        .expect("static points are valid");
    let y = crate::vectors::VectorSet::from_rows(&[[c(0.0), c(0.0)], [c(2.0), c(0.0)], [c(3.0), c(0.0)]])
        .expect("static points are valid");
    (x, y)
}
