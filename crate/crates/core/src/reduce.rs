//! Dimension-reduction maps: PCA and classical (Torgerson) MDS.
//!
//! Both are computed from a full symmetric eigendecomposition, so the
//! embedding for `n` dimensions is always the first `n` columns of the
//! embedding for any larger `n`. [`Decomposition`] exposes that directly;
//! [`reduce`] is the one-shot form.
//!
//! Eigenvector signs are fixed so that the entry of largest magnitude in each
//! component is positive (first such entry on ties).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{symmetric_eigen, SquareMatrix};
use crate::metrics::{dot, pairwise_distances, Metric, MetricError};
use crate::scalar::Scalar;
use crate::vectors::{VectorError, VectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Mds,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Mds => "mds",
        }
    }

    /// Largest admissible target dimension for an `m x d` input.
    pub fn max_dim(self, m: usize, d: usize) -> usize {
        match self {
            Method::Pca => d.min(m),
            Method::Mds => m.saturating_sub(1),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "mds" => Ok(Method::Mds),
            other => Err(format!("unknown method '{other}' (expected pca or mds)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("target dimension must be at least 1")]
    ZeroTargetDim,
    #[error("target dimension {requested} exceeds the maximum {max} for {method}")]
    TargetDimTooLarge {
        requested: usize,
        max: usize,
        method: Method,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducerConfig {
    pub method: Method,
    pub target_dim: usize,
    /// Input distance for MDS; ignored by PCA.
    pub metric: Metric,
}

impl ReducerConfig {
    pub fn pca(target_dim: usize) -> Self {
        Self {
            method: Method::Pca,
            target_dim,
            metric: Metric::L2,
        }
    }

    pub fn mds(target_dim: usize, metric: Metric) -> Self {
        Self {
            method: Method::Mds,
            target_dim,
            metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult<T> {
    pub y: VectorSet<T>,
    pub method: Method,
    /// Retained eigenvalues, descending: covariance spectrum for PCA, Gram
    /// spectrum for MDS.
    pub explained: Vec<T>,
    /// Trailing MDS columns left at zero because the Gram spectrum had too
    /// few positive eigenvalues. Always 0 for PCA.
    pub zero_padded: usize,
}

pub fn reduce<T: Scalar>(x: &VectorSet<T>, cfg: &ReducerConfig) -> Result<ReductionResult<T>, ReduceError> {
    check_target(x, cfg.method, cfg.target_dim)?;
    Decomposition::compute(x, cfg.method, cfg.metric)?.embed(cfg.target_dim)
}

fn check_target<T: Scalar>(x: &VectorSet<T>, method: Method, n: usize) -> Result<(), ReduceError> {
    if n == 0 {
        return Err(ReduceError::ZeroTargetDim);
    }
    let max = method.max_dim(x.count(), x.dim());
    if n > max {
        return Err(ReduceError::TargetDimTooLarge {
            requested: n,
            max,
            method,
        });
    }
    Ok(())
}

/// All components of a reduction, from which any admissible target
/// dimension can be embedded.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    method: Method,
    ids: Vec<u64>,
    kind: Kind<T>,
}

#[derive(Debug, Clone)]
enum Kind<T> {
    Pca {
        centered: VectorSet<T>,
        /// Unit-norm principal axes, each of length `d`.
        components: Vec<Vec<T>>,
        variances: Vec<T>,
    },
    Mds {
        vectors: Vec<Vec<T>>,
        values: Vec<T>,
        positive_threshold: T,
    },
}

impl<T: Scalar> Decomposition<T> {
    pub fn compute(x: &VectorSet<T>, method: Method, metric: Metric) -> Result<Self, ReduceError> {
        let kind = match method {
            Method::Pca => pca_components(x)?,
            Method::Mds => mds_components(x, metric)?,
        };
        Ok(Self {
            method,
            ids: x.ids().to_vec(),
            kind,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Largest target dimension [`embed`](Self::embed) accepts.
    pub fn max_dim(&self) -> usize {
        match &self.kind {
            Kind::Pca { components, .. } => components.len(),
            Kind::Mds { values, .. } => values.len().saturating_sub(1),
        }
    }

    /// PCA projection axes (columns of the projection matrix). Empty for MDS.
    pub fn components(&self) -> &[Vec<T>] {
        match &self.kind {
            Kind::Pca { components, .. } => components,
            Kind::Mds { .. } => &[],
        }
    }

    pub fn embed(&self, n: usize) -> Result<ReductionResult<T>, ReduceError> {
        if n == 0 {
            return Err(ReduceError::ZeroTargetDim);
        }
        if n > self.max_dim() {
            return Err(ReduceError::TargetDimTooLarge {
                requested: n,
                max: self.max_dim(),
                method: self.method,
            });
        }
        let m = self.ids.len();
        let mut data = Vec::with_capacity(m * n);
        let (explained, zero_padded) = match &self.kind {
            Kind::Pca {
                centered,
                components,
                variances,
            } => {
                for row in centered.rows() {
                    data.extend(components[..n].iter().map(|g| dot(row, g)));
                }
                (variances[..n].to_vec(), 0)
            }
            Kind::Mds {
                vectors,
                values,
                positive_threshold,
            } => {
                let scales: Vec<T> = values[..n]
                    .iter()
                    .map(|&l| if l > *positive_threshold { l.sqrt() } else { T::zero() })
                    .collect();
                let cols = &vectors[..n];
                data.extend((0..m).flat_map(|i| cols.iter().zip(&scales).map(move |(v, &s)| v[i] * s)));
                let padded = scales.iter().filter(|&&s| s == T::zero()).count();
                (values[..n].to_vec(), padded)
            }
        };
        let y = VectorSet::from_flat(m, n, data)?.with_ids(self.ids.clone())?;
        Ok(ReductionResult {
            y,
            method: self.method,
            explained,
            zero_padded,
        })
    }
}

fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn center<T: Scalar>(x: &VectorSet<T>) -> Result<VectorSet<T>, ReduceError> {
    let (m, d) = (x.count(), x.dim());
    let mut mean = vec![T::zero(); d];
    for row in x.rows() {
        for (acc, &v) in mean.iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }
    let mm = T::from_count(m);
    for v in mean.iter_mut() {
        *v = *v / mm;
    }
    let data = x
        .rows()
        .flat_map(|row| row.iter().zip(&mean).map(|(&v, &mu)| v - mu))
        .collect();
    Ok(VectorSet::from_flat(m, d, data)?)
}

fn pca_components<T: Scalar>(x: &VectorSet<T>) -> Result<Kind<T>, ReduceError> {
    let (m, d) = (x.count(), x.dim());
    let centered = center(x)?;
    let denom = T::from_count(m.saturating_sub(1).max(1));
    let keep = d.min(m);

    let (mut components, variances) = if d <= m {
        // Covariance route: d x d.
        let mut cov: SquareMatrix<T> = SquareMatrix::zeros(d);
        for row in centered.rows() {
            for i in 0..d {
                for j in i..d {
                    cov.set(i, j, cov.get(i, j) + row[i] * row[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov.set(i, j, cov.get(i, j) / denom);
            }
        }
        let eig = symmetric_eigen(&cov);
        let variances = eig.values.iter().map(|&l| l.max(T::zero())).collect();
        (eig.vectors, variances)
    } else {
        // Gram route: m x m, axes recovered as X_c^T u / sigma.
        let gram = SquareMatrix::from_fn(m, |i, j| {
            if i <= j {
                dot(centered.row(i), centered.row(j))
            } else {
                T::zero()
            }
        });
        let eig = symmetric_eigen(&gram);
        let top = eig.values.first().copied().unwrap_or(T::zero()).max(T::zero());
        let threshold = rank_threshold(top, m.max(d));
        let mut axes = Vec::with_capacity(keep);
        let mut variances = Vec::with_capacity(keep);
        for j in 0..keep {
            let l = eig.values[j];
            if l > threshold {
                let sigma = l.sqrt();
                let u = &eig.vectors[j];
                let mut axis = vec![T::zero(); d];
                for (i, row) in centered.rows().enumerate() {
                    for (a, &v) in axis.iter_mut().zip(row) {
                        *a = *a + v * u[i];
                    }
                }
                axis.iter_mut().for_each(|a| *a = *a / sigma);
                axes.push(Some(axis));
                variances.push(l / denom);
            } else {
                axes.push(None);
                variances.push(T::zero());
            }
        }
        (orthonormalize(axes, d), variances)
    };
    components.truncate(keep);
    components.iter_mut().for_each(|c| fix_sign(c));
    Ok(Kind::Pca {
        centered,
        components,
        variances,
    })
}

/// Eigenvalues at or below this are numerically zero.
fn rank_threshold<T: Scalar>(largest_abs: T, size: usize) -> T {
    T::from_count(100 * size) * T::epsilon() * largest_abs
}

/// Modified Gram-Schmidt over the given axes, in order. A missing axis (or
/// one that collapses against its predecessors) is replaced by the standard
/// basis vector with the largest component orthogonal to the axes so far,
/// lowest coordinate first on ties.
fn orthonormalize<T: Scalar>(axes: Vec<Option<Vec<T>>>, d: usize) -> Vec<Vec<T>> {
    let half = T::one() / (T::one() + T::one());
    let mut out: Vec<Vec<T>> = Vec::with_capacity(axes.len());
    let reduce_against = |v: &mut Vec<T>, basis: &[Vec<T>]| {
        // Two passes restore orthogonality lost to cancellation.
        for _ in 0..2 {
            for b in basis {
                let proj = dot(v, b);
                for (x, &bb) in v.iter_mut().zip(b) {
                    *x = *x - proj * bb;
                }
            }
        }
        dot(v, v).sqrt()
    };
    for axis in axes {
        if let Some(mut v) = axis {
            let norm = reduce_against(&mut v, &out);
            if norm > half {
                v.iter_mut().for_each(|x| *x = *x / norm);
                out.push(v);
                continue;
            }
        }
        let mut best: Option<(T, Vec<T>)> = None;
        for r in 0..d {
            let mut v = vec![T::zero(); d];
            v[r] = T::one();
            let norm = reduce_against(&mut v, &out);
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.expect("ambient dimension is at least 1");
        v.iter_mut().for_each(|x| *x = *x / norm);
        out.push(v);
    }
    out
}

fn mds_components<T: Scalar>(x: &VectorSet<T>, metric: Metric) -> Result<Kind<T>, ReduceError> {
    let m = x.count();
    let dist = pairwise_distances(metric, x)?;
    let sq = SquareMatrix::from_fn(m, |i, j| {
        let d = dist.get(i, j);
        d * d
    });
    let mm = T::from_count(m);
    let row_mean: Vec<T> = (0..m)
        .map(|i| (0..m).map(|j| sq.get(i, j)).sum::<T>() / mm)
        .collect();
    let grand = row_mean.iter().copied().sum::<T>() / mm;
    let neg_half = -(T::one() / (T::one() + T::one()));
    // Double centering; D^2 is symmetric so column means equal row means.
    let b = SquareMatrix::from_fn(m, |i, j| neg_half * (sq.get(i, j) - row_mean[i] - row_mean[j] + grand));
    let mut eig = symmetric_eigen(&b);
    eig.vectors.iter_mut().for_each(|v| fix_sign(v));
    let largest = eig.values.iter().fold(T::zero(), |acc, &l| acc.max(l.abs()));
    Ok(Kind::Mds {
        vectors: eig.vectors,
        values: eig.values,
        positive_threshold: rank_threshold(largest, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::knn_table;
    use crate::opm::accuracy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(m: usize, d: usize, seed: u64) -> VectorSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        VectorSet::from_flat(m, d, data).unwrap()
    }

    fn max_distance_gap(a: &VectorSet<f64>, b: &VectorSet<f64>) -> f64 {
        let da = pairwise_distances(Metric::L2, a).unwrap();
        let db = pairwise_distances(Metric::L2, b).unwrap();
        let mut gap = 0.0f64;
        for i in 0..a.count() {
            for j in 0..a.count() {
                gap = gap.max((da.get(i, j) - db.get(i, j)).abs());
            }
        }
        gap
    }

    #[test]
    fn line_collapses_to_one_dim() {
        let x = VectorSet::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.5, 2.5], [-1.0, -1.0]]).unwrap();
        let r = reduce(&x, &ReducerConfig::pca(1)).unwrap();
        assert_eq!(r.y.dim(), 1);
        assert!(max_distance_gap(&x, &r.y) < 1e-9);
    }

    #[test]
    fn full_rank_pca_preserves_neighbors() {
        let x = random_set(20, 5, 11);
        let r = reduce(&x, &ReducerConfig::pca(5)).unwrap();
        for k in 1..=19 {
            let acc = accuracy::<f64>(
                &knn_table(&x, k, Metric::L2).unwrap(),
                &knn_table(&r.y, k, Metric::L2).unwrap(),
            )
            .unwrap();
            assert_eq!(acc.accuracy, 1.0, "k={k}");
        }
    }

    #[test]
    fn mds_is_exact_on_euclidean_input() {
        for (m, d, seed) in [(8, 3, 1), (15, 4, 2), (12, 11, 3)] {
            let x = random_set(m, d, seed);
            let r = reduce(&x, &ReducerConfig::mds(d.min(m - 1), Metric::L2)).unwrap();
            assert!(max_distance_gap(&x, &r.y) < 1e-8);
            assert_eq!(r.zero_padded, 0);
        }
    }

    #[test]
    fn mds_pads_beyond_rank() {
        let x = random_set(10, 2, 4);
        let r = reduce(&x, &ReducerConfig::mds(5, Metric::L2)).unwrap();
        assert_eq!(r.zero_padded, 3);
        for row in r.y.rows() {
            assert_eq!(&row[2..], &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn components_orthonormal_both_routes() {
        for (m, d) in [(30, 10), (12, 40), (5, 5)] {
            let x = random_set(m, d, (m * d) as u64);
            let dec = Decomposition::compute(&x, Method::Pca, Metric::L2).unwrap();
            let g = dec.components();
            assert_eq!(g.len(), d.min(m));
            for i in 0..g.len() {
                for j in 0..g.len() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&g[i], &g[j]) - want).abs() < 1e-10, "({m},{d}) {i},{j}");
                }
            }
        }
    }

    #[test]
    fn sign_convention_and_prefix() {
        let x = random_set(25, 6, 8);
        let dec = Decomposition::compute(&x, Method::Pca, Metric::L2).unwrap();
        for c in dec.components() {
            let big = c.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big > 0.0);
        }
        let full = dec.embed(6).unwrap();
        let three = reduce(&x, &ReducerConfig::pca(3)).unwrap();
        for i in 0..25 {
            assert_eq!(&full.y.row(i)[..3], three.y.row(i));
        }
        let again = reduce(&x, &ReducerConfig::pca(3)).unwrap();
        assert_eq!(three, again);
    }

    #[test]
    fn explained_variance_grows_with_n() {
        let x = random_set(30, 8, 5);
        let mut prev = 0.0;
        for n in 1..=8 {
            let r = reduce(&x, &ReducerConfig::pca(n)).unwrap();
            let total: f64 = r.explained.iter().sum();
            assert!(total >= prev);
            assert!(r.explained.windows(2).all(|w| w[0] >= w[1]));
            prev = total;
        }
    }

    #[test]
    fn target_dim_bounds() {
        let x = random_set(6, 3, 1);
        assert_eq!(reduce(&x, &ReducerConfig::pca(0)).unwrap_err(), ReduceError::ZeroTargetDim);
        assert!(matches!(
            reduce(&x, &ReducerConfig::pca(4)),
            Err(ReduceError::TargetDimTooLarge { max: 3, .. })
        ));
        assert!(reduce(&x, &ReducerConfig::mds(5, Metric::L1)).is_ok());
        assert!(matches!(
            reduce(&x, &ReducerConfig::mds(6, Metric::L1)),
            Err(ReduceError::TargetDimTooLarge { max: 5, .. })
        ));
    }

    #[test]
    fn ids_carry_over() {
        let x = random_set(4, 2, 3).with_ids(vec![10, 20, 30, 40]).unwrap();
        let r = reduce(&x, &ReducerConfig::pca(1)).unwrap();
        assert_eq!(r.y.ids(), &[10, 20, 30, 40]);
    }
}
