//! Accuracy sweeps over subsample sizes and target dimensions.
//!
//! For every subsample size `m` and repeat index, `m` points are drawn
//! without replacement, decomposed once, and embedded at each target
//! dimension `n` of the grid. Both spaces use the configured metric. The
//! resulting records are ordered by `(m, n, repeat)` regardless of how the
//! cells were scheduled.
//!
//! Subsamples come from ChaCha8 seeded with the 32-byte key
//! `seed_le64 || m_le64 || repeat_le64 || 0_le64`, and
//! `rand::seq::index::sample`; see [`GENERATOR_ID`].

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::Sample;
use crate::knn::{knn_table, KnnError};
use crate::metrics::Metric;
use crate::opm::{accuracy, AccuracyReport, OpmError};
use crate::reduce::{Decomposition, Method, ReduceError};
use crate::scalar::Scalar;
use crate::vectors::{VectorError, VectorSet};

/// Identifies the subsampling algorithm in sweep output headers.
pub const GENERATOR_ID: &str = "chacha8[seed,m,repeat]+rand0.9-index-sample";

pub const CSV_HEADER: &str = "m,n,ratio,k,metric,method,repeat,accuracy";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset has {have} points but the largest sample size is {need}")]
    DatasetTooSmall { have: usize, need: usize },
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("no records to summarize")]
    EmptyInput,
    #[error("sweep csv line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Opm(#[from] OpmError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which target dimensions to evaluate for each subsample size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DimGrid {
    /// Every `n` from 1 up to the largest the method admits, capped at `m - 1`.
    All,
    List(Vec<usize>),
}

impl DimGrid {
    pub fn dims_for(&self, method: Method, m: usize, d: usize) -> Vec<usize> {
        match self {
            DimGrid::All => (1..=method.max_dim(m, d).min(m - 1)).collect(),
            DimGrid::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub sample_sizes: Vec<usize>,
    pub dims: DimGrid,
    pub k: usize,
    pub metric: Metric,
    pub method: Method,
    pub seed: u64,
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![10, 20, 30, 40, 50, 60, 70, 80],
            dims: DimGrid::All,
            k: 5,
            metric: Metric::L2,
            method: Method::Pca,
            seed: 0,
            repeats: 1,
        }
    }
}

impl SweepConfig {
    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |s: String| Err(HarnessError::InvalidConfig(s));
        if self.sample_sizes.is_empty() {
            return bad("no sample sizes".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample sizes must be strictly ascending".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.k >= self.sample_sizes[0] {
            return bad(format!(
                "k = {} must be smaller than the smallest sample size {}",
                self.k, self.sample_sizes[0]
            ));
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if let DimGrid::List(dims) = &self.dims {
            if dims.is_empty() {
                return bad("empty dimension list".into());
            }
            if dims.contains(&0) {
                return bad("target dimensions must be at least 1".into());
            }
            let smallest = self.sample_sizes[0];
            if let Some(n) = dims.iter().find(|&&n| n >= smallest) {
                return bad(format!("target dimension {n} is not below sample size {smallest}"));
            }
        }
        Ok(())
    }
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub m: usize,
    pub n: usize,
    pub ratio: T,
    pub k: usize,
    pub metric: Metric,
    pub method: Method,
    pub repeat: usize,
    pub accuracy: T,
}

impl<T: Scalar> SweepRecord<T> {
    pub fn sample(&self) -> Sample<T> {
        Sample::new(self.n, self.m, self.accuracy)
    }
}

/// Indices of the subsample for `(seed, m, repeat)`, ascending.
pub fn subsample_indices(total: usize, m: usize, seed: u64, repeat: usize) -> Vec<usize> {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(m as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(repeat as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut idx = rand::seq::index::sample(&mut rng, total, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Runs every cell on the current rayon pool.
pub fn run_sweep<T: Scalar>(x: &VectorSet<T>, cfg: &SweepConfig) -> Result<Vec<SweepRecord<T>>, HarnessError> {
    cfg.validate()?;
    let need = *cfg.sample_sizes.last().expect("validated non-empty");
    if x.count() < need {
        return Err(HarnessError::DatasetTooSmall { have: x.count(), need });
    }
    let tasks: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&m| (0..cfg.repeats).map(move |r| (m, r)))
        .collect();
    let groups: Vec<Vec<SweepRecord<T>>> = tasks
        .par_iter()
        .map(|&(m, repeat)| run_cell_group(x, cfg, m, repeat))
        .collect::<Result<_, _>>()?;
    let mut records: Vec<SweepRecord<T>> = groups.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.m, r.n, r.repeat));
    Ok(records)
}

fn run_cell_group<T: Scalar>(
    x: &VectorSet<T>,
    cfg: &SweepConfig,
    m: usize,
    repeat: usize,
) -> Result<Vec<SweepRecord<T>>, HarnessError> {
    let sub = x.select(&subsample_indices(x.count(), m, cfg.seed, repeat))?;
    let table_x = knn_table(&sub, cfg.k, cfg.metric)?;
    let decomposition = Decomposition::compute(&sub, cfg.method, cfg.metric)?;
    cfg.dims
        .dims_for(cfg.method, m, x.dim())
        .par_iter()
        .map(|&n| {
            let reduced = decomposition.embed(n)?;
            let table_y = knn_table(&reduced.y, cfg.k, cfg.metric)?;
            let report: AccuracyReport<T> = accuracy(&table_x, &table_y)?;
            Ok(SweepRecord {
                m,
                n,
                ratio: T::from_count(n) / T::from_count(m),
                k: cfg.k,
                metric: cfg.metric,
                method: cfg.method,
                repeat,
                accuracy: report.accuracy,
            })
        })
        .collect()
}

/// Mean accuracy of all records sharing one exact `n/m` ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioBin<T> {
    pub ratio: T,
    pub mean_accuracy: T,
    pub count: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Groups records by exact ratio, ascending.
pub fn summarize<T: Scalar>(records: &[SweepRecord<T>]) -> Result<Vec<RatioBin<T>>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut groups: BTreeMap<(usize, usize), Vec<T>> = BTreeMap::new();
    for r in records {
        let g = gcd(r.n, r.m).max(1);
        groups.entry((r.n / g, r.m / g)).or_default().push(r.accuracy);
    }
    let mut bins: Vec<RatioBin<T>> = groups
        .into_iter()
        .map(|((n, m), accs)| RatioBin {
            ratio: T::from_count(n) / T::from_count(m),
            mean_accuracy: accs.iter().copied().sum::<T>() / T::from_count(accs.len()),
            count: accs.len(),
        })
        .collect();
    bins.sort_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap_or(std::cmp::Ordering::Equal));
    Ok(bins)
}

/// Mean accuracy per `n` for records with the given `m`, ascending in `n`.
pub fn mean_by_dim<T: Scalar>(records: &[SweepRecord<T>], m: usize) -> Vec<(usize, T)> {
    let mut groups: BTreeMap<usize, Vec<T>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.m == m) {
        groups.entry(r.n).or_default().push(r.accuracy);
    }
    groups
        .into_iter()
        .map(|(n, v)| (n, v.iter().copied().sum::<T>() / T::from_count(v.len())))
        .collect()
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Provenance written as the leading comment of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepMeta {
    pub seed: u64,
    pub dataset: String,
    pub k: usize,
}

pub fn write_sweep_csv<T: Scalar, W: Write + ?Sized>(
    w: &mut W,
    records: &[SweepRecord<T>],
    meta: &SweepMeta,
) -> std::io::Result<()> {
    writeln!(
        w,
        "# seed={} generator={} dataset={} k={} version={}",
        meta.seed,
        GENERATOR_ID,
        meta.dataset,
        meta.k,
        env!("CARGO_PKG_VERSION")
    )?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.m, r.n, r.ratio, r.k, r.metric, r.method, r.repeat, r.accuracy
        )?;
    }
    Ok(())
}

pub fn read_sweep_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<SweepRecord<T>>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| HarnessError::BadRecord {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(HarnessError::BadRecord {
            line: 1,
            reason: format!("expected header '{CSV_HEADER}'"),
        });
    }
    let mut out = Vec::new();
    for result in rdr.deserialize::<SweepRecord<f64>>() {
        let r = result.map_err(|e| HarnessError::BadRecord {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        out.push(SweepRecord {
            m: r.m,
            n: r.n,
            ratio: T::from_f64(r.ratio).unwrap_or_else(T::nan),
            k: r.k,
            metric: r.metric,
            method: r.method,
            repeat: r.repeat,
            accuracy: T::from_f64(r.accuracy).unwrap_or_else(T::nan),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_set(m: usize, d: usize, seed: u64) -> VectorSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        VectorSet::from_flat(m, d, data).unwrap()
    }

    fn record(m: usize, n: usize, accuracy: f64) -> SweepRecord<f64> {
        SweepRecord {
            m,
            n,
            ratio: n as f64 / m as f64,
            k: 2,
            metric: Metric::L2,
            method: Method::Pca,
            repeat: 0,
            accuracy,
        }
    }

    #[test]
    fn full_rank_cell_is_exact() {
        let x = random_set(40, 12, 3);
        for metric in [Metric::L2, Metric::L1, Metric::Cosine] {
            let cfg = SweepConfig {
                sample_sizes: vec![10],
                dims: DimGrid::List(vec![9]),
                k: 4,
                metric,
                seed: 5,
                ..SweepConfig::default()
            };
            let recs = run_sweep(&x, &cfg).unwrap();
            assert_eq!(recs.len(), 1);
            if metric == Metric::L2 {
                assert_eq!(recs[0].accuracy, 1.0);
            }
            assert!(recs[0].accuracy <= 1.0);
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let x = random_set(60, 6, 1);
        let cfg = SweepConfig {
            sample_sizes: vec![10, 20],
            k: 3,
            seed: 7,
            repeats: 2,
            ..SweepConfig::default()
        };
        let a = run_sweep(&x, &cfg).unwrap();
        let b = run_sweep(&x, &cfg).unwrap();
        assert_eq!(a, b);
        let keys: Vec<_> = a.iter().map(|r| (r.m, r.n, r.repeat)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // PCA caps n at d = 6.
        assert_eq!(a.len(), 2 * 6 + 2 * 6);
    }

    #[test]
    fn single_thread_matches_pool() {
        let x = random_set(50, 8, 2);
        let cfg = SweepConfig {
            sample_sizes: vec![12, 30],
            metric: Metric::Cosine,
            method: Method::Mds,
            seed: 99,
            ..SweepConfig::default()
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| run_sweep(&x, &cfg)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
        let many = pool.install(|| run_sweep(&x, &cfg)).unwrap();
        assert_eq!(single, many);
    }

    #[test]
    fn dataset_too_small() {
        let x = random_set(80, 4, 1);
        let cfg = SweepConfig {
            sample_sizes: vec![100],
            ..SweepConfig::default()
        };
        assert!(matches!(
            run_sweep(&x, &cfg),
            Err(HarnessError::DatasetTooSmall { have: 80, need: 100 })
        ));
    }

    #[test]
    fn config_validation() {
        let base = SweepConfig::default();
        assert!(base.validate().is_ok());
        let bad = [
            SweepConfig { k: 10, ..base.clone() },
            SweepConfig { sample_sizes: vec![20, 10], ..base.clone() },
            SweepConfig { repeats: 0, ..base.clone() },
            SweepConfig { dims: DimGrid::List(vec![3, 10]), ..base.clone() },
            SweepConfig { dims: DimGrid::List(vec![0]), ..base.clone() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(HarnessError::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn subsample_is_seeded() {
        let a = subsample_indices(100, 10, 1, 0);
        assert_eq!(a, subsample_indices(100, 10, 1, 0));
        assert_ne!(a, subsample_indices(100, 10, 1, 1));
        assert_ne!(a, subsample_indices(100, 10, 2, 0));
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn summarize_bins() {
        assert!(matches!(summarize::<f64>(&[]), Err(HarnessError::EmptyInput)));
        let one = summarize(&[record(10, 3, 0.7)]).unwrap();
        assert_eq!(one, vec![RatioBin { ratio: 0.3, mean_accuracy: 0.7, count: 1 }]);

        let bins = summarize(&[record(20, 10, 0.6), record(10, 2, 0.1), record(10, 5, 0.4)]).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].ratio, 0.2);
        assert_eq!((bins[1].ratio, bins[1].mean_accuracy, bins[1].count), (0.5, 0.5, 2));
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        // Ranks of y with a tie: [1, 2.5, 2.5].
        let r = spearman(&[1.0, 2.0, 3.0], &[0.1, 0.5, 0.5]);
        assert!((r - 0.8660254037844387).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0], &[1.0, 1.0]).is_nan());
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![record(10, 3, 0.7), record(10, 4, 0.85)];
        let mut buf = Vec::new();
        let meta = SweepMeta {
            seed: 3,
            dataset: "data.vec".into(),
            k: 2,
        };
        write_sweep_csv(&mut buf, &recs, &meta).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=3 generator="));
        assert_eq!(text.lines().nth(1).unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(2).unwrap(), "10,3,0.3,2,l2,pca,0,0.7");
        let back: Vec<SweepRecord<f64>> = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);

        assert!(read_sweep_csv::<f64, _>("a,b\n1,2\n".as_bytes()).is_err());
    }
}
