//! Measuring how well a dimension reduction preserves k-nearest-neighbor sets.
//!
//! The pipeline is: load a [`VectorSet`], reduce it with PCA or classical MDS
//! ([`reduce`]), build exact k-neighbor tables in both spaces
//! ([`knn::knn_table`]) and compare them ([`opm::accuracy`]). Sweeping that
//! over subsample sizes `m` and target dimensions `n` ([`harness`]) yields
//! accuracy curves, to which [`fit::fit_law`] fits
//! `accuracy = c0 * ln(n / m) + c1`; [`fit::recommend_dim`] inverts the fitted
//! law to suggest a target dimension.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below are what the CLI uses.

pub mod cli;
pub mod eigen;
pub mod fit;
pub mod harness;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod opm;
pub mod reduce;
pub mod scalar;
pub mod vectors;

pub use fit::{fit_law, recommend_dim, FitResult, Recommendation, Sample};
pub use harness::{run_sweep, summarize, DimGrid, SweepConfig, SweepRecord};
pub use io::{load_vectors, save_vectors, Dtype, Format};
pub use knn::{knn_table, KnnTable, NeighborSet};
pub use metrics::{pairwise_distances, Metric};
pub use opm::{accuracy, AccuracyReport, IndexSubset, MeasureContext};
pub use reduce::{reduce, Method, ReducerConfig, ReductionResult};
pub use scalar::Scalar;
pub use vectors::{PointId, VectorSet};

pub type VectorSet64 = VectorSet<f64>;
pub type VectorSet32 = VectorSet<f32>;
pub type AccuracyReport64 = AccuracyReport<f64>;
pub type ReductionResult64 = ReductionResult<f64>;
pub type FitResult64 = FitResult<f64>;
pub type Recommendation64 = Recommendation<f64>;
pub type SweepRecord64 = SweepRecord<f64>;
