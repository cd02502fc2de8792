//! Fitting and inverting the accuracy law `A = c0 * ln(n / m) + c1`.
//!
//! `n` is the reduced dimension and `m` the number of points. The natural log
//! is used throughout; a different base only rescales `c0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("all samples share one n/m ratio; slope is unidentifiable")]
    DegenerateDesign,
    #[error("sample {index}: {reason}")]
    InvalidSample { index: usize, reason: String },
    #[error("slope c0 = {0} is not positive; the law cannot be inverted")]
    NonPositiveSlope(f64),
    #[error("target accuracy {0} outside (0, 1]")]
    InvalidTarget(f64),
    #[error("need m >= 2 and max_dim >= 1 (got m = {m}, max_dim = {max_dim})")]
    InvalidBounds { m: usize, max_dim: usize },
}

/// One observed `(n, m, accuracy)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub n: usize,
    pub m: usize,
    pub accuracy: T,
}

impl<T: Scalar> Sample<T> {
    pub fn new(n: usize, m: usize, accuracy: T) -> Self {
        Self { n, m, accuracy }
    }

    pub fn log_ratio(&self) -> T {
        (T::from_count(self.n) / T::from_count(self.m)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub c0: T,
    pub c1: T,
    pub r_squared: T,
    pub n_points: usize,
}

impl<T: Scalar> FitResult<T> {
    /// Raw line value at `(n, m)`; may fall outside `[0, 1]`.
    pub fn predict_raw(&self, n: usize, m: usize) -> T {
        self.c0 * (T::from_count(n) / T::from_count(m)).ln() + self.c1
    }

    /// Line value clamped to a valid accuracy, for display.
    pub fn predict(&self, n: usize, m: usize) -> T {
        self.predict_raw(n, m).max(T::zero()).min(T::one())
    }

    /// Residuals `accuracy - prediction`, in sample order.
    pub fn residuals(&self, samples: &[Sample<T>]) -> Vec<T> {
        samples
            .iter()
            .map(|s| s.accuracy - (self.c0 * s.log_ratio() + self.c1))
            .collect()
    }
}

/// Ordinary least squares of accuracy against `ln(n / m)`.
pub fn fit_law<T: Scalar>(samples: &[Sample<T>]) -> Result<FitResult<T>, FitError> {
    if samples.len() < 2 {
        return Err(FitError::InsufficientSamples(samples.len()));
    }
    for (index, s) in samples.iter().enumerate() {
        let invalid = |reason: String| FitError::InvalidSample { index, reason };
        if s.n == 0 {
            return Err(invalid("n must be at least 1".into()));
        }
        if s.m < s.n {
            return Err(invalid(format!("m = {} is smaller than n = {}", s.m, s.n)));
        }
        if !(s.accuracy >= T::zero() && s.accuracy <= T::one()) {
            return Err(invalid(format!("accuracy {} outside [0, 1]", s.accuracy)));
        }
    }
    let first = samples[0];
    // Compare ratios as exact rationals.
    if samples.iter().all(|s| s.n * first.m == first.n * s.m) {
        return Err(FitError::DegenerateDesign);
    }

    let count = T::from_count(samples.len());
    let xs: Vec<T> = samples.iter().map(Sample::log_ratio).collect();
    let x_mean = xs.iter().copied().sum::<T>() / count;
    let y_mean = samples.iter().map(|s| s.accuracy).sum::<T>() / count;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (x, s) in xs.iter().zip(samples) {
        let dx = *x - x_mean;
        let dy = s.accuracy - y_mean;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let c0 = sxy / sxx;
    let c1 = y_mean - c0 * x_mean;
    let ss_res: T = xs
        .iter()
        .zip(samples)
        .map(|(&x, s)| {
            let r = s.accuracy - (c0 * x + c1);
            r * r
        })
        .sum();
    let r_squared = if syy == T::zero() {
        if ss_res == T::zero() {
            T::one()
        } else {
            T::neg_infinity()
        }
    } else {
        T::one() - ss_res / syy
    };
    Ok(FitResult {
        c0,
        c1,
        r_squared,
        n_points: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation<T> {
    pub target_accuracy: T,
    pub m: usize,
    pub recommended_dim: usize,
    pub clamped: bool,
}

/// Smallest dimension the fitted law predicts reaches `target_accuracy` for
/// `m` points: `ceil(m * exp((target - c1) / c0))`, clamped to
/// `[1, min(m - 1, max_dim)]`.
pub fn recommend_dim<T: Scalar>(
    fit: &FitResult<T>,
    target_accuracy: T,
    m: usize,
    max_dim: usize,
) -> Result<Recommendation<T>, FitError> {
    if fit.c0.is_nan() || fit.c0 <= T::zero() {
        return Err(FitError::NonPositiveSlope(fit.c0.to_f64_lossy()));
    }
    if !(target_accuracy > T::zero() && target_accuracy <= T::one()) {
        return Err(FitError::InvalidTarget(target_accuracy.to_f64_lossy()));
    }
    if m < 2 || max_dim == 0 {
        return Err(FitError::InvalidBounds { m, max_dim });
    }
    let upper = (m - 1).min(max_dim);
    let raw = T::from_count(m) * ((target_accuracy - fit.c1) / fit.c0).exp();
    let rounded = raw.ceil();
    let (recommended_dim, clamped) = if rounded < T::one() {
        (1, true)
    } else if rounded > T::from_count(upper) {
        (upper, true)
    } else {
        (rounded.to_usize().unwrap_or(upper), false)
    };
    Ok(Recommendation {
        target_accuracy,
        m,
        recommended_dim,
        clamped,
    })
}
