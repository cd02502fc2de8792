//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// A real scalar the library can compute with: `f32` or `f64`.
///
/// File I/O always widens to or narrows from the on-disk dtype through
/// [`NumCast`], so any `Scalar` can be loaded from either payload width.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a count to the scalar type.
    fn from_count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable as float")
    }

    /// Lossy conversion to `f64`, for reporting.
    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
