//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::Serialize;

/// Real field the game, oracle and solver code is generic over.
///
/// Implemented for `f32` and `f64`. Random draws are always produced in `f64`
/// and converted, so a seeded run visits the same sample path regardless of
/// the working precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + Serialize + 'static
{
    /// Converts an `f64` literal into the working precision.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Smallest absolute tolerance that iterative routines can be asked to
    /// reach in this precision.
    fn tol_floor() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    /// Clamps a requested tolerance to what the precision can deliver.
    fn achievable(tol: f64) -> Self {
        Self::lit(tol).max(Self::tol_floor())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts a slice of `f64` into the working precision.
pub fn convert_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Converts a slice back to `f64` for serialization.
pub fn to_f64_vec<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| x.as_f64()).collect()
}
