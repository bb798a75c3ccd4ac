use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the solver stack is generic over (f32 or f64).
///
/// Tolerances are per type: f32 cannot resolve the f64 thresholds, so each
/// implementation picks values that sit a few orders of magnitude above its
/// machine epsilon.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute primal feasibility tolerance.
    fn feas_tol() -> Self;
    /// Relative optimality (reduced cost) tolerance.
    fn opt_tol() -> Self;
    /// Smallest pivot element accepted by the ratio test.
    fn pivot_tol() -> Self;

    /// Lossy conversion from an f64 literal.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn feas_tol() -> Self {
        1e-9
    }
    fn opt_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-11
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-4
    }
    fn opt_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-6
    }
}
