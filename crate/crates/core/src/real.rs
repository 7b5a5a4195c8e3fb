//! Scalar abstraction for all solver arithmetic.
//!
//! Every core type is generic over [`Real`], which bundles the numeric
//! traits the algorithms rely on and adds the error-function entry points
//! behind the service-level objective. `f64` is the reference
//! implementation; `f32` routes through the `f64` kernels and rounds once
//! at the end. Concrete aliases for the `f64` configuration live at the
//! crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::normal;

/// Floating-point scalar usable throughout the solver.
///
/// `Display`/`FromStr` are required so instances round-trip losslessly
/// through the text formats (Rust's shortest-representation float printing
/// guarantees `parse(format(x)) == x`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Display
    + Debug
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Error function.
    fn erf(self) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// `ln(erfc(self))`, stable far into the right tail where `erfc`
    /// itself underflows to zero.
    fn ln_erfc(self) -> Self;

    /// Lossless shortcut for constants that originate as `f64` literals.
    fn cast(value: f64) -> Self;
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> f64 {
        normal::erf64(self)
    }

    #[inline]
    fn erfc(self) -> f64 {
        normal::erfc64(self)
    }

    #[inline]
    fn ln_erfc(self) -> f64 {
        normal::ln_erfc64(self)
    }

    #[inline]
    fn cast(value: f64) -> f64 {
        value
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> f32 {
        normal::erf64(f64::from(self)) as f32
    }

    #[inline]
    fn erfc(self) -> f32 {
        normal::erfc64(f64::from(self)) as f32
    }

    #[inline]
    fn ln_erfc(self) -> f32 {
        normal::ln_erfc64(f64::from(self)) as f32
    }

    #[inline]
    fn cast(value: f64) -> f32 {
        value as f32
    }
}
