//! Scalar abstraction: every numeric kernel in this crate is generic over the
//! floating-point type. `f64` is the default throughout the aliases exported
//! from the crate root; `f32` works wherever the tolerances allow it.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solvers, schedules and certifiers.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<Self>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent finite `f64` values at
/// all, which no supported scalar does.
#[inline]
pub fn real<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("finite f64 constant must be representable")
}

/// Converts an iteration count into the working scalar type.
#[inline]
pub fn real_u64<S: Real>(t: u64) -> S {
    real(t as f64)
}
