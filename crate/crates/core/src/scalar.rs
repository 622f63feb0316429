use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by every model, loss and trainer in this crate.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Clipping margin applied to probabilities before any logarithm.
    fn prob_epsilon() -> Self;

    /// Lossless-enough conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn prob_epsilon() -> Self {
        1e-7
    }
}

impl Scalar for f64 {
    fn prob_epsilon() -> Self {
        1e-7
    }
}

/// Logistic function, evaluated in the numerically stable branch for each sign.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Clamp a probability into `[eps, 1 - eps]`.
pub fn clip_probability<T: Scalar>(p: T) -> T {
    let eps = T::prob_epsilon();
    p.max(eps).min(T::one() - eps)
}
