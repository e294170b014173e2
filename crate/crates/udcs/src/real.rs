use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

/// Scalar abstraction for everything numeric in the crate. Implemented for
/// `f32` and `f64`; all algorithms are written against this trait so the
/// whole pipeline can be instantiated at either precision.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (identity for `f64`).
    fn of(x: f64) -> Self;

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64;

    /// One uniform draw from `[0, 1)`.
    fn unit(rng: &mut dyn RngCore) -> Self;

    /// One standard-normal draw.
    fn standard_normal(rng: &mut dyn RngCore) -> Self;

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }

    /// log2(e); multiplying a natural log by this yields a base-2 log.
    fn log2_e() -> Self {
        Self::of(std::f64::consts::LOG2_E)
    }

    fn pi() -> Self {
        Self::of(std::f64::consts::PI)
    }

    fn two_pi() -> Self {
        Self::of(std::f64::consts::TAU)
    }
}

impl Real for f64 {
    fn of(x: f64) -> f64 {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn unit(rng: &mut dyn RngCore) -> f64 {
        rng.random()
    }

    fn standard_normal(rng: &mut dyn RngCore) -> f64 {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    fn of(x: f64) -> f32 {
        x as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn unit(rng: &mut dyn RngCore) -> f32 {
        rng.random()
    }

    fn standard_normal(rng: &mut dyn RngCore) -> f32 {
        StandardNormal.sample(rng)
    }
}
