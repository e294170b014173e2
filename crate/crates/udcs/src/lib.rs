//! Remote generation of continuous random variables over a one-way bit
//! channel: an encoder samples from a distribution it knows, names a dyadic
//! cube inside the relevant set with a prefix-free integer code, and a
//! decoder reproduces an exact sample by drawing uniformly inside that cube.
//!
//! The crate is organized bottom-up:
//! - [`entropy_codes`]: bit strings and universal integer codes;
//! - [`regions`]: axis boxes, ellipsoids, user regions, erosion entropy;
//! - [`densities`]: built-in densities and their superlevel regions;
//! - [`dyadic`]: dyadic cubes and decompositions into (cube, mass) atoms;
//! - [`codec`]: cube serialization, the two schemes, stream framing;
//! - [`analysis`]: expected lengths, closed-form bounds, the implied
//!   distribution and its relative-entropy lower bound;
//! - [`bell`]: the one-way correlation protocol and its length sweep.
//!
//! Scalar arithmetic is generic over [`Real`] (implemented for `f32` and
//! `f64`); the `*64` aliases at the crate root fix `f64` for the common case.

pub mod analysis;
pub mod bell;
pub mod codec;
pub mod densities;
pub mod dyadic;
pub mod entropy_codes;
mod error;
pub mod real;
pub mod regions;

pub use error::{Error, Result};
pub use real::Real;

pub type AxisBox64 = regions::AxisBox<f64>;
pub type Ellipsoid64 = regions::Ellipsoid<f64>;
pub type GenericRegion64 = regions::GenericRegion<f64>;
pub type Gaussian1d64 = densities::Gaussian1d<f64>;
pub type ShiftedExponential64 = densities::ShiftedExponential<f64>;
pub type BellCosine64 = densities::BellCosine<f64>;
pub type BellUnit64 = densities::BellUnit<f64>;
pub type UniformOn64 = densities::UniformOn<f64>;
pub type LengthReport64 = analysis::LengthReport<f64>;
pub type ImpliedDistribution64 = analysis::ImpliedDistribution<f64>;

/// A Monte Carlo estimate: sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<F> {
    pub value: F,
    pub stderr: F,
}
