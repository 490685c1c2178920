//! Entropy-dimension estimation for probability measures on the real line.

// `!(x > 0)` is the NaN-rejecting form used throughout; series constants
// are kept at their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod basis;
pub mod bochner;
pub mod curve;
pub mod dimension;
pub mod entropy;
pub mod error;
pub mod fisher;
pub mod freedim;
pub mod linalg;
pub mod measure;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod smoothing;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

pub type Measure = measure::Measure<f64>;
pub type Measure32 = measure::Measure<f32>;
pub type Kernel = smoothing::Kernel<f64>;
pub type Kernel32 = smoothing::Kernel<f32>;
pub type SmoothedDensity<'a> = smoothing::SmoothedDensity<'a, f64>;
pub type SmoothedDensity32<'a> = smoothing::SmoothedDensity<'a, f32>;
pub type TestFunctionBasis = basis::TestFunctionBasis<f64>;
pub type MapSpec = measure::MapSpec<f64>;
