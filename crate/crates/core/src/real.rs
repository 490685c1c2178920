//! Scalar abstraction.
//!
//! Every estimator in the crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The `f64` instantiation is the one the
//! CLI and the golden tests use; `f32` is supported for the measure and
//! smoothing layers where single precision is meaningful.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Error function.
    fn erf(self) -> Self;

    /// Complementary error function, accurate in the upper tail.
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for the literals used here.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(requested, 16 ulp)`: a tolerance the type can actually honor.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(16.0);
        Self::lit(requested).max(floor)
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf<S: Real>(u: S) -> S {
    (-(u * u) / S::lit(2.0)).exp() / (S::TAU()).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf<S: Real>(u: S) -> S {
    S::lit(0.5) * (-u / S::SQRT_2()).erfc()
}

/// `Φ(hi) − Φ(lo)` without cancellation in either tail.
pub fn std_normal_mass<S: Real>(lo: S, hi: S) -> S {
    let half = S::lit(0.5);
    if lo >= S::zero() {
        // upper tail: Q(lo) - Q(hi)
        half * ((lo / S::SQRT_2()).erfc() - (hi / S::SQRT_2()).erfc())
    } else if hi <= S::zero() {
        half * ((-hi / S::SQRT_2()).erfc() - (-lo / S::SQRT_2()).erfc())
    } else {
        half * ((hi / S::SQRT_2()).erf() - (lo / S::SQRT_2()).erf())
    }
}

/// `x log x` with the `0 · log 0 = 0` convention and densities below
/// 1e-300 treated as zero.
#[inline]
pub fn xlogx<S: Real>(x: S) -> S {
    if x <= S::min_positive_value().max(S::lit(1e-300)) {
        S::zero()
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_helpers() {
        assert!((std_normal_pdf(0.0_f64) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((std_normal_cdf(0.0_f64) - 0.5).abs() < 1e-16);
        // deep upper tail keeps relative accuracy
        let m = std_normal_mass(10.0_f64, 11.0);
        let q10 = 7.619_853_024_160_527e-24;
        assert!(((m - q10) / q10).abs() < 1e-3, "{m}");
        assert!((std_normal_mass(-1.0_f64, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!((std_normal_mass(-1.0_f32, 1.0) - 0.682_689_5).abs() < 1e-6);
    }

    #[test]
    fn xlogx_convention() {
        assert_eq!(xlogx(0.0_f64), 0.0);
        assert_eq!(xlogx(1e-301_f64), 0.0);
        assert!((xlogx(2.0_f64) - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tolerance_floor_for_single_precision() {
        assert!(f32::tol(1e-12) > 1e-7);
        assert_eq!(f64::tol(1e-9), 1e-9);
    }
}
