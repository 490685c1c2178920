//! Bi-Lipschitz maps of the real line.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::task_rng;

/// Number of random pairs checked against the declared Lipschitz constants.
pub const CERTIFICATION_PAIRS: usize = 1000;

type ScalarFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// The functional form of a strictly monotone map.
#[derive(Clone)]
pub enum MapKind<S: Real = f64> {
    /// `x ↦ scale·x + shift`
    Affine { scale: S, shift: S },
    /// `x ↦ slope·x + amplitude·sin x + shift`, monotone when `|amplitude| < |slope|`.
    LinearPlusSine { slope: S, amplitude: S, shift: S },
    /// Arbitrary user map with its inverse.
    Custom {
        label: String,
        forward: ScalarFn<S>,
        inverse: ScalarFn<S>,
    },
}

impl<S: Real> fmt::Debug for MapKind<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Affine { scale, shift } => write!(f, "Affine({scale}·x + {shift})"),
            MapKind::LinearPlusSine {
                slope,
                amplitude,
                shift,
            } => write!(f, "LinearPlusSine({slope}·x + {amplitude}·sin x + {shift})"),
            MapKind::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl<S: Real> MapKind<S> {
    pub fn eval(&self, x: S) -> S {
        match self {
            MapKind::Affine { scale, shift } => *scale * x + *shift,
            MapKind::LinearPlusSine {
                slope,
                amplitude,
                shift,
            } => *slope * x + *amplitude * x.sin() + *shift,
            MapKind::Custom { forward, .. } => forward(x),
        }
    }

    fn derivative(&self, x: S) -> Option<S> {
        match self {
            MapKind::Affine { scale, .. } => Some(*scale),
            MapKind::LinearPlusSine {
                slope, amplitude, ..
            } => Some(*slope + *amplitude * x.cos()),
            MapKind::Custom { .. } => None,
        }
    }
}

/// A strictly monotone map together with certified constants
/// `m|x−y| ≤ |f(x)−f(y)| ≤ M|x−y|`.
#[derive(Clone, Debug)]
pub struct MapSpec<S: Real = f64> {
    kind: MapKind<S>,
    lower: S,
    upper: S,
    increasing: bool,
}

impl<S: Real> MapSpec<S> {
    /// Builds the map and spot-checks the declared constants on
    /// [`CERTIFICATION_PAIRS`] random pairs drawn from `probe` (widened to at
    /// least unit length). Construction fails on the first violation.
    pub fn new(kind: MapKind<S>, lower: S, upper: S, probe: (S, S)) -> Result<Self> {
        if !(lower > S::zero() && lower <= upper && upper.is_finite()) {
            return Err(Error::LipschitzCertification(format!(
                "constants must satisfy 0 < m <= M < inf, got m = {lower}, M = {upper}"
            )));
        }
        if let MapKind::Affine { scale, .. } = &kind {
            if *scale == S::zero() {
                return Err(Error::LipschitzCertification("affine scale is zero".into()));
            }
        }
        let (mut lo, mut hi) = probe;
        let mid = (lo + hi) / S::lit(2.0);
        if hi - lo < S::one() {
            lo = mid - S::lit(0.5);
            hi = mid + S::lit(0.5);
        }
        let increasing = kind.eval(hi) > kind.eval(lo);
        let map = MapSpec {
            kind,
            lower,
            upper,
            increasing,
        };
        map.certify(lo, hi)?;
        Ok(map)
    }

    /// Shorthand for `x ↦ scale·x + shift`, with `m = M = |scale|`.
    pub fn affine(scale: S, shift: S) -> Result<Self> {
        let c = scale.abs();
        Self::new(MapKind::Affine { scale, shift }, c, c, (-S::one(), S::one()))
    }

    fn certify(&self, lo: S, hi: S) -> Result<()> {
        let mut rng = task_rng(0x11F5_C0DE, 0);
        let slack = S::tol(1e-9);
        let width = (hi - lo).to_f64_lossy();
        let lo64 = lo.to_f64_lossy();
        for _ in 0..CERTIFICATION_PAIRS {
            let x = S::lit(lo64 + width * rng.gen::<f64>());
            let y = S::lit(lo64 + width * rng.gen::<f64>());
            if x == y {
                continue;
            }
            let dx = (x - y).abs();
            let df = self.apply(x) - self.apply(y);
            let sign_ok = (df > S::zero()) == ((x > y) == self.increasing);
            let df = df.abs();
            if !sign_ok
                || df < self.lower * dx * (S::one() - slack)
                || df > self.upper * dx * (S::one() + slack)
            {
                return Err(Error::LipschitzCertification(format!(
                    "{:?}: |f({x}) - f({y})| = {df} outside [{}, {}]·{dx}",
                    self.kind, self.lower, self.upper
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &MapKind<S> {
        &self.kind
    }

    /// Lower Lipschitz constant `m`.
    pub fn lower_constant(&self) -> S {
        self.lower
    }

    /// Upper Lipschitz constant `M`.
    pub fn upper_constant(&self) -> S {
        self.upper
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    #[inline]
    pub fn apply(&self, x: S) -> S {
        self.kind.eval(x)
    }

    /// Local slope `f'(x)`, by central differences for custom maps.
    pub fn slope_at(&self, x: S) -> S {
        self.kind.derivative(x).unwrap_or_else(|| {
            let h = S::lit(1e-6) * (S::one() + x.abs());
            (self.apply(x + h) - self.apply(x - h)) / (h + h)
        })
    }

    pub fn inverse(&self, y: S) -> S {
        match &self.kind {
            MapKind::Affine { scale, shift } => (y - *shift) / *scale,
            MapKind::Custom { inverse, .. } => inverse(y),
            MapKind::LinearPlusSine { .. } => self.invert_by_bracketing(y),
        }
    }

    /// Inverse via the Lipschitz bracket `|f⁻¹(y) − x0| ≤ |f(x0) − y| / m`,
    /// refined by Newton steps that fall back to bisection whenever a step
    /// leaves the bracket.
    fn invert_by_bracketing(&self, y: S) -> S {
        if !y.is_finite() {
            return if (y > S::zero()) == self.increasing {
                S::infinity()
            } else {
                S::neg_infinity()
            };
        }
        let x0 = match &self.kind {
            MapKind::LinearPlusSine { slope, shift, .. } => (y - *shift) / *slope,
            _ => S::zero(),
        };
        let r = (self.apply(x0) - y).abs() / self.lower * S::lit(1.01) + S::epsilon();
        let (mut lo, mut hi) = (x0 - r, x0 + r);
        let sign = if self.increasing { S::one() } else { -S::one() };
        // g(x) = ±(f(x) − y) is increasing
        let g = |x: S| sign * (self.apply(x) - y);
        let mut x = x0;
        for _ in 0..200 {
            let gx = g(x);
            if gx == S::zero() {
                return x;
            }
            if gx < S::zero() {
                lo = x;
            } else {
                hi = x;
            }
            let d = sign * self.slope_at(x);
            let mut next = x - gx / d;
            if !(next > lo && next < hi) || d <= S::zero() {
                next = lo + (hi - lo) / S::lit(2.0);
            }
            if next <= lo || next >= hi || (next - x).abs() <= S::epsilon() * x.abs() {
                return next.max(lo).min(hi);
            }
            x = next;
        }
        x
    }
}
