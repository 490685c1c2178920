//! Scaling curves: values sampled on a geometric grid of scales and a least
//! squares fit against `|log t|`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// `points` scales from `max` down to `min`, geometrically spaced.
pub fn geometric_grid<S: Real>(max: S, min: S, points: usize) -> Result<Vec<S>> {
    if !(min > S::zero() && min < max && max.is_finite()) {
        return Err(Error::arg("grid", format!("need 0 < min < max, got [{min}, {max}]")));
    }
    if points < 2 {
        return Err(Error::arg("points", "need at least 2 grid points"));
    }
    let ratio = (min / max).ln() / S::from_usize_lossy(points - 1);
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                min
            } else {
                max * (ratio * S::from_usize_lossy(i)).exp()
            }
        })
        .collect())
}

/// `∫_{x_i}^{x_0} g(y) dy` for a decreasing positive grid `x`, from the
/// samples `y g(y)` by the trapezoid rule in `log y`. Suited to integrands
/// that behave like `1/y`, for which `y g(y)` is slowly varying.
pub fn cumulative_log_trapezoid(x: &[f64], yg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        if i > 0 {
            acc += 0.5 * (yg[i - 1] + yg[i]) * (x[i - 1].ln() - x[i].ln());
        }
        out.push(acc);
    }
    out
}

/// Which points enter the fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    /// Leading (largest-scale) points treated as transient.
    pub skip_largest: usize,
    /// Points with a scale above this are excluded.
    pub max_scale: Option<f64>,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            skip_largest: 5,
            max_scale: None,
        }
    }
}

/// Ordinary least squares of `value` on `|log t|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    /// Half-open index range `[start, end)` the fit was taken over.
    pub window: (usize, usize),
    /// Points actually used (flagged ones are skipped).
    pub used: usize,
}

/// Sampled `(t, value)` pairs and their fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingCurve {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub value_errors: Vec<f64>,
    pub flagged: Vec<bool>,
    pub fit: Fit,
}

impl ScalingCurve {
    /// Builds the curve; `abscissa` must be strictly decreasing and positive.
    pub fn new(
        abscissa: Vec<f64>,
        values: Vec<f64>,
        value_errors: Vec<f64>,
        flagged: Vec<bool>,
        window: FitWindow,
    ) -> Result<Self> {
        let n = abscissa.len();
        if values.len() != n || value_errors.len() != n || flagged.len() != n {
            return Err(Error::arg("curve", "column lengths differ"));
        }
        if abscissa.iter().any(|&t| !(t > 0.0))
            || abscissa.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::arg("abscissa", "must be positive and strictly decreasing"));
        }
        let start = window.skip_largest.min(n.saturating_sub(2));
        let x: Vec<f64> = abscissa.iter().map(|t| t.ln().abs()).collect();
        let keep: Vec<usize> = (start..n)
            .filter(|&i| !flagged[i] && values[i].is_finite())
            .filter(|&i| window.max_scale.is_none_or(|m| abscissa[i] <= m))
            .collect();
        let fit = ols(&keep, &x, &values, (start, n));
        Ok(ScalingCurve {
            abscissa,
            values,
            value_errors,
            flagged,
            fit,
        })
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Spread of the local slopes `Δvalue / Δ|log t|` across the fit window,
    /// as `(min, max)`: a coarse view of the lower and upper envelopes.
    pub fn local_slope_range(&self) -> (f64, f64) {
        let (s, e) = self.fit.window;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let idx: Vec<usize> = (s..e).filter(|&i| !self.flagged[i]).collect();
        for w in idx.windows(2) {
            let dx = self.abscissa[w[1]].ln().abs() - self.abscissa[w[0]].ln().abs();
            let k = (self.values[w[1]] - self.values[w[0]]) / dx;
            lo = lo.min(k);
            hi = hi.max(k);
        }
        (lo, hi)
    }
}

fn ols(keep: &[usize], x: &[f64], y: &[f64], window: (usize, usize)) -> Fit {
    let m = keep.len();
    if m < 2 {
        return Fit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r2: 0.0,
            slope_se: f64::INFINITY,
            window,
            used: m,
        };
    }
    let mf = m as f64;
    let mx = keep.iter().map(|&i| x[i]).sum::<f64>() / mf;
    let my = keep.iter().map(|&i| y[i]).sum::<f64>() / mf;
    let sxx: f64 = keep.iter().map(|&i| (x[i] - mx).powi(2)).sum();
    let sxy: f64 = keep.iter().map(|&i| (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = keep.iter().map(|&i| (y[i] - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = keep
        .iter()
        .map(|&i| (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_se = if m > 2 {
        (ssr / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Fit {
        slope,
        intercept,
        r2,
        slope_se,
        window,
        used: m,
    }
}
