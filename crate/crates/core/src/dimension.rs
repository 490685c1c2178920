//! Classical entropy dimension `δ_c`.
//!
//! Two routes live here. The entropy route fits `H(μ_t)` against `|log t|`
//! and reports `1 − slope`. The fractal route averages the local quantity
//! `−log μ[y − t/2, y + t/2]` over `y ~ μ` and fits that average against
//! `|log t|`; the slope is the estimate. Fitting the average itself rather
//! than the ratio with `|log t|` removes the `O(1/|log t|)` offset from the
//! constant in `μ[x − t/2, x + t/2] ≈ c t^α`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{geometric_grid, FitWindow, ScalingCurve};
use crate::entropy::{entropy_curve, CurveOptions};
use crate::error::Result;
use crate::measure::{MapSpec, Measure};
use crate::real::Real;
use crate::rng::{task_rng, DEFAULT_SEED};
use crate::smoothing::Kernel;

/// Multiplier on the slope standard error in a confidence half-width.
pub const CONFIDENCE_Z: f64 = 2.0;

/// Added to every confidence half-width: the bias a finite scale range
/// leaves in a slope even when the residuals are tiny.
pub const CONFIDENCE_FLOOR: f64 = 0.02;

/// `r²` below which an estimate whose slope is not pinned down is flagged.
pub const MIN_R2: f64 = 0.95;

/// Default fractal-route draws per scale.
pub const FRACTAL_SAMPLES: usize = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    EntropySlope,
    FractalAverage,
    FisherRoute,
    BochnerRoute,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::EntropySlope => "entropy-slope",
            Route::FractalAverage => "fractal-average",
            Route::FisherRoute => "fisher-route",
            Route::BochnerRoute => "bochner-route",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: Route,
    pub curve: ScalingCurve,
    /// Half-width.
    pub confidence: f64,
    pub flagged: bool,
    /// Route-specific diagnostics.
    pub notes: Vec<(String, f64)>,
}

impl DimensionEstimate {
    /// `value` from a curve fit with slope `s`: `1 − s` or `s`.
    pub(crate) fn from_curve(curve: ScalingCurve, method: Route, complement: bool) -> Self {
        let slope = curve.fit.slope;
        let value = if complement { 1.0 - slope } else { slope };
        let confidence = CONFIDENCE_Z * curve.fit.slope_se + CONFIDENCE_FLOOR;
        let flagged = !value.is_finite()
            || (curve.fit.r2 < MIN_R2 && curve.fit.slope_se > CONFIDENCE_FLOOR / 2.0);
        DimensionEstimate {
            value,
            method,
            curve,
            confidence,
            flagged,
            notes: Vec::new(),
        }
    }

    /// `|self − other| ≤ self.confidence + other.confidence`.
    pub fn agrees_with(&self, other: &DimensionEstimate) -> bool {
        (self.value - other.value).abs() <= self.confidence + other.confidence
    }

    pub fn note(&self, key: &str) -> Option<f64> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// 25 scales from 1e-1 to 1e-4.
pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-4, 25).expect("valid default grid")
}

/// `δ_c = 1 − slope of H(μ_t)` against `|log t|`.
pub fn delta_c_entropy<S: Real>(
    mu: &Measure<S>,
    kernel: &Kernel<S>,
    t_grid: &[S],
    opts: &CurveOptions,
) -> Result<DimensionEstimate> {
    let curve = entropy_curve(mu, kernel, t_grid, opts)?;
    Ok(DimensionEstimate::from_curve(curve, Route::EntropySlope, true))
}

/// Settings for [`delta_c_fractal`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractalOptions {
    pub samples: usize,
    pub seed: u64,
    pub window: FitWindow,
}

impl Default for FractalOptions {
    fn default() -> Self {
        FractalOptions {
            samples: FRACTAL_SAMPLES,
            seed: DEFAULT_SEED,
            window: FitWindow::default(),
        }
    }
}

/// `δ_c` as the slope of `E_μ[−log μ[y − t/2, y + t/2]]` against `|log t|`.
///
/// Draws whose window mass is zero (only possible through bracketing at the
/// recursion cap) are redrawn; the count is reported as the note
/// `"resampled"`. The notes `"envelope_low"` and `"envelope_high"` are the
/// extreme local slopes inside the fit window.
pub fn delta_c_fractal<S: Real>(
    mu: &Measure<S>,
    t_grid: &[S],
    opts: &FractalOptions,
) -> Result<DimensionEstimate> {
    if opts.samples < 2 {
        return Err(crate::Error::arg("samples", "need at least 2 draws per scale"));
    }
    let half = S::lit(0.5);
    let rows: Vec<(f64, f64, usize)> = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = task_rng(opts.seed, i as u64);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            let mut resampled = 0usize;
            let mut taken = 0usize;
            while taken < opts.samples {
                let y = mu.sample_one(&mut rng);
                let m = mu.interval_mass(y - half * t, y + half * t).value();
                if !(m > S::zero()) {
                    resampled += 1;
                    if resampled > 100 * opts.samples {
                        break;
                    }
                    continue;
                }
                let d = -m.to_f64_lossy().ln();
                sum += d;
                sum2 += d * d;
                taken += 1;
            }
            let n = taken.max(1) as f64;
            let mean = sum / n;
            let var = ((sum2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
            (mean, (var / n).sqrt(), resampled)
        })
        .collect();
    let n = t_grid.len();
    let curve = ScalingCurve::new(
        t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        vec![false; n],
        opts.window,
    )?;
    let (lo, hi) = curve.local_slope_range();
    let mut est = DimensionEstimate::from_curve(curve, Route::FractalAverage, false);
    est.notes.push((
        "resampled".into(),
        rows.iter().map(|r| r.2).sum::<usize>() as f64,
    ));
    est.notes.push(("envelope_low".into(), lo));
    est.notes.push(("envelope_high".into(), hi));
    Ok(est)
}

/// Estimates under several kernels.
#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub estimates: Vec<(String, DimensionEstimate)>,
    pub max_difference: f64,
    /// True when every pair agrees within its combined confidence.
    pub consistent: bool,
}

pub fn kernel_independence_report<S: Real>(
    mu: &Measure<S>,
    kernels: &[Kernel<S>],
    t_grid: &[S],
    opts: &CurveOptions,
) -> Result<KernelReport> {
    if kernels.len() < 2 {
        return Err(crate::Error::arg("kernels", "need at least two kernels"));
    }
    let estimates: Vec<(String, DimensionEstimate)> = kernels
        .iter()
        .map(|k| Ok((k.label(), delta_c_entropy(mu, k, t_grid, opts)?)))
        .collect::<Result<_>>()?;
    let mut max_difference: f64 = 0.0;
    let mut consistent = true;
    for (i, (_, a)) in estimates.iter().enumerate() {
        for (_, b) in &estimates[i + 1..] {
            max_difference = max_difference.max((a.value - b.value).abs());
            consistent &= a.agrees_with(b);
        }
    }
    Ok(KernelReport {
        estimates,
        max_difference,
        consistent,
    })
}

/// Dimension of a mixture against the weighted dimensions of its parts.
#[derive(Clone, Debug, Serialize)]
pub struct AffinityReport {
    pub lhs: DimensionEstimate,
    pub rhs: f64,
    pub rhs_confidence: f64,
    pub consistent: bool,
}

pub fn affinity_report<S: Real>(
    components: &[(S, Measure<S>)],
    kernel: &Kernel<S>,
    t_grid: &[S],
    opts: &CurveOptions,
) -> Result<AffinityReport> {
    let mixture = Measure::mixture(components.to_vec())?;
    let lhs = delta_c_entropy(&mixture, kernel, t_grid, opts)?;
    let mut rhs = 0.0;
    let mut rhs_confidence = 0.0;
    for (a, m) in components {
        let e = delta_c_entropy(m, kernel, t_grid, opts)?;
        let a = a.to_f64_lossy();
        rhs += a * e.value;
        rhs_confidence += a * e.confidence;
    }
    let consistent = (lhs.value - rhs).abs() <= lhs.confidence + rhs_confidence;
    Ok(AffinityReport {
        lhs,
        rhs,
        rhs_confidence,
        consistent,
    })
}

/// Dimension of `μ` and of its push-forward.
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub base: DimensionEstimate,
    pub pushed: DimensionEstimate,
    pub consistent: bool,
}

pub fn lipschitz_invariance_report<S: Real>(
    mu: &Measure<S>,
    map: &MapSpec<S>,
    kernel: &Kernel<S>,
    t_grid: &[S],
    opts: &CurveOptions,
) -> Result<LipschitzReport> {
    let pushed_measure = Measure::pushforward(mu.clone(), map.clone())?;
    let base = delta_c_entropy(mu, kernel, t_grid, opts)?;
    let pushed = delta_c_entropy(&pushed_measure, kernel, t_grid, opts)?;
    let consistent = base.agrees_with(&pushed);
    Ok(LipschitzReport {
        base,
        pushed,
        consistent,
    })
}
