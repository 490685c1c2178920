//! Fisher information of Gaussian-smoothed measures.
//!
//! `P_s μ = μ * N(0, s)`, the smoothed density at scale `t = √s`. Along the
//! heat flow `∂_s H(P_s μ) = −½ F(P_s μ)` and `0 ≤ s F(P_s μ) ≤ 1`, so
//!
//! ```text
//! δ_c(μ) = 1 − lim ∫_s^1 F(P_u μ) du / |log s|.
//! ```
//!
//! `F` is computed by quadrature of `p′²/p` from the closed-form Gaussian
//! convolution, by Monte Carlo over `E[score(X + √s g)²]`, and from below
//! by the variational formula `F = sup_f (∫ f″ p)² / ∫ f′² p` over a
//! [`TestFunctionBasis`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{moments, TestFunctionBasis};
use crate::curve::{cumulative_log_trapezoid, geometric_grid, FitWindow, ScalingCurve};
use crate::dimension::{DimensionEstimate, Route};
use crate::entropy::{entropy, MASS_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::pinv_quadratic;
use crate::measure::Measure;
use crate::real::Real;
use crate::rng::{derive_seed, task_rng};
use crate::smoothing::{Kernel, SmoothedDensity};

/// `s F` above this aborts a scan.
pub const BOUND_SLACK: f64 = 1.05;

/// Relative de Bruijn residual accepted by [`de_bruijn_check`].
pub const DE_BRUIJN_TOLERANCE: f64 = 0.05;

/// Outer and inner sample counts of [`fisher_monte_carlo`].
pub const MC_POINTS: usize = 4_000;
pub const MC_INNER: usize = 20_000;

/// `P_s μ` as a smoothed density.
pub fn heat_smoothed<S: Real>(mu: &Measure<S>, s: S) -> Result<SmoothedDensity<'_, S>> {
    if !(s > S::zero() && s.is_finite()) {
        return Err(Error::arg("s", format!("heat time must be positive, got {s}")));
    }
    SmoothedDensity::new(mu, &Kernel::Gaussian, s.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FisherValue {
    pub value: f64,
    /// Quadrature error estimate.
    pub error: f64,
    /// `∫ p` by the same quadrature.
    pub mass: f64,
    /// `|1 − mass|`: the part of `P_s μ` the quadrature did not see.
    pub coverage_deficit: f64,
    pub flagged: bool,
}

/// `F(P_s μ) = ∫ p′²/p` by adaptive quadrature. Points where the density
/// underflows are excluded; the mass they carry shows up in
/// `coverage_deficit`.
pub fn fisher_direct<S: Real>(mu: &Measure<S>, s: S) -> Result<FisherValue> {
    let sd = heat_smoothed(mu, s)?;
    let m = moments(&sd, &TestFunctionBasis::empty(), None);
    let deficit = (1.0 - m.mass).abs();
    Ok(FisherValue {
        value: m.fisher,
        error: m.fisher_error + deficit * m.fisher,
        mass: m.mass,
        coverage_deficit: deficit,
        flagged: deficit > MASS_TOLERANCE || !m.fisher.is_finite() || !m.converged,
    })
}

/// Monte Carlo value and standard error of `E[score(Z)²]`, `Z = X + √s g`,
/// with the score estimated from `inner` shared draws of `μ` (independent
/// of the outer draws). Points where the estimated density underflows are
/// skipped; their count is returned third.
pub fn fisher_monte_carlo<S: Real>(
    mu: &Measure<S>,
    s: S,
    points: usize,
    inner: usize,
    seed: u64,
) -> Result<(f64, f64, usize)> {
    if points < 2 {
        return Err(Error::arg("points", "need at least 2 outer draws"));
    }
    let t = s.sqrt();
    let sd = SmoothedDensity::monte_carlo(mu, t, inner, derive_seed(seed, 0))?;
    let mut rng = task_rng(seed, 1);
    let z: Vec<S> = (0..points)
        .map(|_| mu.sample_one(&mut rng) + t * S::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let scores: Vec<Option<f64>> = z
        .par_iter()
        .map(|&x| sd.mc_score(x).ok().map(|e| e.value.to_f64_lossy().powi(2)))
        .collect();
    let kept: Vec<f64> = scores.iter().flatten().copied().collect();
    let skipped = points - kept.len();
    let n = kept.len().max(2) as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt(), skipped))
}

/// Variational lower bound `bᵀA⁺b` over a basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariationalFisher {
    pub value: f64,
    /// Numerical rank of the Gram matrix `A`.
    pub rank: usize,
    /// Set when the optimum came out negative and was clamped.
    pub flagged: bool,
}

pub fn fisher_variational<S: Real>(
    mu: &Measure<S>,
    s: S,
    basis: &TestFunctionBasis<S>,
) -> Result<VariationalFisher> {
    let sd = heat_smoothed(mu, s)?;
    if basis.is_empty() {
        return Ok(VariationalFisher {
            value: 0.0,
            rank: 0,
            flagged: false,
        });
    }
    let m = moments(&sd, basis, None);
    Ok(variational_from(&m.a, &m.b))
}

pub(crate) fn variational_from(
    a: &nalgebra::DMatrix<f64>,
    b: &nalgebra::DVector<f64>,
) -> VariationalFisher {
    let r = crate::linalg::range_basis(a, crate::linalg::RANK_CUTOFF);
    let v = pinv_quadratic(a, b);
    VariationalFisher {
        value: v.max(0.0),
        rank: r.rank,
        flagged: v < 0.0 || !v.is_finite(),
    }
}

/// Both sides of `∂_s H(P_s μ) = −½ F(P_s μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeBruijn {
    /// Centered difference of `H(P_s μ)`.
    pub lhs: f64,
    /// `−½ F(P_s μ)`.
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
}

pub fn de_bruijn_check<S: Real>(mu: &Measure<S>, s: S, h: S) -> Result<DeBruijn> {
    if !(h > S::zero() && h < s) {
        return Err(Error::arg("h", format!("need 0 < h < s, got h = {h}, s = {s}")));
    }
    let hp = entropy(&heat_smoothed(mu, s + h)?, None);
    let hm = entropy(&heat_smoothed(mu, s - h)?, None);
    let f = fisher_direct(mu, s)?;
    let h = h.to_f64_lossy();
    let lhs = (hp.value - hm.value) / (2.0 * h);
    let rhs = -0.5 * f.value;
    let tolerance = DE_BRUIJN_TOLERANCE * rhs.abs() + (hp.error + hm.error) / (2.0 * h) + 0.5 * f.error;
    Ok(DeBruijn {
        lhs,
        rhs,
        tolerance,
        holds: (lhs - rhs).abs() <= tolerance,
    })
}

/// Default heat-time grid: 30 points from 1 down to 1e-8, i.e. smoothing
/// scales `√s` from 1 to 1e-4 as in the entropy route.
pub fn default_s_grid() -> Vec<f64> {
    geometric_grid(1.0, 1e-8, 30).expect("valid default grid")
}

/// One point of a Fisher scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FisherRow {
    pub s: f64,
    pub direct: FisherValue,
    pub variational: Option<VariationalFisher>,
}

impl FisherRow {
    pub fn s_f(&self) -> f64 {
        self.s * self.direct.value
    }
}

/// `F(P_s μ)` over a grid, with the variational bound when a basis is
/// given. Any `s F > 1.05` aborts with a bound violation.
pub fn fisher_scan<S: Real>(
    mu: &Measure<S>,
    s_grid: &[S],
    basis: Option<&TestFunctionBasis<S>>,
) -> Result<Vec<FisherRow>> {
    let rows: Vec<FisherRow> = s_grid
        .par_iter()
        .map(|&s| {
            let sd = heat_smoothed(mu, s)?;
            let basis = basis.cloned().unwrap_or_default();
            let m = moments(&sd, &basis, None);
            let deficit = (1.0 - m.mass).abs();
            let direct = FisherValue {
                value: m.fisher,
                error: m.fisher_error + deficit * m.fisher,
                mass: m.mass,
                coverage_deficit: deficit,
                flagged: deficit > MASS_TOLERANCE || !m.fisher.is_finite() || !m.converged,
            };
            let variational = (!basis.is_empty()).then(|| variational_from(&m.a, &m.b));
            Ok(FisherRow {
                s: s.to_f64_lossy(),
                direct,
                variational,
            })
        })
        .collect::<Result<_>>()?;
    for r in &rows {
        if !(r.s_f() <= BOUND_SLACK) || r.direct.value < 0.0 {
            return Err(Error::BoundViolation(format!(
                "F(P_s μ) = {} at s = {} for {}; need 0 ≤ F ≤ {BOUND_SLACK}/s",
                r.direct.value,
                r.s,
                mu.label()
            )));
        }
    }
    Ok(rows)
}

/// `δ_c` from the curve `∫_s^{s_0} F(P_u μ) du` against `|log s|`, the
/// integral taken as a trapezoid of `u F` in `log u`.
pub fn delta_c_fisher<S: Real>(
    mu: &Measure<S>,
    s_grid: &[S],
    window: FitWindow,
) -> Result<DimensionEstimate> {
    let rows = fisher_scan(mu, s_grid, None)?;
    delta_c_from_rows(&rows, window)
}

pub fn delta_c_from_rows(rows: &[FisherRow], window: FitWindow) -> Result<DimensionEstimate> {
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let sf: Vec<f64> = rows.iter().map(|r| r.s_f()).collect();
    let integral = cumulative_log_trapezoid(&s, &sf);
    // a flagged point corrupts every later partial sum, so the flag carries
    let mut seen = false;
    let flagged: Vec<bool> = rows
        .iter()
        .map(|r| {
            seen |= r.direct.flagged;
            seen
        })
        .collect();
    let errors: Vec<f64> = cumulative_log_trapezoid(
        &s,
        &rows.iter().map(|r| r.s * r.direct.error).collect::<Vec<_>>(),
    );
    let curve = ScalingCurve::new(s, integral, errors, flagged, window)?;
    let mut est = DimensionEstimate::from_curve(curve, Route::FisherRoute, true);
    let max_sf = sf.iter().cloned().fold(0.0, f64::max);
    est.notes.push(("max_sF".into(), max_sf));
    Ok(est)
}

/// Wasserstein-1 distance between `P_t μ` and `μ` next to the heuristic
/// rate `√((1 − δ) t)`. Reported only; nothing is asserted about it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DudleyDiagnostic {
    pub t: f64,
    pub distance: f64,
    pub heuristic: f64,
}

/// Sorted-sample estimate of `W_1(P_t μ, μ) = sup_{Lip f ≤ 1} |P_tμ(f) − μ(f)|`.
pub fn dudley_diagnostic<S: Real>(
    mu: &Measure<S>,
    t: S,
    delta: f64,
    samples: usize,
    seed: u64,
) -> DudleyDiagnostic {
    let mut rng = task_rng(seed, 0);
    let sq = t.sqrt();
    let mut a: Vec<f64> = (0..samples).map(|_| mu.sample_one(&mut rng).to_f64_lossy()).collect();
    let mut b: Vec<f64> = (0..samples)
        .map(|_| (mu.sample_one(&mut rng) + sq * S::lit(rng.sample::<f64, _>(StandardNormal))).to_f64_lossy())
        .collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let distance = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / samples.max(1) as f64;
    let t = t.to_f64_lossy();
    DudleyDiagnostic {
        t,
        distance,
        heuristic: ((1.0 - delta).max(0.0) * t).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_and_gaussian_closed_forms() {
        let d0 = Measure::<f64>::dirac(0.0);
        let f = fisher_direct(&d0, 0.25).unwrap();
        assert!((f.value - 4.0).abs() < 1e-8 && !f.flagged, "{f:?}");
        let n01 = Measure::<f64>::gaussian_grid(0.0, 1.0, 10.0, 20_001).unwrap();
        let f = fisher_direct(&n01, 1.0).unwrap();
        assert!((f.value - 0.5).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn variational_examples() {
        let d0 = Measure::<f64>::dirac(0.0);
        let q = TestFunctionBasis::monomials(&[2]);
        assert!((fisher_variational(&d0, 1.0, &q).unwrap().value - 1.0).abs() < 1e-10);
        assert!((fisher_variational(&d0, 4.0, &q).unwrap().value - 0.25).abs() < 1e-10);
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        assert_eq!(fisher_variational(&u, 0.1, &TestFunctionBasis::empty()).unwrap().value, 0.0);
    }

    #[test]
    fn de_bruijn_on_a_dirac() {
        let d0 = Measure::<f64>::dirac(0.0);
        let c = de_bruijn_check(&d0, 0.5, 1e-3).unwrap();
        assert!((c.rhs + 1.0).abs() < 1e-8);
        assert!((c.lhs + 1.0).abs() < 1e-5 && c.holds, "{c:?}");
    }

    #[test]
    fn scan_rejects_bound_violations_only_when_they_occur() {
        let d0 = Measure::<f64>::dirac(0.0);
        let rows = fisher_scan(&d0, &[1.0, 0.1, 0.01], None).unwrap();
        for r in &rows {
            assert!((r.s_f() - 1.0).abs() < 1e-8);
        }
    }
}
