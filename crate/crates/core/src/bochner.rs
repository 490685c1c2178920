//! Measure-dependent Bochner inequalities.
//!
//! `μ` satisfies `CD_m(n, K)` when for every small `ε` and every smooth `f`
//!
//! ```text
//! P_ε μ((f″)²) ≥ (1/n) [P_ε μ(f″)]² − K(ε, n) P_ε μ((f′)²).
//! ```
//!
//! On the span of a basis the smallest such `K` is the top generalized
//! eigenvalue of `((1/n) b bᵀ − C, A)` clamped at zero, and the CD-dimension
//! is `δ^□ = 1 − inf_n n (1 + K̄(n))` with `K̄(n)` the growth rate of
//! `∫_ε^1 K(y, n) dy` against `|log ε|`.
//!
//! The family `K(ε, n) = (1/n − 1) F(P_ε μ)` is admissible for every `f`
//! (Cauchy–Schwarz against the score), so each cell keeps the smaller of the
//! eigenvalue and this value.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{moments, Moments, TestFunctionBasis};
use crate::curve::{cumulative_log_trapezoid, geometric_grid, FitWindow, ScalingCurve};
use crate::dimension::{DimensionEstimate, Route};
use crate::error::{Error, Result};
use crate::fisher::{heat_smoothed, variational_from};
use crate::linalg::max_generalized_eigenvalue;
use crate::measure::Measure;
use crate::real::Real;

/// Eigenvalues within this fraction of `‖C‖/‖A‖` of zero count as zero:
/// for `n ≥ 1` the pencil is negative semidefinite up to rounding.
const ZERO_EIGENVALUE: f64 = 1e-9;

/// Default `n` grid: 20 points from 1 down to 0.01.
pub fn default_n_grid() -> Vec<f64> {
    let mut g = geometric_grid(1.0, 0.01, 20).expect("valid default grid");
    g.reverse();
    g
}

/// `K` on a span, with a flag for a basis whose derivatives vanish on the
/// support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalK {
    pub k: f64,
    pub degenerate: bool,
}

/// Smallest `K` making `CD_m` hold at `(ε, n)` for every `f` in the span.
pub fn optimal_k<S: Real>(
    mu: &Measure<S>,
    eps: S,
    n: f64,
    basis: &TestFunctionBasis<S>,
) -> Result<OptimalK> {
    check_n(n)?;
    let sd = heat_smoothed(mu, eps)?;
    let m = moments(&sd, basis, None);
    Ok(k_from_moments(&m, n))
}

fn check_n(n: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::arg("n", format!("dimension parameter must be positive, got {n}")));
    }
    Ok(())
}

fn k_from_moments(m: &Moments, n: f64) -> OptimalK {
    let dim = m.b.len();
    if dim == 0 {
        return OptimalK {
            k: 0.0,
            degenerate: true,
        };
    }
    let pencil: DMatrix<f64> = &m.b * m.b.transpose() / n - &m.c;
    match max_generalized_eigenvalue(&pencil, &m.a) {
        None => OptimalK {
            k: 0.0,
            degenerate: true,
        },
        Some(lambda) => {
            let scale = m.c.norm() / m.a.norm().max(f64::MIN_POSITIVE);
            let k = if lambda <= ZERO_EIGENVALUE * scale {
                0.0
            } else {
                lambda
            };
            OptimalK {
                k,
                degenerate: false,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSource {
    Eig,
    FisherFamily,
}

impl KSource {
    pub fn name(self) -> &'static str {
        match self {
            KSource::Eig => "eig",
            KSource::FisherFamily => "fisher-family",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KCell {
    pub eps: f64,
    pub n: f64,
    pub k: f64,
    pub source: KSource,
    /// The eigenvalue route's value before the comparison.
    pub k_eig: f64,
    pub degenerate: bool,
}

/// Result of a `(ε, n)` scan.
#[derive(Clone, Debug, Serialize)]
pub struct BochnerScan {
    pub eps_grid: Vec<f64>,
    pub n_grid: Vec<f64>,
    /// Row-major: `cells[i * n_grid.len() + j]` is `(eps_grid[i], n_grid[j])`.
    pub cells: Vec<KCell>,
    /// `F(P_ε μ)` per `ε`.
    pub fisher: Vec<f64>,
    /// Slope of `∫_ε^1 K(y, n) dy` against `|log ε|`, per `n`.
    pub kbar: Vec<f64>,
    /// `n (1 + K̄(n))`, per `n`.
    pub objective: Vec<f64>,
    /// Index into `n_grid` of the minimum.
    pub best: usize,
}

impl BochnerScan {
    pub fn cell(&self, i: usize, j: usize) -> &KCell {
        &self.cells[i * self.n_grid.len() + j]
    }

    /// `1 − n (1 + K̄_F(n))` for the Fisher family alone, where
    /// `K̄_F(n) = (1/n − 1) · slope(∫F)`.
    pub fn fisher_family_value(&self, n: f64, window: FitWindow) -> Result<f64> {
        let slope = integral_curve(&self.eps_grid, &self.fisher, window)?.fit.slope;
        let kbar = (1.0 / n - 1.0).max(0.0) * slope;
        Ok(1.0 - n * (1.0 + kbar))
    }
}

fn integral_curve(eps: &[f64], k: &[f64], window: FitWindow) -> Result<ScalingCurve> {
    let yk: Vec<f64> = eps.iter().zip(k).map(|(e, k)| e * k).collect();
    let integral = cumulative_log_trapezoid(eps, &yk);
    let n = eps.len();
    ScalingCurve::new(eps.to_vec(), integral, vec![0.0; n], vec![false; n], window)
}

/// Settings for [`delta_square`].
#[derive(Clone, Debug)]
pub struct BochnerOptions<S: Real = f64> {
    pub basis: TestFunctionBasis<S>,
    /// Compare each cell against `(1/n − 1) F(P_ε μ)`.
    pub fisher_family: bool,
    pub window: FitWindow,
}

impl<S: Real> Default for BochnerOptions<S> {
    fn default() -> Self {
        BochnerOptions {
            basis: TestFunctionBasis::adapted(),
            fisher_family: true,
            window: FitWindow::default(),
        }
    }
}

/// `δ^□` over an `ε` grid (decreasing, within `(0, 1]`) and an `n` grid.
/// Moment matrices are computed once per `ε` and shared across `n`.
pub fn delta_square<S: Real>(
    mu: &Measure<S>,
    eps_grid: &[S],
    n_grid: &[f64],
    opts: &BochnerOptions<S>,
) -> Result<(DimensionEstimate, BochnerScan)> {
    if eps_grid.len() < 2 || n_grid.is_empty() {
        return Err(Error::arg("grid", "need at least two ε values and one n"));
    }
    for &n in n_grid {
        check_n(n)?;
    }
    let eps: Vec<f64> = eps_grid.iter().map(|e| e.to_f64_lossy()).collect();
    let per_eps: Vec<(f64, Vec<KCell>)> = eps_grid
        .par_iter()
        .map(|&e| {
            let sd = heat_smoothed(mu, e)?;
            let m = moments(&sd, &opts.basis, None);
            let e = e.to_f64_lossy();
            let cells = n_grid
                .iter()
                .map(|&n| {
                    let eig = k_from_moments(&m, n);
                    let family = (1.0 / n - 1.0).max(0.0) * m.fisher;
                    let (k, source) = if opts.fisher_family && family < eig.k {
                        (family, KSource::FisherFamily)
                    } else {
                        (eig.k, KSource::Eig)
                    };
                    KCell {
                        eps: e,
                        n,
                        k,
                        source,
                        k_eig: eig.k,
                        degenerate: eig.degenerate,
                    }
                })
                .collect();
            Ok((m.fisher, cells))
        })
        .collect::<Result<_>>()?;
    let nn = n_grid.len();
    let fisher: Vec<f64> = per_eps.iter().map(|r| r.0).collect();
    let cells: Vec<KCell> = per_eps.into_iter().flat_map(|r| r.1).collect();

    let mut kbar = Vec::with_capacity(nn);
    let mut objective = Vec::with_capacity(nn);
    let mut curves = Vec::with_capacity(nn);
    for j in 0..nn {
        let k: Vec<f64> = (0..eps.len()).map(|i| cells[i * nn + j].k).collect();
        let curve = integral_curve(&eps, &k, opts.window)?;
        kbar.push(curve.fit.slope);
        objective.push(n_grid[j] * (1.0 + curve.fit.slope));
        curves.push(curve);
    }
    let best = (0..nn)
        .min_by(|&a, &b| objective[a].total_cmp(&objective[b]))
        .expect("nonempty n grid");

    // n (|log ε| + ∫_ε^1 K) has slope n (1 + K̄): the estimate's own curve
    let nb = n_grid[best];
    let c = &curves[best];
    let values: Vec<f64> = eps
        .iter()
        .zip(&c.values)
        .map(|(e, v)| nb * (e.ln().abs() + v))
        .collect();
    let curve = ScalingCurve::new(
        eps.clone(),
        values,
        vec![0.0; eps.len()],
        vec![false; eps.len()],
        opts.window,
    )?;
    let mut est = DimensionEstimate::from_curve(curve, Route::BochnerRoute, true);
    est.notes.push(("n".into(), nb));
    est.notes.push(("kbar".into(), kbar[best]));
    let scan = BochnerScan {
        eps_grid: eps,
        n_grid: n_grid.to_vec(),
        cells,
        fisher,
        kbar,
        objective,
        best,
    };
    Ok((est, scan))
}

/// `F_g(P_ε μ) = 2 sup_f { ∫ g f″ p − ½ ∫ f′² p }` over the span of `basis`,
/// i.e. `b_gᵀ A⁺ b_g` with `(b_g)_i = ∫ g φ_i″ p`.
pub fn localized_fisher<S: Real>(
    mu: &Measure<S>,
    eps: S,
    g: &(dyn Fn(S) -> S + Sync),
    basis: &TestFunctionBasis<S>,
) -> Result<f64> {
    let sd = heat_smoothed(mu, eps)?;
    if basis.is_empty() {
        return Ok(0.0);
    }
    let m = moments(&sd, basis, Some(g));
    let bw = m.b_weighted.expect("weighted moments requested");
    Ok(variational_from(&m.a, &bw).value)
}

/// `1 − ∫ (1 − h)² dμ` with the qualifying diagnostic for `h`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalizedBound {
    pub bound: f64,
    /// Slope of `∫_ε^1 F_h(P_y μ) dy` against `|log ε|`.
    pub slope: f64,
    /// True when the slope is at most [`QUALIFYING_SLOPE`], i.e. `h`
    /// numerically belongs to the admissible class.
    pub qualifies: bool,
    pub curve: ScalingCurve,
}

pub const QUALIFYING_SLOPE: f64 = 0.05;

pub fn localized_lower_bound<S: Real>(
    mu: &Measure<S>,
    h: &(dyn Fn(S) -> S + Sync),
    eps_grid: &[S],
    basis: &TestFunctionBasis<S>,
    window: FitWindow,
) -> Result<LocalizedBound> {
    let fh: Vec<f64> = eps_grid
        .par_iter()
        .map(|&e| localized_fisher(mu, e, h, basis))
        .collect::<Result<_>>()?;
    let eps: Vec<f64> = eps_grid.iter().map(|e| e.to_f64_lossy()).collect();
    let curve = integral_curve(&eps, &fh, window)?;
    let deficit = mu
        .expectation(|x| {
            let d = S::one() - h(x);
            d * d
        })
        .to_f64_lossy();
    let slope = curve.fit.slope;
    Ok(LocalizedBound {
        bound: 1.0 - deficit,
        slope,
        qualifies: slope <= QUALIFYING_SLOPE,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::fisher_variational;

    #[test]
    fn quadratic_on_a_gaussian() {
        // μ_√ε = N(0, ε): K = max(0, (1/n − 1)/ε)
        let d0 = Measure::<f64>::dirac(0.0);
        let q = TestFunctionBasis::monomials(&[2]);
        for &(eps, n) in &[(0.5, 0.25), (2.0, 0.5), (1.0, 1.0), (1.0, 3.0)] {
            let k = optimal_k(&d0, eps, n, &q).unwrap();
            let want = ((1.0 / n - 1.0) / eps).max(0.0);
            assert!((k.k - want).abs() < 1e-9, "ε={eps} n={n}: {k:?}");
        }
    }

    #[test]
    fn no_curvature_needed_at_n_one() {
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        for basis in [TestFunctionBasis::default_hermite(), TestFunctionBasis::adapted()] {
            for n in [1.0, 1.5] {
                assert_eq!(optimal_k(&u, 0.01, n, &basis).unwrap().k, 0.0);
            }
        }
    }

    #[test]
    fn localized_fisher_limits() {
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        let basis = TestFunctionBasis::default_hermite();
        let one = localized_fisher(&u, 0.05, &|_| 1.0, &basis).unwrap();
        let plain = fisher_variational(&u, 0.05, &basis).unwrap().value;
        assert!((one - plain).abs() < 1e-9 * plain);
        assert_eq!(localized_fisher(&u, 0.05, &|_| 0.0, &basis).unwrap(), 0.0);
    }
}
