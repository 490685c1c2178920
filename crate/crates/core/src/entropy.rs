//! Entropy of smoothed measures, `H(p dx) = ∫ p log p dx`.
//!
//! The sign convention is the negative of differential entropy: larger `H`
//! means a more concentrated law. `0 · log 0 = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{FitWindow, ScalingCurve};
use crate::error::Result;
use crate::measure::Measure;
use crate::quadrature::{self, Adaptive};
use crate::real::{xlogx, Real};
use crate::rng::{derive_seed, task_rng, DEFAULT_SEED};
use crate::smoothing::{Kernel, SmoothedDensity};

/// Tolerance on `∫ p_t` before an entropy value is flagged.
pub const MASS_TOLERANCE: f64 = 1e-4;

/// Monte Carlo disagreement, in combined standard errors, that flags a value.
pub const CROSS_CHECK_SIGMAS: f64 = 5.0;

/// Quadrature entropy with its optional Monte Carlo cross-check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyValue {
    pub value: f64,
    /// Quadrature error estimate (plus any interval-mass bracket effect).
    pub error: f64,
    /// `∫ p_t` by the same quadrature.
    pub mass: f64,
    /// Monte Carlo value and standard error, when requested.
    pub monte_carlo: Option<(f64, f64)>,
    pub flagged: bool,
}

/// Monte Carlo cross-check settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossCheck {
    pub samples: usize,
    pub seed: u64,
}

/// `H(μ_t)` by adaptive quadrature of `p log p` over the padded support,
/// optionally cross-checked by `E[log p_t(Y + tξ)]` with `Y ~ μ`, `ξ ~ ν`.
pub fn entropy<S: Real>(sd: &SmoothedDensity<'_, S>, check: Option<CrossCheck>) -> EntropyValue {
    let opts = sd.default_quadrature();
    let q = sd.integrate(|_, pt| [pt.p, xlogx(pt.p)], &opts);
    let value = q.value[1].to_f64_lossy();
    let mass = q.value[0].to_f64_lossy();
    let error = q.error[1].to_f64_lossy() + (mass - 1.0).abs() * value.abs().max(1.0);
    let mut flagged = (mass - 1.0).abs() > MASS_TOLERANCE || !value.is_finite();

    let monte_carlo = check.map(|c| monte_carlo_entropy(sd, c.samples, c.seed));
    if let Some((mc, se)) = monte_carlo {
        let combined = (se * se + error * error).sqrt() + 1e-12 * value.abs().max(1.0);
        if (mc - value).abs() > CROSS_CHECK_SIGMAS * combined {
            flagged = true;
        }
    }
    EntropyValue {
        value,
        error,
        mass,
        monte_carlo,
        flagged,
    }
}

/// `E[log p_t(Z)]`, `Z = Y + tξ`, with its standard error.
pub fn monte_carlo_entropy<S: Real>(sd: &SmoothedDensity<'_, S>, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = task_rng(seed, 1);
    let mu = sd.measure();
    let draws: Vec<S> = (0..samples)
        .map(|_| mu.sample_one(&mut rng) + sd.t() * sd.kernel().sample_one(&mut rng))
        .collect();
    let logs: Vec<f64> = draws
        .par_iter()
        .map(|&z| {
            let p = sd.density_at(z).to_f64_lossy();
            if p > 1e-300 {
                p.ln()
            } else {
                0.0
            }
        })
        .collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Settings for [`entropy_curve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions {
    /// Monte Carlo cross-check samples per point; 0 disables the check.
    pub cross_check_samples: usize,
    pub seed: u64,
    pub window: FitWindow,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            cross_check_samples: 0,
            seed: DEFAULT_SEED,
            window: FitWindow::default(),
        }
    }
}

/// `t ↦ H(μ_t)` over `t_grid` and its slope against `|log t|`. Points are
/// independent tasks seeded by `(seed, index)`.
pub fn entropy_curve<S: Real>(
    mu: &Measure<S>,
    kernel: &Kernel<S>,
    t_grid: &[S],
    opts: &CurveOptions,
) -> Result<ScalingCurve> {
    let points: Vec<EntropyValue> = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let sd = SmoothedDensity::new(mu, kernel, t)?;
            let check = (opts.cross_check_samples > 0).then(|| CrossCheck {
                samples: opts.cross_check_samples,
                seed: derive_seed(opts.seed, i as u64),
            });
            Ok(entropy(&sd, check))
        })
        .collect::<Result<_>>()?;
    ScalingCurve::new(
        t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        points.iter().map(|p| p.value).collect(),
        points.iter().map(|p| p.error).collect(),
        points.iter().map(|p| p.flagged).collect(),
        opts.window,
    )
}

/// `H(ν) − log t`: the largest entropy a smoothing at scale `t` can have.
pub fn entropy_upper_bound<S: Real>(kernel: &Kernel<S>, t: S) -> f64 {
    (kernel.entropy() - t.ln()).to_f64_lossy()
}

/// `−log 2 − 2∫log(1+|x|)dμ − 2∫log(1+|y|)dν`, valid for `t ≤ 1`.
pub fn entropy_lower_bound<S: Real>(mu: &Measure<S>, kernel: &Kernel<S>) -> f64 {
    (-(S::lit(2.0)).ln() - S::lit(2.0) * mu.log_moment() - S::lit(2.0) * kernel.log_moment())
        .to_f64_lossy()
}

/// `H(μ)` for an absolutely continuous measure (no atoms, no fractal
/// part); `None` otherwise, where `H(μ) = +∞`.
pub fn entropy_unsmoothed<S: Real>(mu: &Measure<S>) -> Option<f64> {
    if !is_absolutely_continuous(mu) {
        return None;
    }
    let pieces = mu.discretize(S::lit(1e-3));
    let lines = pieces.polylines;
    let nodes: Vec<S> = {
        let mut v: Vec<S> = lines.iter().flat_map(|l| l.x.iter().copied()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    };
    let lo = *nodes.first()?;
    let hi = *nodes.last()?;
    let density = |x: S| -> S {
        lines
            .iter()
            .map(|l| {
                if x < l.start() || x > l.end() {
                    return S::zero();
                }
                let i = l.x.partition_point(|&v| v <= x).clamp(1, l.x.len() - 1) - 1;
                let (x0, x1) = (l.x[i], l.x[i + 1]);
                if x1 <= x0 {
                    return l.d[i];
                }
                l.d[i] + (l.d[i + 1] - l.d[i]) * (x - x0) / (x1 - x0)
            })
            .sum()
    };
    let panels = quadrature::panels(&[(lo, hi)], &nodes, hi - lo);
    let q = quadrature::integrate(|x| [xlogx(density(x))], &panels, &Adaptive::default());
    Some(q.value[0].to_f64_lossy())
}

fn is_absolutely_continuous<S: Real>(mu: &Measure<S>) -> bool {
    match mu {
        Measure::GridDensity(_) => true,
        Measure::Atomic(_) | Measure::BernoulliConvolution(_) => false,
        Measure::Mixture(m) => m.components().iter().all(|(_, c)| is_absolutely_continuous(c)),
        Measure::LipschitzPushforward(p) => is_absolutely_continuous(p.base()),
    }
}

/// Entropy-power inequality at scale `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpiCheck {
    /// `exp(−2H(μ_t))`, or `H(μ_t)` in the singular case.
    pub lhs: f64,
    /// `exp(−2H(μ)) + exp(−2H(ν_t))`, or `H(ν) − log t` in the singular case.
    pub rhs: f64,
    /// `H(μ) = +∞`: the inequality degenerates to `H(μ_t) ≤ H(ν) − log t`.
    pub singular: bool,
    pub holds: bool,
}

/// Checks `exp(−2H(μ_t)) ≥ exp(−2H(μ)) + exp(−2H(ν_t))` with relative
/// tolerance `tol`.
pub fn epi_check<S: Real>(mu: &Measure<S>, kernel: &Kernel<S>, t: S, tol: f64) -> Result<EpiCheck> {
    let sd = SmoothedDensity::new(mu, kernel, t)?;
    let h_t = entropy(&sd, None);
    let h_nu_t = entropy_upper_bound(kernel, t);
    Ok(match entropy_unsmoothed(mu) {
        None => EpiCheck {
            lhs: h_t.value,
            rhs: h_nu_t,
            singular: true,
            holds: h_t.value <= h_nu_t + tol * h_nu_t.abs().max(1.0) + h_t.error,
        },
        Some(h_mu) => {
            let lhs = (-2.0 * h_t.value).exp();
            let rhs = (-2.0 * h_mu).exp() + (-2.0 * h_nu_t).exp();
            EpiCheck {
                lhs,
                rhs,
                singular: false,
                holds: lhs >= rhs * (1.0 - tol),
            }
        }
    })
}

/// Gap of the entropy of a mixture against the averaged component entropies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffinityGap {
    /// `H(Σ a_i μ_i * ν_t) − Σ a_i H(μ_i * ν_t)`.
    pub gap: f64,
    /// `Σ a_i log a_i`.
    pub weight_entropy: f64,
    /// `(n − 1) + Σ a_i log a_i`.
    pub upper_bound: f64,
    /// Quadrature error carried into the gap.
    pub error: f64,
}

impl AffinityGap {
    /// `0 ≤ gap ≤ (n − 1) + Σ a_i log a_i`, up to `tol`.
    pub fn within_stated_sandwich(&self, tol: f64) -> bool {
        self.gap >= -tol - self.error && self.gap <= self.upper_bound + tol + self.error
    }

    /// `Σ a_i log a_i ≤ gap ≤ 0`: convexity of `p log p` on one side and
    /// `p_mix ≥ a_i p_i` on the other.
    pub fn within_convexity_sandwich(&self, tol: f64) -> bool {
        self.gap >= self.weight_entropy - tol - self.error && self.gap <= tol + self.error
    }
}

/// `components` are `(a_i, μ_i)` with `μ_i` probability measures and
/// `Σ a_i = 1`.
pub fn affinity_gap<S: Real>(
    components: &[(S, Measure<S>)],
    kernel: &Kernel<S>,
    t: S,
) -> Result<AffinityGap> {
    let mixture = Measure::mixture(components.to_vec())?;
    let whole = entropy(&SmoothedDensity::new(&mixture, kernel, t)?, None);
    let mut avg = 0.0;
    let mut err = whole.error;
    let mut wlogw = 0.0;
    for (a, m) in components {
        let h = entropy(&SmoothedDensity::new(m, kernel, t)?, None);
        let a = a.to_f64_lossy();
        avg += a * h.value;
        err += a * h.error;
        wlogw += a * a.ln();
    }
    Ok(AffinityGap {
        gap: whole.value - avg,
        weight_entropy: wlogw,
        upper_bound: (components.len() as f64 - 1.0) + wlogw,
        error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::geometric_grid;

    fn h(mu: &Measure<f64>, k: &Kernel<f64>, t: f64) -> EntropyValue {
        entropy(&SmoothedDensity::new(mu, k, t).unwrap(), None)
    }

    #[test]
    fn closed_forms() {
        let d0 = Measure::<f64>::dirac(0.0);
        let v = h(&d0, &Kernel::centered_box(), 0.01);
        assert!((v.value - 100f64.ln()).abs() < 1e-9, "{v:?}");
        let v = h(&d0, &Kernel::gaussian(), 1.0);
        assert!((v.value + 1.418_938_533_204_672_7).abs() < 1e-9, "{v:?}");
        let v = h(&d0, &Kernel::gaussian(), 1e-4);
        let exact = -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 1e-8).ln();
        assert!((v.value - exact).abs() < 1e-8, "{v:?}");
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        assert_eq!(entropy_unsmoothed(&u), Some(0.0));
        assert_eq!(entropy_unsmoothed(&d0), None);
    }

    #[test]
    fn monte_carlo_agrees() {
        let cases = [
            (Measure::<f64>::uniform(0.0, 1.0).unwrap(), Kernel::gaussian(), 0.05),
            (Measure::bernoulli(0.25).unwrap(), Kernel::centered_box(), 0.01),
            (Measure::bernoulli(0.25).unwrap(), Kernel::gaussian(), 0.01),
            (Measure::uniform_atoms(vec![0.0, 0.3]).unwrap(), Kernel::gaussian(), 0.2),
        ];
        for (i, (mu, k, t)) in cases.iter().enumerate() {
            let sd = SmoothedDensity::new(mu, k, *t).unwrap();
            let v = entropy(&sd, Some(CrossCheck { samples: 20_000, seed: i as u64 }));
            assert!(!v.flagged, "{} {}: {v:?}", mu.label(), k.label());
        }
    }

    #[test]
    fn shift_invariance() {
        let b = Measure::<f64>::bernoulli(0.25).unwrap();
        let shifted = b.clone().shifted(3.7).unwrap();
        for k in [Kernel::gaussian(), Kernel::centered_box()] {
            let a = h(&b, &k, 0.01).value;
            let c = h(&shifted, &k, 0.01).value;
            assert!((a - c).abs() < 1e-6, "{}: {a} vs {c}", k.label());
        }
    }

    #[test]
    fn dirac_box_curve_has_unit_slope() {
        let d0 = Measure::<f64>::dirac(0.0);
        let grid = geometric_grid(1e-1, 1e-4, 25).unwrap();
        let c = entropy_curve(&d0, &Kernel::centered_box(), &grid, &CurveOptions::default()).unwrap();
        assert!((c.fit.slope - 1.0).abs() < 0.01, "{:?}", c.fit);
    }

    #[test]
    fn gaussian_epi_saturates() {
        let n01 = Measure::<f64>::gaussian_grid(0.0, 1.0, 10.0, 20_001).unwrap();
        let e = epi_check(&n01, &Kernel::gaussian(), 0.5, 1e-6).unwrap();
        assert!(!e.singular);
        assert!(((e.lhs - e.rhs) / e.rhs).abs() < 1e-6, "{e:?}");
        let d0 = Measure::<f64>::dirac(0.0);
        let e = epi_check(&d0, &Kernel::gaussian(), 0.1, 1e-9).unwrap();
        assert!(e.singular && e.holds);
        assert!((e.rhs - (-1.418_938_533_204_672_7 + 10f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn affinity_gap_for_disjoint_and_identical_components() {
        let disjoint = vec![(0.5, Measure::<f64>::dirac(0.0)), (0.5, Measure::dirac(10.0))];
        let g = affinity_gap(&disjoint, &Kernel::centered_box(), 0.01).unwrap();
        assert!((g.gap + 2f64.ln()).abs() < 1e-9, "{g:?}");
        assert!(g.within_convexity_sandwich(1e-9));
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        let same = vec![(0.5, u.clone()), (0.5, u)];
        let g = affinity_gap(&same, &Kernel::gaussian(), 0.1).unwrap();
        assert!(g.gap.abs() < 1e-9, "{g:?}");
        assert!(g.within_convexity_sandwich(1e-9));
    }
}
