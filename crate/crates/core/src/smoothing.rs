//! Mollifier kernels and smoothed densities.
//!
//! For a kernel density `ν` and `t > 0`, the smoothed measure is
//! `μ_t = μ * D_t^*ν` with density
//!
//! ```text
//! p_t(x) = (1/t) ∫ ν((x − y)/t) dμ(y).
//! ```
//!
//! Evaluation routes:
//!
//! * Gaussian kernel: closed form. The measure is discretized at scale
//!   `t/4` into atoms (possibly carrying a residual variance, which adds to
//!   `t²`) and piecewise-linear pieces, whose Gaussian convolution is a sum
//!   of error functions. The first derivative comes from the same sums.
//! * Box kernel `U[a, b]`: `p_t(x) = μ[x − tb, x − ta] / (t(b − a))` with
//!   the measure's exact interval masses.
//! * Custom grid kernel: the kernel is binned at width `min(step, 1/20)`
//!   and each bin is a box kernel.
//! * Monte Carlo (Gaussian only, on request): shared draws from `μ`,
//!   antithetic for the symmetric Bernoulli convolutions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measure::{GridDensity, Measure, Pieces, Polyline};
use crate::quadrature::{self, Adaptive, Quadrature};
use crate::real::{std_normal_mass, std_normal_pdf, xlogx, Real};
use crate::rng::task_rng;

/// Half-width, in standard deviations, beyond which Gaussian tails are
/// dropped (two-sided tail mass about 1.2e-15).
pub const GAUSSIAN_REACH: f64 = 8.0;

/// Default Monte Carlo sample count.
pub const MC_SAMPLES: usize = 200_000;

/// Relative standard error above which a Monte Carlo value is flagged.
pub const MC_SE_CEILING: f64 = 0.05;

/// The mollifier `ν`.
#[derive(Clone, Debug)]
pub enum Kernel<S: Real = f64> {
    /// Standard normal; `ν_t = N(0, t²)`.
    Gaussian,
    /// Uniform on `[a, b]`.
    Box { a: S, b: S },
    /// Piecewise-linear density on a grid.
    CustomGrid(GridDensity<S>),
}

impl<S: Real> Kernel<S> {
    pub fn gaussian() -> Self {
        Kernel::Gaussian
    }

    /// `U[−½, ½]`.
    pub fn centered_box() -> Self {
        Kernel::Box {
            a: -S::lit(0.5),
            b: S::lit(0.5),
        }
    }

    /// `U[0, 1]`.
    pub fn unit_box() -> Self {
        Kernel::Box {
            a: S::zero(),
            b: S::one(),
        }
    }

    pub fn boxed(a: S, b: S) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidKernel(format!("box needs a < b, got [{a}, {b}]")));
        }
        Ok(Kernel::Box { a, b })
    }

    pub fn custom(origin: S, step: S, values: Vec<S>) -> Result<Self> {
        GridDensity::new(origin, step, values)
            .map(Kernel::CustomGrid)
            .map_err(|e| Error::InvalidKernel(e.to_string()))
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Kernel::Gaussian)
    }

    /// Support of `ν` (Gaussian: truncated at [`GAUSSIAN_REACH`]).
    pub fn reach(&self) -> (S, S) {
        match self {
            Kernel::Gaussian => (-S::lit(GAUSSIAN_REACH), S::lit(GAUSSIAN_REACH)),
            Kernel::Box { a, b } => (*a, *b),
            Kernel::CustomGrid(g) => (g.origin(), g.end()),
        }
    }

    /// `H(ν) = ∫ ν log ν`.
    pub fn entropy(&self) -> S {
        match self {
            Kernel::Gaussian => -S::lit(0.5) * (S::TAU() * S::E()).ln(),
            Kernel::Box { a, b } => -(*b - *a).ln(),
            Kernel::CustomGrid(g) => {
                let nodes: Vec<S> = (0..g.values().len()).map(|i| g.node(i)).collect();
                let q = quadrature::integrate(
                    |x| [xlogx(g.density(x))],
                    &quadrature::panels(&[(g.origin(), g.end())], &nodes, g.step()),
                    &Adaptive::default(),
                );
                q.value[0]
            }
        }
    }

    /// `∫ log(1 + |y|) dν(y)`.
    pub fn log_moment(&self) -> S {
        let (lo, hi) = self.reach();
        let q = quadrature::integrate(
            |y: S| [self.density(y) * (S::one() + y.abs()).ln()],
            &quadrature::panels(&[(lo, hi)], &[S::zero()], S::lit(0.25)),
            &Adaptive::default(),
        );
        q.value[0]
    }

    /// Density of `ν` (unscaled).
    pub fn density(&self, y: S) -> S {
        match self {
            Kernel::Gaussian => std_normal_pdf(y),
            Kernel::Box { a, b } => {
                if y >= *a && y <= *b {
                    S::one() / (*b - *a)
                } else {
                    S::zero()
                }
            }
            Kernel::CustomGrid(g) => g.density(y),
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match self {
            Kernel::Gaussian => S::lit(rng.sample::<f64, _>(StandardNormal)),
            Kernel::Box { a, b } => *a + (*b - *a) * S::lit(rng.gen::<f64>()),
            Kernel::CustomGrid(g) => Measure::GridDensity(g.clone()).sample_one(rng),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Kernel::Gaussian => "gauss".into(),
            Kernel::Box { a, b } => format!("box[{a}, {b}]"),
            Kernel::CustomGrid(g) => format!("grid[{} nodes]", g.values().len()),
        }
    }

    /// Bins `(left, right, ν-mass)` in kernel coordinates; a box is one bin.
    fn bins(&self) -> Vec<(S, S, S)> {
        match self {
            Kernel::Gaussian => Vec::new(),
            Kernel::Box { a, b } => vec![(*a, *b, S::one())],
            Kernel::CustomGrid(g) => {
                let h = g.step().min(S::lit(0.05));
                let n = ((g.end() - g.origin()) / h)
                    .ceil()
                    .to_usize()
                    .unwrap_or(1)
                    .max(1);
                let h = (g.end() - g.origin()) / S::from_usize_lossy(n);
                let m = Measure::GridDensity(g.clone());
                (0..n)
                    .map(|j| {
                        let l = g.origin() + h * S::from_usize_lossy(j);
                        let r = if j + 1 == n { g.end() } else { l + h };
                        (l, r, m.interval_mass(l, r).value())
                    })
                    .filter(|b| b.2 > S::zero())
                    .collect()
            }
        }
    }
}

/// How a [`SmoothedDensity`] evaluates `p_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exact interval masses through a box window.
    ExactBox,
    /// Closed-form Gaussian convolution of atoms and linear pieces.
    ClosedForm,
    /// Binned custom kernel, each bin through exact interval masses.
    Quadrature,
    /// Shared-sample Monte Carlo average of Gaussian bumps.
    MonteCarlo { samples: usize, seed: u64 },
}

/// A density value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<S: Real = f64> {
    pub value: S,
    pub std_error: S,
    pub low_confidence: bool,
}

/// `μ[x − tb, x − ta]`: the mass seen through the window `t·[a, b]` at `x`.
#[inline]
pub fn box_window_mass<S: Real>(mu: &Measure<S>, x: S, t: S, a: S, b: S) -> crate::measure::Mass<S> {
    mu.interval_mass(x - t * b, x - t * a)
}

#[derive(Clone, Debug)]
struct GaussAtom<S: Real> {
    position: S,
    weight: S,
    sigma: S,
}

#[derive(Clone, Debug)]
enum Repr<S: Real> {
    Gauss {
        atoms: Vec<GaussAtom<S>>,
        max_sigma: S,
        polylines: Vec<Polyline<S>>,
    },
    Window {
        bins: Vec<(S, S, S)>,
    },
    MonteCarlo {
        draws: Vec<S>,
        antithetic: bool,
    },
}

/// Evaluator for the density of `μ * D_t^*ν`.
#[derive(Clone, Debug)]
pub struct SmoothedDensity<'a, S: Real = f64> {
    mu: &'a Measure<S>,
    kernel: Kernel<S>,
    t: S,
    method: Method,
    repr: Repr<S>,
}

/// Density and its first two derivatives (zero for non-Gaussian kernels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<S: Real = f64> {
    pub p: S,
    pub dp: S,
    pub d2p: S,
}

impl<'a, S: Real> SmoothedDensity<'a, S> {
    /// Deterministic evaluator: closed form for the Gaussian kernel, exact
    /// box windows otherwise.
    pub fn new(mu: &'a Measure<S>, kernel: &Kernel<S>, t: S) -> Result<Self> {
        check_t(t)?;
        let (method, repr) = match kernel {
            Kernel::Gaussian => (Method::ClosedForm, gauss_repr(mu, t)),
            Kernel::Box { .. } => (
                Method::ExactBox,
                Repr::Window {
                    bins: kernel.bins(),
                },
            ),
            Kernel::CustomGrid(_) => (
                Method::Quadrature,
                Repr::Window {
                    bins: kernel.bins(),
                },
            ),
        };
        Ok(SmoothedDensity {
            mu,
            kernel: kernel.clone(),
            t,
            method,
            repr,
        })
    }

    /// Monte Carlo evaluator for the Gaussian kernel. Draws are generated
    /// once from `(seed, 0)` and shared by every evaluation point.
    pub fn monte_carlo(mu: &'a Measure<S>, t: S, samples: usize, seed: u64) -> Result<Self> {
        check_t(t)?;
        if samples < 2 {
            return Err(Error::arg("samples", "need at least 2 draws"));
        }
        let antithetic = matches!(mu, Measure::BernoulliConvolution(_));
        let mut rng = task_rng(seed, 0);
        let draws = if antithetic {
            (0..samples / 2)
                .flat_map(|_| {
                    let y = mu.sample_one(&mut rng);
                    [y, -y]
                })
                .collect()
        } else {
            mu.sample(samples, &mut rng).values
        };
        Ok(SmoothedDensity {
            mu,
            kernel: Kernel::Gaussian,
            t,
            method: Method::MonteCarlo { samples, seed },
            repr: Repr::MonteCarlo { draws, antithetic },
        })
    }

    pub fn measure(&self) -> &'a Measure<S> {
        self.mu
    }

    pub fn kernel(&self) -> &Kernel<S> {
        &self.kernel
    }

    pub fn t(&self) -> S {
        self.t
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `p_t(x)`. Monte Carlo evaluators return the sample mean.
    pub fn density_at(&self, x: S) -> S {
        match &self.repr {
            Repr::Gauss { .. } => self.gauss_point(x, false).p,
            Repr::Window { bins } => self.window(bins, x).0,
            Repr::MonteCarlo { .. } => self.mc(x).0.value,
        }
    }

    /// `p_t(x)` with a standard error (bracket half-width for capped
    /// Bernoulli recursions, sampling error for Monte Carlo).
    pub fn density_estimate(&self, x: S) -> Estimate<S> {
        match &self.repr {
            Repr::Gauss { .. } => Estimate {
                value: self.gauss_point(x, false).p,
                std_error: S::zero(),
                low_confidence: false,
            },
            Repr::Window { bins } => {
                let (value, half) = self.window(bins, x);
                Estimate {
                    value,
                    std_error: half,
                    low_confidence: half > value * S::lit(MC_SE_CEILING),
                }
            }
            Repr::MonteCarlo { .. } => self.mc(x).0,
        }
    }

    /// Density and derivative at `x`.
    pub fn point(&self, x: S) -> Point<S> {
        match &self.repr {
            Repr::Gauss { .. } => self.gauss_point(x, true),
            Repr::Window { bins } => Point {
                p: self.window(bins, x).0,
                dp: S::zero(),
                d2p: S::zero(),
            },
            Repr::MonteCarlo { .. } => {
                let (e, _) = self.mc(x);
                let (dp, d2p) = self.mc_derivatives(x);
                Point {
                    p: e.value,
                    dp,
                    d2p,
                }
            }
        }
    }

    /// Score `p_t′(x) / p_t(x)`; Gaussian kernel only.
    pub fn score_at(&self, x: S) -> Result<S> {
        if !self.kernel.is_gaussian() {
            return Err(Error::InvalidKernel(
                "the score needs the Gaussian kernel".into(),
            ));
        }
        if let Repr::MonteCarlo { .. } = self.repr {
            return self.mc_score(x).map(|e| e.value);
        }
        let pt = self.gauss_point(x, true);
        if pt.p <= S::lit(1e-300).max(S::min_positive_value()) {
            return Err(Error::OutOfSupport { x: x.to_f64_lossy() });
        }
        Ok(pt.dp / pt.p)
    }

    /// Monte Carlo score with a delta-method standard error.
    pub fn mc_score(&self, x: S) -> Result<Estimate<S>> {
        let Repr::MonteCarlo { draws, antithetic } = &self.repr else {
            return Err(Error::arg("method", "not a Monte Carlo evaluator"));
        };
        let sigma = self.t;
        let (p, dp, cov) = mc_pairs(draws, *antithetic, |y| {
            let u = (x - y) / sigma;
            let phi = std_normal_pdf(u) / sigma;
            (phi, -phi * u / sigma)
        });
        if p.0 <= S::lit(1e-300) {
            return Err(Error::OutOfSupport { x: x.to_f64_lossy() });
        }
        let r = dp.0 / p.0;
        // Var(N/D) ≈ (Var N − 2r Cov + r² Var D) / D²
        let var = (dp.1 - S::lit(2.0) * r * cov + r * r * p.1) / (p.0 * p.0);
        let se = var.max(S::zero()).sqrt();
        Ok(Estimate {
            value: r,
            std_error: se,
            low_confidence: se > r.abs().max(S::one() / sigma) * S::lit(MC_SE_CEILING),
        })
    }

    /// Intervals outside of which `p_t` vanishes (to the Gaussian tail
    /// cutoff), merged and sorted.
    pub fn domain(&self) -> Vec<(S, S)> {
        let res = self.t;
        let (lo_pad, hi_pad) = match &self.repr {
            Repr::Gauss { max_sigma, .. } => {
                let r = S::lit(GAUSSIAN_REACH) * *max_sigma;
                (-r, r)
            }
            Repr::Window { .. } => {
                let (a, b) = self.kernel.reach();
                (self.t * a, self.t * b)
            }
            Repr::MonteCarlo { .. } => {
                let r = S::lit(GAUSSIAN_REACH) * self.t;
                (-r, r)
            }
        };
        let raw: Vec<(S, S)> = self
            .mu
            .cover(res)
            .into_iter()
            .map(|(a, b)| (a + lo_pad, b + hi_pad))
            .collect();
        crate::measure::pieces::merge_intervals(raw, S::zero())
    }

    /// Points where `p_t` has kinks or jumps.
    pub fn breakpoints(&self) -> Vec<S> {
        let Repr::Window { bins } = &self.repr else {
            return Vec::new();
        };
        let mut edges: Vec<S> = bins.iter().flat_map(|b| [b.0, b.1]).collect();
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let mut base: Vec<S> = self.mu.atoms().into_iter().map(|(x, _)| x).collect();
        if let Some(p) = self.plain_polylines() {
            for line in p {
                base.extend_from_slice(&line.x);
            }
        }
        let mut out: Vec<S> = base
            .iter()
            .flat_map(|&y| edges.iter().map(move |&e| y + self.t * e))
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn plain_polylines(&self) -> Option<Vec<Polyline<S>>> {
        // kinks of grid densities, including mixture components; the nodes
        // are few compared to the quadrature panels
        let pieces = match self.mu {
            Measure::BernoulliConvolution(_) => return None,
            m => m.discretize(self.t),
        };
        let lines: Vec<Polyline<S>> = pieces
            .polylines
            .into_iter()
            .filter(|l| l.x.len() <= 4096)
            .collect();
        Some(lines)
    }

    /// Initial panel length for quadrature.
    pub fn panel_length(&self) -> S {
        match &self.repr {
            Repr::Gauss { atoms, .. } => {
                let min_sigma = atoms
                    .iter()
                    .map(|a| a.sigma)
                    .fold(self.t, S::min);
                S::lit(2.0) * min_sigma
            }
            Repr::Window { .. } => {
                let (a, b) = self.kernel.reach();
                self.t * (b - a) / S::lit(4.0)
            }
            Repr::MonteCarlo { .. } => S::lit(2.0) * self.t,
        }
    }

    /// Quadrature controls suited to this density. Box windows over a
    /// Bernoulli convolution are only Hölder continuous, so refinement is
    /// capped instead of chasing a tolerance it cannot reach.
    pub fn default_quadrature(&self) -> Adaptive<S> {
        let rough = matches!(self.repr, Repr::Window { .. }) && has_fractal_part(self.mu);
        if rough {
            Adaptive {
                rel_tol: S::tol(1e-7),
                max_depth: 5,
                ..Adaptive::default()
            }
        } else {
            Adaptive::default()
        }
    }

    /// Integrates `g(x, p_t(x), p_t′(x))` over the domain.
    pub fn integrate<const N: usize>(
        &self,
        g: impl Fn(S, Point<S>) -> [S; N] + Sync,
        opts: &Adaptive<S>,
    ) -> Quadrature<S, N> {
        let panels = quadrature::panels(&self.domain(), &self.breakpoints(), self.panel_length());
        quadrature::integrate(|x| g(x, self.point(x)), &panels, opts)
    }

    fn gauss_point(&self, x: S, derivative: bool) -> Point<S> {
        let Repr::Gauss {
            atoms,
            max_sigma,
            polylines,
        } = &self.repr
        else {
            unreachable!("gauss_point on a non-Gaussian evaluator")
        };
        let reach = S::lit(GAUSSIAN_REACH + 1.0) * *max_sigma;
        let lo = atoms.partition_point(|a| a.position < x - reach);
        let hi = atoms.partition_point(|a| a.position <= x + reach);
        let mut p = S::zero();
        let mut dp = S::zero();
        let mut d2p = S::zero();
        for a in &atoms[lo..hi] {
            let u = (x - a.position) / a.sigma;
            let phi = a.weight * std_normal_pdf(u) / a.sigma;
            p = p + phi;
            if derivative {
                dp = dp - phi * u / a.sigma;
                d2p = d2p + phi * (u * u - S::one()) / (a.sigma * a.sigma);
            }
        }
        let sigma = self.t;
        let reach = S::lit(GAUSSIAN_REACH + 1.0) * sigma;
        for line in polylines {
            let n = line.x.len();
            let i0 = line.x.partition_point(|&v| v < x - reach).saturating_sub(1);
            let i1 = line.x.partition_point(|&v| v <= x + reach).min(n - 1);
            for i in i0..i1 {
                let (x0, x1) = (line.x[i], line.x[i + 1]);
                let (d0, d1) = (line.d[i], line.d[i + 1]);
                let len = x1 - x0;
                if len <= S::zero() {
                    continue;
                }
                let beta = (d1 - d0) / len;
                let (u0, u1) = ((x0 - x) / sigma, (x1 - x) / sigma);
                let mass = std_normal_mass(u0, u1);
                let (phi0, phi1) = (std_normal_pdf(u0) / sigma, std_normal_pdf(u1) / sigma);
                let ell = d0 + beta * (x - x0);
                p = p + ell * mass + beta * sigma * sigma * (phi0 - phi1);
                if derivative {
                    dp = dp - (d1 * phi1 - d0 * phi0) + beta * mass;
                    d2p = d2p - (d1 * u1 * phi1 - d0 * u0 * phi0) / sigma + beta * (phi0 - phi1);
                }
            }
        }
        Point {
            p: p.max(S::zero()),
            dp,
            d2p,
        }
    }

    fn window(&self, bins: &[(S, S, S)], x: S) -> (S, S) {
        let mut value = S::zero();
        let mut half = S::zero();
        for &(a, b, w) in bins {
            let m = box_window_mass(self.mu, x, self.t, a, b);
            let scale = w / (self.t * (b - a));
            value = value + m.value() * scale;
            half = half + m.width() / S::lit(2.0) * scale;
        }
        (value, half)
    }

    fn mc(&self, x: S) -> (Estimate<S>, S) {
        let Repr::MonteCarlo { draws, antithetic } = &self.repr else {
            unreachable!()
        };
        let sigma = self.t;
        let (p, _, _) = mc_pairs(draws, *antithetic, |y| {
            (std_normal_pdf((x - y) / sigma) / sigma, S::zero())
        });
        let se = p.1.sqrt();
        (
            Estimate {
                value: p.0,
                std_error: se,
                low_confidence: se > p.0 * S::lit(MC_SE_CEILING),
            },
            S::zero(),
        )
    }

    fn mc_derivatives(&self, x: S) -> (S, S) {
        let Repr::MonteCarlo { draws, antithetic } = &self.repr else {
            unreachable!()
        };
        let sigma = self.t;
        let (dp, d2p, _) = mc_pairs(draws, *antithetic, |y| {
            let u = (x - y) / sigma;
            let phi = std_normal_pdf(u) / sigma;
            (-phi * u / sigma, phi * (u * u - S::one()) / (sigma * sigma))
        });
        (dp.0, d2p.0)
    }
}

fn has_fractal_part<S: Real>(mu: &Measure<S>) -> bool {
    match mu {
        Measure::BernoulliConvolution(_) => true,
        Measure::Atomic(_) | Measure::GridDensity(_) => false,
        Measure::Mixture(m) => m.components().iter().any(|(_, c)| has_fractal_part(c)),
        Measure::LipschitzPushforward(p) => has_fractal_part(p.base()),
    }
}

fn check_t<S: Real>(t: S) -> Result<()> {
    if !(t > S::zero() && t.is_finite()) {
        return Err(Error::arg("t", format!("smoothing scale must be positive, got {t}")));
    }
    Ok(())
}

fn gauss_repr<S: Real>(mu: &Measure<S>, t: S) -> Repr<S> {
    let Pieces { atoms, polylines } = mu.discretize(t / S::lit(4.0));
    let t2 = t * t;
    let atoms: Vec<GaussAtom<S>> = atoms
        .into_iter()
        .map(|a| GaussAtom {
            position: a.position,
            weight: a.weight,
            sigma: (t2 + a.variance).sqrt(),
        })
        .collect();
    let max_sigma = atoms.iter().map(|a| a.sigma).fold(t, S::max);
    Repr::Gauss {
        atoms,
        max_sigma,
        polylines,
    }
}

/// Means and variances-of-the-mean of two statistics over the draws (pair
/// means when antithetic), plus their covariance-of-the-mean.
fn mc_pairs<S: Real>(
    draws: &[S],
    antithetic: bool,
    f: impl Fn(S) -> (S, S),
) -> ((S, S), (S, S), S) {
    let vals: Vec<(S, S)> = if antithetic {
        draws
            .chunks_exact(2)
            .map(|c| {
                let (a, b) = (f(c[0]), f(c[1]));
                ((a.0 + b.0) / S::lit(2.0), (a.1 + b.1) / S::lit(2.0))
            })
            .collect()
    } else {
        draws.iter().map(|&y| f(y)).collect()
    };
    let n = S::from_usize_lossy(vals.len());
    let m0 = vals.iter().map(|v| v.0).sum::<S>() / n;
    let m1 = vals.iter().map(|v| v.1).sum::<S>() / n;
    let (mut v0, mut v1, mut c) = (S::zero(), S::zero(), S::zero());
    for v in &vals {
        v0 = v0 + (v.0 - m0) * (v.0 - m0);
        v1 = v1 + (v.1 - m1) * (v.1 - m1);
        c = c + (v.0 - m0) * (v.1 - m1);
    }
    let denom = n * (n - S::one());
    ((m0, v0 / denom), (m1, v1 / denom), c / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd<'a>(mu: &'a Measure<f64>, k: &Kernel<f64>, t: f64) -> SmoothedDensity<'a, f64> {
        SmoothedDensity::new(mu, k, t).unwrap()
    }

    #[test]
    fn point_values() {
        let d0 = Measure::<f64>::dirac(0.0);
        let g = Kernel::gaussian();
        assert!((sd(&d0, &g, 1.0).density_at(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(sd(&d0, &Kernel::centered_box(), 0.2).density_at(0.0), 5.0);
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        assert!((sd(&u, &Kernel::centered_box(), 0.1).density_at(0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scores() {
        let d0 = Measure::<f64>::dirac(0.0);
        let g = Kernel::gaussian();
        assert!((sd(&d0, &g, 1.0).score_at(0.7).unwrap() + 0.7).abs() < 1e-14);
        assert!((sd(&d0, &g, 2.0).score_at(1.0).unwrap() + 0.25).abs() < 1e-14);
        let two = Measure::<f64>::uniform_atoms(vec![-1.0, 1.0]).unwrap();
        assert!(sd(&two, &g, 1.0).score_at(0.0).unwrap().abs() < 1e-15);
        assert!(matches!(
            sd(&d0, &g, 0.01).score_at(5.0),
            Err(Error::OutOfSupport { .. })
        ));
        assert!(sd(&d0, &Kernel::centered_box(), 0.1).score_at(0.0).is_err());
    }

    #[test]
    fn second_derivative_matches_differences() {
        let d0 = Measure::<f64>::dirac(0.0);
        let pt = sd(&d0, &Kernel::gaussian(), 1.0).point(0.7);
        assert!((pt.d2p - (0.49 - 1.0) * std_normal_pdf(0.7)).abs() < 1e-15);
        let mix = Measure::<f64>::mixture(vec![
            (0.5, Measure::bernoulli(0.25).unwrap()),
            (0.5, Measure::gaussian_grid(0.0, 1.0, 8.0, 801).unwrap()),
        ])
        .unwrap();
        let s = sd(&mix, &Kernel::gaussian(), 0.05);
        let h = 1e-5;
        for &x in &[-1.2, -0.3, 0.1, 0.77, 1.3] {
            let fd = (s.point(x + h).dp - s.point(x - h).dp) / (2.0 * h);
            let d2 = s.point(x).d2p;
            assert!((fd - d2).abs() <= 1e-5 * d2.abs().max(1.0), "x = {x}: {fd} vs {d2}");
        }
    }

    #[test]
    fn rejects_nonpositive_t() {
        let d0 = Measure::<f64>::dirac(0.0);
        assert!(SmoothedDensity::new(&d0, &Kernel::gaussian(), 0.0).is_err());
        assert!(SmoothedDensity::new(&d0, &Kernel::gaussian(), -1.0).is_err());
    }

    #[test]
    fn uniform_gaussian_matches_erf() {
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        let t = 0.3;
        let s = sd(&u, &Kernel::gaussian(), t);
        for &x in &[-0.5, 0.0, 0.2, 0.9, 1.4] {
            let exact = std_normal_mass(-x / t, (1.0 - x) / t);
            assert!((s.density_at(x) - exact).abs() < 1e-14, "x = {x}");
            let dexact = (std_normal_pdf(-x / t) - std_normal_pdf((1.0 - x) / t)) / t;
            assert!((s.point(x).dp - dexact).abs() < 1e-13);
            let d2exact = -(x * std_normal_pdf(-x / t) + (1.0 - x) * std_normal_pdf((1.0 - x) / t))
                / (t * t * t);
            assert!((s.point(x).d2p - d2exact).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn bernoulli_closed_form_agrees_with_monte_carlo() {
        let b = Measure::<f64>::bernoulli(0.25).unwrap();
        let t = 0.05;
        let cf = sd(&b, &Kernel::gaussian(), t);
        let mc = SmoothedDensity::monte_carlo(&b, t, MC_SAMPLES, 3).unwrap();
        for &x in &[0.7, 0.8, 1.0, 1.1, -1.25] {
            let e = mc.density_estimate(x);
            let c = cf.density_at(x);
            assert!((e.value - c).abs() <= 4.0 * e.std_error + 1e-12, "x = {x}: {c} vs {e:?}");
            let sc = mc.mc_score(x).unwrap();
            let c = cf.score_at(x).unwrap();
            assert!((sc.value - c).abs() <= 4.0 * sc.std_error + 1e-9, "x = {x}: {c} vs {sc:?}");
        }
    }

    #[test]
    fn custom_kernel_reproduces_box() {
        let k = Kernel::custom(-0.5, 1.0, vec![1.0, 1.0]).unwrap();
        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        let a = sd(&u, &k, 0.1);
        let b = sd(&u, &Kernel::centered_box(), 0.1);
        assert_eq!(a.method(), Method::Quadrature);
        for &x in &[-0.02, 0.03, 0.5, 0.97] {
            assert!((a.density_at(x) - b.density_at(x)).abs() < 1e-12);
        }
        assert!((k.entropy() - 0.0).abs() < 1e-12);
        let g: Kernel<f64> = Kernel::gaussian();
        assert!((g.entropy() + 1.418_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn total_mass_is_one() {
        let cases: Vec<Measure<f64>> = vec![
            Measure::dirac(0.3),
            Measure::uniform(0.0, 1.0).unwrap(),
            Measure::bernoulli(0.25).unwrap(),
            Measure::mixture(vec![
                (0.5, Measure::dirac(0.0)),
                (0.5, Measure::uniform(2.0, 3.0).unwrap()),
            ])
            .unwrap(),
            Measure::bernoulli(1.0 / 3.0)
                .unwrap()
                .dilated(2.0)
                .unwrap(),
        ];
        let kernels = [
            Kernel::gaussian(),
            Kernel::centered_box(),
            Kernel::unit_box(),
            Kernel::custom(-1.0, 0.5, vec![0.0, 1.0, 1.0, 1.0, 0.0]).unwrap(),
        ];
        for mu in &cases {
            for k in &kernels {
                for &t in &[0.1, 0.003] {
                    let s = sd(mu, k, t);
                    let q = s.integrate(|_, pt| [pt.p], &s.default_quadrature());
                    assert!(
                        (q.value[0] - 1.0).abs() < 1e-4,
                        "{} {} t={t}: {}",
                        mu.label(),
                        k.label(),
                        q.value[0]
                    );
                }
            }
        }
    }

    #[test]
    fn single_precision_density() {
        let d0 = Measure::<f32>::dirac(0.0);
        let s = SmoothedDensity::new(&d0, &Kernel::gaussian(), 1.0f32).unwrap();
        assert!((s.density_at(0.0) - 0.398_942_3).abs() < 1e-6);
    }
}
