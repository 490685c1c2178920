//! Test-function families for the variational Fisher information and the
//! Bochner scans, and the moment matrices they induce against a smoothed
//! measure.
//!
//! A basis element is a twice differentiable `φ` with closed-form `φ′` and
//! `φ″`. Against a density `p` the moments are
//!
//! ```text
//! b_i  = ∫ φ_i″ p        A_ij = ∫ φ_i′ φ_j′ p        C_ij = ∫ φ_i″ φ_j″ p
//! ```
//!
//! evaluated on the node set of one adaptive quadrature of `p` and the
//! Fisher density `p′²/p`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::real::Real;
use crate::smoothing::{Point, SmoothedDensity};

/// Default number of Hermite functions.
pub const HERMITE_SIZE: usize = 8;

/// Densities below this are left out of every moment.
const DENSITY_FLOOR: f64 = 1e-300;

/// Where a Hermite window sits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window<S: Real = f64> {
    /// Centered on the padded support of the smoothed density, with standard
    /// deviation a quarter of its width.
    Adapted,
    Fixed { center: S, width: S },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisElement<S: Real = f64> {
    /// `He_k(z) e^{−z²/2} / √(k!)` with `z = (x − c)/w`.
    Hermite { degree: usize, window: Window<S> },
    /// `x^k / k!`; `k = 2` is `x²/2`.
    Monomial { degree: u32 },
    /// `log p` of the smoothed density the moments are taken against. It
    /// attains the supremum defining the Fisher information, so a basis
    /// that contains it saturates the variational bound.
    LogDensity,
}

/// Finite family `φ_1 … φ_m`; nesting is by prefix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestFunctionBasis<S: Real = f64> {
    elements: Vec<BasisElement<S>>,
}

impl<S: Real> TestFunctionBasis<S> {
    pub fn new(elements: Vec<BasisElement<S>>) -> Self {
        TestFunctionBasis { elements }
    }

    pub fn empty() -> Self {
        TestFunctionBasis::default()
    }

    /// Hermite functions of degree `0..m` on the adapted window.
    pub fn hermite(m: usize) -> Self {
        Self::new(
            (0..m)
                .map(|degree| BasisElement::Hermite {
                    degree,
                    window: Window::Adapted,
                })
                .collect(),
        )
    }

    pub fn hermite_fixed(m: usize, center: S, width: S) -> Self {
        Self::new(
            (0..m)
                .map(|degree| BasisElement::Hermite {
                    degree,
                    window: Window::Fixed { center, width },
                })
                .collect(),
        )
    }

    pub fn monomials(degrees: &[u32]) -> Self {
        Self::new(
            degrees
                .iter()
                .map(|&degree| BasisElement::Monomial { degree })
                .collect(),
        )
    }

    /// The default Hermite family.
    pub fn default_hermite() -> Self {
        Self::hermite(HERMITE_SIZE)
    }

    /// The default Hermite family plus `log p`.
    pub fn adapted() -> Self {
        Self::default_hermite().with(BasisElement::LogDensity)
    }

    pub fn with(mut self, e: BasisElement<S>) -> Self {
        self.elements.push(e);
        self
    }

    /// The first `k` elements.
    pub fn prefix(&self, k: usize) -> Self {
        Self::new(self.elements[..k.min(self.len())].to_vec())
    }

    pub fn elements(&self) -> &[BasisElement<S>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn uses_density(&self) -> bool {
        self.elements.contains(&BasisElement::LogDensity)
    }

    /// Resolves adapted windows against `sd` and returns an evaluator of
    /// `(φ_i′, φ_i″)` at a point.
    pub(crate) fn resolve(&self, sd: &SmoothedDensity<'_, S>) -> Resolved<S> {
        let dom = sd.domain();
        let lo = dom.first().map_or(S::zero(), |d| d.0);
        let hi = dom.last().map_or(S::zero(), |d| d.1);
        let center = (lo + hi) / S::lit(2.0);
        let width = ((hi - lo) / S::lit(4.0)).max(sd.t());
        Resolved {
            elements: self
                .elements
                .iter()
                .map(|e| match *e {
                    BasisElement::Hermite { degree, window } => {
                        let (c, w) = match window {
                            Window::Adapted => (center, width),
                            Window::Fixed { center, width } => (center, width),
                        };
                        let norm = (1..=degree)
                            .map(|k| S::from_usize_lossy(k))
                            .fold(S::one(), |a, k| a * k)
                            .sqrt();
                        Elem::Hermite {
                            degree,
                            center: c,
                            width: w,
                            norm,
                        }
                    }
                    BasisElement::Monomial { degree } => Elem::Monomial { degree },
                    BasisElement::LogDensity => Elem::LogDensity,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Elem<S: Real> {
    Hermite {
        degree: usize,
        center: S,
        width: S,
        norm: S,
    },
    Monomial {
        degree: u32,
    },
    LogDensity,
}

#[derive(Clone, Debug)]
pub(crate) struct Resolved<S: Real> {
    pub(crate) elements: Vec<Elem<S>>,
}

impl<S: Real> Resolved<S> {
    /// `(φ, φ′, φ″)` of every element at `x`.
    pub(crate) fn eval(&self, x: S, pt: &Point<S>) -> Vec<(S, S, S)> {
        self.elements.iter().map(|e| eval_elem(e, x, pt)).collect()
    }
}

fn eval_elem<S: Real>(e: &Elem<S>, x: S, pt: &Point<S>) -> (S, S, S) {
    match *e {
        Elem::Hermite {
            degree,
            center,
            width,
            norm,
        } => {
            let z = (x - center) / width;
            let he = hermite_values(z, degree + 2);
            let g = (-(z * z) / S::lit(2.0)).exp() / norm;
            // (He_k g)′ = −He_{k+1} g in z
            (
                he[degree] * g,
                -he[degree + 1] * g / width,
                he[degree + 2] * g / (width * width),
            )
        }
        Elem::Monomial { degree } => {
            let k = degree as i32;
            let fact = |n: i32| (1..=n).fold(S::one(), |a, j| a * S::lit(j as f64));
            let term = |n: i32| {
                if n < 0 {
                    S::zero()
                } else {
                    x.powi(n) / fact(n)
                }
            };
            (term(k), term(k - 1), term(k - 2))
        }
        Elem::LogDensity => {
            if pt.p <= S::lit(DENSITY_FLOOR) {
                return (S::zero(), S::zero(), S::zero());
            }
            let s = pt.dp / pt.p;
            (pt.p.ln(), s, pt.d2p / pt.p - s * s)
        }
    }
}

/// Probabilists' Hermite polynomials `He_0 … He_n` at `z`.
pub fn hermite_values<S: Real>(z: S, n: usize) -> Vec<S> {
    let mut he = Vec::with_capacity(n + 1);
    he.push(S::one());
    if n >= 1 {
        he.push(z);
    }
    for k in 1..n {
        let next = z * he[k] - S::from_usize_lossy(k) * he[k - 1];
        he.push(next);
    }
    he
}

/// Moments of a basis against a smoothed density.
#[derive(Clone, Debug)]
pub struct Moments {
    /// `∫ p`.
    pub mass: f64,
    /// `∫ p′²/p`, the Fisher information by the same quadrature.
    pub fisher: f64,
    pub fisher_error: f64,
    pub converged: bool,
    pub b: DVector<f64>,
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `∫ g φ_i″ p` when a weight `g` was supplied.
    pub b_weighted: Option<DVector<f64>>,
}

/// Per-node quadrature mass, weight `g`, and basis values `(f, f′, f″)`.
type NodeRow<S> = (f64, f64, Vec<(S, S, S)>);

/// Moments of `basis` against `sd` (Gaussian kernel). With `weight = g`
/// the localized vector `∫ g φ_i″ p` is computed as well.
pub fn moments<S: Real>(
    sd: &SmoothedDensity<'_, S>,
    basis: &TestFunctionBasis<S>,
    weight: Option<&(dyn Fn(S) -> S + Sync)>,
) -> Moments {
    let curvature = basis.uses_density();
    let floor = S::lit(DENSITY_FLOOR);
    let q = sd.integrate(
        |_, pt| {
            if pt.p <= floor {
                return [pt.p, S::zero(), S::zero()];
            }
            let fisher = pt.dp * pt.dp / pt.p;
            let third = if curvature {
                let r = pt.d2p - fisher;
                r * r / pt.p
            } else {
                S::zero()
            };
            [pt.p, fisher, third]
        },
        &sd.default_quadrature(),
    );
    let resolved = basis.resolve(sd);
    let m = basis.len();
    let rows: Vec<NodeRow<S>> = q
        .nodes
        .par_iter()
        .zip(&q.weights)
        .map(|(&x, &w)| {
            let pt = sd.point(x);
            let mass = (w * pt.p).to_f64_lossy();
            let g = weight.map_or(S::one(), |g| g(x)).to_f64_lossy();
            let vals = if pt.p > floor {
                resolved.eval(x, &pt)
            } else {
                Vec::new()
            };
            (mass, g, vals)
        })
        .collect();
    let mut b = DVector::zeros(m);
    let mut bw = DVector::zeros(m);
    let mut a = DMatrix::zeros(m, m);
    let mut c = DMatrix::zeros(m, m);
    for (mass, g, vals) in &rows {
        if vals.is_empty() || *mass == 0.0 {
            continue;
        }
        for i in 0..m {
            let (_, d1i, d2i) = vals[i];
            let (d1i, d2i) = (d1i.to_f64_lossy(), d2i.to_f64_lossy());
            b[i] += mass * d2i;
            bw[i] += mass * g * d2i;
            for j in 0..=i {
                let (_, d1j, d2j) = vals[j];
                a[(i, j)] += mass * d1i * d1j.to_f64_lossy();
                c[(i, j)] += mass * d2i * d2j.to_f64_lossy();
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
            c[(j, i)] = c[(i, j)];
        }
    }
    Moments {
        mass: q.value[0].to_f64_lossy(),
        fisher: q.value[1].to_f64_lossy(),
        fisher_error: q.error[1].to_f64_lossy(),
        converged: q.converged,
        b,
        a,
        c,
        b_weighted: weight.map(|_| bw),
    }
}
