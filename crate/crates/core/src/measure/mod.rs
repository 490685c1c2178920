//! Probability measures on the real line.
//!
//! A [`Measure`] is one of five representations: finitely many atoms, a
//! piecewise-linear density on a uniform grid, the symmetric Bernoulli
//! convolution `⊛_k ½(δ_{−λ^k} + δ_{λ^k})`, a finite mixture, or the
//! push-forward of another measure through a bi-Lipschitz map. Measures are
//! immutable after construction.
//!
//! Interval masses are exact for atoms and grid densities (the density is
//! integrated in closed form), computed through the self-similarity
//! recursion for Bernoulli convolutions, and pulled back through the map for
//! push-forwards. When the Bernoulli recursion hits its depth cap the answer
//! is a [`Mass::Bracket`].

pub mod map;
pub mod pieces;
pub mod spec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;

pub use map::{MapKind, MapSpec};
pub use pieces::{Pieces, Polyline, WeightedAtom};
pub use spec::{parse_measure, MeasureSpec};

/// Default recursion cap for Bernoulli-convolution interval masses.
pub const BERNOULLI_DEPTH_CAP: usize = 48;

/// Result of an interval-mass query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mass<S: Real = f64> {
    Exact(S),
    /// The recursion stopped early; the true mass lies in `[lower, upper]`.
    Bracket { lower: S, upper: S },
}

impl<S: Real> Mass<S> {
    /// Point value; the midpoint of a bracket.
    pub fn value(self) -> S {
        match self {
            Mass::Exact(v) => v,
            Mass::Bracket { lower, upper } => (lower + upper) / S::lit(2.0),
        }
    }

    pub fn lower(self) -> S {
        match self {
            Mass::Exact(v) => v,
            Mass::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(self) -> S {
        match self {
            Mass::Exact(v) => v,
            Mass::Bracket { upper, .. } => upper,
        }
    }

    pub fn width(self) -> S {
        self.upper() - self.lower()
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Mass::Exact(_))
    }

    fn from_parts(lower: S, width: S) -> Self {
        if width > S::zero() {
            Mass::Bracket {
                lower,
                upper: lower + width,
            }
        } else {
            Mass::Exact(lower)
        }
    }

    fn accumulate(acc: &mut (S, S), weight: S, m: Mass<S>) {
        acc.0 = acc.0 + weight * m.lower();
        acc.1 = acc.1 + weight * m.width();
    }
}

/// Finitely many atoms, stored sorted by position.
#[derive(Clone, Debug, PartialEq)]
pub struct Atomic<S: Real = f64> {
    positions: Vec<S>,
    weights: Vec<S>,
    /// `cumulative[i]` = total weight of the first `i` atoms.
    cumulative: Vec<S>,
}

impl<S: Real> Atomic<S> {
    pub fn new(positions: Vec<S>, weights: Vec<S>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::measure("positions", "at least one atom is required"));
        }
        if positions.len() != weights.len() {
            return Err(Error::measure(
                "weights",
                format!("{} weights for {} positions", weights.len(), positions.len()),
            ));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::measure("positions", format!("non-finite position {p}")));
        }
        check_probability_vector("weights", &weights, false)?;
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&i, &j| positions[i].partial_cmp(&positions[j]).unwrap());
        let positions: Vec<S> = order.iter().map(|&i| positions[i]).collect();
        let weights: Vec<S> = order.iter().map(|&i| weights[i]).collect();
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        let mut acc = S::zero();
        cumulative.push(acc);
        for &w in &weights {
            acc = acc + w;
            cumulative.push(acc);
        }
        Ok(Atomic {
            positions,
            weights,
            cumulative,
        })
    }

    pub fn positions(&self) -> &[S] {
        &self.positions
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    fn mass(&self, a: S, b: S) -> S {
        let lo = self.positions.partition_point(|&p| p < a);
        let hi = self.positions.partition_point(|&p| p <= b);
        if hi <= lo {
            S::zero()
        } else {
            self.cumulative[hi] - self.cumulative[lo]
        }
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let total = *self.cumulative.last().unwrap();
        let u = S::lit(rng.gen::<f64>()) * total;
        let i = self.cumulative[1..].partition_point(|&c| c <= u);
        self.positions[i.min(self.positions.len() - 1)]
    }
}

/// Piecewise-linear density through `(origin + i·step, values[i])`, zero
/// outside `[origin, origin + (len−1)·step]`. Normalized at construction so
/// the trapezoid integral is one.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity<S: Real = f64> {
    origin: S,
    step: S,
    values: Vec<S>,
    /// CDF at each node.
    node_cdf: Vec<S>,
}

impl<S: Real> GridDensity<S> {
    pub fn new(origin: S, step: S, values: Vec<S>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::measure("origin", "must be finite"));
        }
        if !(step > S::zero() && step.is_finite()) {
            return Err(Error::measure("step", format!("must be positive, got {step}")));
        }
        if values.len() < 2 {
            return Err(Error::measure("values", "need at least two grid values"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= S::zero())) {
            return Err(Error::measure("values", format!("invalid density value {v}")));
        }
        let mass = trapezoid_mass(step, &values);
        if !(mass > S::zero()) {
            return Err(Error::measure("values", "density integrates to zero"));
        }
        let values = if (mass - S::one()).abs() <= S::tol(1e-14) {
            values
        } else {
            values.into_iter().map(|v| v / mass).collect()
        };
        let half = S::lit(0.5);
        let mut node_cdf = Vec::with_capacity(values.len());
        let mut acc = S::zero();
        node_cdf.push(acc);
        for w in values.windows(2) {
            acc = acc + half * step * (w[0] + w[1]);
            node_cdf.push(acc);
        }
        Ok(GridDensity {
            origin,
            step,
            values,
            node_cdf,
        })
    }

    /// Uniform law on `[a, b]`; two nodes represent it exactly.
    pub fn uniform(a: S, b: S) -> Result<Self> {
        if !(b > a) {
            return Err(Error::measure("b", "uniform needs a < b"));
        }
        let h = S::one() / (b - a);
        Self::new(a, b - a, vec![h, h])
    }

    /// Samples `f` at `nodes` equally spaced points of `[lo, hi]`.
    pub fn from_fn(lo: S, hi: S, nodes: usize, f: impl Fn(S) -> S) -> Result<Self> {
        if nodes < 2 || !(hi > lo) {
            return Err(Error::measure("values", "need lo < hi and at least two nodes"));
        }
        let step = (hi - lo) / S::from_usize_lossy(nodes - 1);
        let values = (0..nodes)
            .map(|i| f(lo + step * S::from_usize_lossy(i)))
            .collect();
        Self::new(lo, step, values)
    }

    pub fn origin(&self) -> S {
        self.origin
    }

    pub fn step(&self) -> S {
        self.step
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn node(&self, i: usize) -> S {
        self.origin + self.step * S::from_usize_lossy(i)
    }

    pub fn end(&self) -> S {
        self.node(self.values.len() - 1)
    }

    /// Density at `x` (linear interpolation, zero outside the grid).
    pub fn density(&self, x: S) -> S {
        if x < self.origin || x > self.end() {
            return S::zero();
        }
        let (i, u) = self.locate(x);
        let v0 = self.values[i];
        let v1 = self.values[i + 1];
        v0 + (v1 - v0) * u / self.step
    }

    /// Cell index and offset within the cell, for `x` inside the grid.
    fn locate(&self, x: S) -> (usize, S) {
        let cells = self.values.len() - 1;
        let i = ((x - self.origin) / self.step)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(cells - 1);
        (i, x - self.node(i))
    }

    pub fn cdf(&self, x: S) -> S {
        if x <= self.origin {
            return S::zero();
        }
        if x >= self.end() {
            return *self.node_cdf.last().unwrap();
        }
        let (i, u) = self.locate(x);
        let v0 = self.values[i];
        let v1 = self.values[i + 1];
        self.node_cdf[i] + v0 * u + (v1 - v0) * u * u / (S::lit(2.0) * self.step)
    }

    fn mass(&self, a: S, b: S) -> S {
        (self.cdf(b) - self.cdf(a)).max(S::zero())
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let total = *self.node_cdf.last().unwrap();
        let u = S::lit(rng.gen::<f64>()) * total;
        let cells = self.values.len() - 1;
        let i = self.node_cdf[1..].partition_point(|&c| c <= u).min(cells - 1);
        let target = u - self.node_cdf[i];
        let v0 = self.values[i];
        let k = (self.values[i + 1] - v0) / self.step;
        // v0·s + k·s²/2 = target, stable root
        let disc = (v0 * v0 + S::lit(2.0) * k * target).max(S::zero());
        let denom = v0 + disc.sqrt();
        let s = if denom > S::zero() {
            S::lit(2.0) * target / denom
        } else {
            S::zero()
        };
        self.node(i) + s.min(self.step).max(S::zero())
    }
}

fn trapezoid_mass<S: Real>(step: S, values: &[S]) -> S {
    let inner: S = values.iter().copied().sum();
    step * (inner - S::lit(0.5) * (values[0] + values[values.len() - 1]))
}

/// `⊛_{k≥0} ½(δ_{−λ^k} + δ_{λ^k})`, the law of `Σ ε_k λ^k` with fair signs.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliConvolution<S: Real = f64> {
    lambda: S,
    depth_cap: usize,
}

impl<S: Real> BernoulliConvolution<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if !(lambda > S::zero() && lambda < S::lit(0.5)) {
            return Err(Error::measure(
                "lambda",
                format!("must lie in (0, 1/2), got {lambda}"),
            ));
        }
        Ok(BernoulliConvolution {
            lambda,
            depth_cap: BERNOULLI_DEPTH_CAP,
        })
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    /// `1/(1−λ)`: the support lies in `[−R, R]`.
    pub fn radius(&self) -> S {
        S::one() / (S::one() - self.lambda)
    }

    /// `log 2 / log(1/λ)`, the local scaling exponent of the measure.
    pub fn scaling_exponent(&self) -> S {
        S::LN_2() / (-self.lambda.ln())
    }

    /// `Σ_k λ^{2k} = 1/(1−λ²)`.
    pub fn second_moment(&self) -> S {
        S::one() / (S::one() - self.lambda * self.lambda)
    }

    fn mass(&self, a: S, b: S) -> Mass<S> {
        let r = self.radius();
        let lam = self.lambda;
        let half = S::lit(0.5);
        let mut exact = S::zero();
        let mut slack = S::zero();
        // ±R is a fixed point of the rescaling, which rounding does not
        // preserve; endpoints this close to the box edge are snapped to it.
        let snap = S::epsilon() * S::lit(8.0) * r;
        let mut stack = vec![(a, b, S::one(), 0usize)];
        while let Some((a, b, w, depth)) = stack.pop() {
            if b < -r - snap || a > r + snap {
                continue;
            }
            if a <= -r + snap && b >= r - snap {
                exact = exact + w;
                continue;
            }
            if depth >= self.depth_cap {
                slack = slack + w;
                continue;
            }
            let w = w * half;
            stack.push(((a - S::one()) / lam, (b - S::one()) / lam, w, depth + 1));
            stack.push(((a + S::one()) / lam, (b + S::one()) / lam, w, depth + 1));
        }
        Mass::from_parts(exact, slack)
    }

    /// Depth `K` with `λ^{K+1}/(1−λ)` below the sampling tolerance.
    pub fn sampling_depth(&self) -> usize {
        let tol = S::tol(1e-12);
        let mut k = 0usize;
        let mut tail = self.lambda / (S::one() - self.lambda);
        while tail >= tol && k < 200 {
            tail = tail * self.lambda;
            k += 1;
        }
        k
    }

    /// Deterministic truncation error of [`Self::sample_one`].
    pub fn truncation_error(&self) -> S {
        self.lambda.powi(self.sampling_depth() as i32 + 1) / (S::one() - self.lambda)
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let depth = self.sampling_depth();
        let mut bits: u64 = rng.gen();
        let mut left = 64;
        let mut x = S::zero();
        // Horner from the deepest term
        for _ in 0..=depth {
            if left == 0 {
                bits = rng.gen();
                left = 64;
            }
            let sign = if bits & 1 == 1 { S::one() } else { -S::one() };
            bits >>= 1;
            left -= 1;
            x = x * self.lambda + sign;
        }
        x
    }
}

/// A convex combination of measures.
#[derive(Clone, Debug)]
pub struct Mixture<S: Real = f64> {
    components: Vec<(S, Measure<S>)>,
}

impl<S: Real> Mixture<S> {
    pub fn new(components: Vec<(S, Measure<S>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::measure("components", "mixture needs a component"));
        }
        let weights: Vec<S> = components.iter().map(|c| c.0).collect();
        check_probability_vector("components.weight", &weights, true)?;
        Ok(Mixture { components })
    }

    pub fn components(&self) -> &[(S, Measure<S>)] {
        &self.components
    }
}

/// Image of `base` under a certified bi-Lipschitz map.
#[derive(Clone, Debug)]
pub struct Pushforward<S: Real = f64> {
    base: Box<Measure<S>>,
    map: MapSpec<S>,
}

impl<S: Real> Pushforward<S> {
    pub fn base(&self) -> &Measure<S> {
        &self.base
    }

    pub fn map(&self) -> &MapSpec<S> {
        &self.map
    }

    fn pulled_back(&self, a: S, b: S) -> (S, S) {
        let (fa, fb) = (self.map.inverse(a), self.map.inverse(b));
        if self.map.is_increasing() {
            (fa, fb)
        } else {
            (fb, fa)
        }
    }
}

fn check_probability_vector<S: Real>(field: &str, w: &[S], strictly_positive: bool) -> Result<()> {
    for &x in w {
        let ok = x.is_finite() && if strictly_positive { x > S::zero() } else { x >= S::zero() };
        if !ok {
            return Err(Error::measure(field, format!("invalid weight {x}")));
        }
    }
    let total: S = w.iter().copied().sum();
    if (total - S::one()).abs() > S::tol(1e-12) {
        return Err(Error::measure(
            field,
            format!("weights sum to {total}, expected 1"),
        ));
    }
    Ok(())
}

/// A probability measure on ℝ.
#[derive(Clone, Debug)]
pub enum Measure<S: Real = f64> {
    Atomic(Atomic<S>),
    GridDensity(GridDensity<S>),
    BernoulliConvolution(BernoulliConvolution<S>),
    Mixture(Mixture<S>),
    LipschitzPushforward(Pushforward<S>),
}

/// Draws plus the deterministic truncation error they carry.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<S: Real = f64> {
    pub values: Vec<S>,
    pub truncation_error: S,
}

impl<S: Real> Measure<S> {
    pub fn dirac(x: S) -> Self {
        Measure::Atomic(Atomic::new(vec![x], vec![S::one()]).expect("finite position"))
    }

    pub fn atomic(positions: Vec<S>, weights: Vec<S>) -> Result<Self> {
        Atomic::new(positions, weights).map(Measure::Atomic)
    }

    /// Equal-weight atoms.
    pub fn uniform_atoms(positions: Vec<S>) -> Result<Self> {
        let n = S::from_usize_lossy(positions.len().max(1));
        let weights = vec![S::one() / n; positions.len()];
        Self::atomic(positions, weights)
    }

    pub fn uniform(a: S, b: S) -> Result<Self> {
        GridDensity::uniform(a, b).map(Measure::GridDensity)
    }

    /// `N(mean, sd²)` sampled on `mean ± half_width·sd` with `nodes` nodes.
    pub fn gaussian_grid(mean: S, sd: S, half_width: S, nodes: usize) -> Result<Self> {
        let lo = mean - half_width * sd;
        let hi = mean + half_width * sd;
        GridDensity::from_fn(lo, hi, nodes, |x| {
            crate::real::std_normal_pdf((x - mean) / sd) / sd
        })
        .map(Measure::GridDensity)
    }

    pub fn grid_density(origin: S, step: S, values: Vec<S>) -> Result<Self> {
        GridDensity::new(origin, step, values).map(Measure::GridDensity)
    }

    pub fn bernoulli(lambda: S) -> Result<Self> {
        BernoulliConvolution::new(lambda).map(Measure::BernoulliConvolution)
    }

    pub fn mixture(components: Vec<(S, Measure<S>)>) -> Result<Self> {
        Mixture::new(components).map(Measure::Mixture)
    }

    /// Push-forward through `map`; the map's constants are re-checked on the
    /// support of `base`.
    pub fn pushforward(base: Measure<S>, map: MapSpec<S>) -> Result<Self> {
        let (lo, hi) = base.support_bounds();
        let map = MapSpec::new(
            map.kind().clone(),
            map.lower_constant(),
            map.upper_constant(),
            (lo, hi),
        )?;
        Ok(Measure::LipschitzPushforward(Pushforward {
            base: Box::new(base),
            map,
        }))
    }

    /// `μ(· − c)`.
    pub fn shifted(self, c: S) -> Result<Self> {
        Self::pushforward(self, MapSpec::affine(S::one(), c)?)
    }

    /// Image under `x ↦ k·x`.
    pub fn dilated(self, k: S) -> Result<Self> {
        Self::pushforward(self, MapSpec::affine(k, S::zero())?)
    }

    /// `μ([a, b])`. Empty when `a > b`.
    pub fn interval_mass(&self, a: S, b: S) -> Mass<S> {
        if a > b || a.is_nan() || b.is_nan() {
            return Mass::Exact(S::zero());
        }
        match self {
            Measure::Atomic(m) => Mass::Exact(m.mass(a, b)),
            Measure::GridDensity(m) => Mass::Exact(m.mass(a, b)),
            Measure::BernoulliConvolution(m) => m.mass(a, b),
            Measure::Mixture(m) => {
                let mut acc = (S::zero(), S::zero());
                for (w, c) in &m.components {
                    Mass::accumulate(&mut acc, *w, c.interval_mass(a, b));
                }
                Mass::from_parts(acc.0, acc.1)
            }
            Measure::LipschitzPushforward(p) => {
                let (lo, hi) = p.pulled_back(a, b);
                p.base.interval_mass(lo, hi)
            }
        }
    }

    /// `μ((−∞, x])`.
    pub fn cdf(&self, x: S) -> Mass<S> {
        self.interval_mass(S::neg_infinity(), x)
    }

    /// An interval certified to contain the support.
    pub fn support_bounds(&self) -> (S, S) {
        match self {
            Measure::Atomic(m) => (m.positions[0], *m.positions.last().unwrap()),
            Measure::GridDensity(m) => (m.origin, m.end()),
            Measure::BernoulliConvolution(m) => {
                let r = m.radius() * (S::one() + S::epsilon() * S::lit(4.0));
                (-r, r)
            }
            Measure::Mixture(m) => m.components.iter().fold(
                (S::infinity(), S::neg_infinity()),
                |(lo, hi), (_, c)| {
                    let (a, b) = c.support_bounds();
                    (lo.min(a), hi.max(b))
                },
            ),
            Measure::LipschitzPushforward(p) => {
                let (a, b) = p.base.support_bounds();
                let (fa, fb) = (p.map.apply(a), p.map.apply(b));
                (fa.min(fb), fa.max(fb))
            }
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match self {
            Measure::Atomic(m) => m.sample_one(rng),
            Measure::GridDensity(m) => m.sample_one(rng),
            Measure::BernoulliConvolution(m) => m.sample_one(rng),
            Measure::Mixture(m) => {
                let u = S::lit(rng.gen::<f64>());
                let mut acc = S::zero();
                for (w, c) in &m.components {
                    acc = acc + *w;
                    if u < acc {
                        return c.sample_one(rng);
                    }
                }
                m.components.last().unwrap().1.sample_one(rng)
            }
            Measure::LipschitzPushforward(p) => p.map.apply(p.base.sample_one(rng)),
        }
    }

    /// `n` i.i.d. draws; deterministic given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> SampleBatch<S> {
        SampleBatch {
            values: (0..n).map(|_| self.sample_one(rng)).collect(),
            truncation_error: self.truncation_error(),
        }
    }

    /// Worst-case distance between a draw and the exact random variable.
    pub fn truncation_error(&self) -> S {
        match self {
            Measure::Atomic(_) | Measure::GridDensity(_) => S::zero(),
            Measure::BernoulliConvolution(m) => m.truncation_error(),
            Measure::Mixture(m) => m
                .components
                .iter()
                .map(|(_, c)| c.truncation_error())
                .fold(S::zero(), S::max),
            Measure::LipschitzPushforward(p) => p.map.upper_constant() * p.base.truncation_error(),
        }
    }

    /// Point masses `(position, mass)`, unmerged.
    pub fn atoms(&self) -> Vec<(S, S)> {
        match self {
            Measure::Atomic(m) => m
                .positions
                .iter()
                .copied()
                .zip(m.weights.iter().copied())
                .filter(|(_, w)| *w > S::zero())
                .collect(),
            Measure::GridDensity(_) | Measure::BernoulliConvolution(_) => Vec::new(),
            Measure::Mixture(m) => m
                .components
                .iter()
                .flat_map(|(w, c)| c.atoms().into_iter().map(move |(x, a)| (x, *w * a)))
                .collect(),
            Measure::LipschitzPushforward(p) => p
                .base
                .atoms()
                .into_iter()
                .map(|(x, a)| (p.map.apply(x), a))
                .collect(),
        }
    }

    /// Short human-readable description.
    pub fn label(&self) -> String {
        match self {
            Measure::Atomic(m) if m.positions.len() == 1 => format!("dirac({})", m.positions[0]),
            Measure::Atomic(m) => format!("atomic[{}]", m.positions.len()),
            Measure::GridDensity(m) if m.values.len() == 2 && m.values[0] == m.values[1] => {
                format!("uniform[{}, {}]", m.origin, m.end())
            }
            Measure::GridDensity(m) => format!("grid[{} nodes]", m.values.len()),
            Measure::BernoulliConvolution(m) => format!("bernoulli({})", m.lambda),
            Measure::Mixture(m) => {
                let parts: Vec<String> = m
                    .components
                    .iter()
                    .map(|(w, c)| format!("{w}·{}", c.label()))
                    .collect();
                parts.join(" + ")
            }
            Measure::LipschitzPushforward(p) => format!("{:?}#{}", p.map.kind(), p.base.label()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;

    /// All 2^depth truncated sign-sequence points Σ_{k<depth} ε_k λ^k.
    fn sign_sequence_points(lambda: f64, depth: u32) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut scale = 1.0;
        for _ in 0..depth {
            pts = pts
                .iter()
                .flat_map(|&p| [p - scale, p + scale])
                .collect();
            scale *= lambda;
        }
        pts
    }

    fn enumerated_mass(pts: &[f64], a: f64, b: f64) -> f64 {
        pts.iter().filter(|&&p| p >= a && p <= b).count() as f64 / pts.len() as f64
    }

    #[test]
    fn dirac_full_mass() {
        let d = Measure::<f64>::dirac(0.0);
        assert_eq!(d.interval_mass(-1.0, 1.0), Mass::Exact(1.0));
        assert_eq!(d.interval_mass(0.5, 1.0), Mass::Exact(0.0));
        assert_eq!(d.support_bounds(), (0.0, 0.0));
    }

    #[test]
    fn bernoulli_half_line_is_half() {
        let m = Measure::<f64>::bernoulli(1.0 / 3.0).unwrap();
        let (_, hi) = m.support_bounds();
        assert_eq!(m.interval_mass(0.0, hi), Mass::Exact(0.5));
        let (lo, hi) = m.support_bounds();
        assert!((lo + 1.5).abs() < 1e-14 && (hi - 1.5).abs() < 1e-14 && hi >= 1.5);
        assert!(m.interval_mass(lo, hi).value() == 1.0);
    }

    #[test]
    fn bernoulli_ball_masses_match_enumeration() {
        // Balls of radius λ^k around a support point: exact recursion vs the
        // depth-16 sign-sequence oracle, and mass ≍ 2^{-k}.
        let lambda = 0.25;
        let pts = sign_sequence_points(lambda, 16);
        let m = Measure::<f64>::bernoulli(lambda).unwrap();
        for &c in &[pts[12345], pts[0], pts[40000]] {
            for k in 1..7 {
                let t = lambda.powi(k);
                let exact = m.interval_mass(c - t, c + t).value();
                let oracle = enumerated_mass(&pts, c - t, c + t);
                assert!((exact - oracle).abs() <= 2.0 * 2f64.powi(-16), "k={k}: {exact} vs {oracle}");
                let excess = exact.log2() + k as f64;
                assert!((-2.0..=1.0).contains(&excess), "k={k}: {exact}");
            }
        }
    }

    #[test]
    fn bernoulli_random_intervals_match_enumeration() {
        use rand::Rng;
        let lambda = 0.25;
        let pts = sign_sequence_points(lambda, 16);
        let m = Measure::<f64>::bernoulli(lambda).unwrap();
        let mut rng = task_rng(1, 0);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-1.5..1.5);
            let b = a + rng.gen_range(0.0..1.0);
            let got = m.interval_mass(a, b).value();
            let oracle = enumerated_mass(&pts, a, b);
            // boundary cells of depth 16 carry at most 2·2^-16
            assert!((got - oracle).abs() <= 2.0 * 2f64.powi(-16), "[{a}, {b}]: {got} vs {oracle}");
        }
    }

    #[test]
    fn depth_cap_returns_bracket() {
        let m = Measure::BernoulliConvolution(BernoulliConvolution::new(0.25).unwrap().with_depth_cap(3));
        // interval ending at a support point straddles forever
        // 0.8 = 1/(1+λ) is a support point (alternating signs)
        let r = m.interval_mass(-0.1, 0.8);
        match r {
            Mass::Bracket { lower, upper } => assert!(lower < upper && upper - lower <= 2.0 / 8.0 + 1e-15),
            Mass::Exact(_) => panic!("expected a bracket"),
        }
    }

    #[test]
    fn sampling_basics() {
        let mut rng = task_rng(3, 0);
        assert_eq!(Measure::<f64>::dirac(0.0).sample(5, &mut rng).values, vec![0.0; 5]);
        let mix = Measure::<f64>::mixture(vec![(1.0, Measure::<f64>::dirac(3.0))]).unwrap();
        assert_eq!(mix.sample(3, &mut rng).values, vec![3.0; 3]);
    }

    #[test]
    fn bernoulli_sample_mean_is_centered() {
        let m = Measure::<f64>::bernoulli(0.25).unwrap();
        let batch = m.sample(100_000, &mut task_rng(42, 1));
        assert!(batch.truncation_error < 1e-12);
        let n = batch.values.len() as f64;
        let mean = batch.values.iter().sum::<f64>() / n;
        let sd = (1.0 / (1.0 - 0.0625_f64)).sqrt();
        assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = Measure::<f64>::mixture(vec![
            (0.5, Measure::<f64>::bernoulli(0.3).unwrap()),
            (0.5, Measure::<f64>::uniform(2.0, 3.0).unwrap()),
        ])
        .unwrap();
        let a = m.sample(50, &mut task_rng(9, 2));
        let b = m.sample(50, &mut task_rng(9, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn grid_density_mass_and_normalization() {
        let g = GridDensity::<f64>::new(0.0, 0.5, vec![1.0, 3.0, 1.0]).unwrap();
        // trapezoid mass of raw values is 2, so values are halved
        assert_eq!(g.values(), &[0.5, 1.5, 0.5]);
        assert!((g.cdf(1.0) - 1.0).abs() < 1e-15);
        // ∫_0^{0.25} (0.5 + 2x) dx = 0.125 + 0.0625
        assert!((g.cdf(0.25) - 0.1875).abs() < 1e-15);
        let m = Measure::GridDensity(g);
        assert!((m.interval_mass(0.25, 0.75).value() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn mixture_support_bounds() {
        let m = Measure::<f64>::mixture(vec![
            (0.5, Measure::<f64>::dirac(0.0)),
            (0.5, Measure::<f64>::uniform(0.0, 1.0).unwrap()),
        ])
        .unwrap();
        assert_eq!(m.support_bounds(), (0.0, 1.0));
        assert!((m.interval_mass(0.0, 1.0).value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(Measure::<f64>::atomic(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(Measure::<f64>::atomic(vec![0.0], vec![0.5, 0.5]).is_err());
        assert!(Measure::<f64>::bernoulli(0.5).is_err());
        assert!(Measure::<f64>::bernoulli(0.0).is_err());
        assert!(Measure::<f64>::grid_density(0.0, -1.0, vec![1.0, 1.0]).is_err());
        assert!(Measure::<f64>::grid_density(0.0, 1.0, vec![0.0, 0.0]).is_err());
        assert!(Measure::<f64>::mixture(vec![(0.0, Measure::<f64>::dirac(0.0)), (1.0, Measure::<f64>::dirac(1.0))]).is_err());
        let err = Measure::<f64>::atomic(vec![0.0, 1.0], vec![-0.5, 1.5]).unwrap_err();
        assert!(err.to_string().contains("weights"));
    }

    #[test]
    fn pushforward_mass_identity() {
        let base = Measure::<f64>::bernoulli(0.25).unwrap();
        let f = MapSpec::new(
            MapKind::LinearPlusSine {
                slope: 2.0,
                amplitude: 1.0,
                shift: 0.0,
            },
            1.0,
            3.0,
            (-1.0, 1.0),
        )
        .unwrap();
        let push = Measure::<f64>::pushforward(base.clone(), f.clone()).unwrap();
        for &(a, b) in &[(-1.0, 0.5), (0.1, 2.0), (-3.0, 3.0)] {
            let lhs = push.interval_mass(a, b).value();
            let rhs = base.interval_mass(f.inverse(a), f.inverse(b)).value();
            assert_eq!(lhs, rhs);
        }
        let (lo, hi) = push.support_bounds();
        assert!((push.interval_mass(lo, hi).value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_pushforward_of_atoms() {
        let m = Measure::<f64>::atomic(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        let p = Measure::<f64>::pushforward(m, MapSpec::affine(-1.0, 0.0).unwrap()).unwrap();
        assert_eq!(p.interval_mass(-1.0, -0.5).value(), 0.75);
        assert_eq!(p.support_bounds(), (-1.0, 0.0));
    }

    #[test]
    fn single_precision_masses() {
        let m = Measure::<f32>::bernoulli(0.25).unwrap();
        assert_eq!(m.interval_mass(0.0, 2.0).value(), 0.5);
        let u = Measure::<f32>::uniform(0.0, 1.0).unwrap();
        assert!((u.interval_mass(0.45, 0.55).value() - 0.1).abs() < 1e-6);
    }
}
