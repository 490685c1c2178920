//! Resolution-controlled discretization of a measure.
//!
//! Kernel convolutions need a concrete representation: a sorted list of
//! weighted atoms (each optionally carrying a small Gaussian variance) and a
//! list of piecewise-linear density pieces. Atomic and grid measures are
//! represented exactly. A Bernoulli convolution becomes its `2^K` depth-`K`
//! partial sums, each carrying the variance `λ^{2K}/(1−λ²)` of the discarded
//! tail, with `K` the smallest depth whose tail radius `λ^K/(1−λ)` is below
//! the requested resolution.

use crate::real::Real;

use super::{Measure, Pushforward};

/// Upper bound on the Bernoulli truncation depth (2^20 atoms).
pub const MAX_SERIES_DEPTH: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedAtom<S: Real = f64> {
    pub position: S,
    pub weight: S,
    /// Variance of the residual this atom stands for (zero for true atoms).
    pub variance: S,
}

/// Piecewise-linear density through `(x[i], d[i])`, zero outside
/// `[x[0], x[last]]`. Carries total mass `mass()` (not necessarily one).
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<S: Real = f64> {
    pub x: Vec<S>,
    pub d: Vec<S>,
}

impl<S: Real> Polyline<S> {
    pub fn mass(&self) -> S {
        let half = S::lit(0.5);
        self.x
            .windows(2)
            .zip(self.d.windows(2))
            .map(|(x, d)| half * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }

    pub fn start(&self) -> S {
        self.x[0]
    }

    pub fn end(&self) -> S {
        *self.x.last().unwrap()
    }

    fn scale(&mut self, w: S) {
        for d in &mut self.d {
            *d = *d * w;
        }
    }

    /// Splits each segment into equal parts no longer than `h`; the density
    /// stays exactly the same function.
    pub fn refined(&self, h: S) -> Polyline<S> {
        let mut x = vec![self.x[0]];
        let mut d = vec![self.d[0]];
        for i in 0..self.x.len() - 1 {
            let len = self.x[i + 1] - self.x[i];
            let parts = (len / h).ceil().to_usize().unwrap_or(1).clamp(1, 1 << 22);
            let p = S::from_usize_lossy(parts);
            for j in 1..=parts {
                let u = S::from_usize_lossy(j) / p;
                x.push(self.x[i] + len * u);
                d.push(self.d[i] + (self.d[i + 1] - self.d[i]) * u);
            }
        }
        Polyline { x, d }
    }

    /// Midpoint atoms carrying the exact mass of each segment.
    pub fn to_atoms(&self, out: &mut Vec<WeightedAtom<S>>) {
        let half = S::lit(0.5);
        for i in 0..self.x.len() - 1 {
            let len = self.x[i + 1] - self.x[i];
            let w = half * len * (self.d[i] + self.d[i + 1]);
            if w > S::zero() {
                // centroid of the trapezoid
                let c = if self.d[i] + self.d[i + 1] > S::zero() {
                    self.x[i]
                        + len * (self.d[i] + S::lit(2.0) * self.d[i + 1])
                            / (S::lit(3.0) * (self.d[i] + self.d[i + 1]))
                } else {
                    self.x[i] + half * len
                };
                out.push(WeightedAtom {
                    position: c,
                    weight: w,
                    variance: S::zero(),
                });
            }
        }
    }
}

/// Atoms plus density pieces; the total mass is one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pieces<S: Real = f64> {
    pub atoms: Vec<WeightedAtom<S>>,
    pub polylines: Vec<Polyline<S>>,
}

impl<S: Real> Pieces<S> {
    pub fn total_mass(&self) -> S {
        self.atoms.iter().map(|a| a.weight).sum::<S>()
            + self.polylines.iter().map(|p| p.mass()).sum::<S>()
    }

    pub fn max_atom_variance(&self) -> S {
        self.atoms
            .iter()
            .map(|a| a.variance)
            .fold(S::zero(), S::max)
    }

    fn scale(&mut self, w: S) {
        for a in &mut self.atoms {
            a.weight = a.weight * w;
        }
        for p in &mut self.polylines {
            p.scale(w);
        }
    }

    fn sort(&mut self) {
        self.atoms
            .sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
    }

    /// Converts every density piece to midpoint atoms at spacing `h`.
    pub fn atomized(&self, h: S) -> Pieces<S> {
        let mut atoms = self.atoms.clone();
        for p in &self.polylines {
            p.refined(h).to_atoms(&mut atoms);
        }
        let mut out = Pieces {
            atoms,
            polylines: Vec::new(),
        };
        out.sort();
        out
    }

    /// Index range of atoms with position in `[lo, hi]`.
    pub fn atoms_in(&self, lo: S, hi: S) -> std::ops::Range<usize> {
        let a = self.atoms.partition_point(|p| p.position < lo);
        let b = self.atoms.partition_point(|p| p.position <= hi);
        a..b.max(a)
    }
}

fn bernoulli_depth<S: Real>(lambda: S, resolution: S) -> usize {
    let r = S::one() / (S::one() - lambda);
    let mut k = 0;
    let mut radius = r;
    while radius > resolution && k < MAX_SERIES_DEPTH {
        radius = radius * lambda;
        k += 1;
    }
    k
}

/// Partial sums `Σ_{k<depth} ε_k λ^k`, sorted.
fn bernoulli_centers<S: Real>(lambda: S, depth: usize) -> Vec<S> {
    let mut pts = vec![S::zero()];
    let mut scale = S::one();
    for _ in 0..depth {
        pts = pts.iter().flat_map(|&p| [p - scale, p + scale]).collect();
        scale = scale * lambda;
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

impl<S: Real> Measure<S> {
    /// Discretization accurate at spatial scale `resolution`.
    pub fn discretize(&self, resolution: S) -> Pieces<S> {
        let mut out = match self {
            Measure::Atomic(m) => Pieces {
                atoms: m
                    .positions()
                    .iter()
                    .zip(m.weights())
                    .filter(|(_, w)| **w > S::zero())
                    .map(|(&position, &weight)| WeightedAtom {
                        position,
                        weight,
                        variance: S::zero(),
                    })
                    .collect(),
                polylines: Vec::new(),
            },
            Measure::GridDensity(g) => Pieces {
                atoms: Vec::new(),
                polylines: vec![Polyline {
                    x: (0..g.values().len()).map(|i| g.node(i)).collect(),
                    d: g.values().to_vec(),
                }],
            },
            Measure::BernoulliConvolution(b) => {
                let lam = b.lambda();
                let depth = bernoulli_depth(lam, resolution);
                let centers = bernoulli_centers(lam, depth);
                let weight = S::one() / S::from_usize_lossy(centers.len());
                let variance = lam.powi(2 * depth as i32) / (S::one() - lam * lam);
                Pieces {
                    atoms: centers
                        .into_iter()
                        .map(|position| WeightedAtom {
                            position,
                            weight,
                            variance,
                        })
                        .collect(),
                    polylines: Vec::new(),
                }
            }
            Measure::Mixture(m) => {
                let mut acc = Pieces::default();
                for (w, c) in m.components() {
                    let mut p = c.discretize(resolution);
                    p.scale(*w);
                    acc.atoms.extend(p.atoms);
                    acc.polylines.extend(p.polylines);
                }
                acc
            }
            Measure::LipschitzPushforward(p) => push_pieces(p, resolution),
        };
        out.sort();
        out
    }

    /// Sorted disjoint intervals whose union contains the support; gaps of
    /// the support wider than about `resolution` are left out.
    pub fn cover(&self, resolution: S) -> Vec<(S, S)> {
        let raw: Vec<(S, S)> = match self {
            Measure::Atomic(m) => m
                .positions()
                .iter()
                .zip(m.weights())
                .filter(|(_, w)| **w > S::zero())
                .map(|(&x, _)| (x, x))
                .collect(),
            Measure::GridDensity(g) => vec![(g.origin(), g.end())],
            Measure::BernoulliConvolution(b) => {
                let lam = b.lambda();
                let depth = bernoulli_depth(lam, resolution);
                let r = lam.powi(depth as i32) / (S::one() - lam);
                bernoulli_centers(lam, depth)
                    .into_iter()
                    .map(|c| (c - r, c + r))
                    .collect()
            }
            Measure::Mixture(m) => m
                .components()
                .iter()
                .flat_map(|(_, c)| c.cover(resolution))
                .collect(),
            Measure::LipschitzPushforward(p) => {
                let base_res = resolution / p.map().upper_constant();
                p.base()
                    .cover(base_res)
                    .into_iter()
                    .map(|(a, b)| {
                        let (fa, fb) = (p.map().apply(a), p.map().apply(b));
                        (fa.min(fb), fa.max(fb))
                    })
                    .collect()
            }
        };
        merge_intervals(raw, S::zero())
    }

    /// `∫ log(1 + |x|) dμ(x)`, to quadrature accuracy.
    pub fn log_moment(&self) -> S {
        self.expectation(|x| (S::one() + x.abs()).ln())
    }

    /// `∫ f dμ` for a continuous `f`: exact on atoms, midpoint sums at
    /// spacing 1e-3 on densities, depth-truncated partial sums (spread
    /// below 1e-4) for Bernoulli convolutions.
    pub fn expectation(&self, f: impl Fn(S) -> S) -> S {
        let pieces = self.discretize(S::lit(1e-4));
        let atoms: S = pieces.atoms.iter().map(|a| a.weight * f(a.position)).sum();
        let dens: S = pieces
            .polylines
            .iter()
            .map(|p| {
                let mut acc = Vec::new();
                p.refined(S::lit(1e-3)).to_atoms(&mut acc);
                acc.iter().map(|a| a.weight * f(a.position)).sum::<S>()
            })
            .sum();
        atoms + dens
    }
}

fn push_pieces<S: Real>(p: &Pushforward<S>, resolution: S) -> Pieces<S> {
    let map = p.map();
    let base = p.base().discretize(resolution / map.upper_constant());
    let atoms = base
        .atoms
        .iter()
        .map(|a| {
            let slope = map.slope_at(a.position);
            WeightedAtom {
                position: map.apply(a.position),
                weight: a.weight,
                variance: a.variance * slope * slope,
            }
        })
        .collect();
    let polylines = base
        .polylines
        .iter()
        .map(|line| {
            // the pushed density is smooth wherever the base density is, so
            // interpolation accuracy, not the smoothing scale, sets the step
            let fine = line.refined(resolution.max(S::lit(1e-3)) / map.upper_constant());
            let target = fine.mass();
            let mut x: Vec<S> = fine.x.iter().map(|&v| map.apply(v)).collect();
            let mut d: Vec<S> = fine
                .x
                .iter()
                .zip(&fine.d)
                .map(|(&v, &dv)| dv / map.slope_at(v).abs())
                .collect();
            if !map.is_increasing() {
                x.reverse();
                d.reverse();
            }
            let mut out = Polyline { x, d };
            let got = out.mass();
            if got > S::zero() {
                out.scale(target / got);
            }
            out
        })
        .collect();
    Pieces { atoms, polylines }
}

/// Merges intervals that overlap or sit closer than `gap`.
pub fn merge_intervals<S: Real>(mut v: Vec<(S, S)>, gap: S) -> Vec<(S, S)> {
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(S, S)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 + gap => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}
