//! Adaptive Gauss–Kronrod quadrature.
//!
//! The integrator works on vector-valued integrands `f: S -> [S; N]` so that
//! several functionals of one smoothed density (mass, entropy, Fisher
//! information) share a single set of density evaluations. The accepted
//! panels are returned as an explicit node set with positive weights, which
//! downstream moment computations reuse.

use rayon::prelude::*;

use crate::real::Real;

// 15-point Kronrod extension of the 7-point Gauss rule, positive half.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Number of integrand evaluations per panel.
pub const PANEL_POINTS: usize = 15;

/// Controls for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Adaptive<S: Real = f64> {
    /// Relative tolerance on each component, measured against the integral
    /// of its absolute value.
    pub rel_tol: S,
    /// Absolute floor added to every component tolerance.
    pub abs_tol: S,
    /// Maximum number of bisections of an initial panel.
    pub max_depth: usize,
    /// Hard budget on integrand evaluations.
    pub max_evals: usize,
}

impl<S: Real> Default for Adaptive<S> {
    fn default() -> Self {
        Adaptive {
            rel_tol: S::tol(1e-9),
            abs_tol: S::tol(1e-13),
            max_depth: 24,
            max_evals: 2_000_000,
        }
    }
}

/// Integrals, error estimates and the accepted node set.
#[derive(Clone, Debug)]
pub struct Quadrature<S: Real, const N: usize> {
    pub value: [S; N],
    pub error: [S; N],
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
    /// Integrand values at `nodes`.
    pub samples: Vec<[S; N]>,
    pub evals: usize,
    /// False when the depth limit or evaluation budget stopped refinement
    /// before every panel met its tolerance.
    pub converged: bool,
}

impl<S: Real, const N: usize> Quadrature<S, N> {
    /// `Σ w_i g(x_i, f(x_i))` over the accepted nodes.
    pub fn sum_with(&self, g: impl Fn(S, &[S; N]) -> S) -> S {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.samples)
            .map(|((&x, &w), v)| w * g(x, v))
            .sum()
    }
}

struct Panel<S: Real, const N: usize> {
    a: S,
    b: S,
    depth: usize,
    kronrod: [S; N],
    gauss: [S; N],
    abs: [S; N],
    values: [[S; N]; PANEL_POINTS],
}

impl<S: Real, const N: usize> Panel<S, N> {
    fn new(a: S, b: S, depth: usize, f: &(impl Fn(S) -> [S; N] + Sync)) -> Self {
        let c = (a + b) / S::lit(2.0);
        let h = (b - a) / S::lit(2.0);
        let mut values = [[S::zero(); N]; PANEL_POINTS];
        for (j, &x) in XGK.iter().enumerate() {
            if j == 7 {
                values[7] = f(c);
            } else {
                values[j] = f(c - h * S::lit(x));
                values[14 - j] = f(c + h * S::lit(x));
            }
        }
        let mut kronrod = [S::zero(); N];
        let mut gauss = [S::zero(); N];
        let mut abs = [S::zero(); N];
        for k in 0..N {
            let mut rk = S::zero();
            let mut rg = S::zero();
            let mut ra = S::zero();
            for j in 0..8 {
                let w = S::lit(WGK[j]);
                let pair = if j == 7 {
                    values[7][k]
                } else {
                    values[j][k] + values[14 - j][k]
                };
                let pair_abs = if j == 7 {
                    values[7][k].abs()
                } else {
                    values[j][k].abs() + values[14 - j][k].abs()
                };
                rk = rk + w * pair;
                ra = ra + w * pair_abs;
                if j % 2 == 1 {
                    rg = rg + S::lit(WG[j / 2]) * pair;
                }
            }
            kronrod[k] = rk * h;
            gauss[k] = rg * h;
            abs[k] = ra * h;
        }
        Panel {
            a,
            b,
            depth,
            kronrod,
            gauss,
            abs,
            values,
        }
    }

    fn error(&self, k: usize) -> S {
        (self.kronrod[k] - self.gauss[k]).abs()
    }
}

/// Integrates `f` over the union of the disjoint `panels`, bisecting any
/// panel whose Kronrod–Gauss difference exceeds its share (by length) of
/// the tolerance. Panels are evaluated in parallel; results do not depend on
/// scheduling.
pub fn integrate<S: Real, const N: usize>(
    f: impl Fn(S) -> [S; N] + Sync,
    panels: &[(S, S)],
    opts: &Adaptive<S>,
) -> Quadrature<S, N> {
    let mut work: Vec<Panel<S, N>> = panels
        .par_iter()
        .filter(|(a, b)| b > a)
        .map(|&(a, b)| Panel::new(a, b, 0, &f))
        .collect();
    let total_len: S = panels
        .iter()
        .filter(|(a, b)| b > a)
        .map(|(a, b)| *b - *a)
        .sum();
    let mut evals = work.len() * PANEL_POINTS;
    let mut accepted: Vec<Panel<S, N>> = Vec::new();
    let mut converged = true;
    if total_len <= S::zero() {
        return assemble(accepted, evals, converged);
    }

    // component scales from the first pass
    let mut scale = [S::zero(); N];
    for p in &work {
        for (k, s) in scale.iter_mut().enumerate() {
            *s = *s + p.abs[k];
        }
    }
    let tol: Vec<S> = scale
        .iter()
        .map(|&s| opts.rel_tol * s + opts.abs_tol)
        .collect();

    while !work.is_empty() {
        let mut split = Vec::new();
        for p in work.drain(..) {
            let share = (p.b - p.a) / total_len;
            let bad = (0..N).any(|k| p.error(k) > tol[k] * share);
            if bad && p.depth < opts.max_depth && evals < opts.max_evals {
                split.push(p);
            } else {
                if bad {
                    converged = false;
                }
                accepted.push(p);
            }
        }
        evals += split.len() * 2 * PANEL_POINTS;
        work = split
            .par_iter()
            .flat_map_iter(|p| {
                let m = (p.a + p.b) / S::lit(2.0);
                [
                    Panel::new(p.a, m, p.depth + 1, &f),
                    Panel::new(m, p.b, p.depth + 1, &f),
                ]
            })
            .collect();
    }
    assemble(accepted, evals, converged)
}

fn assemble<S: Real, const N: usize>(
    mut accepted: Vec<Panel<S, N>>,
    evals: usize,
    converged: bool,
) -> Quadrature<S, N> {
    accepted.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let mut value = [S::zero(); N];
    let mut error = [S::zero(); N];
    let mut nodes = Vec::with_capacity(accepted.len() * PANEL_POINTS);
    let mut weights = Vec::with_capacity(nodes.capacity());
    let mut samples = Vec::with_capacity(nodes.capacity());
    for p in &accepted {
        for k in 0..N {
            value[k] = value[k] + p.kronrod[k];
            error[k] = error[k] + p.error(k);
        }
        let c = (p.a + p.b) / S::lit(2.0);
        let h = (p.b - p.a) / S::lit(2.0);
        for j in 0..PANEL_POINTS {
            let (x, w) = if j < 7 {
                (c - h * S::lit(XGK[j]), WGK[j])
            } else if j == 7 {
                (c, WGK[7])
            } else {
                (c + h * S::lit(XGK[14 - j]), WGK[14 - j])
            };
            nodes.push(x);
            weights.push(S::lit(w) * h);
            samples.push(p.values[j]);
        }
    }
    Quadrature {
        value,
        error,
        nodes,
        weights,
        samples,
        evals,
        converged,
    }
}

/// Splits each interval into panels no longer than `max_len`, also cutting
/// at every breakpoint that falls inside.
pub fn panels<S: Real>(intervals: &[(S, S)], breakpoints: &[S], max_len: S) -> Vec<(S, S)> {
    let mut out = Vec::new();
    for &(a, b) in intervals {
        if b <= a {
            continue;
        }
        let lo = breakpoints.partition_point(|&x| x <= a);
        let hi = breakpoints.partition_point(|&x| x < b);
        let mut cuts = Vec::with_capacity(hi - lo + 2);
        cuts.push(a);
        cuts.extend_from_slice(&breakpoints[lo..hi]);
        cuts.push(b);
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            if len <= S::zero() {
                continue;
            }
            let parts = (len / max_len)
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .clamp(1, 1 << 24);
            let step = len / S::from_usize_lossy(parts);
            for j in 0..parts {
                let x0 = w[0] + step * S::from_usize_lossy(j);
                let x1 = if j + 1 == parts { w[1] } else { x0 + step };
                out.push((x0, x1));
            }
        }
    }
    out
}
