//! Executable property suites.
//!
//! Every structural property the estimators are supposed to satisfy is a
//! named check. A check either passes, fails, or is a probe: a property that
//! is known not to hold as stated, run and reported but not counted against
//! the suite.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::basis::{BasisElement, TestFunctionBasis};
use crate::bochner::{default_n_grid, delta_square, localized_lower_bound, optimal_k, BochnerOptions};
use crate::curve::FitWindow;
use crate::dimension::{
    affinity_report, default_t_grid, delta_c_entropy, delta_c_fractal, kernel_independence_report,
    lipschitz_invariance_report, DimensionEstimate, FractalOptions,
};
use crate::entropy::{
    affinity_gap, entropy, entropy_curve, entropy_lower_bound, entropy_upper_bound, epi_check, CrossCheck,
    CurveOptions,
};
use crate::error::Result;
use crate::fisher::{
    de_bruijn_check, default_s_grid, delta_c_fisher, fisher_direct, fisher_monte_carlo, fisher_scan,
    fisher_variational, MC_INNER, MC_POINTS,
};
use crate::freedim::{free_dimension_single, AtomProfile};
use crate::measure::{MapKind, MapSpec, Measure};
use crate::real::std_normal_pdf;
use crate::rng::{derive_seed, task_rng};
use crate::smoothing::{box_window_mass, Kernel, SmoothedDensity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Known counterexample probe: reported, not counted.
    ProbeHeld,
    ProbeFailed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::ProbeHeld => "probe:held",
            Status::ProbeFailed => "probe:failed",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    /// No asserted check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$}  {:<12}  detail", "check", "status");
        for c in &self.checks {
            let _ = writeln!(out, "{:<w$}  {:<12}  {}", c.name, c.status.label(), c.detail);
        }
        let fails = self.checks.iter().filter(|c| c.status == Status::Fail).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), fails);
        out
    }

    fn push(&mut self, name: &str, check: impl FnOnce() -> Result<(bool, String)>) {
        let (status, detail) = match check() {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(e) => (Status::Fail, format!("error: {e}")),
        };
        self.checks.push(Check {
            name: name.into(),
            status,
            detail,
        });
    }

    fn probe(&mut self, name: &str, check: impl FnOnce() -> Result<(bool, String)>) {
        let (status, detail) = match check() {
            Ok((true, d)) => (Status::ProbeHeld, d),
            Ok((false, d)) => (Status::ProbeFailed, d),
            Err(e) => (Status::ProbeFailed, format!("error: {e}")),
        };
        self.checks.push(Check {
            name: name.into(),
            status,
            detail,
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Measure,
    Smoothing,
    Entropy,
    Dimension,
    Fisher,
    Bochner,
    Freedim,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "all", "measure", "smoothing", "entropy", "dimension", "fisher", "bochner", "freedim",
    ];

    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "all" => Suite::All,
            "measure" => Suite::Measure,
            "smoothing" => Suite::Smoothing,
            "entropy" => Suite::Entropy,
            "dimension" => Suite::Dimension,
            "fisher" => Suite::Fisher,
            "bochner" => Suite::Bochner,
            "freedim" => Suite::Freedim,
            _ => return None,
        })
    }
}

/// The golden matrix: `δ_0`, `U[0, 1]`, the Bernoulli convolution with
/// `λ = 1/4` and its reference dimensions.
pub fn golden_matrix() -> Vec<(&'static str, Measure<f64>, f64)> {
    vec![
        ("dirac", Measure::dirac(0.0), 0.0),
        ("uniform", Measure::uniform(0.0, 1.0).expect("valid"), 1.0),
        ("cantor-1/4", Measure::bernoulli(0.25).expect("valid"), 0.5),
    ]
}

/// Golden matrix plus a mixture and the `λ = 1/3` convolution.
pub fn extended_matrix() -> Vec<(&'static str, Measure<f64>, f64)> {
    let mut m = golden_matrix();
    m.push((
        "cantor-1/3",
        Measure::bernoulli(1.0 / 3.0).expect("valid"),
        2f64.ln() / 3f64.ln(),
    ));
    m.push((
        "half-dirac-half-uniform",
        Measure::mixture(vec![
            (0.5, Measure::dirac(0.0)),
            (0.5, Measure::uniform(0.0, 1.0).expect("valid")),
        ])
        .expect("valid"),
        0.5,
    ));
    m
}

/// `f(x) = 2x + sin x` with constants `m = 1`, `M = 3`.
pub fn two_x_plus_sine() -> MapSpec<f64> {
    MapSpec::new(
        MapKind::LinearPlusSine {
            slope: 2.0,
            amplitude: 1.0,
            shift: 0.0,
        },
        1.0,
        3.0,
        (-4.0, 4.0),
    )
    .expect("2x + sin x is bi-Lipschitz with constants 1 and 3")
}

/// Masses of `[a, b]` under the depth-`depth` sign-sequence enumeration of
/// the Bernoulli convolution: `2^{−depth}` times the number of partial sums
/// `Σ_{k<depth} ±λ^k` in `[a, b]`.
pub fn enumeration_mass(lambda: f64, depth: u32, a: f64, b: f64) -> f64 {
    let mut pts = vec![0.0_f64];
    let mut scale = 1.0;
    for _ in 0..depth {
        pts = pts.iter().flat_map(|&p| [p - scale, p + scale]).collect();
        scale *= lambda;
    }
    let inside = pts.iter().filter(|&&p| p >= a && p <= b).count();
    inside as f64 / pts.len() as f64
}

pub fn run(suite: Suite, seed: u64) -> Report {
    let mut r = Report::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Measure {
        measure_suite(&mut r, seed);
    }
    if all || suite == Suite::Smoothing {
        smoothing_suite(&mut r, seed);
    }
    if all || suite == Suite::Entropy {
        entropy_suite(&mut r, seed);
    }
    if all || suite == Suite::Dimension {
        dimension_suite(&mut r, seed);
    }
    if all || suite == Suite::Fisher {
        fisher_suite(&mut r, seed);
    }
    if all || suite == Suite::Bochner {
        bochner_suite(&mut r, seed);
    }
    if all || suite == Suite::Freedim {
        freedim_suite(&mut r, seed);
    }
    r
}

fn measure_cases() -> Vec<(&'static str, Measure<f64>)> {
    let mut v: Vec<(&'static str, Measure<f64>)> =
        extended_matrix().into_iter().map(|(n, m, _)| (n, m)).collect();
    v.push((
        "sine-pushed-cantor",
        Measure::pushforward(Measure::bernoulli(0.25).expect("valid"), two_x_plus_sine()).expect("valid"),
    ));
    v
}

fn measure_suite(r: &mut Report, seed: u64) {
    let cases = measure_cases();
    r.push("measure.monotone", || {
        let mut rng = task_rng(seed, 100);
        let mut worst = 0.0_f64;
        for (_, mu) in &cases {
            let (lo, hi) = mu.support_bounds();
            for _ in 0..50 {
                let a = lo - 0.2 + (hi - lo + 0.4) * rng.gen::<f64>();
                let b = a + (hi - a + 0.2) * rng.gen::<f64>();
                let (a2, b2) = (a - 0.1 * rng.gen::<f64>(), b + 0.1 * rng.gen::<f64>());
                let inner = mu.interval_mass(a, b).lower();
                let outer = mu.interval_mass(a2, b2).upper();
                worst = worst.max(inner - outer);
            }
        }
        Ok((worst <= 0.0, format!("largest inner − outer = {worst:.3e}")))
    });
    r.push("measure.additive", || {
        let mut rng = task_rng(seed, 101);
        let mut worst = 0.0_f64;
        for (_, mu) in &cases {
            let (lo, hi) = mu.support_bounds();
            let mut cuts: Vec<f64> = (0..20).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
            cuts.push(lo - 1.0);
            cuts.push(hi + 1.0);
            cuts.sort_by(f64::total_cmp);
            // half-open pieces: [c_i, c_{i+1}) via the closed mass minus the right endpoint atom
            let total: f64 = cuts
                .windows(2)
                .map(|w| mu.interval_mass(w[0], w[1]).value() - mu.interval_mass(w[1], w[1]).value())
                .sum::<f64>()
                + mu.interval_mass(cuts[cuts.len() - 1], cuts[cuts.len() - 1]).value();
            worst = worst.max((total - 1.0).abs());
        }
        Ok((worst <= 1e-9, format!("largest |Σ pieces − 1| = {worst:.3e}")))
    });
    r.push("measure.support_mass", || {
        let worst = cases
            .iter()
            .map(|(_, mu)| {
                let (a, b) = mu.support_bounds();
                (mu.interval_mass(a, b).value() - 1.0).abs()
            })
            .fold(0.0, f64::max);
        Ok((worst <= 1e-9, format!("largest |mass(support) − 1| = {worst:.3e}")))
    });
    r.push("measure.bernoulli_enumeration", || {
        let mut rng = task_rng(seed, 102);
        let mut worst = 0.0_f64;
        for lambda in [0.25, 1.0 / 3.0] {
            let mu = Measure::bernoulli(lambda)?;
            let (lo, hi) = mu.support_bounds();
            for _ in 0..100 {
                let a = lo + (hi - lo) * rng.gen::<f64>();
                let b = a + (hi - a) * rng.gen::<f64>();
                let m = mu.interval_mass(a, b).value();
                worst = worst.max((m - enumeration_mass(lambda, 16, a, b)).abs());
            }
        }
        Ok((
            worst <= 2f64.powi(-16),
            format!("largest deviation from depth-16 enumeration = {worst:.3e}"),
        ))
    });
    r.push("measure.pushforward_identity", || {
        let map = two_x_plus_sine();
        let mut rng = task_rng(seed, 103);
        let mut worst = 0.0_f64;
        for (_, base, _) in extended_matrix() {
            let pushed = Measure::pushforward(base.clone(), map.clone())?;
            let (lo, hi) = pushed.support_bounds();
            for _ in 0..30 {
                let a = lo + (hi - lo) * rng.gen::<f64>();
                let b = a + (hi - a) * rng.gen::<f64>();
                let lhs = pushed.interval_mass(a, b).value();
                let rhs = base.interval_mass(map.inverse(a), map.inverse(b)).value();
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok((worst == 0.0, format!("largest deviation = {worst:.3e}")))
    });
}

fn kernels() -> Vec<Kernel<f64>> {
    vec![
        Kernel::gaussian(),
        Kernel::centered_box(),
        Kernel::unit_box(),
        Kernel::custom(-1.0, 0.5, vec![0.0, 1.0, 1.0, 1.0, 0.0]).expect("valid kernel"),
    ]
}

fn smoothing_suite(r: &mut Report, seed: u64) {
    let cases = measure_cases();
    r.push("smoothing.total_mass", || {
        let mut worst = 0.0_f64;
        for (_, mu) in &cases {
            for k in kernels() {
                // piecewise-linear kernels on fractal measures are slow at fine scales
                let scales: &[f64] = if k.is_gaussian() || k.label().starts_with("box") { &[0.1, 0.003] } else { &[0.1] };
                for &t in scales {
                    let sd = SmoothedDensity::new(mu, &k, t)?;
                    let q = sd.integrate(|_, pt| [pt.p], &sd.default_quadrature());
                    worst = worst.max((q.value[0] - 1.0).abs());
                }
            }
        }
        Ok((worst <= 1e-4, format!("largest |∫p_t − 1| = {worst:.3e}")))
    });
    r.push("smoothing.monte_carlo_mass", || {
        let mu = Measure::bernoulli(0.25)?;
        let sd = SmoothedDensity::monte_carlo(&mu, 0.05, 5_000, derive_seed(seed, 110))?;
        let q = sd.integrate(|_, pt| [pt.p], &crate::quadrature::Adaptive::default());
        // the Monte Carlo density is a Gaussian mixture, so its mass is one
        // up to the quadrature, well inside three standard errors
        let ok = (q.value[0] - 1.0_f64).abs() <= 1e-4;
        Ok((ok, format!("∫p_t = {:.8}", q.value[0])))
    });
    r.push("smoothing.score_difference", || {
        let mut rng = task_rng(seed, 111);
        let mut worst = 0.0_f64;
        for (_, mu) in &cases {
            for t in [0.3, 0.02] {
                let sd = SmoothedDensity::new(mu, &Kernel::gaussian(), t)?;
                for _ in 0..50 {
                    let x = mu.sample_one(&mut rng) + t * rng.sample::<f64, _>(rand_distr::StandardNormal);
                    let h = 1e-4 * t;
                    let fd = (sd.density_at(x + h).ln() - sd.density_at(x - h).ln()) / (2.0 * h);
                    let s = sd.score_at(x)?;
                    worst = worst.max((fd - s).abs() / s.abs().max(1.0 / t));
                }
            }
        }
        Ok((worst <= 1e-3, format!("largest relative deviation = {worst:.3e}")))
    });
    r.push("smoothing.box_identity", || {
        let mut rng = task_rng(seed, 112);
        let mut mismatches = 0;
        for (_, mu) in &cases {
            for (a, b) in [(-0.5, 0.5), (0.0, 1.0), (-1.0, 2.0)] {
                let k = Kernel::boxed(a, b)?;
                let t = 0.01;
                let sd = SmoothedDensity::new(mu, &k, t)?;
                for _ in 0..20 {
                    let x = mu.sample_one(&mut rng) + t * (rng.gen::<f64>() - 0.5);
                    let lhs = sd.density_at(x) * (t * (b - a));
                    let rhs = box_window_mass(mu, x, t, a, b).value();
                    if (lhs - rhs).abs() > 4.0 * f64::EPSILON * rhs.max(1e-300) {
                        mismatches += 1;
                    }
                }
            }
        }
        Ok((mismatches == 0, format!("{mismatches} mismatches")))
    });
}

fn entropy_suite(r: &mut Report, seed: u64) {
    let cases = measure_cases();
    let ks = [Kernel::gaussian(), Kernel::centered_box()];
    r.push("entropy.monte_carlo_agreement", || {
        let mut flagged = Vec::new();
        for (i, (name, mu)) in cases.iter().enumerate() {
            for k in &ks {
                let sd = SmoothedDensity::new(mu, k, 0.05)?;
                let v = entropy(
                    &sd,
                    Some(CrossCheck {
                        samples: 20_000,
                        seed: derive_seed(seed, 120 + i as u64),
                    }),
                );
                if v.flagged {
                    flagged.push(format!("{name}/{}", k.label()));
                }
            }
        }
        Ok((flagged.is_empty(), format!("disagreeing: {flagged:?}")))
    });
    let grid = default_t_grid();
    let mut curves = Vec::new();
    for (name, mu) in &cases {
        for k in &ks {
            curves.push((*name, mu, k.clone(), entropy_curve(mu, k, &grid, &CurveOptions::default())));
        }
    }
    r.push("entropy.upper_bound", || {
        let mut worst = f64::NEG_INFINITY;
        for (_, _, k, c) in &curves {
            let c = c.as_ref().map_err(Clone::clone)?;
            for (t, h) in c.abscissa.iter().zip(&c.values) {
                worst = worst.max(h - entropy_upper_bound(k, *t));
            }
        }
        Ok((worst <= 1e-9, format!("max H(μ_t) − (H(ν) − log t) = {worst:.3e}")))
    });
    r.push("entropy.lower_bound", || {
        let mut worst = f64::NEG_INFINITY;
        for (_, mu, k, c) in &curves {
            let c = c.as_ref().map_err(Clone::clone)?;
            let lb = entropy_lower_bound(*mu, k);
            for h in &c.values {
                worst = worst.max(lb - h);
            }
        }
        Ok((worst <= 1e-9, format!("max lower bound − H(μ_t) = {worst:.3e}")))
    });
    r.push("entropy.slope_range", || {
        let mut slopes = Vec::new();
        for (_, _, _, c) in &curves {
            slopes.push(c.as_ref().map_err(Clone::clone)?.fit.slope);
        }
        let ok = slopes.iter().all(|s| (-0.05..=1.05).contains(s));
        let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((ok, format!("slopes in [{lo:.4}, {hi:.4}]")))
    });
    r.push("entropy.shift_invariance", || {
        let mut worst = 0.0_f64;
        let mut allowed = 1e-9_f64;
        for (_, mu) in &cases {
            let shifted = mu.clone().shifted(3.7)?;
            for k in &ks {
                let a = entropy(&SmoothedDensity::new(mu, k, 0.02)?, None);
                let b = entropy(&SmoothedDensity::new(&shifted, k, 0.02)?, None);
                let d = (a.value - b.value).abs();
                if d > worst {
                    worst = d;
                    allowed = 1e-9 + a.error + b.error;
                }
            }
        }
        Ok((worst <= allowed, format!("largest difference {worst:.3e} (allowed {allowed:.3e})")))
    });
    r.push("entropy.epi", || {
        let n01 = Measure::gaussian_grid(0.0, 1.0, 10.0, 20_001)?;
        let sat = epi_check(&n01, &Kernel::gaussian(), 0.5, 1e-6)?;
        let rel = ((sat.lhs - sat.rhs) / sat.rhs).abs();
        let mut ok = rel <= 1e-6;
        let mut failures = Vec::new();
        for (name, mu) in &cases {
            for t in [0.1, 0.2] {
                let e = epi_check(mu, &Kernel::gaussian(), t, 1e-6)?;
                if !e.holds {
                    failures.push(format!("{name} t={t}"));
                }
            }
        }
        ok &= failures.is_empty();
        Ok((ok, format!("Gaussian saturation {rel:.2e}; failures {failures:?}")))
    });
    let disjoint = vec![(0.5, Measure::dirac(0.0)), (0.5, Measure::dirac(10.0))];
    r.push("entropy.affinity_gap_convexity", || {
        let mut details = Vec::new();
        let mut ok = true;
        for t in [0.1, 0.01] {
            for k in &ks {
                let g = affinity_gap(&disjoint, k, t)?;
                ok &= g.within_convexity_sandwich(1e-9);
                details.push(format!("{}@{t}: {:.6}", k.label(), g.gap));
            }
        }
        let u = Measure::uniform(0.0, 1.0)?;
        let g = affinity_gap(&[(0.5, u.clone()), (0.5, u)], &Kernel::gaussian(), 0.1)?;
        ok &= g.within_convexity_sandwich(1e-9);
        details.push(format!("identical: {:.2e}", g.gap));
        Ok((ok, format!("Σa log a ≤ gap ≤ 0: {}", details.join(", "))))
    });
    r.probe("entropy.affinity_gap_stated", || {
        let mut details = Vec::new();
        let mut ok = true;
        for t in [0.1, 0.01] {
            let g = affinity_gap(&disjoint, &Kernel::centered_box(), t)?;
            ok &= g.within_stated_sandwich(1e-9);
            details.push(format!("t={t}: gap {:.6} vs [0, {:.6}]", g.gap, g.upper_bound));
        }
        Ok((ok, details.join(", ")))
    });
}

struct Estimates {
    entropy: Vec<(&'static str, DimensionEstimate)>,
    fractal: Vec<(&'static str, DimensionEstimate)>,
}

fn estimates(seed: u64) -> Result<Estimates> {
    let grid = default_t_grid();
    let opts = CurveOptions {
        seed,
        ..CurveOptions::default()
    };
    let mut entropy = Vec::new();
    let mut fractal = Vec::new();
    for (i, (name, mu, _)) in extended_matrix().into_iter().enumerate() {
        entropy.push((name, delta_c_entropy(&mu, &Kernel::gaussian(), &grid, &opts)?));
        let f = FractalOptions {
            seed: derive_seed(seed, 130 + i as u64),
            ..FractalOptions::default()
        };
        fractal.push((name, delta_c_fractal(&mu, &grid, &f)?));
    }
    Ok(Estimates { entropy, fractal })
}

fn dimension_suite(r: &mut Report, seed: u64) {
    let grid = default_t_grid();
    let opts = CurveOptions {
        seed,
        ..CurveOptions::default()
    };
    let est = estimates(seed);
    r.push("dimension.entropy_vs_fractal", || {
        est.as_ref().map_err(Clone::clone).map(|e| {
            let mut ok = true;
            let mut d = Vec::new();
            for ((name, a), (_, b)) in e.entropy.iter().zip(&e.fractal) {
                ok &= a.agrees_with(b);
                d.push(format!("{name}: {:.3}/{:.3}", a.value, b.value));
            }
            (ok, d.join(", "))
        })
    });
    r.push("dimension.range", || {
        est.as_ref().map_err(Clone::clone).map(|e| {
            let all: Vec<f64> = e.entropy.iter().chain(&e.fractal).map(|(_, x)| x.value).collect();
            let ok = all.iter().all(|v| (-0.05..=1.05).contains(v));
            (ok, format!("{} estimates", all.len()))
        })
    });
    r.push("dimension.translation_dilation", || {
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, _) in golden_matrix() {
            let base = delta_c_entropy(&mu, &Kernel::gaussian(), &grid, &opts)?;
            for (label, moved) in [("shift", mu.clone().shifted(2.5)?), ("dilate", mu.clone().dilated(2.0)?)] {
                let e = delta_c_entropy(&moved, &Kernel::gaussian(), &grid, &opts)?;
                ok &= base.agrees_with(&e);
                d.push(format!("{name}/{label}: {:.3} vs {:.3}", base.value, e.value));
            }
        }
        Ok((ok, d.join(", ")))
    });
    r.push("dimension.mixture_monotone", || {
        let mut values = Vec::new();
        for w in [0.25, 0.5, 0.75] {
            let mix = Measure::mixture(vec![(1.0 - w, Measure::dirac(0.0)), (w, Measure::uniform(0.0, 1.0)?)])?;
            values.push(delta_c_entropy(&mix, &Kernel::gaussian(), &grid, &opts)?.value);
        }
        let ok = values.windows(2).all(|v| v[0] < v[1]);
        Ok((ok, format!("weights 0.25/0.5/0.75 of U: {values:.3?}")))
    });
    r.push("dimension.kernel_independence", || {
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, _) in golden_matrix() {
            let rep = kernel_independence_report(
                &mu,
                &[Kernel::gaussian(), Kernel::centered_box(), Kernel::unit_box()],
                &grid,
                &opts,
            )?;
            ok &= rep.consistent;
            d.push(format!("{name}: max diff {:.3}", rep.max_difference));
        }
        Ok((ok, d.join(", ")))
    });
    r.push("dimension.affinity", || {
        let mut ok = true;
        let mut d = Vec::new();
        for comps in [
            vec![(0.5, Measure::dirac(0.0)), (0.5, Measure::uniform(0.0, 1.0)?)],
            vec![(0.5, Measure::bernoulli(0.25)?), (0.5, Measure::uniform(2.0, 3.0)?)],
        ] {
            let rep = affinity_report(&comps, &Kernel::gaussian(), &grid, &opts)?;
            ok &= rep.consistent;
            d.push(format!("{:.3} vs {:.3}", rep.lhs.value, rep.rhs));
        }
        Ok((ok, d.join(", ")))
    });
    r.push("dimension.lipschitz", || {
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, _) in golden_matrix() {
            let rep = lipschitz_invariance_report(&mu, &two_x_plus_sine(), &Kernel::gaussian(), &grid, &opts)?;
            ok &= rep.consistent;
            d.push(format!("{name}: {:.3} vs {:.3}", rep.base.value, rep.pushed.value));
        }
        Ok((ok, d.join(", ")))
    });
    r.push("dimension.determinism", || {
        let mu = Measure::bernoulli(0.25)?;
        let f = FractalOptions {
            samples: 2_000,
            seed,
            ..FractalOptions::default()
        };
        let a = delta_c_fractal(&mu, &grid, &f)?;
        let b = delta_c_fractal(&mu, &grid, &f)?;
        let c = CurveOptions {
            cross_check_samples: 2_000,
            seed,
            ..CurveOptions::default()
        };
        let e1 = entropy_curve(&mu, &Kernel::gaussian(), &grid[..8], &c)?;
        let e2 = entropy_curve(&mu, &Kernel::gaussian(), &grid[..8], &c)?;
        Ok((a == b && e1 == e2, "repeated seeded runs are identical".into()))
    });
}

fn fisher_suite(r: &mut Report, seed: u64) {
    let s_grid = default_s_grid();
    let cases = extended_matrix();
    r.push("fisher.bound", || {
        let mut worst = 0.0_f64;
        let mut negative = false;
        for (_, mu, _) in &cases {
            for row in fisher_scan(mu, &s_grid, None)? {
                worst = worst.max(row.s_f());
                negative |= row.direct.value < 0.0;
            }
        }
        Ok((
            !negative && worst <= 1.0 + 1e-6,
            format!("max sF = {worst:.6}, negative values: {negative}"),
        ))
    });
    r.push("fisher.variational_below_direct", || {
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, _) in &cases {
            for s in [0.5, 0.01] {
                let f = fisher_direct(mu, s)?;
                let mut last = 0.0;
                for k in [0, 2, 4, 6, 8] {
                    let v = fisher_variational(mu, s, &TestFunctionBasis::default_hermite().prefix(k))?.value;
                    ok &= v <= f.value * (1.0 + 1e-6) + 3.0 * f.error;
                    // nesting is exact in exact arithmetic; the rank cutoff costs ~1e-7
                    ok &= v >= last - 1e-6 * f.value;
                    last = v;
                }
                d.push(format!("{name}@{s}: {last:.4}/{:.4}", f.value));
            }
        }
        Ok((ok, d.join(", ")))
    });
    r.push("fisher.monte_carlo_agreement", || {
        let mu = Measure::bernoulli(0.25)?;
        let f = fisher_direct(&mu, 0.01)?;
        let (mc, se, _) = fisher_monte_carlo(&mu, 0.01, MC_POINTS, MC_INNER, derive_seed(seed, 140))?;
        let ok = f.value > 0.0 && f.value <= 100.0 && (mc - f.value).abs() <= 3.0 * se;
        Ok((ok, format!("quadrature {:.4}, Monte Carlo {mc:.4} ± {se:.4}", f.value)))
    });
    r.push("fisher.de_bruijn", || {
        let mut ok = true;
        let mut worst = 0.0_f64;
        for mu in [
            Measure::dirac(0.0),
            Measure::gaussian_grid(0.0, 1.0, 10.0, 20_001)?,
            Measure::uniform(0.0, 1.0)?,
        ] {
            for s in [0.01, 0.1, 0.5] {
                let c = de_bruijn_check(&mu, s, s / 100.0)?;
                ok &= c.holds;
                worst = worst.max(((c.lhs - c.rhs) / c.rhs).abs());
            }
        }
        Ok((ok, format!("largest relative residual {worst:.3e}")))
    });
    r.push("fisher.route_agreement", || {
        let grid = default_t_grid();
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, _) in &cases {
            let f = delta_c_fisher(mu, &s_grid, FitWindow::default())?;
            let e = delta_c_entropy(mu, &Kernel::gaussian(), &grid, &CurveOptions::default())?;
            ok &= f.agrees_with(&e);
            d.push(format!("{name}: {:.3}/{:.3}", f.value, e.value));
        }
        Ok((ok, d.join(", ")))
    });
}

fn bochner_suite(r: &mut Report, _seed: u64) {
    let eps = default_s_grid();
    let n_grid = default_n_grid();
    r.push("bochner.monotone_in_n", || {
        let mu = Measure::bernoulli(0.25)?;
        let basis = TestFunctionBasis::adapted();
        let ks: Vec<f64> = n_grid
            .iter()
            .map(|&n| optimal_k(&mu, 0.01, n, &basis).map(|k| k.k))
            .collect::<Result<_>>()?;
        let ok = ks.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
        Ok((ok, format!("K from {:.3} (n = {}) to {:.3} (n = 1)", ks[0], n_grid[0], ks[ks.len() - 1])))
    });
    r.push("bochner.nesting", || {
        let mu = Measure::uniform(0.0, 1.0)?;
        let full = TestFunctionBasis::default_hermite().with(BasisElement::LogDensity);
        let mut ok = true;
        let mut ks = Vec::new();
        for n in [0.05, 0.3] {
            let mut last = 0.0;
            for k in [1, 3, 5, 8, 9] {
                let v = optimal_k(&mu, 0.01, n, &full.prefix(k))?.k;
                ok &= v >= last * (1.0 - 1e-9) - 1e-12;
                last = v;
                ks.push(v);
            }
        }
        Ok((ok, format!("{ks:.3?}")))
    });
    let mut scans = Vec::new();
    for (name, mu, _) in golden_matrix() {
        scans.push((name, mu.clone(), delta_square(&mu, &eps, &n_grid, &BochnerOptions::default())));
    }
    r.push("bochner.zero_for_n_at_least_one", || {
        let mut nonzero = 0;
        for (_, _, s) in &scans {
            let (_, scan) = s.as_ref().map_err(Clone::clone)?;
            nonzero += scan.cells.iter().filter(|c| c.n >= 1.0 && c.k != 0.0).count();
        }
        Ok((nonzero == 0, format!("{nonzero} nonzero cells with n ≥ 1")))
    });
    r.push("bochner.route_agreement", || {
        let grid = default_t_grid();
        let mut ok = true;
        let mut d = Vec::new();
        for (name, mu, s) in &scans {
            let (est, _) = s.as_ref().map_err(Clone::clone)?;
            let e = delta_c_entropy(mu, &Kernel::gaussian(), &grid, &CurveOptions::default())?;
            ok &= est.agrees_with(&e);
            d.push(format!("{name}: {:.3}/{:.3}", est.value, e.value));
        }
        Ok((ok, d.join(", ")))
    });
    r.push("bochner.fisher_family", || {
        let mut ok = true;
        let mut d = Vec::new();
        let window = FitWindow::default();
        for (name, mu, s) in &scans {
            let (_, scan) = s.as_ref().map_err(Clone::clone)?;
            let fisher = delta_c_fisher(mu, &eps, window)?;
            let n0 = scan.n_grid[0];
            let fam = scan.fisher_family_value(n0, window)?;
            ok &= (fam - fisher.value).abs() <= n0 + 1e-9;
            for (j, &n) in scan.n_grid.iter().enumerate() {
                let member = 1.0 - scan.fisher_family_value(n, window)?;
                ok &= scan.objective[j] <= member + 1e-9 * member.abs().max(1.0);
            }
            d.push(format!("{name}: family {fam:.3}, fisher route {:.3}", fisher.value));
        }
        Ok((ok, d.join(", ")))
    });
    r.push("bochner.localized_bound", || {
        let basis = TestFunctionBasis::default_hermite();
        let window = FitWindow::default();
        let taper = |x: f64| -> f64 { (x / 0.1).min((1.0 - x) / 0.1).clamp(0.0, 1.0) };
        let inner = |x: f64| -> f64 { ((x - 0.05) / 0.05).min((0.95 - x) / 0.05).clamp(0.0, 1.0) };
        let u = Measure::uniform(0.0, 1.0)?;
        let a = localized_lower_bound(&u, &taper, &eps, &basis, window)?;
        let b = localized_lower_bound(&Measure::dirac(0.0), &|_| 0.0, &eps, &basis, window)?;
        let mix = Measure::mixture(vec![(0.5, Measure::dirac(0.0)), (0.5, u.clone())])?;
        let c = localized_lower_bound(&mix, &inner, &eps, &basis, window)?;
        let ok = (a.bound - (1.0 - 0.2 / 3.0)).abs() < 1e-5
            && a.qualifies
            && b.bound.abs() < 1e-12
            && b.qualifies
            && (c.bound - (0.5 - 0.2 / 3.0)).abs() < 1e-5
            && c.qualifies;
        Ok((
            ok,
            format!(
                "uniform {:.4} (slope {:.3}), dirac {:.4}, mixture {:.4} (slope {:.3})",
                a.bound, a.slope, b.bound, c.bound, c.slope
            ),
        ))
    });
}

fn freedim_suite(r: &mut Report, seed: u64) {
    r.push("freedim.superaffine", || {
        let mut rng = task_rng(seed, 150);
        let mut ok = true;
        let mut equality_cases = 0;
        for _ in 0..100 {
            let k = rng.gen_range(2..5);
            let comps: Vec<(f64, Measure<f64>)> = (0..k)
                .map(|_| {
                    let m = rng.gen_range(1..5);
                    let pos: Vec<f64> = (0..m).map(|_| rng.gen_range(0..6) as f64).collect();
                    let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.05).collect();
                    let tot: f64 = w.iter().sum();
                    let w = w.iter().map(|x| x / tot).collect();
                    (1.0 / k as f64, Measure::atomic(pos, w).expect("valid"))
                })
                .collect();
            let lhs = free_dimension_single(&Measure::mixture(comps.clone())?);
            let rhs: f64 = comps.iter().map(|(a, m)| a * free_dimension_single(m)).sum();
            ok &= lhs >= rhs - 1e-12;
            if (lhs - rhs).abs() < 1e-12 {
                equality_cases += 1;
            }
        }
        // identical components give equality
        let m = Measure::<f64>::uniform_atoms(vec![0.0, 1.0, 3.0])?;
        let same = Measure::mixture(vec![(0.3, m.clone()), (0.7, m.clone())])?;
        ok &= (free_dimension_single(&same) - free_dimension_single(&m)).abs() < 1e-15;
        Ok((ok, format!("100 random mixtures, {equality_cases} with equality")))
    });
    r.push("freedim.range", || {
        let mut ok = true;
        for (_, mu) in measure_cases() {
            let v = free_dimension_single(&mu);
            ok &= (0.0..=1.0).contains(&v);
        }
        Ok((ok, "all values in [0, 1]".into()))
    });
    r.push("freedim.equal_atoms", || {
        let mut worst = 0.0_f64;
        for k in 1..=10 {
            let mu = Measure::uniform_atoms((0..k).map(|i| i as f64).collect())?;
            worst = worst.max((free_dimension_single(&mu) - (1.0 - 1.0 / k as f64)).abs());
        }
        Ok((worst <= 4.0 * f64::EPSILON, format!("largest deviation {worst:.2e}")))
    });
    r.push("freedim.exact_profile", || {
        let p = AtomProfile::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)], 0.0);
        Ok((p.free_dimension() == 0.5, format!("½δ_0 + ½δ_1 → {}", p.free_dimension())))
    });
}

/// `φ(0)` for the standard normal, used by callers checking closed forms.
pub fn standard_normal_peak() -> f64 {
    std_normal_pdf(0.0)
}
