//! `entdim`: entropy-dimension estimates for measures described in JSON.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use entdim_core::basis::TestFunctionBasis;
use entdim_core::bochner::{delta_square, BochnerOptions};
use entdim_core::curve::{geometric_grid, FitWindow, ScalingCurve};
use entdim_core::dimension::{delta_c_entropy, delta_c_fractal, DimensionEstimate, FractalOptions, FRACTAL_SAMPLES};
use entdim_core::entropy::{entropy_curve, CurveOptions};
use entdim_core::fisher::{delta_c_from_rows, fisher_scan};
use entdim_core::freedim::free_dimension_single;
use entdim_core::measure::parse_measure;
use entdim_core::rng::DEFAULT_SEED;
use entdim_core::verify::{self, Suite};
use entdim_core::{Kernel, Measure};

const EXIT_FLAGGED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "entdim", version, about = "Entropy dimension of probability measures on the line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smoothed entropy H(μ_t) over a geometric t grid (CSV).
    EntropyCurve(EntropyCurveArgs),
    /// Dimension estimate by one or more routes (JSON).
    Dimension(DimensionArgs),
    /// Fisher information of the heat-smoothed measure over an s grid (CSV).
    Fisher(FisherArgs),
    /// Optimal curvature constants over the (ε, n) grid (CSV).
    Bochner(BochnerArgs),
    /// Free entropy dimension 1 − Σ μ({t})² (JSON).
    Freedim(FreedimArgs),
    /// Run the property suites and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Measure document (JSON).
    #[arg(long)]
    measure: PathBuf,
    /// Output path; `-` writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct TGrid {
    #[arg(long, default_value_t = 1e-4)]
    tmin: f64,
    #[arg(long, default_value_t = 1e-1)]
    tmax: f64,
    #[arg(long, default_value_t = 25)]
    points: usize,
}

#[derive(Args)]
struct EntropyCurveArgs {
    #[command(flatten)]
    common: Common,
    /// gauss, box, box01 or file:PATH
    #[arg(long, default_value = "gauss")]
    kernel: String,
    #[command(flatten)]
    grid: TGrid,
    /// Monte Carlo cross-check samples per point (0 disables).
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Entropy,
    Fractal,
    Both,
    Fisher,
    Bochner,
}

#[derive(Args)]
struct DimensionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "entropy")]
    method: Method,
    /// gauss, box, box01 or file:PATH (entropy route)
    #[arg(long, default_value = "gauss")]
    kernel: String,
    #[command(flatten)]
    grid: TGrid,
    /// Samples per scale for the fractal route.
    #[arg(long, default_value_t = FRACTAL_SAMPLES)]
    samples: usize,
    #[command(flatten)]
    s_grid: SGrid,
}

#[derive(Args)]
struct SGrid {
    #[arg(long, default_value_t = 1e-8)]
    smin: f64,
    #[arg(long, default_value_t = 1.0)]
    smax: f64,
    #[arg(long, default_value_t = 30)]
    spoints: usize,
}

#[derive(Args)]
struct FisherArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: SGrid,
}

#[derive(Args)]
struct BochnerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1e-8)]
    eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 30)]
    eps_points: usize,
    #[arg(long, default_value_t = 0.01)]
    nmin: f64,
    #[arg(long, default_value_t = 1.0)]
    nmax: f64,
    #[arg(long, default_value_t = 20)]
    npoints: usize,
}

#[derive(Args)]
struct FreedimArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, measure, smoothing, entropy, dimension, fisher, bochner or freedim
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

/// Failure kinds and their exit codes.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<entdim_core::Error> for Failure {
    fn from(e: entdim_core::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(format!("i/o: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::EntropyCurve(a) => cmd_entropy_curve(a),
        Command::Dimension(a) => cmd_dimension(a),
        Command::Fisher(a) => cmd_fisher(a),
        Command::Bochner(a) => cmd_bochner(a),
        Command::Freedim(a) => cmd_freedim(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FLAGGED),
        Err(Failure::Usage(msg)) => {
            eprintln!("entdim: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("entdim: {msg}");
            ExitCode::from(EXIT_FLAGGED)
        }
    }
}

fn load_measure(path: &PathBuf) -> Result<Measure, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read measure {}: {e}", path.display())))?;
    parse_measure(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Tabulated kernel file: `{"origin": a, "step": h, "values": [...]}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    origin: f64,
    step: f64,
    values: Vec<f64>,
}

fn parse_kernel(s: &str) -> Result<Kernel, Failure> {
    match s {
        "gauss" => Ok(Kernel::gaussian()),
        "box" => Ok(Kernel::centered_box()),
        "box01" => Ok(Kernel::unit_box()),
        _ => {
            let Some(path) = s.strip_prefix("file:") else {
                return Err(Failure::Usage(format!(
                    "unknown kernel `{s}`; expected gauss, box, box01 or file:PATH"
                )));
            };
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read kernel {path}: {e}")))?;
            let k: KernelFile =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("kernel {path}: {e}")))?;
            Kernel::custom(k.origin, k.step, k.values).map_err(|e| Failure::Usage(format!("kernel {path}: {e}")))
        }
    }
}

/// Decreasing geometric grid from `max` to `min`; `0 < min < max ≤ 1`,
/// at least four points.
fn grid(name: &str, min: f64, max: f64, points: usize) -> Result<Vec<f64>, Failure> {
    if !(min > 0.0 && min < max && max <= 1.0) {
        return Err(Failure::Usage(format!("{name} grid needs 0 < min < max ≤ 1, got [{min}, {max}]")));
    }
    if points < 4 {
        return Err(Failure::Usage(format!("{name} grid needs at least 4 points, got {points}")));
    }
    geometric_grid(max, min, points).map_err(|e| Failure::Usage(e.to_string()))
}

fn write_out(out: &str, bytes: &[u8]) -> Result<(), Failure> {
    if out == "-" {
        let mut h = io::stdout().lock();
        h.write_all(bytes)?;
        h.flush()?;
    } else {
        fs::write(out, bytes).map_err(|e| Failure::Run(format!("cannot write {out}: {e}")))?;
    }
    Ok(())
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Run(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Run(e.to_string()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Failure::Run(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "H_err")]
    h_err: f64,
    flagged: bool,
}

fn cmd_entropy_curve(a: EntropyCurveArgs) -> Result<bool, Failure> {
    let mu = load_measure(&a.common.measure)?;
    let kernel = parse_kernel(&a.kernel)?;
    let t = grid("t", a.grid.tmin, a.grid.tmax, a.grid.points)?;
    let opts = CurveOptions {
        cross_check_samples: a.samples,
        seed: a.common.seed,
        window: FitWindow::default(),
    };
    let c = entropy_curve(&mu, &kernel, &t, &opts)?;
    let rows = (0..c.len()).map(|i| CurveRow {
        t: c.abscissa[i],
        h: c.values[i],
        h_err: c.value_errors[i],
        flagged: c.flagged[i],
    });
    write_out(&a.common.out, &csv_bytes(rows)?)?;
    Ok(!c.flagged.iter().any(|&f| f))
}

#[derive(Serialize)]
struct CurvePoint {
    scale: f64,
    value: f64,
    error: f64,
    flagged: bool,
}

#[derive(Serialize)]
struct FitDoc {
    slope: f64,
    intercept: f64,
    r2: f64,
    slope_se: f64,
}

#[derive(Serialize)]
struct EstimateDoc {
    value: f64,
    confidence: f64,
    method: &'static str,
    curve: Vec<CurvePoint>,
    fit: FitDoc,
    flagged: bool,
    notes: serde_json::Map<String, serde_json::Value>,
}

fn curve_points(c: &ScalingCurve) -> Vec<CurvePoint> {
    (0..c.len())
        .map(|i| CurvePoint {
            scale: c.abscissa[i],
            value: c.values[i],
            error: c.value_errors[i],
            flagged: c.flagged[i],
        })
        .collect()
}

fn estimate_doc(e: &DimensionEstimate) -> EstimateDoc {
    let mut notes = serde_json::Map::new();
    for (k, v) in &e.notes {
        notes.insert(k.clone(), serde_json::json!(v));
    }
    EstimateDoc {
        value: e.value,
        confidence: e.confidence,
        method: e.method.name(),
        curve: curve_points(&e.curve),
        fit: FitDoc {
            slope: e.curve.fit.slope,
            intercept: e.curve.fit.intercept,
            r2: e.curve.fit.r2,
            slope_se: e.curve.fit.slope_se,
        },
        flagged: e.flagged,
        notes,
    }
}

fn cmd_dimension(a: DimensionArgs) -> Result<bool, Failure> {
    let mu = load_measure(&a.common.measure)?;
    let kernel = parse_kernel(&a.kernel)?;
    let t = grid("t", a.grid.tmin, a.grid.tmax, a.grid.points)?;
    let window = FitWindow::default();
    let seed = a.common.seed;
    let entropy = || {
        let opts = CurveOptions {
            seed,
            ..CurveOptions::default()
        };
        delta_c_entropy(&mu, &kernel, &t, &opts)
    };
    let fractal = || {
        let opts = FractalOptions {
            samples: a.samples,
            seed,
            window,
        };
        delta_c_fractal(&mu, &t, &opts)
    };
    let estimates = match a.method {
        Method::Entropy => vec![entropy()?],
        Method::Fractal => vec![fractal()?],
        Method::Both => vec![entropy()?, fractal()?],
        Method::Fisher => {
            let s = grid("s", a.s_grid.smin, a.s_grid.smax, a.s_grid.spoints)?;
            vec![delta_c_from_rows(&fisher_scan(&mu, &s, None)?, window)?]
        }
        Method::Bochner => {
            let s = grid("eps", a.s_grid.smin, a.s_grid.smax, a.s_grid.spoints)?;
            let (est, _) = delta_square(&mu, &s, &entdim_core::bochner::default_n_grid(), &BochnerOptions::default())?;
            vec![est]
        }
    };
    let ok = !estimates.iter().any(|e| e.flagged);
    let docs: Vec<EstimateDoc> = estimates.iter().map(estimate_doc).collect();
    let bytes = if docs.len() == 1 {
        json_bytes(&docs[0])?
    } else {
        json_bytes(&docs)?
    };
    write_out(&a.common.out, &bytes)?;
    Ok(ok)
}

#[derive(Serialize)]
struct FisherCsv {
    s: f64,
    #[serde(rename = "F_direct")]
    f_direct: f64,
    #[serde(rename = "F_var")]
    f_var: f64,
    #[serde(rename = "F_err")]
    f_err: f64,
    #[serde(rename = "sF")]
    s_f: f64,
}

fn cmd_fisher(a: FisherArgs) -> Result<bool, Failure> {
    let mu = load_measure(&a.common.measure)?;
    let s = grid("s", a.grid.smin, a.grid.smax, a.grid.spoints)?;
    let basis = TestFunctionBasis::default_hermite();
    let rows = fisher_scan(&mu, &s, Some(&basis))?;
    let ok = !rows.iter().any(|r| r.direct.flagged);
    let csv = csv_bytes(rows.iter().map(|r| FisherCsv {
        s: r.s,
        f_direct: r.direct.value,
        f_var: r.variational.map_or(f64::NAN, |v| v.value),
        f_err: r.direct.error,
        s_f: r.s_f(),
    }))?;
    write_out(&a.common.out, &csv)?;
    Ok(ok)
}

#[derive(Serialize)]
struct BochnerCsv {
    eps: f64,
    n: f64,
    #[serde(rename = "K")]
    k: f64,
    source: &'static str,
}

fn cmd_bochner(a: BochnerArgs) -> Result<bool, Failure> {
    let mu = load_measure(&a.common.measure)?;
    let eps = grid("eps", a.eps_min, a.eps_max, a.eps_points)?;
    let mut n = grid("n", a.nmin, a.nmax, a.npoints)?;
    n.reverse();
    let (_, scan) = delta_square(&mu, &eps, &n, &BochnerOptions::default())?;
    let csv = csv_bytes(scan.cells.iter().map(|c| BochnerCsv {
        eps: c.eps,
        n: c.n,
        k: c.k,
        source: c.source.name(),
    }))?;
    write_out(&a.common.out, &csv)?;
    Ok(true)
}

#[derive(Serialize)]
struct Scalar {
    value: f64,
}

fn cmd_freedim(a: FreedimArgs) -> Result<bool, Failure> {
    let mu = load_measure(&a.measure)?;
    let mut bytes = serde_json::to_vec(&Scalar {
        value: free_dimension_single(&mu),
    })
    .map_err(|e| Failure::Run(e.to_string()))?;
    bytes.push(b'\n');
    write_out(&a.out, &bytes)?;
    Ok(true)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool, Failure> {
    let suite = Suite::parse(&a.suite).ok_or_else(|| {
        Failure::Usage(format!("unknown suite `{}`; expected one of {}", a.suite, Suite::NAMES.join(", ")))
    })?;
    let report = verify::run(suite, a.seed);
    write_out(&a.out, report.table().as_bytes())?;
    Ok(report.passed())
}
