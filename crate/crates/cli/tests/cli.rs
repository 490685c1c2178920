use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entdim"))
}

fn doc(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "docs", "measures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn freedim_of_two_atoms() {
    let out = run(&["freedim", "--measure", &doc("two_atoms.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "{\"value\":0.5}\n");
}

#[test]
fn dimension_of_dirac_by_both_routes() {
    let out = run(&["dimension", "--measure", &doc("dirac.json"), "--method", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["method"], "entropy-slope");
    assert_eq!(arr[1]["method"], "fractal-average");
    for e in arr {
        assert!(e["value"].as_f64().unwrap().abs() < 0.05, "{e}");
        assert!(e["confidence"].as_f64().unwrap() > 0.0);
        assert_eq!(e["curve"].as_array().unwrap().len(), 25);
    }
}

#[test]
fn single_method_is_an_object_with_stable_keys() {
    let out = run(&["dimension", "--measure", &doc("uniform.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let keys: Vec<usize> = ["\"value\"", "\"confidence\"", "\"method\"", "\"curve\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn entropy_curve_csv() {
    let out = run(&[
        "entropy-curve", "--measure", &doc("cantor_quarter.json"), "--kernel", "box", "--points", "6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,H,H_err,flagged"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn fisher_csv_respects_the_bound() {
    let out = run(&["fisher", "--measure", &doc("dirac.json"), "--smin", "1e-4", "--spoints", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["s", "F_direct", "F_var", "F_err", "sF"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let sf: f64 = row[4].parse().unwrap();
        assert!((sf - 1.0).abs() < 0.02, "{row:?}");
    }
}

#[test]
fn bochner_csv() {
    let out = run(&[
        "bochner", "--measure", &doc("uniform.json"), "--eps-points", "6", "--npoints", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["eps", "n", "K", "source"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 24);
    for row in &rows {
        assert!(["eig", "fisher-family"].contains(&&row[3]));
        if row[1].parse::<f64>().unwrap() >= 1.0 {
            assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn identical_argv_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("est{i}.json"));
        let out = run(&[
            "dimension", "--measure", &doc("cantor_quarter.json"), "--method", "fractal", "--samples", "3000",
            "--seed", "9", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.code().is_some_and(|c| c <= 1));
        assert!(out.stdout.is_empty());
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let other = run(&[
        "dimension", "--measure", &doc("cantor_quarter.json"), "--method", "fractal", "--samples", "3000",
        "--seed", "10",
    ]);
    assert_ne!(other.stdout, outputs[0]);
}

#[test]
fn custom_kernel_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tent.json");
    std::fs::write(&path, r#"{"origin": -1.0, "step": 1.0, "values": [0.0, 1.0, 0.0]}"#).unwrap();
    let kernel = format!("file:{}", path.display());
    let out = run(&[
        "dimension", "--measure", &doc("dirac.json"), "--kernel", &kernel, "--points", "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["value"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn usage_errors_exit_two() {
    let bad_grid = run(&["entropy-curve", "--measure", &doc("dirac.json"), "--tmin", "0.5", "--tmax", "0.1"]);
    assert_eq!(bad_grid.status.code(), Some(2));
    let few = run(&["fisher", "--measure", &doc("dirac.json"), "--spoints", "3"]);
    assert_eq!(few.status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["dimension", "--measure", &doc("dirac.json"), "--kernel", "cauchy"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "everything"]).status.code(), Some(2));
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"type": "atomic", "positions": [0.0, 1.0], "weights": [0.5, 0.7]}"#).unwrap();
    let out = run(&["freedim", "--measure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("weights"), "{err}");
}

#[test]
fn verify_small_suites() {
    let out = run(&["verify", "--suite", "freedim", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("check"));
    assert!(table.contains("freedim.superaffine"));
    assert!(table.contains(", 0 failed"));
    let out = run(&["verify", "--suite", "measure"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_all_with_seed_seven() {
    let out = run(&["verify", "--suite", "all", "--seed", "7"]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.contains(", 0 failed"));
    for module in ["measure.", "smoothing.", "entropy.", "dimension.", "fisher.", "bochner.", "freedim."] {
        assert!(table.contains(module), "{module}");
    }
}
