use std::path::Path;
use std::process::{Command, Output};

fn lbtrunc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbtrunc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const HAND: &str = "t,y\n0.1,0.5\n0.2,0.3\n0.4,0.9\n";

#[test]
fn estimate_hand_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "hand.csv", HAND);
    let out = lbtrunc(&["estimate", &data]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "y,f_n\n0.3,0.5\n0.5,0.75\n0.9,1.0\n");
}

#[test]
fn estimate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "hand.csv", HAND);
    let out_dir = dir.path().join("out");
    let out = lbtrunc(&["estimate", &data, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 3);
    assert_eq!(json["f_n"][1][1], 0.75);
}

#[test]
fn simulate_then_estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", "seed = 5\n[model]\ncatalog = \"uniform-shifted\"\n[simulate]\nn = 200\n");
    let sim = lbtrunc(&["simulate", "--config", &config]);
    assert_eq!(sim.status.code(), Some(0));
    let text = String::from_utf8(sim.stdout).unwrap();
    assert!(text.starts_with("# seed = 5\n"));
    let data = write(dir.path(), "sample.csv", &text);

    let again = lbtrunc(&["simulate", "--config", &config]);
    assert_eq!(again.stdout, text.as_bytes());

    let est = lbtrunc(&["estimate", &data]);
    assert_eq!(est.status.code(), Some(0));
    let table = String::from_utf8(est.stdout).unwrap();
    let rows: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let (y, f) = l.split_once(',').unwrap();
            (y.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    assert_eq!(rows.last().unwrap().1, 1.0);

    let out_dir = dir.path().join("sim");
    lbtrunc(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(out_dir.join("sample.csv")).unwrap(), text);
}

#[test]
fn sigma2_without_truncation_is_binomial() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", "[model]\ncatalog = \"no-truncation\"\n[sigma2]\nphi = \"indicator(0.5)\"\n");
    let out = lbtrunc(&["sigma2", "--config", &config]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let v = json["sigma2"]["value"].as_f64().unwrap();
    assert!((v - 0.25).abs() < 1e-4, "{v}");

    let out = lbtrunc(&["sigma2", "--config", &config, "--phi", "indicator(0.2)"]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["sigma2"]["value"].as_f64().unwrap() - 0.16).abs() < 1e-4);
}

#[test]
fn brackets_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "b.toml",
        "[model]\ncatalog = \"uniform-shifted\"\n[brackets]\nclass = { kind = \"indicator\" }\nepsilon = 0.3\n",
    );
    let out_dir = dir.path().join("b");
    let out = lbtrunc(&["brackets", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("brackets.json")).unwrap()).unwrap();
    let size = json["size"].as_u64().unwrap() as usize;
    assert!(size >= 1);
    let csv = std::fs::read_to_string(out_dir.join("brackets.csv")).unwrap();
    assert_eq!(csv.lines().count(), size + 1);
    assert!(json["entropy_integral"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    // Success.
    let hand = write(p, "hand.csv", HAND);
    assert_eq!(lbtrunc(&["estimate", &hand]).status.code(), Some(0));

    // Configuration errors.
    let missing = p.join("missing.csv");
    assert_eq!(lbtrunc(&["estimate", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = write(p, "bad.csv", "t,y\n0.1,0.5\n0.9,0.2\n");
    assert_eq!(lbtrunc(&["estimate", &bad]).status.code(), Some(2));
    assert_eq!(lbtrunc(&["estimate", &bad, "--lenient"]).status.code(), Some(0));
    let header = write(p, "header.csv", "a,b\n0.1,0.5\n");
    assert_eq!(lbtrunc(&["estimate", &header]).status.code(), Some(2));
    let unknown = write(p, "unknown.toml", "sead = 1\n");
    assert_eq!(lbtrunc(&["sigma2", "--config", &unknown]).status.code(), Some(2));
    let no_section = write(p, "nosec.toml", "[model]\ncatalog = \"uniform-shifted\"\n");
    assert_eq!(lbtrunc(&["clt", "--config", &no_section]).status.code(), Some(2));
    let no_b = write(
        p,
        "nob.toml",
        "[model]\ncatalog = \"uniform-uniform\"\n[clt]\nphis = [\"indicator(0.5)\"]\nn = 50\nreplications = 10\n",
    );
    assert_eq!(lbtrunc(&["clt", "--config", &no_b]).status.code(), Some(2));
    let tol = write(p, "tol.toml", "[model]\ncatalog = \"uniform-shifted\"\n[sigma2]\nphi = \"indicator(0.5)\"\n");
    assert_eq!(lbtrunc(&["sigma2", "--config", &tol, "--tol", "-1"]).status.code(), Some(2));

    // PASS and FAIL verdicts.
    let lln = |grid: &str| {
        format!(
            "seed = 3\n[model]\ncatalog = \"uniform-uniform\"\n[lln]\nclass = {{ kind = \"indicator\" }}\nn_grid = {grid}\nreplications = 40\n"
        )
    };
    let pass = write(p, "pass.toml", &lln("[100, 1600]"));
    assert_eq!(lbtrunc(&["lln", "--config", &pass]).status.code(), Some(0));
    // A ten percent larger sample cannot halve the median error.
    let fail = write(p, "fail.toml", &lln("[100, 110]"));
    assert_eq!(lbtrunc(&["lln", "--config", &fail]).status.code(), Some(1));

    // Numerical failure: the budget for brackets is exhausted.
    let budget = write(
        p,
        "budget.toml",
        "[model]\ncatalog = \"uniform-shifted\"\n[brackets]\nclass = { kind = \"lipschitz\", lo = 0.0, hi = 1.0, bound = 1.0, lipschitz = 1.0 }\nepsilon = 0.001\n",
    );
    assert_eq!(lbtrunc(&["brackets", "--config", &budget]).status.code(), Some(3));

    // Argument errors from the parser.
    assert_eq!(lbtrunc(&["frobnicate"]).status.code(), Some(2));
}
