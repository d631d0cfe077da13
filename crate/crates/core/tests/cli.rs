use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gridot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridot"))
        .args(args)
        .current_dir(dir)
        .env_remove("OT_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn generate_pair(dir: &Path) {
    ok(&gridot(
        &[
            "generate",
            "gaussian",
            "--mean",
            "0,0",
            "--cov",
            "4,-1,-1,1",
            "--n",
            "2000",
            "--seed",
            "7",
            "--out",
            "a.csv",
        ],
        dir,
    ));
    ok(&gridot(
        &[
            "generate", "gaussian", "--mean", "1,0", "--cov", "9,8,8,9", "--n", "1500", "--seed",
            "8", "--out", "b.csv",
        ],
        dir,
    ));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gridot(
        &[
            "generate",
            "uniform-square",
            "--n",
            "300",
            "--seed",
            "5",
            "--out",
            "x.csv",
        ],
        d,
    ));
    ok(&gridot(
        &[
            "generate",
            "uniform-square",
            "--n",
            "300",
            "--seed",
            "5",
            "--out",
            "y.csv",
        ],
        d,
    ));
    let x = fs::read(d.join("x.csv")).unwrap();
    assert_eq!(x, fs::read(d.join("y.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert_eq!(text.lines().count(), 300);
    for line in text.lines() {
        for v in line.split(',') {
            let v: f64 = v.parse().unwrap();
            assert!((0.0..1.0).contains(&v));
        }
    }
    let out = gridot(
        &["generate", "gaussian", "--mean", "0,0", "--cov", "1,2,2,1"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_writes_reference_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&gridot(
        &[
            "generate",
            "gaussian",
            "--mean",
            "0,0",
            "--cov",
            "4,-1,-1,1",
            "--n",
            "50",
            "--seed",
            "1",
            "--out",
            "a.csv",
            "--reference-out",
            "ref.csv",
            "--target-mean",
            "0,0",
            "--target-cov",
            "9,8,8,9",
        ],
        d,
    ));
    let table = fs::read_to_string(d.join("ref.csv")).unwrap();
    let samples = fs::read_to_string(d.join("a.csv")).unwrap();
    for (t, s) in table.lines().zip(samples.lines()) {
        assert_eq!(t.split(',').count(), 4);
        assert!(t.starts_with(s));
    }
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate_pair(d);
    let out = gridot(
        &[
            "solve",
            "--src",
            "a.csv",
            "--dst",
            "b.csv",
            "--levels",
            "4",
            "--n-min",
            "10",
            "--out",
            "run",
            "--reference",
            "gaussian-affine",
            "--ref-src-mean",
            "0,0",
            "--ref-src-cov",
            "4,-1,-1,1",
            "--ref-dst-mean",
            "1,0",
            "--ref-dst-cov",
            "9,8,8,9",
        ],
        d,
    );
    ok(&out);
    let run = d.join("run");
    assert_eq!(
        fs::read_to_string(run.join("levels.jsonl"))
            .unwrap()
            .lines()
            .count(),
        4
    );
    let mapped = fs::read_to_string(run.join("mapped.csv")).unwrap();
    assert_eq!(mapped.lines().count(), 2000);
    let coupling = fs::read_to_string(run.join("coupling.csv")).unwrap();
    assert_eq!(
        coupling.lines().next().unwrap(),
        "source_cell_linear_index,target_cell_linear_index,lambda"
    );
    let total: f64 = coupling
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["level"], 4);
    assert!(metrics["E1_source_side"].as_f64().unwrap() > 0.0);
    assert!(metrics["W"].as_f64().unwrap() > 0.0);
    assert!(metrics["E2"].as_f64().unwrap().abs() < 0.5);

    // same inputs, same bytes
    ok(&gridot(
        &[
            "solve",
            "--src",
            "a.csv",
            "--dst",
            "b.csv",
            "--levels",
            "4",
            "--out",
            "run2",
            "--reference",
            "gaussian-affine",
            "--ref-src-mean",
            "0,0",
            "--ref-src-cov",
            "4,-1,-1,1",
            "--ref-dst-mean",
            "1,0",
            "--ref-dst-cov",
            "9,8,8,9",
            "--workers",
            "2",
        ],
        d,
    ));
    for f in ["metrics.json", "mapped.csv", "coupling.csv"] {
        assert_eq!(
            fs::read(run.join(f)).unwrap(),
            fs::read(d.join("run2").join(f)).unwrap(),
            "{f}"
        );
    }

    // the metrics command reproduces E1 from the mapped file
    let m = gridot(
        &[
            "metrics",
            "--src",
            "a.csv",
            "--mapped",
            "run/mapped.csv",
            "--dst",
            "b.csv",
            "--reference",
            "gaussian-affine",
            "--ref-src-mean",
            "0,0",
            "--ref-src-cov",
            "4,-1,-1,1",
            "--ref-dst-mean",
            "1,0",
            "--ref-dst-cov",
            "9,8,8,9",
        ],
        d,
    );
    ok(&m);
    let v: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    let e1 = v["E1_source_side"].as_f64().unwrap();
    assert!((e1 - metrics["E1_source_side"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(v["ks_per_axis"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_error_exits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate_pair(d);
    let out = gridot(
        &[
            "solve",
            "--src",
            "missing.csv",
            "--dst",
            "b.csv",
            "--out",
            "o",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    fs::write(d.join("c.csv"), "1,2,3\n4,5,6\n").unwrap();
    let out = gridot(
        &["solve", "--src", "a.csv", "--dst", "c.csv", "--out", "o"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("dimension 2") && msg.contains("dimension 3"),
        "{msg}"
    );

    fs::write(d.join("bad.csv"), "1,2\n3,x\n").unwrap();
    let out = gridot(
        &["solve", "--src", "bad.csv", "--dst", "b.csv", "--out", "o"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));

    fs::write(d.join("empty.csv"), "").unwrap();
    let out = gridot(
        &[
            "solve",
            "--src",
            "empty.csv",
            "--dst",
            "b.csv",
            "--out",
            "o",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn header_flag_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate_pair(d);
    let body = fs::read_to_string(d.join("a.csv")).unwrap();
    fs::write(d.join("ah.csv"), format!("x,y\n{body}")).unwrap();
    fs::write(
        d.join("cfg.json"),
        r#"{"max_levels": 2, "policy": "longest_axis"}"#,
    )
    .unwrap();
    ok(&gridot(
        &[
            "--header", "--config", "cfg.json", "solve", "--src", "ah.csv", "--dst", "ah.csv",
            "--out", "o",
        ],
        d,
    ));
    let levels = fs::read_to_string(d.join("o/levels.jsonl")).unwrap();
    assert_eq!(levels.lines().count(), 2);

    fs::write(d.join("bad.json"), r#"{"no_such_key": 1}"#).unwrap();
    let out = gridot(
        &[
            "--config", "bad.json", "solve", "--src", "a.csv", "--dst", "b.csv", "--out", "o",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn barycenter_and_interpolate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate_pair(d);
    ok(&gridot(
        &[
            "generate",
            "uniform-cross",
            "--n",
            "1000",
            "--seed",
            "3",
            "--out",
            "c.csv",
        ],
        d,
    ));
    ok(&gridot(
        &[
            "barycenter",
            "a.csv",
            "b.csv",
            "c.csv",
            "--weights",
            "0.2,0.3,0.5",
            "--max-iters",
            "2",
            "--out",
            "bary",
        ],
        d,
    ));
    let samples = fs::read_to_string(d.join("bary/barycenter.csv")).unwrap();
    assert_eq!(samples.lines().count(), 2000);
    let history = fs::read_to_string(d.join("bary/history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 2);

    let out = gridot(
        &[
            "barycenter",
            "a.csv",
            "b.csv",
            "--weights",
            "0.5,0.6",
            "--out",
            "bad",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    let out = gridot(
        &[
            "barycenter",
            "a.csv",
            "b.csv",
            "--weights",
            "1",
            "--out",
            "bad",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));

    // degenerate weights leave the first marginal where it is
    ok(&gridot(
        &[
            "barycenter",
            "a.csv",
            "b.csv",
            "--weights",
            "1,0",
            "--max-iters",
            "1",
            "--out",
            "one",
        ],
        d,
    ));
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    let one = fs::read_to_string(d.join("one/barycenter.csv")).unwrap();
    let disp: f64 = a
        .lines()
        .zip(one.lines())
        .map(|(x, y)| {
            let x: Vec<f64> = x.split(',').map(|v| v.parse().unwrap()).collect();
            let y: Vec<f64> = y.split(',').map(|v| v.parse().unwrap()).collect();
            ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
        })
        .sum::<f64>()
        / 2000.0;
    assert!(disp < 0.3, "{disp}");

    let out = gridot(
        &[
            "interpolate",
            "--src",
            "a.csv",
            "--dst",
            "b.csv",
            "--t",
            "0.5",
            "--max-iters",
            "2",
        ],
        d,
    );
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2000);
    let out = gridot(
        &[
            "interpolate",
            "--src",
            "a.csv",
            "--dst",
            "b.csv",
            "--t",
            "2",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
}
