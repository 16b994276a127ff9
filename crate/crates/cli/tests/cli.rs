use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

fn sigkern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigkern"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = sigkern(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_jsonl(path: &Path, seqs: &[(String, Vec<Vec<f64>>)]) {
    let lines: Vec<String> = seqs
        .iter()
        .map(|(id, pts)| serde_json::json!({"id": id, "points": pts}).to_string())
        .collect();
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn walks(seed: u64, n: usize, drift: f64, prefix: &str) -> Vec<(String, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut v = 0.0;
            let mut pts = vec![vec![0.0]];
            for _ in 0..10 {
                let z: f64 = rng.sample(StandardNormal);
                v += drift + z;
                pts.push(vec![v]);
            }
            (format!("{prefix}{i}"), pts)
        })
        .collect()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        write_jsonl(
            &root.join("unit.jsonl"),
            &[("u".into(), vec![vec![0.0], vec![1.0]])],
        );
        write_jsonl(&root.join("x.jsonl"), &walks(1, 30, 0.0, "x"));
        write_jsonl(&root.join("y.jsonl"), &walks(2, 30, 0.0, "y"));
        write_jsonl(&root.join("drift.jsonl"), &walks(3, 30, 0.7, "d"));
        Fixture { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[test]
fn level_zero_kernel_is_one() {
    let f = Fixture::new();
    let x = f.path("x.jsonl");
    let r = ok_json(&[
        "kernel",
        "--x",
        s(&x),
        "--x-id",
        "x3",
        "--y",
        s(&x),
        "--y-id",
        "x7",
        "--level",
        "0",
    ]);
    assert_eq!(r["value"], 1.0);
    assert_eq!(r["levels"], serde_json::json!([1.0]));
}

#[test]
fn dp_and_pde_agree_on_unit_segment() {
    let f = Fixture::new();
    let u = f.path("unit.jsonl");
    let dp = ok_json(&["kernel", "--x", s(&u), "--y", s(&u), "--level", "12"]);
    let pde = ok_json(&[
        "kernel",
        "--x",
        s(&u),
        "--y",
        s(&u),
        "--method",
        "pde",
        "--dyadic-order",
        "6",
    ]);
    let (a, b) = (
        dp["value"].as_f64().unwrap(),
        pde["value"].as_f64().unwrap(),
    );
    let bound = dp["tail_bound"].as_f64().unwrap();
    assert!(bound < 1e-9);
    assert!((a - b).abs() <= bound + 1e-3, "{a} vs {b}");
    assert_eq!(pde["method"], "pde");
    assert!(pde.get("levels").is_none());
}

#[test]
fn report_embeds_config_and_reproduces() {
    let f = Fixture::new();
    let x = f.path("x.jsonl");
    let first = sigkern(&[
        "kernel",
        "--x",
        s(&x),
        "--x-id",
        "x1",
        "--y",
        s(&x),
        "--y-id",
        "x2",
        "--kernel",
        "rbf",
        "--bandwidth",
        "2.5",
        "--normalize",
        "--norm-C",
        "3",
        "--preprocess",
        "add_time:2,standardize",
        "--seed",
        "11",
    ]);
    assert!(first.status.success());
    let report: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["config"]["kernel"]["bandwidth"], 2.5);
    assert_eq!(report["config"]["normalization"]["c"], 3.0);
    assert_eq!(report["config"]["seed"], 11);
    assert_eq!(
        report["config"]["preprocess"],
        serde_json::json!(["add_time:2", "standardize"])
    );
    assert_eq!(report["fingerprint"].as_str().unwrap().len(), 64);
    assert!(report["value"].as_f64().unwrap() <= 3.0 * 2.0);

    let saved = f.path("report.json");
    fs::write(&saved, &first.stdout).unwrap();
    let again = sigkern(&[
        "kernel",
        "--x",
        s(&x),
        "--x-id",
        "x1",
        "--y",
        s(&x),
        "--y-id",
        "x2",
        "--config",
        s(&saved),
    ]);
    assert_eq!(again.stdout, first.stdout);

    let text = String::from_utf8(first.stdout).unwrap();
    let order = [
        "\"command\"",
        "\"config\"",
        "\"fingerprint\"",
        "\"x_id\"",
        "\"y_id\"",
        "\"method\": \"dp\"",
        "\"value\"",
        "\"levels\"",
        "\"theta\"",
    ];
    let positions: Vec<usize> = order.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
}

#[test]
fn toml_config_with_flag_override() {
    let f = Fixture::new();
    let cfg = f.path("run.toml");
    fs::write(
        &cfg,
        "seed = 4\n[kernel]\nfamily = \"exponential\"\nbandwidth = 0.5\n[method]\nlevel = 3\n",
    )
    .unwrap();
    let x = f.path("x.jsonl");
    let r = ok_json(&[
        "kernel",
        "--x",
        s(&x),
        "--x-id",
        "x0",
        "--y",
        s(&x),
        "--y-id",
        "x0",
        "--config",
        s(&cfg),
        "--level",
        "5",
    ]);
    assert_eq!(r["config"]["kernel"]["family"], "exponential");
    assert_eq!(r["config"]["method"]["level"], 5);
    assert_eq!(r["levels"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let u = f.path("unit.jsonl");
    let many = f.path("x.jsonl");
    let bad_cfg = f.path("bad.toml");
    fs::write(&bad_cfg, "[kernel]\nbandwith = 1.0\n").unwrap();

    let cases: [(Vec<&str>, i32); 7] = [
        (
            vec![
                "kernel",
                "--x",
                s(&u),
                "--y",
                s(&u),
                "--config",
                s(&bad_cfg),
            ],
            2,
        ),
        (
            vec![
                "kernel",
                "--x",
                s(&u),
                "--y",
                s(&u),
                "--kernel",
                "rbf",
                "--bandwidth",
                "-1",
            ],
            2,
        ),
        (
            vec![
                "kernel",
                "--x",
                s(&u),
                "--y",
                s(&u),
                "--method",
                "pde",
                "--normalize",
            ],
            2,
        ),
        (
            vec!["kernel", "--x", s(&u), "--y", s(&u), "--preprocess", "warp"],
            2,
        ),
        (vec!["kernel", "--x", "/nonexistent.jsonl", "--y", s(&u)], 3),
        (vec!["kernel", "--x", s(&many), "--y", s(&u)], 3),
        (
            vec![
                "kernel",
                "--x",
                s(&u),
                "--y",
                s(&u),
                "--method",
                "pde",
                "--dyadic-order",
                "30",
            ],
            4,
        ),
    ];
    for (args, code) in cases {
        let out = sigkern(&args);
        assert_eq!(
            out.status.code(),
            Some(code),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty(), "{args:?} printed partial output");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn gram_single_sequence_csv() {
    let f = Fixture::new();
    let out = f.path("g.csv");
    let r = ok_json(&["gram", "--data", s(&f.path("unit.jsonl")), "--out", s(&out)]);
    assert_eq!(r["n"], 1);
    assert_eq!(r["format"], "csv");
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "u");
    assert!(!lines[1].contains(','));
}

#[test]
fn gram_is_byte_identical_across_runs_and_workers() {
    let f = Fixture::new();
    let data = f.path("x.jsonl");
    for ext in ["csv", "bin"] {
        let mut outputs = Vec::new();
        for (i, workers) in ["1", "1", "3"].iter().enumerate() {
            let out = f.path(&format!("g{i}.{ext}"));
            ok_json(&[
                "gram",
                "--data",
                s(&data),
                "--out",
                s(&out),
                "--kernel",
                "rbf",
                "--workers",
                workers,
                "--normalize",
            ]);
            outputs.push(fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[0], outputs[2]);
    }
}

#[test]
fn full_rank_nystrom_matches_exact_gram() {
    let f = Fixture::new();
    let data = f.path("x.jsonl");
    let (exact, approx) = (f.path("exact.bin"), f.path("approx.bin"));
    ok_json(&[
        "gram",
        "--data",
        s(&data),
        "--out",
        s(&exact),
        "--kernel",
        "rbf",
        "--preprocess",
        "add_time",
    ]);
    let r = ok_json(&[
        "gram",
        "--data",
        s(&data),
        "--out",
        s(&approx),
        "--kernel",
        "rbf",
        "--preprocess",
        "add_time",
        "--nystrom-rank",
        "30",
    ]);
    assert_eq!(r["landmarks"].as_array().unwrap().len(), 30);
    let a = sigkern::io::read_gram_binary(&fs::read(&exact).unwrap()).unwrap();
    let b = sigkern::io::read_gram_binary(&fs::read(&approx).unwrap()).unwrap();
    let diff: f64 = a
        .iter()
        .zip(&b)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = a.iter().map(|u| u * u).sum::<f64>().sqrt();
    assert!(diff / norm <= 1e-8, "{}", diff / norm);
}

#[test]
fn gram_rejects_unknown_extension() {
    let f = Fixture::new();
    let out = sigkern(&[
        "gram",
        "--data",
        s(&f.path("x.jsonl")),
        "--out",
        s(&f.path("g.txt")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!f.path("g.txt").exists());
}

#[test]
fn csv_directory_input() {
    let f = Fixture::new();
    let dir = f.path("csvs");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("a.csv"), "t,v\n0,0\n1,1\n").unwrap();
    fs::write(dir.join("b.csv"), "0,0\n1,2\n2,2\n").unwrap();
    let out = f.path("g.csv");
    ok_json(&["gram", "--data", s(&dir), "--out", s(&out)]);
    assert!(fs::read_to_string(&out).unwrap().starts_with("a,b\n"));
}

const TEST_FLAGS: [&str; 8] = [
    "--kernel",
    "rbf",
    "--bandwidth",
    "2",
    "--preprocess",
    "add_time",
    "--level",
    "3",
];

#[test]
fn identical_samples_are_not_rejected() {
    let f = Fixture::new();
    let x = f.path("x.jsonl");
    let mut args = vec![
        "test2",
        "--x",
        s(&x),
        "--y",
        s(&x),
        "-B",
        "99",
        "--seed",
        "5",
    ];
    args.extend(TEST_FLAGS);
    let r = ok_json(&args);
    assert_eq!(r["result"]["reject"], false);
    assert_eq!(r["result"]["permutations"], 99);
    let p = r["result"]["p_value"].as_f64().unwrap();
    assert!((1.0 / 100.0..=1.0).contains(&p));
}

#[test]
fn drift_is_detected_and_results_are_deterministic() {
    let f = Fixture::new();
    let (x, d) = (f.path("x.jsonl"), f.path("drift.jsonl"));
    let run = |workers: &str| {
        let mut args = vec![
            "test2",
            "--x",
            s(&x),
            "--y",
            s(&d),
            "--seed",
            "8",
            "--workers",
            workers,
        ];
        args.extend(TEST_FLAGS);
        let out = sigkern(&args);
        assert!(out.status.success());
        let r: Value = serde_json::from_slice(&out.stdout).unwrap();
        r
    };
    let r = run("1");
    // the worker count is part of the embedded config; the result must not depend on it
    assert_eq!(r["result"].to_string(), run("4")["result"].to_string());
    assert_eq!(r["result"].to_string(), run("1")["result"].to_string());
    assert_eq!(r["result"]["reject"], true);
    assert_eq!(r["result"]["p_value"], 1.0 / 201.0);

    let y = f.path("y.jsonl");
    let mut args = vec!["test2", "--x", s(&x), "--y", s(&y), "--seed", "8"];
    args.extend(TEST_FLAGS);
    assert_eq!(ok_json(&args)["result"]["reject"], false);
}

#[test]
fn grid_sweep_and_sup_test() {
    let f = Fixture::new();
    let grid = f.path("grid.jsonl");
    fs::write(
        &grid,
        "{\"kernel\": {\"bandwidth\": 0.5}}\n\n{\"kernel\": {\"bandwidth\": 2.0}}\n{\"method\": {\"level\": 2}}\n",
    )
    .unwrap();
    let (x, d) = (f.path("x.jsonl"), f.path("drift.jsonl"));
    let base = ["--kernel", "rbf", "--preprocess", "add_time"];

    let mut args = vec!["sweep", "--x", s(&x), "--y", s(&d), "--grid", s(&grid)];
    args.extend(base);
    let sweep = ok_json(&args);
    let entries = sweep["grid"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    let values: Vec<f64> = entries
        .iter()
        .map(|e| e["mmd2"].as_f64().unwrap())
        .collect();
    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(sweep["sup_mmd2"].as_f64().unwrap(), sup);
    assert_eq!(values[sweep["argmax"].as_u64().unwrap() as usize], sup);
    assert_eq!(entries[1]["config"]["kernel"]["bandwidth"], 2.0);

    let mut args = vec![
        "test2",
        "--x",
        s(&x),
        "--y",
        s(&d),
        "--grid",
        s(&grid),
        "-B",
        "50",
    ];
    args.extend(base);
    let test = ok_json(&args);
    assert_eq!(test["result"]["mmd2"].as_f64().unwrap(), sup);
    assert_eq!(test["result"]["argmax"], sweep["argmax"]);

    fs::write(&grid, "{\"seed\": 3}\n").unwrap();
    let mut args = vec!["sweep", "--x", s(&x), "--y", s(&d), "--grid", s(&grid)];
    args.extend(base);
    assert_eq!(sigkern(&args).status.code(), Some(2));
}
