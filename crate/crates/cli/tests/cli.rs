use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ici(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ici"))
        .args(args)
        .output()
        .expect("run ici")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn is_power_of_two(x: f64) -> bool {
    let a = x.abs();
    a >= 1.0 && a.log2().fract() == 0.0
}

#[test]
fn exponential_certifies_every_condition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let o = ici(&["certify", "--dist", "exponential", "--condition", "all", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.with_extension("json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["dist"]["kind"], "exponential");
    let k = &r["constants"];
    assert!((k["b_tilde"].as_f64().unwrap() - 1.0 / 420.0).abs() < 1e-12);
    assert!((k["beta"].as_f64().unwrap() - 1680.0 * std::f64::consts::E).abs() < 1e-9);
    let conds: Vec<&str> = r["result"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["condition"].as_str().unwrap())
        .collect();
    assert_eq!(conds, ["cond_v1", "cond_v2", "cases"]);
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("condition,pass,worst_margin,worst_location"));
}

#[test]
fn dyadic_first_condition_fails_at_a_plateau_edge() {
    let dir = tempfile::tempdir().unwrap();
    for (span, name) in [(None, "default"), (Some("4096"), "wide")] {
        let out = dir.path().join(name);
        let mut args = vec!["certify", "--dist", "dyadic", "--condition", "v1", "--b", "1", "--out", p(&out)];
        if let Some(s) = span {
            args.extend(["--grid-span", s]);
        }
        let o = ici(&args);
        assert_eq!(o.status.code(), Some(1));
        let r = json(&out.with_extension("json"));
        assert_eq!(r["pass"], false);
        assert_eq!(r["failures"].as_array().unwrap().len(), 1);
        let rep = &r["result"]["reports"][0];
        assert!(rep["worst_margin"].as_f64().unwrap() < -1e-7);
        let loc: Vec<f64> = rep["worst_location"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!(loc.iter().any(|&x| is_power_of_two(x)), "{loc:?}");
        // The pair straddles the jump: the edge and its grid neighbour.
        assert!((loc[0] - loc[1]).abs() <= 1e-8 * loc[0].abs(), "{loc:?}");
    }
}

#[test]
fn counterexample_reports_m_star() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let o = ici(&["counterexample", "--scan-m", "10:20", "--samples", "200000", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.with_extension("json"));
    assert!(r["result"]["m_star"].as_u64().unwrap() <= 12);
    assert_eq!(r["result"]["best_violation"]["product"], "inf");
    let rows = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(rows.lines().count(), 12);
    let v = std::fs::read_to_string(dir.path().join("ce.violations.csv")).unwrap();
    assert!(v.lines().skip(1).all(|l| l.contains(",true,")), "{v}");
}

#[test]
fn legendre_of_abs_is_an_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "abs.csv", "x,value\n-10,10\n0,0\n10,10\n");
    let out = dir.path().join("conj.csv");
    let o = ici(&["transform", "--fn", p(&f), "--op", "legendre", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# left = infinite\n# right = infinite\n"), "{text}");
    assert!(text.ends_with("x,value\n-1,0\n1,0\n"), "{text}");
    // Reading the result back keeps the +inf outside [−1, 1].
    let back = dir.path().join("back.csv");
    let o = ici(&["transform", "--fn", p(&out), "--op", "legendre", "--out", p(&back)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&back).unwrap();
    assert!(text.contains("# left = linear\n# right = linear\n"), "{text}");
}

#[test]
fn infconv_of_quadratics_is_the_harmonic_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let grid = |c: f64| {
        let mut s = String::from("x,value\n");
        for i in -400..=400 {
            let x = i as f64 / 40.0;
            s.push_str(&format!("{x},{}\n", c * x * x));
        }
        s
    };
    let f = write(dir.path(), "f.csv", &grid(0.5));
    let g = write(dir.path(), "g.csv", &grid(1.0));
    let out = dir.path().join("h.csv");
    let o = ici(&["transform", "--fn", p(&f), "--with", p(&g), "--op", "infconv", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut seen = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let (x, v) = line.split_once(',').unwrap();
        let (x, v): (f64, f64) = (x.parse().unwrap(), v.parse().unwrap());
        if x.abs() <= 5.0 {
            // x²/2 □ x² = x²/3; chords on a 1/40 grid sit at most 1/(4·40²) above.
            assert!(v >= x * x / 3.0 - 1e-12 && v <= x * x / 3.0 + 1e-3, "{x} {v}");
            seen += 1;
        }
    }
    assert!(seen > 100);
}

#[test]
fn inverse_of_the_canonical_cost_at_three_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.csv");
    let o = ici(&["certify", "--dist", "exponential", "--condition", "v2", "--grid-points", "201", "--phi-out", p(&phi)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = ici(&["transform", "--fn", p(&phi), "--op", "geninv", "--level", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let x: f64 = last.split_once(',').unwrap().1.parse().unwrap();
    assert!((x - 2.0).abs() <= 1e-6, "{text}");
}

#[test]
fn non_convex_input_names_the_breakpoint() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.csv", "x,value\n0,0\n1,5\n2,1\n");
    let o = ici(&["transform", "--fn", p(&f), "--op", "legendre"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not convex at breakpoint 2"));
    let f = write(dir.path(), "junk.csv", "x,value\n0,0\n1,oops\n");
    let o = ici(&["transform", "--fn", p(&f), "--op", "legendre"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validation_lists_every_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "[dist]\nkind = \"power\"\nc = -2.0\n\n[certify]\nb = -1.0\ngrid_points = 1\ncondition = \"v9\"\n",
    );
    let o = ici(&["--config", p(&cfg), "certify"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let record: Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(record["error"], "config");
    let msgs: Vec<&str> = record["messages"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    for field in ["dist.c", "dist.r", "condition", "b", "grid_points"] {
        assert!(msgs.iter().any(|m| m.starts_with(&format!("{field}:"))), "{field}: {msgs:?}");
    }
}

#[test]
fn config_file_supplies_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "[dist]\nkind = \"power\"\nc = 1.0\nr = 2.0\n\n[certify]\ncondition = \"v1\"\ngrid_points = 301\n",
    );
    let out = dir.path().join("r");
    let o = ici(&["--config", p(&cfg), "certify", "--grid-points", "401", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.with_extension("json"));
    assert_eq!(r["config"]["condition"], "v1");
    assert_eq!(r["config"]["grid_points"], 401);
    assert_eq!(r["config"]["tail"]["r"], 2.0);
}

#[test]
fn zero_test_function_gives_exactly_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "zero.csv", "x,value\n-1,0\n1,0\n");
    let out = dir.path().join("mc");
    let o = ici(&["mc-ici", "--dist", "exponential", "--fn", p(&f), "--samples", "1000", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.with_extension("json"));
    assert_eq!(r["result"][0]["estimate"]["product"]["value"], 1.0);
}

#[test]
fn moments_pass_on_a_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = ici(&[
        "moments", "--dist", "exponential", "--n", "4", "--norm", "linf,l1", "--p", "2,4", "--samples", "100000",
        "--corollary", "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true,true,true,true,true")), "{csv}");
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["mc-ici", "--dist", "exponential", "--n", "2", "--random", "2", "--samples", "70000"],
        &["moments", "--dist", "exponential", "--n", "3", "--p", "2", "--samples", "70000"],
        &["certify", "--dist", "rademacher", "--grid-points", "301"],
    ];
    for (i, run) in runs.iter().enumerate() {
        let mut texts = Vec::new();
        for threads in ["1", "3"] {
            let out = dir.path().join(format!("r{i}_{threads}"));
            let mut args = vec!["--threads", threads];
            args.extend_from_slice(run);
            args.extend(["--out", p(&out)]);
            let o = ici(&args);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            texts.push((
                std::fs::read(out.with_extension("json")).unwrap(),
                std::fs::read(out.with_extension("csv")).unwrap(),
            ));
        }
        assert!(texts[0] == texts[1], "run {i} differs between thread counts");
    }
}
