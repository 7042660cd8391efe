//! End-to-end runs of the `nilt` binary, checked against direct library calls.

use std::path::Path;
use std::process::{Command, Output};

use nilt::bench::{self, fmt17};
use nilt::cme::{generate_orders, CmeCache, OptimizeOptions};
use nilt::transforms::builtin;
use nilt::weights::{decompose_estimate, decompose_weight, weight_series};
use nilt::{cme_s, euler_coefficients, euler_s, evaluate_nilt, Expression, ShiftSearchConfig};

fn nilt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilt"))
        .args(args)
        .env_remove("NILT_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Parses CSV output into header-keyed rows.
fn csv(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn cme30() -> nilt::CoefficientSet {
    CmeCache::builtin().coefficients(30).unwrap()
}

#[test]
fn invert_plain_methods_match_the_library() {
    let pair = builtin("exp-t").unwrap();
    let q = pair.query();
    for (method, coeffs) in [("cme", cme30()), ("euler", euler_coefficients(30).unwrap())] {
        let o = nilt(&["invert", "--method", method, "--order", "30", "--builtin", "exp-t", "--T", "1,5", "--T", "10"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rows = csv(&stdout(&o));
        assert_eq!(rows.len(), 3);
        for (row, t) in rows.iter().zip([1.0, 5.0, 10.0]) {
            let want = evaluate_nilt(&coeffs, &q, t, 0.0).unwrap().value;
            assert_eq!(row["value"], fmt17(want), "{method} T={t}");
            assert_eq!(row["exact"], fmt17(pair.exact(t)));
            assert_eq!(row["theta_hat"], "");
        }
    }
}

#[test]
fn invert_shifted_methods_match_the_library() {
    let pair = builtin("square-wave").unwrap();
    let q = pair.query();
    let cfg = ShiftSearchConfig::default();
    let euler = euler_coefficients(30).unwrap();
    let o = nilt(&["invert", "--method", "cme-s", "--order", "30", "--builtin", "square-wave", "--T", "2.5"]);
    assert!(o.status.success());
    let row = &csv(&stdout(&o))[0];
    let want = cme_s(&q, 2.5, &cme30(), &cfg).unwrap();
    assert_eq!(row["value"], fmt17(want.value));
    assert_eq!(row["theta_hat"], fmt17(want.theta_hat));
    assert_eq!(row["evaluations"], want.objective_evals.to_string());

    let o = nilt(&["invert", "--method", "euler-s", "--order", "30", "--builtin", "square-wave", "--T", "2.5"]);
    assert!(o.status.success());
    let row = &csv(&stdout(&o))[0];
    let want = euler_s(&q, 2.5, &cme30(), &euler, &cfg).unwrap();
    assert_eq!(row["value"], fmt17(want.value));
    assert!(row["warnings"].contains("euler_shift_unverified"));
    assert!(stderr(&o).contains("not verified"));
}

#[test]
fn invert_json_and_epsilon() {
    let q = builtin("exp-t2").unwrap().query();
    let cfg = ShiftSearchConfig {
        epsilon: 0.01,
        ..ShiftSearchConfig::default()
    };
    let o = nilt(&[
        "invert", "--method", "cme-s", "--order", "30", "--builtin", "exp-t2", "--T", "3", "--format", "json",
        "--epsilon", "0.01",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want = cme_s(&q, 3.0, &cme30(), &cfg).unwrap();
    assert_eq!(v[0]["value"].as_f64().unwrap(), want.value);
    assert_eq!(v[0]["theta_hat"].as_f64().unwrap(), want.theta_hat);
    assert_eq!(v[0]["evaluations"].as_u64().unwrap() as usize, want.objective_evals);
}

#[test]
fn invert_expression_matches_the_library() {
    let text = "1/(s+1)^2";
    let q = Expression::parse(text).unwrap().into_query(-1.0, false);
    let o = nilt(&["invert", "--method", "cme-s", "--order", "30", "--expr", text, "--abscissa", "-1", "--T", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = &csv(&stdout(&o))[0];
    let want = cme_s(&q, 4.0, &cme30(), &ShiftSearchConfig::default()).unwrap();
    assert_eq!(row["value"], fmt17(want.value));
    assert!((want.value - 4.0 * (-4.0f64).exp()).abs() < 1e-4);
}

#[test]
fn lower_bound_hit_warns_and_strict_exits_3() {
    let args = ["invert", "--method", "cme-s", "--order", "30", "--expr", "1/(s+1)^2", "--abscissa", "0", "--T", "100"];
    let o = nilt(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lower_bound_hit"));
    assert!(stderr(&o).contains("a > −∞ and θ̂ = θ_ℓ"), "{}", stderr(&o));

    let mut strict = args.to_vec();
    strict.push("--strict");
    let o = nilt(&strict);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--strict"));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["invert", "--method", "nope", "--order", "30", "--builtin", "exp-t", "--T", "1"],
        vec!["invert", "--method", "cme", "--order", "30", "--builtin", "no-such-pair", "--T", "1"],
        vec!["invert", "--method", "cme", "--order", "30", "--expr", "1/(s+", "--abscissa", "0", "--T", "1"],
        vec!["invert", "--method", "cme", "--order", "30", "--builtin", "exp-t", "--T", "-2"],
        vec!["invert", "--method", "euler", "--order", "31", "--builtin", "exp-t", "--T", "1"],
        vec!["frobnicate"],
    ] {
        let o = nilt(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(nilt(&["--help"]).status.code(), Some(0));
}

#[test]
fn numeric_errors_exit_2() {
    let o = nilt(&["invert", "--method", "cme", "--order", "33", "--builtin", "exp-t", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("generate-cache --orders 33"));

    let o = nilt(&["invert", "--method", "cme", "--order", "30", "--expr", "1/(s-s)", "--abscissa", "0", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("division by zero"), "{}", stderr(&o));
}

#[test]
fn sweep_theta_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = nilt(&[
        "sweep-theta", "--order", "30", "--builtin", "exp-t2", "--T", "5", "--theta-min", "-20", "--theta-max", "10",
        "--steps", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let q = builtin("exp-t2").unwrap().query();
    let thetas = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0];
    let want = bench::sweep_theta(&q, 5.0, &cme30(), &euler_coefficients(30).unwrap(), &thetas);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), bench::sweep_csv(&want));

    // θ = 0 in the sweep is the plain inversion.
    let plain = nilt(&["invert", "--method", "cme", "--order", "30", "--builtin", "exp-t2", "--T", "5"]);
    assert_eq!(csv(&stdout(&plain))[0]["value"], fmt17(want[4].cme));
}

#[test]
fn weight_series_and_decomposition_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let dec = dir.path().join("dec.csv");
    let o = nilt(&[
        "weight", "--method", "cme", "--order", "30", "--theta", "-2", "--t-max", "3", "--steps", "31", "--builtin",
        "exp-t", "--T", "2", "--decomposition", dec.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv(&stdout(&o));
    let cme = cme30();
    let q = builtin("exp-t").unwrap().query();
    let grid: Vec<f64> = (0..31).map(|i| 3.0 * i as f64 / 30.0).collect();
    let want = weight_series(&cme, -2.0, &grid, Some((&q, 2.0))).unwrap();
    assert_eq!(rows.len(), want.len());
    for (r, w) in rows.iter().zip(&want) {
        assert_eq!(r["weight"], fmt17(w.weight));
        assert_eq!(r["product"], fmt17(w.product.unwrap()));
    }

    let parts: std::collections::HashMap<String, String> =
        csv(&std::fs::read_to_string(&dec).unwrap()).into_iter().map(|r| (r["part"].clone(), r["value"].clone())).collect();
    let d = decompose_weight(&cme.shifted(-2.0), 4.0).unwrap();
    let e = decompose_estimate(&q, &cme, 2.0, -2.0).unwrap();
    assert_eq!(parts["z_I"], fmt17(d.z_i));
    assert_eq!(parts["f_main"], fmt17(d.f_main));
    assert_eq!(parts["total"], fmt17(e.total));
}

#[test]
fn weight_without_integrand_for_euler() {
    let o = nilt(&["weight", "--method", "euler", "--order", "20", "--steps", "5", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = euler_coefficients(20).unwrap();
    let want = weight_series(&e, 0.0, &[0.0, 1.0, 2.0, 3.0, 4.0], None).unwrap();
    for (got, w) in v.as_array().unwrap().iter().zip(&want) {
        assert_eq!(got["weight"].as_f64().unwrap(), w.weight);
        assert!(got["h"].is_null());
    }
}

#[test]
fn bench_tables_writes_the_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = nilt(&["bench-tables", "--out-dir", dir.path().to_str().unwrap(), "--orders", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cache = CmeCache::builtin();
    let t1 = bench::table1(cache, &[30]).unwrap();
    let t2 = bench::table2(cache, &[30], &ShiftSearchConfig::default()).unwrap();
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    assert_eq!(read("table1.csv"), bench::table1_csv(&t1));
    assert_eq!(read("table2.csv"), bench::table2_csv(&t2));
    let cmp = bench::compare(&t1, &t2, &bench::reference_tables());
    assert_eq!(read("comparison.csv"), cmp.to_csv());
    assert!(stdout(&o).contains("comparison:"));
}

#[test]
fn bench_tables_reports_missing_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = nilt(&["bench-tables", "--out-dir", dir.path().to_str().unwrap(), "--orders", "12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nilt generate-cache --orders 12"));
}

fn write_small_cache(dir: &Path) -> std::path::PathBuf {
    let o = Command::new(env!("CARGO_BIN_EXE_nilt"))
        .args(["generate-cache", "--orders", "2,4", "--seed", "7", "--random-starts", "4"])
        .env("NILT_CACHE_DIR", dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("cme_cache.json")
}

#[test]
fn generate_cache_matches_the_library_and_is_picked_up_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_small_cache(dir.path());
    let cache = CmeCache::load(&path).unwrap();
    assert_eq!(cache.orders(), vec![2, 4]);

    let options = OptimizeOptions {
        seed: 7,
        random_starts: 4,
        ..OptimizeOptions::default()
    };
    let reports = generate_orders(&[2, 4], &options).unwrap();
    for r in &reports {
        let rec = cache.get(r.form.order()).unwrap();
        assert_eq!(rec.scv, r.scv);
    }

    // The environment cache replaces the shipped one, so order 30 is missing there
    // while order 4 uses the freshly generated coefficients.
    let run = |order: &str| {
        Command::new(env!("CARGO_BIN_EXE_nilt"))
            .args(["invert", "--method", "cme", "--order", order, "--builtin", "exp-t", "--T", "1"])
            .env("NILT_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let o = run("4");
    assert!(o.status.success());
    let want = evaluate_nilt(&cache.coefficients(4).unwrap(), &builtin("exp-t").unwrap().query(), 1.0, 0.0).unwrap();
    assert_eq!(csv(&stdout(&o))[0]["value"], fmt17(want.value));
    assert_eq!(run("30").status.code(), Some(2));

    // --cache takes precedence over the environment.
    let o = nilt(&["invert", "--method", "cme", "--order", "2", "--builtin", "exp-t", "--T", "1", "--cache", path.to_str().unwrap()]);
    assert!(o.status.success());
}

#[test]
fn generate_cache_merges_into_an_existing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_small_cache(dir.path());
    let o = nilt(&["generate-cache", "--orders", "1", "--random-starts", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(CmeCache::load(&path).unwrap().orders(), vec![1, 2, 4]);
}
