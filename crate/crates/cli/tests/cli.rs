use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use skewlink::data::{parse_binomial_csv, sha256_hex, FINNEY1947_CSV, GRAZEFFE2008_CSV};

fn skewlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewlink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = skewlink(&all);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fit_prints_the_weibull_table() {
    let o = skewlink(&["fit", "--data", "finney1947", "--link", "weibull"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("-370.33"), "{text}");
    let r = json(&["fit", "--data", "finney1947", "--link", "weibull"]);
    let ll = r["models"][0]["log_lik"].as_f64().unwrap();
    assert!((ll - -370.34).abs() < 0.05);
}

#[test]
fn compare_ranks_cloglog_first() {
    let r = json(&["compare", "--data", "finney1947", "--links", "weibull,cloglog,probit,logit"]);
    let rows = r["comparison"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["model"], "cloglog");
    let aics: Vec<f64> = rows.iter().map(|r| r["aic"].as_f64().unwrap()).collect();
    assert!(aics.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn missing_file_is_a_load_error() {
    let o = skewlink(&["fit", "--data", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"), "{}", stderr(&o));
}

#[test]
fn bayes_requires_a_seed() {
    let o = skewlink(&["bayes", "--data", "finney1947"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn gamma_fixed_needs_a_shape_link() {
    let o = skewlink(&["fit", "--data", "finney1947", "--link", "probit", "--gamma-fixed", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_report_aic_recomputes_exactly() {
    let r = json(&["compare", "--data", "finney1947"]);
    for m in r["models"].as_array().unwrap() {
        let ll = m["log_lik"].as_f64().unwrap();
        let p = m["n_params"].as_u64().unwrap() as f64;
        assert_eq!(m["aic"].as_f64().unwrap(), -2.0 * ll + 2.0 * p);
    }
    for row in r["comparison"].as_array().unwrap() {
        let ll = row["log_lik"].as_f64().unwrap();
        let p = row["n_params"].as_u64().unwrap() as f64;
        assert_eq!(row["aic"].as_f64().unwrap(), -2.0 * ll + 2.0 * p);
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = [
        "bayes", "--data", "finney1947", "--seed", "5", "--burn", "300", "--keep", "300", "--thin", "1", "--format",
        "json",
    ];
    let (a, b) = (skewlink(&args), skewlink(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["models"][0]["bayes"]["seed"], 5);
    assert!(r["models"][0]["dic"].as_f64().is_some());
    let mut other = args;
    other[4] = "6";
    assert_ne!(skewlink(&other).stdout, a.stdout);
}

#[test]
fn builtin_datasets_are_pinned() {
    assert_eq!(
        sha256_hex(FINNEY1947_CSV.as_bytes()),
        "3ef6397eee64344da79fa58c5a4507a94ebadec0b1481038c2fb3e6d2aa0888e"
    );
    assert_eq!(
        sha256_hex(GRAZEFFE2008_CSV.as_bytes()),
        "22efa6c607802f19dad0db2c0a7960c44b4edb917bdf2655237d09e581a7aeb4"
    );
    let r = json(&["fit", "--data", "finney1947", "--link", "probit"]);
    assert_eq!(r["dataset"]["rows"], 17);
    assert_eq!(r["dataset"]["n_obs"], 818);
    let m = json(&["multinomial", "--data", "grazeffe2008", "--link", "logit"]);
    assert_eq!(m["dataset"]["rows"], 5);
    assert_eq!(m["dataset"]["n_obs"], 4800);
}

#[test]
fn one_row_file_loads_then_fails_rank() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "one.csv", "x,s,t\n0,1,2\n");
    let d = parse_binomial_csv(&path, &["x"], "s", "t").unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.rows()[0].x, vec![1.0, 0.0]);
    let o = skewlink(&["fit", "--data", &path, "--link", "logit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rank deficient"), "{}", stderr(&o));
}

#[test]
fn successes_above_trials_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.csv", "x,s,t\n0,5,3\n");
    let o = skewlink(&["fit", "--data", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
}

#[test]
fn negative_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "neg.csv", "x,a,b\n0,-1,3\n");
    let o = skewlink(&["multinomial", "--data", &path, "--counts", "a,b"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
}

#[test]
fn reproduce_snail_tables() {
    let r = json(&["reproduce", "grazeffe2008"]);
    let rows = r["comparison"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["model"], "reflected_weibull");
    assert!(rows[0]["aic"].as_f64().unwrap() <= 11340.0);
    assert!((rows[1]["aic"].as_f64().unwrap() - 11362.39).abs() < 2.0);
    let text = stdout(&skewlink(&["reproduce", "grazeffe2008"]));
    assert!(text.contains("0.595"), "{text}");
}

#[test]
fn reproduce_poison_without_sampling() {
    let r = json(&["reproduce", "finney1947", "--no-bayes"]);
    let rows = r["comparison"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["model"], "cloglog");
}

#[test]
fn out_and_predictions_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let pred = dir.path().join("pred.csv");
    let o = skewlink(&[
        "fit",
        "--data",
        "finney1947",
        "--link",
        "probit",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
        "--predictions",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# "));
    let lines = std::fs::read_to_string(&pred).unwrap().lines().count();
    assert_eq!(lines, 18);
}

#[test]
fn two_category_file_matches_the_binomial_fit() {
    let dir = tempfile::tempdir().unwrap();
    let multi = write(dir.path(), "k2.csv", "x,y,n\n0,2,8\n1,5,5\n2,8,2\n3,9,1\n");
    let bin = write(dir.path(), "bin.csv", "x,s,t\n0,2,10\n1,5,10\n2,8,10\n3,9,10\n");
    let m = json(&["multinomial", "--data", &multi, "--counts", "y,n", "--link", "logit"]);
    let b = json(&["fit", "--data", &bin, "--link", "logit"]);
    let (lm, lb) = (m["models"][0]["log_lik"].as_f64().unwrap(), b["models"][0]["log_lik"].as_f64().unwrap());
    assert!((lm - lb).abs() < 1e-9, "{lm} vs {lb}");
}
