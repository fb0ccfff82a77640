use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bn_pricer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bn-pricer"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .env_remove("BN_PRICER_THREADS")
        .output()
        .expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str], file: &str) -> Value {
    let out = bn_pricer(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join(file)).unwrap();
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(stdout, value);
    assert_eq!(value["schema_version"], 1);
    value
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("structured error on stderr");
    assert_eq!(err["schema_version"], 1);
    err["error"]["code"].as_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn estimate_on_synthetic_series() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(dir.path(), &["--seed", "5", "estimate", "--synthetic"], "estimate.json");
    for key in ["tau0_est", "a_bar_est", "r_squared"] {
        assert!(v[key].is_f64(), "{key}");
    }
    assert_eq!(v["n_obs"], 7561);
    assert_eq!(v["epoch_date"], "1984-01-02");
    let a = v["a_bar_est"].as_f64().unwrap();
    assert!((a / 0.053 - 1.0).abs() < 0.15);
    let activity = std::fs::read_to_string(dir.path().join("activity.csv")).unwrap();
    assert!(activity.starts_with("date,qv,tau,trendline\n"));
    let fig2 = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(fig2.lines().count(), 7562);
}

#[test]
fn price_worked_example() {
    let dir = TempDir::new().unwrap();
    // exp(tau0) = 25 and the trendline doubles it by maturity: remaining activity 25.
    let tau0 = 25f64.ln().to_string();
    let maturity = (2f64.ln() / 0.053).to_string();
    let v = ok_json(
        dir.path(),
        &[
            "price",
            "--s-star",
            "100",
            "--tau0",
            &tau0,
            "--a-bar",
            "0.053",
            "--maturity",
            &maturity,
        ],
        "price.json",
    );
    assert!((v["price"].as_f64().unwrap() - 0.864665).abs() < 1e-6);
    assert!((v["hedge_ratio_savings"].as_f64().unwrap() - 0.593994).abs() < 1e-6);
    assert!((v["fraction_in_gop"].as_f64().unwrap() - 0.313035).abs() < 1e-6);
    assert_eq!(v["variant"], "trendline");
    assert_eq!(v["params"]["sources"]["tau0"], "cli");

    let out = bn_pricer(
        dir.path(),
        &["price", "--s-star", "100", "--maturity", "5", "--variant", "enhanced"],
    );
    assert_eq!(error_code(&out), "io_cli.config");
    let out = bn_pricer(
        dir.path(),
        &[
            "price",
            "--s-star",
            "100",
            "--maturity",
            "5",
            "--variant",
            "enhanced",
            "--tau-obs",
            "9",
        ],
    );
    assert_eq!(error_code(&out), "pricing.stopping_time");
    let out = bn_pricer(dir.path(), &["price", "--s-star", "-1", "--maturity", "5"]);
    assert_eq!(error_code(&out), "besq.domain");
}

#[test]
fn params_file_sits_between_flags_and_defaults() {
    let dir = TempDir::new().unwrap();
    let file = write(dir.path(), "params.json", r#"{"tau0": 3.0, "a_bar": 0.04}"#);
    let v = ok_json(
        dir.path(),
        &[
            "price",
            "--params-file",
            &file,
            "--tau0",
            "2.5",
            "--s-star",
            "50",
            "--maturity",
            "10",
        ],
        "price.json",
    );
    let p = &v["params"]["params"];
    assert_eq!(p["tau0"], 2.5);
    assert_eq!(p["a_bar"], 0.04);
    assert_eq!(p["s_star_0"], 100.0);
    let s = &v["params"]["sources"];
    assert_eq!(
        (s["tau0"].as_str(), s["a_bar"].as_str(), s["s_star_0"].as_str()),
        (Some("cli"), Some("file"), Some("default"))
    );

    let bad = write(dir.path(), "bad.json", r#"{"tau_zero": 3.0}"#);
    let out = bn_pricer(
        dir.path(),
        &["price", "--params-file", &bad, "--s-star", "50", "--maturity", "10"],
    );
    assert_eq!(error_code(&out), "io_cli.config");
}

#[test]
fn simulated_hedge_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let v = ok_json(dir.path(), &["--seed", "7", "hedge", "--simulate"], "hedge.json");
        assert!(v["max_abs_pnl"].as_f64().unwrap() < 0.02);
        assert_eq!(v["variant"], "plain");
    }
    for file in ["hedge_ledger.csv", "hedge.json", "fig3.csv", "fig4.csv", "fig5.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let ledger = std::fs::read_to_string(a.path().join("hedge_ledger.csv")).unwrap();
    assert!(ledger.starts_with("date,t,s_star,tau,price,V,pnl,fraction\n"));
}

#[test]
fn enhanced_hedge_reports_against_par() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(
        dir.path(),
        &[
            "--seed",
            "2",
            "hedge",
            "--synthetic",
            "--years",
            "10",
            "--variant",
            "enhanced",
        ],
        "hedge.json",
    );
    assert!((v["terminal_value"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert!(dir.path().join("fig6.csv").exists());
}

#[test]
fn hedge_from_file_fits_parameters() {
    let dir = TempDir::new().unwrap();
    assert!(
        bn_pricer(dir.path(), &["--seed", "4", "estimate", "--synthetic", "--years", "3"])
            .status
            .success()
    );
    let input = dir.path().join("fig1.csv").display().to_string();
    let out_dir = dir.path().join("fromfile");
    let v = ok_json(
        &out_dir,
        &["hedge", "--input", &input, "--day-count", "act252", "--maturity", "2"],
        "hedge.json",
    );
    assert_eq!(v["params"]["sources"]["tau0"], "fitted");
    assert_eq!(v["maturity"], 2.0);
    let out = bn_pricer(
        &out_dir,
        &["hedge", "--input", &input, "--day-count", "act252", "--maturity", "5"],
    );
    assert_eq!(error_code(&out), "hedging.series_too_short");
}

#[test]
fn input_errors_are_structured() {
    let dir = TempDir::new().unwrap();
    let dup = write(
        dir.path(),
        "dup.csv",
        "date,level\n2024-01-02,100\n2024-01-03,101\n2024-01-03,102\n",
    );
    let out = bn_pricer(dir.path(), &["estimate", "--input", &dup]);
    assert_eq!(error_code(&out), "core_types.invalid_series");
    assert!(String::from_utf8_lossy(&out.stderr).contains("2024-01-03"));

    let bad = write(dir.path(), "bad.csv", "date,level\n2024-01-02,100\n2024-01-03,x\n");
    let out = bn_pricer(dir.path(), &["estimate", "--input", &bad]);
    assert_eq!(error_code(&out), "io.parse");
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    // Parses, including the weekend gap, but is too short to fit.
    let short = write(
        dir.path(),
        "short.csv",
        "date,level\n2024-01-05,100\n2024-01-08,101\n2024-01-09,99\n",
    );
    let out = bn_pricer(dir.path(), &["estimate", "--input", &short]);
    assert_eq!(error_code(&out), "activity_time.estimation");

    let out = bn_pricer(dir.path(), &["estimate", "--input", "/nonexistent/file.csv"]);
    assert_eq!(error_code(&out), "io.io");
    let out = bn_pricer(dir.path(), &["estimate"]);
    assert_eq!(error_code(&out), "io_cli.config");
}

#[test]
fn simulate_dump_is_capped_and_thread_count_does_not_matter() {
    let run = |threads: &str| {
        let dir = TempDir::new().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_bn-pricer"))
            .arg("--output-dir")
            .arg(dir.path())
            .args([
                "--seed",
                "3",
                "simulate",
                "--years",
                "2",
                "--n-paths",
                "500",
                "--max-paths-dump",
                "3",
            ])
            .env("BN_PRICER_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read(dir.path().join("simulate.json")).unwrap(),
            std::fs::read_to_string(dir.path().join("paths.csv")).unwrap(),
        )
    };
    let (json1, paths1) = run("1");
    let (json3, paths3) = run("3");
    assert_eq!(json1, json3);
    assert_eq!(paths1, paths3);
    // Three paths of 505 points each plus the header.
    assert_eq!(paths1.lines().count(), 3 * 505 + 1);
    let v: Value = serde_json::from_slice(&json1).unwrap();
    assert_eq!(v["paths_dumped"], 3);
    assert_eq!(v["measure"], "q_bn");

    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bn-pricer"))
        .arg("--output-dir")
        .arg(dir.path())
        .args(["simulate", "--n-paths", "10"])
        .env("BN_PRICER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(error_code(&out), "io_cli.config");
}

#[test]
fn real_world_simulation_rejects_unit_lambda() {
    let dir = TempDir::new().unwrap();
    let out = bn_pricer(
        dir.path(),
        &[
            "simulate",
            "--measure",
            "p_real",
            "--lambda-bar",
            "1",
            "--n-paths",
            "10",
        ],
    );
    assert_eq!(error_code(&out), "core_types.invalid_params");
}

#[test]
fn diagnose_with_default_params() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(dir.path(), &["diagnose"], "diagnose.json");
    assert_eq!(v["n_paths"], 100_000);
    assert!(v["supermartingale_gap"]["mean"].as_f64().unwrap() > 0.0);
    assert!(v["closed_form_gap"].as_f64().unwrap() > 0.0);
    let lambda = &v["mean_lambda_bn"];
    let z = (lambda["mean"].as_f64().unwrap() - 1.0) / lambda["stderr"].as_f64().unwrap();
    assert!(z.abs() < 3.0);

    let out = bn_pricer(dir.path(), &["diagnose", "--n-paths", "100"]);
    assert_eq!(error_code(&out), "core_types.invalid_params");
}

#[test]
fn report_writes_every_figure() {
    let dir = TempDir::new().unwrap();
    let v = ok_json(
        dir.path(),
        &["--seed", "1", "report", "--synthetic", "--years", "10"],
        "report.json",
    );
    for i in 1..=6 {
        assert!(dir.path().join(format!("fig{i}.csv")).exists());
    }
    let fig5 = std::fs::read_to_string(dir.path().join("fig5.csv")).unwrap();
    let max = fig5
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert_eq!(max, v["plain"]["max_abs_pnl"].as_f64().unwrap());
    let ratio = v["ratio_to_risk_neutral"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio < 1.0);
}

#[test]
fn usage_errors_are_structured() {
    let dir = TempDir::new().unwrap();
    let out = bn_pricer(dir.path(), &["price", "--maturity", "5"]);
    assert_eq!(error_code(&out), "io_cli.config");
    let out = bn_pricer(dir.path(), &["estimate", "--input", "a.csv", "--synthetic"]);
    assert_eq!(error_code(&out), "io_cli.config");
    let out = bn_pricer(dir.path(), &["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("diagnose"));
}
