use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn marginkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marginkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = marginkit(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

/// `price,wager` rows, skipping the provenance comment.
fn curve(path: &Path) -> Vec<(f64, f64)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["price", "wager"]);
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect()
}

/// Copies a fixture into a scratch directory so it can be edited.
fn scratch_fixture(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture(name)).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
    }
    dir
}

fn set_last_price(path: &Path, price: f64) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.pop().unwrap();
    let period = last.split(',').next().unwrap().to_string();
    lines.push(format!("{period},{price}"));
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let config = fixture("demo/config.json");
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    for cmd in ["value", "allocate"] {
        run_ok(&config, a.path(), &["--seed", "42", cmd]);
        run_ok(&config, b.path(), &["--seed", "42", cmd]);
        run_ok(&config, c.path(), &["--seed", "43", cmd]);
    }
    assert_eq!(dir_contents(a.path()), dir_contents(b.path()));
    assert_ne!(dir_contents(a.path()), dir_contents(c.path()));

    let report = json(&a.path().join("value.json"));
    assert_eq!(report["seed"], 42);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    let curve_text = fs::read_to_string(a.path().join("ALPHA_curve.csv")).unwrap();
    assert!(curve_text.starts_with("# seed=42 config_hash="));
}

#[test]
fn missing_price_file_is_an_input_error() {
    let o = marginkit(&[
        "--config",
        fixture("missing_prices/config.json").to_str().unwrap(),
        "value",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("no_such_prices.csv"), "{err}");
}

#[test]
fn malformed_inputs_are_input_errors() {
    let dir = scratch_fixture("demo");
    let config = dir.path().join("config.json");
    let out = dir.path().join("out");

    fs::write(dir.path().join("beta_prices.csv"), "period,price\n0,10\n1,abc\n").unwrap();
    let o = marginkit(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "value",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta_prices.csv"));

    let text = fs::read_to_string(&config)
        .unwrap()
        .replace("\"shares_outstanding\": 50", "\"kind\": \"cash\"");
    fs::write(&config, text).unwrap();
    let o = marginkit(&["--config", config.to_str().unwrap(), "value"]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(&config, "{ not json").unwrap();
    let o = marginkit(&["--config", config.to_str().unwrap(), "value"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_positive_market_price_is_a_numerical_error() {
    let config = fixture("zero_price/config.json");
    let out = tempfile::tempdir().unwrap();
    for cmd in ["safety", "allocate", "screen"] {
        let o = marginkit(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.path().to_str().unwrap(),
            cmd,
        ]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("ALPHA"));
    }
    // valuation alone does not look at the market price
    run_ok(&config, out.path(), &["value"]);
}

#[test]
fn allocation_is_scaled_to_the_ruin_cap() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&fixture("demo/config.json"), out.path(), &["allocate"]);
    let a = json(&out.path().join("allocation.json"));
    let weights: Vec<f64> = a["weights"]
        .as_object()
        .unwrap()
        .values()
        .map(|w| w.as_f64().unwrap())
        .collect();
    assert!((weights.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    assert_eq!(
        a["gross_invested"].as_f64().unwrap() + a["cash_weight"].as_f64().unwrap(),
        1.0
    );
    // both raw wagers hit the 0.4 cap, so the weights stay equal
    assert_eq!(weights[0], weights[1]);
    let rho = &a["correlations"];
    assert_eq!(rho[0][0], 1.0);
    assert_eq!(rho[0][1], rho[1][0]);
    assert_eq!(a["assets"], serde_json::json!(["ALPHA", "BETA"]));
}

#[test]
fn wager_curves_are_nonincreasing() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&fixture("demo/config.json"), out.path(), &["allocate"]);
    for id in ["ALPHA", "BETA"] {
        let c = curve(&out.path().join(format!("{id}_curve.csv")));
        assert_eq!(c.len(), 201);
        assert!(c.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 <= w[0].1));
        assert_eq!(c[100].1, 0.0);
    }
}

#[test]
fn fair_value_prices_leave_everything_in_cash() {
    let dir = scratch_fixture("demo");
    let config = dir.path().join("config.json");
    let out = dir.path().join("out");
    run_ok(&config, &out, &["value"]);
    let v = json(&out.join("value.json"));
    for (asset, file) in [(0, "alpha_prices.csv"), (1, "beta_prices.csv")] {
        set_last_price(&dir.path().join(file), v["assets"][asset]["p_t"].as_f64().unwrap());
    }
    run_ok(&config, &out, &["allocate"]);
    let a = json(&out.join("allocation.json"));
    assert_eq!(a["cash_weight"], 1.0);
    assert_eq!(a["gross_invested"], 0.0);
    assert_eq!(a["decisions"]["ALPHA"]["signal"], "market_weight");

    run_ok(&config, &out, &["safety"]);
    let s = json(&out.join("safety.json"));
    for r in s["assets"].as_array().unwrap() {
        assert_eq!(r["classic"], 0.0);
        assert!(r["delta"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn constant_growth_asset_matches_closed_form() {
    // revenue grows by exactly 1.045 with an 80% cost share; at N = 0.10 the
    // first flow is 1000 * 1.045 * 0.2 = 209 and the value is 209 / 0.055
    let out = tempfile::tempdir().unwrap();
    let config = fixture("gordon/config.json");
    run_ok(&config, out.path(), &["value"]);
    let v = &json(&out.path().join("value.json"))["assets"][0];
    let p_t = v["p_t"].as_f64().unwrap();
    assert!((p_t / 3800.0 - 1.0).abs() < 1e-9, "{p_t}");
    assert!((v["growth_constant"].as_f64().unwrap() - 1.045).abs() < 1e-9);
    assert!(v["sigma_0"].as_f64().unwrap() < 1e-9 * p_t);

    // market price 1900: twice cheaper in price, M = 0.161111 in rate
    run_ok(&config, out.path(), &["safety"]);
    let s = &json(&out.path().join("safety.json"))["assets"][0];
    assert!((s["market_rate"].as_f64().unwrap() - 29.0 / 180.0).abs() < 1e-9);
    assert!((s["delta"].as_f64().unwrap() - 11.0 / 29.0).abs() < 1e-5);
    assert!((s["classic"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn screen_ranks_by_gb_ratio() {
    let out = tempfile::tempdir().unwrap();
    run_ok(&fixture("demo/config.json"), out.path(), &["safety"]);
    run_ok(&fixture("demo/config.json"), out.path(), &["screen"]);
    let safety = json(&out.path().join("safety.json"));
    let screen = json(&out.path().join("screen.json"));
    let gb = |id: &str| {
        safety["assets"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["asset"] == id)
            .unwrap()["gb_ratio"]
            .as_f64()
            .unwrap()
    };
    let passing = screen["passing"].as_array().unwrap();
    assert_eq!(passing.len(), 2);
    assert!(gb(passing[0]["asset"].as_str().unwrap()) >= gb(passing[1]["asset"].as_str().unwrap()));
    assert_eq!(passing[0]["rank"], 1);
}

#[test]
fn csv_format_and_sample_dump() {
    let dir = scratch_fixture("gordon");
    let config = dir.path().join("config.json");
    let text = fs::read_to_string(&config)
        .unwrap()
        .replace("\"output_dir\"", "\"dump_samples\": true, \"output_dir\"");
    fs::write(&config, text).unwrap();
    let out = dir.path().join("out");
    run_ok(&config, &out, &["--format", "csv", "value"]);

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(out.join("value.csv"))
        .unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "asset");
    assert_eq!(rdr.records().count(), 1);

    let samples = fs::read_to_string(out.join("STEADY_samples.csv")).unwrap();
    let lines: Vec<&str> = samples.lines().collect();
    assert!(lines[0].starts_with("# seed=1 "));
    assert_eq!(lines[1], "price");
    assert_eq!(lines.len(), 2 + 200);

    run_ok(&config, &out, &["--format", "csv", "allocate"]);
    let alloc = fs::read_to_string(out.join("allocation.csv")).unwrap();
    assert!(alloc.lines().nth(1) == Some("asset,weight,p,edge,wager,signal"));
    assert!(alloc.lines().any(|l| l.starts_with("CASH,")));
    assert!(out.join("correlation.csv").exists());
}
