use std::process::{Command, Output};

fn sinc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows as (header, rows) with `#` notes skipped.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

const GBM: [&str; 8] = [
    "--model", "gbm", "--sigma", "0.25", "--r", "0.1", "--T", "0.1",
];

#[test]
fn gbm_put_and_cash_digital() {
    let mut args = vec!["price"];
    args.extend(GBM);
    args.extend(["--K", "1.0", "--nf", "120", "--xc", "2.0105"]);
    let (h, rows) = csv(&stdout(&sinc(&args)));
    let price = &rows[0][column(&h, "price")];
    assert!(price.starts_with("0.0266495182"), "{price}");
    assert_eq!(rows[0][column(&h, "NF")], "120");
    assert_eq!(rows[0][column(&h, "Xc")], "2.010500000");

    // chopped to ten decimals
    args.extend(["--kind", "con", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&sinc(&args))).unwrap();
    let p = v[0]["price"].as_f64().unwrap();
    assert_eq!((p * 1e10).floor() / 1e10, 0.4607202900, "{p}");
}

#[test]
fn implied_vol_column_recovers_sigma() {
    let mut args = vec!["price"];
    args.extend(GBM);
    args.extend([
        "--K",
        "0.8,1.0,1.2",
        "--nf",
        "256",
        "--iv",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&sinc(&args))).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!((r["iv"].as_f64().unwrap() - 0.25).abs() < 1e-8, "{r}");
    }
}

#[test]
fn every_method_prices_close_to_black_scholes() {
    for method in [
        "sinc",
        "sinc-fft",
        "sinc-frfft",
        "cos",
        "lewis",
        "carrmadan",
    ] {
        let mut args = vec!["price"];
        args.extend(GBM);
        args.extend(["--K", "0.9,1.1", "--nf", "4096", "--method", method]);
        let (h, rows) = csv(&stdout(&sinc(&args)));
        let p: f64 = rows[1][column(&h, "price")].parse().unwrap();
        assert!((p - 0.09495097847).abs() < 1e-4, "{method}: {p}");
    }
}

#[test]
fn output_is_deterministic() {
    let mut args = vec!["price"];
    args.extend([
        "--model",
        "heston",
        "--lambda",
        "1.5768",
        "--eta-vol",
        "0.5751",
        "--v-bar",
        "0.0398",
    ]);
    args.extend([
        "--v0",
        "0.0175",
        "--rho",
        "-0.5711",
        "--T",
        "1",
        "--K",
        "0.8,1,1.2",
        "--kind",
        "aon",
    ]);
    let a = stdout(&sinc(&args));
    let b = stdout(&sinc(&args));
    assert_eq!(a, b);
}

#[test]
fn params_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let toml = dir.path().join("gbm.toml");
    std::fs::write(&toml, "model = \"gbm\"\nsigma = 0.25\n").unwrap();
    let json = dir.path().join("gbm.json");
    std::fs::write(&json, r#"{"model": "gbm", "sigma": 0.25}"#).unwrap();
    let mut flags = vec!["price"];
    flags.extend(GBM);
    flags.extend(["--K", "1.0"]);
    let expected = stdout(&sinc(&flags));
    for path in [&toml, &json] {
        let p = path.to_str().unwrap();
        let out = stdout(&sinc(&[
            "price", "--params", p, "--r", "0.1", "--T", "0.1", "--K", "1.0",
        ]));
        assert_eq!(out, expected);
    }
}

#[test]
fn missing_parameter_is_a_usage_error() {
    let o = sinc(&["price", "--model", "gbm", "--T", "0.1", "--K", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "Usage");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("--sigma"));
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_parameter_exits_with_two() {
    let o = sinc(&[
        "price",
        "--model",
        "gbm",
        "--sigma=-0.2",
        "--T",
        "0.1",
        "--K",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "InvalidParameter");
}

#[test]
fn unknown_table_id() {
    let o = sinc(&["table", "--id", "no-such-table"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "UnknownTable");
}

#[test]
fn gbm_table_rows() {
    let out = stdout(&sinc(&[
        "table",
        "--id",
        "gbm-t01",
        "--benchmark-nf",
        "4096",
    ]));
    let (h, rows) = csv(&out);
    assert_eq!(h, ["method", "kind", "K", "NF", "rel_err", "star"]);
    // two methods, two kinds, nine strikes, six budgets
    assert_eq!(rows.len(), 2 * 2 * 9 * 6);
    let star = column(&h, "star");
    let sinc_120: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "sinc" && r[3] == "120")
        .collect();
    assert_eq!(sinc_120.len(), 18);
    assert!(sinc_120.iter().all(|r| r[star] == "true"), "{sinc_120:?}");
}

#[test]
fn density_integrates_to_one() {
    let mut args = vec!["pdf"];
    args.extend(GBM);
    args.extend(["--points", "801", "--cdf"]);
    let (h, rows) = csv(&stdout(&sinc(&args)));
    let (x, d, c) = (column(&h, "x"), column(&h, "density"), column(&h, "cdf"));
    let xs: Vec<f64> = rows.iter().map(|r| r[x].parse().unwrap()).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r[d].parse().unwrap()).collect();
    let mass: f64 = (1..xs.len())
        .map(|i| 0.5 * (ds[i] + ds[i - 1]) * (xs[i] - xs[i - 1]))
        .sum();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let first: f64 = rows[0][c].parse().unwrap();
    let last: f64 = rows[rows.len() - 1][c].parse().unwrap();
    assert!(first.abs() < 1e-8 && (last - 1.0).abs() < 1e-8);
}

#[test]
fn beta_sweep_minimum_is_interior() {
    let out = stdout(&sinc(&[
        "beta-sweep",
        "--model",
        "heston",
        "--lambda",
        "1.5768",
        "--eta-vol",
        "0.5751",
        "--v-bar",
        "0.0398",
        "--v0",
        "0.0175",
        "--rho",
        "-0.5711",
        "--nf",
        "512",
    ]));
    assert!(out.lines().any(|l| l.starts_with("# beta grid: 0.25,0.5")));
    let (h, rows) = csv(&out);
    let e = column(&h, "mean_abs_iv_error");
    let errs: Vec<f64> = rows.iter().map(|r| r[e].parse().unwrap()).collect();
    let best = (0..errs.len())
        .min_by(|&a, &b| errs[a].total_cmp(&errs[b]))
        .unwrap();
    assert!(best > 0 && best < errs.len() - 1, "{errs:?}");
}

#[test]
fn rank_puts_sinc_first_on_gbm() {
    let out = stdout(&sinc(&[
        "rank",
        "--model",
        "gbm",
        "--sigma",
        "0.2",
        "--nf",
        "256,512,1024",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let notes: Vec<&str> = v["notes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_str().unwrap())
        .collect();
    assert!(notes.contains(&"sinc-frfft required NF: 256"), "{notes:?}");
    assert!(
        notes.contains(&"lewis-frfft required NF: not reached"),
        "{notes:?}"
    );
}
