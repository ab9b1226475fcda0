//! Command-level contracts: file formats, exit codes, round trips.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_raindrop")
}

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn shoot_once(dir: &Path) -> PathBuf {
    let out = dir.join("shoot.json");
    if !out.exists() {
        let r = run_in(dir, &["shoot", "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    out
}

#[test]
fn trace_csv_contract() {
    let dir = workdir("trace_contract");
    let report = shoot_once(&dir);
    let out = dir.join("trace.csv");
    let r = run_in(
        &dir,
        &[
            "trace",
            "--report",
            report.to_str().unwrap(),
            "--ds",
            "0.05",
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'), "LF endings only");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,theta,kappa,kappa_s,kappa_ss,x,y");
    // symmetric sampling: 2·(S/Δs) + 1 rows
    let expected_rows = 2 * (25.0f64 / 0.05).floor() as usize + 1;
    assert_eq!(lines.len() - 1, expected_rows);
    // the s = 0 row carries the initial conditions exactly
    let mid = &lines[1 + expected_rows / 2];
    let fields: Vec<f64> = mid.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.0);
    assert_eq!(fields[1], 0.0); // theta
    assert!((fields[2] - 1.437393453243374).abs() < 1e-9); // kappa = a*
    assert_eq!(fields[3], 0.0); // kappa_s
    assert_eq!(fields[4], -1.0); // kappa_ss = -cos 0
    assert_eq!(fields[5], 0.0); // x
    assert_eq!(fields[6], 0.0); // y
                                // every row carries 17 significant digits (16 after the point)
    for line in &lines[1..4] {
        for field in line.split(',') {
            let mantissa = field.split('e').next().unwrap();
            let frac = mantissa.split('.').nth(1).unwrap_or("");
            assert_eq!(frac.len(), 16, "field {field}");
        }
    }
}

#[test]
fn trace_csv_json_csv_round_trip_is_bit_identical() {
    let dir = workdir("round_trip");
    let report = shoot_once(&dir);
    let csv1 = dir.join("rt1.csv");
    let json = dir.join("rt.json");
    let args_base = ["trace", "--report", report.to_str().unwrap(), "--ds", "0.1"];
    let r = run_in(
        &dir,
        &[
            &args_base[..],
            &["--format", "csv", "--out", csv1.to_str().unwrap()],
        ]
        .concat(),
    );
    assert!(r.status.success());
    let r = run_in(
        &dir,
        &[
            &args_base[..],
            &["--format", "json", "--out", json.to_str().unwrap()],
        ]
        .concat(),
    );
    assert!(r.status.success());

    // csv -> parse -> compare against json columns -> reformat as csv
    let csv_text = std::fs::read_to_string(&csv1).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let cols = ["s", "theta", "kappa", "kappa_s", "kappa_ss", "x", "y"];
    let json_cols: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            v[c].as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect()
        })
        .collect();
    let mut rebuilt = String::from("s,theta,kappa,kappa_s,kappa_ss,x,y\n");
    for i in 0..json_cols[0].len() {
        let row: Vec<String> = json_cols.iter().map(|c| format!("{:.16e}", c[i])).collect();
        rebuilt.push_str(&row.join(","));
        rebuilt.push('\n');
    }
    if rebuilt != csv_text {
        for (k, (a, b)) in rebuilt.lines().zip(csv_text.lines()).enumerate() {
            assert_eq!(a, b, "first differing line {k}");
        }
        assert_eq!(
            rebuilt.lines().count(),
            csv_text.lines().count(),
            "line counts differ"
        );
        panic!("csv -> json -> csv differs in trailing bytes");
    }
}

#[test]
fn plot_svg_is_symmetric_and_rejects_empty() {
    let dir = workdir("plot_sym");
    let report = shoot_once(&dir);
    let csv = dir.join("trace.csv");
    let r = run_in(
        &dir,
        &[
            "trace",
            "--report",
            report.to_str().unwrap(),
            "--ds",
            "0.05",
            "--format",
            "csv",
            "--out",
            csv.to_str().unwrap(),
        ],
    );
    assert!(r.status.success());
    let svg_path = dir.join("plot.svg");
    let r = run_in(
        &dir,
        &[
            "plot",
            "--input",
            csv.to_str().unwrap(),
            "--out",
            svg_path.to_str().unwrap(),
        ],
    );
    assert!(r.status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    // main path x-coordinates are symmetric about the canvas midline
    let d = svg
        .split("<path d=\"")
        .nth(1)
        .unwrap()
        .split('"')
        .next()
        .unwrap();
    let points: Vec<(f64, f64)> = d
        .split(|c| c == 'M' || c == 'L')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let mut it = t.trim().split_whitespace();
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let n = points.len();
    let mid_x = 500.0;
    for k in 0..n / 2 {
        let (xa, ya) = points[k];
        let (xb, yb) = points[n - 1 - k];
        assert!(
            (xa - mid_x + (xb - mid_x)).abs() < 2e-2,
            "x asymmetry at {k}: {xa} vs {xb}"
        );
        assert!((ya - yb).abs() < 2e-2, "y mismatch at {k}");
    }

    // empty data: run failure, exit 1
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "s,theta,kappa,kappa_s,kappa_ss,x,y\n").unwrap();
    let r = run_in(&dir, &["plot", "--input", empty.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));

    // missing input: run failure, exit 1
    let r = run_in(&dir, &["plot", "--input", "no_such_trace.csv"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn verify_reports_five_families_and_flags_injection() {
    let dir = workdir("verify_families");
    let report = shoot_once(&dir);
    let out = dir.join("verify.json");
    let r = run_in(
        &dir,
        &[
            "verify",
            "--report",
            report.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5, "five lemma families by default");
    assert!(v["all_pass"].as_bool().unwrap());

    // injected synthetic violation: exit 1, report still written, witness s
    let cfg = dir.join("inject.json");
    std::fs::write(&cfg, "{\"inject_synthetic_violation\": true}\n").unwrap();
    let out2 = dir.join("verify_inject.json");
    let r = run_in(
        &dir,
        &[
            "verify",
            "--report",
            report.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
        ],
    );
    assert_eq!(r.status.code(), Some(1));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out2).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    let bad = checks
        .iter()
        .find(|c| c["id"] == "synthetic_violation")
        .unwrap();
    assert_eq!(bad["pass"], false);
    assert!(bad["witnesses"][0]["s"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_flag_precedence() {
    let dir = workdir("precedence");
    // the file sets ds_trace = 0.5; the flag overrides it to 0.25
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, "{\"ds_trace\": 0.5, \"horizon\": 2.0}\n").unwrap();
    let out = dir.join("trace.csv");
    let r = run_in(
        &dir,
        &[
            "trace",
            "--a-star",
            "1.437393453243374",
            "--config",
            cfg.to_str().unwrap(),
            "--ds",
            "0.25",
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    // horizon 2 from the file, ds 0.25 from the flag: 2·(2/0.25)+1 rows
    assert_eq!(text.lines().count() - 1, 17);
}

#[test]
fn missing_report_is_a_run_failure() {
    let dir = workdir("missing_report");
    let r = run_in(&dir, &["trace", "--report", "nowhere.json"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn exit_code_contract() {
    let dir = workdir("exit_codes");

    // malformed configuration: usage error, exit 2, field-level message
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"rel_tol\": -1.0}\n").unwrap();
    let r = run_in(&dir, &["shoot", "--config", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("rel_tol"), "message names the field: {err}");

    // unknown configuration field: exit 2
    let unk = dir.join("unk.json");
    std::fs::write(&unk, "{\"no_such_field\": 1}\n").unwrap();
    let r = run_in(&dir, &["shoot", "--config", unk.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    // seed bracket with both sides escaping high: run failure, exit 1
    let r = run_in(&dir, &["shoot", "--seed-lo", "5", "--seed-hi", "10"]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("seed"), "bracketing message: {err}");

    // unstable explicit step: run failure, exit 1, suggested dt surfaced
    let r = run_in(&dir, &["flow", "--generator", "ellipse", "--dt", "1.0"]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("suggested dt"), "suggestion present: {err}");
}

#[test]
fn flow_accepts_a_curve_file() {
    let dir = workdir("flow_input");
    // a straight open polyline: stationary under the flow
    let path = dir.join("line.csv");
    let mut text = String::from("s,x,y\n");
    for k in 0..32 {
        let s = k as f64 * 0.1;
        text.push_str(&format!("{s},0.0,{s}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = dir.join("flow.json");
    let r = run_in(
        &dir,
        &[
            "flow",
            "--input",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["kind"], "input");
    assert_eq!(v["max_displacement_from_reference"].as_f64().unwrap(), 0.0);
}
