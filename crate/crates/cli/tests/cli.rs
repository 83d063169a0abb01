use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn expspan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expspan"))
        .args(args)
        .env_remove("EXPSPAN_MAX_DIM")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn report<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["reports"].as_array().unwrap().iter().find(|r| r["name"] == name).map(|r| &r["data"]).unwrap()
}

fn exponent(s: &str) -> f64 {
    s.parse::<f64>().unwrap()
}

#[test]
fn analyze_example_v_passes_every_verdict() {
    let doc = json(&expspan(&["analyze", "fixture:example_v", "--N", "8"]));
    let r = report(&doc, "class_report");
    assert_eq!(r["all_pass"], true);
    assert_eq!(r["condition_b"]["pass"], true);
    assert_eq!(doc["schema"], "expspan.bundle/1");
}

#[test]
fn biorthogonal_identity_residual_at_200_digits() {
    let doc = json(&expspan(&[
        "gram", "biorthogonal", "--seq", "fixture:example_i", "--N", "6", "--interval", "0,1", "--digits", "200",
    ]));
    let r = report(&doc, "biorthogonal");
    assert!(exponent(r["identity_residual"].as_str().unwrap()) < 1e-50);
    assert!(exponent(r["norm_distance_defect"].as_str().unwrap()) < 1e-40);
    // complex entries are [re, im] decimal strings, rows are row-major
    let m = r["coefficients"].as_array().unwrap();
    assert_eq!(m.len(), 6);
    assert!(m[0][0][0].is_string() && m[0][0][1].is_string());
}

#[test]
fn distance_trend_csv_columns() {
    let out = expspan(&["gram", "distance", "--seq", "fixture:example_i", "--N", "6", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# distance_trend"));
    assert_eq!(lines.next(), Some("n,Re λ_n,D_n,log D_n/Re λ_n"));
    let rows: Vec<&str> = lines.take_while(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("1,1.0"));
}

#[test]
fn identical_config_gives_identical_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"sequence": {"fixture": "example_i"}, "N": 6, "digits": 60,
            "experiments": ["analyze", "biorthogonal", "distance-trend"]}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = expspan(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?} differs");
    }
    let s1 = expspan(&["run", cfg.to_str().unwrap()]).stdout;
    let s2 = expspan(&["run", cfg.to_str().unwrap()]).stdout;
    assert_eq!(s1, s2);
}

#[test]
fn full_report_manifest_lists_every_sub_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"sequence": {"fixture": "example_iv"}, "N": 6, "experiments": ["full-report"], "out": "bundle"}"#,
    )
    .unwrap();
    let o = expspan(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("bundle");
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let reports: Vec<&str> = manifest["reports"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    for want in ["class_report", "gram", "biorthogonal", "distances", "carleson_annihilation"] {
        assert!(reports.contains(&want), "{want} missing from {reports:?}");
    }
    for entry in manifest["reports"].as_array().unwrap().iter().chain(manifest["tables"].as_array().unwrap()) {
        assert!(out.join(entry["file"].as_str().unwrap()).is_file());
    }
    let trend = manifest["tables"].as_array().unwrap().iter().find(|t| t["name"] == "distance_trend").unwrap();
    assert_eq!(trend["columns"].as_array().unwrap().len(), 4);
    // every file in the directory is accounted for
    let listed = 1 + manifest["reports"].as_array().unwrap().len() + manifest["tables"].as_array().unwrap().len();
    assert_eq!(fs::read_dir(&out).unwrap().count(), listed);
}

fn assert_fails(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty(), "partial output on failure");
}

#[test]
fn malformed_sequence_file_is_a_parse_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("seq.json");
    fs::write(&bad, r#"{"kind": "explicit", "entries": [[1, 0"#).unwrap();
    let out_dir = dir.path().join("out");
    assert_fails(&expspan(&["analyze", bad.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]), 3);
    assert!(!out_dir.exists());
    assert_fails(&expspan(&["gram", "build", "--seq", bad.to_str().unwrap()]), 3);
}

#[test]
fn failure_paths_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // parse: malformed complex number
    assert_fails(&expspan(&["product", "eval", "--kind", "F", "--seq", "fixture:example_i", "--z", "1+x"]), 3);
    // invalid: unknown fixture, non-positive eps, too few digits
    assert_fails(&expspan(&["analyze", "fixture:nope"]), 4);
    assert_fails(&expspan(&["analyze", "fixture:example_i", "--eps", "-1"]), 4);
    assert_fails(&expspan(&["gram", "build", "--seq", "fixture:example_i", "--digits", "10"]), 4);
    // precision: the counterexample gaps exceed four times the requested digits
    assert_fails(&expspan(&["gram", "build", "--seq", "fixture:carleson_counterexample", "--N", "8"]), 5);
    // cap
    let capped = Command::new(env!("CARGO_BIN_EXE_expspan"))
        .args(["gram", "build", "--seq", "fixture:example_i", "--N", "6"])
        .env("EXPSPAN_MAX_DIM", "3")
        .output()
        .unwrap();
    assert_fails(&capped, 6);
    // I/O: missing file, and an output path that is a regular file
    assert_fails(&expspan(&["analyze", dir.path().join("missing.json").to_str().unwrap()]), 8);
    let file = dir.path().join("plain");
    fs::write(&file, "keep").unwrap();
    assert_fails(&expspan(&["fixtures", "--out", file.to_str().unwrap()]), 8);
    assert_eq!(fs::read_to_string(&file).unwrap(), "keep");
}

#[test]
fn empty_run_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sequence": {"fixture": "example_i"}, "experiments": [], "out": "x"}"#).unwrap();
    assert_fails(&expspan(&["run", cfg.to_str().unwrap()]), 4);
    assert!(!dir.path().join("x").exists());
}

#[test]
fn config_is_validated_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sequence": {"fixture": "example_i"}, "experiments": ["analyze", "warp"]}"#).unwrap();
    assert_fails(&expspan(&["run", cfg.to_str().unwrap()]), 3);
    fs::write(
        &cfg,
        r#"{"sequence": {"fixture": "example_i"}, "experiments": ["analyze", "series"], "series": "gone.json"}"#,
    )
    .unwrap();
    assert_fails(&expspan(&["run", cfg.to_str().unwrap()]), 8);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sequence": {"fixture": "example_i"}, "N": 4, "digits": 60, "experiments": ["gram"]}"#).unwrap();
    let doc = json(&expspan(&["run", cfg.to_str().unwrap(), "--N", "3"]));
    assert_eq!(doc["config"]["N"], 3);
    assert_eq!(doc["config"]["digits"], 60);
    assert_eq!(report(&doc, "gram")["dim"], 3);
}

#[test]
fn moment_solve_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.json");
    // d_n = e^{λ_n/2} for λ_n = n², n ≤ 4
    let entries: Vec<String> = (1..=4u32)
        .map(|n| format!("[{n}, 0, \"{:e}\", \"0\"]", (f64::from(n * n) / 2.0).exp()))
        .collect();
    fs::write(&data, format!("{{\"moments\": [{}]}}", entries.join(", "))).unwrap();
    let doc = json(&expspan(&[
        "moment", "solve", "--seq", "fixture:example_i", "--N", "4", "--data", data.to_str().unwrap(), "--digits", "80",
    ]));
    let r = report(&doc, "moment_solution");
    assert_eq!(r["growth"]["pass"], true);
    assert!(exponent(r["residual"].as_str().unwrap()) < 1e-40);
    // the emitted series is a valid series file
    let series = dir.path().join("s.json");
    fs::write(&series, serde_json::to_string(&r["series"]).unwrap()).unwrap();
    let b = json(&expspan(&["series", "bound", series.to_str().unwrap()]));
    assert!(report(&b, "bound")["m_hat"].is_string());
    // the solution lies in the span, so F(D) annihilates it
    let res = json(&expspan(&["carleson", "residual", "--series", series.to_str().unwrap(), "--digits", "80"]));
    let rr = report(&res, "carleson_residual");
    assert!(exponent(rr["residual"].as_str().unwrap()) <= 1e-30 * exponent(rr["scale"].as_str().unwrap()));
}

#[test]
fn counterexample_csv_shows_the_dichotomy() {
    let out = expspan(&["carleson", "counterexample", "--nmax", "5", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert!(exponent(&rows[2][4]) < 1e-20);
    assert!(exponent(&rows[4][6]) > 1e40);
}

#[test]
fn overwrites_only_earlier_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert!(expspan(&["fixtures", "--out", o]).status.success());
    assert!(expspan(&["fixtures", "--out", o]).status.success());
    assert!(Path::new(&out).join("manifest.json").is_file());
    let foreign = dir.path().join("f");
    fs::create_dir(&foreign).unwrap();
    fs::write(foreign.join("notes.txt"), "mine").unwrap();
    assert_fails(&expspan(&["fixtures", "--out", foreign.to_str().unwrap()]), 8);
    assert!(foreign.join("notes.txt").is_file());
}
