use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(format!("{name}.toml"))
}

fn mgsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgsec")).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = mgsec(args);
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Copies a recipe into a temp dir with `[sweep]` lines replaced.
fn variant(dir: &TempDir, name: &str, replacements: &[(&str, &str)]) -> String {
    let mut text = std::fs::read_to_string(recipe(name)).unwrap();
    for (prefix, line) in replacements {
        let old = text.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("{prefix} in {name}"));
        text = text.replacen(old, line, 1);
    }
    let path = dir.path().join(format!("{name}-variant.toml"));
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV, split by `# group` comment lines.
fn groups(csv: &str) -> Vec<Vec<Vec<String>>> {
    let mut out: Vec<Vec<Vec<String>>> = Vec::new();
    let mut header_seen = false;
    for line in csv.lines() {
        if line.starts_with("# group") {
            out.push(Vec::new());
        } else if line.starts_with('#') {
            continue;
        } else if !header_seen {
            header_seen = true;
        } else {
            out.last_mut().expect("row before group").push(line.split(',').map(str::to_string).collect());
        }
    }
    out
}

fn column(csv: &str, name: &str) -> usize {
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    header.split(',').position(|c| c == name).unwrap_or_else(|| panic!("no column {name} in {header}"))
}

fn values(rows: &[Vec<String>], col: usize) -> Vec<f64> {
    rows.iter().map(|r| r[col].parse().unwrap()).collect()
}

#[test]
fn fig1a_sweep_has_27_rows_with_nondecreasing_asr() {
    let (code, csv, err) = run(&["asr", "--config", recipe("fig1a").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let g = groups(&csv);
    assert_eq!(g.len(), 3);
    assert_eq!(g.iter().map(Vec::len).sum::<usize>(), 27);
    let asr = column(&csv, "asr_bits");
    for rows in &g {
        let v = values(rows, asr);
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
    }
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "snr_db,asr_bits,i_lim_bits,i_con_bits");
}

#[test]
fn sweep_columns_follow_the_fixed_order() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(
        &dir,
        "fig3a",
        &[
            ("points_db", "points_db = [10.0]"),
            ("outputs", r#"outputs = ["gaussian_baseline", "asymptote", "p_con", "mc", "sop", "limit_sop", "asr", "i_con", "i_lim"]"#),
            ("mc_metric", "mc_metric = \"sop\""),
        ],
    );
    let (code, csv, err) = run(&["sweep", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "snr_db,asr_bits,i_lim_bits,i_con_bits,sop,limit_sop,p_con,asym_asr_bits,asym_sop,\
         mc_value,mc_stderr,gauss_value,gauss_stderr"
    );
    let row = &groups(&csv)[0][0];
    let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
    assert!((v[3] - (v[2] - v[1])).abs() <= 1e-12, "i_con = i_lim - asr");
    assert!((v[6] - (v[4] - v[5])).abs() <= 1e-12, "p_con = sop - limit_sop");
}

#[test]
fn empty_points_is_a_config_error_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig1a", &[("points_db", "points_db = []")]);
    let out = dir.path().join("out.csv");
    let (code, _, err) = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("points_db"), "{err}");
    assert!(!out.exists());
}

#[test]
fn config_errors_are_line_anchored() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig1a", &[("points_db", "points_db = [0.0, 10.0, 5.0]")]);
    let (code, _, err) = run(&["asr", "--config", &cfg]);
    assert_eq!(code, 1);
    let line = std::fs::read_to_string(&cfg).unwrap().lines().position(|l| l.starts_with("points_db")).unwrap() + 1;
    assert!(err.contains(&format!("{cfg}:{line}:")), "{err}");
    assert!(err.contains("strictly increasing"), "{err}");

    let cfg = variant(&dir, "fig1a", &[("m = 2.0", "q = 2.0")]);
    let (code, _, err) = run(&["asr", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains(&format!("{cfg}:3:")) && err.contains("requires `m`"), "{err}");
}

#[test]
fn fig4_runs_three_finite_groups() {
    for (command, name) in [("sop", "fig4a"), ("asymptote", "fig4b")] {
        let (code, csv, err) = run(&[command, "--config", recipe(name).to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let g = groups(&csv);
        assert_eq!(g.len(), 3);
        for rows in &g {
            assert_eq!(rows.len(), 11);
            assert!(rows.iter().flatten().all(|c| c.parse::<f64>().unwrap().is_finite()));
        }
    }
}

#[test]
fn every_recipe_parses_and_plans() {
    for name in ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b"] {
        let config = mgsec_cli::Config::load(&recipe(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        mgsec_cli::Plan::new(&config, &[], false).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn validate_passes_on_the_generalized_k_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig3a", &[("points_db", "points_db = [5.0, 25.0]")]);
    let (code, csv, err) = run(&["validate", "--config", &cfg, "--samples", "1000000"]);
    assert_eq!(code, 0, "{err}\n{csv}");
    assert!(csv.lines().last().unwrap().starts_with("# summary: PASS points=4"), "{csv}");
    assert!(err.contains("PASS"));
    let z = column(&csv, "z_score");
    for rows in groups(&csv) {
        assert!(values(&rows, z).iter().all(|v| v.abs() <= 3.0));
    }
}

#[test]
fn mismatched_rate_fails_validation() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(
        &dir,
        "fig3a",
        &[("points_db", "points_db = [5.0, 25.0]"), ("mc_metric", "mc_metric = \"sop\"\nmc_target_rate = 0.5")],
    );
    let (code, csv, err) = run(&["validate", "--config", &cfg]);
    assert_eq!(code, 3, "{err}");
    assert!(csv.contains("# summary: FAIL"));
    let z = column(&csv, "z_score");
    let worst = groups(&csv).iter().flat_map(|rows| values(rows, z)).fold(0.0_f64, |a, v| a.max(v.abs()));
    assert!(worst > 3.0, "max |z| {worst}");
}

#[test]
fn small_sample_validation_still_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig1a", &[("points_db", "points_db = [10.0]")]);
    let (code, csv, err) = run(&["validate", "--config", &cfg, "--samples", "10000", "--format", "json"]);
    assert!(code == 0 || code == 3, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&csv).unwrap();
    assert_eq!(doc["summary"]["points"], 3);
    assert_eq!(doc["summary"]["samples"], 10_000);
    for group in doc["groups"].as_array().unwrap() {
        let check = &group["checks"][0];
        assert!(check["mc_stderr"].as_f64().unwrap() > 1e-3);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig3a", &[("points_db", "points_db = [5.0, 15.0, 25.0]")]);
    for format in ["csv", "json"] {
        let a = dir.path().join(format!("a.{format}"));
        let b = dir.path().join(format!("b.{format}"));
        for out in [&a, &b] {
            let (code, _, err) = run(&["sweep", "--config", &cfg, "--format", format, "--out", out.to_str().unwrap()]);
            assert_eq!(code, 0, "{err}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn seed_flag_is_recorded_and_changes_the_estimates() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(&dir, "fig3a", &[("points_db", "points_db = [15.0]")]);
    let (_, first, _) = run(&["mc", "--config", &cfg, "--seed", "18446744073709551615"]);
    let (_, second, _) = run(&["mc", "--config", &cfg, "--seed", "7"]);
    assert!(first.contains("# seed = 18446744073709551615"));
    assert!(second.contains("# seed = 7"));
    let col = column(&first, "mc_value");
    assert_ne!(groups(&first)[0][0][col], groups(&second)[0][0][col]);
}

#[test]
fn json_mirrors_csv() {
    let cfg = recipe("fig3b");
    let (_, csv, _) = run(&["sop", "--config", cfg.to_str().unwrap()]);
    let (code, json, err) = run(&["sop", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["snr_db", "sop", "limit_sop", "p_con"]));
    assert_eq!(doc["config"]["sweep"]["target_rate"], 1.0);
    let csv_groups = groups(&csv);
    let json_groups = doc["groups"].as_array().unwrap();
    assert_eq!(csv_groups.len(), json_groups.len());
    for (rows, group) in csv_groups.iter().zip(json_groups) {
        for (row, jrow) in rows.iter().zip(group["rows"].as_array().unwrap()) {
            for (cell, jcell) in row.iter().zip(jrow.as_array().unwrap()) {
                // serde_json's default float parser may land one ulp off.
                let (a, b) = (cell.parse::<f64>().unwrap(), jcell.as_f64().unwrap());
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs(), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn header_records_the_resolved_config() {
    let (_, csv, _) = run(&["asr", "--config", recipe("fig1b").to_str().unwrap()]);
    let header: String = csv
        .lines()
        .take_while(|l| l.starts_with('#') && !l.starts_with("# group"))
        .filter_map(|l| l.strip_prefix("# ").or(l.strip_prefix('#')))
        .skip(2)
        .collect::<Vec<_>>()
        .join("\n");
    let parsed: toml::Value = toml::from_str(&header).unwrap();
    assert_eq!(parsed["precision"]["laguerre"].as_integer(), Some(30));
    assert_eq!(parsed["eve"][0]["avg_snr_db"].as_float(), Some(0.0));
}

#[test]
fn custom_mixtures_load_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("rayleigh.toml"),
        "avg_snr_db = 0.0\n[[component]]\nalpha = 1.0\nbeta = 1.0\nzeta = 1.0\n",
    )
    .unwrap();
    let cfg = variant(&dir, "fig1b", &[("family = \"nakagami\"", "family = \"custom\""), ("m = 2.0", "file = \"rayleigh.toml\"")]);
    let (code, csv, err) = run(&["asr", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(groups(&csv).len(), 3);

    let (code, _, err) = run(&["asymptote", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("`custom`"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let fig3b = recipe("fig3b");
    let fig3b = fig3b.to_str().unwrap();

    // Non-finite asymptote far below the expansion's range.
    let cfg = variant(&dir, "fig3b", &[("points_db", "points_db = [-3000.0]")]);
    let (code, _, err) = run(&["asymptote", "--config", &cfg]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("numerical failure"));

    let cfg = variant(&dir, "fig1a", &[("family", "family = \"rician\"")]);
    assert_eq!(run(&["asr", "--config", &cfg]).0, 1);
    let cfg = variant(&dir, "fig1b", &[("outputs", "outputs = [\"sop\"]")]);
    let (code, _, err) = run(&["sweep", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("target_rate"), "{err}");
    let cfg = variant(&dir, "fig3a", &[("samples", "samples = 10")]);
    assert_eq!(run(&["mc", "--config", &cfg]).0, 1);

    assert_eq!(run(&["sweep", "--config", "/nonexistent/config.toml"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["sop", "--config", fig3b, "--format", "xml"]).0, 1);
    assert_eq!(run(&["sop", "--config", fig3b, "--samples", "0"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}
