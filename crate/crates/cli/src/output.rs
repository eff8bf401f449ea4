//! CSV and JSON rendering. Both are pure functions of their inputs, so
//! reruns with the same config and seed produce identical bytes.

use serde::Serialize;

use crate::config::{Config, McMetric};
use crate::sweep::{Check, GroupInfo, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Plain decimals where they stay short, exponent form otherwise.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn header(command: &str, config: &Config) -> String {
    let mut out = format!("# mgsec {} {command}\n# seed = {}\n", env!("CARGO_PKG_VERSION"), config.sweep.seed);
    for line in config.resolved_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn group_line(index: usize, info: &GroupInfo) -> String {
    format!("# group {}: {}\n", index + 1, info.label)
}

pub fn sweep_csv(command: &str, config: &Config, table: &Table) -> String {
    let mut out = header(command, config);
    let names: Vec<&str> = table.columns.iter().map(|c| c.name()).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, (info, rows)) in table.groups.iter().enumerate() {
        out.push_str(&group_line(i, info));
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct SweepJson<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a Config,
    columns: Vec<&'static str>,
    groups: Vec<SweepGroupJson<'a>>,
}

#[derive(Serialize)]
struct SweepGroupJson<'a> {
    #[serde(flatten)]
    info: &'a GroupInfo,
    rows: &'a [Vec<f64>],
}

pub fn sweep_json(command: &str, config: &Config, table: &Table) -> String {
    let doc = SweepJson {
        tool: "mgsec",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: config.sweep.seed,
        config,
        columns: table.columns.iter().map(|c| c.name()).collect(),
        groups: table.groups.iter().map(|(info, rows)| SweepGroupJson { info, rows }).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("sweep values are finite");
    text.push('\n');
    text
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn summary_line(report: &Report) -> String {
    format!(
        "{} points={} max_abs_z={} samples={}",
        verdict(report.passed()),
        report.point_count(),
        num(report.max_abs_z()),
        report.samples
    )
}

fn metric_name(m: McMetric) -> &'static str {
    match m {
        McMetric::Asr => "asr",
        McMetric::Sop => "sop",
    }
}

pub fn report_csv(config: &Config, report: &Report) -> String {
    let mut out = header("validate", config);
    out.push_str(&format!("# metric = {}\n", metric_name(report.metric)));
    out.push_str("snr_db,quad_value,mc_value,mc_stderr,z_score,verdict\n");
    for (i, (info, checks)) in report.groups.iter().enumerate() {
        out.push_str(&group_line(i, info));
        for c in checks {
            let z = c.z_score.map_or_else(|| "inf".to_string(), num);
            out.push_str(&format!(
                "{},{},{},{},{z},{}\n",
                num(c.snr_db),
                num(c.quad_value),
                num(c.mc_value),
                num(c.mc_stderr),
                verdict(c.pass)
            ));
        }
    }
    out.push_str(&format!("# summary: {}\n", summary_line(report)));
    out
}

#[derive(Serialize)]
struct ReportJson<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a Config,
    metric: McMetric,
    summary: SummaryJson,
    groups: Vec<ReportGroupJson<'a>>,
}

#[derive(Serialize)]
struct SummaryJson {
    verdict: &'static str,
    points: usize,
    samples: usize,
    max_abs_z: Option<f64>,
}

#[derive(Serialize)]
struct ReportGroupJson<'a> {
    #[serde(flatten)]
    info: &'a GroupInfo,
    checks: &'a [Check],
}

pub fn report_json(config: &Config, report: &Report) -> String {
    let max = report.max_abs_z();
    let doc = ReportJson {
        tool: "mgsec",
        version: env!("CARGO_PKG_VERSION"),
        command: "validate",
        seed: config.sweep.seed,
        config,
        metric: report.metric,
        summary: SummaryJson {
            verdict: verdict(report.passed()),
            points: report.point_count(),
            samples: report.samples,
            max_abs_z: max.is_finite().then_some(max),
        },
        groups: report.groups.iter().map(|(info, checks)| ReportGroupJson { info, checks }).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report values are finite");
    text.push('\n');
    text
}
