//! Sweep planning and evaluation.
//!
//! A sweep fans out into groups, one per (eavesdropper link, eavesdropper
//! SNR, constellation order) in config order. Every (group, point) cell is
//! evaluated independently on the rayon pool and collected back in order.
//! Monte Carlo cell `i` (row-major over groups) uses seed
//! `derive_seed(seed, 2i)`, and its Gaussian-input baseline `derive_seed(seed, 2i + 1)`.

use std::collections::BTreeSet;

use mgsec::montecarlo::{derive_seed, mc_gaussian_baseline, mc_metric, MIN_SECRECY_SAMPLES};
use mgsec::{db_to_linear, AsymptoticAsr, AsymptoticSop, Constellation64, Error, McOptions, SecrecyScenario64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, McMetric, Output};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    SnrDb,
    AsrBits,
    ILimBits,
    IConBits,
    Sop,
    LimitSop,
    PCon,
    AsymAsrBits,
    AsymSop,
    McValue,
    McStderr,
    GaussValue,
    GaussStderr,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::SnrDb => "snr_db",
            Column::AsrBits => "asr_bits",
            Column::ILimBits => "i_lim_bits",
            Column::IConBits => "i_con_bits",
            Column::Sop => "sop",
            Column::LimitSop => "limit_sop",
            Column::PCon => "p_con",
            Column::AsymAsrBits => "asym_asr_bits",
            Column::AsymSop => "asym_sop",
            Column::McValue => "mc_value",
            Column::McStderr => "mc_stderr",
            Column::GaussValue => "gauss_value",
            Column::GaussStderr => "gauss_stderr",
        }
    }
}

/// What a run computes, after merging the command with the config.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub outputs: BTreeSet<Output>,
    pub columns: Vec<Column>,
    pub asym_rate: bool,
    pub asym_outage: bool,
    pub mc_metric: McMetric,
}

impl Plan {
    /// `outputs` empty means "take them from the config".
    pub fn new(config: &Config, outputs: &[Output], validating: bool) -> Result<Self, CliError> {
        let sweep = &config.sweep;
        let outputs: BTreeSet<Output> =
            if outputs.is_empty() { sweep.outputs.iter().copied().collect() } else { outputs.iter().copied().collect() };
        if outputs.is_empty() && !validating {
            return Err(config.error(Some(("sweep", 0)), Some("outputs"), "`outputs` must list at least one quantity"));
        }
        let config_outputs: BTreeSet<Output> = sweep.outputs.iter().copied().collect();
        let rate = outputs.iter().any(|o| o.is_rate());
        let outage = outputs.iter().any(|o| o.is_outage());
        let (asym_rate, asym_outage) = if rate || outage { (rate, outage) } else { (true, sweep.target_rate.is_some()) };

        // Metric inference looks at the config outputs too, so `mgsec mc` and
        // `mgsec validate` on an outage recipe estimate the outage probability.
        let outage_only = |set: &BTreeSet<Output>| {
            set.iter().any(|o| o.is_outage()) && !set.iter().any(|o| o.is_rate())
        };
        let mc_metric = sweep.mc_metric.unwrap_or(if outage_only(&outputs) || (!rate && outage_only(&config_outputs)) {
            McMetric::Sop
        } else {
            McMetric::Asr
        });

        let mc = validating || outputs.contains(&Output::Mc) || outputs.contains(&Output::GaussianBaseline);
        let needs_rate = outage || (mc && mc_metric == McMetric::Sop);
        if needs_rate && sweep.target_rate.is_none() {
            return Err(config.error(
                Some(("sweep", 0)),
                None,
                "outage quantities need `target_rate` (bits per channel use) in [sweep]",
            ));
        }
        if mc && !validating && sweep.samples < MIN_SECRECY_SAMPLES {
            return Err(config.error(
                Some(("sweep", 0)),
                Some("samples"),
                format!("Monte Carlo columns need at least {MIN_SECRECY_SAMPLES} samples, got {}", sweep.samples),
            ));
        }

        let mut columns = vec![Column::SnrDb];
        let wanted = [
            (outputs.contains(&Output::Asr), Column::AsrBits),
            (outputs.contains(&Output::ILim), Column::ILimBits),
            (outputs.contains(&Output::ICon), Column::IConBits),
            (outputs.contains(&Output::Sop), Column::Sop),
            (outputs.contains(&Output::LimitSop), Column::LimitSop),
            (outputs.contains(&Output::PCon), Column::PCon),
            (outputs.contains(&Output::Asymptote) && asym_rate, Column::AsymAsrBits),
            (outputs.contains(&Output::Asymptote) && asym_outage, Column::AsymSop),
            (outputs.contains(&Output::Mc), Column::McValue),
            (outputs.contains(&Output::Mc), Column::McStderr),
            (outputs.contains(&Output::GaussianBaseline), Column::GaussValue),
            (outputs.contains(&Output::GaussianBaseline), Column::GaussStderr),
        ];
        columns.extend(wanted.into_iter().filter_map(|(on, c)| on.then_some(c)));
        Ok(Self { outputs, columns, asym_rate, asym_outage, mc_metric })
    }

    fn has(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

#[derive(Debug, Clone)]
struct Asymptotes {
    rate: Option<AsymptoticAsr<f64>>,
    outage: Option<AsymptoticSop<f64>>,
}

/// One curve: a fixed eavesdropper link and constellation.
#[derive(Debug, Clone)]
pub struct Group {
    pub label: String,
    pub order: usize,
    pub eve: String,
    pub eve_snr_db: f64,
    scenario: SecrecyScenario64,
    asymptotes: Asymptotes,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupInfo {
    pub label: String,
    pub order: usize,
    pub eve: String,
    pub eve_snr_db: f64,
}

impl Group {
    pub fn info(&self) -> GroupInfo {
        GroupInfo { label: self.label.clone(), order: self.order, eve: self.eve.clone(), eve_snr_db: self.eve_snr_db }
    }
}

fn core_error(config: &Config, context: &str, e: Error) -> CliError {
    match e {
        Error::Numerical(msg) => CliError::Numerical(format!("{context}: {msg}")),
        Error::UnsupportedFamily(family) => config.error(
            Some(("main", 0)),
            Some("family"),
            format!("{context}: the asymptote output is not available for the `{family}` fading family"),
        ),
        other => config.error(None, None, format!("{context}: {other}")),
    }
}

/// Builds every group, including the per-group asymptotic coefficients, so
/// that configuration problems surface before any point is evaluated.
pub fn build_groups(config: &Config, plan: &Plan) -> Result<Vec<Group>, CliError> {
    let main = config.main.build(1.0, &config.base_dir).map_err(|e| core_error(config, "[main]", e))?;
    let mut groups = Vec::new();
    for (eve_index, eve_spec) in config.eve.iter().enumerate() {
        let eve_snrs = eve_spec.avg_snr_db.as_ref().map(|v| v.to_vec()).unwrap_or_default();
        for eve_db in eve_snrs {
            let context = format!("[eve] #{} at {eve_db} dB", eve_index + 1);
            let eve = eve_spec.build(db_to_linear(eve_db), &config.base_dir).map_err(|e| core_error(config, &context, e))?;
            for &order in &config.constellation.orders {
                let constellation = Constellation64::square_qam(order).map_err(|e| core_error(config, "[constellation]", e))?;
                let mut scenario = SecrecyScenario64::new(main.clone(), eve.clone(), constellation)
                    .with_precision(config.precision.into());
                if let Some(rate) = config.sweep.target_rate {
                    scenario = scenario.with_target_rate(rate);
                }
                let label = format!("M={order} eve={} eve_snr_db={eve_db}", eve_spec.describe());
                let asymptotes = asymptotes(config, plan, &scenario, &label)?;
                groups.push(Group { label, order, eve: eve_spec.describe(), eve_snr_db: eve_db, scenario, asymptotes });
            }
        }
    }
    Ok(groups)
}

fn asymptotes(config: &Config, plan: &Plan, s: &SecrecyScenario64, label: &str) -> Result<Asymptotes, CliError> {
    if !plan.has(Output::Asymptote) {
        return Ok(Asymptotes { rate: None, outage: None });
    }
    let rate = if plan.asym_rate {
        Some(s.asymptotic_asr().map_err(|e| core_error(config, label, e))?)
    } else {
        None
    };
    // R_s ≥ log₂M is a certain outage; there is no expansion to report.
    let outage = if plan.asym_outage && s.target_rate.is_some_and(|r| r < s.constellation.max_bits()) {
        Some(s.asymptotic_sop().map_err(|e| core_error(config, label, e))?)
    } else {
        None
    };
    Ok(Asymptotes { rate, outage })
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub groups: Vec<(GroupInfo, Vec<Vec<f64>>)>,
}

fn mc_options(config: &Config, samples: usize, stream: u64) -> McOptions {
    McOptions::new(samples, derive_seed(config.sweep.seed, stream))
}

fn mc_scenario(config: &Config, s: &SecrecyScenario64) -> SecrecyScenario64 {
    match config.sweep.mc_target_rate {
        Some(rate) => s.clone().with_target_rate(rate),
        None => s.clone(),
    }
}

fn evaluate_cell(config: &Config, plan: &Plan, group: &Group, snr_db: f64, cell: u64) -> Result<Vec<f64>, CliError> {
    let context = format!("{} at snr_db={snr_db}", group.label);
    let err = |e: Error| core_error(config, &context, e);
    let gamma = db_to_linear(snr_db);
    let s = group.scenario.with_main_avg_snr(gamma).map_err(err)?;

    let rate = if plan.has(Output::Asr) || plan.has(Output::ILim) || plan.has(Output::ICon) {
        Some(s.asr().map_err(err)?)
    } else {
        None
    };
    let outage = if plan.has(Output::Sop) || plan.has(Output::LimitSop) || plan.has(Output::PCon) {
        Some(s.sop().map_err(err)?)
    } else {
        None
    };
    let metric = plan.mc_metric.into();
    let mc = if plan.has(Output::Mc) {
        Some(mc_metric(&mc_scenario(config, &s), metric, mc_options(config, config.sweep.samples, 2 * cell)).map_err(err)?)
    } else {
        None
    };
    let gauss = if plan.has(Output::GaussianBaseline) {
        let opts = mc_options(config, config.sweep.samples, 2 * cell + 1);
        Some(mc_gaussian_baseline(&mc_scenario(config, &s), metric, opts).map_err(err)?)
    } else {
        None
    };

    let row: Vec<f64> = plan
        .columns
        .iter()
        .map(|c| match c {
            Column::SnrDb => snr_db,
            Column::AsrBits => rate.map_or(f64::NAN, |r| r.asr),
            Column::ILimBits => rate.map_or(f64::NAN, |r| r.i_lim),
            Column::IConBits => rate.map_or(f64::NAN, |r| r.i_con()),
            Column::Sop => outage.map_or(f64::NAN, |r| r.sop),
            Column::LimitSop => outage.map_or(f64::NAN, |r| r.limit_sop),
            Column::PCon => outage.map_or(f64::NAN, |r| r.p_con()),
            Column::AsymAsrBits => group.asymptotes.rate.as_ref().map_or(f64::NAN, |a| a.asr_at(gamma)),
            Column::AsymSop => group.asymptotes.outage.as_ref().map_or(1.0, |a| a.sop_at(gamma)),
            Column::McValue => mc.map_or(f64::NAN, |e| e.value),
            Column::McStderr => mc.map_or(f64::NAN, |e| e.std_error),
            Column::GaussValue => gauss.map_or(f64::NAN, |e| e.value),
            Column::GaussStderr => gauss.map_or(f64::NAN, |e| e.std_error),
        })
        .collect();
    if let Some((c, v)) = plan.columns.iter().zip(&row).find(|(_, v)| !v.is_finite()) {
        return Err(CliError::Numerical(format!("{context}: {} = {v}", c.name())));
    }
    Ok(row)
}

/// Runs `f` over every (group, point) cell in parallel, returning rows grouped
/// and ordered as in the config.
fn for_each_cell<R, F>(config: &Config, groups: &[Group], f: F) -> Result<Vec<Vec<R>>, CliError>
where
    R: Send,
    F: Fn(&Group, f64, u64) -> Result<R, CliError> + Sync,
{
    let points = &config.sweep.points_db;
    let cells: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..points.len()).map(move |p| (g, p))).collect();
    let results: Vec<R> = cells
        .par_iter()
        .map(|&(g, p)| f(&groups[g], points[p], (g * points.len() + p) as u64))
        .collect::<Result<_, _>>()?;
    let mut grouped: Vec<Vec<R>> = Vec::with_capacity(groups.len());
    let mut it = results.into_iter();
    for _ in groups {
        grouped.push(it.by_ref().take(points.len()).collect());
    }
    Ok(grouped)
}

pub fn run_sweep(config: &Config, plan: &Plan) -> Result<Table, CliError> {
    let groups = build_groups(config, plan)?;
    let rows = for_each_cell(config, &groups, |g, db, cell| evaluate_cell(config, plan, g, db, cell))?;
    Ok(Table { columns: plan.columns.clone(), groups: groups.iter().map(Group::info).zip(rows).collect() })
}

pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Check {
    pub snr_db: f64,
    pub quad_value: f64,
    pub mc_value: f64,
    pub mc_stderr: f64,
    /// `None` when the estimate has zero width and misses the reference.
    pub z_score: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub metric: McMetric,
    pub samples: usize,
    pub groups: Vec<(GroupInfo, Vec<Check>)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|(_, checks)| checks.iter().all(|c| c.pass))
    }

    pub fn max_abs_z(&self) -> f64 {
        self.groups
            .iter()
            .flat_map(|(_, checks)| checks.iter())
            .map(|c| c.z_score.map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }

    pub fn point_count(&self) -> usize {
        self.groups.iter().map(|(_, c)| c.len()).sum()
    }
}

/// Quadrature against Monte Carlo at every point, |z| ≤ 3 to pass. Sample
/// counts below the estimator floor are allowed here as smoke runs.
pub fn run_validation(config: &Config, plan: &Plan) -> Result<Report, CliError> {
    let groups = build_groups(config, plan)?;
    let samples = config.sweep.samples;
    let checks = for_each_cell(config, &groups, |group, snr_db, cell| {
        let context = format!("{} at snr_db={snr_db}", group.label);
        let err = |e: Error| core_error(config, &context, e);
        let s = group.scenario.with_main_avg_snr(db_to_linear(snr_db)).map_err(err)?;
        let quad = match plan.mc_metric {
            McMetric::Asr => s.asr().map_err(err)?.asr,
            McMetric::Sop => s.sop().map_err(err)?.sop,
        };
        if !quad.is_finite() {
            return Err(CliError::Numerical(format!("{context}: quadrature value {quad}")));
        }
        let mut opts = mc_options(config, samples, 2 * cell);
        if samples < MIN_SECRECY_SAMPLES {
            opts = opts.without_sample_floor();
        }
        let est = mc_metric(&mc_scenario(config, &s), plan.mc_metric.into(), opts).map_err(err)?;
        let z = est.z_score(quad);
        let z_score = z.is_finite().then_some(z);
        Ok(Check {
            snr_db,
            quad_value: quad,
            mc_value: est.value,
            mc_stderr: est.std_error,
            z_score,
            pass: z.abs() <= Z_THRESHOLD,
        })
    })?;
    Ok(Report { metric: plan.mc_metric, samples, groups: groups.iter().map(Group::info).zip(checks).collect() })
}
