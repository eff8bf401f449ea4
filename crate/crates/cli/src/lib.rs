//! Front end for the `mgsec` binary: configuration, sweeps over the main-link
//! average SNR, and Monte Carlo validation reports.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Config, McMetric, Output};
pub use error::{CliError, EXIT_VALIDATION_FAIL};
pub use output::Format;
pub use sweep::{Plan, Report, Table};

#[derive(Debug, Parser)]
#[command(name = "mgsec", version, about = "Secrecy rate and outage of square M-QAM over mixture-Gamma fading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `[sweep] seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Overrides `[sweep] samples`.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average secrecy rate, its limit and the gap between them.
    Asr(Common),
    /// Secrecy outage probability, its floor and the gap between them.
    Sop(Common),
    /// High-SNR approximations of the rate and, given a target rate, the outage.
    Asymptote(Common),
    /// Every quantity listed in `[sweep] outputs`.
    Sweep(Common),
    /// Quadrature against Monte Carlo at each point; exits 3 unless every |z| ≤ 3.
    Validate(Common),
    /// Monte Carlo estimates only.
    Mc(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Asr(_) => "asr",
            Command::Sop(_) => "sop",
            Command::Asymptote(_) => "asymptote",
            Command::Sweep(_) => "sweep",
            Command::Validate(_) => "validate",
            Command::Mc(_) => "mc",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Asr(c)
            | Command::Sop(c)
            | Command::Asymptote(c)
            | Command::Sweep(c)
            | Command::Validate(c)
            | Command::Mc(c) => c,
        }
    }

    fn outputs(&self) -> &'static [Output] {
        match self {
            Command::Asr(_) => &[Output::Asr, Output::ILim, Output::ICon],
            Command::Sop(_) => &[Output::Sop, Output::LimitSop, Output::PCon],
            Command::Asymptote(_) => &[Output::Asymptote],
            Command::Mc(_) => &[Output::Mc],
            Command::Sweep(_) | Command::Validate(_) => &[],
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    /// `Some(false)` for a failed validation.
    pub validation_passed: Option<bool>,
    pub summary: Option<String>,
}

pub fn load_config(common: &Common) -> Result<Config, CliError> {
    let mut config = Config::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.sweep.seed = seed;
    }
    if let Some(samples) = common.samples {
        if samples == 0 {
            return Err(CliError::Usage("--samples must be positive".into()));
        }
        config.sweep.samples = samples;
    }
    Ok(config)
}

/// Runs a command and renders its output. Nothing is written here, so a
/// failing run leaves no partial file behind.
pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    let common = command.common();
    let config = load_config(common)?;
    if let Command::Validate(_) = command {
        let plan = Plan::new(&config, &[], true)?;
        let report = sweep::run_validation(&config, &plan)?;
        let text = match common.format {
            Format::Csv => output::report_csv(&config, &report),
            Format::Json => output::report_json(&config, &report),
        };
        return Ok(Outcome {
            text,
            validation_passed: Some(report.passed()),
            summary: Some(output::summary_line(&report)),
        });
    }
    let plan = Plan::new(&config, command.outputs(), false)?;
    let table = sweep::run_sweep(&config, &plan)?;
    let text = match common.format {
        Format::Csv => output::sweep_csv(command.name(), &config, &table),
        Format::Json => output::sweep_json(command.name(), &config, &table),
    };
    Ok(Outcome { text, validation_passed: None, summary: None })
}

pub fn write_outcome(common: &Common, outcome: &Outcome) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, &outcome.text)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(outcome.text.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
