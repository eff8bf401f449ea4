//! Sweep configuration.
//!
//! ```toml
//! [main]
//! family = "nakagami"        # nakagami | hoyt | generalized_k | kappa_mu | custom
//! m = 2.0
//!
//! [[eve]]                    # a single [eve] table is also accepted
//! family = "nakagami"
//! m = 2.0
//! avg_snr_db = [0.0, 5.0]    # scalar or list; each value is its own group
//!
//! [constellation]
//! orders = [4, 16]
//!
//! [sweep]
//! points_db = [0.0, 10.0, 20.0]
//! outputs = ["asr", "i_lim", "mc"]
//! target_rate = 1.0          # required by outage outputs
//! mc_metric = "asr"          # optional; inferred from outputs
//! samples = 100000
//! seed = 1
//!
//! [precision]
//! hermite = 20
//! laguerre = 30
//! legendre = 30
//! ```
//!
//! The main-link average SNR is the sweep axis, so `[main]` carries no
//! `avg_snr_db`. Custom mixtures name a file (see `MixtureGamma::load`)
//! relative to the config file.

use std::path::{Path, PathBuf};

use mgsec::montecarlo::MIN_SECRECY_SAMPLES;
use mgsec::quadrature::MAX_ORDER;
use mgsec::{db_to_linear, Constellation64, MixtureGamma64, Precision};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Asr,
    ILim,
    ICon,
    Sop,
    LimitSop,
    PCon,
    Asymptote,
    Mc,
    GaussianBaseline,
}

impl Output {
    pub fn is_rate(self) -> bool {
        matches!(self, Output::Asr | Output::ILim | Output::ICon)
    }

    pub fn is_outage(self) -> bool {
        matches!(self, Output::Sop | Output::LimitSop | Output::PCon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum McMetric {
    Asr,
    Sop,
}

impl From<McMetric> for mgsec::Metric {
    fn from(m: McMetric) -> Self {
        match m {
            McMetric::Asr => mgsec::Metric::Asr,
            McMetric::Sop => mgsec::Metric::Sop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum DbValues {
    One(f64),
    Many(Vec<f64>),
}

impl DbValues {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            DbValues::One(v) => vec![*v],
            DbValues::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_snr_db: Option<DbValues>,
}

impl FadingSpec {
    fn required_keys(&self) -> Option<&'static [&'static str]> {
        Some(match self.family.as_str() {
            "nakagami" => &["m"],
            "hoyt" => &["q"],
            "generalized_k" => &["k", "m"],
            "kappa_mu" => &["kappa", "mu"],
            "custom" => &["file"],
            _ => return None,
        })
    }

    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        for (key, set) in [
            ("k", self.k.is_some()),
            ("m", self.m.is_some()),
            ("q", self.q.is_some()),
            ("kappa", self.kappa.is_some()),
            ("mu", self.mu.is_some()),
            ("file", self.file.is_some()),
        ] {
            if set {
                keys.push(key);
            }
        }
        keys
    }

    /// Human-readable family and shape, e.g. `nakagami(m=2)`.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self
            .present_keys()
            .into_iter()
            .map(|key| match key {
                "k" => format!("k={}", self.k.unwrap_or_default()),
                "m" => format!("m={}", self.m.unwrap_or_default()),
                "q" => format!("q={}", self.q.unwrap_or_default()),
                "kappa" => format!("kappa={}", self.kappa.unwrap_or_default()),
                "mu" => format!("mu={}", self.mu.unwrap_or_default()),
                _ => format!("file={}", self.file.as_deref().unwrap_or(Path::new("")).display()),
            })
            .collect();
        format!("{}({})", self.family, params.join(", "))
    }

    /// Builds the distribution at a linear average SNR.
    pub fn build(&self, avg_snr: f64, base_dir: &Path) -> mgsec::Result<MixtureGamma64> {
        let p = |v: Option<f64>| v.unwrap_or(f64::NAN);
        match self.family.as_str() {
            "nakagami" => MixtureGamma64::nakagami(p(self.m), avg_snr),
            "hoyt" => MixtureGamma64::hoyt(p(self.q), avg_snr),
            "generalized_k" => MixtureGamma64::generalized_k(p(self.k), p(self.m), avg_snr),
            "kappa_mu" => MixtureGamma64::kappa_mu(p(self.kappa), p(self.mu), avg_snr),
            "custom" => {
                let file = self.file.as_deref().unwrap_or(Path::new(""));
                MixtureGamma64::load(base_dir.join(file))?.with_avg_snr(avg_snr)
            }
            other => Err(mgsec::Error::InvalidArgument(format!("unknown fading family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    pub orders: Vec<usize>,
}

fn default_samples() -> usize {
    MIN_SECRECY_SAMPLES
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub points_db: Vec<f64>,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_metric: Option<McMetric>,
    /// Rate handed to the Monte Carlo estimator instead of `target_rate`.
    /// Exists for negative-control validation runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_target_rate: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Recorded on its own header line, since TOML integers stop at i64.
    #[serde(default = "default_seed", skip_serializing)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSection {
    #[serde(default = "default_hermite")]
    pub hermite: usize,
    #[serde(default = "default_laguerre")]
    pub laguerre: usize,
    #[serde(default = "default_legendre")]
    pub legendre: usize,
}

fn default_hermite() -> usize {
    Precision::default().hermite_order
}

fn default_laguerre() -> usize {
    Precision::default().laguerre_order
}

fn default_legendre() -> usize {
    Precision::default().legendre_order
}

impl Default for PrecisionSection {
    fn default() -> Self {
        Self { hermite: default_hermite(), laguerre: default_laguerre(), legendre: default_legendre() }
    }
}

impl From<PrecisionSection> for Precision {
    fn from(p: PrecisionSection) -> Self {
        Precision { hermite_order: p.hermite, laguerre_order: p.laguerre, legendre_order: p.legendre }
    }
}

/// A parsed and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub main: FadingSpec,
    pub eve: Vec<FadingSpec>,
    pub constellation: ConstellationSection,
    pub sweep: SweepSection,
    pub precision: PrecisionSection,
    #[serde(skip)]
    pub path: String,
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    main: FadingSpec,
    eve: toml::Value,
    constellation: ConstellationSection,
    sweep: SweepSection,
    #[serde(default)]
    precision: PrecisionSection,
}

fn representable_db(db: f64) -> bool {
    let linear = db_to_linear(db);
    linear.is_finite() && linear > 0.0
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            at: Location { path: display.clone(), line: None },
            message: format!("cannot read config: {e}"),
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &display, base_dir)
    }

    pub fn parse(text: &str, path: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config {
            at: Location { path: path.to_string(), line: e.span().map(|s| line_of_offset(text, s.start)) },
            message: e.message().to_string(),
        })?;
        let mut config = Config {
            main: raw.main,
            eve: Vec::new(),
            constellation: raw.constellation,
            sweep: raw.sweep,
            precision: raw.precision,
            path: path.to_string(),
            base_dir,
            source: text.to_string(),
        };
        config.eve = match raw.eve {
            toml::Value::Array(items) => items
                .into_iter()
                .enumerate()
                .map(|(i, v)| v.try_into().map_err(|e: toml::de::Error| config.error(Some(("eve", i)), None, e.message())))
                .collect::<Result<_, _>>()?,
            table @ toml::Value::Table(_) => {
                vec![table.try_into().map_err(|e: toml::de::Error| config.error(Some(("eve", 0)), None, e.message()))?]
            }
            _ => return Err(config.error(None, Some("eve"), "`eve` must be a table or an array of tables")),
        };
        config.validate()?;
        Ok(config)
    }

    /// Builds an error pointing at `key` inside `section` (the n-th table of
    /// that name), falling back to the section header or the file itself.
    pub(crate) fn error(&self, section: Option<(&str, usize)>, key: Option<&str>, message: impl Into<String>) -> CliError {
        CliError::Config {
            at: Location { path: self.path.clone(), line: self.locate(section, key) },
            message: message.into(),
        }
    }

    fn locate(&self, section: Option<(&str, usize)>, key: Option<&str>) -> Option<usize> {
        let lines: Vec<&str> = self.source.lines().collect();
        let is_key = |line: &str, key: &str| {
            line.trim_start().strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        };
        let Some((name, index)) = section else {
            return key.and_then(|k| lines.iter().position(|l| is_key(l, k)).map(|i| i + 1));
        };
        let headers = [format!("[{name}]"), format!("[[{name}]]")];
        let start = lines
            .iter()
            .enumerate()
            .filter(|(_, l)| headers.iter().any(|h| l.trim() == h))
            .nth(index)
            .map(|(i, _)| i)?;
        let Some(key) = key else { return Some(start + 1) };
        let found = lines[start + 1..]
            .iter()
            .take_while(|l| !l.trim_start().starts_with('['))
            .position(|l| is_key(l, key))
            .map(|i| start + 2 + i);
        found.or(Some(start + 1))
    }

    fn validate_fading(&self, fading: &FadingSpec, section: (&str, usize)) -> Result<(), CliError> {
        let Some(required) = fading.required_keys() else {
            return Err(self.error(
                Some(section),
                Some("family"),
                format!(
                    "unknown fading family `{}` (expected nakagami, hoyt, generalized_k, kappa_mu or custom)",
                    fading.family
                ),
            ));
        };
        for key in required {
            if !fading.present_keys().contains(key) {
                return Err(self.error(
                    Some(section),
                    Some("family"),
                    format!("family `{}` requires `{key}`", fading.family),
                ));
            }
        }
        for key in fading.present_keys() {
            if !required.contains(&key) {
                return Err(self.error(
                    Some(section),
                    Some(key),
                    format!("`{key}` is not a parameter of family `{}`", fading.family),
                ));
            }
        }
        fading.build(1.0, &self.base_dir)
            .map(|_| ())
            .map_err(|e| self.error(Some(section), Some("family"), format!("{}: {e}", fading.describe())))
    }

    fn validate(&self) -> Result<(), CliError> {
        self.validate_fading(&self.main, ("main", 0))?;
        if self.main.avg_snr_db.is_some() {
            return Err(self.error(
                Some(("main", 0)),
                Some("avg_snr_db"),
                "the main-link SNR is the sweep axis; set it through [sweep] points_db",
            ));
        }
        if self.eve.is_empty() {
            return Err(self.error(None, Some("eve"), "at least one eavesdropper link is required"));
        }
        for (i, eve) in self.eve.iter().enumerate() {
            self.validate_fading(eve, ("eve", i))?;
            let Some(values) = &eve.avg_snr_db else {
                return Err(self.error(Some(("eve", i)), None, "eavesdropper link requires `avg_snr_db`"));
            };
            let values = values.to_vec();
            if values.is_empty() || values.iter().any(|&v| !representable_db(v)) {
                return Err(self.error(
                    Some(("eve", i)),
                    Some("avg_snr_db"),
                    "`avg_snr_db` must be one or more dB values with a positive, finite linear SNR",
                ));
            }
        }

        let orders = &self.constellation.orders;
        if orders.is_empty() {
            return Err(self.error(Some(("constellation", 0)), Some("orders"), "`orders` must not be empty"));
        }
        for &m in orders {
            if let Err(e) = Constellation64::square_qam(m) {
                return Err(self.error(Some(("constellation", 0)), Some("orders"), e.to_string()));
            }
        }

        let sweep = &self.sweep;
        let at_sweep = |key: &str, msg: String| self.error(Some(("sweep", 0)), Some(key), msg);
        if sweep.points_db.is_empty() {
            return Err(at_sweep("points_db", "`points_db` must not be empty".into()));
        }
        if let Some(v) = sweep.points_db.iter().find(|&&v| !representable_db(v)) {
            return Err(at_sweep("points_db", format!("{v} dB is outside the representable SNR range")));
        }
        if let Some(w) = sweep.points_db.windows(2).find(|w| w[1] <= w[0]) {
            return Err(at_sweep(
                "points_db",
                format!("`points_db` must be strictly increasing ({} is followed by {})", w[0], w[1]),
            ));
        }
        for (key, rate) in [("target_rate", sweep.target_rate), ("mc_target_rate", sweep.mc_target_rate)] {
            if let Some(r) = rate {
                if !(r.is_finite() && r > 0.0) {
                    return Err(at_sweep(key, format!("`{key}` must be a positive number of bits, got {r}")));
                }
            }
        }
        if sweep.samples == 0 {
            return Err(at_sweep("samples", "`samples` must be positive".into()));
        }

        let p = self.precision;
        for (key, n) in [("hermite", p.hermite), ("laguerre", p.laguerre), ("legendre", p.legendre)] {
            if !(1..=MAX_ORDER).contains(&n) {
                return Err(self.error(
                    Some(("precision", 0)),
                    Some(key),
                    format!("`{key}` order must lie in 1..={MAX_ORDER}, got {n}"),
                ));
            }
        }
        Ok(())
    }

    /// The config as TOML, with every default filled in.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }
}
