//! Monte Carlo estimators used as independent checks of the quadrature results.
//!
//! Random streams: shard `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(derive_seed(s, i))`, where `derive_seed` is two
//! rounds of the SplitMix64 finalizer. A run is therefore reproducible given
//! `(seed, n_samples, workers)`; the default is a single worker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::fading::MixtureSampler;
use crate::quadrature::{make_rule, RuleKind};
use crate::scalar::Real;
use crate::secrecy::SecrecyScenario;

pub const MIN_MI_SAMPLES: usize = 10_000;
pub const MIN_SECRECY_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Asr,
    Sop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// When false, the secrecy estimators accept fewer than
    /// [`MIN_SECRECY_SAMPLES`] draws (smoke runs; the standard error is wide).
    pub enforce_floor: bool,
}

impl McOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { n_samples, seed, workers: 1, enforce_floor: true }
    }

    pub fn without_sample_floor(mut self) -> Self {
        self.enforce_floor = false;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub value: T,
    /// Standard error of the mean.
    pub std_error: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> McEstimate<T> {
    /// `(reference − value) / std_error`; zero-width estimates give 0 on an
    /// exact match and ±∞ otherwise.
    pub fn z_score(&self, reference: T) -> T {
        let diff = reference - self.value;
        if self.std_error > T::zero() {
            diff / self.std_error
        } else if diff.abs() <= T::lit(1e-12) {
            T::zero()
        } else {
            diff.signum() * T::infinity()
        }
    }

    pub fn brackets(&self, reference: T, sigmas: T) -> bool {
        self.z_score(reference).abs() <= sigmas
    }
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(stream))
}

/// Running mean and sum of squared deviations (Welford), mergeable across shards.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Splits `opts.n_samples` across `opts.workers` streams and merges the
/// per-shard moments in shard order.
fn run_sharded<F>(opts: McOptions, draw: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let workers = opts.workers.max(1);
    let base = opts.n_samples / workers;
    let extra = opts.n_samples % workers;
    let shards: Vec<Moments> = (0..workers)
        .into_par_iter()
        .map(|i| {
            let count = base + usize::from(i < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, i as u64));
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    shards.into_iter().fold(Moments::default(), Moments::merge)
}

fn estimate<T: Real>(m: Moments, opts: McOptions) -> McEstimate<T> {
    McEstimate { value: T::lit(m.mean), std_error: T::lit(m.std_error()), n_samples: opts.n_samples, seed: opts.seed }
}

/// Binomial standard error `√(p(1-p)/n)` for indicator estimates.
fn binomial_estimate<T: Real>(m: Moments, opts: McOptions) -> McEstimate<T> {
    let p = m.mean;
    let se = (p * (1.0 - p) / m.n.max(1) as f64).max(0.0).sqrt();
    McEstimate { value: T::lit(p), std_error: T::lit(se), n_samples: opts.n_samples, seed: opts.seed }
}

/// Estimates I_M(γ) by sampling the received PAM amplitude directly:
/// `u ~ N(√γ p_j, ½)` with `j` uniform, averaging `2 log₂ Σ_k e^(-(u - √γ p_k)²)`.
pub fn mc_mutual_information<T: Real>(c: &Constellation<T>, gamma: T, opts: McOptions) -> Result<McEstimate<T>> {
    if opts.n_samples < MIN_MI_SAMPLES {
        return Err(invalid(format!("at least {MIN_MI_SAMPLES} samples required, got {}", opts.n_samples)));
    }
    if !(gamma >= T::zero()) {
        return Err(invalid(format!("SNR must be nonnegative, got {gamma}")));
    }
    let amp = gamma.to_f64_lossy().sqrt();
    let levels: Vec<f64> = c.pam_levels().iter().map(|p| p.to_f64_lossy()).collect();
    let side = levels.len();
    let noise_sd = 0.5_f64.sqrt();
    let m = run_sharded(opts, |rng| {
        let j = rng.random_range(0..side);
        let z: f64 = StandardNormal.sample(rng);
        let u = amp * levels[j] + noise_sd * z;
        let exps = levels.iter().map(|&pk| -(u - amp * pk).powi(2));
        let max = exps.clone().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + exps.map(|e| (e - max).exp()).sum::<f64>().ln();
        2.0 * lse * std::f64::consts::LOG2_E
    });
    let l_hat: McEstimate<T> = estimate(m, opts);
    let max_bits = c.max_bits();
    Ok(McEstimate { value: max_bits - T::LOG2_E() - l_hat.value, ..l_hat })
}

fn check_secrecy_samples(opts: McOptions) -> Result<()> {
    if opts.n_samples == 0 || (opts.enforce_floor && opts.n_samples < MIN_SECRECY_SAMPLES) {
        return Err(invalid(format!(
            "at least {MIN_SECRECY_SAMPLES} samples required, got {}",
            opts.n_samples
        )));
    }
    Ok(())
}

fn samplers<T: Real>(s: &SecrecyScenario<T>) -> Result<(MixtureSampler, MixtureSampler)> {
    Ok((s.main.sampler()?, s.eve.sampler()?))
}

fn secrecy_estimate<T, I>(s: &SecrecyScenario<T>, metric: Metric, opts: McOptions, rate: Option<T>, mi: I) -> Result<McEstimate<T>>
where
    T: Real,
    I: Fn(f64) -> f64 + Sync,
{
    check_secrecy_samples(opts)?;
    let (main, eve) = samplers(s)?;
    match metric {
        Metric::Asr => {
            let m = run_sharded(opts, |rng| {
                let gb = main.sample(rng);
                let ge = eve.sample(rng);
                (mi(gb) - mi(ge)).max(0.0)
            });
            Ok(estimate(m, opts))
        }
        Metric::Sop => {
            let rate = rate.ok_or_else(|| invalid("target secrecy rate is required for outage metrics"))?;
            if !(rate > T::zero()) {
                return Err(invalid(format!("target secrecy rate must be > 0, got {rate}")));
            }
            let r = rate.to_f64_lossy();
            let m = run_sharded(opts, |rng| {
                let gb = main.sample(rng);
                let ge = eve.sample(rng);
                f64::from(u8::from((mi(gb) - mi(ge)).max(0.0) < r))
            });
            Ok(binomial_estimate(m, opts))
        }
    }
}

/// Mean of `max(I_M(γ_B) − I_M(γ_E), 0)` over independent fading draws, with
/// I_M evaluated by the scenario's Gauss-Hermite rule.
pub fn mc_asr<T: Real>(s: &SecrecyScenario<T>, opts: McOptions) -> Result<McEstimate<T>> {
    let rule = make_rule::<T>(RuleKind::Hermite, s.precision.hermite_order)?;
    let c = &s.constellation;
    secrecy_estimate(s, Metric::Asr, opts, None, |g| c.mi_with_rule(T::lit(g), &rule).to_f64_lossy())
}

/// Frequency of `max(I_M(γ_B) − I_M(γ_E), 0) < R_s`.
pub fn mc_sop<T: Real>(s: &SecrecyScenario<T>, opts: McOptions) -> Result<McEstimate<T>> {
    let rate = s.target_rate;
    if let Some(r) = rate {
        if r >= s.constellation.max_bits() {
            check_secrecy_samples(opts)?;
            return Ok(McEstimate { value: T::one(), std_error: T::zero(), n_samples: opts.n_samples, seed: opts.seed });
        }
    }
    let rule = make_rule::<T>(RuleKind::Hermite, s.precision.hermite_order)?;
    let c = &s.constellation;
    secrecy_estimate(s, Metric::Sop, opts, rate, |g| c.mi_with_rule(T::lit(g), &rule).to_f64_lossy())
}

/// The same estimators with Gaussian signaling, `I(γ) = log₂(1 + γ)`.
pub fn mc_gaussian_baseline<T: Real>(s: &SecrecyScenario<T>, metric: Metric, opts: McOptions) -> Result<McEstimate<T>> {
    secrecy_estimate(s, metric, opts, s.target_rate, |g| g.ln_1p() * std::f64::consts::LOG2_E)
}

/// Dispatches to [`mc_asr`] or [`mc_sop`].
pub fn mc_metric<T: Real>(s: &SecrecyScenario<T>, metric: Metric, opts: McOptions) -> Result<McEstimate<T>> {
    match metric {
        Metric::Asr => mc_asr(s, opts),
        Metric::Sop => mc_sop(s, opts),
    }
}
