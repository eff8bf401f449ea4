//! Mixture-Gamma (MG) received-SNR distributions.
//!
//! A mixture is a list of `(α, β, ζ)` components with density
//! `f(γ) = Σ α γ^(β-1) e^(-ζγ)` and mass `Σ α Γ(β) ζ^(-β) = 1`. The Hoyt,
//! Generalized-K and κ-µ constructors build the θ coefficients from their
//! series (or Gauss-Laguerre) representation and always renormalize them, so
//! the mass invariant holds to rounding.

use std::fmt;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{make_rule, RuleKind};
use crate::scalar::{db_to_linear, log_sum_exp, Real};
use crate::special::{gamma_p, ln_gamma};

pub const HOYT_TERMS: usize = 20;
pub const KAPPA_MU_TERMS: usize = 20;
pub const GENERALIZED_K_TERMS: usize = 15;

/// Tolerance on total mass accepted for user-supplied mixtures.
pub const CUSTOM_MASS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaComponent<T> {
    pub alpha: T,
    /// Shape.
    pub beta: T,
    /// Rate.
    pub zeta: T,
}

impl<T: Real> GammaComponent<T> {
    /// Probability mass `α Γ(β) ζ^(-β)` carried by this component.
    pub fn weight(&self) -> T {
        if self.alpha <= T::zero() {
            return T::zero();
        }
        (self.alpha.ln() + ln_gamma(self.beta) - self.beta * self.zeta.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family<T> {
    Nakagami { m: T },
    Hoyt { q: T },
    GeneralizedK { k: T, m: T },
    KappaMu { kappa: T, mu: T },
    Custom,
}

impl<T: Real> Family<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Nakagami { .. } => "nakagami",
            Family::Hoyt { .. } => "hoyt",
            Family::GeneralizedK { .. } => "generalized_k",
            Family::KappaMu { .. } => "kappa_mu",
            Family::Custom => "custom",
        }
    }
}

impl<T: Real> fmt::Display for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Nakagami { m } => write!(f, "nakagami(m={m})"),
            Family::Hoyt { q } => write!(f, "hoyt(q={q})"),
            Family::GeneralizedK { k, m } => write!(f, "generalized_k(k={k}, m={m})"),
            Family::KappaMu { kappa, mu } => write!(f, "kappa_mu(kappa={kappa}, mu={mu})"),
            Family::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureGamma<T> {
    components: Vec<GammaComponent<T>>,
    avg_snr: T,
    family: Family<T>,
}

/// One `Φ γ^Λ γ̄^(-Ψ)` term of the high-SNR CDF expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTerm<T> {
    pub phi: T,
    pub lambda: T,
    pub psi: T,
}

/// High-SNR expansion `F(γ) ≈ Σ Φ_l γ^Λ_l γ̄^(-Ψ_l)`, terms sorted by Ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticExpansion<T> {
    terms: Vec<AsymptoticTerm<T>>,
}

impl<T: Real> AsymptoticExpansion<T> {
    pub fn new(mut terms: Vec<AsymptoticTerm<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("asymptotic expansion needs at least one term"));
        }
        if terms.iter().any(|t| !(t.phi > T::zero() && t.lambda > T::zero() && t.psi > T::zero())) {
            return Err(invalid("asymptotic expansion terms must be strictly positive"));
        }
        terms.sort_by(|a, b| {
            a.psi
                .partial_cmp(&b.psi)
                .unwrap()
                .then(a.lambda.partial_cmp(&b.lambda).unwrap())
        });
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[AsymptoticTerm<T>] {
        &self.terms
    }

    /// Ψ₁, the smallest exponent of the average SNR.
    pub fn dominant_psi(&self) -> T {
        self.terms[0].psi
    }

    /// Terms sharing the dominant exponent Ψ₁.
    pub fn dominant_terms(&self) -> impl Iterator<Item = &AsymptoticTerm<T>> {
        let psi = self.dominant_psi();
        self.terms.iter().filter(move |t| t.psi == psi)
    }

    pub fn cdf_approx(&self, gamma: T, avg_snr: T) -> T {
        self.terms
            .iter()
            .map(|t| t.phi * gamma.powf(t.lambda) * avg_snr.powf(-t.psi))
            .sum()
    }
}

impl<T: Real> MixtureGamma<T> {
    /// Nakagami-m: a single Gamma(m, γ̄/m) component.
    pub fn nakagami(m: T, avg_snr: T) -> Result<Self> {
        if !(m >= T::lit(0.5)) {
            return Err(invalid(format!("Nakagami shape m must be >= 0.5, got {m}")));
        }
        check_avg_snr(avg_snr)?;
        let alpha = (m * m.ln() - m * avg_snr.ln() - ln_gamma(m)).exp();
        Ok(Self {
            components: vec![GammaComponent { alpha, beta: m, zeta: m / avg_snr }],
            avg_snr,
            family: Family::Nakagami { m },
        })
    }

    /// Hoyt (Nakagami-q), truncated modified-Bessel series with 20 terms.
    pub fn hoyt(q: T, avg_snr: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(invalid(format!("Hoyt q must lie in (0, 1), got {q}")));
        }
        check_avg_snr(avg_snr)?;
        let q2 = q * q;
        let zeta = (T::one() + q2).powi(2) / (T::lit(4.0) * q2 * avg_snr);
        let ln_ratio = ((T::one() - q2 * q2) / (T::lit(8.0) * q2 * avg_snr)).ln();
        let ln_lead = (T::one() + q2).ln() - (T::lit(2.0) * q * avg_snr).ln();
        let raw = (1..=HOYT_TERMS).map(|l| {
            let lf = T::from_usize_lossy(l);
            let ln_fact = ln_gamma(lf);
            let ln_theta = ln_lead - T::lit(2.0) * ln_fact + T::lit(2.0) * (lf - T::one()) * ln_ratio;
            (ln_theta, T::lit(2.0) * lf - T::one(), zeta)
        });
        Ok(Self {
            components: normalized(raw.collect()),
            avg_snr,
            family: Family::Hoyt { q },
        })
    }

    /// Generalized-K (Gamma-shadowed Gamma fading) via a 15-point Gauss-Laguerre
    /// discretization of the shadowing integral.
    pub fn generalized_k(k: T, m: T, avg_snr: T) -> Result<Self> {
        if !(k > T::zero() && m > T::zero()) {
            return Err(invalid(format!("Generalized-K needs k > 0 and m > 0, got k={k}, m={m}")));
        }
        check_avg_snr(avg_snr)?;
        let rule = make_rule::<T>(RuleKind::Laguerre, GENERALIZED_K_TERMS)?;
        let lambda = k * m / avg_snr;
        let ln_lead = m * lambda.ln() - ln_gamma(m) - ln_gamma(k);
        // τ^(k-m-1) is formed in log space; it can be huge or tiny at the
        // extreme nodes.
        let raw = rule
            .iter()
            .map(|(tau, w)| (ln_lead + w.ln() + (k - m - T::one()) * tau.ln(), m, lambda / tau))
            .collect();
        Ok(Self {
            components: normalized(raw),
            avg_snr,
            family: Family::GeneralizedK { k, m },
        })
    }

    /// κ-µ, truncated modified-Bessel series with 20 terms.
    pub fn kappa_mu(kappa: T, mu: T, avg_snr: T) -> Result<Self> {
        if !(kappa > T::zero() && mu > T::zero()) {
            return Err(invalid(format!("kappa-mu needs kappa > 0 and mu > 0, got kappa={kappa}, mu={mu}")));
        }
        check_avg_snr(avg_snr)?;
        let zeta = mu * (T::one() + kappa) / avg_snr;
        let raw = (1..=KAPPA_MU_TERMS)
            .map(|l| {
                let lf = T::from_usize_lossy(l);
                let beta = mu - T::one() + lf;
                let ln_theta = (T::lit(2.0) * lf + mu - T::lit(2.0)) * mu.ln()
                    + beta * (T::one() + kappa).ln()
                    + (lf - T::one()) * kappa.ln()
                    - mu * kappa
                    - beta * avg_snr.ln()
                    - ln_gamma(beta)
                    - ln_gamma(lf);
                (ln_theta, beta, zeta)
            })
            .collect();
        Ok(Self {
            components: normalized(raw),
            avg_snr,
            family: Family::KappaMu { kappa, mu },
        })
    }

    /// User-supplied mixture; rejected unless its mass is within `tolerance` of one.
    pub fn custom(components: Vec<GammaComponent<T>>, avg_snr: T, tolerance: T) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.alpha > T::zero() && c.beta > T::zero() && c.zeta > T::zero()) {
                return Err(invalid(format!("component {i}: alpha, beta and zeta must be positive")));
            }
        }
        check_avg_snr(avg_snr)?;
        let mix = Self { components, avg_snr, family: Family::Custom };
        let mass = mix.total_mass();
        if (mass - T::one()).abs() > tolerance || !mass.is_finite() {
            return Err(Error::NotNormalized {
                mass: mass.to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        Ok(mix)
    }

    /// Reads a custom mixture from a TOML file:
    ///
    /// ```toml
    /// avg_snr_db = 3.0
    /// [[component]]
    /// alpha = 1.0
    /// beta = 1.0
    /// zeta = 0.5
    /// ```
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Triple {
            alpha: f64,
            beta: f64,
            zeta: f64,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct MixtureFile {
            avg_snr_db: f64,
            component: Vec<Triple>,
        }
        let file: MixtureFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let components = file
            .component
            .iter()
            .map(|t| GammaComponent { alpha: T::lit(t.alpha), beta: T::lit(t.beta), zeta: T::lit(t.zeta) })
            .collect();
        Self::custom(components, db_to_linear(T::lit(file.avg_snr_db)), T::lit(CUSTOM_MASS_TOLERANCE))
    }

    /// Same family and shape parameters at a different average SNR.
    pub fn with_avg_snr(&self, avg_snr: T) -> Result<Self> {
        match self.family {
            Family::Nakagami { m } => Self::nakagami(m, avg_snr),
            Family::Hoyt { q } => Self::hoyt(q, avg_snr),
            Family::GeneralizedK { k, m } => Self::generalized_k(k, m, avg_snr),
            Family::KappaMu { kappa, mu } => Self::kappa_mu(kappa, mu, avg_snr),
            Family::Custom => {
                check_avg_snr(avg_snr)?;
                // γ → cγ maps ζ → ζ/c and α → α c^(-β).
                let c = avg_snr / self.avg_snr;
                let components = self
                    .components
                    .iter()
                    .map(|g| GammaComponent { alpha: g.alpha * c.powf(-g.beta), beta: g.beta, zeta: g.zeta / c })
                    .collect();
                Ok(Self { components, avg_snr, family: Family::Custom })
            }
        }
    }

    pub fn components(&self) -> &[GammaComponent<T>] {
        &self.components
    }

    pub fn avg_snr(&self) -> T {
        self.avg_snr
    }

    pub fn family(&self) -> Family<T> {
        self.family
    }

    pub fn family_tag(&self) -> &'static str {
        self.family.tag()
    }

    /// `Σ α Γ(β) ζ^(-β)`; one for a valid mixture.
    pub fn total_mass(&self) -> T {
        self.components.iter().map(GammaComponent::weight).sum()
    }

    pub fn mean(&self) -> T {
        self.components.iter().map(|c| c.weight() * c.beta / c.zeta).sum()
    }

    /// Density at `γ ≥ 0`. At `γ = 0` a component with `β < 1` is singular and
    /// the result is `+∞`.
    pub fn pdf(&self, gamma: T) -> T {
        if gamma < T::zero() {
            return T::zero();
        }
        if gamma == T::zero() {
            return self
                .components
                .iter()
                .map(|c| {
                    if c.beta < T::one() {
                        T::infinity()
                    } else if c.beta == T::one() {
                        c.alpha
                    } else {
                        T::zero()
                    }
                })
                .sum();
        }
        let ln_g = gamma.ln();
        self.components
            .iter()
            .filter(|c| c.alpha > T::zero())
            .map(|c| (c.alpha.ln() + (c.beta - T::one()) * ln_g - c.zeta * gamma).exp())
            .sum()
    }

    /// True when the density diverges at the origin (some component has β < 1).
    pub fn pdf_singular_at_zero(&self) -> bool {
        self.components.iter().any(|c| c.beta < T::one())
    }

    pub fn cdf(&self, gamma: T) -> T {
        if gamma <= T::zero() {
            return T::zero();
        }
        let s: T = self
            .components
            .iter()
            .map(|c| c.weight() * gamma_p(c.beta, c.zeta * gamma))
            .sum();
        s.max(T::zero()).min(T::one())
    }

    /// High-SNR CDF expansion for the four supported families.
    pub fn asymptotic_expansion(&self) -> Result<AsymptoticExpansion<T>> {
        let term = |phi, lambda, psi| AsymptoticTerm { phi, lambda, psi };
        let terms = match self.family {
            Family::Nakagami { m } => {
                vec![term(((m - T::one()) * m.ln() - ln_gamma(m)).exp(), m, m)]
            }
            Family::Hoyt { q } => vec![term((q + q.recip()) / T::lit(2.0), T::one(), T::one())],
            Family::GeneralizedK { k, m } => {
                let rule = make_rule::<T>(RuleKind::Laguerre, GENERALIZED_K_TERMS)?;
                let ln_lead = m * k.ln() + (m - T::one()) * m.ln() - ln_gamma(m) - ln_gamma(k);
                rule.iter()
                    .map(|(tau, w)| term((ln_lead + w.ln() + (k - m - T::one()) * tau.ln()).exp(), m, m))
                    .collect()
            }
            Family::KappaMu { kappa, mu } => {
                let ln_phi = (mu - T::one()) * mu.ln() + mu * (T::one() + kappa).ln() - ln_gamma(mu) - kappa * mu;
                vec![term(ln_phi.exp(), mu, mu)]
            }
            Family::Custom => return Err(Error::UnsupportedFamily(self.family_tag().to_string())),
        };
        AsymptoticExpansion::new(terms)
    }

    /// A sampler drawing component `l` with probability `α_l Γ(β_l) ζ_l^(-β_l)`
    /// and then `Gamma(shape β_l, rate ζ_l)`.
    pub fn sampler(&self) -> Result<MixtureSampler> {
        let weights: Vec<f64> = self.components.iter().map(|c| c.weight().to_f64_lossy()).collect();
        let index = WeightedIndex::new(&weights).map_err(|e| Error::Numerical(format!("mixture weights: {e}")))?;
        let gammas = self
            .components
            .iter()
            .map(|c| Gamma::new(c.beta.to_f64_lossy(), 1.0 / c.zeta.to_f64_lossy()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Numerical(format!("gamma component: {e}")))?;
        Ok(MixtureSampler { index, gammas })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<T>> {
        if count == 0 {
            return Err(invalid("sample count must be >= 1"));
        }
        let sampler = self.sampler()?;
        Ok((0..count).map(|_| T::lit(sampler.sample(rng))).collect())
    }
}

#[derive(Debug, Clone)]
pub struct MixtureSampler {
    index: WeightedIndex<f64>,
    gammas: Vec<Gamma<f64>>,
}

impl Distribution<f64> for MixtureSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let l = self.index.sample(rng);
        self.gammas[l].sample(rng)
    }
}

fn check_avg_snr<T: Real>(avg_snr: T) -> Result<()> {
    if avg_snr > T::zero() && avg_snr.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("average SNR must be positive and finite, got {avg_snr}")))
    }
}

/// Applies ψ(θ, β, ζ) = θ / Σ θ_j Γ(β_j) ζ_j^(-β_j) to `(ln θ, β, ζ)` triples.
fn normalized<T: Real>(raw: Vec<(T, T, T)>) -> Vec<GammaComponent<T>> {
    let ln_mass: Vec<T> = raw
        .iter()
        .map(|&(ln_theta, beta, zeta)| ln_theta + ln_gamma(beta) - beta * zeta.ln())
        .collect();
    let ln_norm = log_sum_exp(&ln_mass);
    raw.into_iter()
        .map(|(ln_theta, beta, zeta)| GammaComponent { alpha: (ln_theta - ln_norm).exp(), beta, zeta })
        .collect()
}
