//! Average secrecy rate (ASR) and secrecy outage probability (SOP) of square
//! M-QAM over a mixture-Gamma wiretap channel, plus their high-SNR limits and
//! rates of convergence as the main-channel average SNR grows.
//!
//! Explicit metrics:
//! * ASR = I₃ − I₂ − I₁ with `I₃ = E_E[L]`, `I₂ = E_E[L F_B]`, `I₁ = E_B[L F_E]`.
//!   I₃ and I₂ are Gauss-Laguerre sums per mixture component. I₁ is not: its
//!   Laguerre nodes sit on the main-channel scale and step straight over the
//!   region where L varies once γ̄_B ≫ 1. Integrating by parts gives
//!   `I₁ + I₂ = −log₂e + I_con` with `I_con = ∫ F_B F_E dI_M`, a bounded
//!   integrand that a composite Gauss-Legendre rule on geometric panels
//!   resolves at any SNR, so I₁ is recovered from that identity.
//! * SOP = 1 − F_E(H_M) + ∫₀^H_M F_B(F_M(y)) f_E(y) dy by Gauss-Legendre, with
//!   `H_M = I⁻¹(log₂M − R_s)` and `F_M(y) = I⁻¹(R_s + I(y))`. F_M grows like
//!   `−ln(H_M − y)`, so `F_B(F_M(y))` behaves as `1 − (H_M − y)^ε` with small
//!   ε at high γ̄_B. The panels therefore halve in width toward H_M.
//!
//! Asymptotics (γ̄_B → ∞ at fixed γ̄_E):
//! * `asr ≈ I_lim − G_a γ̄_B^(-G_d)`, `G_a = Σ_{Ψ_l = Ψ₁} Θ_l Φ_l`,
//!   `Θ_l = ∫ γ^Λ_l F_E(γ) dI_M(γ)`.
//! * `sop ≈ 1 − F_E(H_M) + G'_a γ̄_B^(-G_d)`, `G'_a = Σ_{Ψ_l = Ψ₁} Δ_l Φ_l`,
//!   `Δ_l = ∫₀^H_M F_M(γ)^Λ_l f_E(γ) dγ`.

use std::sync::Arc;

use crate::constellation::{Constellation, DEFAULT_HERMITE_ORDER};
use crate::error::{invalid, Error, Result};
use crate::fading::MixtureGamma;
use crate::quadrature::{make_rule, QuadratureRule, RuleKind};
use crate::scalar::Real;

pub const DEFAULT_LAGUERRE_ORDER: usize = 30;
pub const DEFAULT_LEGENDRE_ORDER: usize = 30;
/// Bisection tolerance (bits) for each F_M evaluation inside the SOP.
pub const SOP_BISECTION_TOL: f64 = 1e-10;

/// Legendre order for the Δ integrals.
pub const COEFFICIENT_LEGENDRE_ORDER: usize = 200;
/// MMSE level at which the Θ integrand is truncated.
pub const THETA_MMSE_CUTOFF: f64 = 1e-12;
const THETA_CUT_START: f64 = 50.0;
const THETA_CUT_MAX: f64 = 1e6;
/// Legendre order on each geometric panel of the `∫ · dI_M` integrals.
pub const PANEL_LEGENDRE_ORDER: usize = 20;
/// Panels halve from the cutoff down to `cutoff · 2^-PANEL_COUNT`.
const PANEL_COUNT: usize = 64;
/// Panels of the outage integral, halving toward H_M.
const OUTAGE_PANEL_COUNT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    pub hermite_order: usize,
    pub laguerre_order: usize,
    pub legendre_order: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            hermite_order: DEFAULT_HERMITE_ORDER,
            laguerre_order: DEFAULT_LAGUERRE_ORDER,
            legendre_order: DEFAULT_LEGENDRE_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyScenario<T> {
    pub main: MixtureGamma<T>,
    pub eve: MixtureGamma<T>,
    pub constellation: Constellation<T>,
    pub precision: Precision,
    /// Preset secrecy rate R_s in bits; only needed for SOP.
    pub target_rate: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrResult<T> {
    pub asr: T,
    pub i_lim: T,
    pub i1: T,
    pub i2: T,
    pub i3: T,
}

impl<T: Real> AsrResult<T> {
    /// `I_con = I_lim − ASR`, the gap to the high-SNR limit.
    pub fn i_con(&self) -> T {
        self.i_lim - self.asr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopResult<T> {
    pub sop: T,
    /// Eve SNR threshold H_M above which outage is certain.
    pub h_m: T,
    /// `1 − F_E(H_M)`, the high-SNR floor of the SOP.
    pub limit_sop: T,
    /// Set when `R_s ≥ log₂ M`: the secrecy rate can never reach R_s.
    pub degenerate: bool,
}

impl<T: Real> SopResult<T> {
    /// `P_con = SOP − (1 − F_E(H_M))`.
    pub fn p_con(&self) -> T {
        self.sop - self.limit_sop
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticAsr<T> {
    pub i_lim: T,
    pub g_a: T,
    pub g_d: T,
    /// Θ_l for every expansion term, in expansion order.
    pub theta: Vec<T>,
}

impl<T: Real> AsymptoticAsr<T> {
    /// `I_lim − G_a γ̄_B^(-G_d)`.
    pub fn asr_at(&self, avg_snr_main: T) -> T {
        self.i_lim - self.i_con_at(avg_snr_main)
    }

    pub fn i_con_at(&self, avg_snr_main: T) -> T {
        self.g_a * avg_snr_main.powf(-self.g_d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSop<T> {
    pub limit_sop: T,
    pub g_a: T,
    pub g_d: T,
    pub h_m: T,
    /// Δ_l for every expansion term, in expansion order.
    pub delta: Vec<T>,
}

impl<T: Real> AsymptoticSop<T> {
    /// `1 − F_E(H_M) + G'_a γ̄_B^(-G_d)`.
    pub fn sop_at(&self, avg_snr_main: T) -> T {
        self.limit_sop + self.p_con_at(avg_snr_main)
    }

    pub fn p_con_at(&self, avg_snr_main: T) -> T {
        self.g_a * avg_snr_main.powf(-self.g_d)
    }
}

/// Both sets of asymptotic coefficients for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSecrecy<T> {
    pub g_d: T,
    pub g_a_asr: T,
    pub g_a_sop: Option<T>,
    pub theta: Vec<T>,
    pub delta: Vec<T>,
}

struct Rules<T> {
    hermite: Arc<QuadratureRule<T>>,
    laguerre: Arc<QuadratureRule<T>>,
    legendre: Arc<QuadratureRule<T>>,
}

impl<T: Real> SecrecyScenario<T> {
    pub fn new(main: MixtureGamma<T>, eve: MixtureGamma<T>, constellation: Constellation<T>) -> Self {
        Self { main, eve, constellation, precision: Precision::default(), target_rate: None }
    }

    pub fn with_target_rate(mut self, rate: T) -> Self {
        self.target_rate = Some(rate);
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    /// Copy with the main channel moved to a new average SNR.
    pub fn with_main_avg_snr(&self, avg_snr: T) -> Result<Self> {
        Ok(Self { main: self.main.with_avg_snr(avg_snr)?, ..self.clone() })
    }

    pub fn with_eve_avg_snr(&self, avg_snr: T) -> Result<Self> {
        Ok(Self { eve: self.eve.with_avg_snr(avg_snr)?, ..self.clone() })
    }

    fn rules(&self) -> Result<Rules<T>> {
        let p = self.precision;
        Ok(Rules {
            hermite: make_rule(RuleKind::Hermite, p.hermite_order)?,
            laguerre: make_rule(RuleKind::Laguerre, p.laguerre_order)?,
            legendre: make_rule(RuleKind::Legendre, p.legendre_order)?,
        })
    }

    fn rate(&self) -> Result<T> {
        match self.target_rate {
            Some(r) if r > T::zero() => Ok(r),
            Some(r) => Err(invalid(format!("target secrecy rate must be > 0, got {r}"))),
            None => Err(invalid("target secrecy rate is required for outage metrics")),
        }
    }

    /// Explicit ASR.
    pub fn asr(&self) -> Result<AsrResult<T>> {
        let rules = self.rules()?;
        let c = &self.constellation;
        let l = |x: T| c.l_with_rule(x, &rules.hermite);
        let i3 = laguerre_expectation(&self.eve, &rules.laguerre, l);
        let i2 = laguerre_expectation(&self.eve, &rules.laguerre, |y| l(y) * self.main.cdf(y));
        let i_con = self.i_con_integral(&rules.hermite)?;
        let i1 = i_con - T::LOG2_E() - i2;
        let asr = (i3 - i2 - i1).max(T::zero());
        Ok(AsrResult { asr, i_lim: T::LOG2_E() + i3, i1, i2, i3 })
    }

    /// `I_con = log₂e ∫ F_B F_E MMSE dγ` over geometric panels.
    fn i_con_integral(&self, hermite: &QuadratureRule<T>) -> Result<T> {
        let c = &self.constellation;
        let cut = self.theta_cutoff(hermite);
        let panel = make_rule::<T>(RuleKind::Legendre, PANEL_LEGENDRE_ORDER)?;
        let v = geometric_integral(cut, &panel, |g| {
            self.main.cdf(g) * self.eve.cdf(g) * c.mmse_with_rule(g, hermite)
        });
        Ok(v * T::LOG2_E())
    }

    /// `I_lim = log₂M − E[I_M(γ_E)]`, the ASR ceiling as γ̄_B → ∞.
    pub fn i_lim(&self) -> Result<T> {
        let rules = self.rules()?;
        let c = &self.constellation;
        let i3 = laguerre_expectation(&self.eve, &rules.laguerre, |y| c.l_with_rule(y, &rules.hermite));
        Ok(T::LOG2_E() + i3)
    }

    /// H_M to full bracket precision: the graded outage panels crowd against
    /// it, and a loose H_M would put nodes past the point where F_M is finite.
    fn threshold(&self, rate: T, hermite: &QuadratureRule<T>) -> Result<T> {
        let c = &self.constellation;
        c.inverse_mi_with_rule(c.max_bits() - rate, hermite, T::min_positive_value())
    }

    /// `F_M(y) = I⁻¹(R_s + I(y))`; infinite once `R_s + I(y)` reaches log₂M.
    fn outage_boundary(&self, y: T, rate: T, hermite: &QuadratureRule<T>) -> Result<T> {
        let c = &self.constellation;
        let target = rate + c.mi_with_rule(y, hermite);
        match c.inverse_mi_with_rule(target, hermite, T::lit(SOP_BISECTION_TOL)) {
            Err(Error::OutOfDomain(_)) => Ok(T::infinity()),
            other => other,
        }
    }

    /// Explicit SOP by Gauss-Legendre quadrature.
    pub fn sop(&self) -> Result<SopResult<T>> {
        let rate = self.rate()?;
        let rules = self.rules()?;
        let c = &self.constellation;
        if rate >= c.max_bits() {
            return Ok(SopResult { sop: T::one(), h_m: T::zero(), limit_sop: T::one(), degenerate: true });
        }
        let h_m = self.threshold(rate, &rules.hermite)?;
        let limit_sop = T::one() - self.eve.cdf(h_m);
        let mut integral = T::zero();
        for (y, w) in graded_nodes(h_m, &rules.legendre) {
            let f = self.outage_boundary(y, rate, &rules.hermite)?;
            let fb = if f.is_infinite() { T::one() } else { self.main.cdf(f) };
            integral += w * fb * self.eve.pdf(y);
        }
        let sop = (limit_sop + integral).max(T::zero()).min(T::one());
        Ok(SopResult { sop, h_m, limit_sop, degenerate: false })
    }

    /// Smallest SNR, found by doubling from 50, where the MMSE falls to the cutoff.
    fn theta_cutoff(&self, hermite: &QuadratureRule<T>) -> T {
        let c = &self.constellation;
        let mut cut = T::lit(THETA_CUT_START);
        while c.mmse_with_rule(cut, hermite) > T::lit(THETA_MMSE_CUTOFF) && cut < T::lit(THETA_CUT_MAX) {
            cut *= T::lit(2.0);
        }
        cut.min(T::lit(THETA_CUT_MAX))
    }

    /// `I_lim`, `G_a` and `G_d` of the high-SNR ASR expansion.
    pub fn asymptotic_asr(&self) -> Result<AsymptoticAsr<T>> {
        let expansion = self.main.asymptotic_expansion()?;
        let rules = self.rules()?;
        let hermite = &rules.hermite;
        let panel = make_rule::<T>(RuleKind::Legendre, PANEL_LEGENDRE_ORDER)?;
        let c = &self.constellation;
        let cut = self.theta_cutoff(hermite);
        // dI_M/dγ in bits is MMSE · log₂e; F_E · MMSE is shared by every Λ.
        let nodes = geometric_nodes(cut, &panel);
        let base: Vec<(T, T, T)> = nodes
            .into_iter()
            .map(|(g, w)| (g, w, self.eve.cdf(g) * c.mmse_with_rule(g, hermite) * T::LOG2_E()))
            .collect();
        let theta: Vec<T> = expansion
            .terms()
            .iter()
            .map(|t| base.iter().map(|&(g, w, v)| w * g.powf(t.lambda) * v).sum::<T>())
            .collect();
        let g_d = expansion.dominant_psi();
        let g_a = expansion
            .terms()
            .iter()
            .zip(&theta)
            .filter(|(t, _)| t.psi == g_d)
            .map(|(t, &th)| th * t.phi)
            .sum();
        Ok(AsymptoticAsr { i_lim: self.i_lim()?, g_a, g_d, theta })
    }

    /// `1 − F_E(H_M)`, `G'_a` and `G_d` of the high-SNR SOP expansion.
    pub fn asymptotic_sop(&self) -> Result<AsymptoticSop<T>> {
        let rate = self.rate()?;
        let expansion = self.main.asymptotic_expansion()?;
        let rules = self.rules()?;
        let c = &self.constellation;
        if rate >= c.max_bits() {
            return Err(Error::OutOfDomain(format!(
                "R_s = {rate} reaches log2 M = {}; the outage probability is identically one",
                c.max_bits()
            )));
        }
        let h_m = self.threshold(rate, &rules.hermite)?;
        let limit_sop = T::one() - self.eve.cdf(h_m);
        let legendre = make_rule::<T>(RuleKind::Legendre, COEFFICIENT_LEGENDRE_ORDER)?;
        let base = graded_nodes(h_m, &legendre)
            .into_iter()
            .map(|(y, w)| Ok((self.outage_boundary(y, rate, &rules.hermite)?, w * self.eve.pdf(y))))
            .collect::<Result<Vec<(T, T)>>>()?;
        let delta: Vec<T> = expansion
            .terms()
            .iter()
            .map(|t| base.iter().map(|&(f, w)| w * f.powf(t.lambda)).sum::<T>())
            .collect();
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical("outage-boundary integral diverged".into()));
        }
        let g_d = expansion.dominant_psi();
        let g_a = expansion
            .terms()
            .iter()
            .zip(&delta)
            .filter(|(t, _)| t.psi == g_d)
            .map(|(t, &d)| d * t.phi)
            .sum();
        Ok(AsymptoticSop { limit_sop, g_a, g_d, h_m, delta })
    }

    /// ASR coefficients, plus SOP coefficients when a target rate is set.
    pub fn asymptotics(&self) -> Result<AsymptoticSecrecy<T>> {
        let asr = self.asymptotic_asr()?;
        let sop = match self.target_rate {
            Some(_) => Some(self.asymptotic_sop()?),
            None => None,
        };
        Ok(AsymptoticSecrecy {
            g_d: asr.g_d,
            g_a_asr: asr.g_a,
            g_a_sop: sop.as_ref().map(|s| s.g_a),
            theta: asr.theta,
            delta: sop.map(|s| s.delta).unwrap_or_default(),
        })
    }
}

/// Nodes and weights of a composite rule on `[0, cut]`: panels
/// `[cut/2^(k+1), cut/2^k]` for `k < PANEL_COUNT`, then `[0, cut/2^PANEL_COUNT]`.
fn geometric_nodes<T: Real>(cut: T, rule: &QuadratureRule<T>) -> Vec<(T, T)> {
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity((PANEL_COUNT + 1) * rule.order());
    let mut hi = cut;
    for k in 0..=PANEL_COUNT {
        let lo = if k == PANEL_COUNT { T::zero() } else { hi / two };
        let half = (hi - lo) / two;
        out.extend(rule.iter().map(|(xi, w)| (lo + half * (xi + T::one()), w * half)));
        hi = lo;
    }
    out
}

/// Composite rule on `[0, h]` with panels `[h(1 − 2^-k), h(1 − 2^-(k+1))]`
/// for `k < OUTAGE_PANEL_COUNT`, closed by `[h(1 − 2^-OUTAGE_PANEL_COUNT), h]`.
fn graded_nodes<T: Real>(h: T, rule: &QuadratureRule<T>) -> Vec<(T, T)> {
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity((OUTAGE_PANEL_COUNT + 1) * rule.order());
    let mut lo = T::zero();
    let mut gap = h;
    for k in 0..=OUTAGE_PANEL_COUNT {
        let width = if k == OUTAGE_PANEL_COUNT { gap } else { gap / two };
        let half = width / two;
        out.extend(rule.iter().map(|(xi, w)| (lo + half * (xi + T::one()), w * half)));
        lo += width;
        gap -= width;
    }
    out
}

fn geometric_integral<T: Real, F: Fn(T) -> T>(cut: T, rule: &QuadratureRule<T>, f: F) -> T {
    geometric_nodes(cut, rule).into_iter().map(|(g, w)| w * f(g)).sum()
}

/// `E[g(γ)]` under the mixture, one Gauss-Laguerre sum per component:
/// `Σ_j α_j ζ_j^(-β_j) Σ_q ϖ_q τ_q^(β_j - 1) g(τ_q / ζ_j)`.
pub(crate) fn laguerre_expectation<T: Real, G: Fn(T) -> T>(
    mix: &MixtureGamma<T>,
    rule: &QuadratureRule<T>,
    g: G,
) -> T {
    let mut total = T::zero();
    for comp in mix.components() {
        if comp.alpha <= T::zero() {
            continue;
        }
        let ln_pref = comp.alpha.ln() - comp.beta * comp.zeta.ln();
        for (tau, w) in rule.iter() {
            let coef = (ln_pref + (comp.beta - T::one()) * tau.ln()).exp();
            total += w * coef * g(tau / comp.zeta);
        }
    }
    total
}
