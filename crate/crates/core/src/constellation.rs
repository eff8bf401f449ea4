//! Unit-energy square M-QAM and its constellation-constrained mutual information.
//!
//! Square M-QAM splits into two independent √M-PAM components, so every
//! quantity here is computed per real dimension by Gauss-Hermite quadrature
//! against the `e^(-t²)` noise kernel (noise variance ½ per dimension).

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{make_rule, QuadratureRule, RuleKind};
use crate::scalar::{log_sum_exp, Real};

pub const DEFAULT_HERMITE_ORDER: usize = 20;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-9;

/// Largest SNR the inverse search will bracket before giving up.
const MAX_BRACKET_SNR: f64 = 1e15;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    order: usize,
    pam_levels: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEvaluation<T> {
    pub gamma: T,
    /// L_M(γ) in bits.
    pub l_value: T,
    /// I_M(γ) in bits.
    pub mi: T,
    pub hermite_order: usize,
}

impl<T: Real> Constellation<T> {
    /// Square M-QAM with unit average symbol energy. `order` must be a perfect
    /// square of an integer ≥ 2 (4, 16, 64, 256, ...).
    pub fn square_qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if side < 2 || side * side != order {
            return Err(invalid(format!(
                "square QAM requires a perfect-square order >= 4, got {order}"
            )));
        }
        // Levels ±Δ, ±3Δ, ... with (2/√M) Σ p² = 1  ⇒  Δ² = 3 / (2(M - 1)).
        let delta = (T::lit(3.0) / (T::lit(2.0) * T::from_usize_lossy(order - 1))).sqrt();
        let pam_levels = (0..side)
            .map(|j| T::from_usize_lossy(2 * j) - T::from_usize_lossy(side - 1))
            .map(|c| c * delta)
            .collect();
        Ok(Self { order, pam_levels })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pam_levels(&self) -> &[T] {
        &self.pam_levels
    }

    /// `log₂ M`, the saturation value of the mutual information.
    pub fn max_bits(&self) -> T {
        T::from_usize_lossy(self.order).log2()
    }

    /// Complex symbols `p_a + i p_b` as (real, imaginary) pairs.
    pub fn symbols(&self) -> Vec<(T, T)> {
        self.pam_levels
            .iter()
            .flat_map(|&re| self.pam_levels.iter().map(move |&im| (re, im)))
            .collect()
    }

    fn hermite(n: usize) -> Result<Arc<QuadratureRule<T>>> {
        make_rule(RuleKind::Hermite, n)
    }

    /// Gauss-Hermite approximation of L_M(γ) in bits.
    pub fn l_function(&self, gamma: T, n: usize) -> Result<T> {
        check_snr(gamma)?;
        let rule = Self::hermite(n)?;
        Ok(self.l_with_rule(gamma, &rule))
    }

    pub(crate) fn l_with_rule(&self, gamma: T, rule: &QuadratureRule<T>) -> T {
        let amp = gamma.sqrt();
        let side = self.pam_levels.len();
        let mut exps = vec![T::zero(); side];
        let mut total = T::zero();
        for &pj in &self.pam_levels {
            for (t, w) in rule.iter() {
                for (e, &pk) in exps.iter_mut().zip(&self.pam_levels) {
                    let d = t + amp * (pj - pk);
                    *e = -d * d;
                }
                total += w * log_sum_exp(&exps);
            }
        }
        // 2/√(Mπ) Σ_j Σ_l ω_l log₂(...)  with √M = side.
        T::lit(2.0) * total * T::LOG2_E() / (T::from_usize_lossy(side) * T::PI().sqrt())
    }

    /// I_M(γ) = log₂(M/e) − L_M(γ), clamped to `[0, log₂ M]`.
    pub fn mutual_information(&self, gamma: T, n: usize) -> Result<T> {
        Ok(self.evaluate(gamma, n)?.mi)
    }

    pub fn evaluate(&self, gamma: T, n: usize) -> Result<MiEvaluation<T>> {
        let l_value = self.l_function(gamma, n)?;
        Ok(MiEvaluation {
            gamma,
            l_value,
            mi: self.mi_from_l(l_value),
            hermite_order: n,
        })
    }

    pub(crate) fn mi_from_l(&self, l: T) -> T {
        (self.max_bits() - T::LOG2_E() - l).max(T::zero()).min(self.max_bits())
    }

    pub(crate) fn mi_with_rule(&self, gamma: T, rule: &QuadratureRule<T>) -> T {
        self.mi_from_l(self.l_with_rule(gamma, rule))
    }

    /// Minimum mean-square error of estimating the unit-energy symbol from
    /// `y = √γ s + z`, `z ~ CN(0, 1)`. Equals dI_M/dγ with I_M in nats.
    pub fn mmse(&self, gamma: T, n: usize) -> Result<T> {
        check_snr(gamma)?;
        let rule = Self::hermite(n)?;
        Ok(self.mmse_with_rule(gamma, &rule))
    }

    pub(crate) fn mmse_with_rule(&self, gamma: T, rule: &QuadratureRule<T>) -> T {
        let amp = gamma.sqrt();
        let side = self.pam_levels.len();
        let mut exps = vec![T::zero(); side];
        let mut total = T::zero();
        for &pj in &self.pam_levels {
            for (t, w) in rule.iter() {
                for (e, &pk) in exps.iter_mut().zip(&self.pam_levels) {
                    let d = t + amp * (pj - pk);
                    *e = -d * d;
                }
                let max = exps.iter().copied().fold(T::neg_infinity(), T::max);
                let mut norm = T::zero();
                let mut shift = T::zero();
                for (&e, &pk) in exps.iter().zip(&self.pam_levels) {
                    let p = (e - max).exp();
                    norm += p;
                    shift += p * (pk - pj);
                }
                // Conditional-mean error p̂ - p_j, formed from differences to
                // avoid cancellation at high SNR.
                let err = shift / norm;
                total += w * err * err;
            }
        }
        let per_dim = total / (T::from_usize_lossy(side) * T::PI().sqrt());
        (T::lit(2.0) * per_dim).max(T::zero()).min(T::one())
    }

    /// Smallest γ ≥ 0 with |I_M(γ) − target| ≤ tol, by bisection on an
    /// expanding bracket `[0, γ_hi]`, `γ_hi = 1, 2, 4, ...`.
    pub fn inverse_mi(&self, target: T, n: usize, tol: T) -> Result<T> {
        let rule = Self::hermite(n)?;
        self.inverse_mi_with_rule(target, &rule, tol)
    }

    pub(crate) fn inverse_mi_with_rule(&self, target: T, rule: &QuadratureRule<T>, tol: T) -> Result<T> {
        if !(target >= T::zero()) {
            return Err(invalid(format!("target mutual information must be >= 0, got {target}")));
        }
        if !(tol > T::zero()) {
            return Err(invalid(format!("bisection tolerance must be positive, got {tol}")));
        }
        if target >= self.max_bits() {
            return Err(Error::OutOfDomain(format!(
                "no SNR achieves {target} bits with {}-QAM (limit {} bits)",
                self.order,
                self.max_bits()
            )));
        }
        if target == T::zero() {
            return Ok(T::zero());
        }
        let mi = |g: T| self.mi_with_rule(g, rule);
        let mut lo = T::zero();
        let mut hi = T::one();
        while mi(hi) <= target {
            lo = hi;
            hi *= T::lit(2.0);
            if hi > T::lit(MAX_BRACKET_SNR) {
                return Err(Error::Numerical(format!(
                    "could not bracket I_M^-1({target}) below SNR {MAX_BRACKET_SNR:e}"
                )));
            }
        }
        let eps = T::epsilon();
        let mut mid = (lo + hi) / T::lit(2.0);
        for _ in 0..200 {
            mid = (lo + hi) / T::lit(2.0);
            let f = mi(mid) - target;
            if f.abs() <= tol || hi - lo <= eps * hi {
                break;
            }
            if f > T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(mid)
    }
}

fn check_snr<T: Real>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && !gamma.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!("SNR must be nonnegative, got {gamma}")))
    }
}
