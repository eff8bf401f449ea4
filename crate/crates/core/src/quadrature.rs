//! Gauss-Hermite, Gauss-Laguerre and Gauss-Legendre rules of arbitrary order.
//!
//! Nodes are the eigenvalues of the symmetric Jacobi matrix of the
//! orthonormal recurrence, isolated by Sturm-sequence bisection and then
//! polished with Newton steps on the recurrence itself. Weights come from the
//! Christoffel function `μ₀ / Σ_k q_k(x)²`, evaluated with running rescaling
//! so that high-order Laguerre rules do not overflow.
//!
//! Rules are cached per (scalar type, kind, order) and shared through `Arc`.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const MAX_ORDER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Weight `e^(-x²)` on the real line.
    Hermite,
    /// Weight `e^(-x)` on `[0, ∞)`.
    Laguerre,
    /// Unit weight on `[-1, 1]`.
    Legendre,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleKind::Hermite => "hermite",
            RuleKind::Laguerre => "laguerre",
            RuleKind::Legendre => "legendre",
        };
        f.write_str(s)
    }
}

impl RuleKind {
    /// Total mass of the weight function.
    fn mass<T: Real>(self) -> T {
        match self {
            RuleKind::Hermite => T::PI().sqrt(),
            RuleKind::Laguerre => T::one(),
            RuleKind::Legendre => T::lit(2.0),
        }
    }

    /// Diagonal `a_k` and squared off-diagonal `b_k` (for `k >= 1`) of the
    /// Jacobi matrix.
    fn recurrence<T: Real>(self, k: usize) -> (T, T) {
        let kf = T::from_usize_lossy(k);
        match self {
            RuleKind::Hermite => (T::zero(), kf / T::lit(2.0)),
            RuleKind::Laguerre => (T::lit(2.0) * kf + T::one(), kf * kf),
            RuleKind::Legendre => (T::zero(), kf * kf / (T::lit(4.0) * kf * kf - T::one())),
        }
    }

    fn symmetric(self) -> bool {
        !matches!(self, RuleKind::Laguerre)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    kind: RuleKind,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ w_i f(x_i)`, i.e. the rule applied against its own weight function.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates `f` over `[lo, hi]` with a Legendre rule (affine map of the nodes).
    pub fn integrate_interval<F: FnMut(T) -> T>(&self, lo: T, hi: T, mut f: F) -> T {
        debug_assert_eq!(self.kind, RuleKind::Legendre);
        let half = (hi - lo) / T::lit(2.0);
        let mid = (hi + lo) / T::lit(2.0);
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<T>()
    }
}

type CacheKey = (TypeId, RuleKind, usize);
type CacheMap = HashMap<CacheKey, Arc<dyn Any + Send + Sync>>;

fn cache() -> &'static RwLock<CacheMap> {
    static CACHE: OnceLock<RwLock<CacheMap>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Returns the `order`-point rule of the given kind, computing it on first use.
pub fn make_rule<T: Real>(kind: RuleKind, order: usize) -> Result<Arc<QuadratureRule<T>>> {
    if order == 0 || order > MAX_ORDER {
        return Err(invalid(format!(
            "quadrature order must lie in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let key = (TypeId::of::<T>(), kind, order);
    if let Some(hit) = cache().read().expect("rule cache poisoned").get(&key) {
        return Ok(hit.clone().downcast::<QuadratureRule<T>>().expect("cache entry type matches key"));
    }
    let rule = Arc::new(compute_rule::<T>(kind, order));
    let mut map = cache().write().expect("rule cache poisoned");
    // Another thread may have raced us here; keep whichever landed first.
    let entry = map.entry(key).or_insert_with(|| rule.clone() as Arc<dyn Any + Send + Sync>);
    Ok(entry.clone().downcast::<QuadratureRule<T>>().expect("cache entry type matches key"))
}

fn compute_rule<T: Real>(kind: RuleKind, n: usize) -> QuadratureRule<T> {
    let (diag, off): (Vec<T>, Vec<T>) = (0..n)
        .map(|k| {
            let (a, b) = kind.recurrence::<T>(k);
            (a, if k == 0 { T::zero() } else { b.sqrt() })
        })
        .unzip();
    // `off[k]` couples rows k-1 and k; `off[n]` is needed by the recurrence.
    let mut off = off;
    off.push(kind.recurrence::<T>(n).1.sqrt());

    let mut nodes = sturm_eigenvalues(&diag, &off[..n]);
    for x in nodes.iter_mut() {
        *x = newton_polish(*x, &diag, &off);
    }
    let mass = kind.mass::<T>();
    let mut weights: Vec<T> = nodes.iter().map(|&x| christoffel_weight(x, &diag, &off, mass)).collect();

    if kind.symmetric() {
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = (nodes[j] - nodes[i]) / T::lit(2.0);
            let w = (weights[i] + weights[j]) / T::lit(2.0);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
    }
    QuadratureRule { kind, nodes, weights }
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count<T: Real>(x: T, diag: &[T], off: &[T]) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut d = T::one();
    for (k, &a) in diag.iter().enumerate() {
        let e2 = if k == 0 { T::zero() } else { off[k] * off[k] };
        d = a - x - e2 / d;
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
    }
    count
}

fn sturm_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Vec<T> {
    let n = diag.len();
    let radius = |k: usize| {
        let left = if k == 0 { T::zero() } else { off[k].abs() };
        let right = if k + 1 < n { off[k + 1].abs() } else { T::zero() };
        left + right
    };
    let lo0 = (0..n).map(|k| diag[k] - radius(k)).fold(T::infinity(), T::min);
    let hi0 = (0..n).map(|k| diag[k] + radius(k)).fold(T::neg_infinity(), T::max);
    let eps = T::epsilon();
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..400 {
                let mid = (lo + hi) / T::lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(mid, diag, off) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= eps * (lo.abs().max(hi.abs())) {
                    break;
                }
            }
            (lo + hi) / T::lit(2.0)
        })
        .collect()
}

/// Orthonormal recurrence `(q_n(x), q_n'(x))` up to a common positive scale.
fn recurrence_value<T: Real>(x: T, diag: &[T], off: &[T]) -> (T, T) {
    let limit = T::max_value().powf(T::lit(0.25));
    let (mut q_prev, mut q) = (T::zero(), T::one());
    let (mut d_prev, mut d) = (T::zero(), T::zero());
    for (k, &a) in diag.iter().enumerate() {
        let q_next = ((x - a) * q - off[k] * q_prev) / off[k + 1];
        let d_next = (q + (x - a) * d - off[k] * d_prev) / off[k + 1];
        q_prev = q;
        q = q_next;
        d_prev = d;
        d = d_next;
        let big = q.abs().max(d.abs());
        if big > limit {
            q_prev /= big;
            q /= big;
            d_prev /= big;
            d /= big;
        }
    }
    (q, d)
}

fn newton_polish<T: Real>(x0: T, diag: &[T], off: &[T]) -> T {
    let mut x = x0;
    for _ in 0..3 {
        let (q, d) = recurrence_value(x, diag, off);
        if d == T::zero() || !d.is_finite() {
            break;
        }
        let step = q / d;
        let next = x - step;
        // Bisection already isolates the root to a few ulps of the matrix
        // norm; a large step means the derivative is unreliable here.
        if !next.is_finite() || step.abs() > T::lit(1e-6) * (T::one() + x.abs()) {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

fn christoffel_weight<T: Real>(x: T, diag: &[T], off: &[T], mass: T) -> T {
    let limit = T::max_value().powf(T::lit(0.25));
    let (mut q_prev, mut q) = (T::zero(), T::one());
    let mut sum = T::one();
    let mut log_scale = T::zero();
    for (k, &a) in diag.iter().enumerate().take(diag.len() - 1) {
        let q_next = ((x - a) * q - off[k] * q_prev) / off[k + 1];
        q_prev = q;
        q = q_next;
        if q.abs() > limit {
            let s = q.abs();
            q_prev /= s;
            q /= s;
            sum /= s * s;
            log_scale += s.ln();
        }
        sum += q * q;
    }
    mass * (-(sum.ln() + T::lit(2.0) * log_scale)).exp()
}
