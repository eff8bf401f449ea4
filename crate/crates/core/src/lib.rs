//! Physical-layer secrecy metrics for square M-QAM inputs over mixture-Gamma
//! fading wiretap channels.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the `*64` aliases below are what most callers want.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` deliberately rejects NaN.

pub mod constellation;
pub mod error;
pub mod fading;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod secrecy;
pub mod special;

pub use constellation::{Constellation, MiEvaluation};
pub use error::{Error, Result};
pub use fading::{AsymptoticExpansion, AsymptoticTerm, Family, GammaComponent, MixtureGamma};
pub use montecarlo::{McEstimate, McOptions, Metric};
pub use quadrature::{make_rule, QuadratureRule, RuleKind};
pub use scalar::{db_to_linear, linear_to_db, Real};
pub use secrecy::{
    AsrResult, AsymptoticAsr, AsymptoticSecrecy, AsymptoticSop, Precision, SecrecyScenario, SopResult,
};

pub type Constellation64 = Constellation<f64>;
pub type MixtureGamma64 = MixtureGamma<f64>;
pub type SecrecyScenario64 = SecrecyScenario<f64>;
pub type QuadratureRule64 = QuadratureRule<f64>;
pub type AsymptoticExpansion64 = AsymptoticExpansion<f64>;

pub type Constellation32 = Constellation<f32>;
pub type MixtureGamma32 = MixtureGamma<f32>;
pub type SecrecyScenario32 = SecrecyScenario<f32>;
