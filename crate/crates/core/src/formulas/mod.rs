//! Explicit drift and Azéma supermartingale evaluators.
//!
//! Every evaluator is a pure function of path features. Rates are per unit
//! time; jump contributions are passed in as increments.

pub mod bridge;
pub mod emery;
pub mod honest;
pub mod pitman;
pub mod registry;
pub mod sup;

pub use bridge::{fa1_companion, fa1_companion_mean, fa1_h_squared_integral, fa1_integrand, jacod_bridge_drift};
pub use emery::{azema_emery, emery_h, emery_post_drift, emery_pre_drift};
pub use honest::{honest_lp_azema, honest_lp_drift, progressive_jy_drift, Side};
pub use pitman::{local_time_identity, pitman_drift, pitman_invariant, LocalTimeEstimate, PitmanDrift};
pub use registry::{EnlargementModel, Feature, Features, ModelName, ModelParams};
pub use sup::sup_initial_drift;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormulaError {
    #[error("{formula}: {reason}")]
    Domain { formula: &'static str, reason: String },
    #[error("model {model} needs feature {feature}")]
    MissingFeature { model: &'static str, feature: &'static str },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
}

pub(crate) fn domain(formula: &'static str, reason: impl Into<String>) -> FormulaError {
    FormulaError::Domain { formula, reason: reason.into() }
}
