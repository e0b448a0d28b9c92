//! Seeded path generation and the path functionals used by the drift
//! formulas.
//!
//! Every path draws from its own random stream, derived from the bundle
//! seed and the path index, so bundles can be generated in parallel, in
//! any order, or one path at a time with identical results.

pub mod export;
pub mod functionals;
pub mod grid;
pub mod paths;
pub mod rng;

pub use functionals::{RandomTime, RandomTimeSample, TimeTag};
pub use grid::TimeGrid;
pub use paths::{gen_bes3, gen_brownian, PathBundle, ScaleModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("bundle cache: {0}")]
    Cache(String),
}

pub(crate) fn require(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<(), SimError> {
    if cond {
        Ok(())
    } else {
        Err(SimError::InvalidParameter { name, reason: reason() })
    }
}
