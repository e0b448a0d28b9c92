//! Exact engine for finite filtered probability spaces.
//!
//! A probability tree is a finite set of atoms with positive weights and a
//! refining sequence of partitions. An enlargement pairs it with a second,
//! finer sequence. Everything here is generic over [`Scalar`], so identities
//! hold with zero error in rational mode.

pub mod drift;
pub mod linalg;
pub mod model_file;
pub mod planted;
pub mod scalar;
pub mod solve;
pub mod space;
pub mod structure;

pub use drift::{compensator, cond_exp, drift_operator, is_martingale, representation_process};
pub use scalar::{Rational, Scalar};
pub use solve::{deflator, solve_accessible, solve_inaccessible, StructureSolution};
pub use space::{AdaptedProcess, EnlargedPair, FiniteFilteredSpace, Filtration, Partition};
pub use structure::{check_positivity, fit_phi_n, viability_condition, StructureData};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FiniteError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("partition at epoch {epoch} does not refine its predecessor")]
    NotRefining { epoch: usize },
    #[error("target partition is not coarser than the source")]
    NotCoarser,
    #[error("values are not constant on block {block} of epoch {epoch}")]
    NotAdapted { epoch: usize, block: usize },
    #[error("process is not a base martingale: drift {residual:e} at epoch {epoch}, block {block}")]
    NotMartingale { epoch: usize, block: usize, residual: f64 },
    #[error(
        "drift multiplier assumption fails at epoch {epoch}, fine block {fine_block} \
         (residual {residual:e})"
    )]
    DriftMultiplierFails { epoch: usize, fine_block: usize, residual: f64 },
    #[error(
        "support of the enlarged kernel differs from the base kernel at epoch {epoch}, \
         fine block {fine_block}, cell {cell}"
    )]
    SetEqualityFails { epoch: usize, fine_block: usize, cell: usize },
    #[error("not viable: 1 + phi.dN = {value} <= 0 on jump cell {cell}")]
    NotViable { cell: usize, value: String },
    #[error("connector jump {value} >= 1 at epoch {epoch}, block {block}")]
    ConnectorJumpTooLarge { epoch: usize, block: usize, value: String },
    #[error("model file: {0}")]
    Parse(String),
}
