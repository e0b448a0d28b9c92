// `!(x > 0.0)` rejects NaN along with the nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Row-reduction and tree code indexes several arrays in lockstep.
#![allow(clippy::needless_range_loop)]

pub mod finite_prob;
pub mod simulate;
pub mod formulas;
pub mod mctest;
pub mod experiments;
pub mod cli;
