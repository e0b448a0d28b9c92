//! Compensators, the martingale property, and the drift operator of an
//! enlargement on a finite tree.

use super::scalar::Scalar;
use super::space::{AdaptedProcess, EnlargedPair, FiniteFilteredSpace, Filtration};
use super::FiniteError;

/// Conditional expectation of a process value at `epoch` onto the partition
/// of epoch `onto` (which must be coarser), per block of `onto`.
pub fn cond_exp<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    x: &AdaptedProcess<S>,
    epoch: usize,
    onto: usize,
) -> Result<Vec<S>, FiniteError> {
    let filt = space.filtration();
    if onto > epoch {
        return Err(FiniteError::NotCoarser);
    }
    space.cond_exp(x.epoch_values(epoch), filt.partition(epoch), filt.partition(onto))
}

/// Discrete predictable compensator `C_k = sum_{j<=k} E[A_j - A_{j-1} | F_{j-1}]`
/// of a process adapted to the space's filtration.
pub fn compensator<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    a: &AdaptedProcess<S>,
) -> AdaptedProcess<S> {
    let filt = space.filtration();
    let mut values: Vec<Vec<S>> = Vec::with_capacity(filt.horizon() + 1);
    values.push(vec![S::zero(); filt.partition(0).n_blocks()]);
    for k in 1..=filt.horizon() {
        let inc = a.increment_atoms(filt, k);
        let drift = space.expect_given(&inc, filt.partition(k - 1));
        let row = (0..filt.partition(k).n_blocks())
            .map(|b| {
                let p = filt.parent(k, b);
                values[k - 1][p].clone() + drift[p].clone()
            })
            .collect();
        values.push(row);
    }
    AdaptedProcess::from_blocks(filt, values).expect("shape follows the filtration")
}

/// Pathwise covariation `[X, D]_k = sum_{j <= k} ΔX_j ΔD_j`.
pub fn cross_bracket<S: Scalar>(
    filt: &Filtration,
    x: &AdaptedProcess<S>,
    d: &AdaptedProcess<S>,
) -> AdaptedProcess<S> {
    let mut values = vec![vec![S::zero(); filt.partition(0).n_blocks()]];
    for k in 1..=filt.horizon() {
        let row = (0..filt.partition(k).n_blocks())
            .map(|b| {
                let p = filt.parent(k, b);
                let dx = x.value(k, b).clone() - x.value(k - 1, p).clone();
                let dd = d.value(k, b).clone() - d.value(k - 1, p).clone();
                values[k - 1][p].clone() + dx * dd
            })
            .collect();
        values.push(row);
    }
    AdaptedProcess::from_blocks(filt, values).expect("shape follows the filtration")
}

/// `X + <X, D>`: the special process whose drift is carried by the
/// connector `D`.
pub fn with_connector_drift<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    x: &AdaptedProcess<S>,
    d: &AdaptedProcess<S>,
) -> AdaptedProcess<S> {
    x.plus(&compensator(space, &cross_bracket(space.filtration(), x, d)))
}

/// Location of the first failure of the martingale property, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleDefect {
    pub epoch: usize,
    pub block: usize,
    pub residual: f64,
}

/// `None` when `x` is a martingale of the space's filtration (exactly, or
/// within tolerance in float mode).
pub fn martingale_defect<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    x: &AdaptedProcess<S>,
) -> Option<MartingaleDefect> {
    let filt = space.filtration();
    for k in 1..=filt.horizon() {
        let inc = x.increment_atoms(filt, k);
        let drift = space.expect_given(&inc, filt.partition(k - 1));
        if let Some((block, d)) = drift.iter().enumerate().find(|(_, d)| !d.is_negligible()) {
            return Some(MartingaleDefect { epoch: k, block, residual: d.to_f64() });
        }
    }
    None
}

/// Largest absolute conditional drift of `x` over all epochs and blocks.
pub fn max_martingale_residual<S: Scalar>(space: &FiniteFilteredSpace<S>, x: &AdaptedProcess<S>) -> f64 {
    let filt = space.filtration();
    (1..=filt.horizon())
        .flat_map(|k| space.expect_given(&x.increment_atoms(filt, k), filt.partition(k - 1)))
        .map(|d| d.to_f64().abs())
        .fold(0.0, f64::max)
}

pub fn is_martingale<S: Scalar>(space: &FiniteFilteredSpace<S>, x: &AdaptedProcess<S>) -> bool {
    martingale_defect(space, x).is_none()
}

/// The drift operator: for a base martingale `x`, the predictable process
/// `Γ(x)` of the enlarged filtration such that `x - Γ(x)` is a martingale
/// there. Returned on the fine filtration.
pub fn drift_operator<S: Scalar>(
    pair: &EnlargedPair<S>,
    x: &AdaptedProcess<S>,
) -> Result<AdaptedProcess<S>, FiniteError> {
    if let Some(d) = martingale_defect(pair.base(), x) {
        return Err(FiniteError::NotMartingale {
            epoch: d.epoch,
            block: d.block,
            residual: d.residual,
        });
    }
    let lifted = x.lift(pair.base_filtration(), pair.fine())?;
    Ok(compensator(&pair.fine_space(), &lifted))
}

/// Children of `block` (epoch `epoch - 1`) at `epoch`, with their
/// conditional probabilities given the parent.
pub fn node_cells<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    block_probs_prev: &[S],
    block_probs_now: &[S],
    epoch: usize,
    block: usize,
) -> Vec<(usize, S)> {
    space
        .filtration()
        .children(epoch - 1, block)
        .iter()
        .map(|&c| (c, block_probs_now[c].clone() / block_probs_prev[block].clone()))
        .collect()
}

/// `2^{-n}` for epoch `n`.
pub fn epoch_scale<S: Scalar>(epoch: usize) -> S {
    S::one() / S::from_int(1i64 << epoch.min(62))
}

/// The representation process: component `h` jumps by
/// `2^{-n} (1_{A_{n,h}} - p_{n,h})` at epoch `n`, where `A_{n,0}, A_{n,1}, ...`
/// are the children of the current block. Every base martingale is a
/// predictable integral against it.
pub fn representation_process<S: Scalar>(space: &FiniteFilteredSpace<S>) -> Vec<AdaptedProcess<S>> {
    let filt = space.filtration();
    let dim = filt.max_branching();
    let mut comps: Vec<Vec<Vec<S>>> = (0..dim)
        .map(|_| vec![vec![S::zero(); filt.partition(0).n_blocks()]])
        .collect();
    for k in 1..=filt.horizon() {
        let prev = space.block_probs(filt.partition(k - 1));
        let now = space.block_probs(filt.partition(k));
        let scale: S = epoch_scale(k);
        let mut rows: Vec<Vec<S>> = vec![vec![S::zero(); filt.partition(k).n_blocks()]; dim];
        for parent in 0..filt.partition(k - 1).n_blocks() {
            let cells = node_cells(space, &prev, &now, k, parent);
            for (j, (child, _)) in cells.iter().enumerate() {
                for (h, row) in rows.iter_mut().enumerate() {
                    let base = comps[h][k - 1][parent].clone();
                    let jump = match cells.get(h) {
                        Some((_, p)) => {
                            let ind = if h == j { S::one() } else { S::zero() };
                            scale.clone() * (ind - p.clone())
                        }
                        None => S::zero(),
                    };
                    row[*child] = base + jump;
                }
            }
        }
        for (h, row) in rows.into_iter().enumerate() {
            comps[h].push(row);
        }
    }
    comps
        .into_iter()
        .map(|v| AdaptedProcess::from_blocks(filt, v).expect("shape follows the filtration"))
        .collect()
}

/// Builds a base martingale from a terminal random variable:
/// `X_k = E[xi | F_k]`.
pub fn martingale_from_terminal<S: Scalar>(
    space: &FiniteFilteredSpace<S>,
    terminal_atoms: &[S],
) -> AdaptedProcess<S> {
    let filt: &Filtration = space.filtration();
    let values = filt
        .partitions()
        .iter()
        .map(|p| space.expect_given(terminal_atoms, p))
        .collect();
    AdaptedProcess::from_blocks(filt, values).expect("shape follows the filtration")
}
