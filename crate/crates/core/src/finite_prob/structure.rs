//! Drift multiplier fitting, conditional jump kernels, positivity and the
//! full-viability summaries.
//!
//! On a finite tree every epoch is a predictable jump time. At epoch `n`,
//! the enlarged filtration sees block `g` of epoch `n - 1`, sitting inside
//! base block `b`. The children `A_{n,0}, ..., A_{n,d}` of `b` carry two
//! conditional laws: `p_{n,h} = P[A_{n,h} | F_{n-1}]` and
//! `p̄_{n,h} = P[A_{n,h} | G_{n-1}]`. Whenever the drift operator factors as
//! `Γ(X) = φ · <N, X>`, the two are tied by
//! `p̄_{n,h} = (1 + φ · n_{n,h}) p_{n,h}`.

use serde::Serialize;

use super::drift::{drift_operator, representation_process};
use super::linalg::{min_norm_solve, LinalgError};
use super::scalar::{dot, sum, Scalar};
use super::space::{AdaptedProcess, EnlargedPair};
use super::FiniteError;

/// Conditional law of the next base move seen from one fine block.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel<S> {
    pub epoch: usize,
    /// Block of the fine partition at `epoch - 1`.
    pub fine_block: usize,
    /// Base block at `epoch - 1` containing `fine_block`.
    pub base_block: usize,
    /// Base blocks at `epoch`: the cells `A_{n,h}`.
    pub cells: Vec<usize>,
    pub p: Vec<S>,
    pub p_bar: Vec<S>,
    /// `n_{n,h}`: the jump of `N` on each cell.
    pub n: Vec<Vec<S>>,
}

/// Where on the tree a cell-level condition was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellLocation {
    pub epoch: usize,
    pub fine_block: usize,
    pub cell: usize,
}

impl std::fmt::Display for CellLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "epoch {}, fine block {}, cell {}", self.epoch, self.fine_block, self.cell)
    }
}

/// The multiplier `φ`, the martingale `N`, and the jump kernels they induce.
#[derive(Debug, Clone)]
pub struct StructureData<S> {
    pub dim: usize,
    /// `phi[k][g]`: value at epoch `k` on fine block `g` of epoch `k - 1`.
    /// `phi[0]` is empty.
    pub phi: Vec<Vec<Vec<S>>>,
    pub n: Vec<AdaptedProcess<S>>,
    /// `kernels[k][g]`, same indexing as `phi`.
    pub kernels: Vec<Vec<JumpKernel<S>>>,
    /// Directions along which `φ` is not pinned down, per `(k, g)`.
    pub null_directions: Vec<Vec<Vec<Vec<S>>>>,
}

impl<S: Scalar> StructureData<S> {
    /// `φ · n_{n,h}`, per kernel cell.
    pub fn phi_dot_n(&self, epoch: usize, fine_block: usize) -> Vec<S> {
        let phi = &self.phi[epoch][fine_block];
        self.kernels[epoch][fine_block].n.iter().map(|n| dot(phi, n)).collect()
    }

    pub fn horizon(&self) -> usize {
        self.kernels.len() - 1
    }

    fn cells(&self) -> impl Iterator<Item = (CellLocation, &JumpKernel<S>, usize)> {
        self.kernels.iter().flatten().flat_map(|kern| {
            (0..kern.cells.len()).map(move |h| {
                (CellLocation { epoch: kern.epoch, fine_block: kern.fine_block, cell: h }, kern, h)
            })
        })
    }
}

/// Conditional jump kernels of `n` seen from every fine block.
pub fn jump_kernels<S: Scalar>(
    pair: &EnlargedPair<S>,
    n: &[AdaptedProcess<S>],
) -> Vec<Vec<JumpKernel<S>>> {
    let base = pair.base();
    let bf = pair.base_filtration();
    let fine = pair.fine();
    let probs = base.probs();
    let mut out = vec![Vec::new()];
    for k in 1..=bf.horizon() {
        let base_prev = base.block_probs(bf.partition(k - 1));
        let base_now = base.block_probs(bf.partition(k));
        let fine_prev = base.block_probs(fine.partition(k - 1));
        let map = pair.base_map(k - 1);
        let mut kernels: Vec<JumpKernel<S>> = map
            .iter()
            .enumerate()
            .map(|(g, &b)| {
                let cells = bf.children(k - 1, b).to_vec();
                let p = cells.iter().map(|&c| base_now[c].clone() / base_prev[b].clone()).collect();
                let jumps = cells
                    .iter()
                    .map(|&c| {
                        n.iter()
                            .map(|comp| comp.value(k, c).clone() - comp.value(k - 1, b).clone())
                            .collect()
                    })
                    .collect();
                JumpKernel {
                    epoch: k,
                    fine_block: g,
                    base_block: b,
                    p_bar: vec![S::zero(); cells.len()],
                    cells,
                    p,
                    n: jumps,
                }
            })
            .collect();
        for (atom, w) in probs.iter().enumerate() {
            let g = fine.partition(k - 1).block_of(atom);
            let c = bf.partition(k).block_of(atom);
            let kern = &mut kernels[g];
            let h = kern.cells.iter().position(|&x| x == c).expect("cell is a child");
            kern.p_bar[h] = kern.p_bar[h].clone() + w.clone() / fine_prev[g].clone();
        }
        out.push(kernels);
    }
    out
}

/// Fits `φ` so that `Γ(X) = φ · <N, X>` for every member of `family`, whose
/// drift images are `gammas` (on the fine filtration).
///
/// At each `(epoch, fine block)` the unknown `φ` solves a small linear
/// system; the minimum-norm solution is returned and any directions left
/// free are listed in `null_directions`.
pub fn fit_phi_n<S: Scalar>(
    pair: &EnlargedPair<S>,
    family: &[AdaptedProcess<S>],
    gammas: &[AdaptedProcess<S>],
    n: Vec<AdaptedProcess<S>>,
) -> Result<StructureData<S>, FiniteError> {
    if family.len() != gammas.len() {
        return Err(FiniteError::Malformed("one drift image per family member required".into()));
    }
    let dim = n.len();
    let kernels = jump_kernels(pair, &n);
    let bf = pair.base_filtration();
    let fine = pair.fine();
    let mut phi = vec![Vec::new()];
    let mut nulls = vec![Vec::new()];
    for k in 1..=bf.horizon() {
        let mut phi_k = Vec::with_capacity(kernels[k].len());
        let mut null_k = Vec::with_capacity(kernels[k].len());
        for kern in &kernels[k] {
            let g = kern.fine_block;
            let child = fine.children(k - 1, g)[0];
            let mut rows = Vec::with_capacity(family.len());
            let mut rhs = Vec::with_capacity(family.len());
            for (x, gamma) in family.iter().zip(gammas) {
                let x_jumps: Vec<S> = kern
                    .cells
                    .iter()
                    .map(|&c| x.value(k, c).clone() - x.value(k - 1, kern.base_block).clone())
                    .collect();
                let row = (0..dim)
                    .map(|j| {
                        sum(kern.p.iter().zip(&kern.n).zip(&x_jumps).map(|((p, nh), xh)| {
                            p.clone() * nh[j].clone() * xh.clone()
                        }))
                    })
                    .collect();
                rows.push(row);
                rhs.push(gamma.value(k, child).clone() - gamma.value(k - 1, g).clone());
            }
            let sol = min_norm_solve(&rows, &rhs, dim).map_err(|e| match e {
                LinalgError::Inconsistent { residual } => {
                    FiniteError::DriftMultiplierFails { epoch: k, fine_block: g, residual }
                }
                other => FiniteError::Malformed(other.to_string()),
            })?;
            phi_k.push(sol.x);
            null_k.push(sol.null_basis);
        }
        phi.push(phi_k);
        nulls.push(null_k);
    }
    Ok(StructureData { dim, phi, n, kernels, null_directions: nulls })
}

/// Wraps a known multiplier. `phi[k][g]` is indexed like
/// [`StructureData::phi`]; `phi[0]` may be empty.
pub fn structure_from_phi<S: Scalar>(
    pair: &EnlargedPair<S>,
    n: Vec<AdaptedProcess<S>>,
    phi: Vec<Vec<Vec<S>>>,
) -> Result<StructureData<S>, FiniteError> {
    let kernels = jump_kernels(pair, &n);
    for k in 1..kernels.len() {
        if phi.get(k).map(Vec::len) != Some(kernels[k].len())
            || phi[k].iter().any(|v| v.len() != n.len())
        {
            return Err(FiniteError::Malformed(format!("multiplier shape mismatch at epoch {k}")));
        }
    }
    let null_directions = kernels.iter().map(|row| vec![Vec::new(); row.len()]).collect();
    Ok(StructureData { dim: n.len(), phi, n, kernels, null_directions })
}

/// Fits the drift multiplier with `N` and the test family both equal to the
/// representation process.
pub fn fit_canonical<S: Scalar>(pair: &EnlargedPair<S>) -> Result<StructureData<S>, FiniteError> {
    let w = representation_process(pair.base());
    let gammas = w.iter().map(|x| drift_operator(pair, x)).collect::<Result<Vec<_>, _>>()?;
    fit_phi_n(pair, &w, &gammas, w.clone())
}

/// Recomputes `φ · <N, X>` for a base process `x`, as a predictable process
/// on the fine filtration.
pub fn multiplier_drift<S: Scalar>(
    pair: &EnlargedPair<S>,
    sd: &StructureData<S>,
    x: &AdaptedProcess<S>,
) -> AdaptedProcess<S> {
    let fine = pair.fine();
    let mut values = vec![vec![S::zero(); fine.partition(0).n_blocks()]];
    for k in 1..=fine.horizon() {
        let row = (0..fine.partition(k).n_blocks())
            .map(|f| {
                let g = fine.parent(k, f);
                let kern = &sd.kernels[k][g];
                let covariation: Vec<S> = (0..sd.dim)
                    .map(|j| {
                        sum(kern.cells.iter().zip(&kern.p).zip(&kern.n).map(|((&c, p), nh)| {
                            let xh = x.value(k, c).clone() - x.value(k - 1, kern.base_block).clone();
                            p.clone() * nh[j].clone() * xh
                        }))
                    })
                    .collect();
                values[k - 1][g].clone() + dot(&sd.phi[k][g], &covariation)
            })
            .collect();
        values.push(row);
    }
    AdaptedProcess::from_blocks(fine, values).expect("shape follows the filtration")
}

/// First cell where `(1 + φ · n_{n,h}) p_{n,h} = p̄_{n,h}` fails.
pub fn kernel_identity_defect<S: Scalar>(sd: &StructureData<S>) -> Option<CellLocation> {
    sd.cells().find_map(|(loc, kern, h)| {
        let lhs = (S::one() + dot(&sd.phi[loc.epoch][loc.fine_block], &kern.n[h])) * kern.p[h].clone();
        (!lhs.approx_eq(&kern.p_bar[h])).then_some(loc)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    /// Smallest `1 + φ · ΔN` over cells with `p > 0`, rendered exactly.
    pub min_value: Option<String>,
    pub min_value_f64: Option<f64>,
    pub argmin: Option<CellLocation>,
    /// Cells where `{p > 0}` and `{p̄ > 0}` disagree.
    pub set_equality_violations: Vec<CellLocation>,
    pub pass: bool,
}

/// Minimum of `1 + φ · ΔN` over all reachable cells; passes iff strictly
/// positive everywhere and the supports of `p` and `p̄` agree.
pub fn check_positivity<S: Scalar>(sd: &StructureData<S>) -> PositivityReport {
    let mut best: Option<(S, CellLocation)> = None;
    let mut violations = Vec::new();
    for (loc, kern, h) in sd.cells() {
        let p_pos = kern.p[h].is_strictly_positive();
        let pb_pos = kern.p_bar[h].is_strictly_positive();
        if p_pos != pb_pos {
            violations.push(loc);
        }
        if !p_pos {
            continue;
        }
        let v = S::one() + dot(&sd.phi[loc.epoch][loc.fine_block], &kern.n[h]);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, loc));
        }
    }
    let pass = violations.is_empty()
        && best.as_ref().is_none_or(|(v, _)| v.is_strictly_positive());
    PositivityReport {
        min_value: best.as_ref().map(|(v, _)| v.render()),
        min_value_f64: best.as_ref().map(|(v, _)| v.to_f64()),
        argmin: best.map(|(_, l)| l),
        set_equality_violations: violations,
        pass,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViabilityReport {
    /// `φ' [N^c, N^c] φ`; identically zero on a finite tree.
    pub continuous_quadratic_form: String,
    /// Largest terminal value over atoms of
    /// `sum_k ((ΔD + φ·ΔN) / (1 + φ·ΔN))^2`.
    pub jump_sum_max: Option<String>,
    pub jump_sum_max_f64: Option<f64>,
    /// Expectation of the same terminal sum.
    pub jump_sum_mean: Option<String>,
    pub failure: Option<CellLocation>,
    pub failure_value: Option<String>,
    pub pass: bool,
}

/// The two full-viability summaries. `connector` is an optional base
/// structure connector `D`; without it the jump sum reduces to
/// `sum (φ·ΔN / (1 + φ·ΔN))^2`.
pub fn viability_condition<S: Scalar>(
    pair: &EnlargedPair<S>,
    sd: &StructureData<S>,
    connector: Option<&AdaptedProcess<S>>,
) -> ViabilityReport {
    let failed = |loc: CellLocation, value: S| ViabilityReport {
        continuous_quadratic_form: S::zero().render(),
        jump_sum_max: None,
        jump_sum_max_f64: None,
        jump_sum_mean: None,
        failure: Some(loc),
        failure_value: Some(value.render()),
        pass: false,
    };
    for (loc, kern, h) in sd.cells() {
        let denom = S::one() + dot(&sd.phi[loc.epoch][loc.fine_block], &kern.n[h]);
        if kern.p[h].is_strictly_positive() && !denom.is_strictly_positive() {
            return failed(loc, denom);
        }
    }
    let bf = pair.base_filtration();
    let fine = pair.fine();
    let n_atoms = pair.base().n_atoms();
    let mut totals = vec![S::zero(); n_atoms];
    for k in 1..=bf.horizon() {
        let d_inc = connector.map(|d| d.increment_atoms(bf, k));
        for (atom, total) in totals.iter_mut().enumerate() {
            let g = fine.partition(k - 1).block_of(atom);
            let c = bf.partition(k).block_of(atom);
            let kern = &sd.kernels[k][g];
            let h = kern.cells.iter().position(|&x| x == c).expect("cell is a child");
            let phi_n = dot(&sd.phi[k][g], &kern.n[h]);
            let denom = S::one() + phi_n.clone();
            let num = d_inc.as_ref().map_or(S::zero(), |d| d[atom].clone()) + phi_n;
            let ratio = num / denom;
            *total = total.clone() + ratio.clone() * ratio;
        }
    }
    let max = totals
        .iter()
        .cloned()
        .fold(None, |m: Option<S>, v| Some(m.map_or(v.clone(), |m| if v > m { v } else { m })));
    let mean = pair.base().expectation(&totals);
    let positivity = check_positivity(sd);
    ViabilityReport {
        continuous_quadratic_form: S::zero().render(),
        jump_sum_max_f64: max.as_ref().map(|m| m.to_f64()),
        jump_sum_max: max.map(|m| m.render()),
        jump_sum_mean: Some(mean.render()),
        failure: None,
        failure_value: None,
        pass: positivity.pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_prob::scalar::Rational;
    use crate::finite_prob::space::{FiniteFilteredSpace, Filtration, Partition};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    /// One epoch, three cells, G = F.
    fn flat_pair() -> EnlargedPair<Rational> {
        let f = Filtration::new(vec![Partition::trivial(3), Partition::discrete(3)]).unwrap();
        EnlargedPair::trivial(FiniteFilteredSpace::new(vec![q(1, 2), q(1, 3), q(1, 6)], f).unwrap())
    }

    #[test]
    fn zero_drift_fits_zero_multiplier() {
        let sd = fit_canonical(&flat_pair()).unwrap();
        assert!(sd.phi[1][0].iter().all(|v| *v == q(0, 1)));
        let pos = check_positivity(&sd);
        assert!(pos.pass);
        assert_eq!(pos.min_value.as_deref(), Some("1"));
        let via = viability_condition(&flat_pair(), &sd, None);
        assert!(via.pass);
        assert_eq!(via.jump_sum_max.as_deref(), Some("0"));
        assert_eq!(via.continuous_quadratic_form, "0");
    }

    #[test]
    fn kernels_sum_to_one() {
        let sd = fit_canonical(&flat_pair()).unwrap();
        let k = &sd.kernels[1][0];
        assert_eq!(sum(k.p.iter().cloned()), q(1, 1));
        assert_eq!(sum(k.p_bar.iter().cloned()), q(1, 1));
        assert!(kernel_identity_defect(&sd).is_none());
    }

    #[test]
    fn inconsistent_multiplier_is_reported() {
        // A one-dimensional N that is identically zero cannot carry a
        // non-zero drift.
        let pair = flat_pair();
        let bf = pair.base_filtration().clone();
        let x = crate::finite_prob::drift::martingale_from_terminal(
            pair.base(),
            &[q(1, 1), q(-1, 1), q(-1, 1)],
        );
        let fake_gamma = AdaptedProcess::from_blocks(&bf, vec![vec![q(0, 1)], vec![q(1, 1); 3]]).unwrap();
        let n = vec![AdaptedProcess::zero(&bf)];
        let err = fit_phi_n(&pair, &[x], &[fake_gamma], n).unwrap_err();
        assert!(matches!(err, FiniteError::DriftMultiplierFails { epoch: 1, .. }));
    }
}
