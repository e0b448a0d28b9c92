//! Finite filtered probability spaces: atoms, refining partitions, and
//! processes that are constant on the blocks of each epoch.

use serde::{Deserialize, Serialize};

use super::scalar::{sum, Scalar};
use super::FiniteError;

/// A partition of the atoms `0..n_atoms`, stored as a block index per atom.
/// Block indices are canonical: blocks are numbered in order of their first
/// atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_of: Vec<usize>,
    n_blocks: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels; atoms sharing a label share
    /// a block.
    pub fn from_labels<L: Eq + std::hash::Hash + Clone>(labels: &[L]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let block_of = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Self { block_of, n_blocks: ids.len() }
    }

    pub fn trivial(n_atoms: usize) -> Self {
        Self { block_of: vec![0; n_atoms], n_blocks: usize::from(n_atoms > 0) }
    }

    pub fn discrete(n_atoms: usize) -> Self {
        Self { block_of: (0..n_atoms).collect(), n_blocks: n_atoms }
    }

    pub fn n_atoms(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (atom, &b) in self.block_of.iter().enumerate() {
            out[b].push(atom);
        }
        out
    }

    /// For each block of `self`, the block of `coarser` that contains it.
    /// `None` when `self` does not refine `coarser`.
    pub fn coarsening_map(&self, coarser: &Partition) -> Option<Vec<usize>> {
        if self.n_atoms() != coarser.n_atoms() {
            return None;
        }
        let mut map: Vec<Option<usize>> = vec![None; self.n_blocks];
        for (fine, coarse) in self.block_of.iter().zip(&coarser.block_of) {
            match map[*fine] {
                None => map[*fine] = Some(*coarse),
                Some(c) if c == *coarse => {}
                Some(_) => return None,
            }
        }
        map.into_iter().collect()
    }

    pub fn refines(&self, coarser: &Partition) -> bool {
        self.coarsening_map(coarser).is_some()
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &Partition) -> Partition {
        let labels: Vec<(usize, usize)> =
            self.block_of.iter().copied().zip(other.block_of.iter().copied()).collect();
        Partition::from_labels(&labels)
    }
}

/// A refining sequence of partitions indexed by epochs `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filtration {
    epochs: Vec<Partition>,
    /// `parents[k][b]`: block of epoch `k - 1` containing block `b` of epoch `k`.
    parents: Vec<Vec<usize>>,
    /// `children[k][b]`: blocks of epoch `k + 1` inside block `b` of epoch `k`.
    children: Vec<Vec<Vec<usize>>>,
}

impl Filtration {
    pub fn new(epochs: Vec<Partition>) -> Result<Self, FiniteError> {
        if epochs.is_empty() {
            return Err(FiniteError::Malformed("a filtration needs at least one epoch".into()));
        }
        let n = epochs[0].n_atoms();
        let mut parents = vec![Vec::new()];
        for (k, pair) in epochs.windows(2).enumerate() {
            if pair[1].n_atoms() != n {
                return Err(FiniteError::Malformed(format!(
                    "epoch {} partitions {} atoms, expected {n}",
                    k + 1,
                    pair[1].n_atoms()
                )));
            }
            let map = pair[1]
                .coarsening_map(&pair[0])
                .ok_or(FiniteError::NotRefining { epoch: k + 1 })?;
            parents.push(map);
        }
        let mut children = Vec::with_capacity(epochs.len());
        for k in 0..epochs.len() {
            let mut ch = vec![Vec::new(); epochs[k].n_blocks()];
            if k + 1 < epochs.len() {
                for (b, &p) in parents[k + 1].iter().enumerate() {
                    ch[p].push(b);
                }
            }
            children.push(ch);
        }
        Ok(Self { epochs, parents, children })
    }

    /// Last epoch index.
    pub fn horizon(&self) -> usize {
        self.epochs.len() - 1
    }

    pub fn n_atoms(&self) -> usize {
        self.epochs[0].n_atoms()
    }

    pub fn partition(&self, epoch: usize) -> &Partition {
        &self.epochs[epoch]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.epochs
    }

    pub fn parent(&self, epoch: usize, block: usize) -> usize {
        self.parents[epoch][block]
    }

    pub fn children(&self, epoch: usize, block: usize) -> &[usize] {
        &self.children[epoch][block]
    }

    /// Largest number of children of any block.
    pub fn max_branching(&self) -> usize {
        self.children.iter().flatten().map(Vec::len).max().unwrap_or(0)
    }

    /// True when every epoch of `self` refines the same epoch of `coarser`.
    pub fn refines(&self, coarser: &Filtration) -> bool {
        self.epochs.len() == coarser.epochs.len()
            && self.epochs.iter().zip(&coarser.epochs).all(|(f, c)| f.refines(c))
    }
}

/// Atoms with strictly positive weights plus a filtration on them.
#[derive(Debug, Clone)]
pub struct FiniteFilteredSpace<S> {
    probs: Vec<S>,
    filtration: Filtration,
}

impl<S: Scalar> FiniteFilteredSpace<S> {
    pub fn new(probs: Vec<S>, filtration: Filtration) -> Result<Self, FiniteError> {
        if probs.len() != filtration.n_atoms() {
            return Err(FiniteError::Malformed(format!(
                "{} probabilities for {} atoms",
                probs.len(),
                filtration.n_atoms()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_strictly_positive()) {
            return Err(FiniteError::InvalidProbabilities(format!(
                "atom {i} has non-positive weight {}",
                probs[i].render()
            )));
        }
        let total = sum(probs.iter().cloned());
        if !total.approx_eq(&S::one()) {
            return Err(FiniteError::InvalidProbabilities(format!(
                "weights sum to {}",
                total.render()
            )));
        }
        Ok(Self { probs, filtration })
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn n_atoms(&self) -> usize {
        self.probs.len()
    }

    pub fn horizon(&self) -> usize {
        self.filtration.horizon()
    }

    /// Probability of each block of `partition`.
    pub fn block_probs(&self, partition: &Partition) -> Vec<S> {
        let mut out = vec![S::zero(); partition.n_blocks()];
        for (atom, p) in self.probs.iter().enumerate() {
            let b = partition.block_of(atom);
            out[b] = out[b].clone() + p.clone();
        }
        out
    }

    /// Conditional expectation of an atom-level random variable given the
    /// sigma-field generated by `sigma`, returned per block of `sigma`.
    pub fn expect_given(&self, atom_values: &[S], sigma: &Partition) -> Vec<S> {
        let mut mass = vec![S::zero(); sigma.n_blocks()];
        let mut acc = vec![S::zero(); sigma.n_blocks()];
        for (atom, (p, x)) in self.probs.iter().zip(atom_values).enumerate() {
            let b = sigma.block_of(atom);
            mass[b] = mass[b].clone() + p.clone();
            acc[b] = acc[b].clone() + p.clone() * x.clone();
        }
        acc.into_iter().zip(mass).map(|(a, m)| a / m).collect()
    }

    /// Conditional expectation of a variable measurable w.r.t. `from`
    /// (given per block of `from`) onto the coarser partition `sigma`.
    pub fn cond_exp(
        &self,
        values: &[S],
        from: &Partition,
        sigma: &Partition,
    ) -> Result<Vec<S>, FiniteError> {
        if values.len() != from.n_blocks() {
            return Err(FiniteError::Malformed(format!(
                "{} values for a partition with {} blocks",
                values.len(),
                from.n_blocks()
            )));
        }
        let map = from.coarsening_map(sigma).ok_or(FiniteError::NotCoarser)?;
        let weights = self.block_probs(from);
        let mut mass = vec![S::zero(); sigma.n_blocks()];
        let mut acc = vec![S::zero(); sigma.n_blocks()];
        for ((b, w), x) in map.iter().zip(weights).zip(values) {
            acc[*b] = acc[*b].clone() + w.clone() * x.clone();
            mass[*b] = mass[*b].clone() + w;
        }
        Ok(acc.into_iter().zip(mass).map(|(a, m)| a / m).collect())
    }

    pub fn expectation(&self, atom_values: &[S]) -> S {
        sum(self.probs.iter().zip(atom_values).map(|(p, x)| p.clone() * x.clone()))
    }
}

/// A real process given by one value per (epoch, block of that epoch's
/// partition) of some filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<S> {
    values: Vec<Vec<S>>,
}

impl<S: Scalar> AdaptedProcess<S> {
    /// Wraps block values, checking the shape against `filt`.
    pub fn from_blocks(filt: &Filtration, values: Vec<Vec<S>>) -> Result<Self, FiniteError> {
        if values.len() != filt.horizon() + 1 {
            return Err(FiniteError::Malformed(format!(
                "process has {} epochs, filtration has {}",
                values.len(),
                filt.horizon() + 1
            )));
        }
        for (k, row) in values.iter().enumerate() {
            if row.len() != filt.partition(k).n_blocks() {
                return Err(FiniteError::Malformed(format!(
                    "epoch {k}: {} values for {} blocks",
                    row.len(),
                    filt.partition(k).n_blocks()
                )));
            }
        }
        Ok(Self { values })
    }

    /// Builds a process from per-atom values, failing if some epoch's values
    /// are not constant on that epoch's blocks.
    pub fn from_atoms(filt: &Filtration, atom_values: &[Vec<S>]) -> Result<Self, FiniteError> {
        if atom_values.len() != filt.horizon() + 1 {
            return Err(FiniteError::Malformed("epoch count mismatch".into()));
        }
        let mut values = Vec::with_capacity(atom_values.len());
        for (k, row) in atom_values.iter().enumerate() {
            let part = filt.partition(k);
            let mut out: Vec<Option<S>> = vec![None; part.n_blocks()];
            for (atom, v) in row.iter().enumerate() {
                let b = part.block_of(atom);
                match &out[b] {
                    None => out[b] = Some(v.clone()),
                    Some(prev) if prev.approx_eq(v) => {}
                    Some(_) => return Err(FiniteError::NotAdapted { epoch: k, block: b }),
                }
            }
            values.push(out.into_iter().map(|v| v.unwrap_or_else(S::zero)).collect());
        }
        Ok(Self { values })
    }

    /// Applies `f` to every block value.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> AdaptedProcess<T> {
        AdaptedProcess { values: self.values.iter().map(|row| row.iter().map(&f).collect()).collect() }
    }

    pub fn constant(filt: &Filtration, c: S) -> Self {
        let values = filt
            .partitions()
            .iter()
            .map(|p| vec![c.clone(); p.n_blocks()])
            .collect();
        Self { values }
    }

    pub fn zero(filt: &Filtration) -> Self {
        Self::constant(filt, S::zero())
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, epoch: usize, block: usize) -> &S {
        &self.values[epoch][block]
    }

    pub fn epoch_values(&self, epoch: usize) -> &[S] {
        &self.values[epoch]
    }

    pub fn blocks(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn atom_values(&self, filt: &Filtration, epoch: usize) -> Vec<S> {
        let part = filt.partition(epoch);
        (0..part.n_atoms()).map(|a| self.values[epoch][part.block_of(a)].clone()).collect()
    }

    /// `X_k - X_{k-1}` per atom, for `k >= 1`.
    pub fn increment_atoms(&self, filt: &Filtration, epoch: usize) -> Vec<S> {
        let now = self.atom_values(filt, epoch);
        let before = self.atom_values(filt, epoch - 1);
        now.into_iter().zip(before).map(|(a, b)| a - b).collect()
    }

    /// Re-expresses a process adapted to `from` on the finer filtration `to`.
    pub fn lift(&self, from: &Filtration, to: &Filtration) -> Result<Self, FiniteError> {
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..=from.horizon() {
            let map = to
                .partition(k)
                .coarsening_map(from.partition(k))
                .ok_or(FiniteError::NotRefining { epoch: k })?;
            values.push(map.iter().map(|&b| self.values[k][b].clone()).collect());
        }
        Ok(Self { values })
    }

    pub fn scaled(&self, c: &S) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.clone() * c.clone()).collect())
                .collect(),
        }
    }

    /// Pointwise sum; both processes must live on the same filtration.
    pub fn plus(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect())
                .collect(),
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(&-S::one()))
    }

    /// Pointwise product of two processes on the same filtration.
    pub fn times(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect())
                .collect(),
        }
    }

    /// Every epoch-`k` value is constant on the blocks of epoch `k - 1`.
    pub fn is_predictable(&self, filt: &Filtration) -> bool {
        (1..=filt.horizon()).all(|k| {
            let mut seen: Vec<Option<&S>> = vec![None; filt.partition(k - 1).n_blocks()];
            self.values[k].iter().enumerate().all(|(b, v)| {
                let p = filt.parent(k, b);
                match seen[p] {
                    None => {
                        seen[p] = Some(v);
                        true
                    }
                    Some(prev) => prev.approx_eq(v),
                }
            })
        })
    }

    /// Pathwise realized quadratic variation `sum_k (X_k - X_{k-1})^2`, per
    /// atom.
    pub fn quadratic_variation(&self, filt: &Filtration) -> Vec<S> {
        let mut qv = vec![S::zero(); filt.n_atoms()];
        for k in 1..=filt.horizon() {
            for (q, d) in qv.iter_mut().zip(self.increment_atoms(filt, k)) {
                *q = q.clone() + d.clone() * d;
            }
        }
        qv
    }
}

/// The inclusion `F ⊂ G`: a base space plus a finer partition sequence on
/// the same atoms.
#[derive(Debug, Clone)]
pub struct EnlargedPair<S> {
    base: FiniteFilteredSpace<S>,
    fine: Filtration,
}

impl<S: Scalar> EnlargedPair<S> {
    pub fn new(base: FiniteFilteredSpace<S>, fine: Filtration) -> Result<Self, FiniteError> {
        if fine.horizon() != base.horizon() {
            return Err(FiniteError::Malformed("fine and base horizons differ".into()));
        }
        for k in 0..=fine.horizon() {
            if !fine.partition(k).refines(base.filtration().partition(k)) {
                return Err(FiniteError::NotRefining { epoch: k });
            }
        }
        Ok(Self { base, fine })
    }

    /// `G = F`.
    pub fn trivial(base: FiniteFilteredSpace<S>) -> Self {
        let fine = base.filtration().clone();
        Self { base, fine }
    }

    pub fn base(&self) -> &FiniteFilteredSpace<S> {
        &self.base
    }

    pub fn base_filtration(&self) -> &Filtration {
        self.base.filtration()
    }

    pub fn fine(&self) -> &Filtration {
        &self.fine
    }

    /// The enlarged filtration as a space of its own.
    pub fn fine_space(&self) -> FiniteFilteredSpace<S> {
        FiniteFilteredSpace { probs: self.base.probs().to_vec(), filtration: self.fine.clone() }
    }

    /// The same pair with every weight converted by `f`.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<EnlargedPair<T>, FiniteError> {
        let base = FiniteFilteredSpace::new(
            self.base.probs().iter().map(f).collect(),
            self.base.filtration().clone(),
        )?;
        Ok(EnlargedPair { base, fine: self.fine.clone() })
    }

    /// For fine block `g` of epoch `k`, the base block containing it.
    pub fn base_block_of(&self, epoch: usize, fine_block: usize) -> usize {
        let atom = self
            .fine
            .partition(epoch)
            .labels()
            .iter()
            .position(|&b| b == fine_block)
            .expect("fine block has at least one atom");
        self.base.filtration().partition(epoch).block_of(atom)
    }

    /// Map from fine blocks to base blocks at `epoch`.
    pub fn base_map(&self, epoch: usize) -> Vec<usize> {
        self.fine
            .partition(epoch)
            .coarsening_map(self.base.filtration().partition(epoch))
            .expect("validated at construction")
    }
}
