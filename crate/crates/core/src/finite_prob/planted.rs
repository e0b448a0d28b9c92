//! Random probability trees with a known drift multiplier.
//!
//! An initial-type enlargement is planted as follows. A hidden signal `s`
//! travels down the base tree with conditional law `Q(s | node)`. At every
//! node, each signal value tilts the branching law by `1 + φ_s · n_h`, where
//! `n_h` is the jump of a centred base martingale `N`. The signal is revealed
//! to the enlarged filtration from a random epoch on, and from then on the
//! enlarged kernel is exactly `(1 + φ_s · n_h) p_h`.

use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::scalar::{dot, Rational, Scalar};
use super::space::{AdaptedProcess, EnlargedPair, FiniteFilteredSpace, Filtration, Partition};

/// Size limits for generated trees.
#[derive(Debug, Clone, Copy)]
pub struct PlantConfig {
    pub max_horizon: usize,
    pub max_branching: usize,
    /// Dimension of the planted `N` is drawn from `1..=max_dim`.
    pub max_dim: usize,
    pub max_signals: usize,
    /// Soft cap on the number of leaves; branching is throttled past it.
    pub max_leaves: usize,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { max_horizon: 5, max_branching: 4, max_dim: 2, max_signals: 3, max_leaves: 48 }
    }
}

/// A generated enlargement together with the data it was built from.
#[derive(Debug, Clone)]
pub struct PlantedModel {
    pub pair: EnlargedPair<Rational>,
    pub n: Vec<AdaptedProcess<Rational>>,
    /// Indexed like `StructureData::phi`.
    pub phi: Vec<Vec<Vec<Rational>>>,
    /// A base martingale with jumps in `[-1/2, 1/2]`.
    pub connector: AdaptedProcess<Rational>,
    pub reveal_epoch: usize,
    pub n_signals: usize,
}

struct Tree {
    /// `parent[k][i]`: parent (at level `k - 1`) of node `i` at level `k`.
    parent: Vec<Vec<usize>>,
    /// Conditional probability of each node given its parent.
    cond: Vec<Vec<Rational>>,
    children: Vec<Vec<Vec<usize>>>,
}

impl Tree {
    fn random<R: Rng>(rng: &mut R, horizon: usize, cfg: &PlantConfig) -> Self {
        let mut parent = vec![vec![0]];
        let mut cond = vec![vec![Rational::one()]];
        let mut children = Vec::new();
        for k in 0..horizon {
            let width = parent[k].len();
            let (mut par, mut cp, mut kids) = (Vec::new(), Vec::new(), Vec::new());
            for node in 0..width {
                let cap = if width * cfg.max_branching > cfg.max_leaves { 2 } else { cfg.max_branching };
                let b = rng.random_range(1..=cap.max(1));
                let weights: Vec<i64> = (0..b).map(|_| rng.random_range(1..=5)).collect();
                let total: i64 = weights.iter().sum();
                let mut mine = Vec::with_capacity(b);
                for w in weights {
                    mine.push(par.len());
                    par.push(node);
                    cp.push(Rational::from_ratio(w, total));
                }
                kids.push(mine);
            }
            parent.push(par);
            cond.push(cp);
            children.push(kids);
        }
        Self { parent, cond, children }
    }

    fn horizon(&self) -> usize {
        self.parent.len() - 1
    }

    fn n_leaves(&self) -> usize {
        self.parent[self.horizon()].len()
    }

    /// Ancestors of a leaf at every level, root first.
    fn ancestors(&self, leaf: usize) -> Vec<usize> {
        let k = self.horizon();
        let mut out = vec![0; k + 1];
        out[k] = leaf;
        for level in (1..=k).rev() {
            out[level - 1] = self.parent[level][out[level]];
        }
        out
    }

    fn leaf_prob(&self, anc: &[usize]) -> Rational {
        (1..anc.len()).fold(Rational::one(), |acc, k| acc * self.cond[k][anc[k]].clone())
    }

    /// Random centred jumps, one vector per node at levels `1..`.
    fn centred_jumps<R: Rng>(&self, rng: &mut R, dim: usize, range: i64) -> Vec<Vec<Vec<Rational>>> {
        let mut jumps = vec![vec![vec![Rational::zero(); dim]]];
        for k in 0..self.horizon() {
            let mut level = vec![Vec::new(); self.parent[k + 1].len()];
            for kids in &self.children[k] {
                let raw: Vec<Vec<Rational>> = kids
                    .iter()
                    .map(|_| (0..dim).map(|_| Rational::from_int(rng.random_range(-range..=range))).collect())
                    .collect();
                let mean: Vec<Rational> = (0..dim)
                    .map(|j| {
                        kids.iter()
                            .zip(&raw)
                            .fold(Rational::zero(), |acc, (&c, r)| acc + self.cond[k + 1][c].clone() * r[j].clone())
                    })
                    .collect();
                for (&c, r) in kids.iter().zip(raw) {
                    level[c] = r.into_iter().zip(&mean).map(|(x, m)| x - m.clone()).collect();
                }
            }
            jumps.push(level);
        }
        jumps
    }
}

fn base_partitions(anc_of_atom: &[Vec<usize>], horizon: usize) -> Vec<Partition> {
    (0..=horizon)
        .map(|k| Partition::from_labels(&anc_of_atom.iter().map(|a| a[k]).collect::<Vec<_>>()))
        .collect()
}

fn cumulative_process(
    filt: &Filtration,
    anc_of_atom: &[Vec<usize>],
    jumps: &[Vec<Vec<Rational>>],
    component: usize,
) -> AdaptedProcess<Rational> {
    let horizon = filt.horizon();
    let mut rows = vec![vec![Rational::zero(); anc_of_atom.len()]];
    for k in 1..=horizon {
        let row = anc_of_atom
            .iter()
            .zip(&rows[k - 1])
            .map(|(anc, prev)| prev.clone() + jumps[k][anc[k]][component].clone())
            .collect();
        rows.push(row);
    }
    AdaptedProcess::from_atoms(filt, &rows).expect("cumulative jumps are adapted")
}

/// Generates a viable planted model: `1 + φ · ΔN >= 1/2` on every cell.
pub fn plant_viable<R: Rng>(rng: &mut R, cfg: &PlantConfig) -> PlantedModel {
    plant(rng, cfg, false).expect("viable planting always succeeds")
}

/// Generates a model where `1 + φ · ΔN = 0` on one cell with positive base
/// probability, so the enlarged kernel loses that cell.
pub fn plant_degenerate<R: Rng>(rng: &mut R, cfg: &PlantConfig) -> PlantedModel {
    loop {
        if let Some(m) = plant(rng, cfg, true) {
            return m;
        }
    }
}

fn plant<R: Rng>(rng: &mut R, cfg: &PlantConfig, degenerate: bool) -> Option<PlantedModel> {
    let horizon = rng.random_range(1..=cfg.max_horizon.max(1));
    let tree = Tree::random(rng, horizon, cfg);
    let dim = rng.random_range(1..=cfg.max_dim.max(1));
    let n_signals = rng.random_range(2..=cfg.max_signals.max(2));
    let reveal = rng.random_range(0..horizon);
    let jumps = tree.centred_jumps(rng, dim, 3);

    let degenerate_node = if degenerate {
        let eligible: Vec<(usize, usize)> = (reveal..horizon)
            .flat_map(|k| (0..tree.parent[k].len()).map(move |b| (k, b)))
            .filter(|&(k, b)| tree.children[k][b].len() >= 2)
            .collect();
        if eligible.is_empty() {
            return None;
        }
        Some(eligible[rng.random_range(0..eligible.len())])
    } else {
        None
    };

    // q[k][node][s] and the multiplier per (level, node, signal).
    let prior: Vec<i64> = (0..n_signals).map(|_| rng.random_range(1..=4)).collect();
    let prior_total: i64 = prior.iter().sum();
    let mut q = vec![vec![prior.iter().map(|&w| Rational::from_ratio(w, prior_total)).collect::<Vec<_>>()]];
    let mut phi_node: Vec<Vec<Vec<Vec<Rational>>>> = Vec::with_capacity(horizon);
    let mut hit_degenerate = false;
    for k in 0..horizon {
        let mut q_next = vec![Vec::new(); tree.parent[k + 1].len()];
        let mut phi_level = Vec::with_capacity(tree.parent[k].len());
        for (b, kids) in tree.children[k].iter().enumerate() {
            let qb = &q[k][b];
            let raw: Vec<Vec<Rational>> = (0..n_signals)
                .map(|_| (0..dim).map(|_| Rational::from_int(rng.random_range(-3..=3))).collect())
                .collect();
            let mean: Vec<Rational> = (0..dim)
                .map(|j| qb.iter().zip(&raw).fold(Rational::zero(), |acc, (w, r)| acc + w.clone() * r[j].clone()))
                .collect();
            let mut phis: Vec<Vec<Rational>> = raw
                .into_iter()
                .map(|r| r.into_iter().zip(&mean).map(|(x, m)| x - m.clone()).collect())
                .collect();
            let level_jumps = &jumps[k + 1];
            let products = || {
                phis.iter()
                    .flat_map(|p| kids.iter().map(move |&c| dot(p, &level_jumps[c])))
                    .collect::<Vec<_>>()
            };
            let scale = if degenerate_node == Some((k, b)) {
                let worst = products().into_iter().fold(Rational::zero(), |m, v| if -v.clone() > m { -v } else { m });
                if worst.is_zero() {
                    return None;
                }
                hit_degenerate = true;
                Rational::one() / worst
            } else {
                let largest = products().into_iter().fold(Rational::zero(), |m, v| if v.abs() > m { v.abs() } else { m });
                let bound = Rational::from_ratio(1, 2);
                if largest > bound { bound / largest } else { Rational::one() }
            };
            for p in phis.iter_mut() {
                for v in p.iter_mut() {
                    *v = v.clone() * scale.clone();
                }
            }
            for &c in kids {
                q_next[c] = qb
                    .iter()
                    .zip(&phis)
                    .map(|(w, p)| w.clone() * (Rational::one() + dot(p, &jumps[k + 1][c])))
                    .collect();
            }
            phi_level.push(phis);
        }
        q.push(q_next);
        phi_node.push(phi_level);
    }
    if degenerate && !hit_degenerate {
        return None;
    }

    // Atoms: (leaf, signal) with positive probability.
    let mut anc_of_atom = Vec::new();
    let mut signal_of_atom = Vec::new();
    let mut probs = Vec::new();
    for leaf in 0..tree.n_leaves() {
        let anc = tree.ancestors(leaf);
        let pl = tree.leaf_prob(&anc);
        for s in 0..n_signals {
            let w = pl.clone() * q[horizon][leaf][s].clone();
            if w.is_positive() {
                anc_of_atom.push(anc.clone());
                signal_of_atom.push(s);
                probs.push(w);
            }
        }
    }
    let base = Filtration::new(base_partitions(&anc_of_atom, horizon)).ok()?;
    let fine_parts = (0..=horizon)
        .map(|k| {
            let labels: Vec<(usize, usize)> = anc_of_atom
                .iter()
                .zip(&signal_of_atom)
                .map(|(a, &s)| (a[k], if k >= reveal { s + 1 } else { 0 }))
                .collect();
            Partition::from_labels(&labels)
        })
        .collect();
    let fine = Filtration::new(fine_parts).ok()?;
    let n: Vec<_> = (0..dim).map(|j| cumulative_process(&base, &anc_of_atom, &jumps, j)).collect();

    let mut phi = vec![Vec::new()];
    for k in 1..=horizon {
        let mut row = vec![vec![Rational::zero(); dim]; fine.partition(k - 1).n_blocks()];
        if k > reveal {
            for (atom, anc) in anc_of_atom.iter().enumerate() {
                let g = fine.partition(k - 1).block_of(atom);
                row[g] = phi_node[k - 1][anc[k - 1]][signal_of_atom[atom]].clone();
            }
        }
        phi.push(row);
    }

    let d_jumps = {
        let raw = tree.centred_jumps(rng, 1, 4);
        scale_to_half(&tree, raw)
    };
    let connector = cumulative_process(&base, &anc_of_atom, &d_jumps, 0);
    let space = FiniteFilteredSpace::new(probs, base).ok()?;
    let pair = EnlargedPair::new(space, fine).ok()?;
    Some(PlantedModel { pair, n, phi, connector, reveal_epoch: reveal, n_signals })
}

/// Rescales each node's centred jumps so their absolute value is at most 1/2.
fn scale_to_half(tree: &Tree, mut jumps: Vec<Vec<Vec<Rational>>>) -> Vec<Vec<Vec<Rational>>> {
    let half = Rational::from_ratio(1, 2);
    for k in 0..tree.horizon() {
        for kids in &tree.children[k] {
            let largest = kids
                .iter()
                .map(|&c| jumps[k + 1][c][0].abs())
                .fold(Rational::zero(), |m, v| if v > m { v } else { m });
            if largest > half {
                let s = half.clone() / largest;
                for &c in kids {
                    jumps[k + 1][c][0] = jumps[k + 1][c][0].clone() * s.clone();
                }
            }
        }
    }
    jumps
}

/// Base tree with an independent coin revealed to the enlarged filtration
/// from a random epoch on.
pub fn independent_coin<R: Rng>(rng: &mut R, cfg: &PlantConfig) -> EnlargedPair<Rational> {
    let horizon = rng.random_range(1..=cfg.max_horizon.max(1));
    let tree = Tree::random(rng, horizon, cfg);
    let heads = Rational::from_ratio(rng.random_range(1..=5), 6);
    let reveal = rng.random_range(0..=horizon);
    let mut anc_of_atom = Vec::new();
    let mut marks = Vec::new();
    let mut probs = Vec::new();
    for leaf in 0..tree.n_leaves() {
        let anc = tree.ancestors(leaf);
        let pl = tree.leaf_prob(&anc);
        for (mark, w) in [(1usize, heads.clone()), (2, Rational::one() - heads.clone())] {
            anc_of_atom.push(anc.clone());
            marks.push(mark);
            probs.push(pl.clone() * w);
        }
    }
    product_pair(horizon, anc_of_atom, probs, |k, atom| if k >= reveal { marks[atom] } else { 0 })
}

/// Finite Cox construction: at epoch `k` the hazard `λ_k` is a function of
/// the base node, and the enlarged filtration sees whether the random time
/// has occurred.
pub fn cox_time<R: Rng>(rng: &mut R, cfg: &PlantConfig) -> EnlargedPair<Rational> {
    let horizon = rng.random_range(1..=cfg.max_horizon.max(1));
    let tree = Tree::random(rng, horizon, cfg);
    let hazard: Vec<Vec<Rational>> = tree
        .parent
        .iter()
        .map(|level| level.iter().map(|_| Rational::from_ratio(rng.random_range(1..=4), 5)).collect())
        .collect();
    let mut anc_of_atom = Vec::new();
    let mut death = Vec::new();
    let mut probs = Vec::new();
    for leaf in 0..tree.n_leaves() {
        let anc = tree.ancestors(leaf);
        let pl = tree.leaf_prob(&anc);
        let mut alive = Rational::one();
        for k in 1..=horizon {
            let h = hazard[k][anc[k]].clone();
            anc_of_atom.push(anc.clone());
            death.push(k);
            probs.push(pl.clone() * alive.clone() * h.clone());
            alive *= Rational::one() - h;
        }
        anc_of_atom.push(anc);
        death.push(usize::MAX);
        probs.push(pl * alive);
    }
    product_pair(horizon, anc_of_atom, probs, |k, atom| if death[atom] <= k { death[atom] } else { 0 })
}

fn product_pair(
    horizon: usize,
    anc_of_atom: Vec<Vec<usize>>,
    probs: Vec<Rational>,
    mark: impl Fn(usize, usize) -> usize,
) -> EnlargedPair<Rational> {
    let base = Filtration::new(base_partitions(&anc_of_atom, horizon)).expect("tree partitions refine");
    let fine = Filtration::new(
        (0..=horizon)
            .map(|k| {
                let labels: Vec<(usize, usize)> =
                    anc_of_atom.iter().enumerate().map(|(i, a)| (a[k], mark(k, i))).collect();
                Partition::from_labels(&labels)
            })
            .collect(),
    )
    .expect("marks are revealed monotonically");
    let space = FiniteFilteredSpace::new(probs, base).expect("weights are a probability");
    EnlargedPair::new(space, fine).expect("fine refines base")
}
