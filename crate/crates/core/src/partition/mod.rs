//! Multilevel k-way partitioning of the class graph.
//!
//! The objective blends the weighted edge cut with the cost of duplicating
//! resources across partitions:
//!
//! ```text
//! objective = alpha * cut + (1 - alpha) * sum_r (copies(r) - 1) * unit_cost(kind(r))
//! ```
//!
//! where `copies(r)` is the number of partitions holding a class bound to
//! `r`. Each restart coarsens by heavy-edge matching, grows an initial
//! partition on the coarsest graph, then projects back level by level with
//! rebalancing, greedy boundary refinement and Fiduccia-Mattheyses passes.
//! The best restart wins.

mod coarsen;
mod initial;
mod state;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coarsen::{coarsen, CoarseLevel, CoarsenParams};

use crate::model::{ApplicationGraph, ModelError, PartitionSet, PriceTable};
use crate::rational::{self, Rational};
use state::{balance_cap, PartState, WorkGraph};

/// Refinement sweeps per level.
pub const MAX_REFINE_PASSES: usize = 10;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("k = {k} exceeds the number of classes ({n})")]
    TooManyPartitions { k: usize, n: usize },
    #[error("invalid objective configuration: {0}")]
    InvalidConfig(String),
    #[error("no balanced partition found within epsilon; class weights are too uneven")]
    Unbalanced,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    /// Weight of the edge cut; `1 - alpha` weighs duplication cost.
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    /// Balance tolerance: loads stay within `(1 + epsilon) * ceil(total / k)`.
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_levels: usize,
    pub min_coarse_size: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            alpha: Rational::new(1, 2),
            epsilon: Rational::new(1, 10),
            k: 2,
            seed: 0,
            restarts: 8,
            max_levels: 16,
            min_coarse_size: 20,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<(), PartitionError> {
        let bad = |m: &str| Err(PartitionError::InvalidConfig(m.to_string()));
        if self.alpha < Rational::default() || self.alpha > rational::int(1) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.epsilon < Rational::default() {
            return bad("epsilon must be non-negative");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }
}

/// Total weight of class edges whose endpoints lie in different partitions.
pub fn edge_cut(g: &ApplicationGraph, p: &PartitionSet) -> Rational {
    g.class_edges.iter().filter(|e| p.part_of(e.u) != p.part_of(e.v)).map(|e| e.weight).sum()
}

/// `sum_r (copies(r) - 1) * unit_cost(kind(r))` over resources with at least one client.
pub fn dup_cost(g: &ApplicationGraph, p: &PartitionSet, prices: &PriceTable) -> Rational {
    let mut touched = vec![vec![false; p.k()]; g.resources.len()];
    for e in &g.resource_edges {
        touched[e.resource][p.part_of(e.class)] = true;
    }
    g.resources
        .iter()
        .map(|r| {
            let copies = touched[r.id].iter().filter(|&&t| t).count() as i128;
            prices.unit_cost(r.kind) * rational::int((copies - 1).max(0))
        })
        .sum()
}

pub fn objective(
    g: &ApplicationGraph,
    p: &PartitionSet,
    prices: &PriceTable,
    cfg: &ObjectiveConfig,
) -> Result<Rational, PartitionError> {
    if p.len() != g.class_count() {
        return Err(ModelError::SizeMismatch { expected: g.class_count(), got: p.len() }.into());
    }
    let alpha = cfg.alpha;
    Ok(alpha * edge_cut(g, p) + (rational::int(1) - alpha) * dup_cost(g, p, prices))
}

/// Whether every partition's load is within the balance cap for `epsilon`.
pub fn is_balanced(g: &ApplicationGraph, p: &PartitionSet, epsilon: Rational) -> bool {
    let cap = balance_cap(g.total_vertex_weight(), p.k(), epsilon);
    let mut load = vec![0u64; p.k()];
    for c in &g.classes {
        load[p.part_of(c.id)] += c.weight;
    }
    load.iter().all(|&l| rational::int(l as i128) <= cap)
}

/// Greedy graph-growing partition of `g` into `cfg.k` regions, seeded by `cfg.seed`.
pub fn initial_partition(
    g: &ApplicationGraph,
    cfg: &ObjectiveConfig,
    prices: &PriceTable,
) -> Result<PartitionSet, PartitionError> {
    cfg.validate()?;
    check_k(g, cfg.k)?;
    let wg = WorkGraph::new(g, prices);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(PartitionSet::new(cfg.k, initial::grow(&wg, cfg, &mut rng))?)
}

/// Boundary refinement of `p`; the objective never increases.
pub fn refine(
    g: &ApplicationGraph,
    p: &PartitionSet,
    cfg: &ObjectiveConfig,
    prices: &PriceTable,
) -> Result<PartitionSet, PartitionError> {
    if p.len() != g.class_count() {
        return Err(ModelError::SizeMismatch { expected: g.class_count(), got: p.len() }.into());
    }
    let wg = WorkGraph::new(g, prices);
    let cfg = ObjectiveConfig { k: p.k(), ..cfg.clone() };
    let mut st = PartState::new(&wg, p.k(), p.assignment().to_vec(), &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    st.refine(&mut rng, MAX_REFINE_PASSES);
    Ok(PartitionSet::new(p.k(), st.part)?)
}

fn check_k(g: &ApplicationGraph, k: usize) -> Result<(), PartitionError> {
    if k > g.class_count() {
        return Err(PartitionError::TooManyPartitions { k, n: g.class_count() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionOutcome {
    pub partition: PartitionSet,
    pub objective: Rational,
    /// Seed of the winning restart.
    pub seed: u64,
}

/// Partitions `g` into `cfg.k` balanced, non-empty parts minimizing the
/// blended objective. Restart `i` uses seed `cfg.seed + i`; the lowest
/// objective wins, ties to the earliest restart.
pub fn partition_graph(
    g: &ApplicationGraph,
    prices: &PriceTable,
    cfg: &ObjectiveConfig,
) -> Result<PartitionOutcome, PartitionError> {
    cfg.validate()?;
    check_k(g, cfg.k)?;
    let wg = WorkGraph::new(g, prices);

    let runs: Vec<Result<PartitionOutcome, PartitionError>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let part = run_once(g, &wg, prices, cfg, seed)?;
            let st = PartState::new(&wg, cfg.k, part.clone(), cfg);
            // labels in order of first appearance, so equal cuts print identically
            let partition = PartitionSet::new(cfg.k, part)?.compacted();
            Ok(PartitionOutcome { objective: st.objective(), partition, seed })
        })
        .collect();

    let mut best: Option<PartitionOutcome> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| o.objective < b.objective) {
                    best = Some(o);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(PartitionError::Unbalanced))
}

fn run_once(
    g: &ApplicationGraph,
    fine: &WorkGraph,
    prices: &PriceTable,
    cfg: &ObjectiveConfig,
    seed: u64,
) -> Result<Vec<usize>, PartitionError> {
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = CoarsenParams {
        max_levels: cfg.max_levels,
        min_size: cfg.min_coarse_size,
        k,
        seed: rng.random(),
        max_vertex_weight: Some(max_coarse_weight(g.total_vertex_weight(), k, cfg)),
    };
    let levels = if g.class_count() > params.threshold() { coarsen(g, &params) } else { Vec::new() };

    let coarsest = levels.last().map_or(g, |l| &l.graph);
    let coarse_wg = WorkGraph::new(coarsest, prices);
    let mut part = initial::grow(&coarse_wg, cfg, &mut rng);
    let mut st = PartState::new(&coarse_wg, k, part, cfg);
    st.rebalance();
    st.polish(&mut rng, MAX_REFINE_PASSES);
    part = st.part;

    for depth in (0..levels.len()).rev() {
        let finer = if depth == 0 { None } else { Some(&levels[depth - 1].graph) };
        let projected: Vec<usize> = levels[depth].projection.iter().map(|&c| part[c]).collect();
        let owned;
        let wg = match finer {
            Some(fg) => {
                owned = WorkGraph::new(fg, prices);
                &owned
            }
            None => fine,
        };
        let mut st = PartState::new(wg, k, projected, cfg);
        st.rebalance();
        st.polish(&mut rng, MAX_REFINE_PASSES);
        part = st.part;
    }

    let mut st = PartState::new(fine, k, part, cfg);
    if !st.is_balanced() && !st.rebalance() {
        return Err(PartitionError::Unbalanced);
    }
    if let Some(empty) = st.load.iter().position(|&l| l == 0) {
        return Err(ModelError::EmptyPartition(empty).into());
    }
    Ok(st.part)
}

/// Coarse vertices stay below 1.5x the average weight at the coarsening target.
fn max_coarse_weight(total: u64, k: usize, cfg: &ObjectiveConfig) -> u64 {
    let target = cfg.min_coarse_size.max(4 * k).max(1) as u64;
    (total * 3).div_ceil(2 * target).max(2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepEntry {
    pub k: usize,
    pub outcome: PartitionOutcome,
    pub ngm: Rational,
}

/// Partitions for every `k` in `ks` and returns all runs plus the index of
/// the one with the highest weighted modularity (ties to the smallest `k`).
pub fn sweep_k(
    g: &ApplicationGraph,
    prices: &PriceTable,
    cfg: &ObjectiveConfig,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<(Vec<SweepEntry>, usize), crate::Error> {
    if ks.is_empty() || *ks.start() == 0 {
        return Err(PartitionError::InvalidConfig(format!("empty k range {}..{}", ks.start(), ks.end())).into());
    }
    let mut entries = Vec::new();
    for k in ks {
        let outcome = partition_graph(g, prices, &ObjectiveConfig { k, ..cfg.clone() })?;
        let ngm = crate::metrics::compute_ngm(g, &outcome.partition, true)?;
        entries.push(SweepEntry { k, outcome, ngm });
    }
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.ngm > entries[best].ngm {
            best = i;
        }
    }
    Ok((entries, best))
}

#[cfg(test)]
mod tests;
