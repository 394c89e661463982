//! Heavy-edge matching coarsening.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ApplicationGraph, ClassEdge, ClassId, ClassNode, ResourceEdge};

/// One coarsening step: the contracted graph and where each vertex of the
/// finer graph went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseLevel {
    pub graph: ApplicationGraph,
    /// `projection[fine_id]` is the coarse id.
    pub projection: Vec<ClassId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarsenParams {
    pub max_levels: usize,
    pub min_size: usize,
    /// Target partition count; coarsening stops at `max(min_size, 4k)`
    /// vertices and never contracts below `k`.
    pub k: usize,
    pub seed: u64,
    /// Pairs whose combined vertex weight would exceed this are not matched.
    pub max_vertex_weight: Option<u64>,
}

impl CoarsenParams {
    pub fn threshold(&self) -> usize {
        self.min_size.max(4 * self.k)
    }
}

pub fn coarsen(g: &ApplicationGraph, params: &CoarsenParams) -> Vec<CoarseLevel> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut levels: Vec<CoarseLevel> = Vec::new();
    while levels.len() < params.max_levels {
        let current = levels.last().map_or(g, |l| &l.graph);
        let Some(level) = contract_once(current, params, &mut rng) else {
            break;
        };
        let done = level.graph.class_count() <= params.threshold();
        levels.push(level);
        if done {
            break;
        }
    }
    levels
}

fn contract_once(g: &ApplicationGraph, params: &CoarsenParams, rng: &mut ChaCha8Rng) -> Option<CoarseLevel> {
    let n = g.class_count();
    let mut adj: Vec<Vec<(usize, &ClassEdge)>> = vec![Vec::new(); n];
    for e in &g.class_edges {
        adj[e.u].push((e.v, e));
        adj[e.v].push((e.u, e));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let floor = params.k.max(1);
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut remaining = n;
    for &v in &order {
        if remaining <= floor {
            break;
        }
        if mate[v].is_some() {
            continue;
        }
        let mut best: Option<(usize, &ClassEdge)> = None;
        for &(u, e) in &adj[v] {
            if mate[u].is_some() {
                continue;
            }
            if let Some(limit) = params.max_vertex_weight {
                if g.classes[u].weight + g.classes[v].weight > limit {
                    continue;
                }
            }
            let better = match best {
                None => true,
                Some((bu, be)) => e.weight > be.weight || (e.weight == be.weight && u < bu),
            };
            if better {
                best = Some((u, e));
            }
        }
        if let Some((u, _)) = best {
            mate[v] = Some(u);
            mate[u] = Some(v);
            remaining -= 1;
        }
    }
    if remaining == n {
        return None;
    }

    // coarse ids follow the lowest fine id of each group
    let mut projection = vec![usize::MAX; n];
    let mut classes = Vec::with_capacity(remaining);
    for v in 0..n {
        if projection[v] != usize::MAX {
            continue;
        }
        let id = classes.len();
        projection[v] = id;
        let mut weight = g.classes[v].weight;
        if let Some(u) = mate[v] {
            projection[u] = id;
            weight += g.classes[u].weight;
        }
        classes.push(ClassNode { id, name: g.classes[v].name.clone(), weight });
    }

    let mut edges: BTreeMap<(usize, usize), ClassEdge> = BTreeMap::new();
    for e in &g.class_edges {
        let (cu, cv) = (projection[e.u], projection[e.v]);
        if cu == cv {
            continue;
        }
        let key = (cu.min(cv), cu.max(cv));
        let projected = ClassEdge { u: key.0, v: key.1, ..e.clone() };
        edges.entry(key).and_modify(|x| x.merge(&projected)).or_insert(projected);
    }

    let mut resource_edges: Vec<ResourceEdge> =
        g.resource_edges.iter().map(|e| ResourceEdge { resource: e.resource, class: projection[e.class] }).collect();
    resource_edges.sort_by_key(|e| (e.class, e.resource));
    resource_edges.dedup();

    Some(CoarseLevel {
        graph: ApplicationGraph {
            classes,
            resources: g.resources.clone(),
            flows: Vec::new(),
            resource_edges,
            class_edges: edges.into_values().collect(),
            dependencies: Vec::new(),
            weight_config: g.weight_config.clone(),
        },
        projection,
    })
}
