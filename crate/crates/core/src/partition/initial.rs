//! Greedy graph growing.
//!
//! The first seed is the vertex farthest from a random start; each further seed is the vertex
//! farthest (in hops) from the seeds chosen so far, ties broken by a seeded
//! random rank. Regions then grow by repeatedly taking the unassigned vertex
//! with the strongest attachment to a region that still has room.
//! Attachment blends edge weight and the resource cost already present in
//! the region with the same `alpha` as the objective.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rational::Rational;

use super::state::{balance_cap, WorkGraph};
use super::ObjectiveConfig;

/// Hop distances from `src` folded into `dist` (which keeps earlier minima).
fn bfs(wg: &WorkGraph, src: usize, dist: &mut [usize]) {
    let mut queue = VecDeque::from([src]);
    dist[src] = 0;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &wg.adj[u] {
            if dist[v] > dist[u] + 1 {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

fn pick_seeds<R: Rng>(wg: &WorkGraph, k: usize, rng: &mut R) -> Vec<usize> {
    let n = wg.len();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let farthest = |dist: &[usize], taken: &[usize]| {
        (0..n)
            .filter(|v| !taken.contains(v))
            .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(rank[b].cmp(&rank[a])))
            .expect("k <= n")
    };
    // start from the far end of a random vertex so the first region does
    // not begin on a boundary
    let start = rng.random_range(0..n);
    let mut dist = vec![usize::MAX; n];
    bfs(wg, start, &mut dist);
    let mut seeds = vec![farthest(&dist, &[])];
    dist.fill(usize::MAX);
    while seeds.len() < k {
        bfs(wg, *seeds.last().expect("at least one seed"), &mut dist);
        seeds.push(farthest(&dist, &seeds));
    }
    seeds
}

struct Regions<'a> {
    wg: &'a WorkGraph,
    alpha: Rational,
    beta: Rational,
    cap: Rational,
    part: Vec<usize>,
    load: Vec<u64>,
    /// `present[r][region]`: the region already holds a client of resource `r`.
    present: Vec<Vec<bool>>,
    /// `attach[v][region]`: attachment of unassigned `v` to each region.
    attach: Vec<Vec<Rational>>,
}

impl Regions<'_> {
    fn assign(&mut self, v: usize, region: usize) {
        self.part[v] = region;
        self.load[region] += self.wg.vwgt[v];
        for &(u, w) in &self.wg.adj[v] {
            self.attach[u][region] += self.alpha * w;
        }
        for &res in &self.wg.res[v] {
            if !self.present[res][region] {
                self.present[res][region] = true;
                for &u in &self.wg.clients[res] {
                    self.attach[u][region] += self.beta * self.wg.res_cost[res];
                }
            }
        }
    }

    fn fits(&self, region: usize, w: u64) -> bool {
        Rational::from_integer((self.load[region] + w) as i128) <= self.cap
    }

    /// Strongest positive attachment to a region with room; ties go to the
    /// lowest vertex id, then the lowest region.
    fn best(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, Rational)> = None;
        for v in (0..self.part.len()).filter(|&v| self.part[v] == usize::MAX) {
            for (region, &a) in self.attach[v].iter().enumerate() {
                if a <= Rational::default() || !self.fits(region, self.wg.vwgt[v]) {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, _, b)| a > *b) {
                    best = Some((v, region, a));
                }
            }
        }
        best.map(|(v, r, _)| (v, r))
    }
}

pub(crate) fn grow<R: Rng>(wg: &WorkGraph, cfg: &ObjectiveConfig, rng: &mut R) -> Vec<usize> {
    let n = wg.len();
    let k = cfg.k;
    if k == 1 {
        return vec![0; n];
    }
    let mut regions = Regions {
        wg,
        alpha: cfg.alpha,
        beta: Rational::from_integer(1) - cfg.alpha,
        cap: balance_cap(wg.total_weight(), k, cfg.epsilon),
        part: vec![usize::MAX; n],
        load: vec![0; k],
        present: vec![vec![false; k]; wg.res_cost.len()],
        attach: vec![vec![Rational::default(); k]; n],
    };
    for (region, seed) in pick_seeds(wg, k, rng).into_iter().enumerate() {
        regions.assign(seed, region);
    }
    for _ in k..n {
        let (v, region) = regions.best().unwrap_or_else(|| {
            // nothing attached has room: lowest unassigned id to the lightest region
            let v = regions.part.iter().position(|&p| p == usize::MAX).expect("unassigned vertex");
            let region = (0..k).min_by_key(|&r| (regions.load[r], r)).expect("k >= 1");
            (v, region)
        });
        regions.assign(v, region);
    }
    regions.part
}
