//! Adjacency form of an [`ApplicationGraph`] and the incremental bookkeeping
//! shared by initial partitioning, rebalancing and refinement.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{ApplicationGraph, PriceTable};
use crate::rational::{self, Rational};

use super::ObjectiveConfig;

pub(crate) struct WorkGraph {
    pub vwgt: Vec<u64>,
    pub adj: Vec<Vec<(usize, Rational)>>,
    /// Resources bound to each vertex.
    pub res: Vec<Vec<usize>>,
    /// Vertices bound to each resource.
    pub clients: Vec<Vec<usize>>,
    pub res_cost: Vec<Rational>,
}

impl WorkGraph {
    pub fn new(g: &ApplicationGraph, prices: &PriceTable) -> Self {
        let n = g.class_count();
        let mut adj = vec![Vec::new(); n];
        for e in &g.class_edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        let res = g.class_resources();
        let mut clients = vec![Vec::new(); g.resources.len()];
        for (v, list) in res.iter().enumerate() {
            for &r in list {
                clients[r].push(v);
            }
        }
        Self {
            vwgt: g.classes.iter().map(|c| c.weight).collect(),
            adj,
            res,
            clients,
            res_cost: g.resources.iter().map(|r| prices.unit_cost(r.kind)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vwgt.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.vwgt.iter().sum()
    }
}

/// Largest allowed partition load: `(1 + epsilon) * ceil(total / k)`.
pub(crate) fn balance_cap(total: u64, k: usize, epsilon: Rational) -> Rational {
    let avg = total.div_ceil(k as u64);
    (rational::int(1) + epsilon) * rational::int(avg as i128)
}

/// Non-improving moves an FM pass tolerates before stopping.
const FM_PATIENCE: usize = 50;

pub(crate) struct PartState<'a> {
    pub wg: &'a WorkGraph,
    pub k: usize,
    pub part: Vec<usize>,
    pub load: Vec<u64>,
    /// `res_count[r][p]`: vertices of partition `p` bound to resource `r`.
    pub res_count: Vec<Vec<u32>>,
    alpha: Rational,
    beta: Rational,
    cap: Rational,
}

impl<'a> PartState<'a> {
    pub fn new(wg: &'a WorkGraph, k: usize, part: Vec<usize>, cfg: &ObjectiveConfig) -> Self {
        let mut load = vec![0; k];
        let mut res_count = vec![vec![0u32; k]; wg.res_cost.len()];
        for (v, &p) in part.iter().enumerate() {
            load[p] += wg.vwgt[v];
            for &r in &wg.res[v] {
                res_count[r][p] += 1;
            }
        }
        Self {
            wg,
            k,
            part,
            load,
            res_count,
            alpha: cfg.alpha,
            beta: rational::int(1) - cfg.alpha,
            cap: balance_cap(wg.total_weight(), k, cfg.epsilon),
        }
    }

    pub fn fits(&self, p: usize, extra: u64) -> bool {
        rational::int((self.load[p] + extra) as i128) <= self.cap
    }

    pub fn is_balanced(&self) -> bool {
        (0..self.k).all(|p| self.fits(p, 0))
    }

    pub fn cut(&self) -> Rational {
        let mut cut = Rational::default();
        for (u, list) in self.wg.adj.iter().enumerate() {
            for &(v, w) in list {
                if u < v && self.part[u] != self.part[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    pub fn dup_cost(&self) -> Rational {
        self.res_count
            .iter()
            .zip(&self.wg.res_cost)
            .map(|(counts, &cost)| {
                let copies = counts.iter().filter(|&&c| c > 0).count() as i128;
                cost * rational::int((copies - 1).max(0))
            })
            .sum()
    }

    pub fn objective(&self) -> Rational {
        self.alpha * self.cut() + self.beta * self.dup_cost()
    }

    /// Edge weight from `v` into each partition.
    pub fn connectivity(&self, v: usize) -> Vec<Rational> {
        let mut conn = vec![Rational::default(); self.k];
        for &(u, w) in &self.wg.adj[v] {
            conn[self.part[u]] += w;
        }
        conn
    }

    /// Objective decrease from moving `v` to partition `to`.
    pub fn gain(&self, v: usize, to: usize, conn: &[Rational]) -> Rational {
        let from = self.part[v];
        let cut_gain = conn[to] - conn[from];
        let mut dup_gain = Rational::default();
        for &r in &self.wg.res[v] {
            let counts = &self.res_count[r];
            if counts[from] == 1 {
                dup_gain += self.wg.res_cost[r];
            }
            if counts[to] == 0 {
                dup_gain -= self.wg.res_cost[r];
            }
        }
        self.alpha * cut_gain + self.beta * dup_gain
    }

    pub fn apply(&mut self, v: usize, to: usize) {
        let from = self.part[v];
        let w = self.wg.vwgt[v];
        self.load[from] -= w;
        self.load[to] += w;
        for &r in &self.wg.res[v] {
            self.res_count[r][from] -= 1;
            self.res_count[r][to] += 1;
        }
        self.part[v] = to;
    }

    /// Partitions `v` could move to: those of its neighbors and those
    /// holding other clients of its resources.
    pub fn candidates(&self, v: usize) -> Vec<usize> {
        let from = self.part[v];
        let mut seen = vec![false; self.k];
        for &(u, _) in &self.wg.adj[v] {
            seen[self.part[u]] = true;
        }
        for &r in &self.wg.res[v] {
            for (p, &c) in self.res_count[r].iter().enumerate() {
                if c > 0 {
                    seen[p] = true;
                }
            }
        }
        seen[from] = false;
        (0..self.k).filter(|&p| seen[p]).collect()
    }

    /// Best balance-feasible move of `v` by gain, ties to the lowest
    /// partition index. Never empties a partition.
    fn best_move(&self, v: usize, targets: &[usize]) -> Option<(usize, Rational)> {
        let from = self.part[v];
        let w = self.wg.vwgt[v];
        if self.load[from] == w {
            return None;
        }
        let conn = self.connectivity(v);
        let mut best: Option<(usize, Rational)> = None;
        for &to in targets {
            if to == from || !self.fits(to, w) {
                continue;
            }
            let gain = self.gain(v, to, &conn);
            if best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((to, gain));
            }
        }
        best
    }

    /// Greedy boundary refinement: sweeps vertices in a seeded random order
    /// and applies each vertex's best strictly improving move. Stops after a
    /// sweep without moves or after `max_passes` sweeps.
    pub fn refine<R: Rng>(&mut self, rng: &mut R, max_passes: usize) -> usize {
        let mut order: Vec<usize> = (0..self.wg.len()).collect();
        let mut moves = 0;
        for _ in 0..max_passes {
            order.shuffle(rng);
            let mut moved = false;
            for &v in &order {
                let targets = self.candidates(v);
                if targets.is_empty() {
                    continue;
                }
                if let Some((to, gain)) = self.best_move(v, &targets) {
                    if gain > Rational::default() {
                        self.apply(v, to);
                        moved = true;
                        moves += 1;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        moves
    }

    /// One Fiduccia-Mattheyses pass: repeatedly applies the best move of any
    /// unlocked vertex to any partition, even at negative gain, locking each moved vertex,
    /// then rolls back to the best prefix. Gives up after `patience` moves
    /// without a new best. Returns whether the objective dropped.
    pub fn fm_pass(&mut self, patience: usize) -> bool {
        let n = self.wg.len();
        let mut locked = vec![false; n];
        let mut log: Vec<(usize, usize)> = Vec::new();
        let (mut cur, mut best) = (Rational::default(), Rational::default());
        let mut best_len = 0;
        let all: Vec<usize> = (0..self.k).collect();
        while log.len() - best_len < patience {
            let mut pick: Option<(usize, usize, Rational)> = None;
            for v in (0..n).filter(|&v| !locked[v]) {
                if let Some((to, gain)) = self.best_move(v, &all) {
                    if pick.as_ref().is_none_or(|(_, _, g)| gain > *g) {
                        pick = Some((v, to, gain));
                    }
                }
            }
            let Some((v, to, gain)) = pick else { break };
            log.push((v, self.part[v]));
            self.apply(v, to);
            locked[v] = true;
            cur += gain;
            if cur > best {
                best = cur;
                best_len = log.len();
            }
        }
        for &(v, from) in log[best_len..].iter().rev() {
            self.apply(v, from);
        }
        best > Rational::default()
    }

    /// Greedy refinement followed by FM passes until neither improves.
    pub fn polish<R: Rng>(&mut self, rng: &mut R, max_passes: usize) {
        self.refine(rng, max_passes);
        for _ in 0..max_passes {
            if !self.fm_pass(FM_PATIENCE) {
                break;
            }
            self.refine(rng, max_passes);
        }
    }

    /// Moves vertices out of overloaded partitions, each time taking the
    /// move that costs the least objective. Returns whether the result is
    /// balanced.
    pub fn rebalance(&mut self) -> bool {
        let all: Vec<usize> = (0..self.k).collect();
        // each move strictly reduces total overload, so this terminates
        loop {
            let over = (0..self.k)
                .filter(|&p| !self.fits(p, 0))
                .max_by(|&a, &b| self.load[a].cmp(&self.load[b]).then(b.cmp(&a)));
            let Some(over) = over else {
                return true;
            };
            let mut best: Option<(usize, usize, Rational)> = None;
            for v in (0..self.wg.len()).filter(|&v| self.part[v] == over) {
                if let Some((to, gain)) = self.best_move(v, &all) {
                    if best.as_ref().is_none_or(|(_, _, g)| gain > *g) {
                        best = Some((v, to, gain));
                    }
                }
            }
            match best {
                Some((v, to, _)) => self.apply(v, to),
                None => return false,
            }
        }
    }
}
