//! Predicted infrastructure per partition and its cost.
//!
//! Every distinct resource touched by a partition's classes is counted once
//! for that partition, so a database used from two partitions is counted
//! twice. Each non-empty partition also needs at least one compute unit.

use serde::{Deserialize, Serialize};

use crate::model::{ApplicationGraph, InfrastructureFactor, ModelError, PartitionSet, PriceTable, ResourceKind};
use crate::rational::{self, Rational};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InfraError {
    #[error("partition index {index} out of range for k = {k}")]
    InvalidPartition { index: usize, k: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Counting options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfraModel {
    /// Every non-empty partition needs at least one compute unit.
    pub compute_floor: bool,
    /// Databases are one managed service shared by all partitions; each
    /// database is attributed to the lowest-index partition that uses it.
    pub shared_databases: bool,
}

impl Default for InfraModel {
    fn default() -> Self {
        Self { compute_floor: true, shared_databases: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionInfra {
    pub partition: usize,
    pub factor: InfrastructureFactor,
    /// Names of the resources the partition's classes are bound to, sorted.
    pub resources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionInfraReport {
    pub per_partition: Vec<PartitionInfra>,
    pub total: InfrastructureFactor,
    pub monolith_baseline: InfrastructureFactor,
    #[serde(with = "rational::serde_str")]
    pub total_cost: Rational,
    #[serde(with = "rational::serde_str")]
    pub baseline_cost: Rational,
}

/// `touched[p][r]`: whether partition `p` has a class bound to resource `r`.
fn touched(g: &ApplicationGraph, p: &PartitionSet) -> Vec<Vec<bool>> {
    let mut out = vec![vec![false; g.resources.len()]; p.k()];
    for e in &g.resource_edges {
        out[p.part_of(e.class)][e.resource] = true;
    }
    out
}

impl InfraModel {
    fn check(&self, g: &ApplicationGraph, p: &PartitionSet) -> Result<(), InfraError> {
        if p.len() != g.class_count() {
            return Err(ModelError::SizeMismatch { expected: g.class_count(), got: p.len() }.into());
        }
        Ok(())
    }

    fn factor_of(
        &self,
        g: &ApplicationGraph,
        p: &PartitionSet,
        touched: &[Vec<bool>],
        index: usize,
    ) -> InfrastructureFactor {
        let mut f = InfrastructureFactor::default();
        for r in &g.resources {
            if !touched[index][r.id] {
                continue;
            }
            if self.shared_databases && r.kind == ResourceKind::Database {
                let owner = touched.iter().position(|t| t[r.id]);
                if owner != Some(index) {
                    continue;
                }
            }
            *f.get_mut(r.kind) += 1;
        }
        if self.compute_floor && p.assignment().contains(&index) {
            f.n_ec = f.n_ec.max(1);
        }
        f
    }

    pub fn predict(
        &self,
        g: &ApplicationGraph,
        p: &PartitionSet,
        index: usize,
    ) -> Result<InfrastructureFactor, InfraError> {
        self.check(g, p)?;
        if index >= p.k() {
            return Err(InfraError::InvalidPartition { index, k: p.k() });
        }
        Ok(self.factor_of(g, p, &touched(g, p), index))
    }

    /// Distinct bound resources of the whole monolith by kind. Declared
    /// resources no class is bound to are not counted.
    pub fn baseline(&self, g: &ApplicationGraph) -> InfrastructureFactor {
        let mut bound = vec![false; g.resources.len()];
        for e in &g.resource_edges {
            bound[e.resource] = true;
        }
        let mut f = InfrastructureFactor::default();
        for r in g.resources.iter().filter(|r| bound[r.id]) {
            *f.get_mut(r.kind) += 1;
        }
        if self.compute_floor && g.class_count() > 0 {
            f.n_ec = f.n_ec.max(1);
        }
        f
    }

    pub fn report(
        &self,
        g: &ApplicationGraph,
        p: &PartitionSet,
        prices: &PriceTable,
    ) -> Result<PartitionInfraReport, InfraError> {
        self.check(g, p)?;
        let touched = touched(g, p);
        let per_partition: Vec<PartitionInfra> = (0..p.k())
            .map(|index| {
                let mut resources: Vec<String> =
                    g.resources.iter().filter(|r| touched[index][r.id]).map(|r| r.name.clone()).collect();
                resources.sort();
                PartitionInfra { partition: index, factor: self.factor_of(g, p, &touched, index), resources }
            })
            .collect();
        let total: InfrastructureFactor = per_partition.iter().map(|pi| pi.factor).sum();
        let monolith_baseline = self.baseline(g);
        Ok(PartitionInfraReport {
            total_cost: infra_cost(&total, prices),
            baseline_cost: infra_cost(&monolith_baseline, prices),
            per_partition,
            total,
            monolith_baseline,
        })
    }
}

pub fn predict_infrastructure_factor(
    g: &ApplicationGraph,
    p: &PartitionSet,
    partition_index: usize,
) -> Result<InfrastructureFactor, InfraError> {
    InfraModel::default().predict(g, p, partition_index)
}

pub fn monolith_baseline(g: &ApplicationGraph) -> InfrastructureFactor {
    InfraModel::default().baseline(g)
}

pub fn infra_cost(f: &InfrastructureFactor, prices: &PriceTable) -> Rational {
    ResourceKind::ALL.iter().map(|&k| prices.unit_cost(k) * rational::int(f.get(k) as i128)).sum()
}

pub fn build_infra_report(
    g: &ApplicationGraph,
    p: &PartitionSet,
    prices: &PriceTable,
) -> Result<PartitionInfraReport, InfraError> {
    InfraModel::default().report(g, p, prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphbuild::{build_graph, WeightConfig};
    use crate::ingest::{Binding, DependencyRecord, InfraManifest, ManifestResource, Relation};
    use proptest::prelude::*;

    /// Chain A-B-C-D with the given resources and bindings.
    fn graph(resources: &[(&str, ResourceKind)], bindings: &[(&str, &str)]) -> ApplicationGraph {
        let deps: Vec<_> =
            ["A", "B", "C", "D"].windows(2).map(|w| DependencyRecord::new(w[0], w[1], Relation::Call)).collect();
        let m = InfraManifest {
            resources: resources.iter().map(|(n, k)| ManifestResource { name: n.to_string(), kind: *k }).collect(),
            bindings: bindings.iter().map(|(c, r)| Binding { class: c.to_string(), resource: r.to_string() }).collect(),
        };
        build_graph(&deps, &m, &[], &WeightConfig::default()).unwrap()
    }

    use ResourceKind::*;

    #[test]
    fn counts_distinct_resources_with_compute_floor() {
        let g = graph(
            &[("db1", Database), ("s3a", FileStorage), ("s3b", FileStorage)],
            &[("A", "db1"), ("B", "s3a"), ("B", "s3b"), ("A", "s3a")],
        );
        let p = PartitionSet::new(2, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(predict_infrastructure_factor(&g, &p, 0).unwrap(), InfrastructureFactor::new(1, 2, 1, 0));
        assert_eq!(predict_infrastructure_factor(&g, &p, 1).unwrap(), InfrastructureFactor::new(1, 0, 0, 0));
    }

    #[test]
    fn split_database_is_counted_per_partition() {
        let g = graph(&[("db1", Database)], &[("A", "db1"), ("D", "db1")]);
        let p = PartitionSet::new(2, vec![0, 0, 1, 1]).unwrap();
        let f0 = predict_infrastructure_factor(&g, &p, 0).unwrap();
        let f1 = predict_infrastructure_factor(&g, &p, 1).unwrap();
        assert!(f0.n_db >= 1 && f1.n_db >= 1);
        assert_eq!((f0 + f1).n_db, 2);
    }

    #[test]
    fn invalid_index_is_an_error() {
        let g = graph(&[], &[]);
        let p = PartitionSet::single(4);
        assert_eq!(predict_infrastructure_factor(&g, &p, 1), Err(InfraError::InvalidPartition { index: 1, k: 1 }));
    }

    #[test]
    fn baseline_counts_distinct_kinds() {
        let g = graph(&[("db1", Database), ("cacheA", Cache)], &[("A", "db1"), ("C", "cacheA"), ("D", "db1")]);
        assert_eq!(monolith_baseline(&g), InfrastructureFactor::new(1, 0, 1, 1));
        assert_eq!(monolith_baseline(&graph(&[], &[])), InfrastructureFactor::new(1, 0, 0, 0));
        let single = PartitionSet::single(4);
        assert_eq!(predict_infrastructure_factor(&g, &single, 0).unwrap(), monolith_baseline(&g));
    }

    #[test]
    fn declared_compute_is_not_floored_twice() {
        let g = graph(&[("vm1", Compute), ("vm2", Compute)], &[("A", "vm1"), ("B", "vm2")]);
        assert_eq!(monolith_baseline(&g).n_ec, 2);
        let p = PartitionSet::new(2, vec![0, 1, 1, 1]).unwrap();
        assert_eq!(predict_infrastructure_factor(&g, &p, 0).unwrap().n_ec, 1);
        assert_eq!(predict_infrastructure_factor(&g, &p, 1).unwrap().n_ec, 1);
    }

    #[test]
    fn cost_is_a_dot_product() {
        assert_eq!(infra_cost(&InfrastructureFactor::default(), &PriceTable::default()), rational::int(0));
        let prices = PriceTable {
            compute: rational::int(1),
            file_storage: Rational::new(1, 4),
            database: rational::int(2),
            cache: Rational::new(1, 2),
        };
        assert_eq!(infra_cost(&InfrastructureFactor::new(1, 2, 1, 0), &prices), Rational::new(7, 2));
    }

    #[test]
    fn single_partition_report_equals_baseline() {
        let g = graph(&[("db1", Database), ("s3a", FileStorage)], &[("A", "db1"), ("B", "s3a")]);
        let r = build_infra_report(&g, &PartitionSet::single(4), &PriceTable::default()).unwrap();
        assert_eq!(r.total, r.monolith_baseline);
        assert_eq!(r.total_cost, r.baseline_cost);
    }

    #[test]
    fn one_split_database_costs_one_database() {
        let g = graph(&[("db1", Database)], &[("A", "db1"), ("D", "db1")]);
        let p = PartitionSet::new(2, vec![0, 0, 1, 1]).unwrap();
        let prices = PriceTable::default();
        let off = InfraModel { compute_floor: false, ..InfraModel::default() };
        let r = off.report(&g, &p, &prices).unwrap();
        assert_eq!(r.total_cost - r.baseline_cost, prices.database);
        // with the floor, the second compute unit is added as well
        let r = build_infra_report(&g, &p, &prices).unwrap();
        assert_eq!(r.total_cost - r.baseline_cost, prices.database + prices.compute);
        assert_eq!(r.per_partition[0].resources, vec!["db1"]);
    }

    #[test]
    fn shared_databases_are_counted_once() {
        let g = graph(&[("db1", Database), ("c", Cache)], &[("A", "db1"), ("D", "db1"), ("A", "c"), ("D", "c")]);
        let p = PartitionSet::new(2, vec![0, 0, 1, 1]).unwrap();
        let shared = InfraModel { shared_databases: true, ..InfraModel::default() };
        let r = shared.report(&g, &p, &PriceTable::default()).unwrap();
        assert_eq!(r.total, InfrastructureFactor::new(2, 0, 1, 2));
        assert_eq!(r.per_partition[1].factor.n_db, 0);
    }

    fn arb_case() -> impl Strategy<Value = (ApplicationGraph, PartitionSet)> {
        (prop::collection::vec((0usize..8, 0usize..5), 0..16), prop::collection::vec(0usize..4, 8), 1usize..5).prop_map(
            |(binds, parts, k)| {
                let names = ["A", "B", "C", "D", "E", "F", "G", "H"];
                let deps: Vec<_> =
                    names.windows(2).map(|w| DependencyRecord::new(w[0], w[1], Relation::Call)).collect();
                let m = InfraManifest {
                    resources: (0..5)
                        .map(|i| ManifestResource { name: format!("r{i}"), kind: ResourceKind::ALL[i % 4] })
                        .collect(),
                    bindings: binds
                        .into_iter()
                        .map(|(c, r)| Binding { class: names[c].into(), resource: format!("r{r}") })
                        .collect(),
                };
                let g = build_graph(&deps, &m, &[], &WeightConfig::default()).unwrap();
                let p = PartitionSet::new(k, parts.into_iter().map(|x| x % k).collect()).unwrap();
                (g, p)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn totals_dominate_the_baseline((g, p) in arb_case()) {
            let r = build_infra_report(&g, &p, &PriceTable::default()).unwrap();
            prop_assert!(r.total.dominates(&r.monolith_baseline));
            let sum: InfrastructureFactor = r.per_partition.iter().map(|x| x.factor).sum();
            prop_assert_eq!(sum, r.total);
            prop_assert!(r.total_cost >= r.baseline_cost);
        }

        #[test]
        fn totals_are_invariant_under_relabeling((g, p) in arb_case(), shift in 0usize..4) {
            let k = p.k();
            let relabeled = PartitionSet::new(k, p.assignment().iter().map(|&x| (x + shift) % k).collect()).unwrap();
            let a = build_infra_report(&g, &p, &PriceTable::default()).unwrap();
            let b = build_infra_report(&g, &relabeled, &PriceTable::default()).unwrap();
            prop_assert_eq!(a.total, b.total);
        }

        #[test]
        fn totals_meet_the_distinct_resource_lower_bound((g, p) in arb_case()) {
            let r = build_infra_report(&g, &p, &PriceTable::default()).unwrap();
            let mut spans: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); g.resources.len()];
            for e in &g.resource_edges {
                spans[e.resource].insert(p.part_of(e.class));
            }
            for kind in ResourceKind::ALL {
                let bound: Vec<usize> = g.resources.iter().filter(|x| x.kind == kind && !spans[x.id].is_empty()).map(|x| x.id).collect();
                let total = r.total.get(kind) as usize;
                prop_assert!(total >= bound.len());
                if kind == Compute {
                    let used = p.sizes().iter().filter(|&&s| s > 0).count();
                    prop_assert!(total >= used);
                } else {
                    let unsplit = bound.iter().all(|&x| spans[x].len() == 1);
                    prop_assert_eq!(total == bound.len(), unsplit);
                }
            }
        }

        #[test]
        fn cost_is_linear(a in (0u64..50, 0u64..50, 0u64..50, 0u64..50), b in (0u64..50, 0u64..50, 0u64..50, 0u64..50)) {
            let fa = InfrastructureFactor::new(a.0, a.1, a.2, a.3);
            let fb = InfrastructureFactor::new(b.0, b.1, b.2, b.3);
            let prices = PriceTable::default();
            prop_assert_eq!(infra_cost(&(fa + fb), &prices), infra_cost(&fa, &prices) + infra_cost(&fb, &prices));
        }
    }
}
