//! Decomposition quality metrics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::infra::{build_infra_report, InfraError};
use crate::ingest::DependencyRecord;
use crate::model::{ApplicationGraph, EvaluationReport, PartitionSet, PriceTable};
use crate::partition::edge_cut;
use crate::rational::{self, Rational};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("modularity undefined: graph has no weighted class edges")]
    ModularityUndefined,
    #[error("ground truth and partition share no classes")]
    EmptyIntersection,
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("partition covers {got} classes, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Infra(#[from] InfraError),
}

/// Reference decomposition: class name to cluster label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruth {
    pub assignment: BTreeMap<String, String>,
}

impl GroundTruth {
    /// Reads `{class_name: label}` from YAML or JSON. Numeric labels are
    /// accepted and kept as strings.
    pub fn parse(doc: &str) -> Result<Self, crate::ingest::IngestError> {
        let raw: BTreeMap<String, serde_yaml::Value> =
            serde_yaml::from_str(doc).map_err(crate::ingest::IngestError::yaml)?;
        let assignment = raw
            .into_iter()
            .map(|(k, v)| {
                let label = match v {
                    serde_yaml::Value::String(s) => s,
                    other => serde_yaml::to_string(&other).unwrap_or_default().trim().to_string(),
                };
                (k, label)
            })
            .collect();
        Ok(Self { assignment })
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(&self.assignment).expect("truth serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
}

impl PairCounts {
    pub fn precision(&self) -> Option<Rational> {
        let d = self.true_positive + self.false_positive;
        (d > 0).then(|| Rational::new(self.true_positive as i128, d as i128))
    }

    pub fn recall(&self) -> Option<Rational> {
        let d = self.true_positive + self.false_negative;
        (d > 0).then(|| Rational::new(self.true_positive as i128, d as i128))
    }

    /// Harmonic mean of pairwise precision and recall; 0 when nothing matches.
    pub fn f1(&self) -> Rational {
        if self.true_positive == 0 {
            return Rational::default();
        }
        let tp = self.true_positive as i128;
        Rational::new(2 * tp, 2 * tp + self.false_positive as i128 + self.false_negative as i128)
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Co-membership pair counts over the classes present in both `p` and `truth`.
pub fn pair_counts(p: &PartitionSet, truth: &GroundTruth, names: &[&str]) -> Result<PairCounts, MetricsError> {
    if truth.assignment.is_empty() {
        return Err(MetricsError::EmptyIntersection);
    }
    if names.len() != p.len() {
        return Err(MetricsError::SizeMismatch { expected: names.len(), got: p.len() });
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    if let Some(unknown) = truth.assignment.keys().find(|n| !index.contains_key(n.as_str())) {
        return Err(MetricsError::UnknownClass(unknown.clone()));
    }

    let mut predicted: HashMap<usize, u64> = HashMap::new();
    let mut actual: HashMap<&str, u64> = HashMap::new();
    let mut joint: HashMap<(usize, &str), u64> = HashMap::new();
    for (name, label) in &truth.assignment {
        let part = p.part_of(index[name.as_str()]);
        *predicted.entry(part).or_default() += 1;
        *actual.entry(label.as_str()).or_default() += 1;
        *joint.entry((part, label.as_str())).or_default() += 1;
    }
    let tp: u64 = joint.values().map(|&c| pairs(c)).sum();
    let together_predicted: u64 = predicted.values().map(|&c| pairs(c)).sum();
    let together_actual: u64 = actual.values().map(|&c| pairs(c)).sum();
    Ok(PairCounts { true_positive: tp, false_positive: together_predicted - tp, false_negative: together_actual - tp })
}

/// Pairwise co-membership F1 against a reference decomposition.
pub fn compute_f1(p: &PartitionSet, truth: &GroundTruth, names: &[&str]) -> Result<Rational, MetricsError> {
    Ok(pair_counts(p, truth, names)?.f1())
}

/// Newman-Girvan modularity `Q = sum_c (e_cc - a_c^2)` over class edges.
/// With `weighted == false` every edge counts as 1.
pub fn compute_ngm(g: &ApplicationGraph, p: &PartitionSet, weighted: bool) -> Result<Rational, MetricsError> {
    if p.len() != g.class_count() {
        return Err(MetricsError::SizeMismatch { expected: g.class_count(), got: p.len() });
    }
    let w = |e: &crate::model::ClassEdge| if weighted { e.weight } else { rational::int(1) };
    let total: Rational = g.class_edges.iter().map(w).sum();
    if total <= Rational::default() {
        return Err(MetricsError::ModularityUndefined);
    }
    let mut inside = vec![Rational::default(); p.k()];
    let mut ends = vec![Rational::default(); p.k()];
    for e in &g.class_edges {
        let (a, b) = (p.part_of(e.u), p.part_of(e.v));
        let we = w(e);
        if a == b {
            inside[a] += we;
        }
        ends[a] += we;
        ends[b] += we;
    }
    let two_total = total * rational::int(2);
    Ok(inside
        .iter()
        .zip(&ends)
        .map(|(&i, &d)| {
            let a = d / two_total;
            i / total - a * a
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceNumber {
    pub total: u64,
    #[serde(with = "rational::serde_str")]
    pub mean: Rational,
    pub per_partition: Vec<u64>,
}

/// Counts interface classes: a class is an interface of its partition when
/// at least one dependency reaches it from another partition.
pub fn compute_ifn(
    deps: &[DependencyRecord],
    p: &PartitionSet,
    names: &[&str],
) -> Result<InterfaceNumber, MetricsError> {
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let lookup = |n: &str| index.get(n).copied().ok_or_else(|| MetricsError::UnknownClass(n.to_string()));
    let mut interface = vec![false; names.len()];
    for d in deps {
        let (from, to) = (lookup(&d.from_class)?, lookup(&d.to_class)?);
        if p.part_of(from) != p.part_of(to) {
            interface[to] = true;
        }
    }
    let mut per_partition = vec![0u64; p.k()];
    for (c, _) in interface.iter().enumerate().filter(|(_, &i)| i) {
        per_partition[p.part_of(c)] += 1;
    }
    let total: u64 = per_partition.iter().sum();
    Ok(InterfaceNumber { total, mean: Rational::new(total as i128, p.k() as i128), per_partition })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub sizes: Vec<usize>,
    pub min: usize,
    pub max: usize,
    #[serde(with = "rational::serde_str")]
    pub mean: Rational,
}

pub fn cluster_stats(p: &PartitionSet) -> ClusterStats {
    let sizes = p.sizes();
    ClusterStats {
        min: sizes.iter().copied().min().unwrap_or(0),
        max: sizes.iter().copied().max().unwrap_or(0),
        mean: Rational::new(p.len() as i128, p.k() as i128),
        sizes,
    }
}

pub fn evaluate(
    g: &ApplicationGraph,
    p: &PartitionSet,
    deps: &[DependencyRecord],
    truth: Option<&GroundTruth>,
    prices: &PriceTable,
) -> Result<EvaluationReport, MetricsError> {
    let names = g.names();
    let f1 = truth.map(|t| compute_f1(p, t, &names)).transpose()?;
    let ngm = compute_ngm(g, p, true)?;
    let ifn = compute_ifn(deps, p, &names)?;
    let infra = build_infra_report(g, p, prices)?;
    Ok(EvaluationReport {
        f1,
        ngm,
        ifn_total: ifn.total,
        ifn_mean: ifn.mean,
        ifn_per_partition: ifn.per_partition,
        edge_cut: edge_cut(g, p),
        infra_total: infra.total,
        infra_cost: infra.total_cost,
        cluster_sizes: p.sizes(),
    })
}

/// Aligned plain-text table, one row per `(dataset, report)`.
pub fn render_table(rows: &[(&str, &EvaluationReport)]) -> String {
    let header = ["dataset", "F1", "NGM", "IFN", "edge_cut", "infra", "infra_cost", "sizes"];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|(name, r)| {
            [
                name.to_string(),
                r.f1.as_ref().map_or_else(|| "-".to_string(), |f| rational::format_fixed(f, 3)),
                rational::format_fixed(&r.ngm, 3),
                r.ifn_total.to_string(),
                rational::format(&r.edge_cut),
                r.infra_total.to_string(),
                rational::format(&r.infra_cost),
                format!("{:?}", r.cluster_sizes),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header.map(String::from));
    out.push_str(&line(&widths.map(|w| "-".repeat(w))));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}
