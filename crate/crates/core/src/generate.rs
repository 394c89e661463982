//! Planted-partition fixture generator.
//!
//! Classes are split into `clusters` contiguous blocks of near-equal size.
//! Every intra-cluster pair gets a dependency with probability `p_in`,
//! every inter-cluster pair with `p_out`. A class left without any
//! dependency is linked to a random member of its own cluster, so every
//! class shows up in the export. Each cluster gets `resources_per_cluster`
//! dedicated resources bound to a random non-empty subset of its classes.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{Binding, DependencyRecord, InfraManifest, ManifestResource, Relation};
use crate::metrics::GroundTruth;
use crate::model::ResourceKind;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenerateError {
    #[error("need 1 <= clusters and at least 2 classes per cluster (classes = {classes}, clusters = {clusters})")]
    Shape { classes: usize, clusters: usize },
    #[error("probabilities must satisfy 0 <= p_out < p_in <= 1 (p_in = {p_in}, p_out = {p_out})")]
    Probabilities { p_in: f64, p_out: f64 },
    #[error("resource kinds must be non-empty when resources are requested")]
    NoKinds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub classes: usize,
    pub clusters: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub resources_per_cluster: usize,
    /// Kinds assigned to each cluster's resources, cycling.
    pub resource_kinds: Vec<ResourceKind>,
    pub seed: u64,
    /// Package prefix for generated class names.
    pub package: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            classes: 24,
            clusters: 3,
            p_in: 0.3,
            p_out: 0.02,
            resources_per_cluster: 1,
            resource_kinds: vec![ResourceKind::Database],
            seed: 0,
            package: "com.example".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub dependencies: Vec<DependencyRecord>,
    pub manifest: InfraManifest,
    pub truth: GroundTruth,
}

fn kind_tag(kind: ResourceKind) -> &'static str {
    match kind {
        ResourceKind::Compute => "vm",
        ResourceKind::FileStorage => "s3",
        ResourceKind::Database => "db",
        ResourceKind::Cache => "cache",
    }
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Fixture, GenerateError> {
    let (n, k) = (cfg.classes, cfg.clusters);
    if k == 0 || n < 2 * k {
        return Err(GenerateError::Shape { classes: n, clusters: k });
    }
    if !(0.0 <= cfg.p_out && cfg.p_out < cfg.p_in && cfg.p_in <= 1.0) {
        return Err(GenerateError::Probabilities { p_in: cfg.p_in, p_out: cfg.p_out });
    }
    if cfg.resources_per_cluster > 0 && cfg.resource_kinds.is_empty() {
        return Err(GenerateError::NoKinds);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = n.to_string().len();
    let names: Vec<String> = (0..n).map(|i| format!("{}.Class{:0width$}", cfg.package, i)).collect();

    let mut cluster_of = Vec::with_capacity(n);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (c, m) in members.iter_mut().enumerate() {
        let size = n / k + usize::from(c < n % k);
        for _ in 0..size {
            m.push(cluster_of.len());
            cluster_of.push(c);
        }
    }

    let relation = |rng: &mut ChaCha8Rng| match rng.random_range(0..10) {
        0..=6 => Relation::Call,
        7..=8 => Relation::Reference,
        _ => Relation::Inheritance,
    };
    let edge = |i: usize, j: usize, rng: &mut ChaCha8Rng| {
        let (from, to) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
        DependencyRecord::new(names[from].clone(), names[to].clone(), relation(rng))
    };

    let mut deps = Vec::new();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = if cluster_of[i] == cluster_of[j] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                deps.push(edge(i, j, &mut rng));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    for i in 0..n {
        if degree[i] == 0 {
            let mates: Vec<usize> = members[cluster_of[i]].iter().copied().filter(|&m| m != i).collect();
            let &j = mates.choose(&mut rng).expect("clusters have at least two classes");
            deps.push(edge(i, j, &mut rng));
            degree[i] += 1;
            degree[j] += 1;
        }
    }

    let mut manifest = InfraManifest::default();
    for (c, cluster) in members.iter().enumerate() {
        for r in 0..cfg.resources_per_cluster {
            let kind = cfg.resource_kinds[r % cfg.resource_kinds.len()];
            let name = format!("c{c}-{}{r}", kind_tag(kind));
            let mut bound: Vec<usize> = cluster.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if bound.is_empty() {
                bound.push(*cluster.choose(&mut rng).expect("non-empty cluster"));
            }
            manifest
                .bindings
                .extend(bound.into_iter().map(|i| Binding { class: names[i].clone(), resource: name.clone() }));
            manifest.resources.push(ManifestResource { name, kind });
        }
    }

    let truth = GroundTruth {
        assignment: names.iter().zip(&cluster_of).map(|(n, c)| (n.clone(), format!("cluster{c}"))).collect(),
    };
    Ok(Fixture { dependencies: deps, manifest, truth })
}
