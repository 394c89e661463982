//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::graphbuild::WeightConfig;
use crate::ingest::DependencyRecord;
use crate::rational::{self, Rational};

pub type ClassId = usize;
pub type ResourceId = usize;

/// Version tag written into every emitted JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("partition count k must be at least 1")]
    ZeroPartitions,
    #[error("class {class} assigned to partition {part}, but k = {k}")]
    PartitionOutOfRange { class: ClassId, part: usize, k: usize },
    #[error("partition covers {got} classes, graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("partition {0} is empty")]
    EmptyPartition(usize),
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("class '{0}' missing from assignment")]
    MissingClass(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassNode {
    pub id: ClassId,
    pub name: String,
    #[serde(default = "unit_weight")]
    pub weight: u64,
}

fn unit_weight() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Compute,
    FileStorage,
    Database,
    Cache,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 4] =
        [ResourceKind::Compute, ResourceKind::FileStorage, ResourceKind::Database, ResourceKind::Cache];

    /// Maps a manifest kind string onto a kind, case-insensitively.
    pub fn from_manifest(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "compute" | "vm" | "ec2" => Some(Self::Compute),
            "file_storage" | "s3" => Some(Self::FileStorage),
            "database" => Some(Self::Database),
            "cache" => Some(Self::Cache),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Compute => "compute",
            Self::FileStorage => "file_storage",
            Self::Database => "database",
            Self::Cache => "cache",
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceNode {
    pub id: ResourceId,
    pub name: String,
    pub kind: ResourceKind,
}

/// Undirected, merged class-to-class edge.
///
/// `weight` is always `relation_base + shared_resource_increment * shared_resource_count
/// + beta_flow * flow_cooccurrence` for the graph's [`WeightConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEdge {
    pub u: ClassId,
    pub v: ClassId,
    #[serde(with = "rational::serde_str")]
    pub weight: Rational,
    #[serde(with = "rational::serde_str")]
    pub relation_base: Rational,
    pub shared_resource_count: u64,
    pub flow_cooccurrence: u64,
}

impl ClassEdge {
    pub fn compose(
        u: ClassId,
        v: ClassId,
        relation_base: Rational,
        shared_resource_count: u64,
        flow_cooccurrence: u64,
        cfg: &WeightConfig,
    ) -> Self {
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        let mut edge =
            ClassEdge { u, v, weight: Rational::default(), relation_base, shared_resource_count, flow_cooccurrence };
        edge.weight = edge.recompose(cfg);
        edge
    }

    pub fn recompose(&self, cfg: &WeightConfig) -> Rational {
        self.relation_base
            + cfg.shared_resource_increment * rational::int(self.shared_resource_count as i128)
            + cfg.beta_flow * rational::int(self.flow_cooccurrence as i128)
    }

    /// Sums the components of an edge on the same unordered pair.
    pub fn merge(&mut self, other: &ClassEdge) {
        debug_assert_eq!(self.key(), other.key());
        self.relation_base += other.relation_base;
        self.shared_resource_count += other.shared_resource_count;
        self.flow_cooccurrence += other.flow_cooccurrence;
        self.weight += other.weight;
    }

    pub fn key(&self) -> (ClassId, ClassId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceEdge {
    pub resource: ResourceId,
    pub class: ClassId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalFlow {
    pub id: String,
    /// First member is the entry point.
    pub members: Vec<ClassId>,
}

/// The weighted application graph: classes, resources, flows, resource
/// bindings and merged class edges. Directed dependency records are kept
/// alongside for interface counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicationGraph {
    pub classes: Vec<ClassNode>,
    #[serde(default)]
    pub resources: Vec<ResourceNode>,
    #[serde(default)]
    pub flows: Vec<FunctionalFlow>,
    #[serde(default)]
    pub resource_edges: Vec<ResourceEdge>,
    #[serde(default)]
    pub class_edges: Vec<ClassEdge>,
    #[serde(default)]
    pub dependencies: Vec<DependencyRecord>,
    #[serde(default)]
    pub weight_config: WeightConfig,
}

impl ApplicationGraph {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn name_index(&self) -> HashMap<&str, ClassId> {
        self.classes.iter().map(|c| (c.name.as_str(), c.id)).collect()
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c.name == name)
    }

    /// Resource ids bound to each class, sorted.
    pub fn class_resources(&self) -> Vec<Vec<ResourceId>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for e in &self.resource_edges {
            if let Some(list) = out.get_mut(e.class) {
                list.push(e.resource);
            }
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        out
    }

    pub fn total_vertex_weight(&self) -> u64 {
        self.classes.iter().map(|c| c.weight).sum()
    }

    pub fn total_edge_weight(&self) -> Rational {
        self.class_edges.iter().map(|e| e.weight).sum()
    }
}

/// Returns one description per violated graph invariant; empty means valid.
pub fn validate_graph(g: &ApplicationGraph) -> Vec<String> {
    let mut out = Vec::new();
    let n = g.classes.len();
    let m = g.resources.len();

    let mut names = HashSet::new();
    for (i, c) in g.classes.iter().enumerate() {
        if c.id != i {
            out.push(format!("class '{}' has id {} at position {}", c.name, c.id, i));
        }
        if c.name.trim().is_empty() {
            out.push(format!("class {} has an empty name", c.id));
        } else if !names.insert(c.name.as_str()) {
            out.push(format!("duplicate class name '{}'", c.name));
        }
        if c.weight == 0 {
            out.push(format!("class '{}' has zero weight", c.name));
        }
    }

    let mut rnames = HashSet::new();
    for (i, r) in g.resources.iter().enumerate() {
        if r.id != i {
            out.push(format!("resource '{}' has id {} at position {}", r.name, r.id, i));
        }
        if !rnames.insert(r.name.as_str()) {
            out.push(format!("duplicate resource name '{}'", r.name));
        }
    }

    let mut bindings = HashSet::new();
    for e in &g.resource_edges {
        if e.resource >= m {
            out.push(format!("resource edge references resource id {}", e.resource));
        }
        if e.class >= n {
            out.push(format!("resource edge references class id {}", e.class));
        }
        if !bindings.insert((e.resource, e.class)) {
            out.push(format!("duplicate resource edge ({}, {})", e.resource, e.class));
        }
    }

    let mut pairs = HashSet::new();
    for e in &g.class_edges {
        for end in [e.u, e.v] {
            if end >= n {
                out.push(format!("class edge references class id {end}"));
            }
        }
        if e.u == e.v {
            out.push(format!("self-loop on class id {}", e.u));
        }
        if !pairs.insert(e.key()) {
            out.push(format!("parallel class edge on ({}, {})", e.key().0, e.key().1));
        }
        if e.weight < Rational::default() || e.relation_base < Rational::default() {
            out.push(format!("negative weight on class edge ({}, {})", e.u, e.v));
        }
        if e.recompose(&g.weight_config) != e.weight {
            out.push(format!(
                "class edge ({}, {}) weight {} does not match its components",
                e.u,
                e.v,
                rational::format(&e.weight)
            ));
        }
    }

    for f in &g.flows {
        if f.members.is_empty() {
            out.push(format!("flow '{}' has no members", f.id));
        }
        for &c in &f.members {
            if c >= n {
                out.push(format!("flow '{}' references class id {}", f.id, c));
            }
        }
    }

    for d in &g.dependencies {
        for name in [&d.from_class, &d.to_class] {
            if !names.contains(name.as_str()) {
                out.push(format!("dependency references unknown class '{name}'"));
            }
        }
    }

    out
}

/// Assignment of every class to one of `k` partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSet {
    k: usize,
    assignment: Vec<usize>,
}

impl PartitionSet {
    /// Builds a partition; indices must lie in `0..k`. Empty partitions are
    /// allowed here, see [`PartitionSet::check_complete`].
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::ZeroPartitions);
        }
        if let Some((class, &part)) = assignment.iter().enumerate().find(|(_, &p)| p >= k) {
            return Err(ModelError::PartitionOutOfRange { class, part, k });
        }
        Ok(Self { k, assignment })
    }

    pub fn single(n: usize) -> Self {
        Self { k: 1, assignment: vec![0; n] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn part_of(&self, class: ClassId) -> usize {
        self.assignment[class]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &p in &self.assignment {
            sizes[p] += 1;
        }
        sizes
    }

    pub fn members(&self, part: usize) -> Vec<ClassId> {
        (0..self.assignment.len()).filter(|&c| self.assignment[c] == part).collect()
    }

    /// Checks that the partition covers `g` and leaves no partition empty.
    pub fn check_complete(&self, g: &ApplicationGraph) -> Result<(), ModelError> {
        if self.assignment.len() != g.class_count() {
            return Err(ModelError::SizeMismatch { expected: g.class_count(), got: self.assignment.len() });
        }
        self.check_covers_all_parts()
    }

    pub fn check_covers_all_parts(&self) -> Result<(), ModelError> {
        match self.sizes().iter().position(|&s| s == 0) {
            Some(p) => Err(ModelError::EmptyPartition(p)),
            None => Ok(()),
        }
    }

    /// Renumbers partitions in order of first appearance, dropping empty ones.
    pub fn compacted(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&p| {
                if map[p] == usize::MAX {
                    map[p] = next;
                    next += 1;
                }
                map[p]
            })
            .collect();
        Self { k: next.max(1), assignment }
    }

    pub fn by_name<'a>(&self, names: &[&'a str]) -> BTreeMap<&'a str, usize> {
        names.iter().zip(&self.assignment).map(|(n, &p)| (*n, p)).collect()
    }

    /// Rebuilds a partition from a name-keyed assignment. Every class of `g`
    /// must be present and no unknown names may appear.
    pub fn from_names(g: &ApplicationGraph, k: usize, by_name: &BTreeMap<String, usize>) -> Result<Self, ModelError> {
        let index = g.name_index();
        if let Some(unknown) = by_name.keys().find(|n| !index.contains_key(n.as_str())) {
            return Err(ModelError::UnknownClass(unknown.clone()));
        }
        let assignment = g
            .classes
            .iter()
            .map(|c| by_name.get(&c.name).copied().ok_or_else(|| ModelError::MissingClass(c.name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(k, assignment)
    }
}

/// Per-kind instance counts `(n_ec, n_s3, n_db, n_ca)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfrastructureFactor {
    pub n_ec: u64,
    pub n_s3: u64,
    pub n_db: u64,
    pub n_ca: u64,
}

impl InfrastructureFactor {
    pub fn new(n_ec: u64, n_s3: u64, n_db: u64, n_ca: u64) -> Self {
        Self { n_ec, n_s3, n_db, n_ca }
    }

    pub fn get(&self, kind: ResourceKind) -> u64 {
        match kind {
            ResourceKind::Compute => self.n_ec,
            ResourceKind::FileStorage => self.n_s3,
            ResourceKind::Database => self.n_db,
            ResourceKind::Cache => self.n_ca,
        }
    }

    pub fn get_mut(&mut self, kind: ResourceKind) -> &mut u64 {
        match kind {
            ResourceKind::Compute => &mut self.n_ec,
            ResourceKind::FileStorage => &mut self.n_s3,
            ResourceKind::Database => &mut self.n_db,
            ResourceKind::Cache => &mut self.n_ca,
        }
    }

    /// Component-wise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        ResourceKind::ALL.iter().all(|&k| self.get(k) >= other.get(k))
    }
}

impl Add for InfrastructureFactor {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            n_ec: self.n_ec + rhs.n_ec,
            n_s3: self.n_s3 + rhs.n_s3,
            n_db: self.n_db + rhs.n_db,
            n_ca: self.n_ca + rhs.n_ca,
        }
    }
}

impl AddAssign for InfrastructureFactor {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for InfrastructureFactor {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

impl fmt::Display for InfrastructureFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n_ec, self.n_s3, self.n_db, self.n_ca)
    }
}

/// Unit cost per resource kind, in currency units per instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceTable {
    #[serde(with = "rational::serde_str")]
    pub compute: Rational,
    #[serde(with = "rational::serde_str")]
    pub file_storage: Rational,
    #[serde(with = "rational::serde_str")]
    pub database: Rational,
    #[serde(with = "rational::serde_str")]
    pub cache: Rational,
}

impl PriceTable {
    pub fn unit_cost(&self, kind: ResourceKind) -> Rational {
        match kind {
            ResourceKind::Compute => self.compute,
            ResourceKind::FileStorage => self.file_storage,
            ResourceKind::Database => self.database,
            ResourceKind::Cache => self.cache,
        }
    }

    pub fn from_yaml(doc: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(doc)
    }

    pub fn is_valid(&self) -> bool {
        ResourceKind::ALL.iter().all(|&k| rational::is_non_negative(&self.unit_cost(k)))
    }
}

impl Default for PriceTable {
    fn default() -> Self {
        Self {
            compute: rational::int(1),
            file_storage: Rational::new(1, 4),
            database: rational::int(2),
            cache: Rational::new(1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(with = "rational::serde_opt_str")]
    pub f1: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub ngm: Rational,
    pub ifn_total: u64,
    #[serde(with = "rational::serde_str")]
    pub ifn_mean: Rational,
    pub ifn_per_partition: Vec<u64>,
    #[serde(with = "rational::serde_str")]
    pub edge_cut: Rational,
    pub infra_total: InfrastructureFactor,
    #[serde(with = "rational::serde_str")]
    pub infra_cost: Rational,
    pub cluster_sizes: Vec<usize>,
}
