//! Assembles the weighted [`ApplicationGraph`] from ingestion records.
//!
//! A class pair gets an edge when a dependency record or a functional flow
//! links it. Its weight is the sum of the relation base weights of every
//! record on the pair (both directions), plus `shared_resource_increment`
//! per resource bound to both classes, plus `beta_flow` per flow containing
//! both classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::ingest::{DependencyRecord, InfraManifest, NamedFlow, Relation};
use crate::model::{
    ApplicationGraph, ClassEdge, ClassId, ClassNode, FunctionalFlow, PartitionSet, ResourceEdge, ResourceId,
    ResourceNode,
};
use crate::rational::{self, Rational};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("empty graph: no dependency records")]
    EmptyGraph,
    #[error("weight configuration component '{0}' is negative")]
    NegativeWeight(&'static str),
    #[error("unknown class id {0}")]
    UnknownClass(ClassId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    #[serde(with = "rational::serde_str")]
    pub base_call: Rational,
    #[serde(with = "rational::serde_str")]
    pub base_reference: Rational,
    #[serde(with = "rational::serde_str")]
    pub base_inheritance: Rational,
    #[serde(with = "rational::serde_str")]
    pub beta_flow: Rational,
    #[serde(with = "rational::serde_str")]
    pub shared_resource_increment: Rational,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            base_call: rational::int(1),
            base_reference: rational::int(1),
            base_inheritance: rational::int(3),
            beta_flow: rational::int(1),
            shared_resource_increment: rational::int(1),
        }
    }
}

impl WeightConfig {
    pub fn base(&self, relation: Relation) -> Rational {
        match relation {
            Relation::Call => self.base_call,
            Relation::Reference => self.base_reference,
            Relation::Inheritance => self.base_inheritance,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let parts = [
            ("base_call", &self.base_call),
            ("base_reference", &self.base_reference),
            ("base_inheritance", &self.base_inheritance),
            ("beta_flow", &self.beta_flow),
            ("shared_resource_increment", &self.shared_resource_increment),
        ];
        match parts.iter().find(|(_, v)| !rational::is_non_negative(v)) {
            Some((name, _)) => Err(GraphError::NegativeWeight(name)),
            None => Ok(()),
        }
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, ClassId>,
    names: Vec<String>,
}

impl Interner {
    fn id(&mut self, name: &str) -> ClassId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }
}

#[derive(Default)]
struct PairComponents {
    base: Rational,
    shared: u64,
    flows: u64,
}

pub fn build_graph(
    deps: &[DependencyRecord],
    manifest: &InfraManifest,
    flows: &[NamedFlow],
    cfg: &WeightConfig,
) -> Result<ApplicationGraph, GraphError> {
    if deps.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    cfg.validate()?;

    let mut interner = Interner::default();
    let mut pairs: BTreeMap<(ClassId, ClassId), PairComponents> = BTreeMap::new();
    let ordered = |a: ClassId, b: ClassId| (a.min(b), a.max(b));

    let mut directed = Vec::with_capacity(deps.len());
    for d in deps {
        let (from, to) = (interner.id(&d.from_class), interner.id(&d.to_class));
        if from == to {
            continue;
        }
        pairs.entry(ordered(from, to)).or_default().base += cfg.base(d.relation);
        directed.push(d.clone());
    }
    let structural = interner.names.len();

    let resources: Vec<ResourceNode> = manifest
        .resources
        .iter()
        .enumerate()
        .map(|(id, r)| ResourceNode { id, name: r.name.clone(), kind: r.kind })
        .collect();
    let resource_ids: HashMap<&str, ResourceId> = resources.iter().map(|r| (r.name.as_str(), r.id)).collect();

    let mut resource_edges = Vec::new();
    for b in &manifest.bindings {
        let Some(&resource) = resource_ids.get(b.resource.as_str()) else {
            // parse_infra_yaml rejects these; tolerate hand-built manifests
            warn!("binding of '{}' to undeclared resource '{}' ignored", b.class, b.resource);
            continue;
        };
        let edge = ResourceEdge { resource, class: interner.id(&b.class) };
        if !resource_edges.contains(&edge) {
            resource_edges.push(edge);
        }
    }

    let mut graph_flows = Vec::with_capacity(flows.len());
    for f in flows {
        let mut members: Vec<ClassId> = Vec::with_capacity(f.members.len());
        for m in &f.members {
            let id = interner.id(m);
            if !members.contains(&id) {
                members.push(id);
            }
        }
        if members.is_empty() {
            warn!("flow '{}' has no members; skipped", f.id);
            continue;
        }
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                pairs.entry(ordered(a, b)).or_default().flows += 1;
            }
        }
        graph_flows.push(FunctionalFlow { id: f.id.clone(), members });
    }

    for name in &interner.names[structural..] {
        warn!("class '{name}' appears only in bindings or flows; added as a node without dependencies");
    }

    let mut bound: Vec<BTreeSet<ResourceId>> = vec![BTreeSet::new(); interner.names.len()];
    for e in &resource_edges {
        bound[e.class].insert(e.resource);
    }
    for (&(u, v), comp) in pairs.iter_mut() {
        comp.shared = bound[u].intersection(&bound[v]).count() as u64;
    }

    let class_edges =
        pairs.into_iter().map(|((u, v), c)| ClassEdge::compose(u, v, c.base, c.shared, c.flows, cfg)).collect();
    let classes = interner.names.into_iter().enumerate().map(|(id, name)| ClassNode { id, name, weight: 1 }).collect();

    Ok(ApplicationGraph {
        classes,
        resources,
        flows: graph_flows,
        resource_edges,
        class_edges,
        dependencies: directed,
        weight_config: cfg.clone(),
    })
}

/// Resources bound to both `u` and `v`.
pub fn shared_resources(g: &ApplicationGraph, u: ClassId, v: ClassId) -> Result<BTreeSet<ResourceId>, GraphError> {
    for id in [u, v] {
        if id >= g.class_count() {
            return Err(GraphError::UnknownClass(id));
        }
    }
    let of = |c: ClassId| -> BTreeSet<ResourceId> {
        g.resource_edges.iter().filter(|e| e.class == c).map(|e| e.resource).collect()
    };
    Ok(of(u).intersection(&of(v)).copied().collect())
}

const PALETTE: [&str; 12] = [
    "lightblue",
    "lightcoral",
    "palegreen",
    "khaki",
    "plum",
    "lightsalmon",
    "aquamarine",
    "wheat",
    "lightpink",
    "lightcyan",
    "thistle",
    "burlywood",
];

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as Graphviz DOT. Class nodes are ellipses, filled by
/// partition when one is given; resources are boxes joined by dashed edges.
pub fn to_dot(g: &ApplicationGraph, partition: Option<&PartitionSet>) -> String {
    let mut s = String::from("graph application {\n  node [shape=ellipse];\n");
    for c in &g.classes {
        let _ = write!(s, "  c{} [label=\"{}\"", c.id, dot_escape(&c.name));
        if let Some(p) = partition {
            let part = p.part_of(c.id);
            let _ = write!(s, ", style=filled, fillcolor={}, partition={}", PALETTE[part % PALETTE.len()], part);
        }
        s.push_str("];\n");
    }
    for r in &g.resources {
        let _ = writeln!(s, "  r{} [shape=box, label=\"{}\\n({})\"];", r.id, dot_escape(&r.name), r.kind);
    }
    for e in &g.class_edges {
        let _ = writeln!(s, "  c{} -- c{} [label=\"{}\"];", e.u, e.v, rational::format(&e.weight));
    }
    for e in &g.resource_edges {
        let _ = writeln!(s, "  r{} -- c{} [style=dashed];", e.resource, e.class);
    }
    s.push_str("}\n");
    s
}
