//! Decomposes a monolith's class graph into microservice candidates.
//!
//! The pipeline is: [`ingest`] the dependency export, infrastructure
//! manifest and trace logs; [`graphbuild`] the weighted application graph;
//! [`partition`] it under a blend of edge cut and resource duplication
//! cost; predict per-partition infrastructure with [`infra`]; and score the
//! result with [`metrics`].

pub mod generate;
pub mod graphbuild;
pub mod infra;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod rational;

pub use graphbuild::{build_graph, shared_resources, to_dot, WeightConfig};
pub use infra::{build_infra_report, infra_cost, monolith_baseline, predict_infrastructure_factor, InfraModel};
pub use metrics::{compute_f1, compute_ifn, compute_ngm, evaluate, GroundTruth};
pub use model::{
    validate_graph, ApplicationGraph, EvaluationReport, InfrastructureFactor, PartitionSet, PriceTable, ResourceKind,
};
pub use partition::{objective, partition_graph, ObjectiveConfig, PartitionOutcome};
pub use rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Graph(#[from] graphbuild::GraphError),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
    #[error(transparent)]
    Infra(#[from] infra::InfraError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Generate(#[from] generate::GenerateError),
}
