//! Parsers for the three input artifacts: the class-dependency export, the
//! infrastructure manifest and execution trace logs.

mod deps;
mod manifest;
mod traces;

pub use deps::{
    parse_dependencies, parse_dependency_json, parse_dependency_xml, write_dependency_json, write_dependency_xml,
    DependencyExport, DependencyRecord, Relation,
};
pub use manifest::{parse_infra_yaml, write_infra_yaml, Binding, InfraManifest, ManifestResource};
pub use traces::{group_flows, parse_traces, FlowRuleConfig, NamedFlow, TraceParse, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed XML at line {line}: {message}")]
    Xml { line: u32, message: String },
    #[error("malformed JSON at line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("malformed YAML{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Yaml { line: Option<usize>, message: String },
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("unknown resource kind '{0}'")]
    UnknownResourceKind(String),
    #[error("binding of class '{class}' references undeclared resource '{resource}'")]
    UndeclaredResource { class: String, resource: String },
    #[error("duplicate resource '{0}' in manifest")]
    DuplicateResource(String),
    #[error("line {line}: {message}")]
    Schema { line: u32, message: String },
    #[error("invalid flow rules: {0}")]
    FlowRules(String),
}

impl IngestError {
    pub(crate) fn yaml(e: serde_yaml::Error) -> Self {
        IngestError::Yaml { line: e.location().map(|l| l.line()), message: e.to_string() }
    }

    pub(crate) fn json(e: serde_json::Error) -> Self {
        IngestError::Json { line: e.line(), message: e.to_string() }
    }
}
