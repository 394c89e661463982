//! Infrastructure manifest.
//!
//! ```yaml
//! resources:
//!   - { name: db1, kind: database }
//!   - { name: cacheA, kind: cache }
//! bindings:
//!   - { class: com.example.OrderDao, resource: db1 }
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::ResourceKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestResource {
    pub name: String,
    pub kind: ResourceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub class: String,
    pub resource: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfraManifest {
    pub resources: Vec<ManifestResource>,
    pub bindings: Vec<Binding>,
}

impl InfraManifest {
    pub fn kind_of(&self, resource: &str) -> Option<ResourceKind> {
        self.resources.iter().find(|r| r.name == resource).map(|r| r.kind)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    resources: Vec<RawResource>,
    #[serde(default)]
    bindings: Vec<Binding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResource {
    name: String,
    kind: String,
}

pub fn parse_infra_yaml(doc: &str) -> Result<InfraManifest, IngestError> {
    let raw: Option<RawManifest> = serde_yaml::from_str(doc).map_err(IngestError::yaml)?;
    let Some(raw) = raw else {
        return Ok(InfraManifest::default());
    };

    let mut seen = HashSet::new();
    let mut resources = Vec::with_capacity(raw.resources.len());
    for r in raw.resources {
        let name = r.name.trim().to_string();
        let kind = ResourceKind::from_manifest(&r.kind).ok_or(IngestError::UnknownResourceKind(r.kind))?;
        if !seen.insert(name.clone()) {
            return Err(IngestError::DuplicateResource(name));
        }
        resources.push(ManifestResource { name, kind });
    }

    let mut bindings = Vec::with_capacity(raw.bindings.len());
    for b in raw.bindings {
        let binding = Binding { class: b.class.trim().to_string(), resource: b.resource.trim().to_string() };
        if !seen.contains(&binding.resource) {
            return Err(IngestError::UndeclaredResource { class: binding.class, resource: binding.resource });
        }
        if !bindings.contains(&binding) {
            bindings.push(binding);
        }
    }
    Ok(InfraManifest { resources, bindings })
}

pub fn write_infra_yaml(m: &InfraManifest) -> String {
    serde_yaml::to_string(m).expect("manifest serializes")
}
