//! Class dependency exports.
//!
//! XML form:
//!
//! ```xml
//! <dependencies>
//!   <class name="com.example.A">
//!     <dependsOn name="com.example.B" relation="call"/>
//!   </class>
//! </dependencies>
//! ```
//!
//! The JSON form has the same shape:
//! `{"classes": [{"name": "com.example.A", "dependsOn": [{"name": "com.example.B", "relation": "call"}]}]}`.
//! `relation` is optional and defaults to `call`.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Call,
    Reference,
    Inheritance,
}

impl FromStr for Relation {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" => Ok(Relation::Call),
            "reference" => Ok(Relation::Reference),
            "inheritance" => Ok(Relation::Inheritance),
            _ => Err(IngestError::UnknownRelation(s.to_string())),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Call => "call",
            Relation::Reference => "reference",
            Relation::Inheritance => "inheritance",
        })
    }
}

/// One directed class-to-class dependency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencyRecord {
    pub from_class: String,
    pub to_class: String,
    pub relation: Relation,
}

impl DependencyRecord {
    pub fn new(from: impl Into<String>, to: impl Into<String>, relation: Relation) -> Self {
        Self { from_class: from.into(), to_class: to.into(), relation }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyExport {
    pub records: Vec<DependencyRecord>,
    pub warnings: Vec<String>,
}

impl DependencyExport {
    fn push(&mut self, from: &str, to: &str, relation: Relation) {
        let (from, to) = (from.trim(), to.trim());
        if from == to {
            let msg = format!("dropping self-dependency on '{from}'");
            warn!("{msg}");
            self.warnings.push(msg);
            return;
        }
        self.records.push(DependencyRecord::new(from, to, relation));
    }
}

/// Parses either format, choosing JSON when the document starts with `{`.
pub fn parse_dependencies(doc: &str) -> Result<DependencyExport, IngestError> {
    if doc.trim_start().starts_with('{') {
        parse_dependency_json(doc)
    } else {
        parse_dependency_xml(doc)
    }
}

pub fn parse_dependency_xml(doc: &str) -> Result<DependencyExport, IngestError> {
    let xml =
        roxmltree::Document::parse(doc).map_err(|e| IngestError::Xml { line: e.pos().row, message: e.to_string() })?;
    let line_of = |n: roxmltree::Node| xml.text_pos_at(n.range().start).row;
    let schema = |n: roxmltree::Node, message: String| IngestError::Schema { line: line_of(n), message };

    let root = xml.root_element();
    if root.tag_name().name() != "dependencies" {
        return Err(schema(root, format!("expected <dependencies> root, found <{}>", root.tag_name().name())));
    }

    let mut out = DependencyExport::default();
    for class in root.children().filter(|n| n.is_element()) {
        if class.tag_name().name() != "class" {
            return Err(schema(class, format!("unexpected element <{}>", class.tag_name().name())));
        }
        let from = non_empty_attr(class, "name").ok_or_else(|| schema(class, "<class> without a name".into()))?;
        for dep in class.children().filter(|n| n.is_element()) {
            if dep.tag_name().name() != "dependsOn" {
                return Err(schema(dep, format!("unexpected element <{}>", dep.tag_name().name())));
            }
            let to = non_empty_attr(dep, "name").ok_or_else(|| schema(dep, "<dependsOn> without a name".into()))?;
            let relation = dep.attribute("relation").map(str::parse).transpose()?.unwrap_or(Relation::Call);
            out.push(from, to, relation);
        }
    }
    Ok(out)
}

fn non_empty_attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Option<&'a str> {
    node.attribute(name).filter(|s| !s.trim().is_empty())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonExport {
    classes: Vec<JsonClass>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonClass {
    name: String,
    #[serde(rename = "dependsOn", default)]
    depends_on: Vec<JsonDep>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDep {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation: Option<String>,
}

pub fn parse_dependency_json(doc: &str) -> Result<DependencyExport, IngestError> {
    let raw: JsonExport = serde_json::from_str(doc).map_err(IngestError::json)?;
    let mut out = DependencyExport::default();
    for class in &raw.classes {
        for dep in &class.depends_on {
            let relation = dep.relation.as_deref().map(str::parse).transpose()?.unwrap_or(Relation::Call);
            out.push(&class.name, &dep.name, relation);
        }
    }
    Ok(out)
}

/// Groups records by source class in first-seen order.
fn grouped(records: &[DependencyRecord]) -> Vec<(&str, Vec<&DependencyRecord>)> {
    let mut groups: Vec<(&str, Vec<&DependencyRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(name, _)| *name == r.from_class) {
            Some((_, list)) => list.push(r),
            None => groups.push((&r.from_class, vec![r])),
        }
    }
    groups
}

pub fn write_dependency_xml(records: &[DependencyRecord]) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dependencies>\n");
    for (from, deps) in grouped(records) {
        s.push_str(&format!("  <class name=\"{}\">\n", escape(from)));
        for d in deps {
            s.push_str(&format!("    <dependsOn name=\"{}\" relation=\"{}\"/>\n", escape(&d.to_class), d.relation));
        }
        s.push_str("  </class>\n");
    }
    s.push_str("</dependencies>\n");
    s
}

pub fn write_dependency_json(records: &[DependencyRecord]) -> String {
    let doc = JsonExport {
        classes: grouped(records)
            .into_iter()
            .map(|(from, deps)| JsonClass {
                name: from.to_string(),
                depends_on: deps
                    .into_iter()
                    .map(|d| JsonDep { name: d.to_class.clone(), relation: Some(d.relation.to_string()) })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("dependency export serializes")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
