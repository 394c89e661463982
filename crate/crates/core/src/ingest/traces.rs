//! Execution trace logs and functional-flow recovery.
//!
//! A log is UTF-8 text with one event per line. The rule file supplies a
//! regex with a required `class` capture and an optional `flow` capture:
//!
//! ```yaml
//! line_regex: '^\S+ \[(?P<flow>[^\]]*)\] (?P<class>[\w.$]+)'
//! entry_points: [com.example.web.OrderController]
//! ```
//!
//! Lines carrying a non-empty `flow` capture are grouped by it. Untagged
//! lines are segmented: a new flow (`F0`, `F1`, ...) starts at every
//! occurrence of an entry-point class.

use std::collections::{HashMap, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRuleConfig {
    pub line_regex: String,
    #[serde(default)]
    pub entry_points: Vec<String>,
}

impl FlowRuleConfig {
    pub fn from_yaml(doc: &str) -> Result<Self, IngestError> {
        serde_yaml::from_str(doc).map_err(IngestError::yaml)
    }

    fn compile(&self) -> Result<Regex, IngestError> {
        let re = Regex::new(&self.line_regex).map_err(|e| IngestError::FlowRules(e.to_string()))?;
        if !re.capture_names().flatten().any(|n| n == "class") {
            return Err(IngestError::FlowRules("line_regex has no named capture 'class'".into()));
        }
        Ok(re)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub flow_hint: Option<String>,
    pub seq: u64,
    pub class: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceParse {
    pub records: Vec<TraceRecord>,
    pub skipped: usize,
    pub total_lines: usize,
}

pub fn parse_traces(log: &str, rules: &FlowRuleConfig) -> Result<TraceParse, IngestError> {
    let re = rules.compile()?;
    let entry: HashSet<&str> = rules.entry_points.iter().map(|s| s.trim()).collect();

    let mut out = TraceParse::default();
    let mut next_seq: HashMap<String, u64> = HashMap::new();
    let mut segment = 0usize;
    let mut segment_len = 0u64;

    for line in log.lines() {
        out.total_lines += 1;
        let Some(caps) = re.captures(line) else {
            out.skipped += 1;
            continue;
        };
        let class = caps.name("class").map(|m| m.as_str().trim()).unwrap_or("");
        if class.is_empty() {
            out.skipped += 1;
            continue;
        }
        let tagged = caps.name("flow").map(|m| m.as_str().trim()).filter(|s| !s.is_empty());
        let (hint, seq) = match tagged {
            Some(flow) => {
                let counter = next_seq.entry(flow.to_string()).or_insert(0);
                let seq = *counter;
                *counter += 1;
                (flow.to_string(), seq)
            }
            None => {
                if entry.contains(class) && segment_len > 0 {
                    segment += 1;
                    segment_len = 0;
                }
                segment_len += 1;
                (format!("F{segment}"), segment_len - 1)
            }
        };
        out.records.push(TraceRecord { flow_hint: Some(hint), seq, class: class.to_string() });
    }
    Ok(out)
}

/// A functional flow before class ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedFlow {
    pub id: String,
    pub members: Vec<String>,
}

const UNLABELED_FLOW: &str = "unlabeled";

/// Groups records into flows in order of first appearance; members are
/// ordered by `seq` and de-duplicated keeping the first occurrence.
pub fn group_flows(records: &[TraceRecord]) -> Vec<NamedFlow> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&TraceRecord>> = HashMap::new();
    for r in records {
        let key = r.flow_hint.as_deref().unwrap_or(UNLABELED_FLOW);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let mut recs = groups.remove(key).unwrap_or_default();
            recs.sort_by_key(|r| r.seq);
            let mut seen = HashSet::new();
            let members = recs.into_iter().filter(|r| seen.insert(r.class.as_str())).map(|r| r.class.clone()).collect();
            NamedFlow { id: key.to_string(), members }
        })
        .collect()
}
