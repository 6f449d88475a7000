//! Result rendering: DOT graph export, the machine-readable report, and the
//! plain-text summary for end users.
//!
//! Three abstraction levels collapse the same composed graph for different
//! audiences: `point` keeps every IPC point, `component` folds points into
//! their components, `application` folds further into apps. Rendering is a
//! pure function of its inputs; identical inputs produce byte-identical text.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{ApiCatalog, AttackComplexity, Criticality};
use crate::flowgraph::{CriticalFlow, EcosystemView, EdgeKind, FlowGraph, IpcVia, NodeRef};
use crate::risk::{PermissionFinding, RiskScore};

/// Collapse level for graph export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbstractionLevel {
    Point,
    Component,
    Application,
}

impl AbstractionLevel {
    pub fn parse(name: &str) -> Option<AbstractionLevel> {
        match name {
            "point" => Some(AbstractionLevel::Point),
            "component" => Some(AbstractionLevel::Component),
            "application" => Some(AbstractionLevel::Application),
            _ => None,
        }
    }
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Map a node to its display identity at the chosen level.
fn level_key(node: &NodeRef, graph: &FlowGraph, level: AbstractionLevel) -> String {
    let meta = graph.meta(node);
    match (node, level) {
        (NodeRef::Point(_), AbstractionLevel::Point) => node.to_string(),
        (NodeRef::Point(_), AbstractionLevel::Component) => {
            let meta = meta.expect("point has meta");
            format!("{}/{}", meta.app, meta.component.as_deref().unwrap_or("?"))
        }
        (NodeRef::Point(_), AbstractionLevel::Application) => {
            meta.expect("point has meta").app.clone()
        }
        _ => node.to_string(),
    }
}

/// Render the graph as DOT with one cluster per app and, at point level,
/// one subcluster per component. Node and edge emission is sorted, so the
/// output is stable.
pub fn to_dot(graph: &FlowGraph, level: AbstractionLevel) -> String {
    // level node -> (app, label, is_terminal)
    let mut nodes: BTreeMap<String, (String, String, bool)> = BTreeMap::new();
    for (node, meta) in graph.nodes() {
        let key = level_key(node, graph, level);
        let (label, terminal) = match node {
            NodeRef::Point(_) => {
                let label = match level {
                    AbstractionLevel::Point => {
                        let point = meta.point.as_ref().expect("point meta");
                        match (&point.api, point.index) {
                            (Some(api), Some(index)) => {
                                format!("{}#{index} {api}", point.method)
                            }
                            _ => point.method.clone(),
                        }
                    }
                    AbstractionLevel::Component => {
                        meta.component.clone().unwrap_or_else(|| "?".to_string())
                    }
                    AbstractionLevel::Application => meta.app.clone(),
                };
                (label, false)
            }
            NodeRef::SourceTerminal { api, .. } | NodeRef::SinkTerminal { api, .. } => {
                (meta.label.clone().unwrap_or_else(|| api.clone()), true)
            }
        };
        nodes.entry(key).or_insert((meta.app.clone(), label, terminal));
    }

    // Collapsed edges: drop self-edges, dedup by (from, to, kind tag).
    let mut edges: BTreeSet<(String, String, String)> = BTreeSet::new();
    for edge in graph.edges() {
        let from = level_key(&edge.from, graph, level);
        let to = level_key(&edge.to, graph, level);
        if from == to {
            continue;
        }
        let attrs = match edge.kind {
            EdgeKind::Intra => "color=gray40".to_string(),
            EdgeKind::Ipc { via, blocked } => {
                let color = match via {
                    IpcVia::Intent => "blue",
                    IpcVia::Provider => "purple",
                };
                match blocked {
                    Some(reason) => format!(
                        "color={color} style=dashed label=\"blocked: {}\"",
                        match reason {
                            crate::flowgraph::BlockReason::NotExported => "not exported",
                            crate::flowgraph::BlockReason::MissingPermission => "missing permission",
                        }
                    ),
                    None => format!("color={color}"),
                }
            }
            EdgeKind::Source => "color=darkgreen".to_string(),
            EdgeKind::Sink => "color=crimson".to_string(),
        };
        edges.insert((from, to, attrs));
    }

    let mut out = String::new();
    out.push_str("digraph flows {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box fontsize=10];\n");

    // Group nodes per app, then (at point level) per component.
    let mut by_app: BTreeMap<&str, Vec<(&String, &(String, String, bool))>> = BTreeMap::new();
    for (key, value) in &nodes {
        by_app.entry(value.0.as_str()).or_default().push((key, value));
    }

    for (cluster_index, (app, app_nodes)) in by_app.iter().enumerate() {
        out.push_str(&format!("  subgraph \"cluster_{}\" {{\n", dot_escape(app)));
        out.push_str(&format!("    label=\"{}\";\n", dot_escape(app)));

        if level == AbstractionLevel::Point {
            let mut by_component: BTreeMap<String, Vec<(&String, &(String, String, bool))>> =
                BTreeMap::new();
            let mut loose = Vec::new();
            for (key, value) in app_nodes {
                let component = key
                    .strip_prefix(&format!("{app}/"))
                    .and_then(|rest| rest.split('/').next())
                    .filter(|_| !value.2);
                match component {
                    Some(component) => by_component
                        .entry(component.to_string())
                        .or_default()
                        .push((key, value)),
                    None => loose.push((key, value)),
                }
            }
            for (component, comp_nodes) in &by_component {
                out.push_str(&format!(
                    "    subgraph \"cluster_{}_{}\" {{\n",
                    cluster_index,
                    dot_escape(component)
                ));
                out.push_str(&format!("      label=\"{}\";\n", dot_escape(component)));
                for (key, value) in comp_nodes {
                    out.push_str(&format!(
                        "      \"{}\" [label=\"{}\"];\n",
                        dot_escape(key),
                        dot_escape(&value.1)
                    ));
                }
                out.push_str("    }\n");
            }
            for (key, value) in loose {
                out.push_str(&format!(
                    "    \"{}\" [label=\"{}\" shape=ellipse];\n",
                    dot_escape(key),
                    dot_escape(&value.1)
                ));
            }
        } else {
            for (key, value) in app_nodes {
                let shape = if value.2 { " shape=ellipse" } else { "" };
                out.push_str(&format!(
                    "    \"{}\" [label=\"{}\"{shape}];\n",
                    dot_escape(key),
                    dot_escape(&value.1)
                ));
            }
        }
        out.push_str("  }\n");
    }

    for (from, to, attrs) in &edges {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [{attrs}];\n",
            dot_escape(from),
            dot_escape(to)
        ));
    }
    out.push_str("}\n");
    out
}

/// Number of distinct nodes the DOT export shows at a level.
pub fn level_node_count(graph: &FlowGraph, level: AbstractionLevel) -> usize {
    graph
        .nodes()
        .map(|(node, _)| level_key(node, graph, level))
        .collect::<BTreeSet<String>>()
        .len()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub api: String,
    pub label: String,
    pub app: String,
    pub criticality: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkInfo {
    pub api: String,
    pub label: String,
    pub app: String,
    pub attack_complexity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRisk {
    pub impact: u8,
    pub probability: u8,
    pub risk: u8,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFinding {
    pub from: String,
    pub to: String,
    pub verdict: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFlow {
    pub source: SourceInfo,
    pub sink: SinkInfo,
    pub apps: Vec<String>,
    pub risk: ReportRisk,
    pub permissions: Vec<ReportFinding>,
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Digest {
    pub apps: Vec<String>,
    pub catalog_digest: String,
    pub catalog_apis: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Stats {
    pub apps: usize,
    pub components: usize,
    pub points: usize,
    pub intra_flows: usize,
    pub ipc_edges: usize,
    pub application_flows: usize,
    pub critical_flows: usize,
    pub resolution_errors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u64>>,
}

/// Self-contained analysis result: re-renderable without re-analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub digest: Digest,
    pub critical_flows: Vec<ReportFlow>,
    pub stats: Stats,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<AnalysisReport, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn level_name(criticality: Criticality) -> &'static str {
    match criticality {
        Criticality::Low => "low",
        Criticality::Medium => "medium",
        Criticality::High => "high",
    }
}

fn complexity_name(complexity: AttackComplexity) -> &'static str {
    match complexity {
        AttackComplexity::Medium => "medium",
        AttackComplexity::High => "high",
        AttackComplexity::VeryHigh => "very_high",
    }
}

fn label_name(score: &RiskScore) -> String {
    format!("{:?}", score.label).to_lowercase()
}

/// Assemble the report document. Flows are sorted by descending risk, then
/// source and sink names.
pub fn to_report(
    flows: &[(CriticalFlow, RiskScore, Vec<PermissionFinding>)],
    catalog: &ApiCatalog,
    eco: &EcosystemView,
    mut stats: Stats,
) -> AnalysisReport {
    let mut report_flows: Vec<ReportFlow> = flows
        .iter()
        .map(|(flow, score, findings)| ReportFlow {
            source: SourceInfo {
                api: flow.source_api.clone(),
                label: catalog.label(&flow.source_api).to_string(),
                app: flow.source_app.clone(),
                criticality: level_name(flow.criticality).to_string(),
            },
            sink: SinkInfo {
                api: flow.sink_api.clone(),
                label: catalog.label(&flow.sink_api).to_string(),
                app: flow.sink_app.clone(),
                attack_complexity: complexity_name(flow.complexity).to_string(),
            },
            apps: flow.apps_on_path.clone(),
            risk: ReportRisk {
                impact: score.impact,
                probability: score.probability,
                risk: score.risk,
                label: label_name(score),
            },
            permissions: findings
                .iter()
                .map(|f| ReportFinding {
                    from: f.from.clone(),
                    to: f.to.clone(),
                    verdict: match f.verdict {
                        crate::risk::Verdict::Guarded => "guarded",
                        crate::risk::Verdict::Unguarded => "unguarded",
                        crate::risk::Verdict::SharedUid => "shared_uid",
                    }
                    .to_string(),
                    detail: f.detail.clone(),
                })
                .collect(),
            witness: flow.witness_nodes(),
        })
        .collect();

    report_flows.sort_by(|a, b| {
        (std::cmp::Reverse(a.risk.risk), &a.source.api, &a.sink.api, &a.apps).cmp(&(
            std::cmp::Reverse(b.risk.risk),
            &b.source.api,
            &b.sink.api,
            &b.apps,
        ))
    });

    stats.critical_flows = report_flows.len();
    let apps: Vec<String> = eco.index.app_ids().map(str::to_string).collect();
    stats.apps = apps.len();

    AnalysisReport {
        digest: Digest {
            apps,
            catalog_digest: catalog.digest(),
            catalog_apis: catalog.len(),
        },
        critical_flows: report_flows,
        stats,
    }
}

/// One line per critical flow, plus the flows that join a longer path
/// midway towards the same sink.
pub fn user_summary(report: &AnalysisReport) -> String {
    if report.critical_flows.is_empty() {
        return "No transitive information flows detected.\n".to_string();
    }
    let mut out = String::new();
    for flow in &report.critical_flows {
        out.push_str(&format!(
            "{} data can reach {} via {} [risk {} {}]\n",
            flow.source.label,
            flow.sink.label,
            flow.apps.join(" \u{2192} "),
            flow.risk.risk,
            flow.risk.label,
        ));
        let apps: BTreeSet<&str> = flow.apps.iter().map(String::as_str).collect();
        for other in &report.critical_flows {
            if std::ptr::eq(flow, other) {
                continue;
            }
            let same_sink = other.sink == flow.sink;
            let other_apps: BTreeSet<&str> = other.apps.iter().map(String::as_str).collect();
            let joins_midway = same_sink
                && other_apps.is_subset(&apps)
                && other_apps != apps
                && other
                    .apps
                    .first()
                    .is_some_and(|first| apps.contains(first.as_str()));
            if joins_midway {
                out.push_str(&format!(
                    "  + {} data joins at {}\n",
                    other.source.label,
                    other.apps.first().map(String::as_str).unwrap_or("?")
                ));
            }
        }
    }
    out
}

/// Checks performed by tests: balanced braces and statement shape. Not a
/// full grammar, but enough to catch malformed emission.
pub fn looks_like_dot(text: &str) -> bool {
    if !text.starts_with("digraph ") {
        return false;
    }
    let mut depth = 0i64;
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0 && !in_string
}
