//! Hierarchical flow graph over IPC points, apps, and terminals.
//!
//! Intra-component flows from the slicer become edges between points, IPC
//! exits are resolved to the entries of their target components, and source
//! and sink call sites attach to per-(app, api) terminal nodes. Implicit
//! intents resolve to every filter-matching component, a deliberate
//! over-approximation. Edges whose target the caller could not actually
//! reach (not exported across app boundaries, or guarded by a permission the
//! caller lacks while the apps do not share a user id) stay in the graph,
//! marked as permission-blocked. A write to a shared store couples to reads
//! of the same literal target.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::catalog::{ApiCatalog, ApiClass, AttackComplexity, Criticality, ResolutionMode};
use crate::error::GraphError;
use crate::model::{AppBundle, Statement};
use crate::scan::{ComponentIndex, ExchangeDocument, IpcPoint, PointId, PointOrigin, PointRole};
use crate::slicer::FlowDocument;

/// A graph node: an IPC point or a synthetic terminal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Point(PointId),
    SourceTerminal { app: String, api: String },
    SinkTerminal { app: String, api: String },
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Point(id) => write!(f, "{id}"),
            NodeRef::SourceTerminal { app, api } => write!(f, "source:{app}/{api}"),
            NodeRef::SinkTerminal { app, api } => write!(f, "sink:{app}/{api}"),
        }
    }
}

/// How an IPC edge came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IpcVia {
    /// Intent-style routing: explicit target, implicit action, or broadcast.
    Intent,
    /// Coupling through a shared store written and read at the same literal
    /// target.
    Provider,
}

/// Why a marked edge would be stopped at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockReason {
    NotExported,
    MissingPermission,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    /// A slicer-witnessed entry→exit flow inside one component.
    Intra,
    Ipc {
        via: IpcVia,
        blocked: Option<BlockReason>,
    },
    /// Terminal attachment of a source call site.
    Source,
    /// Terminal attachment of a sink call site.
    Sink,
}

impl EdgeKind {
    pub fn is_ipc(&self) -> bool {
        matches!(self, EdgeKind::Ipc { .. })
    }

    pub fn blocked(&self) -> Option<BlockReason> {
        match self {
            EdgeKind::Ipc { blocked, .. } => *blocked,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowEdge {
    pub from: NodeRef,
    pub to: NodeRef,
    pub kind: EdgeKind,
}

/// Placement and classification data carried by each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMeta {
    pub app: String,
    pub component: Option<String>,
    pub point: Option<IpcPoint>,
    /// Display label for terminals.
    pub label: Option<String>,
    pub criticality: Option<Criticality>,
    pub complexity: Option<AttackComplexity>,
}

/// Directed typed graph of points, terminals, and flow edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowGraph {
    nodes: BTreeMap<NodeRef, NodeMeta>,
    edges: BTreeSet<FlowEdge>,
}

impl FlowGraph {
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeRef, &NodeMeta)> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &FlowEdge> {
        self.edges.iter()
    }

    pub fn meta(&self, node: &NodeRef) -> Option<&NodeMeta> {
        self.nodes.get(node)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, node: &NodeRef) -> bool {
        self.nodes.contains_key(node)
    }

    pub(crate) fn insert_edge(&mut self, edge: FlowEdge) {
        self.edges.insert(edge);
    }

    /// Stable line-per-element rendering for golden tests and debugging.
    pub fn topological_dump(&self) -> String {
        let mut out = String::new();
        for (node, meta) in &self.nodes {
            out.push_str(&format!("node {node} app={}", meta.app));
            if let Some(component) = &meta.component {
                out.push_str(&format!(" component={component}"));
            }
            out.push('\n');
        }
        for edge in &self.edges {
            out.push_str(&format!("edge {} -> {} {:?}\n", edge.from, edge.to, edge.kind));
        }
        out
    }

    fn adjacency(&self) -> BTreeMap<&NodeRef, Vec<&FlowEdge>> {
        let mut adjacency: BTreeMap<&NodeRef, Vec<&FlowEdge>> = BTreeMap::new();
        for edge in &self.edges {
            adjacency.entry(&edge.from).or_default().push(edge);
        }
        adjacency
    }
}

/// Borrowed view of everything the graph phase needs.
#[derive(Clone, Copy)]
pub struct EcosystemView<'a> {
    pub bundles: &'a [AppBundle],
    pub index: &'a ComponentIndex,
    pub catalog: &'a ApiCatalog,
}

impl<'a> EcosystemView<'a> {
    pub fn bundle(&self, app: &str) -> Option<&'a AppBundle> {
        self.bundles.iter().find(|b| b.app_id == app)
    }

    fn statement(
        &self,
        app: &str,
        component: &str,
        method: &str,
        index: usize,
    ) -> Option<&'a Statement> {
        self.bundle(app)?
            .component(component)?
            .method(method)?
            .body
            .get(index)
    }

    fn target_literal(&self, app: &str, component: &str, point: &IpcPoint) -> Option<&'a str> {
        let index = point.index?;
        self.statement(app, component, &point.method, index)?.target()
    }
}

/// Build the per-app flow graph: all of the app's points, intra-component
/// flow edges, and source/sink terminal attachments.
pub fn build_app_graph(
    app: &str,
    exchange: &ExchangeDocument,
    flows: &FlowDocument,
    catalog: &ApiCatalog,
) -> Result<FlowGraph, GraphError> {
    let mut graph = FlowGraph::default();

    for section in exchange.components.iter().filter(|c| c.app == app) {
        for point in &section.points {
            let node = NodeRef::Point(point.id.clone());
            graph.nodes.insert(
                node.clone(),
                NodeMeta {
                    app: section.app.clone(),
                    component: Some(section.name.clone()),
                    point: Some(point.clone()),
                    label: None,
                    criticality: None,
                    complexity: None,
                },
            );
            match (point.origin, point.api.as_deref()) {
                (PointOrigin::SourceApi, Some(api)) => {
                    let criticality = match catalog.classify(api) {
                        ApiClass::Source(c) => Some(c),
                        _ => None,
                    };
                    let terminal = NodeRef::SourceTerminal {
                        app: app.to_string(),
                        api: api.to_string(),
                    };
                    graph.nodes.entry(terminal.clone()).or_insert(NodeMeta {
                        app: app.to_string(),
                        component: None,
                        point: None,
                        label: Some(catalog.label(api).to_string()),
                        criticality,
                        complexity: None,
                    });
                    graph.insert_edge(FlowEdge {
                        from: terminal,
                        to: node.clone(),
                        kind: EdgeKind::Source,
                    });
                }
                (PointOrigin::SinkApi, Some(api)) => {
                    let complexity = match catalog.classify(api) {
                        ApiClass::Sink(c) => Some(c),
                        _ => None,
                    };
                    let terminal = NodeRef::SinkTerminal {
                        app: app.to_string(),
                        api: api.to_string(),
                    };
                    graph.nodes.entry(terminal.clone()).or_insert(NodeMeta {
                        app: app.to_string(),
                        component: None,
                        point: None,
                        label: Some(catalog.label(api).to_string()),
                        criticality: None,
                        complexity,
                    });
                    graph.insert_edge(FlowEdge {
                        from: node.clone(),
                        to: terminal,
                        kind: EdgeKind::Sink,
                    });
                }
                _ => {}
            }
        }
    }

    let prefix = format!("{app}/");
    for record in flows.flows.iter().filter(|f| f.component.starts_with(&prefix)) {
        for endpoint in [&record.from, &record.to] {
            if !graph.contains(&NodeRef::Point(endpoint.clone())) {
                return Err(GraphError::DanglingFlow {
                    point: endpoint.to_string(),
                });
            }
        }
        graph.insert_edge(FlowEdge {
            from: NodeRef::Point(record.from.clone()),
            to: NodeRef::Point(record.to.clone()),
            kind: EdgeKind::Intra,
        });
    }

    Ok(graph)
}

/// One resolved destination of an outgoing IPC exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpcTarget {
    pub app: String,
    pub component: String,
    pub entry: PointId,
    pub blocked: Option<BlockReason>,
}

/// Resolution result for one exit; failures are report entries, not errors.
#[derive(Debug, Clone, Default)]
pub struct ResolvedIpc {
    pub targets: Vec<IpcTarget>,
    pub errors: Vec<String>,
}

/// Resolve an outgoing-IPC exit to the lifecycle entries it can reach.
///
/// Explicit calls resolve to the single named component; implicit actions to
/// every component whose filters carry the action; broadcasts to matching
/// broadcast receivers only. Targets the caller could not legitimately reach
/// are still returned, marked with the blocking reason.
pub fn resolve_ipc(
    exit: &IpcPoint,
    exit_app: &str,
    exit_component: &str,
    eco: &EcosystemView,
) -> ResolvedIpc {
    let mut resolved = ResolvedIpc::default();
    let Some(api) = exit.api.as_deref() else {
        return resolved;
    };
    let ApiClass::IpcOut(mode) = eco.catalog.classify(api) else {
        return resolved;
    };
    let target = eco.target_literal(exit_app, exit_component, exit);

    let mut components: Vec<(&str, &str)> = Vec::new();
    match (mode, target) {
        (ResolutionMode::Explicit, Some(literal)) => match literal.split_once('/') {
            Some((app, component)) if eco.index.get(app, component).is_some() => {
                components.push((app, component));
            }
            _ => resolved.errors.push(format!(
                "explicit target `{literal}` of {} names no component",
                exit.id
            )),
        },
        (ResolutionMode::ImplicitAction, Some(action)) => {
            for info in eco.index.components() {
                if info.intent_filters.iter().any(|a| a == action) {
                    components.push((&info.app, &info.name));
                }
            }
        }
        (ResolutionMode::Broadcast, Some(action)) => {
            for info in eco.index.components() {
                if info.kind == crate::model::ComponentKind::BroadcastReceiver
                    && info.intent_filters.iter().any(|a| a == action)
                {
                    components.push((&info.app, &info.name));
                }
            }
        }
        (_, None) => resolved
            .errors
            .push(format!("ipc call {} carries no target", exit.id)),
    }

    for (app, component) in components {
        let blocked = block_reason(exit_app, app, component, eco);
        let Some(bundle) = eco.bundle(app) else { continue };
        let Some(comp) = bundle.component(component) else { continue };
        for method in &comp.methods {
            if eco.catalog.is_lifecycle(comp.kind, &method.name) {
                resolved.targets.push(IpcTarget {
                    app: app.to_string(),
                    component: component.to_string(),
                    entry: PointId::lifecycle(app, component, &method.name),
                    blocked,
                });
            }
        }
    }

    resolved
        .targets
        .sort_by(|a, b| (&a.app, &a.component, &a.entry).cmp(&(&b.app, &b.component, &b.entry)));
    resolved
}

/// Effective user identity of an app: its shared user id when set, otherwise
/// the app itself.
fn same_uid(caller: &str, target: &str, eco: &EcosystemView) -> bool {
    if caller == target {
        return true;
    }
    let caller_uid = eco.index.manifest(caller).and_then(|m| m.shared_user_id.as_deref());
    let target_uid = eco.index.manifest(target).and_then(|m| m.shared_user_id.as_deref());
    matches!((caller_uid, target_uid), (Some(a), Some(b)) if a == b)
}

fn block_reason(
    caller_app: &str,
    target_app: &str,
    target_component: &str,
    eco: &EcosystemView,
) -> Option<BlockReason> {
    if same_uid(caller_app, target_app, eco) {
        return None;
    }
    let info = eco.index.get(target_app, target_component)?;
    if !info.exported {
        return Some(BlockReason::NotExported);
    }
    if let Some(required) = &info.required_permission {
        let holds = eco
            .index
            .manifest(caller_app)
            .is_some_and(|m| m.granted_permissions.contains(required));
        if !holds {
            return Some(BlockReason::MissingPermission);
        }
    }
    None
}

/// Resolve every outgoing-IPC exit in the ecosystem and couple shared-store
/// writes to reads of the same literal target.
pub fn all_ipc_edges(exchange: &ExchangeDocument, eco: &EcosystemView) -> (Vec<FlowEdge>, Vec<String>) {
    let mut edges = Vec::new();
    let mut errors = Vec::new();

    for section in &exchange.components {
        for point in &section.points {
            if point.origin != PointOrigin::IpcOutApi {
                continue;
            }
            let resolved = resolve_ipc(point, &section.app, &section.name, eco);
            errors.extend(resolved.errors);
            for target in resolved.targets {
                edges.push(FlowEdge {
                    from: NodeRef::Point(point.id.clone()),
                    to: NodeRef::Point(target.entry),
                    kind: EdgeKind::Ipc {
                        via: IpcVia::Intent,
                        blocked: target.blocked,
                    },
                });
            }
        }
    }

    // Shared-store coupling: sink writes and source reads that name the same
    // literal target connect, whoever performs them.
    let mut writes: Vec<(&str, &IpcPoint)> = Vec::new();
    let mut reads: Vec<(&str, &IpcPoint)> = Vec::new();
    for section in &exchange.components {
        for point in &section.points {
            let literal = eco.target_literal(&section.app, &section.name, point);
            let Some(literal) = literal.filter(|l| !l.is_empty()) else {
                continue;
            };
            match point.origin {
                PointOrigin::SinkApi => writes.push((literal, point)),
                PointOrigin::SourceApi => reads.push((literal, point)),
                _ => {}
            }
        }
    }
    for (written, write_point) in &writes {
        for (read, read_point) in &reads {
            if written == read {
                edges.push(FlowEdge {
                    from: NodeRef::Point(write_point.id.clone()),
                    to: NodeRef::Point(read_point.id.clone()),
                    kind: EdgeKind::Ipc {
                        via: IpcVia::Provider,
                        blocked: None,
                    },
                });
            }
        }
    }

    edges.sort();
    edges.dedup();
    errors.sort();
    (edges, errors)
}

/// Reachability inside one application, from entries that connect to the
/// outside of the app to exits that leave it. The graph must already carry
/// the app's intra-app IPC edges.
pub fn application_flows(graph: &FlowGraph, eco: &EcosystemView) -> Vec<(PointId, PointId)> {
    let mut external_entries = Vec::new();
    let mut external_exits = BTreeSet::new();

    for (node, meta) in &graph.nodes {
        let (NodeRef::Point(id), Some(point)) = (node, &meta.point) else {
            continue;
        };
        let exported = meta
            .component
            .as_deref()
            .and_then(|c| eco.index.get(&meta.app, c))
            .is_some_and(|info| info.exported);
        match point.role {
            PointRole::Entry => {
                let external = match point.origin {
                    PointOrigin::SourceApi => true,
                    PointOrigin::Lifecycle | PointOrigin::IpcInApi => exported,
                    _ => false,
                };
                if external {
                    external_entries.push((node.clone(), id.clone()));
                }
            }
            PointRole::Exit => {
                let external = match point.origin {
                    PointOrigin::SinkApi => true,
                    PointOrigin::IpcOutApi => {
                        let api = point.api.as_deref().unwrap_or("");
                        match eco.catalog.classify(api) {
                            ApiClass::IpcOut(ResolutionMode::Explicit) => {
                                let component = meta.component.as_deref().unwrap_or("");
                                match eco.target_literal(&meta.app, component, point) {
                                    Some(literal) => match literal.split_once('/') {
                                        Some((target_app, _)) => target_app != meta.app,
                                        None => true,
                                    },
                                    None => true,
                                }
                            }
                            ApiClass::IpcOut(_) => true,
                            _ => false,
                        }
                    }
                    _ => false,
                };
                if external {
                    external_exits.insert(node.clone());
                }
            }
        }
    }

    let adjacency = graph.adjacency();
    let mut pairs = Vec::new();
    for (start, start_id) in &external_entries {
        let mut seen: BTreeSet<&NodeRef> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            if let Some(out) = adjacency.get(node) {
                for edge in out {
                    if matches!(edge.kind, EdgeKind::Intra | EdgeKind::Ipc { .. })
                        && seen.insert(&edge.to)
                    {
                        queue.push_back(&edge.to);
                    }
                }
            }
        }
        for exit in &external_exits {
            if seen.contains(exit) {
                if let NodeRef::Point(exit_id) = exit {
                    pairs.push((start_id.clone(), exit_id.clone()));
                }
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    pairs
}

/// Merge per-app graphs and insert the resolved IPC edges. Edges are added
/// only when both endpoints exist in the merged node set.
pub fn compose_ecosystem(graphs: &[FlowGraph], ipc_edges: &[FlowEdge]) -> FlowGraph {
    let mut composed = FlowGraph::default();
    for graph in graphs {
        for (node, meta) in &graph.nodes {
            composed.nodes.insert(node.clone(), meta.clone());
        }
        for edge in &graph.edges {
            composed.insert_edge(edge.clone());
        }
    }
    for edge in ipc_edges {
        if composed.contains(&edge.from) && composed.contains(&edge.to) {
            composed.insert_edge(edge.clone());
        }
    }
    composed
}

/// A source→sink path through the composed ecosystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalFlow {
    pub source_app: String,
    pub source_api: String,
    pub criticality: Criticality,
    pub sink_app: String,
    pub sink_api: String,
    pub complexity: AttackComplexity,
    /// One shortest witness path, edge by edge.
    pub path: Vec<FlowEdge>,
    /// Apps visited along the witness, consecutive repeats collapsed.
    pub apps_on_path: Vec<String>,
}

impl CriticalFlow {
    /// Identity of the flow: terminals plus the set of apps involved.
    pub fn identity(&self) -> (String, String, BTreeSet<String>) {
        (
            format!("source:{}/{}", self.source_app, self.source_api),
            format!("sink:{}/{}", self.sink_app, self.sink_api),
            self.apps_on_path.iter().cloned().collect(),
        )
    }

    pub fn witness_nodes(&self) -> Vec<String> {
        let mut nodes = Vec::new();
        if let Some(first) = self.path.first() {
            nodes.push(first.from.to_string());
        }
        for edge in &self.path {
            nodes.push(edge.to.to_string());
        }
        nodes
    }
}

/// Enumerate all (source terminal, sink terminal, app set) triples connected
/// by a path, each with one shortest witness. Sorted by (source api, sink
/// api, apps on path).
pub fn critical_flows(graph: &FlowGraph) -> Vec<CriticalFlow> {
    type StateKey = (NodeRef, BTreeSet<String>);

    let adjacency = graph.adjacency();
    let mut flows = Vec::new();

    for (source, source_meta) in &graph.nodes {
        let NodeRef::SourceTerminal { app: source_app, api: source_api } = source else {
            continue;
        };
        let Some(criticality) = source_meta.criticality else { continue };

        let mut visited: HashSet<StateKey> = HashSet::new();
        let mut parents: HashMap<StateKey, (StateKey, FlowEdge)> = HashMap::new();
        let mut queue: VecDeque<StateKey> = VecDeque::new();
        let start: StateKey = (
            source.clone(),
            BTreeSet::from([source_app.clone()]),
        );
        visited.insert(start.clone());
        queue.push_back(start);

        while let Some(state) = queue.pop_front() {
            let (node, apps) = &state;
            let Some(out) = adjacency.get(node) else { continue };
            for edge in out {
                let to_app = match graph.meta(&edge.to) {
                    Some(meta) => meta.app.clone(),
                    None => continue,
                };
                let mut next_apps = apps.clone();
                next_apps.insert(to_app);
                let next: StateKey = (edge.to.clone(), next_apps);
                if visited.insert(next.clone()) {
                    parents.insert(next.clone(), (state.clone(), (*edge).clone()));
                    if let NodeRef::SinkTerminal { app: sink_app, api: sink_api } = &edge.to {
                        let complexity = graph
                            .meta(&edge.to)
                            .and_then(|m| m.complexity);
                        let Some(complexity) = complexity else { continue };
                        let path = rebuild_path(&parents, &next);
                        let apps_on_path = apps_along(graph, &path);
                        flows.push(CriticalFlow {
                            source_app: source_app.clone(),
                            source_api: source_api.clone(),
                            criticality,
                            sink_app: sink_app.clone(),
                            sink_api: sink_api.clone(),
                            complexity,
                            path,
                            apps_on_path,
                        });
                    }
                    queue.push_back(next);
                }
            }
        }
    }

    flows.sort_by(|a, b| {
        (&a.source_api, &a.sink_api, &a.apps_on_path, &a.source_app, &a.sink_app)
            .cmp(&(&b.source_api, &b.sink_api, &b.apps_on_path, &b.source_app, &b.sink_app))
    });
    flows
}

fn rebuild_path(
    parents: &HashMap<(NodeRef, BTreeSet<String>), ((NodeRef, BTreeSet<String>), FlowEdge)>,
    end: &(NodeRef, BTreeSet<String>),
) -> Vec<FlowEdge> {
    let mut path = Vec::new();
    let mut cursor = end.clone();
    while let Some((prev, edge)) = parents.get(&cursor) {
        path.push(edge.clone());
        cursor = prev.clone();
    }
    path.reverse();
    path
}

fn apps_along(graph: &FlowGraph, path: &[FlowEdge]) -> Vec<String> {
    let mut apps = Vec::new();
    let mut push = |node: &NodeRef| {
        if let Some(meta) = graph.meta(node) {
            if apps.last() != Some(&meta.app) {
                apps.push(meta.app.clone());
            }
        }
    };
    if let Some(first) = path.first() {
        push(&first.from);
    }
    for edge in path {
        push(&edge.to);
    }
    apps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ApiCatalog;
    use crate::model::validate_ecosystem;
    use crate::pipeline;
    use crate::scenario::{self, ScenarioKind};

    struct Fixture {
        bundles: Vec<crate::model::AppBundle>,
        catalog: ApiCatalog,
        index: ComponentIndex,
        exchange: ExchangeDocument,
        flows: FlowDocument,
    }

    impl Fixture {
        fn new(bundles: Vec<crate::model::AppBundle>) -> Fixture {
            assert!(validate_ecosystem(&bundles).is_empty());
            let catalog = ApiCatalog::default_catalog();
            let (index, points) = crate::scan::scan_ecosystem(&bundles, &catalog);
            let exchange = crate::scan::emit_exchange(&index, &points);
            let flows = pipeline::slice_from_exchange(&bundles, &exchange, 1);
            Fixture {
                bundles,
                catalog,
                index,
                exchange,
                flows,
            }
        }

        fn eco(&self) -> EcosystemView<'_> {
            EcosystemView {
                bundles: &self.bundles,
                index: &self.index,
                catalog: &self.catalog,
            }
        }

        fn app_graph(&self, app: &str) -> FlowGraph {
            build_app_graph(app, &self.exchange, &self.flows, &self.catalog).unwrap()
        }

        fn composed(&self) -> (FlowGraph, Vec<String>) {
            let apps: Vec<&str> = self.index.app_ids().collect();
            let graphs: Vec<FlowGraph> = apps.iter().map(|a| self.app_graph(a)).collect();
            let (edges, errors) = all_ipc_edges(&self.exchange, &self.eco());
            (compose_ecosystem(&graphs, &edges), errors)
        }
    }

    fn case_study() -> Fixture {
        Fixture::new(scenario::generate(ScenarioKind::CaseStudy))
    }

    #[test]
    fn result_web_view_graph_shape() {
        let fixture = case_study();
        let graph = fixture.app_graph("PubTrans");

        assert!(!graph.edges().any(|e| e.kind == EdgeKind::Source));

        let rwv_intra: Vec<&FlowEdge> = graph
            .edges()
            .filter(|e| {
                e.kind == EdgeKind::Intra
                    && e.from.to_string().contains("/ResultWebView/")
            })
            .collect();
        assert_eq!(rwv_intra.len(), 1);

        let sink_edges: Vec<&FlowEdge> = graph
            .edges()
            .filter(|e| e.kind == EdgeKind::Sink)
            .collect();
        assert_eq!(sink_edges.len(), 1);
        let terminal = graph.meta(&sink_edges[0].to).unwrap();
        assert_eq!(terminal.label.as_deref(), Some("Network (WebView)"));
    }

    #[test]
    fn app_without_flows_keeps_isolated_points() {
        let mut bundles = scenario::generate(ScenarioKind::A);
        // Strip the body so no flows or terminals arise.
        bundles[0].components[0].methods[0].body.clear();
        let fixture = Fixture::new(bundles);
        let graph = fixture.app_graph("glowtorch");
        assert_eq!(graph.node_count(), 1);
        assert_eq!(graph.edge_count(), 0);
    }

    #[test]
    fn pub_trans_graph_matches_manual_enumeration() {
        let fixture = case_study();
        let graph = fixture.app_graph("PubTrans");
        let intra: Vec<String> = graph
            .edges()
            .filter(|e| e.kind == EdgeKind::Intra)
            .map(|e| format!("{} -> {}", e.from, e.to))
            .collect();
        assert_eq!(
            intra,
            vec![
                "PubTrans/MainActivity/onCreate#2:entry -> PubTrans/MainActivity/onCreate#4:exit",
                "PubTrans/MainActivity/onCreate:entry -> PubTrans/MainActivity/onCreate#1:exit",
                "PubTrans/MainActivity/onCreate:entry -> PubTrans/MainActivity/onCreate#4:exit",
                "PubTrans/ResultWebView/onCreate:entry -> PubTrans/ResultWebView/loadResults#1:exit",
            ]
        );
    }

    #[test]
    fn explicit_start_activity_resolves_to_on_create_entry() {
        let fixture = case_study();
        let (_, exits) = fixture.exchange.points_of("PubTrans", "MainActivity");
        let start_activity = exits
            .iter()
            .find(|p| p.api.as_deref() == Some("startActivity"))
            .unwrap();
        let resolved = resolve_ipc(start_activity, "PubTrans", "MainActivity", &fixture.eco());
        assert_eq!(resolved.targets.len(), 1);
        assert_eq!(
            resolved.targets[0].entry.0,
            "PubTrans/ResultWebView/onCreate:entry"
        );
        assert_eq!(resolved.targets[0].blocked, None);
        assert!(resolved.errors.is_empty());
    }

    #[test]
    fn implicit_action_without_match_resolves_to_nothing() {
        let fixture = case_study();
        let (_, exits) = fixture.exchange.points_of("PubTrans", "MainActivity");
        let mut bind = exits
            .iter()
            .find(|p| p.api.as_deref() == Some("bindService"))
            .cloned()
            .cloned()
            .unwrap();
        // Re-point the statement lookup at a fixture with a different action.
        let mut bundles = scenario::generate(ScenarioKind::CaseStudy);
        let body = &mut bundles
            .iter_mut()
            .find(|b| b.app_id == "PubTrans")
            .unwrap()
            .components[0]
            .methods[0]
            .body;
        if let Statement::Api { target, .. } = &mut body[1] {
            *target = Some("NO_SUCH_ACTION".to_string());
        }
        let fixture = Fixture::new(bundles);
        bind.id = PointId("PubTrans/MainActivity/onCreate#1:exit".to_string());
        let resolved = resolve_ipc(&bind, "PubTrans", "MainActivity", &fixture.eco());
        assert!(resolved.targets.is_empty());
        assert!(resolved.errors.is_empty());
    }

    #[test]
    fn bind_service_action_resolves_to_service_entry() {
        let fixture = case_study();
        let (_, exits) = fixture.exchange.points_of("PubTrans", "MainActivity");
        let bind = exits
            .iter()
            .find(|p| p.api.as_deref() == Some("bindService"))
            .unwrap();
        let resolved = resolve_ipc(bind, "PubTrans", "MainActivity", &fixture.eco());
        assert_eq!(resolved.targets.len(), 1);
        assert_eq!(
            resolved.targets[0].entry.0,
            "PubTransLocation/LocationService/onBind:entry"
        );
    }

    #[test]
    fn unknown_explicit_target_is_reported_not_fatal() {
        let mut bundles = scenario::generate(ScenarioKind::CaseStudy);
        let body = &mut bundles
            .iter_mut()
            .find(|b| b.app_id == "PubTrans")
            .unwrap()
            .components[0]
            .methods[0]
            .body;
        if let Statement::Api { target, .. } = &mut body[4] {
            *target = Some("nowhere/Ghost".to_string());
        }
        let fixture = Fixture::new(bundles);
        let (_, errors) = fixture.composed();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].contains("nowhere/Ghost"));
    }

    #[test]
    fn composition_contains_cross_app_edges() {
        let fixture = case_study();
        let (graph, errors) = fixture.composed();
        assert!(errors.is_empty());

        let bind = "PubTrans/MainActivity/onCreate#1:exit";
        let callback = "PubTransLocation/LocationService/onBind#1:exit";
        assert!(graph.edges().any(|e| {
            e.kind.is_ipc()
                && e.from.to_string() == bind
                && e.to.to_string() == "PubTransLocation/LocationService/onBind:entry"
        }));
        assert!(graph.edges().any(|e| {
            e.kind.is_ipc()
                && e.from.to_string() == callback
                && e.to.to_string() == "PubTrans/MainActivity/onCreate:entry"
        }));
    }

    #[test]
    fn apps_without_ipc_compose_disjointly() {
        let mut bundles = scenario::generate(ScenarioKind::A);
        let mut second = scenario::generate(ScenarioKind::A);
        second[0].app_id = "glowtorch2".to_string();
        bundles.append(&mut second);
        let fixture = Fixture::new(bundles);
        let (graph, errors) = fixture.composed();
        assert!(errors.is_empty());
        assert!(!graph.edges().any(|e| e.kind.is_ipc()));
    }

    #[test]
    fn scenario_b_has_one_inter_app_edge() {
        let fixture = Fixture::new(scenario::generate(ScenarioKind::B));
        let (graph, _) = fixture.composed();
        let inter: Vec<&FlowEdge> = graph
            .edges()
            .filter(|e| {
                e.kind.is_ipc()
                    && graph.meta(&e.from).unwrap().app != graph.meta(&e.to).unwrap().app
            })
            .collect();
        assert_eq!(inter.len(), 1);
        assert_eq!(graph.meta(&inter[0].from).unwrap().app, "notekeeper");
        assert_eq!(graph.meta(&inter[0].to).unwrap().app, "syncbridge");
    }

    #[test]
    fn case_study_critical_flow_is_exact() {
        let fixture = case_study();
        let (graph, _) = fixture.composed();
        let flows = critical_flows(&graph);
        assert_eq!(flows.len(), 1);
        let flow = &flows[0];
        assert_eq!(flow.source_api, "LocationManager.getLastKnownLocation");
        assert_eq!(flow.sink_api, "WebView.loadUrl");
        assert_eq!(flow.apps_on_path, vec!["PubTransLocation", "PubTrans"]);
        assert_eq!(flow.criticality, Criticality::Medium);
        assert_eq!(flow.complexity, AttackComplexity::Medium);

        // Witness walks the full three-component chain.
        let nodes = flow.witness_nodes();
        assert!(nodes.iter().any(|n| n.contains("/LocationService/")));
        assert!(nodes.iter().any(|n| n.contains("/MainActivity/")));
        assert!(nodes.iter().any(|n| n.contains("/ResultWebView/")));
    }

    #[test]
    fn sources_without_sinks_have_no_flows() {
        let mut bundles = scenario::generate(ScenarioKind::A);
        // Drop the sink statement.
        bundles[0].components[0].methods[0].body.pop();
        let fixture = Fixture::new(bundles);
        let (graph, _) = fixture.composed();
        assert!(critical_flows(&graph).is_empty());
    }

    #[test]
    fn scenario_a_flow_spans_one_app() {
        let fixture = Fixture::new(scenario::generate(ScenarioKind::A));
        let (graph, _) = fixture.composed();
        let flows = critical_flows(&graph);
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].apps_on_path.len(), 1);
        assert_eq!(flows[0].source_api, "ContentProvider.read");
    }

    #[test]
    fn pub_trans_application_flow_reaches_web_view() {
        let fixture = case_study();
        let mut graph = fixture.app_graph("PubTrans");
        let (edges, _) = all_ipc_edges(&fixture.exchange, &fixture.eco());
        for edge in edges {
            let same_app = graph.contains(&edge.from) && graph.contains(&edge.to);
            if same_app {
                graph.insert_edge(edge);
            }
        }
        let pairs = application_flows(&graph, &fixture.eco());
        assert!(pairs.contains(&(
            PointId("PubTrans/MainActivity/onCreate:entry".to_string()),
            PointId("PubTrans/ResultWebView/loadResults#1:exit".to_string())
        )));
    }

    #[test]
    fn unreachable_exit_yields_no_application_flow() {
        let bundles = scenario::generate(ScenarioKind::B);
        let fixture = Fixture::new(vec![bundles.into_iter().nth(1).unwrap()]);
        let graph = fixture.app_graph("syncbridge");
        // The upload service's exit is only reachable from its own entry;
        // removing intra edges leaves it unreachable.
        let mut stripped = graph.clone();
        stripped.edges.retain(|e| e.kind != EdgeKind::Intra);
        let pairs = application_flows(&stripped, &fixture.eco());
        assert!(pairs.is_empty());
    }

    #[test]
    fn application_flows_match_dfs_oracle_on_random_apps() {
        for seed in 0..30 {
            let bundles = crate::synth::random_ecosystem(seed, 1);
            if !validate_ecosystem(&bundles).is_empty() {
                continue;
            }
            let fixture = Fixture::new(bundles);
            let app: String = fixture.index.app_ids().next().unwrap().to_string();
            let mut graph = fixture.app_graph(&app);
            let (edges, _) = all_ipc_edges(&fixture.exchange, &fixture.eco());
            for edge in edges {
                if graph.contains(&edge.from) && graph.contains(&edge.to) {
                    graph.insert_edge(edge);
                }
            }
            let got = application_flows(&graph, &fixture.eco());

            // Oracle: plain DFS over the walkable edge list.
            let walkable: Vec<(NodeRef, NodeRef)> = graph
                .edges()
                .filter(|e| matches!(e.kind, EdgeKind::Intra | EdgeKind::Ipc { .. }))
                .map(|e| (e.from.clone(), e.to.clone()))
                .collect();
            let starts: Vec<NodeRef> = got.iter().map(|(f, _)| NodeRef::Point(f.clone())).collect();
            let targets: Vec<NodeRef> = got.iter().map(|(_, t)| NodeRef::Point(t.clone())).collect();
            for (start, target) in crate::testkit::reachable_pairs(&walkable, &starts, &targets) {
                let (NodeRef::Point(f), NodeRef::Point(t)) = (start, target) else {
                    continue;
                };
                assert!(
                    got.contains(&(f.clone(), t.clone())),
                    "seed {seed}: oracle pair missing from output"
                );
            }
        }
    }

    #[test]
    fn provider_writes_couple_to_same_literal_reads() {
        use crate::model::{AppBundle, Component, ComponentKind, Method};
        use std::collections::BTreeSet;

        let writer = AppBundle {
            app_id: "noter".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![Component {
                name: "Jot".to_string(),
                kind: ComponentKind::Activity,
                exported: true,
                required_permission: None,
                intent_filters: vec![],
                methods: vec![Method {
                    name: "onCreate".to_string(),
                    params: vec!["ctx".to_string()],
                    body: vec![
                        Statement::Api {
                            def: Some("msgs".to_string()),
                            name: "SMS.receive".to_string(),
                            args: vec![],
                            target: None,
                        },
                        Statement::Api {
                            def: None,
                            name: "ContentProvider.write".to_string(),
                            args: vec!["msgs".to_string()],
                            target: Some("content://notes".to_string()),
                        },
                    ],
                }],
            }],
        };
        let reader = AppBundle {
            app_id: "uploader".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![Component {
                name: "Pump".to_string(),
                kind: ComponentKind::Activity,
                exported: true,
                required_permission: None,
                intent_filters: vec![],
                methods: vec![Method {
                    name: "onCreate".to_string(),
                    params: vec!["ctx".to_string()],
                    body: vec![
                        Statement::Api {
                            def: Some("notes".to_string()),
                            name: "ContentProvider.read".to_string(),
                            args: vec![],
                            target: Some("content://notes".to_string()),
                        },
                        Statement::Api {
                            def: None,
                            name: "WebView.loadUrl".to_string(),
                            args: vec!["notes".to_string()],
                            target: None,
                        },
                    ],
                }],
            }],
        };
        let fixture = Fixture::new(vec![writer, reader]);
        let (graph, errors) = fixture.composed();
        assert!(errors.is_empty());
        assert!(graph.edges().any(|e| matches!(
            e.kind,
            EdgeKind::Ipc { via: IpcVia::Provider, .. }
        )));
        let flows = critical_flows(&graph);
        // The write is itself a sink, and the store coupling extends the
        // chain into the reading app.
        let identities: Vec<(String, String, BTreeSet<String>)> =
            flows.iter().map(|f| f.identity()).collect();
        assert!(identities.contains(&(
            "source:noter/SMS.receive".to_string(),
            "sink:noter/ContentProvider.write".to_string(),
            BTreeSet::from(["noter".to_string()]),
        )));
        assert!(identities.contains(&(
            "source:noter/SMS.receive".to_string(),
            "sink:uploader/WebView.loadUrl".to_string(),
            BTreeSet::from(["noter".to_string(), "uploader".to_string()]),
        )));
    }

    #[test]
    fn blocked_marks_follow_manifest_rules() {
        let mut bundles = scenario::generate(ScenarioKind::B);
        bundles[1].components[0].required_permission = Some("SPEAK_FRIEND".to_string());
        let fixture = Fixture::new(bundles);
        let (graph, _) = fixture.composed();
        let marked: Vec<&FlowEdge> = graph
            .edges()
            .filter(|e| e.kind.blocked().is_some())
            .collect();
        assert_eq!(marked.len(), 1);
        assert_eq!(marked[0].kind.blocked(), Some(BlockReason::MissingPermission));

        // Granting the permission clears the mark.
        let mut bundles = scenario::generate(ScenarioKind::B);
        bundles[1].components[0].required_permission = Some("SPEAK_FRIEND".to_string());
        bundles[0].granted_permissions.insert("SPEAK_FRIEND".to_string());
        let fixture = Fixture::new(bundles);
        let (graph, _) = fixture.composed();
        assert!(graph.edges().all(|e| e.kind.blocked().is_none()));

        // A shared user id also clears it.
        let mut bundles = scenario::generate(ScenarioKind::B);
        bundles[1].components[0].required_permission = Some("SPEAK_FRIEND".to_string());
        bundles[0].shared_user_id = Some("pool".to_string());
        bundles[1].shared_user_id = Some("pool".to_string());
        let fixture = Fixture::new(bundles);
        let (graph, _) = fixture.composed();
        assert!(graph.edges().all(|e| e.kind.blocked().is_none()));
    }

    #[test]
    fn blocked_edges_stay_in_graph_and_flows() {
        let mut bundles = scenario::generate(ScenarioKind::B);
        bundles[1].components[0].required_permission = Some("SPEAK_FRIEND".to_string());
        let fixture = Fixture::new(bundles);
        let (graph, _) = fixture.composed();
        let flows = critical_flows(&graph);
        assert_eq!(flows.len(), 1);
        assert!(flows[0].path.iter().any(|e| e.kind.blocked().is_some()));
    }

    #[test]
    fn witness_paths_are_connected_walks() {
        for seed in 0..25 {
            let bundles = crate::synth::random_ecosystem(seed, 3);
            if !validate_ecosystem(&bundles).is_empty() {
                continue;
            }
            let fixture = Fixture::new(bundles);
            let (graph, _) = fixture.composed();
            for flow in critical_flows(&graph) {
                assert!(!flow.path.is_empty());
                assert!(matches!(flow.path[0].from, NodeRef::SourceTerminal { .. }));
                assert!(matches!(
                    flow.path.last().unwrap().to,
                    NodeRef::SinkTerminal { .. }
                ));
                for pair in flow.path.windows(2) {
                    assert_eq!(pair[0].to, pair[1].from, "seed {seed}: broken witness");
                }
                for edge in &flow.path {
                    assert!(graph.edges.contains(edge), "seed {seed}: edge not in graph");
                }
                assert!(!flow.apps_on_path.is_empty());
            }
        }
    }

    #[test]
    fn adding_an_app_never_removes_flows() {
        for seed in 0..25 {
            let small = crate::synth::random_ecosystem(seed, 3);
            let big = crate::synth::random_ecosystem(seed, 4);
            if !validate_ecosystem(&small).is_empty() || !validate_ecosystem(&big).is_empty() {
                continue;
            }
            let before: BTreeSet<_> = {
                let fixture = Fixture::new(small);
                let (graph, _) = fixture.composed();
                critical_flows(&graph).iter().map(|f| f.identity()).collect()
            };
            let after: BTreeSet<_> = {
                let fixture = Fixture::new(big);
                let (graph, _) = fixture.composed();
                critical_flows(&graph).iter().map(|f| f.identity()).collect()
            };
            assert!(
                before.is_subset(&after),
                "seed {seed}: lost {:?}",
                before.difference(&after).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn identical_ecosystems_produce_identical_flow_lists() {
        let run = || {
            let fixture = case_study();
            let (graph, _) = fixture.composed();
            let flows = critical_flows(&graph);
            (graph.topological_dump(), format!("{flows:?}"))
        };
        assert_eq!(run(), run());
    }
}
