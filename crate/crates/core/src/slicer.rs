//! Backward slicing over per-component dependence graphs.
//!
//! One graph is built per component: a node per statement and per method
//! parameter, a use→def edge for every variable use (resolving to the most
//! recent definition at or before the use in straight-line order), and
//! call-binding edges tying arguments to parameters and returns to call
//! definitions. Call binding is context-insensitive: a value returned to one
//! caller may flow to all callers, a deliberate over-approximation. A
//! method's return value is the definition of its last def-bearing statement.
//!
//! Slicing walks the graph backwards from an exit point with a visited set,
//! so recursive call cycles terminate and every edge is traversed at most
//! once per slice. Components slice independently, so jobs can run in a
//! worker pool; merged output is sorted and unaffected by parallelism.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::model::{Component, Statement};
use crate::scan::{IpcPoint, PointId, PointOrigin, PointRole};

/// A dependence-graph node: a method parameter slot or a statement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Param { method: String, slot: usize },
    Stmt { method: String, index: usize },
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Param { method, slot } => write!(f, "{method}:p{slot}"),
            NodeId::Stmt { method, index } => write!(f, "{method}#{index}"),
        }
    }
}

/// Data-dependence and call-binding edges of one component.
///
/// Edges are stored in depends-on direction: `deps[n]` lists the nodes whose
/// values `n` reads, which is the direction a backward slice walks.
#[derive(Debug, Clone, Default)]
pub struct DependenceGraph {
    nodes: BTreeSet<NodeId>,
    deps: BTreeMap<NodeId, Vec<NodeId>>,
}

impl DependenceGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.deps.values().map(Vec::len).sum()
    }

    pub fn deps_of(&self, node: &NodeId) -> &[NodeId] {
        self.deps.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.nodes.contains(node)
    }
}

/// Build the dependence graph of a validated component.
pub fn build_dependence(component: &Component) -> DependenceGraph {
    let mut graph = DependenceGraph::default();
    // (callee, slot) -> definitions bound by call sites anywhere in the component
    let mut param_bindings: BTreeMap<(String, usize), Vec<NodeId>> = BTreeMap::new();
    // call statements with a definition, waiting for the callee's return node
    let mut pending_returns: Vec<(NodeId, String)> = Vec::new();

    for method in &component.methods {
        let mut last_def: HashMap<&str, NodeId> = HashMap::new();
        for (slot, param) in method.params.iter().enumerate() {
            let node = NodeId::Param {
                method: method.name.clone(),
                slot,
            };
            graph.nodes.insert(node.clone());
            last_def.insert(param.as_str(), node);
        }

        for (index, statement) in method.body.iter().enumerate() {
            let node = NodeId::Stmt {
                method: method.name.clone(),
                index,
            };
            graph.nodes.insert(node.clone());
            // Record the definition first: a use may resolve to the defining
            // statement itself (earlier-or-same-index resolution).
            if let Some(def) = statement.def() {
                last_def.insert(def, node.clone());
            }
            match statement {
                Statement::Const { .. } => {}
                Statement::Assign { uses, .. } => {
                    let targets: Vec<NodeId> = uses
                        .iter()
                        .filter_map(|u| last_def.get(u.as_str()).cloned())
                        .collect();
                    add_deps(&mut graph, node, targets);
                }
                Statement::Api { args, .. } => {
                    let targets: Vec<NodeId> = args
                        .iter()
                        .filter_map(|u| last_def.get(u.as_str()).cloned())
                        .collect();
                    add_deps(&mut graph, node, targets);
                }
                Statement::Call { def, callee, args } => {
                    for (slot, arg) in args.iter().enumerate() {
                        if let Some(target) = last_def.get(arg.as_str()) {
                            param_bindings
                                .entry((callee.clone(), slot))
                                .or_default()
                                .push(target.clone());
                        }
                    }
                    if def.is_some() {
                        pending_returns.push((node, callee.clone()));
                    }
                }
            }
        }
    }

    for ((callee, slot), targets) in param_bindings {
        let param = NodeId::Param {
            method: callee.clone(),
            slot,
        };
        // Excess arguments at a call site have no parameter slot; ignore them.
        if graph.nodes.contains(&param) {
            add_deps(&mut graph, param, targets);
        }
    }

    for (call_node, callee) in pending_returns {
        if let Some(ret) = return_node(component, &callee) {
            add_deps(&mut graph, call_node, vec![ret]);
        }
    }

    graph
}

fn add_deps(graph: &mut DependenceGraph, node: NodeId, mut targets: Vec<NodeId>) {
    if targets.is_empty() {
        return;
    }
    let entry = graph.deps.entry(node).or_default();
    entry.append(&mut targets);
    entry.sort();
    entry.dedup();
}

/// The node holding a method's return value: its last def-bearing statement.
fn return_node(component: &Component, method: &str) -> Option<NodeId> {
    let m = component.method(method)?;
    m.body
        .iter()
        .enumerate()
        .rev()
        .find(|(_, s)| s.def().is_some())
        .map(|(index, _)| NodeId::Stmt {
            method: method.to_string(),
            index,
        })
}

/// Counters recorded while slicing, used to check the visited-set bound and
/// edge-linear traversal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SliceStats {
    pub expansions: usize,
    pub edges_traversed: usize,
}

struct SliceRun {
    slice: BTreeSet<NodeId>,
    parents: HashMap<NodeId, NodeId>,
    depth: HashMap<NodeId, usize>,
    stats: SliceStats,
}

fn slice_from(graph: &DependenceGraph, start: NodeId) -> SliceRun {
    let mut run = SliceRun {
        slice: BTreeSet::new(),
        parents: HashMap::new(),
        depth: HashMap::new(),
        stats: SliceStats::default(),
    };
    let mut queue = VecDeque::new();
    run.slice.insert(start.clone());
    run.depth.insert(start.clone(), 0);
    queue.push_back(start);

    while let Some(node) = queue.pop_front() {
        run.stats.expansions += 1;
        let level = run.depth[&node];
        for dep in graph.deps_of(&node) {
            run.stats.edges_traversed += 1;
            if run.slice.insert(dep.clone()) {
                run.parents.insert(dep.clone(), node.clone());
                run.depth.insert(dep.clone(), level + 1);
                queue.push_back(dep.clone());
            }
        }
    }
    run
}

fn exit_node(exit: &IpcPoint) -> Option<NodeId> {
    exit.index.map(|index| NodeId::Stmt {
        method: exit.method.clone(),
        index,
    })
}

/// All nodes backward-reachable from an exit point, the exit included.
pub fn backward_slice(
    graph: &DependenceGraph,
    exit: &IpcPoint,
) -> Result<BTreeSet<NodeId>, GraphError> {
    backward_slice_with_stats(graph, exit).map(|(slice, _)| slice)
}

/// Like [`backward_slice`] but also reports traversal counters.
pub fn backward_slice_with_stats(
    graph: &DependenceGraph,
    exit: &IpcPoint,
) -> Result<(BTreeSet<NodeId>, SliceStats), GraphError> {
    let start = exit_node(exit).ok_or_else(|| GraphError::UnknownExit {
        point: exit.id.to_string(),
    })?;
    if !graph.contains(&start) {
        return Err(GraphError::UnknownExit {
            point: exit.id.to_string(),
        });
    }
    let run = slice_from(graph, start);
    Ok((run.slice, run.stats))
}

/// A slice-witnessed connection from an entry point to an exit point of the
/// same component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntraFlow {
    pub from: PointId,
    pub to: PointId,
    /// One shortest dependence path, entry-side node first, exit statement
    /// last.
    pub witness: Vec<String>,
}

/// The nodes that define an entry point's carried variables.
///
/// For a lifecycle entry these are the method's parameter slots plus the
/// incoming-IPC statements of the method (located through their own entry
/// points). For statement entries it is the statement itself.
fn defining_nodes(entry: &IpcPoint, all_entries: &[&IpcPoint], component: &Component) -> Vec<NodeId> {
    match entry.origin {
        PointOrigin::Lifecycle => {
            let mut nodes = Vec::new();
            if let Some(m) = component.method(&entry.method) {
                for slot in 0..m.params.len() {
                    nodes.push(NodeId::Param {
                        method: entry.method.clone(),
                        slot,
                    });
                }
            }
            for other in all_entries {
                if other.origin == PointOrigin::IpcInApi && other.method == entry.method {
                    if let Some(index) = other.index {
                        nodes.push(NodeId::Stmt {
                            method: other.method.clone(),
                            index,
                        });
                    }
                }
            }
            nodes
        }
        PointOrigin::SourceApi | PointOrigin::IpcInApi => entry
            .index
            .map(|index| NodeId::Stmt {
                method: entry.method.clone(),
                index,
            })
            .into_iter()
            .collect(),
        PointOrigin::IpcOutApi | PointOrigin::SinkApi => Vec::new(),
    }
}

/// Compute all intra-component flows of one component.
///
/// For every (entry, exit) pair where the exit's backward slice contains a
/// node defining an entry-carried variable, one flow is produced with a
/// BFS-shortest witness (ties broken towards parameter slots, then smallest
/// statement index). Output is sorted by (from, to).
pub fn intra_component_flows(
    component: &Component,
    entries: &[&IpcPoint],
    exits: &[&IpcPoint],
) -> Vec<IntraFlow> {
    let graph = build_dependence(component);
    let mut flows = Vec::new();

    for exit in exits {
        let Some(start) = exit_node(exit) else { continue };
        if !graph.contains(&start) {
            continue;
        }
        let run = slice_from(&graph, start.clone());

        for entry in entries {
            let candidates = defining_nodes(entry, entries, component);
            let hit = candidates
                .into_iter()
                .filter(|n| run.slice.contains(n))
                .min_by_key(|n| (run.depth[n], n.clone()));
            let Some(hit) = hit else { continue };

            // Walk parent pointers from the defining node back to the exit.
            let mut witness = Vec::new();
            let mut cursor = hit;
            loop {
                witness.push(cursor.to_string());
                match run.parents.get(&cursor) {
                    Some(parent) => cursor = parent.clone(),
                    None => break,
                }
            }
            flows.push(IntraFlow {
                from: entry.id.clone(),
                to: exit.id.clone(),
                witness,
            });
        }
    }

    flows.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    flows
}

/// Component-level flows as exchanged between the slicing and graph phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub flows: Vec<FlowRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// "app/Component" the flow belongs to.
    pub component: String,
    pub from: PointId,
    pub to: PointId,
    pub witness: Vec<String>,
}

impl FlowDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("flow serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<FlowDocument, serde_json::Error> {
        serde_json::from_str(text)
    }
}
