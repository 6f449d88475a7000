//! Brute-force oracles kept independent of the production analysis paths.
//!
//! The slicing oracle re-derives the dependence relation with its own scan
//! and computes reachability as a reflexive-transitive closure by repeated
//! boolean matrix multiplication. The graph oracle enumerates reachable
//! pairs with a plain recursive walk. Test-only: compiled for this crate's
//! tests and for downstream suites that enable the `testkit` feature.

use std::collections::{BTreeMap, HashMap};

use crate::model::{Component, Statement};
use crate::scan::{IpcPoint, PointOrigin};
use crate::slicer::NodeId;

/// Reflexive-transitive dependence closure of one component.
pub struct DependenceClosure {
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    reach: Vec<Vec<bool>>,
}

impl DependenceClosure {
    pub fn compute(component: &Component) -> DependenceClosure {
        let (nodes, edges) = brute_force_edges(component);
        let index: BTreeMap<NodeId, usize> =
            nodes.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let n = nodes.len();

        // Seed with the edge relation plus the identity.
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for (from, to) in &edges {
            reach[index[from]][index[to]] = true;
        }

        // Square until fixpoint.
        loop {
            let mut next = reach.clone();
            for i in 0..n {
                for k in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            if reach[k][j] {
                                next[i][j] = true;
                            }
                        }
                    }
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }

        DependenceClosure { nodes, index, reach }
    }

    pub fn reaches(&self, from: &NodeId, to: &NodeId) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&i), Some(&j)) => self.reach[i][j],
            _ => false,
        }
    }

    /// Every node backward-reachable from `from`, itself included.
    pub fn slice_of(&self, from: &NodeId) -> Vec<NodeId> {
        let Some(&i) = self.index.get(from) else {
            return Vec::new();
        };
        self.nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| self.reach[i][*j])
            .map(|(_, n)| n.clone())
            .collect()
    }
}

/// Independent re-derivation of the per-component dependence edges.
fn brute_force_edges(component: &Component) -> (Vec<NodeId>, Vec<(NodeId, NodeId)>) {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();

    // Resolve a use at (method, index) to the most recent definition at an
    // earlier or the same statement index, scanning backwards.
    let resolve = |method: &crate::model::Method, upto: usize, var: &str| -> Option<NodeId> {
        for i in (0..=upto).rev() {
            if method.body[i].def() == Some(var) {
                return Some(NodeId::Stmt {
                    method: method.name.clone(),
                    index: i,
                });
            }
        }
        method.params.iter().position(|p| p == var).map(|slot| NodeId::Param {
            method: method.name.clone(),
            slot,
        })
    };

    for method in &component.methods {
        for slot in 0..method.params.len() {
            nodes.push(NodeId::Param {
                method: method.name.clone(),
                slot,
            });
        }
        for (index, statement) in method.body.iter().enumerate() {
            let node = NodeId::Stmt {
                method: method.name.clone(),
                index,
            };
            nodes.push(node.clone());
            match statement {
                Statement::Const { .. } => {}
                Statement::Assign { uses, .. } => {
                    for used in uses {
                        if let Some(def) = resolve(method, index, used) {
                            edges.push((node.clone(), def));
                        }
                    }
                }
                Statement::Api { args, .. } => {
                    for used in args {
                        if let Some(def) = resolve(method, index, used) {
                            edges.push((node.clone(), def));
                        }
                    }
                }
                Statement::Call { def, callee, args } => {
                    for (slot, argument) in args.iter().enumerate() {
                        let param = NodeId::Param {
                            method: callee.clone(),
                            slot,
                        };
                        let has_slot = component
                            .method(callee)
                            .is_some_and(|m| slot < m.params.len());
                        if has_slot {
                            if let Some(argument_def) = resolve(method, index, argument) {
                                edges.push((param, argument_def));
                            }
                        }
                    }
                    if def.is_some() {
                        if let Some(callee_method) = component.method(callee) {
                            let ret = callee_method
                                .body
                                .iter()
                                .enumerate()
                                .rev()
                                .find(|(_, s)| s.def().is_some())
                                .map(|(i, _)| NodeId::Stmt {
                                    method: callee.clone(),
                                    index: i,
                                });
                            if let Some(ret) = ret {
                                edges.push((node.clone(), ret));
                            }
                        }
                    }
                }
            }
        }
    }

    edges.sort();
    edges.dedup();
    (nodes, edges)
}

/// The nodes that define an entry point's carried variables, re-derived.
fn entry_defining_nodes(
    entry: &IpcPoint,
    all_entries: &[&IpcPoint],
    component: &Component,
) -> Vec<NodeId> {
    let mut nodes = Vec::new();
    match entry.origin {
        PointOrigin::Lifecycle => {
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
        }
        PointOrigin::SourceApi | PointOrigin::IpcInApi => {
            if let Some(index) = entry.index {
                nodes.push(NodeId::Stmt {
                    method: entry.method.clone(),
                    index,
                });
            }
        }
        _ => {}
    }
    nodes
}

/// The (entry, exit) flow pairs of one component according to the closure
/// oracle, sorted like the production output.
pub fn oracle_intra_flows(
    component: &Component,
    entries: &[&IpcPoint],
    exits: &[&IpcPoint],
) -> Vec<(String, String)> {
    let closure = DependenceClosure::compute(component);
    let mut flows = Vec::new();
    for exit in exits {
        let Some(index) = exit.index else { continue };
        let exit_node = NodeId::Stmt {
            method: exit.method.clone(),
            index,
        };
        for entry in entries {
            let defining = entry_defining_nodes(entry, entries, component);
            if defining.iter().any(|d| closure.reaches(&exit_node, d)) {
                flows.push((entry.id.0.clone(), exit.id.0.clone()));
            }
        }
    }
    flows.sort();
    flows
}

/// Plain recursive reachability over an explicit edge list.
pub fn reachable_pairs<N: Clone + Eq + std::hash::Hash + Ord>(
    edges: &[(N, N)],
    starts: &[N],
    targets: &[N],
) -> Vec<(N, N)> {
    let mut adjacency: HashMap<&N, Vec<&N>> = HashMap::new();
    for (from, to) in edges {
        adjacency.entry(from).or_default().push(to);
    }

    fn walk<'a, N: Eq + std::hash::Hash>(
        node: &'a N,
        adjacency: &HashMap<&'a N, Vec<&'a N>>,
        seen: &mut std::collections::HashSet<&'a N>,
    ) {
        if !seen.insert(node) {
            return;
        }
        if let Some(nexts) = adjacency.get(node) {
            for next in nexts {
                walk(next, adjacency, seen);
            }
        }
    }

    let mut pairs = Vec::new();
    for start in starts {
        let mut seen = std::collections::HashSet::new();
        walk(start, &adjacency, &mut seen);
        for target in targets {
            if seen.contains(target) {
                pairs.push((start.clone(), target.clone()));
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    pairs
}
