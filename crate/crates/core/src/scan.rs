//! Architectural layer: component identification and IPC point discovery.
//!
//! The scan walks every component, classifies each API call site against the
//! catalog, and records where data can enter or leave the component. The
//! result is written to a JSON exchange document that the slicing layer
//! consumes, so the two layers stay decoupled. Per-component scans are
//! independent; results are merged in deterministic component order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{ApiCatalog, ApiClass};
use crate::model::{AppBundle, Component, ComponentKind, Statement};

/// Whether a point lets data into or out of its component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointRole {
    Entry,
    Exit,
}

/// What produced the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointOrigin {
    /// A lifecycle entry method; carries the method parameters plus the
    /// definitions of incoming-IPC api calls inside the method.
    Lifecycle,
    /// An incoming-IPC api call site.
    IpcInApi,
    /// A data-source api call site.
    SourceApi,
    /// An outgoing-IPC api call site.
    IpcOutApi,
    /// A data-sink api call site.
    SinkApi,
}

/// Stable identifier of a point: `app/component/method:role` for lifecycle
/// points, `app/component/method#index:role` for statement-anchored ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub String);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PointId {
    pub(crate) fn lifecycle(app: &str, component: &str, method: &str) -> PointId {
        PointId(format!("{app}/{component}/{method}:entry"))
    }

    pub(crate) fn statement(app: &str, component: &str, method: &str, index: usize, role: PointRole) -> PointId {
        let role = match role {
            PointRole::Entry => "entry",
            PointRole::Exit => "exit",
        };
        PointId(format!("{app}/{component}/{method}#{index}:{role}"))
    }
}

/// An entry or exit point of a component; the anchor of all flow edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpcPoint {
    pub id: PointId,
    pub role: PointRole,
    pub origin: PointOrigin,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    /// The variables carrying data across the point: definitions for entries,
    /// uses for exits.
    pub vars: Vec<String>,
}

/// Identity and manifest metadata of one component in the ecosystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInfo {
    pub app: String,
    pub name: String,
    pub kind: ComponentKind,
    pub exported: bool,
    pub required_permission: Option<String>,
    pub intent_filters: Vec<String>,
}

/// Index of all (app, component) pairs with their manifest metadata, plus
/// the manifests themselves for permission checks.
#[derive(Debug, Clone, Default)]
pub struct ComponentIndex {
    components: BTreeMap<(String, String), ComponentInfo>,
    manifests: BTreeMap<String, Manifest>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub granted_permissions: std::collections::BTreeSet<String>,
    pub shared_user_id: Option<String>,
}

impl ComponentIndex {
    pub fn components(&self) -> impl Iterator<Item = &ComponentInfo> {
        self.components.values()
    }

    pub fn get(&self, app: &str, component: &str) -> Option<&ComponentInfo> {
        self.components.get(&(app.to_string(), component.to_string()))
    }

    pub fn manifest(&self, app: &str) -> Option<&Manifest> {
        self.manifests.get(app)
    }

    pub fn app_ids(&self) -> impl Iterator<Item = &str> {
        self.manifests.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Build the component index for a validated ecosystem.
pub fn identify_components(bundles: &[AppBundle]) -> ComponentIndex {
    let mut index = ComponentIndex::default();
    for bundle in bundles {
        index.manifests.insert(
            bundle.app_id.clone(),
            Manifest {
                granted_permissions: bundle.granted_permissions.clone(),
                shared_user_id: bundle.shared_user_id.clone(),
            },
        );
        for component in &bundle.components {
            index.components.insert(
                (bundle.app_id.clone(), component.name.clone()),
                ComponentInfo {
                    app: bundle.app_id.clone(),
                    name: component.name.clone(),
                    kind: component.kind,
                    exported: component.exported,
                    required_permission: component.required_permission.clone(),
                    intent_filters: component.intent_filters.clone(),
                },
            );
        }
    }
    index
}

/// Find the entry and exit points of one component.
///
/// Entries: one per lifecycle method (carrying its parameters plus the defs
/// of incoming-IPC api statements in that method), one per source api call
/// site, one per incoming-IPC api call site. Exits: one per sink or
/// outgoing-IPC api call site. Ordered by (method, statement index), with a
/// method's lifecycle point before its statement points.
pub fn find_ipc_points(
    app: &str,
    component: &Component,
    catalog: &ApiCatalog,
) -> (Vec<IpcPoint>, Vec<IpcPoint>) {
    let mut entries = Vec::new();
    let mut exits = Vec::new();

    for method in &component.methods {
        if catalog.is_lifecycle(component.kind, &method.name) {
            let mut vars = method.params.clone();
            for statement in &method.body {
                if let Statement::Api { name, def: Some(def), .. } = statement {
                    if matches!(catalog.classify(name), ApiClass::IpcIn) {
                        vars.push(def.clone());
                    }
                }
            }
            entries.push(IpcPoint {
                id: PointId::lifecycle(app, &component.name, &method.name),
                role: PointRole::Entry,
                origin: PointOrigin::Lifecycle,
                method: method.name.clone(),
                index: None,
                api: None,
                vars,
            });
        }

        for (index, statement) in method.body.iter().enumerate() {
            let Statement::Api { name, def, args, .. } = statement else {
                continue;
            };
            match catalog.classify(name) {
                ApiClass::Source(_) => entries.push(IpcPoint {
                    id: PointId::statement(app, &component.name, &method.name, index, PointRole::Entry),
                    role: PointRole::Entry,
                    origin: PointOrigin::SourceApi,
                    method: method.name.clone(),
                    index: Some(index),
                    api: Some(name.clone()),
                    vars: def.iter().cloned().collect(),
                }),
                ApiClass::IpcIn => entries.push(IpcPoint {
                    id: PointId::statement(app, &component.name, &method.name, index, PointRole::Entry),
                    role: PointRole::Entry,
                    origin: PointOrigin::IpcInApi,
                    method: method.name.clone(),
                    index: Some(index),
                    api: Some(name.clone()),
                    vars: def.iter().cloned().collect(),
                }),
                ApiClass::Sink(_) => exits.push(IpcPoint {
                    id: PointId::statement(app, &component.name, &method.name, index, PointRole::Exit),
                    role: PointRole::Exit,
                    origin: PointOrigin::SinkApi,
                    method: method.name.clone(),
                    index: Some(index),
                    api: Some(name.clone()),
                    vars: args.clone(),
                }),
                ApiClass::IpcOut(_) => exits.push(IpcPoint {
                    id: PointId::statement(app, &component.name, &method.name, index, PointRole::Exit),
                    role: PointRole::Exit,
                    origin: PointOrigin::IpcOutApi,
                    method: method.name.clone(),
                    index: Some(index),
                    api: Some(name.clone()),
                    vars: args.clone(),
                }),
                ApiClass::Neutral => {}
            }
        }
    }

    let order = |p: &IpcPoint| (p.method.clone(), p.index.map_or(-1i64, |i| i as i64));
    entries.sort_by_key(order);
    exits.sort_by_key(order);
    (entries, exits)
}

/// The serialized hand-off between the architectural scan and the slicer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeDocument {
    pub components: Vec<ExchangeComponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeComponent {
    pub app: String,
    pub name: String,
    pub kind: ComponentKind,
    pub points: Vec<IpcPoint>,
}

impl ExchangeDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("exchange serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<ExchangeDocument, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Entry and exit points of one component, in scan order.
    pub fn points_of(&self, app: &str, name: &str) -> (Vec<&IpcPoint>, Vec<&IpcPoint>) {
        let mut entries = Vec::new();
        let mut exits = Vec::new();
        for component in &self.components {
            if component.app == app && component.name == name {
                for point in &component.points {
                    match point.role {
                        PointRole::Entry => entries.push(point),
                        PointRole::Exit => exits.push(point),
                    }
                }
            }
        }
        (entries, exits)
    }
}

/// Assemble the exchange document from the index and the per-component scan
/// results. Output is byte-identical across runs on identical input.
pub fn emit_exchange(
    index: &ComponentIndex,
    points: &BTreeMap<(String, String), (Vec<IpcPoint>, Vec<IpcPoint>)>,
) -> ExchangeDocument {
    let mut components = Vec::new();
    for info in index.components() {
        let key = (info.app.clone(), info.name.clone());
        let mut merged = Vec::new();
        if let Some((entries, exits)) = points.get(&key) {
            merged.extend(entries.iter().cloned());
            merged.extend(exits.iter().cloned());
        }
        merged.sort_by_key(|p| (p.method.clone(), p.index.map_or(-1i64, |i| i as i64), p.role));
        components.push(ExchangeComponent {
            app: info.app.clone(),
            name: info.name.clone(),
            kind: info.kind,
            points: merged,
        });
    }
    ExchangeDocument { components }
}

/// Scan a whole ecosystem: index plus per-component points.
pub fn scan_ecosystem(
    bundles: &[AppBundle],
    catalog: &ApiCatalog,
) -> (ComponentIndex, BTreeMap<(String, String), (Vec<IpcPoint>, Vec<IpcPoint>)>) {
    let index = identify_components(bundles);
    let mut points = BTreeMap::new();
    for bundle in bundles {
        for component in &bundle.components {
            points.insert(
                (bundle.app_id.clone(), component.name.clone()),
                find_ipc_points(&bundle.app_id, component, catalog),
            );
        }
    }
    (index, points)
}
