//! Classification tables for framework API names.
//!
//! The catalog maps opaque API names to one of five classes: data sources
//! (with a criticality), data sinks (with an attack complexity), outgoing IPC
//! calls (with a resolution mode), incoming IPC calls, and everything else
//! (neutral). Names absent from the catalog are neutral. Catalogs are plain
//! JSON documents so deployments can extend the shipped tables without
//! touching code.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::CatalogError;
use crate::model::ComponentKind;

/// Impact level attached to a data source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Low,
    Medium,
    High,
}

/// Effort an attacker needs to abuse a data sink. Harder attacks are less
/// probable, so this scale inverts into the risk probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackComplexity {
    Medium,
    High,
    VeryHigh,
}

/// How the target of an outgoing IPC call is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionMode {
    /// The call names a single component directly ("app/Component").
    Explicit,
    /// The call carries an action string matched against intent filters.
    ImplicitAction,
    /// Action string delivered to every matching broadcast receiver.
    Broadcast,
}

/// Classification of one API name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiClass {
    Source(Criticality),
    Sink(AttackComplexity),
    IpcOut(ResolutionMode),
    IpcIn,
    Neutral,
}

/// The loaded classification tables plus the lifecycle entry methods per
/// component kind. Immutable after load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCatalog {
    entries: BTreeMap<String, CatalogEntry>,
    lifecycle_entries: BTreeMap<ComponentKind, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CatalogEntry {
    class: ApiClass,
    label: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogDoc {
    apis: Vec<ApiDoc>,
    #[serde(default)]
    lifecycle: BTreeMap<ComponentKind, BTreeSet<String>>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ApiDoc {
    name: String,
    class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resolution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// The tables shipped with the tool, embedded as data.
pub const DEFAULT_CATALOG_JSON: &str = include_str!("../assets/default_catalog.json");

/// Parse a catalog document.
pub fn load_catalog(text: &str) -> Result<ApiCatalog, CatalogError> {
    let doc: CatalogDoc = serde_json::from_str(text).map_err(|e| CatalogError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut entries = BTreeMap::new();
    for api in doc.apis {
        let class = parse_class(&api)?;
        let entry = CatalogEntry {
            class,
            label: api.label,
        };
        if entries.insert(api.name.clone(), entry).is_some() {
            return Err(CatalogError::DuplicateApi { name: api.name });
        }
    }

    Ok(ApiCatalog {
        entries,
        lifecycle_entries: doc.lifecycle,
    })
}

fn parse_class(api: &ApiDoc) -> Result<ApiClass, CatalogError> {
    let missing = |field: &str| CatalogError::MissingField {
        name: api.name.clone(),
        class: api.class.clone(),
        field: field.to_string(),
    };
    match api.class.as_str() {
        "source" => {
            let level = api.level.as_deref().ok_or_else(|| missing("level"))?;
            let criticality = match level {
                "low" => Criticality::Low,
                "medium" => Criticality::Medium,
                "high" => Criticality::High,
                other => {
                    return Err(CatalogError::UnknownLevel {
                        name: api.name.clone(),
                        level: other.to_string(),
                    })
                }
            };
            Ok(ApiClass::Source(criticality))
        }
        "sink" => {
            let level = api.level.as_deref().ok_or_else(|| missing("level"))?;
            let complexity = match level {
                "medium" => AttackComplexity::Medium,
                "high" => AttackComplexity::High,
                "very_high" => AttackComplexity::VeryHigh,
                other => {
                    return Err(CatalogError::UnknownLevel {
                        name: api.name.clone(),
                        level: other.to_string(),
                    })
                }
            };
            Ok(ApiClass::Sink(complexity))
        }
        "ipc_out" => {
            let resolution = api
                .resolution
                .as_deref()
                .ok_or_else(|| missing("resolution"))?;
            let mode = match resolution {
                "explicit" => ResolutionMode::Explicit,
                "implicit_action" => ResolutionMode::ImplicitAction,
                "broadcast" => ResolutionMode::Broadcast,
                other => {
                    return Err(CatalogError::UnknownLevel {
                        name: api.name.clone(),
                        level: other.to_string(),
                    })
                }
            };
            Ok(ApiClass::IpcOut(mode))
        }
        "ipc_in" => Ok(ApiClass::IpcIn),
        other => Err(CatalogError::UnknownClass {
            name: api.name.clone(),
            class: other.to_string(),
        }),
    }
}

impl ApiCatalog {
    /// The shipped default tables.
    pub fn default_catalog() -> ApiCatalog {
        load_catalog(DEFAULT_CATALOG_JSON).expect("builtin catalog is well formed")
    }

    /// Classify an API name. Total: names absent from the tables are neutral.
    pub fn classify(&self, name: &str) -> ApiClass {
        self.entries
            .get(name)
            .map(|e| e.class)
            .unwrap_or(ApiClass::Neutral)
    }

    /// Human-readable label for an API name, falling back to the name itself.
    pub fn label(&self, name: &str) -> &str {
        self.entries
            .get(name)
            .and_then(|e| e.label.as_deref())
            .unwrap_or(name)
    }

    /// Lifecycle entry method names for a component kind.
    pub fn lifecycle_methods(&self, kind: ComponentKind) -> impl Iterator<Item = &str> {
        self.lifecycle_entries
            .get(&kind)
            .into_iter()
            .flat_map(|set| set.iter().map(|s| s.as_str()))
    }

    /// True if `method` is a lifecycle entry for components of `kind`.
    pub fn is_lifecycle(&self, kind: ComponentKind, method: &str) -> bool {
        self.lifecycle_entries
            .get(&kind)
            .is_some_and(|set| set.contains(method))
    }

    /// Number of classified API names.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stable digest of the catalog content, recorded in reports so consumers
    /// can tell which tables produced a result.
    pub fn digest(&self) -> String {
        // FNV-1a over a canonical rendering; good enough for change detection.
        let mut canonical = String::new();
        for (name, entry) in &self.entries {
            canonical.push_str(name);
            canonical.push('=');
            canonical.push_str(&format!("{:?}", entry.class));
            if let Some(label) = &entry.label {
                canonical.push('/');
                canonical.push_str(label);
            }
            canonical.push(';');
        }
        for (kind, methods) in &self.lifecycle_entries {
            canonical.push_str(&format!("{:?}:", kind));
            for m in methods {
                canonical.push_str(m);
                canonical.push(',');
            }
            canonical.push(';');
        }
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canonical.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        format!("fnv1a64:{hash:016x}")
    }

    /// Add or replace a single entry. Exposed for catalog extension tests and
    /// programmatic catalog construction.
    pub fn insert(&mut self, name: &str, class: ApiClass, label: Option<&str>) {
        self.entries.insert(
            name.to_string(),
            CatalogEntry {
                class,
                label: label.map(|l| l.to_string()),
            },
        );
    }
}
