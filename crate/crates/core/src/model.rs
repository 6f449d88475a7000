//! Ecosystem data model: apps, manifests, components, methods, statements.
//!
//! Bundles are read from a strict JSON format (unknown keys are rejected).
//! Method bodies are straight-line three-address statements: constants,
//! assignments, calls to methods of the same component, and framework API
//! calls. There is no control flow; data dependence is order-respecting
//! transitive use. Variables are unaliased scalars. All model objects are
//! immutable after parsing and safe to share across analysis workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// The four component kinds an app can declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Activity,
    Service,
    ContentProvider,
    BroadcastReceiver,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ComponentKind::Activity => "Activity",
            ComponentKind::Service => "Service",
            ComponentKind::ContentProvider => "ContentProvider",
            ComponentKind::BroadcastReceiver => "BroadcastReceiver",
        };
        f.write_str(s)
    }
}

/// One application: manifest data plus per-component method bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppBundle {
    pub app_id: String,
    pub granted_permissions: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_user_id: Option<String>,
    pub components: Vec<Component>,
}

/// A unit of an application, reachable through lifecycle entry methods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
    pub exported: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_permission: Option<String>,
    #[serde(default)]
    pub intent_filters: Vec<String>,
    #[serde(default)]
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub name: String,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub body: Vec<Statement>,
}

/// A straight-line statement. The statement's index is its position in the
/// method body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statement {
    Const {
        def: String,
    },
    Assign {
        def: String,
        uses: Vec<String>,
    },
    Call {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        def: Option<String>,
        callee: String,
        args: Vec<String>,
    },
    Api {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        def: Option<String>,
        name: String,
        args: Vec<String>,
        /// Literal routing target of an IPC call: "app/Component" for explicit
        /// calls, an action string for implicit ones, a URI for provider
        /// access. Ignored for non-IPC apis.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
}

impl Statement {
    /// The variable this statement defines, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            Statement::Const { def } => Some(def),
            Statement::Assign { def, .. } => Some(def),
            Statement::Call { def, .. } => def.as_deref(),
            Statement::Api { def, .. } => def.as_deref(),
        }
    }

    /// The variables this statement reads.
    pub fn uses(&self) -> &[String] {
        match self {
            Statement::Const { .. } => &[],
            Statement::Assign { uses, .. } => uses,
            Statement::Call { args, .. } => args,
            Statement::Api { args, .. } => args,
        }
    }

    pub fn api_name(&self) -> Option<&str> {
        match self {
            Statement::Api { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Statement::Api { target, .. } => target.as_deref(),
            _ => None,
        }
    }
}

impl Component {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }
}

impl AppBundle {
    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }
}

/// Parse one bundle document. Rejects malformed JSON, unknown keys, duplicate
/// component names, and calls to methods the component does not define.
pub fn parse_bundle(text: &str) -> Result<AppBundle, ParseError> {
    let bundle: AppBundle = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut seen = BTreeSet::new();
    for component in &bundle.components {
        if !seen.insert(component.name.as_str()) {
            return Err(ParseError::DuplicateComponent {
                app: bundle.app_id.clone(),
                name: component.name.clone(),
            });
        }
        let method_names: BTreeSet<&str> =
            component.methods.iter().map(|m| m.name.as_str()).collect();
        for method in &component.methods {
            for statement in &method.body {
                if let Statement::Call { callee, .. } = statement {
                    if !method_names.contains(callee.as_str()) {
                        return Err(ParseError::UnknownCallee {
                            component: component.name.clone(),
                            method: method.name.clone(),
                            callee: callee.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(bundle)
}

/// Render a bundle back to its document form.
pub fn serialize_bundle(bundle: &AppBundle) -> String {
    let mut text = serde_json::to_string_pretty(bundle).expect("bundle serialization");
    text.push('\n');
    text
}

/// One invariant violation found by ecosystem validation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub app: String,
    pub component: Option<String>,
    pub method: Option<String>,
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    DuplicateAppId,
    DuplicateComponent,
    DuplicateMethod,
    EmptyFilterAction,
    FilterWithoutExport,
    DuplicateParam,
    UnresolvedUse,
    UnknownCallee,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] app `{}`", self.code, self.app)?;
        if let Some(c) = &self.component {
            write!(f, " component `{c}`")?;
        }
        if let Some(m) = &self.method {
            write!(f, " method `{m}`")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Check every model invariant over a set of bundles. Violations are report
/// entries, not failures; an empty report means the ecosystem is analyzable.
/// The result is sorted and independent of the input order.
pub fn validate_ecosystem(bundles: &[AppBundle]) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut id_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for bundle in bundles {
        *id_counts.entry(bundle.app_id.as_str()).or_default() += 1;
    }
    for (id, count) in id_counts {
        if count > 1 {
            violations.push(Violation {
                app: id.to_string(),
                component: None,
                method: None,
                code: ViolationCode::DuplicateAppId,
                detail: format!("app id declared by {count} bundles"),
            });
        }
    }

    for bundle in bundles {
        let mut comp_names = BTreeSet::new();
        for component in &bundle.components {
            if !comp_names.insert(component.name.as_str()) {
                violations.push(Violation {
                    app: bundle.app_id.clone(),
                    component: Some(component.name.clone()),
                    method: None,
                    code: ViolationCode::DuplicateComponent,
                    detail: "component name declared twice".to_string(),
                });
            }
            validate_component(bundle, component, &mut violations);
        }
    }

    violations.sort();
    violations.dedup();
    violations
}

fn validate_component(bundle: &AppBundle, component: &Component, out: &mut Vec<Violation>) {
    let at = |method: Option<&Method>, code, detail: String| Violation {
        app: bundle.app_id.clone(),
        component: Some(component.name.clone()),
        method: method.map(|m| m.name.clone()),
        code,
        detail,
    };

    for action in &component.intent_filters {
        if action.is_empty() {
            out.push(at(
                None,
                ViolationCode::EmptyFilterAction,
                "intent filter action is empty".to_string(),
            ));
        }
    }
    if !component.intent_filters.is_empty() && !component.exported {
        out.push(at(
            None,
            ViolationCode::FilterWithoutExport,
            "component declares intent filters but is not exported".to_string(),
        ));
    }

    let mut method_names = BTreeSet::new();
    for method in &component.methods {
        if !method_names.insert(method.name.as_str()) {
            out.push(at(
                Some(method),
                ViolationCode::DuplicateMethod,
                "method name declared twice".to_string(),
            ));
        }
    }

    for method in &component.methods {
        let mut defined: BTreeSet<&str> = BTreeSet::new();
        let mut params = BTreeSet::new();
        for param in &method.params {
            if !params.insert(param.as_str()) {
                out.push(at(
                    Some(method),
                    ViolationCode::DuplicateParam,
                    format!("parameter `{param}` declared twice"),
                ));
            }
            defined.insert(param.as_str());
        }
        for statement in &method.body {
            // A use may resolve to a definition at an earlier or the same
            // index, so record this statement's def before checking its uses.
            if let Some(def) = statement.def() {
                defined.insert(def);
            }
            for used in statement.uses() {
                if !defined.contains(used.as_str()) {
                    out.push(at(
                        Some(method),
                        ViolationCode::UnresolvedUse,
                        format!("variable `{used}` used before any definition"),
                    ));
                }
            }
            if let Statement::Call { callee, .. } = statement {
                if component.method(callee).is_none() {
                    out.push(at(
                        Some(method),
                        ViolationCode::UnknownCallee,
                        format!("call to unknown method `{callee}`"),
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn activity(name: &str) -> Component {
        Component {
            name: name.to_string(),
            kind: ComponentKind::Activity,
            exported: true,
            required_permission: None,
            intent_filters: Vec::new(),
            methods: Vec::new(),
        }
    }

    #[test]
    fn parses_minimal_document() {
        let doc = r#"{
            "app_id": "solo",
            "granted_permissions": [],
            "components": [
                {"name": "Main", "kind": "Activity", "exported": true,
                 "intent_filters": [], "methods": []}
            ]
        }"#;
        let bundle = parse_bundle(doc).unwrap();
        assert_eq!(bundle.components.len(), 1);
        assert_eq!(bundle.components[0].methods.len(), 0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let doc = r#"{
            "app_id": "solo",
            "granted_permissions": [],
            "components": [],
            "extra": true
        }"#;
        match parse_bundle(doc) {
            Err(e @ ParseError::Syntax { .. }) => assert_eq!(e.code(), "syntax"),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_bundle("{\n  \"app_id\": }") {
            Err(ParseError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_callee() {
        let doc = r#"{
            "app_id": "a",
            "granted_permissions": [],
            "components": [
                {"name": "C", "kind": "Service", "exported": false,
                 "intent_filters": [],
                 "methods": [
                    {"name": "onBind", "params": ["x"],
                     "body": [{"call": {"callee": "missing", "args": ["x"]}}]}
                 ]}
            ]
        }"#;
        match parse_bundle(doc) {
            Err(e @ ParseError::UnknownCallee { .. }) => {
                assert_eq!(e.code(), "unknown-callee");
            }
            other => panic!("expected unknown callee, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_component() {
        let doc = r#"{
            "app_id": "a",
            "granted_permissions": [],
            "components": [
                {"name": "C", "kind": "Activity", "exported": true, "intent_filters": [], "methods": []},
                {"name": "C", "kind": "Service", "exported": true, "intent_filters": [], "methods": []}
            ]
        }"#;
        match parse_bundle(doc) {
            Err(e @ ParseError::DuplicateComponent { .. }) => {
                assert_eq!(e.code(), "duplicate-component");
            }
            other => panic!("expected duplicate component, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_app_id_is_one_violation() {
        let a = AppBundle {
            app_id: "same".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![activity("X")],
        };
        let b = a.clone();
        let violations = validate_ecosystem(&[a, b]);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].code, ViolationCode::DuplicateAppId);
    }

    #[test]
    fn filter_without_export_is_flagged() {
        let mut comp = activity("X");
        comp.exported = false;
        comp.intent_filters = vec!["ACTION".to_string()];
        let bundle = AppBundle {
            app_id: "a".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![comp],
        };
        let violations = validate_ecosystem(&[bundle]);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].code, ViolationCode::FilterWithoutExport);
    }

    #[test]
    fn use_before_definition_is_flagged() {
        let comp = Component {
            methods: vec![Method {
                name: "m".to_string(),
                params: vec![],
                body: vec![Statement::Assign {
                    def: "x".to_string(),
                    uses: vec!["ghost".to_string()],
                }],
            }],
            ..activity("X")
        };
        let bundle = AppBundle {
            app_id: "a".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![comp],
        };
        let violations = validate_ecosystem(&[bundle]);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].code, ViolationCode::UnresolvedUse);
    }

    #[test]
    fn self_use_at_same_index_is_accepted() {
        let comp = Component {
            methods: vec![Method {
                name: "m".to_string(),
                params: vec![],
                body: vec![Statement::Assign {
                    def: "x".to_string(),
                    uses: vec!["x".to_string()],
                }],
            }],
            ..activity("X")
        };
        let bundle = AppBundle {
            app_id: "a".to_string(),
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components: vec![comp],
        };
        assert!(validate_ecosystem(&[bundle]).is_empty());
    }

    #[test]
    fn statement_round_trips_through_documented_encoding() {
        let json = r#"{"api":{"def":"x","name":"WebView.loadUrl","args":["u"],"target":"app2/ResultWebView"}}"#;
        let statement: Statement = serde_json::from_str(json).unwrap();
        assert_eq!(statement.api_name(), Some("WebView.loadUrl"));
        assert_eq!(statement.target(), Some("app2/ResultWebView"));
        let back = serde_json::to_string(&statement).unwrap();
        let again: Statement = serde_json::from_str(&back).unwrap();
        assert_eq!(statement, again);
    }
}
