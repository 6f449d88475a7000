//! Canned demo ecosystems used for testing and demonstration.
//!
//! Four topologies are available:
//!
//! * `a` — a single app that reads a high-criticality source and sends the
//!   data to a sink itself.
//! * `b` — the read and the send split across two apps linked by IPC, so
//!   neither app alone shows the suspicious permission combination.
//! * `c` — a malicious reader abusing a forwarder app whose receiving
//!   component enforces no permission.
//! * `case_study` — a two-app public-transport pair: a location service app
//!   feeds the current position to a routing app that loads a result page,
//!   crossing the app boundary on the way to the network.

use std::collections::BTreeSet;

use crate::model::{AppBundle, Component, ComponentKind, Method, Statement};

/// The available demo topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    A,
    B,
    C,
    CaseStudy,
}

impl ScenarioKind {
    pub fn parse(name: &str) -> Option<ScenarioKind> {
        match name {
            "a" => Some(ScenarioKind::A),
            "b" => Some(ScenarioKind::B),
            "c" => Some(ScenarioKind::C),
            "case_study" => Some(ScenarioKind::CaseStudy),
            _ => None,
        }
    }
}

fn perms(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn konst(def: &str) -> Statement {
    Statement::Const { def: def.to_string() }
}

fn assign(def: &str, uses: &[&str]) -> Statement {
    Statement::Assign {
        def: def.to_string(),
        uses: uses.iter().map(|s| s.to_string()).collect(),
    }
}

fn call(def: Option<&str>, callee: &str, args: &[&str]) -> Statement {
    Statement::Call {
        def: def.map(|s| s.to_string()),
        callee: callee.to_string(),
        args: args.iter().map(|s| s.to_string()).collect(),
    }
}

fn api(def: Option<&str>, name: &str, args: &[&str], target: Option<&str>) -> Statement {
    Statement::Api {
        def: def.map(|s| s.to_string()),
        name: name.to_string(),
        args: args.iter().map(|s| s.to_string()).collect(),
        target: target.map(|s| s.to_string()),
    }
}

fn method(name: &str, params: &[&str], body: Vec<Statement>) -> Method {
    Method {
        name: name.to_string(),
        params: params.iter().map(|s| s.to_string()).collect(),
        body,
    }
}

/// Produce the bundles of one scenario.
pub fn generate(kind: ScenarioKind) -> Vec<AppBundle> {
    match kind {
        ScenarioKind::A => scenario_a(),
        ScenarioKind::B => scenario_b(),
        ScenarioKind::C => scenario_c(),
        ScenarioKind::CaseStudy => case_study(),
    }
}

/// Single app: reads contacts, posts them to the network.
fn scenario_a() -> Vec<AppBundle> {
    vec![AppBundle {
        app_id: "glowtorch".to_string(),
        granted_permissions: perms(&["READ_CONTACTS", "INTERNET"]),
        shared_user_id: None,
        components: vec![Component {
            name: "MainActivity".to_string(),
            kind: ComponentKind::Activity,
            exported: true,
            required_permission: None,
            intent_filters: Vec::new(),
            methods: vec![method(
                "onCreate",
                &["ctx"],
                vec![
                    api(Some("contacts"), "ContentProvider.read", &[], None),
                    assign("payload", &["contacts"]),
                    api(None, "WebView.loadUrl", &["payload"], None),
                ],
            )],
        }],
    }]
}

/// Reader app collects messages, hands them to a second app that has the
/// network permission and forwards them.
fn scenario_b() -> Vec<AppBundle> {
    let reader = AppBundle {
        app_id: "notekeeper".to_string(),
        granted_permissions: perms(&["READ_SMS"]),
        shared_user_id: None,
        components: vec![Component {
            name: "Collector".to_string(),
            kind: ComponentKind::Activity,
            exported: true,
            required_permission: None,
            intent_filters: Vec::new(),
            methods: vec![method(
                "onCreate",
                &["ctx"],
                vec![
                    api(Some("msgs"), "SMS.receive", &[], None),
                    api(None, "startService", &["msgs"], Some("SYNC_UPLOAD")),
                ],
            )],
        }],
    };
    let sender = AppBundle {
        app_id: "syncbridge".to_string(),
        granted_permissions: perms(&["INTERNET"]),
        shared_user_id: None,
        components: vec![Component {
            name: "UploadService".to_string(),
            kind: ComponentKind::Service,
            exported: true,
            required_permission: None,
            intent_filters: vec!["SYNC_UPLOAD".to_string()],
            methods: vec![method(
                "onStartCommand",
                &["intent"],
                vec![
                    assign("body", &["intent"]),
                    api(None, "WebView.loadUrl", &["body"], None),
                ],
            )],
        }],
    };
    vec![reader, sender]
}

/// Malicious reader broadcasting stolen data at a forwarder whose receiver
/// requires no permission at all.
fn scenario_c() -> Vec<AppBundle> {
    let reader = AppBundle {
        app_id: "tapjack".to_string(),
        granted_permissions: perms(&["READ_CONTACTS"]),
        shared_user_id: None,
        components: vec![Component {
            name: "Skimmer".to_string(),
            kind: ComponentKind::Activity,
            exported: true,
            required_permission: None,
            intent_filters: Vec::new(),
            methods: vec![method(
                "onCreate",
                &["ctx"],
                vec![
                    api(Some("cts"), "ContentProvider.read", &[], None),
                    api(None, "sendBroadcast", &["cts"], Some("SHARE_UPLOAD")),
                ],
            )],
        }],
    };
    let forwarder = AppBundle {
        app_id: "shareproxy".to_string(),
        granted_permissions: perms(&["INTERNET"]),
        shared_user_id: None,
        components: vec![Component {
            name: "UploadReceiver".to_string(),
            kind: ComponentKind::BroadcastReceiver,
            exported: true,
            required_permission: None,
            intent_filters: vec!["SHARE_UPLOAD".to_string()],
            methods: vec![method(
                "onReceive",
                &["intent"],
                vec![
                    assign("data", &["intent"]),
                    api(None, "WebView.loadUrl", &["data"], None),
                ],
            )],
        }],
    };
    vec![reader, forwarder]
}

/// Two-app public-transport pair: PubTransLocation serves the device position
/// over a bound-service callback; PubTrans builds a routing query from it and
/// loads the result page in a web view.
fn case_study() -> Vec<AppBundle> {
    let location_app = AppBundle {
        app_id: "PubTransLocation".to_string(),
        granted_permissions: perms(&["ACCESS_FINE_LOCATION"]),
        shared_user_id: None,
        components: vec![Component {
            name: "LocationService".to_string(),
            kind: ComponentKind::Service,
            exported: true,
            required_permission: None,
            intent_filters: vec!["GET_LOCATION".to_string()],
            methods: vec![method(
                "onBind",
                &["intent"],
                vec![
                    api(Some("loc"), "LocationManager.getLastKnownLocation", &[], None),
                    api(None, "Callback.send", &["loc"], Some("PubTrans/MainActivity")),
                ],
            )],
        }],
    };

    let main_activity = Component {
        name: "MainActivity".to_string(),
        kind: ComponentKind::Activity,
        exported: true,
        required_permission: None,
        intent_filters: vec!["MAIN".to_string()],
        methods: vec![method(
            "onCreate",
            &["ctx"],
            vec![
                assign("conn", &["ctx"]),
                api(None, "bindService", &["conn"], Some("GET_LOCATION")),
                api(Some("loc"), "Callback.receive", &["conn"], None),
                assign("extras", &["loc"]),
                api(None, "startActivity", &["extras"], Some("PubTrans/ResultWebView")),
            ],
        )],
    };

    let result_web_view = Component {
        name: "ResultWebView".to_string(),
        kind: ComponentKind::Activity,
        exported: false,
        required_permission: None,
        intent_filters: Vec::new(),
        methods: vec![
            method(
                "onCreate",
                &["ctx"],
                vec![
                    api(Some("extras"), "getIntent", &["ctx"], None),
                    call(None, "loadResults", &["extras"]),
                ],
            ),
            method(
                "loadResults",
                &["extras"],
                vec![
                    api(Some("url"), "buildUrl", &["extras"], None),
                    api(None, "WebView.loadUrl", &["url"], None),
                ],
            ),
        ],
    };

    let transit_app = AppBundle {
        app_id: "PubTrans".to_string(),
        granted_permissions: perms(&["INTERNET"]),
        shared_user_id: None,
        components: vec![main_activity, result_web_view],
    };

    vec![location_app, transit_app]
}
