//! Deterministic synthetic bundles for property tests and load tests.
//!
//! Generation is seed-stable and prefix-stable: app `i` of an ecosystem
//! depends only on the base seed and `i`, so growing an ecosystem by one app
//! leaves the existing apps byte-identical. All generated bundles satisfy the
//! model invariants by construction.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use std::collections::BTreeSet;

use crate::model::{AppBundle, Component, ComponentKind, Method, Statement};

const SOURCES: &[&str] = &[
    "LocationManager.getLastKnownLocation",
    "ContentProvider.read",
    "SMS.receive",
    "DeviceId",
];
const SINKS: &[&str] = &[
    "WebView.loadUrl",
    "SMS.send",
    "ContentProvider.write",
    "Bluetooth.send",
];
const IPC_OUT: &[&str] = &["startActivity", "bindService", "sendBroadcast", "startService"];
const IPC_IN: &[&str] = &["Callback.receive"];
const NEUTRAL: &[&str] = &["util.trim", "util.concat", "Prefs.get"];
const ACTIONS: &[&str] = &["ACT_SYNC", "ACT_SHARE", "ACT_PING", "ACT_LOG"];
const PERMS: &[&str] = &["P_NET", "P_LOC", "P_SMS", "P_CTS"];

fn pick<'a>(rng: &mut StdRng, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

/// One random straight-line component with at most `max_statements`
/// statements spread over at most `max_methods` methods.
pub fn random_component(seed: u64, max_statements: usize, max_methods: usize) -> Component {
    let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let method_count = rng.random_range(1..=max_methods.max(1));

    // Fix names and arities first so call sites can reference any method.
    let mut names = Vec::new();
    let mut arities = Vec::new();
    for i in 0..method_count {
        let name = if i == 0 {
            if rng.random_bool(0.85) { "onCreate".to_string() } else { "warm".to_string() }
        } else {
            format!("m{i}")
        };
        names.push(name);
        arities.push(rng.random_range(0..=2usize));
    }

    let budget = rng.random_range(1..=max_statements.max(1));
    let mut remaining = budget;
    let mut fresh = 0usize;
    let mut methods = Vec::new();

    for (i, name) in names.iter().enumerate() {
        let params: Vec<String> = (0..arities[i]).map(|p| format!("{name}_a{p}")).collect();
        let share = if i + 1 == method_count {
            remaining
        } else {
            rng.random_range(0..=remaining)
        };
        remaining -= share;

        let mut available: Vec<String> = params.clone();
        let mut body = Vec::new();
        for _ in 0..share {
            body.push(random_statement(
                &mut rng,
                &mut available,
                &mut fresh,
                &names,
                &arities,
            ));
        }
        methods.push(Method {
            name: name.clone(),
            params,
            body,
        });
    }

    Component {
        name: "C".to_string(),
        kind: ComponentKind::Activity,
        exported: true,
        required_permission: None,
        intent_filters: Vec::new(),
        methods,
    }
}

fn random_statement(
    rng: &mut StdRng,
    available: &mut Vec<String>,
    fresh: &mut usize,
    method_names: &[String],
    arities: &[usize],
) -> Statement {
    let mut new_var = || {
        *fresh += 1;
        format!("v{fresh}")
    };
    let pick_var = |rng: &mut StdRng, vars: &[String]| -> Option<String> {
        if vars.is_empty() {
            None
        } else {
            Some(vars[rng.random_range(0..vars.len())].clone())
        }
    };

    match rng.random_range(0..100u32) {
        0..=19 => {
            let def = new_var();
            available.push(def.clone());
            Statement::Const { def }
        }
        20..=49 => {
            // Occasionally reuse the defined variable in its own uses to
            // exercise earlier-or-same-index resolution.
            let def = if rng.random_bool(0.15) && !available.is_empty() {
                available[rng.random_range(0..available.len())].clone()
            } else {
                let d = new_var();
                available.push(d.clone());
                d
            };
            let mut uses = Vec::new();
            let self_use = rng.random_bool(0.08);
            if self_use {
                uses.push(def.clone());
            }
            for _ in 0..rng.random_range(if self_use { 0..=1 } else { 1..=2 }) {
                if let Some(v) = pick_var(rng, available) {
                    uses.push(v);
                }
            }
            if uses.is_empty() {
                uses.push(def.clone());
            }
            Statement::Assign { def, uses }
        }
        50..=84 => {
            let (name, needs_def) = match rng.random_range(0..8u32) {
                0 | 1 => (pick(rng, SOURCES), true),
                2 | 3 => (pick(rng, SINKS), false),
                4 => (pick(rng, IPC_OUT), false),
                5 => (pick(rng, IPC_IN), true),
                _ => (pick(rng, NEUTRAL), rng.random_bool(0.7)),
            };
            let mut args = Vec::new();
            for _ in 0..rng.random_range(0..=2u32) {
                if let Some(v) = pick_var(rng, available) {
                    args.push(v);
                }
            }
            let def = if needs_def || rng.random_bool(0.3) {
                let d = new_var();
                available.push(d.clone());
                Some(d)
            } else {
                None
            };
            Statement::Api {
                def,
                name: name.to_string(),
                args,
                target: None,
            }
        }
        _ => {
            let callee_index = rng.random_range(0..method_names.len());
            let arity = arities[callee_index];
            let mut args = Vec::new();
            for _ in 0..arity {
                match pick_var(rng, available) {
                    Some(v) => args.push(v),
                    None => break,
                }
            }
            let def = if rng.random_bool(0.6) {
                let d = new_var();
                available.push(d.clone());
                Some(d)
            } else {
                None
            };
            Statement::Call {
                def,
                callee: method_names[callee_index].clone(),
                args,
            }
        }
    }
}

/// A random multi-app ecosystem with occasional cross-app IPC. Prefix-stable
/// in the number of apps.
pub fn random_ecosystem(seed: u64, apps: usize) -> Vec<AppBundle> {
    (0..apps).map(|i| random_app(seed, i)).collect()
}

fn random_app(seed: u64, index: usize) -> AppBundle {
    let mut rng = StdRng::seed_from_u64(
        seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (index as u64).wrapping_mul(0x100_0000_01b3),
    );
    let app_id = format!("app{index}");
    let component_count = rng.random_range(1..=3usize);

    let mut granted: BTreeSet<String> = BTreeSet::new();
    for p in PERMS {
        if rng.random_bool(0.5) {
            granted.insert(p.to_string());
        }
    }
    let shared_user_id = if rng.random_bool(0.1) {
        Some("sharedpool".to_string())
    } else {
        None
    };

    let mut components = Vec::new();
    for c in 0..component_count {
        components.push(random_app_component(&mut rng, index, c));
    }

    AppBundle {
        app_id,
        granted_permissions: granted,
        shared_user_id,
        components,
    }
}

fn random_app_component(rng: &mut StdRng, app_index: usize, comp_index: usize) -> Component {
    let kind = match rng.random_range(0..4u32) {
        0 => ComponentKind::Activity,
        1 => ComponentKind::Service,
        2 => ComponentKind::BroadcastReceiver,
        _ => ComponentKind::ContentProvider,
    };
    let lifecycle = match kind {
        ComponentKind::Activity | ComponentKind::ContentProvider => "onCreate",
        ComponentKind::Service => {
            if rng.random_bool(0.5) { "onBind" } else { "onStartCommand" }
        }
        ComponentKind::BroadcastReceiver => "onReceive",
    };

    let mut intent_filters = Vec::new();
    for action in ACTIONS {
        if rng.random_bool(0.2) {
            intent_filters.push(action.to_string());
        }
    }
    let exported = !intent_filters.is_empty() || rng.random_bool(0.6);
    let required_permission = if rng.random_bool(0.25) {
        Some(pick(rng, PERMS).to_string())
    } else {
        None
    };

    let mut available = vec!["arg0".to_string()];
    let mut fresh = 0usize;
    let mut body = Vec::new();
    let statements = rng.random_range(2..=8usize);
    for _ in 0..statements {
        body.push(random_ipc_statement(rng, &mut available, &mut fresh, app_index));
    }

    Component {
        name: format!("C{comp_index}"),
        kind,
        exported,
        required_permission,
        intent_filters,
        methods: vec![Method {
            name: lifecycle.to_string(),
            params: vec!["arg0".to_string()],
            body,
        }],
    }
}

fn random_ipc_statement(
    rng: &mut StdRng,
    available: &mut Vec<String>,
    fresh: &mut usize,
    app_index: usize,
) -> Statement {
    let mut new_var = || {
        *fresh += 1;
        format!("w{fresh}")
    };
    let arg = available[rng.random_range(0..available.len())].clone();

    match rng.random_range(0..10u32) {
        0 | 1 => {
            let def = new_var();
            available.push(def.clone());
            Statement::Api {
                def: Some(def),
                name: pick(rng, SOURCES).to_string(),
                args: vec![],
                target: None,
            }
        }
        2 | 3 => Statement::Api {
            def: None,
            name: pick(rng, SINKS).to_string(),
            args: vec![arg],
            target: None,
        },
        4 | 5 | 6 => {
            // Outgoing IPC. Explicit targets may dangle, which the resolver
            // reports without failing.
            let name = pick(rng, IPC_OUT);
            let target = if name == "startActivity" {
                let target_app = rng.random_range(0..app_index + 3);
                let target_comp = rng.random_range(0..3u32);
                format!("app{target_app}/C{target_comp}")
            } else {
                pick(rng, ACTIONS).to_string()
            };
            Statement::Api {
                def: None,
                name: name.to_string(),
                args: vec![arg],
                target: Some(target),
            }
        }
        7 => {
            let def = new_var();
            available.push(def.clone());
            Statement::Api {
                def: Some(def),
                name: IPC_IN[0].to_string(),
                args: vec![],
                target: None,
            }
        }
        _ => {
            let def = new_var();
            available.push(def.clone());
            Statement::Assign {
                def,
                uses: vec![arg],
            }
        }
    }
}

/// A component whose single slice is a dependence chain of roughly
/// `statements` nodes, used for measuring slice-time growth.
pub fn chain_component(statements: usize) -> Component {
    let mut body = vec![Statement::Assign {
        def: "v0".to_string(),
        uses: vec!["ctx".to_string()],
    }];
    for i in 1..statements.saturating_sub(1) {
        body.push(Statement::Assign {
            def: format!("v{i}"),
            uses: vec![format!("v{}", i - 1)],
        });
    }
    let last = body.len() - 1;
    body.push(Statement::Api {
        def: None,
        name: "WebView.loadUrl".to_string(),
        args: vec![format!("v{last}")],
        target: None,
    });
    Component {
        name: "Chain".to_string(),
        kind: ComponentKind::Activity,
        exported: true,
        required_permission: None,
        intent_filters: Vec::new(),
        methods: vec![Method {
            name: "onCreate".to_string(),
            params: vec!["ctx".to_string()],
            body,
        }],
    }
}

/// A large but well-behaved ecosystem: every app holds a five-component
/// explicit IPC chain from a source to a sink, and every tenth app forwards
/// into its successor.
pub fn scale_ecosystem(apps: usize, components_per_app: usize, statements: usize) -> Vec<AppBundle> {
    let mut bundles = Vec::new();
    for a in 0..apps {
        let app_id = format!("scale{a}");
        let mut components = Vec::new();
        for c in 0..components_per_app {
            let is_first = c == 0;
            let is_last = c + 1 == components_per_app;
            let mut body = Vec::new();
            if is_first {
                body.push(Statement::Api {
                    def: Some("data".to_string()),
                    name: "LocationManager.getLastKnownLocation".to_string(),
                    args: vec![],
                    target: None,
                });
            } else {
                body.push(Statement::Assign {
                    def: "data".to_string(),
                    uses: vec!["arg0".to_string()],
                });
            }
            let padding = statements.saturating_sub(3);
            for i in 0..padding {
                let prev = if i == 0 { "data".to_string() } else { format!("p{}", i - 1) };
                body.push(Statement::Assign {
                    def: format!("p{i}"),
                    uses: vec![prev],
                });
            }
            let carried = if padding == 0 {
                "data".to_string()
            } else {
                format!("p{}", padding - 1)
            };
            if is_last {
                body.push(Statement::Api {
                    def: None,
                    name: "WebView.loadUrl".to_string(),
                    args: vec![carried],
                    target: None,
                });
                if a % 10 == 0 && a + 1 < apps {
                    body.push(Statement::Api {
                        def: None,
                        name: "startActivity".to_string(),
                        args: vec!["data".to_string()],
                        target: Some(format!("scale{}/C0", a + 1)),
                    });
                }
            } else {
                body.push(Statement::Api {
                    def: None,
                    name: "startActivity".to_string(),
                    args: vec![carried],
                    target: Some(format!("{app_id}/C{}", c + 1)),
                });
            }
            components.push(Component {
                name: format!("C{c}"),
                kind: ComponentKind::Activity,
                exported: true,
                required_permission: None,
                intent_filters: Vec::new(),
                methods: vec![Method {
                    name: "onCreate".to_string(),
                    params: vec!["arg0".to_string()],
                    body,
                }],
            });
        }
        bundles.push(AppBundle {
            app_id,
            granted_permissions: BTreeSet::new(),
            shared_user_id: None,
            components,
        });
    }
    bundles
}
