//! End-to-end orchestration of the analysis phases.
//!
//! Phases communicate only through the documented exchange and flow
//! documents, so running them as separate steps produces byte-identical
//! results to a single end-to-end run. Slicing jobs are independent per
//! component and run in a worker pool; merged output is sorted, so the
//! degree of parallelism never changes results.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::ApiCatalog;
use crate::flowgraph::{
    all_ipc_edges, application_flows, build_app_graph, compose_ecosystem, critical_flows,
    CriticalFlow, EcosystemView, FlowGraph,
};
use crate::model::{validate_ecosystem, AppBundle, Violation};
use crate::report::{to_report, AnalysisReport, Stats};
use crate::risk::{permission_boundaries, score_flow, PermissionFinding, RiskScore};
use crate::scan::{emit_exchange, identify_components, scan_ecosystem, ExchangeDocument, PointId};
use crate::slicer::{intra_component_flows, FlowDocument, FlowRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ecosystem has {} invariant violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Graph(#[from] crate::error::GraphError),
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Worker count for the slicing pool; 1 disables the pool.
    pub jobs: usize,
    /// Record wall-clock phase timings in the report statistics. Off by
    /// default so identical inputs produce byte-identical reports.
    pub timings: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timings: false,
        }
    }
}

/// Everything one analysis run produces.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub exchange: ExchangeDocument,
    pub flows: FlowDocument,
    pub graph: FlowGraph,
    pub app_flows: Vec<(String, PointId, PointId)>,
    pub critical: Vec<(CriticalFlow, RiskScore, Vec<PermissionFinding>)>,
    pub report: AnalysisReport,
}

/// Slice every component named in the exchange document. This is the only
/// parallel phase.
pub fn slice_from_exchange(
    bundles: &[AppBundle],
    exchange: &ExchangeDocument,
    jobs: usize,
) -> FlowDocument {
    let slice_one = |section: &crate::scan::ExchangeComponent| -> Vec<FlowRecord> {
        let Some(bundle) = bundles.iter().find(|b| b.app_id == section.app) else {
            return Vec::new();
        };
        let Some(component) = bundle.component(&section.name) else {
            return Vec::new();
        };
        let (entries, exits) = exchange.points_of(&section.app, &section.name);
        intra_component_flows(component, &entries, &exits)
            .into_iter()
            .map(|flow| FlowRecord {
                component: format!("{}/{}", section.app, section.name),
                from: flow.from,
                to: flow.to,
                witness: flow.witness,
            })
            .collect()
    };

    let mut flows: Vec<FlowRecord> = if jobs <= 1 {
        exchange.components.iter().flat_map(|c| slice_one(c)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("worker pool");
        pool.install(|| {
            exchange
                .components
                .par_iter()
                .map(|c| slice_one(c))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        })
    };

    flows.sort_by(|a, b| (&a.component, &a.from, &a.to).cmp(&(&b.component, &b.from, &b.to)));
    FlowDocument { flows }
}

/// Graph phases over already-produced documents: per-app graphs, IPC
/// resolution, per-app flows, ecosystem composition, critical flows.
pub struct GraphPhases {
    pub graph: FlowGraph,
    pub app_flows: Vec<(String, PointId, PointId)>,
    pub critical: Vec<CriticalFlow>,
    pub resolution_errors: Vec<String>,
}

pub fn graph_from_documents(
    bundles: &[AppBundle],
    catalog: &ApiCatalog,
    exchange: &ExchangeDocument,
    flows: &FlowDocument,
) -> Result<GraphPhases, PipelineError> {
    let index = identify_components(bundles);
    let eco = EcosystemView {
        bundles,
        index: &index,
        catalog,
    };

    let (ipc_edges, resolution_errors) = all_ipc_edges(exchange, &eco);

    let mut app_graphs = Vec::new();
    let mut app_flows = Vec::new();
    let apps: Vec<String> = index.app_ids().map(str::to_string).collect();
    for app in &apps {
        let mut graph = build_app_graph(app, exchange, flows, catalog)?;
        for edge in &ipc_edges {
            if graph.contains(&edge.from) && graph.contains(&edge.to) {
                graph.insert_edge(edge.clone());
            }
        }
        for (from, to) in application_flows(&graph, &eco) {
            app_flows.push((app.clone(), from, to));
        }
        app_graphs.push(graph);
    }

    let graph = compose_ecosystem(&app_graphs, &ipc_edges);
    let critical = critical_flows(&graph);

    Ok(GraphPhases {
        graph,
        app_flows,
        critical,
        resolution_errors,
    })
}

/// Run the whole pipeline: validation, scan, slicing, graph composition,
/// reachability, scoring, and report assembly.
pub fn analyze(
    bundles: &[AppBundle],
    catalog: &ApiCatalog,
    options: &AnalysisOptions,
) -> Result<AnalysisOutput, PipelineError> {
    let violations = validate_ecosystem(bundles);
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }

    let mut timings: BTreeMap<String, u64> = BTreeMap::new();
    let mut clock = |name: &str, started: Instant| {
        timings.insert(name.to_string(), started.elapsed().as_millis() as u64);
    };

    let started = Instant::now();
    let (index, points) = scan_ecosystem(bundles, catalog);
    let exchange = emit_exchange(&index, &points);
    clock("scan", started);

    let started = Instant::now();
    let flows = slice_from_exchange(bundles, &exchange, options.jobs);
    clock("slice", started);

    let started = Instant::now();
    let phases = graph_from_documents(bundles, catalog, &exchange, &flows)?;
    clock("graph", started);

    let started = Instant::now();
    let eco = EcosystemView {
        bundles,
        index: &index,
        catalog,
    };
    let critical: Vec<(CriticalFlow, RiskScore, Vec<PermissionFinding>)> = phases
        .critical
        .into_iter()
        .map(|flow| {
            let score = score_flow(&flow);
            let findings = permission_boundaries(&flow, &phases.graph, &eco);
            (flow, score, findings)
        })
        .collect();
    clock("score", started);

    let stats = Stats {
        apps: 0, // finalized by to_report
        components: index.len(),
        points: exchange.components.iter().map(|c| c.points.len()).sum(),
        intra_flows: flows.flows.len(),
        ipc_edges: phases
            .graph
            .edges()
            .filter(|e| e.kind.is_ipc())
            .count(),
        application_flows: phases.app_flows.len(),
        critical_flows: 0, // finalized by to_report
        resolution_errors: phases.resolution_errors,
        timings_ms: options.timings.then_some(timings),
    };
    let report = to_report(&critical, catalog, &eco, stats);

    Ok(AnalysisOutput {
        exchange,
        flows,
        graph: phases.graph,
        app_flows: phases.app_flows,
        critical,
        report,
    })
}
