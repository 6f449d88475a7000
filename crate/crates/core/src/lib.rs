//! Static information-flow analysis for multi-app ecosystems.
//!
//! Apps grant each other capabilities transitively: a permission granted to
//! one app is effectively extended to every app it talks to. This crate
//! detects such flows in two layers. An architectural scan identifies
//! components and the points where data can enter or leave them; focused
//! backward slicing then proves which entries actually feed which exits; the
//! per-component flows are composed into app-level and ecosystem-level flow
//! graphs; and a reachability search connects classified data sources to
//! data sinks across app boundaries. Each flow is scored with
//! risk = probability × impact and audited for permission enforcement along
//! its path.
//!
//! The [`pipeline`] module drives the phases end to end; every phase is also
//! usable on its own through the JSON exchange documents.

#![forbid(unsafe_code)]

pub mod catalog;
pub mod error;
pub mod flowgraph;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod risk;
pub mod scan;
pub mod scenario;
pub mod slicer;
pub mod synth;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use catalog::{ApiCatalog, ApiClass, AttackComplexity, Criticality, ResolutionMode};
pub use error::{CatalogError, GraphError, ParseError};
pub use flowgraph::{CriticalFlow, FlowGraph};
pub use model::{AppBundle, Component, ComponentKind, Method, Statement};
pub use pipeline::{analyze, AnalysisOptions, AnalysisOutput};
pub use report::{AbstractionLevel, AnalysisReport};
pub use risk::{PermissionFinding, RiskScore};
pub use scan::{ExchangeDocument, IpcPoint, PointId};
pub use slicer::FlowDocument;
