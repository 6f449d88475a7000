//! Ordinal risk scoring and permission boundary audits for critical flows.
//!
//! Risk = probability × impact. Impact comes from the source criticality
//! (low→1, medium→2, high→3); probability from the sink attack complexity,
//! inverted because a harder attack is a less probable one (very_high→1,
//! high→2, medium→3). The numeric 1–3 mapping and the label buckets are
//! artifact choices recorded in report output so consumers can re-bucket.

use serde::Serialize;

use crate::catalog::{AttackComplexity, Criticality};
use crate::flowgraph::{CriticalFlow, EcosystemView, FlowGraph, NodeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLabel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RiskScore {
    pub impact: u8,
    pub probability: u8,
    pub risk: u8,
    pub label: RiskLabel,
}

pub fn impact_of(criticality: Criticality) -> u8 {
    match criticality {
        Criticality::Low => 1,
        Criticality::Medium => 2,
        Criticality::High => 3,
    }
}

pub fn probability_of(complexity: AttackComplexity) -> u8 {
    match complexity {
        AttackComplexity::VeryHigh => 1,
        AttackComplexity::High => 2,
        AttackComplexity::Medium => 3,
    }
}

/// Score a (criticality, complexity) pair.
pub fn score(criticality: Criticality, complexity: AttackComplexity) -> RiskScore {
    let impact = impact_of(criticality);
    let probability = probability_of(complexity);
    let risk = impact * probability;
    let label = match risk {
        1..=2 => RiskLabel::Low,
        3..=4 => RiskLabel::Medium,
        _ => RiskLabel::High,
    };
    RiskScore {
        impact,
        probability,
        risk,
        label,
    }
}

/// Score one critical flow from its terminal levels.
pub fn score_flow(flow: &CriticalFlow) -> RiskScore {
    score(flow.criticality, flow.complexity)
}

/// Whether a permission boundary guards one inter-component edge of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The target component requires a permission.
    Guarded,
    /// The target component requires nothing.
    Unguarded,
    /// Caller and target apps share a user id; the boundary is moot.
    SharedUid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PermissionFinding {
    pub from: String,
    pub to: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// Audit every inter-component edge of a flow. Exactly one finding per IPC
/// edge on the witness path.
pub fn permission_boundaries(
    flow: &CriticalFlow,
    graph: &FlowGraph,
    eco: &EcosystemView,
) -> Vec<PermissionFinding> {
    let mut findings = Vec::new();
    for edge in &flow.path {
        if !edge.kind.is_ipc() {
            continue;
        }
        let caller_app = graph.meta(&edge.from).map(|m| m.app.clone()).unwrap_or_default();
        let (target_app, target_component) = match graph.meta(&edge.to) {
            Some(meta) => (meta.app.clone(), meta.component.clone().unwrap_or_default()),
            None => continue,
        };

        let caller_shared = eco
            .index
            .manifest(&caller_app)
            .and_then(|m| m.shared_user_id.clone());
        let target_shared = eco
            .index
            .manifest(&target_app)
            .and_then(|m| m.shared_user_id.clone());
        let shares_uid = caller_app != target_app
            && caller_shared.is_some()
            && caller_shared == target_shared;

        let required = eco
            .index
            .get(&target_app, &target_component)
            .and_then(|info| info.required_permission.clone());

        let (verdict, detail) = if shares_uid {
            (
                Verdict::SharedUid,
                format!(
                    "apps `{caller_app}` and `{target_app}` share user id `{}`",
                    caller_shared.unwrap_or_default()
                ),
            )
        } else if let Some(permission) = required {
            let holds = eco
                .index
                .manifest(&caller_app)
                .is_some_and(|m| m.granted_permissions.contains(&permission));
            (
                Verdict::Guarded,
                format!(
                    "target `{target_component}` requires `{permission}`; caller `{caller_app}` {}",
                    if holds { "holds it" } else { "does not hold it" }
                ),
            )
        } else {
            (
                Verdict::Unguarded,
                format!("target `{target_component}` requires no permission"),
            )
        };

        findings.push(PermissionFinding {
            from: edge.from.to_string(),
            to: edge.to.to_string(),
            verdict,
            detail,
        });
    }
    findings
}

/// Count the inter-component edges of a flow (used to check finding
/// coverage).
pub fn ipc_edge_count(flow: &CriticalFlow) -> usize {
    flow.path.iter().filter(|e| e.kind.is_ipc()).count()
}

/// True when the edge target is a point (inter-component edges always are).
#[allow(dead_code)]
fn is_point(node: &NodeRef) -> bool {
    matches!(node, NodeRef::Point(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ApiCatalog;
    use crate::scan;
    use crate::scenario::{self, ScenarioKind};
    use crate::slicer::FlowDocument;

    #[test]
    fn case_study_pair_scores_six_high() {
        let s = score(Criticality::Medium, AttackComplexity::Medium);
        assert_eq!((s.impact, s.probability, s.risk), (2, 3, 6));
        assert_eq!(s.label, RiskLabel::High);
    }

    #[test]
    fn high_source_into_hardest_sink_scores_three_medium() {
        let s = score(Criticality::High, AttackComplexity::VeryHigh);
        assert_eq!((s.impact, s.probability, s.risk), (3, 1, 3));
        assert_eq!(s.label, RiskLabel::Medium);
    }

    #[test]
    fn maximum_risk_is_high_source_medium_complexity() {
        let max = score(Criticality::High, AttackComplexity::Medium);
        assert_eq!(max.risk, 9);
        assert_eq!(max.label, RiskLabel::High);
        for criticality in [Criticality::Low, Criticality::Medium, Criticality::High] {
            for complexity in [
                AttackComplexity::Medium,
                AttackComplexity::High,
                AttackComplexity::VeryHigh,
            ] {
                let s = score(criticality, complexity);
                assert_eq!(s.risk, s.impact * s.probability);
                if (criticality, complexity) != (Criticality::High, AttackComplexity::Medium) {
                    assert!(s.risk < max.risk);
                }
            }
        }
    }

    #[test]
    fn rank_order_survives_monotone_relabeling() {
        let relabel = |v: u8| -> u32 {
            match v {
                1 => 1,
                2 => 4,
                3 => 9,
                _ => unreachable!(),
            }
        };
        let mut pairs = Vec::new();
        for criticality in [Criticality::Low, Criticality::Medium, Criticality::High] {
            for complexity in [
                AttackComplexity::Medium,
                AttackComplexity::High,
                AttackComplexity::VeryHigh,
            ] {
                pairs.push(score(criticality, complexity));
            }
        }
        let mut by_plain: Vec<usize> = (0..pairs.len()).collect();
        by_plain.sort_by_key(|&i| (pairs[i].risk, i));
        let mut by_relabel: Vec<usize> = (0..pairs.len()).collect();
        by_relabel.sort_by_key(|&i| {
            (
                relabel(pairs[i].impact) * relabel(pairs[i].probability),
                i,
            )
        });
        assert_eq!(by_plain, by_relabel);
    }

    fn findings_for(kind: ScenarioKind, mutate: impl FnOnce(&mut Vec<crate::model::AppBundle>)) -> Vec<PermissionFinding> {
        let mut bundles = scenario::generate(kind);
        mutate(&mut bundles);
        let catalog = ApiCatalog::default_catalog();
        let (index, points) = scan::scan_ecosystem(&bundles, &catalog);
        let exchange = scan::emit_exchange(&index, &points);
        let flows: FlowDocument = crate::pipeline::slice_from_exchange(&bundles, &exchange, 1);
        let eco = EcosystemView {
            bundles: &bundles,
            index: &index,
            catalog: &catalog,
        };
        let apps: Vec<&str> = index.app_ids().collect();
        let graphs: Vec<_> = apps
            .iter()
            .map(|a| crate::flowgraph::build_app_graph(a, &exchange, &flows, &catalog).unwrap())
            .collect();
        let (edges, _) = crate::flowgraph::all_ipc_edges(&exchange, &eco);
        let graph = crate::flowgraph::compose_ecosystem(&graphs, &edges);
        let critical = crate::flowgraph::critical_flows(&graph);
        critical
            .iter()
            .flat_map(|f| permission_boundaries(f, &graph, &eco))
            .collect()
    }

    #[test]
    fn scenario_c_forwarder_is_unguarded() {
        let findings = findings_for(ScenarioKind::C, |_| {});
        assert!(findings.iter().any(|f| f.verdict == Verdict::Unguarded));
    }

    #[test]
    fn required_and_held_permission_is_guarded() {
        let findings = findings_for(ScenarioKind::B, |bundles| {
            bundles[1].components[0].required_permission = Some("PUSH_DATA".to_string());
            bundles[0].granted_permissions.insert("PUSH_DATA".to_string());
        });
        assert!(findings
            .iter()
            .any(|f| f.verdict == Verdict::Guarded && f.detail.contains("holds it")));
    }

    #[test]
    fn shared_user_id_wins() {
        let findings = findings_for(ScenarioKind::B, |bundles| {
            bundles[0].shared_user_id = Some("pool".to_string());
            bundles[1].shared_user_id = Some("pool".to_string());
            bundles[1].components[0].required_permission = Some("PUSH_DATA".to_string());
        });
        assert!(findings.iter().all(|f| f.verdict == Verdict::SharedUid));
        assert!(!findings.is_empty());
    }

    #[test]
    fn every_ipc_edge_gets_exactly_one_finding() {
        for seed in 0..20 {
            let bundles = crate::synth::random_ecosystem(seed, 3);
            if !crate::model::validate_ecosystem(&bundles).is_empty() {
                continue;
            }
            let catalog = ApiCatalog::default_catalog();
            let (index, points) = scan::scan_ecosystem(&bundles, &catalog);
            let exchange = scan::emit_exchange(&index, &points);
            let flows = crate::pipeline::slice_from_exchange(&bundles, &exchange, 1);
            let eco = EcosystemView {
                bundles: &bundles,
                index: &index,
                catalog: &catalog,
            };
            let apps: Vec<&str> = index.app_ids().collect();
            let graphs: Vec<_> = apps
                .iter()
                .map(|a| crate::flowgraph::build_app_graph(a, &exchange, &flows, &catalog).unwrap())
                .collect();
            let (edges, _) = crate::flowgraph::all_ipc_edges(&exchange, &eco);
            let graph = crate::flowgraph::compose_ecosystem(&graphs, &edges);
            for flow in crate::flowgraph::critical_flows(&graph) {
                let findings = permission_boundaries(&flow, &graph, &eco);
                assert_eq!(findings.len(), ipc_edge_count(&flow), "seed {seed}");
            }
        }
    }
}
