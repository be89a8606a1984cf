//! Per-edge verdicts for a scoped graph.

use serde_json::{json, Value};

use crate::builder::{build_materiality_paths, BuildError, MaterialityPaths};
use crate::criteria::{
    immaterial_by_lb2, single_decision_criterion, solubility, thm1_conditions, CriteriaError,
    FactorizationWitness, SearchConfig, SingleDecisionVerdict,
};
use crate::graph::{Node, ScopedGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ImmaterialSingleDecision,
    ImmaterialLb2(FactorizationWitness),
    MaterialByThm1(Box<MaterialityPaths>),
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ImmaterialSingleDecision => "ImmaterialSingleDecision",
            Verdict::ImmaterialLb2(_) => "ImmaterialLB2",
            Verdict::MaterialByThm1(_) => "MaterialByThm1",
            Verdict::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeReport {
    pub decision: Node,
    pub context: Node,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionReport {
    pub soluble: Option<Vec<Node>>,
    pub condition_a: bool,
    pub condition_b: bool,
    pub condition_c: bool,
    pub edges: Vec<EdgeReport>,
    pub warnings: Vec<String>,
}

impl CriterionReport {
    pub fn edge(&self, x: Node, z: Node) -> Option<&EdgeReport> {
        self.edges.iter().find(|e| e.decision == x && e.context == z)
    }

    pub fn to_json(&self, g: &ScopedGraph) -> Value {
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                let detail = match &e.verdict {
                    Verdict::ImmaterialLb2(w) => json!({
                        "x_prime": g.names_of(&w.x_prime),
                        "z": g.names_of(&w.z),
                        "c_prime": g.names_of(&w.c_prime),
                        "u_prime": g.names_of(&w.u_prime),
                        "ordering": g.names_of(&w.ordering),
                    }),
                    Verdict::MaterialByThm1(p) => json!({
                        "control": p.control.display(g).to_string(),
                        "i_min": p.i_min,
                        "i_max": p.i_max,
                        "info": p.info.iter().map(|m| json!({
                            "index": m.index,
                            "path": m.truncated.display(g).to_string(),
                            "intersection": g.name(m.intersection),
                            "auxiliary": m.auxiliary.iter()
                                .map(|r| r.display(g).to_string())
                                .collect::<Vec<_>>(),
                        })).collect::<Vec<_>>(),
                    }),
                    _ => Value::Null,
                };
                json!({
                    "decision": g.name(e.decision),
                    "context": g.name(e.context),
                    "verdict": e.verdict.label(),
                    "detail": detail,
                })
            })
            .collect();
        json!({
            "soluble": self.soluble.is_some(),
            "solution_order": self.soluble.as_ref().map(|o| g.names_of(o)),
            "conditions": {
                "a": self.condition_a,
                "b": self.condition_b,
                "c": self.condition_c,
            },
            "edges": edges,
            "warnings": self.warnings,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// Verdict for every decision-context edge, trying the single-decision
/// criterion, then the materiality construction, then the fix-point check.
pub fn check_graph(g: &ScopedGraph, cfg: &SearchConfig) -> Result<CriterionReport, CheckError> {
    let thm1 = thm1_conditions(g);
    let all_hold = thm1.all_hold();
    let mut report = CriterionReport {
        soluble: solubility(g),
        condition_a: thm1.a.values().all(|v| *v),
        condition_b: thm1.b.values().all(|v| *v),
        condition_c: thm1.c.values().all(|v| *v),
        edges: Vec::new(),
        warnings: Vec::new(),
    };
    for x in g.decisions() {
        for &z in g.contexts(x) {
            let verdict = if single_decision_criterion(g, x, z)? == SingleDecisionVerdict::Immaterial {
                Verdict::ImmaterialSingleDecision
            } else if all_hold {
                Verdict::MaterialByThm1(Box::new(build_materiality_paths(g, x, z)?))
            } else {
                match immaterial_by_lb2(g, x, z, cfg) {
                    Ok(Some(w)) => Verdict::ImmaterialLb2(w),
                    Ok(None) => Verdict::Unknown,
                    Err(CriteriaError::SearchBudgetExceeded(msg)) => {
                        report.warnings.push(format!(
                            "fix-point search for ({}, {}) stopped early: {msg}",
                            g.name(x),
                            g.name(z)
                        ));
                        Verdict::Unknown
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            report.edges.push(EdgeReport { decision: x, context: z, verdict });
        }
    }
    Ok(report)
}
