//! Machine-readable reports and reference-matrix comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Derivation;
use crate::explorer::{canonicalize, Bounds, Stats, Trace};
use crate::goals::{GoalId, GoalVerdict, Mode, Outcome};
use crate::msc::render_msc;
use crate::protocols::ProtocolName;

pub const SCHEMA: u32 = 1;
pub const TOOL_NAME: &str = "revlab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Attached to every all-traces goal that found nothing.
pub const DISCLAIMER: &str = "no counterexample within bounds";
/// Attached to every exists-trace goal that found nothing.
pub const NO_WITNESS: &str = "no witness within bounds";
pub const SCOPE_NOTE: &str = "verdicts are exhaustive for the stated bounds only; a pass is not a proof for unbounded sessions";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub protocol: ProtocolName,
    pub goals: Vec<GoalId>,
    pub change_enabled: bool,
    pub reveals_enabled: bool,
    pub n_vehicles: usize,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventDoc {
    pub label: String,
    pub args: Vec<String>,
    pub time: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDoc {
    pub term: String,
    /// Built by the adversary rather than replayed verbatim.
    pub synthesized: bool,
    pub derivation: Derivation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepDoc {
    pub index: usize,
    pub rule: String,
    pub actor: Option<String>,
    pub substitution: BTreeMap<String, String>,
    pub inputs: Vec<InputDoc>,
    pub adversary_fresh: Vec<String>,
    pub fresh: Vec<String>,
    pub consumed: Vec<String>,
    pub produced: Vec<String>,
    pub outputs: Vec<String>,
    pub events: Vec<EventDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDoc {
    pub length: usize,
    pub truncated: bool,
    pub terminal_digest: String,
    pub steps: Vec<StepDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub msc: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictDoc {
    pub goal: GoalId,
    pub lemma_name: &'static str,
    pub lemma: &'static str,
    pub mode: Mode,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disclaimer: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<TraceDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    pub traces_checked: u64,
    pub truncated_traces: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplorationDoc {
    pub states: usize,
    pub transitions: usize,
    pub traces: u64,
    pub truncated_traces: u64,
    pub max_depth: usize,
    pub merged_successors: usize,
    pub inexact_canonical_forms: usize,
    /// Secrets derivable by the adversary in some explored state.
    pub leaked_secrets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub goal: GoalId,
    pub expected: Outcome,
    pub actual: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectDoc {
    pub reference: String,
    pub matched: Vec<GoalId>,
    pub mismatches: Vec<Mismatch>,
    /// Evaluated goals the reference does not mention.
    pub unchecked: Vec<GoalId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Timing {
    pub explore_ms: u64,
    pub check_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportDocument {
    pub schema: u32,
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub exploration: ExplorationDoc,
    pub verdicts: Vec<VerdictDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<ExpectDoc>,
    pub timing: Timing,
    pub note: &'static str,
}

fn sat(n: u128) -> u64 {
    u64::try_from(n).unwrap_or(u64::MAX)
}

pub fn trace_doc(trace: &Trace, with_msc: bool) -> TraceDoc {
    let steps = trace
        .steps
        .iter()
        .map(|s| StepDoc {
            index: s.index,
            rule: s.rule_id.clone(),
            actor: s
                .actor
                .as_ref()
                .map(|a| a.as_public().map_or_else(|| a.to_string(), str::to_string)),
            substitution: s
                .subst
                .iter()
                .map(|(v, t)| (v.to_string(), t.to_string()))
                .collect(),
            inputs: s
                .inputs
                .iter()
                .map(|i| InputDoc {
                    term: i.term.to_string(),
                    synthesized: i.derivation.is_constructed(),
                    derivation: i.derivation.clone(),
                })
                .collect(),
            adversary_fresh: s.adversary_fresh.iter().map(ToString::to_string).collect(),
            fresh: s.fresh.iter().map(ToString::to_string).collect(),
            consumed: s.consumed.iter().map(ToString::to_string).collect(),
            produced: s.produced.iter().map(ToString::to_string).collect(),
            outputs: s.outputs.iter().map(ToString::to_string).collect(),
            events: s
                .events
                .iter()
                .map(|e| EventDoc {
                    label: e.label.to_string(),
                    args: e.args.iter().map(ToString::to_string).collect(),
                    time: e.time,
                })
                .collect(),
        })
        .collect();
    TraceDoc {
        length: trace.len(),
        truncated: trace.truncated,
        terminal_digest: canonicalize(&trace.terminal).digest.to_string(),
        steps,
        msc: with_msc.then(|| render_msc(trace)),
    }
}

pub fn verdict_doc(v: &GoalVerdict, with_msc: bool) -> VerdictDoc {
    let disclaimer = match v.outcome {
        Outcome::NoCounterexampleWithinBounds => Some(DISCLAIMER),
        Outcome::NoWitnessWithinBounds => Some(NO_WITNESS),
        _ => None,
    };
    VerdictDoc {
        goal: v.goal,
        lemma_name: v.goal.lemma_name(),
        lemma: v.goal.lemma(),
        mode: v.mode,
        outcome: v.outcome,
        disclaimer,
        evidence: v.evidence.as_ref().map(|t| trace_doc(t, with_msc)),
        explanation: v.explanation.clone(),
        traces_checked: sat(v.traces_checked),
        truncated_traces: sat(v.truncated_traces),
    }
}

pub fn exploration_doc(stats: &Stats, leaked: Vec<String>) -> ExplorationDoc {
    ExplorationDoc {
        states: stats.nodes,
        transitions: stats.edges,
        traces: sat(stats.traces),
        truncated_traces: sat(stats.truncated_traces),
        max_depth: stats.max_depth,
        merged_successors: stats.merged,
        inexact_canonical_forms: stats.inexact_canonical,
        leaked_secrets: leaked,
    }
}

impl ReportDocument {
    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let b = &c.bounds;
        let on = |x: bool| if x { "on" } else { "off" };
        let _ = writeln!(
            out,
            "{} {}  protocol={} change={} reveals={} vehicles={}",
            self.tool.name,
            self.tool.version,
            c.protocol,
            on(c.change_enabled),
            on(c.reveals_enabled),
            c.n_vehicles
        );
        let _ = writeln!(
            out,
            "bounds: max_steps={} max_changes={} adversary_fresh_budget={} synthesis_depth={} max_sessions={}",
            b.max_steps, b.max_changes, b.adversary_fresh_budget, b.synthesis_depth, b.max_sessions
        );
        let e = &self.exploration;
        let _ = writeln!(
            out,
            "explored {} states, {} transitions, {} traces ({} truncated)",
            e.states, e.transitions, e.traces, e.truncated_traces
        );
        if !e.leaked_secrets.is_empty() {
            let _ = writeln!(
                out,
                "adversary-derivable secrets: {}",
                e.leaked_secrets.join(", ")
            );
        }
        out.push('\n');
        for v in &self.verdicts {
            let mode = match v.mode {
                Mode::ExistsTrace => "exists-trace",
                Mode::AllTraces => "all-traces",
            };
            let _ = writeln!(
                out,
                "{:<3} {:<34} {:<13} {}",
                v.goal.as_str().to_uppercase(),
                v.lemma_name,
                mode,
                v.outcome
            );
        }
        for v in &self.verdicts {
            if let Some(x) = &v.explanation {
                let _ = writeln!(out, "\n{} explanation: {x}", v.goal.as_str().to_uppercase());
            }
            if let Some(t) = &v.evidence {
                let kind = if v.outcome == Outcome::WitnessFound {
                    "witness"
                } else {
                    "counterexample"
                };
                let _ = writeln!(
                    out,
                    "\n{} {kind} ({} steps):",
                    v.goal.as_str().to_uppercase(),
                    t.length
                );
                match &t.msc {
                    Some(chart) => out.push_str(chart),
                    None => {
                        for s in &t.steps {
                            let forged = if s.inputs.iter().any(|i| i.synthesized) {
                                "  [adversary-built input]"
                            } else {
                                ""
                            };
                            let _ = writeln!(out, "  {:>2} {}{forged}", s.index, s.rule);
                            for ev in &s.events {
                                let _ =
                                    writeln!(out, "       {}({})", ev.label, ev.args.join(", "));
                            }
                        }
                    }
                }
            }
        }
        if let Some(x) = &self.expect {
            let _ = writeln!(
                out,
                "\nreference {}: {} matched, {} mismatched",
                x.reference,
                x.matched.len(),
                x.mismatches.len()
            );
            for m in &x.mismatches {
                let _ = writeln!(
                    out,
                    "  {}: expected {}, got {}",
                    m.goal, m.expected, m.actual
                );
            }
        }
        let _ = writeln!(out, "\nnote: {}", self.note);
        out
    }
}

/// A reference verdict matrix, as shipped under `reference/`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceMatrix {
    pub schema: u32,
    pub protocol: ProtocolName,
    #[serde(default)]
    pub comment: Option<String>,
    pub verdicts: BTreeMap<GoalId, Outcome>,
}

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} is not a reference matrix: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path} has schema {found}, expected {SCHEMA}")]
    Schema { path: String, found: u32 },
    #[error("{path} describes protocol {found}, not {expected}")]
    Protocol {
        path: String,
        found: ProtocolName,
        expected: ProtocolName,
    },
}

pub fn load_reference(
    path: &str,
    protocol: ProtocolName,
) -> Result<ReferenceMatrix, ReferenceError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReferenceError::Io {
        path: path.into(),
        source,
    })?;
    let m: ReferenceMatrix =
        serde_json::from_str(&text).map_err(|source| ReferenceError::Parse {
            path: path.into(),
            source,
        })?;
    if m.schema != SCHEMA {
        return Err(ReferenceError::Schema {
            path: path.into(),
            found: m.schema,
        });
    }
    if m.protocol != protocol {
        return Err(ReferenceError::Protocol {
            path: path.into(),
            found: m.protocol,
            expected: protocol,
        });
    }
    Ok(m)
}

pub fn compare(reference: &ReferenceMatrix, label: &str, verdicts: &[GoalVerdict]) -> ExpectDoc {
    let mut doc = ExpectDoc {
        reference: label.to_string(),
        matched: Vec::new(),
        mismatches: Vec::new(),
        unchecked: Vec::new(),
    };
    for v in verdicts {
        match reference.verdicts.get(&v.goal) {
            Some(&expected) if expected == v.outcome => doc.matched.push(v.goal),
            Some(&expected) => doc.mismatches.push(Mismatch {
                goal: v.goal,
                expected,
                actual: v.outcome,
            }),
            None => doc.unchecked.push(v.goal),
        }
    }
    doc
}
