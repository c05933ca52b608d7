//! Goals G1-G7 as predicates over event sequences.
//!
//! Each checker scans a trace imperatively and reports the shortest prefix
//! that witnesses (exists-trace goals) or violates (all-traces goals) the
//! property. Prefixes matter: a reveal late in a trace does not excuse an
//! earlier unmatched accept. Evidence is re-checked against the lemma text
//! with the evaluator in [`crate::formula`].

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Knowledge;
use crate::explorer::{
    explore_with, Bounds, EdgeRef, ExploreError, ExploreOptions, Trace, TraceSet,
};
use crate::formula;
use crate::protocols::{initial_state, ProtocolError, ProtocolSpec, OSR_REQ_RECV, RA_OSR_REQ_SEND};
use crate::state::{diagnose, Event, SystemState};
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalId {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    G7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ExistsTrace,
    AllTraces,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    WitnessFound,
    NoWitnessWithinBounds,
    NoCounterexampleWithinBounds,
    CounterexampleFound,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::WitnessFound => "witness-found",
            Outcome::NoWitnessWithinBounds => "no-witness-within-bounds",
            Outcome::NoCounterexampleWithinBounds => "no-counterexample-within-bounds",
            Outcome::CounterexampleFound => "counterexample-found",
        }
    }

    /// The goal holds as far as the bounded search can tell.
    pub fn passes(self) -> bool {
        matches!(
            self,
            Outcome::WitnessFound | Outcome::NoCounterexampleWithinBounds
        )
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown goal '{0}' (expected g1..g7 or all)")]
pub struct UnknownGoal(pub String);

impl GoalId {
    pub const ALL: [GoalId; 7] = [
        GoalId::G1,
        GoalId::G2,
        GoalId::G3,
        GoalId::G4,
        GoalId::G5,
        GoalId::G6,
        GoalId::G7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GoalId::G1 => "g1",
            GoalId::G2 => "g2",
            GoalId::G3 => "g3",
            GoalId::G4 => "g4",
            GoalId::G5 => "g5",
            GoalId::G6 => "g6",
            GoalId::G7 => "g7",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            GoalId::G1 | GoalId::G5 => Mode::ExistsTrace,
            _ => Mode::AllTraces,
        }
    }

    /// G5-G7 talk about pseudonym changes and need the change rule.
    pub fn requires_change(self) -> bool {
        matches!(self, GoalId::G5 | GoalId::G6 | GoalId::G7)
    }

    pub fn lemma_name(self) -> &'static str {
        match self {
            GoalId::G1 => "executable",
            GoalId::G2 => "weak_agreement",
            GoalId::G3 => "noninjective_agreement",
            GoalId::G4 => "noninjective_synchronisation",
            GoalId::G5 => "revoke_after_change_exists",
            GoalId::G6 => "osr_req_received_with_change_all",
            GoalId::G7 => "revoke_with_change_all",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            GoalId::G1 => "every protocol message can be delivered in order",
            GoalId::G2 => {
                "an accepted confirmation was preceded by the vehicle receiving the request"
            }
            GoalId::G3 => "every Commit is preceded by a Running on the same message",
            GoalId::G4 => "agreement plus request receipt before confirmation acceptance",
            GoalId::G5 => "a reported vehicle can still confirm after changing pseudonym",
            GoalId::G6 => "a vehicle confirms only requests the RA sent",
            GoalId::G7 => "an accepted confirmation was preceded by request receipt",
        }
    }

    /// The property in lemma syntax, as evaluated by [`formula::holds`].
    pub fn lemma(self) -> &'static str {
        match self {
            GoalId::G1 => {
                "Ex ra vj t #a #b #c #d #e. Reported(vj, t) @ #a & OsrReqMsgSentTo(ra, vj, t) @ #b \
                 & OsrReqMsgRecvBy(vj, ra, t) @ #c & OsrConfSentBy(vj, ra, t) @ #d \
                 & OsrConfAcceptedBy(ra, vj, t) @ #e & #a < #b & #b < #c & (#c < #d | #c = #d) & #d < #e"
            }
            GoalId::G2 => {
                "All ra vj t #i. OsrConfAcceptedBy(ra, vj, t) @ #i ==> (Ex #j. OsrReqMsgRecvBy(vj, ra, t) @ #j & #j < #i) \
                 | (Ex #r. RevealLtk(vj) @ #r) | (Ex #r. RevealSKPSi(vj) @ #r)"
            }
            GoalId::G3 => {
                "All a b m #i. Commit(a, b, m) @ #i ==> (Ex #j. Running(a, b, m) @ #j & #j < #i) \
                 | (Ex #r. RevealLtk(a) @ #r) | (Ex #r. RevealLtk(b) @ #r) \
                 | (Ex #r. RevealSKPSi(a) @ #r) | (Ex #r. RevealSKPSi(b) @ #r)"
            }
            GoalId::G4 => {
                "(All a b m #i. Commit(a, b, m) @ #i ==> (Ex #j. Running(a, b, m) @ #j & #j < #i) \
                 | (Ex k #r. VjSKPSiReveal(a, k) @ #r) | (Ex k #r. VjSKPSiReveal(b, k) @ #r) \
                 | (Ex k #r. VehicleCompromised(a, k) @ #r) | (Ex k #r. VehicleCompromised(b, k) @ #r)) \
                 & (All ra vj t #i. OsrConfAcceptedBy(ra, vj, t) @ #i ==> (Ex #j. OsrReqMsgRecvBy(vj, ra, t) @ #j & #j < #i) \
                 | (Ex k #r. VjSKPSiReveal(vj, k) @ #r) | (Ex k #r. VehicleCompromised(vj, k) @ #r))"
            }
            GoalId::G5 => {
                "Ex vj ra t1 t2 #i #p #j. Reported(vj, t1) @ #i & ChangePseudonymForVehicle(vj, t1, t2) @ #p \
                 & OsrConfSentBy(vj, ra, t1) @ #j & #i < #p & #p < #j & not (Ex k #r. VehicleCompromised(vj, k) @ #r)"
            }
            GoalId::G6 => {
                "All vj ra t #i. OsrConfSentBy(vj, ra, t) @ #i ==> (Ex #a. OsrReqMsgSentTo(ra, vj, t) @ #a & #a < #i) \
                 | (Ex k #r. VehicleCompromised(vj, k) @ #r)"
            }
            GoalId::G7 => {
                "All ra vj t #i. OsrConfAcceptedBy(ra, vj, t) @ #i ==> (Ex #l. OsrReqMsgRecvBy(vj, ra, t) @ #l & #l < #i) \
                 | (Ex k #r. VehicleCompromised(vj, k) @ #r)"
            }
        }
    }

    /// Goals that make sense for a protocol with or without pseudonym change.
    pub fn applicable(change_enabled: bool) -> Vec<GoalId> {
        GoalId::ALL
            .into_iter()
            .filter(|g| change_enabled || !g.requires_change())
            .collect()
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GoalId {
    type Err = UnknownGoal;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GoalId::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownGoal(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalVerdict {
    pub goal: GoalId,
    pub mode: Mode,
    pub outcome: Outcome,
    /// Witness or counterexample; always a prefix of some explored trace.
    pub evidence: Option<Trace>,
    pub bounds: Option<Bounds>,
    pub traces_checked: u128,
    pub truncated_traces: u128,
    /// Why an exists-trace goal found nothing, when the checker can tell.
    pub explanation: Option<String>,
}

#[derive(Debug, Error)]
pub enum GoalError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{goal}: evidence does not {expected} the lemma on re-check")]
    EvidenceMismatch {
        goal: GoalId,
        expected: &'static str,
    },
    #[error("{count} traces exceed the per-trace checking limit of {limit}; tighten the bounds")]
    TooManyTraces { count: u128, limit: u128 },
}

// ---------------------------------------------------------------------------
// Trace sources

pub enum PathRef<'a> {
    Edges(&'a [EdgeRef]),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathKey {
    Edges(Vec<EdgeRef>),
    Index(usize),
}

impl PathRef<'_> {
    fn to_key(&self) -> PathKey {
        match self {
            PathRef::Edges(e) => PathKey::Edges(e.to_vec()),
            PathRef::Index(i) => PathKey::Index(*i),
        }
    }
}

/// Anything that can enumerate maximal traces as event sequences.
pub trait TraceSource {
    fn visit(&self, f: &mut dyn FnMut(PathRef<'_>, &[Event]) -> ControlFlow<()>);
    /// The first `steps` steps of a visited trace.
    fn evidence(&self, key: &PathKey, steps: usize) -> Result<Trace, ExploreError>;
    fn bounds(&self) -> Option<Bounds>;
    fn trace_count(&self) -> u128;
    fn truncated_count(&self) -> u128;
}

impl TraceSource for TraceSet {
    fn visit(&self, f: &mut dyn FnMut(PathRef<'_>, &[Event]) -> ControlFlow<()>) {
        self.for_each_path(|p, ev| f(PathRef::Edges(p), ev));
    }

    fn evidence(&self, key: &PathKey, steps: usize) -> Result<Trace, ExploreError> {
        match key {
            PathKey::Edges(e) => self.materialize(&e[..steps]),
            PathKey::Index(_) => unreachable!("trace sets use edge paths"),
        }
    }

    fn bounds(&self) -> Option<Bounds> {
        Some(*TraceSet::bounds(self))
    }

    fn trace_count(&self) -> u128 {
        self.stats().traces
    }

    fn truncated_count(&self) -> u128 {
        self.stats().truncated_traces
    }
}

/// A plain list has no initial state to replay from, so a proper prefix
/// comes back with an empty terminal state.
impl TraceSource for [Trace] {
    fn visit(&self, f: &mut dyn FnMut(PathRef<'_>, &[Event]) -> ControlFlow<()>) {
        for (i, t) in self.iter().enumerate() {
            if f(PathRef::Index(i), &t.event_list()).is_break() {
                return;
            }
        }
    }

    fn evidence(&self, key: &PathKey, steps: usize) -> Result<Trace, ExploreError> {
        let PathKey::Index(i) = key else {
            unreachable!("lists use indices")
        };
        let t = &self[*i];
        if steps == t.steps.len() {
            return Ok(t.clone());
        }
        Ok(Trace {
            steps: t.steps[..steps].to_vec(),
            terminal: SystemState::new(Knowledge::new()),
            truncated: false,
        })
    }

    fn bounds(&self) -> Option<Bounds> {
        None
    }

    fn trace_count(&self) -> u128 {
        self.len() as u128
    }

    fn truncated_count(&self) -> u128 {
        self.iter().filter(|t| t.truncated).count() as u128
    }
}

// ---------------------------------------------------------------------------
// Predicates. Each returns the length of the shortest witnessing or
// violating prefix of `ev`.

fn named<'a>(ev: &'a [Event], label: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
    ev.iter().filter(move |e| &*e.label == label)
}

fn has(ev: &[Event], label: &str, args: &[&Term], pred: impl Fn(usize) -> bool) -> bool {
    named(ev, label).any(|e| {
        pred(e.time) && e.args.len() == args.len() && e.args.iter().zip(args).all(|(a, b)| a == *b)
    })
}

/// Some event with `label` in `labels` names `agent` first, at or before `upto`.
fn flagged(ev: &[Event], labels: &[&str], agent: &Term, upto: usize) -> bool {
    ev.iter()
        .any(|e| e.time <= upto && labels.contains(&&*e.label) && e.args.first() == Some(agent))
}

const REVEALS: &[&str] = &["RevealLtk", "RevealSKPSi"];
const COMPROMISE: &[&str] = &["VjSKPSiReveal", "VehicleCompromised"];
const VEHICLE_COMPROMISE: &[&str] = &["VehicleCompromised"];

fn g1(ev: &[Event]) -> Option<usize> {
    for acc in named(ev, "OsrConfAcceptedBy") {
        let [ra, vj, t] = &acc.args[..] else { continue };
        let first = |label: &str, args: &[&Term], after: usize, strict: bool| {
            named(ev, label)
                .filter(|e| {
                    if strict {
                        e.time > after
                    } else {
                        e.time >= after
                    }
                })
                .find(|e| e.args.iter().zip(args).all(|(a, b)| a == *b))
                .map(|e| e.time)
        };
        let Some(a) = named(ev, "Reported")
            .find(|e| e.args[..] == [vj.clone(), t.clone()])
            .map(|e| e.time)
        else {
            continue;
        };
        let Some(b) = first("OsrReqMsgSentTo", &[ra, vj, t], a, true) else {
            continue;
        };
        let Some(c) = first("OsrReqMsgRecvBy", &[vj, ra, t], b, true) else {
            continue;
        };
        let Some(d) = first("OsrConfSentBy", &[vj, ra, t], c, false) else {
            continue;
        };
        if d < acc.time {
            return Some(acc.time + 1);
        }
    }
    None
}

fn unmatched_accept(ev: &[Event], guard: &[&str]) -> Option<usize> {
    named(ev, "OsrConfAcceptedBy")
        .find(|e| {
            let [ra, vj, t] = &e.args[..] else {
                return false;
            };
            !has(ev, "OsrReqMsgRecvBy", &[vj, ra, t], |j| j < e.time)
                && !flagged(ev, guard, vj, e.time)
        })
        .map(|e| e.time + 1)
}

fn unmatched_commit(ev: &[Event], guard: &[&str]) -> Option<usize> {
    named(ev, "Commit")
        .find(|e| {
            let [a, b, m] = &e.args[..] else { return false };
            !has(ev, "Running", &[a, b, m], |j| j < e.time)
                && !flagged(ev, guard, a, e.time)
                && !flagged(ev, guard, b, e.time)
        })
        .map(|e| e.time + 1)
}

fn g2(ev: &[Event]) -> Option<usize> {
    unmatched_accept(ev, REVEALS)
}

fn g3(ev: &[Event]) -> Option<usize> {
    unmatched_commit(ev, REVEALS)
}

fn g4(ev: &[Event]) -> Option<usize> {
    match (
        unmatched_commit(ev, COMPROMISE),
        unmatched_accept(ev, COMPROMISE),
    ) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn g5(ev: &[Event]) -> Option<usize> {
    for conf in named(ev, "OsrConfSentBy") {
        let [vj, _ra, t1] = &conf.args[..] else {
            continue;
        };
        if flagged(ev, VEHICLE_COMPROMISE, vj, conf.time) {
            continue;
        }
        let changed = named(ev, "ChangePseudonymForVehicle").any(|c| {
            c.time < conf.time
                && c.args.first() == Some(vj)
                && c.args.get(1) == Some(t1)
                && has(ev, "Reported", &[vj, t1], |i| i < c.time)
        });
        if changed {
            return Some(conf.time + 1);
        }
    }
    None
}

fn g6(ev: &[Event]) -> Option<usize> {
    named(ev, "OsrConfSentBy")
        .find(|e| {
            let [vj, ra, t] = &e.args[..] else {
                return false;
            };
            !has(ev, "OsrReqMsgSentTo", &[ra, vj, t], |a| a < e.time)
                && !flagged(ev, VEHICLE_COMPROMISE, vj, e.time)
        })
        .map(|e| e.time + 1)
}

fn g7(ev: &[Event]) -> Option<usize> {
    unmatched_accept(ev, VEHICLE_COMPROMISE)
}

fn predicate(goal: GoalId) -> fn(&[Event]) -> Option<usize> {
    match goal {
        GoalId::G1 => g1,
        GoalId::G2 => g2,
        GoalId::G3 => g3,
        GoalId::G4 => g4,
        GoalId::G5 => g5,
        GoalId::G6 => g6,
        GoalId::G7 => g7,
    }
}

/// Whether the imperative checker accepts this event sequence: for
/// exists-trace goals, that it is a witness; for all-traces goals, that it
/// contains no violation in any prefix.
pub fn satisfied_by(goal: GoalId, events: &[Event]) -> bool {
    let found = predicate(goal)(events).is_some();
    match goal.mode() {
        Mode::ExistsTrace => found,
        Mode::AllTraces => !found,
    }
}

/// Lemma truth on one event sequence via the formula evaluator.
pub fn lemma_holds(goal: GoalId, events: &[Event]) -> bool {
    let f = formula::parse(goal.lemma()).expect("built-in lemmas parse");
    formula::holds(&f, events)
}

/// Checks one goal over every trace of `source`.
pub fn check(goal: GoalId, source: &(impl TraceSource + ?Sized)) -> Result<GoalVerdict, GoalError> {
    let pred = predicate(goal);
    let mut best: Option<(usize, PathKey)> = None;
    source.visit(&mut |path, events| {
        if let Some(len) = pred(events) {
            if best.as_ref().is_none_or(|(b, _)| len < *b) {
                best = Some((len, path.to_key()));
            }
        }
        ControlFlow::Continue(())
    });
    let (outcome, evidence) = match (goal.mode(), best) {
        (Mode::ExistsTrace, Some((len, key))) => {
            (Outcome::WitnessFound, Some(source.evidence(&key, len)?))
        }
        (Mode::ExistsTrace, None) => (Outcome::NoWitnessWithinBounds, None),
        (Mode::AllTraces, Some((len, key))) => (
            Outcome::CounterexampleFound,
            Some(source.evidence(&key, len)?),
        ),
        (Mode::AllTraces, None) => (Outcome::NoCounterexampleWithinBounds, None),
    };
    if let Some(t) = &evidence {
        let holds = lemma_holds(goal, &t.event_list());
        if holds != (outcome == Outcome::WitnessFound) {
            let expected = if outcome == Outcome::WitnessFound {
                "satisfy"
            } else {
                "violate"
            };
            return Err(GoalError::EvidenceMismatch { goal, expected });
        }
    }
    Ok(GoalVerdict {
        goal,
        mode: goal.mode(),
        outcome,
        evidence,
        bounds: source.bounds(),
        traces_checked: source.trace_count(),
        truncated_traces: source.truncated_count(),
        explanation: None,
    })
}

pub fn check_g1_executable(traces: &(impl TraceSource + ?Sized)) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G1, traces)
}

pub fn check_g2_weak_agreement(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G2, traces)
}

pub fn check_g3_noninjective_agreement(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G3, traces)
}

pub fn check_g4_noninjective_synchronisation(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G4, traces)
}

pub fn check_g5_revoke_after_change_exists(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G5, traces)
}

pub fn check_g6_osr_req_received_with_change_all(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G6, traces)
}

pub fn check_g7_revoke_with_change_all(
    traces: &(impl TraceSource + ?Sized),
) -> Result<GoalVerdict, GoalError> {
    check(GoalId::G7, traces)
}

/// For a G5 miss: take a trace where the vehicle was reported, changed
/// pseudonym and the RA sent its request, and ask why the vehicle's
/// receive rule cannot consume that request in the final state.
pub fn explain_g5(ts: &TraceSet) -> Result<Option<String>, GoalError> {
    let mut found: Option<Vec<EdgeRef>> = None;
    ts.for_each_path(|path, ev| {
        let hit = named(ev, "ChangePseudonymForVehicle").any(|c| {
            let (Some(vj), Some(t1)) = (c.args.first(), c.args.get(1)) else {
                return false;
            };
            has(ev, "Reported", &[vj, t1], |i| i < c.time)
                && named(ev, "OsrReqMsgSentTo")
                    .any(|s| s.args.get(1) == Some(vj) && s.args.get(2) == Some(t1))
        });
        if hit {
            found = Some(path.to_vec());
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    let Some(path) = found else { return Ok(None) };
    let trace = ts.materialize(&path)?;
    let Some(rule) = ts.spec().rule(OSR_REQ_RECV) else {
        return Ok(None);
    };
    let Some((send, msg)) = trace
        .steps
        .iter()
        .find(|s| s.rule_id == RA_OSR_REQ_SEND)
        .and_then(|s| s.outputs.first().map(|m| (s.index, m.clone())))
    else {
        return Ok(None);
    };
    let change = trace.steps.iter().find(|s| {
        s.events
            .iter()
            .any(|e| &*e.label == "ChangePseudonymForVehicle")
    });
    let change_at = change.map_or(0, |s| s.index);
    let consumed: Vec<String> = change.map_or_else(Vec::new, |s| {
        s.consumed
            .iter()
            .filter(|f| !f.is_persistent())
            .map(ToString::to_string)
            .collect()
    });
    let diagnosis = diagnose(&trace.terminal, rule, &msg);
    Ok(Some(format!(
        "in a {}-step trace the vehicle runs CHANGE_PSEUDONYM at step {change_at}, consuming {}, and the RA sends OSR-REQ at step {send}; \
         in the final state {OSR_REQ_RECV} is disabled for that request: {diagnosis}",
        trace.len(),
        consumed.join(", ")
    )))
}

/// Checks `goals` over an explored trace set.
pub fn run_goals(
    ts: &TraceSet,
    goals: &[GoalId],
    trace_limit: u128,
) -> Result<Vec<GoalVerdict>, GoalError> {
    let count = ts.stats().traces;
    if count > trace_limit {
        return Err(GoalError::TooManyTraces {
            count,
            limit: trace_limit,
        });
    }
    goals
        .iter()
        .map(|&g| {
            let mut v = check(g, ts)?;
            if g == GoalId::G5 && v.outcome == Outcome::NoWitnessWithinBounds {
                v.explanation = explain_g5(ts)?;
            }
            Ok(v)
        })
        .collect()
}

/// Traces beyond which per-trace checking is refused.
pub const DEFAULT_TRACE_LIMIT: u128 = 5_000_000;

/// Explores `spec` with one vehicle and checks every applicable goal.
pub fn run_all(spec: &ProtocolSpec, bounds: &Bounds) -> Result<Vec<GoalVerdict>, GoalError> {
    let init = initial_state(spec, 1)?;
    let ts = explore_with(spec, &init, bounds, &ExploreOptions::default())?;
    run_goals(
        &ts,
        &GoalId::applicable(spec.change_enabled),
        DEFAULT_TRACE_LIMIT,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn ev(label: &str, args: &[&str], time: usize) -> Event {
        Event {
            label: Arc::from(label),
            args: args.iter().map(|a| Term::public(a)).collect(),
            time,
        }
    }

    fn fixture(events: Vec<Event>) -> Vec<Trace> {
        vec![Trace::from_events(events)]
    }

    #[test]
    fn lemmas_parse() {
        for g in GoalId::ALL {
            formula::parse(g.lemma()).unwrap_or_else(|e| panic!("{g}: {e}"));
        }
    }

    #[test]
    fn empty_set_has_no_witness() {
        let none: Vec<Trace> = Vec::new();
        assert_eq!(
            check_g1_executable(&none[..]).unwrap().outcome,
            Outcome::NoWitnessWithinBounds
        );
        assert_eq!(
            check_g2_weak_agreement(&none[..]).unwrap().outcome,
            Outcome::NoCounterexampleWithinBounds
        );
    }

    #[test]
    fn lone_confirmation_violates_g6() {
        let t = fixture(vec![ev("OsrConfSentBy", &["V1", "RA", "t"], 0)]);
        let v = check_g6_osr_req_received_with_change_all(&t[..]).unwrap();
        assert_eq!(v.outcome, Outcome::CounterexampleFound);
        assert_eq!(v.evidence.unwrap().len(), 1);
    }

    #[test]
    fn matched_accepts_satisfy_g7() {
        let t = fixture(vec![
            ev("OsrReqMsgRecvBy", &["V1", "RA", "t"], 0),
            ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 1),
            ev("OsrReqMsgRecvBy", &["V1", "RA", "u"], 2),
            ev("OsrConfAcceptedBy", &["RA", "V1", "u"], 3),
        ]);
        assert_eq!(
            check_g7_revoke_with_change_all(&t[..]).unwrap().outcome,
            Outcome::NoCounterexampleWithinBounds
        );
    }

    #[test]
    fn late_reveal_does_not_excuse_an_earlier_accept() {
        let t = fixture(vec![
            ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 0),
            ev("RevealLtk", &["V1"], 1),
        ]);
        let v = check_g2_weak_agreement(&t[..]).unwrap();
        assert_eq!(v.outcome, Outcome::CounterexampleFound);
        assert_eq!(v.evidence.unwrap().len(), 1);
        let early = fixture(vec![
            ev("RevealLtk", &["V1"], 0),
            ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 1),
        ]);
        assert_eq!(
            check_g2_weak_agreement(&early[..]).unwrap().outcome,
            Outcome::NoCounterexampleWithinBounds
        );
    }

    #[test]
    fn g1_requires_the_full_chain_in_order() {
        let good = vec![
            ev("Reported", &["V1", "t"], 0),
            ev("OsrReqMsgSentTo", &["RA", "V1", "t"], 1),
            ev("OsrReqMsgRecvBy", &["V1", "RA", "t"], 2),
            ev("OsrConfSentBy", &["V1", "RA", "t"], 2),
            ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 3),
        ];
        assert_eq!(
            check_g1_executable(&fixture(good.clone())[..])
                .unwrap()
                .outcome,
            Outcome::WitnessFound
        );
        let mut bad = good;
        bad[1].time = 0;
        bad[0].time = 1;
        bad.swap(0, 1);
        assert_eq!(
            check_g1_executable(&fixture(bad)[..]).unwrap().outcome,
            Outcome::NoWitnessWithinBounds
        );
    }

    #[test]
    fn g5_needs_change_between_report_and_confirmation() {
        let w = vec![
            ev("Reported", &["V1", "t1"], 0),
            ev("ChangePseudonymForVehicle", &["V1", "t1", "t2"], 1),
            ev("OsrConfSentBy", &["V1", "RA", "t1"], 2),
        ];
        assert!(satisfied_by(GoalId::G5, &w));
        assert!(lemma_holds(GoalId::G5, &w));
        let mut compromised = w.clone();
        compromised.push(ev("VehicleCompromised", &["V1", "k"], 3));
        assert!(!lemma_holds(GoalId::G5, &compromised));
    }

    #[test]
    fn goal_names_round_trip() {
        for g in GoalId::ALL {
            assert_eq!(g.as_str().parse::<GoalId>().unwrap(), g);
        }
        assert!("g8".parse::<GoalId>().is_err());
        assert_eq!(
            GoalId::applicable(false),
            vec![GoalId::G1, GoalId::G2, GoalId::G3, GoalId::G4]
        );
    }
}
