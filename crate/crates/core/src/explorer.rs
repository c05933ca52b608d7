//! Bounded exhaustive exploration of a protocol's transition system.
//!
//! States are identified up to renaming of fresh names. The explored
//! structure is a layered graph: a node is a canonical state at a given
//! depth, an edge is one rule instance. Every root-to-leaf path is a
//! maximal trace within the bounds.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::adversary::Knowledge;
use crate::protocols::{leaked_secrets, ProtocolSpec};
use crate::state::{
    enabled_instances, fire, BudgetClass, BudgetKey, Event, Fact, Instance, RewriteError, Rule,
    SystemState,
};
use crate::term::{FreshName, Substitution, Symbol, Term, TermKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    pub max_steps: usize,
    /// CHANGE_PSEUDONYM firings per vehicle.
    pub max_changes: u32,
    pub adversary_fresh_budget: u32,
    pub synthesis_depth: usize,
    /// REPORT firings.
    pub max_sessions: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_steps: 14,
            max_changes: 1,
            adversary_fresh_budget: 1,
            synthesis_depth: 4,
            max_sessions: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub workers: usize,
    /// Merge isomorphic states. Off turns the graph into a tree.
    pub dedup: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            workers: 1,
            dedup: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("replay diverged at step {step}: {reason}")]
    Replay { step: usize, reason: String },
}

// ---------------------------------------------------------------------------
// Canonical forms

/// SHA-256 of a state's canonical text.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone)]
pub struct Canonical {
    pub digest: Digest,
    pub text: String,
    /// The state with fresh names renumbered `0..n` in canonical order.
    pub state: SystemState,
    /// Concrete id to canonical id.
    pub renaming: BTreeMap<u32, u32>,
    /// False when tie-breaking hit the permutation cap; the digest is then
    /// still sound but isomorphic states may get different digests.
    pub exhaustive: bool,
}

/// Orderings tried per state when colour refinement leaves ties.
pub const PERMUTATION_CAP: usize = 5040;

enum Item<'a> {
    Fact(&'a Fact, u32),
    Observed(&'a Term),
    Basis(&'a Term),
    Generated(&'a FreshName),
    Budget(&'a BudgetKey, u32),
}

type Namer<'a> = dyn Fn(&FreshName, &mut String) + 'a;

fn write_term(t: &Term, out: &mut String, nm: &Namer<'_>) {
    match t.kind() {
        TermKind::Public(l) => {
            out.push('\'');
            out.push_str(l);
            out.push('\'');
        }
        TermKind::Fresh(n) => nm(n, out),
        TermKind::Var(v) => {
            let _ = write!(out, "{v}");
        }
        TermKind::App(Symbol::True, _) => out.push_str("true"),
        TermKind::App(s, args) => {
            out.push('(');
            out.push_str(s.name());
            for a in args {
                out.push(' ');
                write_term(a, out, nm);
            }
            out.push(')');
        }
    }
}

fn write_item(item: &Item<'_>, out: &mut String, nm: &Namer<'_>) {
    match item {
        Item::Fact(f, n) => {
            out.push_str(if f.is_persistent() { "F !" } else { "F " });
            out.push_str(&f.name);
            out.push('(');
            for (i, a) in f.args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(a, out, nm);
            }
            let _ = write!(out, ")x{n}");
        }
        Item::Observed(t) => {
            out.push_str("O ");
            write_term(t, out, nm);
        }
        Item::Basis(t) => {
            out.push_str("B ");
            write_term(t, out, nm);
        }
        Item::Generated(n) => {
            out.push_str("G ");
            nm(n, out);
        }
        Item::Budget(k, n) => {
            let _ = write!(out, "U {:?}[", k.class);
            for (i, t) in k.key.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(t, out, nm);
            }
            let _ = write!(out, "]={n}");
        }
    }
}

fn items(state: &SystemState) -> Vec<Item<'_>> {
    let mut v: Vec<Item<'_>> = state.facts().map(|(f, n)| Item::Fact(f, n)).collect();
    v.extend(state.knowledge.observed().iter().map(Item::Observed));
    v.extend(state.knowledge.basis().iter().map(Item::Basis));
    v.extend(state.knowledge.generated().iter().map(Item::Generated));
    v.extend(state.budgets().iter().map(|(k, n)| Item::Budget(k, *n)));
    v
}

fn item_names(item: &Item<'_>) -> Vec<u32> {
    let mut out = Vec::new();
    match item {
        Item::Fact(f, _) => f.args.iter().for_each(|a| a.fresh_names(&mut out)),
        Item::Observed(t) | Item::Basis(t) => t.fresh_names(&mut out),
        Item::Generated(n) => out.push((*n).clone()),
        Item::Budget(k, _) => k.key.iter().for_each(|t| t.fresh_names(&mut out)),
    }
    let mut ids: Vec<u32> = out.into_iter().map(|n| n.id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn distinct(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn render(items: &[Item<'_>], fresh_budget: u32, nm: &Namer<'_>) -> String {
    let mut lines: Vec<String> = items
        .iter()
        .map(|it| {
            let mut s = String::new();
            write_item(it, &mut s, nm);
            s
        })
        .collect();
    lines.sort();
    let mut text = lines.join("\n");
    let _ = write!(text, "\nfresh_budget={fresh_budget}");
    text
}

/// Canonical form of a state modulo fresh-name renaming. Names keep their
/// origin and hint; only ids change. Time and the fresh-name counter are
/// not part of the digest.
pub fn canonicalize(state: &SystemState) -> Canonical {
    let names: Vec<FreshName> = state.fresh_names().into_iter().collect();
    let index: HashMap<u32, usize> = names.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let all = items(state);
    let occurs: Vec<Vec<usize>> = all
        .iter()
        .map(|it| item_names(it).iter().map(|id| index[id]).collect())
        .collect();

    let mut colors = ranks(
        &names
            .iter()
            .map(|n| (n.origin, n.hint.clone()))
            .collect::<Vec<_>>(),
    );
    loop {
        let classes = distinct(&colors);
        if classes == names.len() {
            break;
        }
        let mut size = vec![0usize; names.len()];
        colors.iter().for_each(|c| size[*c] += 1);
        let mut sigs: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for (it, occ) in all.iter().zip(&occurs) {
            for &x in occ {
                if size[colors[x]] < 2 {
                    continue;
                }
                let me = names[x].id;
                let nm = |n: &FreshName, out: &mut String| {
                    if n.id == me {
                        out.push('@');
                    } else {
                        let _ = write!(out, "c{}", colors[index[&n.id]]);
                    }
                };
                let mut s = String::new();
                write_item(it, &mut s, &nm);
                sigs[x].push(s);
            }
        }
        sigs.iter_mut().for_each(|s| s.sort());
        let keys: Vec<(usize, Vec<String>)> = colors.iter().copied().zip(sigs).collect();
        let next = ranks(&keys);
        if distinct(&next) == classes {
            break;
        }
        colors = next;
    }

    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in colors.iter().enumerate() {
        classes.entry(*c).or_default().push(i);
    }
    let classes: Vec<Vec<usize>> = classes.into_values().collect();
    let mut total: usize = 1;
    for c in &classes {
        total = total.saturating_mul((1..=c.len()).product::<usize>());
    }
    let exhaustive = total <= PERMUTATION_CAP;
    let choices: Vec<Vec<Vec<usize>>> = classes
        .iter()
        .map(|c| {
            if exhaustive {
                permutations(c)
            } else {
                vec![c.clone()]
            }
        })
        .collect();

    let fresh_budget = state.knowledge.fresh_budget();
    let mut best: Option<(String, Vec<u32>)> = None;
    let mut pick = vec![0usize; choices.len()];
    loop {
        // position -> name index
        let order: Vec<usize> = choices
            .iter()
            .zip(&pick)
            .flat_map(|(c, p)| c[*p].iter().copied())
            .collect();
        let mut canon_id = vec![0u32; names.len()];
        for (pos, &i) in order.iter().enumerate() {
            canon_id[i] = pos as u32;
        }
        let nm = |n: &FreshName, out: &mut String| {
            let _ = write!(out, "{}", n.with_id(canon_id[index[&n.id]]));
        };
        let text = render(&all, fresh_budget, &nm);
        if best.as_ref().is_none_or(|(b, _)| text < *b) {
            best = Some((text, canon_id));
        }
        // odometer over the per-class permutations
        let mut k = 0;
        loop {
            if k == pick.len() {
                break;
            }
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    let (text, canon_id) = best.expect("at least one ordering");
    let renaming: BTreeMap<u32, u32> = names
        .iter()
        .zip(&canon_id)
        .map(|(n, c)| (n.id, *c))
        .collect();
    let canon_state = state.map_fresh(
        &mut |n: &FreshName| n.with_id(renaming[&n.id]),
        names.len() as u32,
    );
    let digest = Digest(Sha256::digest(text.as_bytes()).into());
    Canonical {
        digest,
        text,
        state: canon_state,
        renaming,
        exhaustive,
    }
}

// ---------------------------------------------------------------------------
// Traces

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub index: usize,
    pub rule_id: String,
    /// The agent running the rule, when the rule names one.
    pub actor: Option<Term>,
    pub instance: Instance,
    /// Instance substitution plus the step's own fresh names.
    pub subst: Substitution,
    pub inputs: Vec<crate::state::Input>,
    pub adversary_fresh: Vec<FreshName>,
    pub fresh: Vec<FreshName>,
    pub consumed: Vec<Fact>,
    pub produced: Vec<Fact>,
    pub outputs: Vec<Term>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub terminal: SystemState,
    /// The bound on steps cut this trace short.
    pub truncated: bool,
}

impl Trace {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.steps.iter().flat_map(|s| s.events.iter())
    }

    pub fn event_list(&self) -> Vec<Event> {
        self.events().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// A trace carrying only events, one step per distinct time. For
    /// checking goal predicates against hand-written fixtures.
    pub fn from_events(events: Vec<Event>) -> Trace {
        let mut steps: Vec<Step> = Vec::new();
        for e in events {
            if steps.last().is_none_or(|s| s.index != e.time) {
                let instance = Instance {
                    rule_id: "fixture".into(),
                    subst: Substitution::new(),
                    consumed: Vec::new(),
                    inputs: Vec::new(),
                    adversary_fresh: Vec::new(),
                };
                steps.push(Step {
                    index: e.time,
                    rule_id: "fixture".into(),
                    actor: None,
                    instance,
                    subst: Substitution::new(),
                    inputs: Vec::new(),
                    adversary_fresh: Vec::new(),
                    fresh: Vec::new(),
                    consumed: Vec::new(),
                    produced: Vec::new(),
                    outputs: Vec::new(),
                    events: Vec::new(),
                });
            }
            steps.last_mut().expect("pushed above").events.push(e);
        }
        Trace {
            steps,
            terminal: SystemState::new(Knowledge::new()),
            truncated: false,
        }
    }

    /// The first `len` steps, replayed from `init` to recover the terminal state.
    pub fn prefix(
        &self,
        spec: &ProtocolSpec,
        init: &SystemState,
        len: usize,
    ) -> Result<Trace, ExploreError> {
        let mut t = Trace {
            steps: self.steps[..len].to_vec(),
            terminal: init.clone(),
            truncated: false,
        };
        if len == self.steps.len() {
            t.terminal = self.terminal.clone();
            t.truncated = self.truncated;
        } else if t.steps.iter().all(|s| s.rule_id != "fixture") {
            t.terminal = t.replay(spec, init)?;
        } else {
            t.terminal = self.terminal.clone();
        }
        Ok(t)
    }

    /// Re-fires every step from `init`, checking that each produces the
    /// recorded events and fresh names. Returns the final state.
    pub fn replay(
        &self,
        spec: &ProtocolSpec,
        init: &SystemState,
    ) -> Result<SystemState, ExploreError> {
        let mut state = init.clone();
        for (i, step) in self.steps.iter().enumerate() {
            if step.index != i {
                return Err(ExploreError::Replay {
                    step: i,
                    reason: format!("step numbered {}", step.index),
                });
            }
            let rule = spec
                .rule(&step.rule_id)
                .ok_or_else(|| ExploreError::UnknownRule(step.rule_id.clone()))?;
            let firing = fire(&state, rule, &step.instance).map_err(|e| ExploreError::Replay {
                step: i,
                reason: e.to_string(),
            })?;
            if firing.events != step.events || firing.fresh != step.fresh {
                return Err(ExploreError::Replay {
                    step: i,
                    reason: "events differ from the recording".into(),
                });
            }
            state = firing.state;
        }
        Ok(state)
    }
}

// ---------------------------------------------------------------------------
// Exploration graph

#[derive(Debug, Clone)]
struct Edge {
    instance: Instance,
    /// Events in the source's canonical naming; new names continue after
    /// the source's last id.
    events: Vec<Event>,
    target: usize,
    /// Canonical id in the target to the name in the source naming.
    inverse: Vec<FreshName>,
    new_names: u32,
}

#[derive(Debug, Clone)]
struct Node {
    depth: usize,
    edges: Vec<Edge>,
    truncated: bool,
    leaked: Vec<Term>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: usize,
    pub edges: usize,
    /// Maximal traces, i.e. root-to-leaf paths.
    pub traces: u128,
    pub truncated_traces: u128,
    pub max_depth: usize,
    /// Successors that landed on an already known state.
    pub merged: usize,
    /// States whose canonical form hit the permutation cap.
    pub inexact_canonical: usize,
}

/// Edge position: (node index, edge index within the node).
pub type EdgeRef = (u32, u32);

/// All bounded executions, shared as a graph.
#[derive(Debug, Clone)]
pub struct TraceSet {
    spec: ProtocolSpec,
    initial: SystemState,
    bounds: Bounds,
    root_names: Vec<FreshName>,
    nodes: Vec<Node>,
    stats: Stats,
}

struct Successor {
    instance: Instance,
    events: Vec<Event>,
    canonical: Canonical,
    inverse: Vec<FreshName>,
    new_names: u32,
}

struct Expansion {
    successors: Vec<Successor>,
    leaked: Vec<Term>,
}

fn within_budget(bounds: &Bounds, state: &SystemState, rule: &Rule, inst: &Instance) -> bool {
    match &rule.budget {
        None => true,
        Some(b) => {
            let limit = match b.class {
                BudgetClass::Sessions => bounds.max_sessions,
                BudgetClass::Changes => bounds.max_changes,
                BudgetClass::Reveals => 1,
            };
            state.budget_used(rule, &inst.subst) < limit
        }
    }
}

fn instances(spec: &ProtocolSpec, bounds: &Bounds, state: &SystemState) -> Vec<Instance> {
    spec.rules
        .iter()
        .flat_map(|r| {
            enabled_instances(state, r, bounds.synthesis_depth)
                .into_iter()
                .filter(move |i| within_budget(bounds, state, r, i))
        })
        .collect()
}

fn expand(
    spec: &ProtocolSpec,
    bounds: &Bounds,
    state: &SystemState,
    at_limit: bool,
) -> Result<(Expansion, bool), RewriteError> {
    let leaked = leaked_secrets(state);
    let all = instances(spec, bounds, state);
    if at_limit {
        return Ok((
            Expansion {
                successors: Vec::new(),
                leaked,
            },
            !all.is_empty(),
        ));
    }
    let mut successors = Vec::with_capacity(all.len());
    for inst in all {
        let rule = spec.rule(&inst.rule_id).expect("instance of a known rule");
        let firing = fire(state, rule, &inst)?;
        let new_names = firing.state.next_fresh() - state.next_fresh();
        let canonical = canonicalize(&firing.state);
        let concrete: Vec<FreshName> = firing.state.fresh_names().into_iter().collect();
        let mut inverse = vec![None; concrete.len()];
        for n in concrete {
            let at = canonical.renaming[&n.id] as usize;
            inverse[at] = Some(n);
        }
        let inverse = inverse
            .into_iter()
            .map(|n| n.expect("renaming is a bijection"))
            .collect();
        successors.push(Successor {
            instance: inst,
            events: firing.events,
            canonical,
            inverse,
            new_names,
        });
    }
    Ok((Expansion { successors, leaked }, false))
}

/// Explores with default options.
pub fn explore(
    spec: &ProtocolSpec,
    init: &SystemState,
    bounds: &Bounds,
) -> Result<TraceSet, ExploreError> {
    explore_with(spec, init, bounds, &ExploreOptions::default())
}

pub fn explore_with(
    spec: &ProtocolSpec,
    init: &SystemState,
    bounds: &Bounds,
    opts: &ExploreOptions,
) -> Result<TraceSet, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| ExploreError::Pool(e.to_string()))?;
    let mut initial = init.clone();
    initial.knowledge = initial
        .knowledge
        .clone()
        .with_fresh_budget(bounds.adversary_fresh_budget);
    let root = canonicalize(&initial);
    let mut root_names = vec![None; root.renaming.len()];
    for n in initial.fresh_names() {
        let at = root.renaming[&n.id] as usize;
        root_names[at] = Some(n);
    }
    let root_names: Vec<FreshName> = root_names
        .into_iter()
        .map(|n| n.expect("bijection"))
        .collect();

    let mut nodes = vec![Node {
        depth: 0,
        edges: Vec::new(),
        truncated: false,
        leaked: Vec::new(),
    }];
    let mut stats = Stats::default();
    let mut layer: Vec<(usize, SystemState)> = vec![(0, root.state)];
    let mut depth = 0;
    while !layer.is_empty() {
        let at_limit = depth >= bounds.max_steps;
        let results: Vec<Result<(Expansion, bool), RewriteError>> = pool.install(|| {
            layer
                .par_iter()
                .map(|(_, s)| expand(spec, bounds, s, at_limit))
                .collect()
        });
        let mut index: HashMap<Digest, usize> = HashMap::new();
        let mut next = Vec::new();
        for ((id, _), result) in layer.iter().zip(results) {
            let (exp, truncated) = result?;
            nodes[*id].leaked = exp.leaked;
            nodes[*id].truncated = truncated;
            for s in exp.successors {
                stats.inexact_canonical += usize::from(!s.canonical.exhaustive);
                let target = match opts
                    .dedup
                    .then(|| index.get(&s.canonical.digest).copied())
                    .flatten()
                {
                    Some(t) => {
                        stats.merged += 1;
                        t
                    }
                    None => {
                        let t = nodes.len();
                        nodes.push(Node {
                            depth: depth + 1,
                            edges: Vec::new(),
                            truncated: false,
                            leaked: Vec::new(),
                        });
                        index.insert(s.canonical.digest, t);
                        next.push((t, s.canonical.state));
                        t
                    }
                };
                nodes[*id].edges.push(Edge {
                    instance: s.instance,
                    events: s.events,
                    target,
                    inverse: s.inverse,
                    new_names: s.new_names,
                });
            }
        }
        layer = next;
        depth += 1;
    }

    stats.nodes = nodes.len();
    stats.edges = nodes.iter().map(|n| n.edges.len()).sum();
    stats.max_depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    // Paths to leaves, counted bottom-up; node ids grow with depth.
    let mut paths = vec![0u128; nodes.len()];
    let mut cut = vec![0u128; nodes.len()];
    for i in (0..nodes.len()).rev() {
        if nodes[i].edges.is_empty() {
            paths[i] = 1;
            cut[i] = u128::from(nodes[i].truncated);
        } else {
            for e in &nodes[i].edges {
                paths[i] = paths[i].saturating_add(paths[e.target]);
                cut[i] = cut[i].saturating_add(cut[e.target]);
            }
        }
    }
    stats.traces = paths[0];
    stats.truncated_traces = cut[0];
    Ok(TraceSet {
        spec: spec.clone(),
        initial,
        bounds: *bounds,
        root_names,
        nodes,
        stats,
    })
}

struct Frame {
    node: usize,
    next: usize,
    mu: Vec<FreshName>,
    trace_next: u32,
    events_len: usize,
}

fn translate<'a>(mu: &'a [FreshName], trace_next: u32) -> impl FnMut(&FreshName) -> FreshName + 'a {
    let n = mu.len() as u32;
    move |name: &FreshName| {
        if name.id < n {
            mu[name.id as usize].clone()
        } else {
            name.with_id(trace_next + (name.id - n))
        }
    }
}

impl TraceSet {
    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    /// The initial state with the adversary's fresh budget applied.
    pub fn initial_state(&self) -> &SystemState {
        &self.initial
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    /// Visits every maximal trace in a fixed depth-first order, passing the
    /// edge path and the events with fresh names as a replay would allocate
    /// them. Stops early when `f` breaks.
    pub fn for_each_path(&self, mut f: impl FnMut(&[EdgeRef], &[Event]) -> ControlFlow<()>) {
        let mut events: Vec<Event> = Vec::new();
        let mut path: Vec<EdgeRef> = Vec::new();
        let mut stack = vec![Frame {
            node: 0,
            next: 0,
            mu: self.root_names.clone(),
            trace_next: self.initial.next_fresh(),
            events_len: 0,
        }];
        while let Some(top) = stack.last_mut() {
            let node = &self.nodes[top.node];
            if node.edges.is_empty() {
                if f(&path, &events).is_break() {
                    return;
                }
            } else if top.next < node.edges.len() {
                let e = &node.edges[top.next];
                path.push((top.node as u32, top.next as u32));
                top.next += 1;
                let events_len = events.len();
                let mu = {
                    let mut tr = translate(&top.mu, top.trace_next);
                    events.extend(e.events.iter().map(|ev| ev.map_fresh(&mut tr)));
                    e.inverse.iter().map(&mut tr).collect()
                };
                let trace_next = top.trace_next + e.new_names;
                stack.push(Frame {
                    node: e.target,
                    next: 0,
                    mu,
                    trace_next,
                    events_len,
                });
                continue;
            }
            let done = stack.pop().expect("non-empty");
            events.truncate(done.events_len);
            if !stack.is_empty() {
                path.pop();
            }
        }
    }

    /// Replays a path into a full trace.
    pub fn materialize(&self, path: &[EdgeRef]) -> Result<Trace, ExploreError> {
        let mut state = self.initial.clone();
        let mut mu = self.root_names.clone();
        let mut trace_next = self.initial.next_fresh();
        let mut steps = Vec::with_capacity(path.len());
        let mut node = 0usize;
        for (i, &(n, k)) in path.iter().enumerate() {
            if n as usize != node {
                return Err(ExploreError::Replay {
                    step: i,
                    reason: "path is not connected".into(),
                });
            }
            let e = &self.nodes[node].edges[k as usize];
            let (inst, expected, next_mu) = {
                let mut tr = translate(&mu, trace_next);
                let inst = e.instance.map_fresh(&mut tr);
                let expected: Vec<Event> =
                    e.events.iter().map(|ev| ev.map_fresh(&mut tr)).collect();
                let next_mu: Vec<FreshName> = e.inverse.iter().map(&mut tr).collect();
                (inst, expected, next_mu)
            };
            let rule = self
                .spec
                .rule(&inst.rule_id)
                .ok_or_else(|| ExploreError::UnknownRule(inst.rule_id.clone()))?;
            let firing = fire(&state, rule, &inst).map_err(|err| ExploreError::Replay {
                step: i,
                reason: err.to_string(),
            })?;
            if firing.events != expected {
                return Err(ExploreError::Replay {
                    step: i,
                    reason: "events differ from the explored edge".into(),
                });
            }
            mu = next_mu;
            trace_next += e.new_names;
            steps.push(Step {
                index: i,
                rule_id: inst.rule_id.clone(),
                actor: rule
                    .actor
                    .as_ref()
                    .and_then(|v| firing.subst.get(v).cloned()),
                subst: firing.subst,
                inputs: inst.inputs.clone(),
                adversary_fresh: inst.adversary_fresh.clone(),
                fresh: firing.fresh,
                consumed: firing.consumed,
                produced: firing.produced,
                outputs: firing.outputs,
                events: firing.events,
                instance: inst,
            });
            state = firing.state;
            node = e.target;
        }
        let truncated = self.nodes[node].edges.is_empty() && self.nodes[node].truncated;
        Ok(Trace {
            steps,
            terminal: state,
            truncated,
        })
    }

    /// Every maximal trace, materialized. Only sensible for small bounds.
    pub fn traces(&self) -> Result<Vec<Trace>, ExploreError> {
        let mut paths = Vec::new();
        self.for_each_path(|p, _| {
            paths.push(p.to_vec());
            ControlFlow::Continue(())
        });
        paths.iter().map(|p| self.materialize(p)).collect()
    }

    /// Secrets derivable by the adversary in some explored state, with the
    /// depth of the first state where each appears.
    pub fn secrecy_violations(&self) -> Vec<(usize, Term)> {
        self.nodes
            .iter()
            .flat_map(|n| n.leaked.iter().map(move |t| (n.depth, t.clone())))
            .collect()
    }
}
