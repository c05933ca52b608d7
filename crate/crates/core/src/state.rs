//! Facts, labelled rules and the single-step transition relation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::adversary::{Derivation, Knowledge};
use crate::term::{
    match_into, normalize, FreshName, Origin, Sort, Substitution, Term, TermError, TermKind, Var,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("instance of {rule} is stale: {reason}")]
    StaleInstance { rule: String, reason: String },
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    Linear,
    Persistent,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub name: Arc<str>,
    pub args: Vec<Term>,
    pub persistence: Persistence,
}

impl Fact {
    pub fn linear(name: &str, args: Vec<Term>) -> Fact {
        Fact {
            name: Arc::from(name),
            args,
            persistence: Persistence::Linear,
        }
    }

    pub fn persistent(name: &str, args: Vec<Term>) -> Fact {
        Fact {
            name: Arc::from(name),
            args,
            persistence: Persistence::Persistent,
        }
    }

    pub fn is_persistent(&self) -> bool {
        self.persistence == Persistence::Persistent
    }

    fn instantiate(&self, s: &Substitution) -> Result<Fact, TermError> {
        Ok(Fact {
            name: self.name.clone(),
            args: self
                .args
                .iter()
                .map(|a| s.apply(a))
                .collect::<Result<_, _>>()?,
            persistence: self.persistence,
        })
    }

    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Fact {
        Fact {
            name: self.name.clone(),
            args: self.args.iter().map(|a| a.map_fresh(f)).collect(),
            persistence: self.persistence,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_persistent() {
            f.write_str("!")?;
        }
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An action label, either as a pattern in a rule or instantiated.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub label: Arc<str>,
    pub args: Vec<Term>,
}

impl Action {
    pub fn new(label: &str, args: Vec<Term>) -> Action {
        Action {
            label: Arc::from(label),
            args,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.label)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An emitted action stamped with the index of the step that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub label: Arc<str>,
    pub args: Vec<Term>,
    pub time: usize,
}

impl Event {
    pub fn action(&self) -> Action {
        Action {
            label: self.label.clone(),
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.action(), self.time)
    }
}

/// `normalize(lhs) ` must match `rhs`. A ground `rhs` makes this a plain
/// equality check; variables in `rhs` get bound, as in a decryption that
/// recovers the plaintext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetClass {
    Sessions,
    Changes,
    Reveals,
}

/// Caps how often a rule fires per valuation of `key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    pub class: BudgetClass,
    pub key: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    /// Variable naming the agent that executes the rule.
    pub actor: Option<Var>,
    pub premises: Vec<Fact>,
    pub fresh_vars: Vec<Var>,
    pub guards: Vec<Guard>,
    pub events: Vec<Action>,
    pub conclusions: Vec<Fact>,
    pub network_in: Vec<Term>,
    pub network_out: Vec<Term>,
    pub budget: Option<Budget>,
}

impl Rule {
    pub fn new(id: &str) -> Rule {
        Rule {
            id: id.to_string(),
            actor: None,
            premises: Vec::new(),
            fresh_vars: Vec::new(),
            guards: Vec::new(),
            events: Vec::new(),
            conclusions: Vec::new(),
            network_in: Vec::new(),
            network_out: Vec::new(),
            budget: None,
        }
    }

    /// Checks that every variable used on the right is bound on the left.
    pub fn unbound_variables(&self) -> Vec<Var> {
        let mut bound = Vec::new();
        for p in &self.premises {
            p.args.iter().for_each(|a| a.vars(&mut bound));
        }
        self.network_in.iter().for_each(|t| t.vars(&mut bound));
        bound.extend(self.fresh_vars.iter().cloned());
        let mut missing = Vec::new();
        for g in &self.guards {
            let mut lhs = Vec::new();
            g.lhs.vars(&mut lhs);
            missing.extend(lhs.into_iter().filter(|v| !bound.contains(v)));
            g.rhs.vars(&mut bound);
        }
        let mut used = Vec::new();
        for a in &self.events {
            a.args.iter().for_each(|t| t.vars(&mut used));
        }
        for c in &self.conclusions {
            c.args.iter().for_each(|t| t.vars(&mut used));
        }
        self.network_out.iter().for_each(|t| t.vars(&mut used));
        if let Some(b) = &self.budget {
            used.extend(b.key.iter().cloned());
        }
        missing.extend(used.into_iter().filter(|v| !bound.contains(v)));
        missing.dedup();
        missing
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BudgetKey {
    pub class: BudgetClass,
    pub key: Vec<Term>,
}

/// Multiset of facts plus the adversary's knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub(crate) facts: BTreeMap<Fact, u32>,
    pub knowledge: Knowledge,
    pub(crate) next_fresh: u32,
    pub(crate) time: usize,
    pub(crate) budgets: BTreeMap<BudgetKey, u32>,
}

impl SystemState {
    pub fn new(knowledge: Knowledge) -> Self {
        SystemState {
            facts: BTreeMap::new(),
            knowledge,
            next_fresh: 0,
            time: 0,
            budgets: BTreeMap::new(),
        }
    }

    pub fn add_fact(&mut self, fact: Fact) {
        let persistent = fact.is_persistent();
        let n = self.facts.entry(fact).or_insert(0);
        *n = if persistent { 1 } else { *n + 1 };
    }

    pub fn facts(&self) -> impl Iterator<Item = (&Fact, u32)> {
        self.facts.iter().map(|(f, n)| (f, *n))
    }

    pub fn count(&self, fact: &Fact) -> u32 {
        self.facts.get(fact).copied().unwrap_or(0)
    }

    pub fn facts_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.keys().filter(move |f| &*f.name == name)
    }

    pub fn next_fresh(&self) -> u32 {
        self.next_fresh
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn budgets(&self) -> &BTreeMap<BudgetKey, u32> {
        &self.budgets
    }

    pub fn budget_used(&self, rule: &Rule, subst: &Substitution) -> u32 {
        match &rule.budget {
            None => 0,
            Some(b) => self
                .budgets
                .get(&budget_key(b, subst))
                .copied()
                .unwrap_or(0),
        }
    }

    /// Every fresh name occurring anywhere in the state.
    pub fn fresh_names(&self) -> BTreeSet<FreshName> {
        let mut out = Vec::new();
        for f in self.facts.keys() {
            f.args.iter().for_each(|a| a.fresh_names(&mut out));
        }
        for t in self
            .knowledge
            .observed()
            .iter()
            .chain(self.knowledge.basis())
        {
            t.fresh_names(&mut out);
        }
        out.extend(self.knowledge.generated().iter().cloned());
        for k in self.budgets.keys() {
            k.key.iter().for_each(|t| t.fresh_names(&mut out));
        }
        out.into_iter().collect()
    }

    /// Renames fresh names; used by canonicalization and trace translation.
    pub fn map_fresh(
        &self,
        f: &mut impl FnMut(&FreshName) -> FreshName,
        next_fresh: u32,
    ) -> SystemState {
        let mut facts = BTreeMap::new();
        for (fact, n) in &self.facts {
            facts.insert(fact.map_fresh(f), *n);
        }
        SystemState {
            facts,
            knowledge: self.knowledge.map_fresh(f),
            next_fresh,
            time: self.time,
            budgets: self
                .budgets
                .iter()
                .map(|(k, n)| {
                    (
                        BudgetKey {
                            class: k.class,
                            key: k.key.iter().map(|t| t.map_fresh(f)).collect(),
                        },
                        *n,
                    )
                })
                .collect(),
        }
    }
}

fn budget_key(b: &Budget, subst: &Substitution) -> BudgetKey {
    BudgetKey {
        class: b.class,
        key: b
            .key
            .iter()
            .map(|v| {
                subst
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Term::var(v.clone()))
            })
            .collect(),
    }
}

/// A network input together with how the adversary built it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Input {
    pub term: Term,
    pub derivation: Derivation,
}

impl Input {
    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Input {
        Input {
            term: self.term.map_fresh(f),
            derivation: self.derivation.map_fresh(f),
        }
    }
}

/// A complete instantiation of a rule in a given state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub rule_id: String,
    pub subst: Substitution,
    pub consumed: Vec<Fact>,
    pub inputs: Vec<Input>,
    pub adversary_fresh: Vec<FreshName>,
}

impl Instance {
    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Instance {
        Instance {
            rule_id: self.rule_id.clone(),
            subst: self.subst.map_fresh(f),
            consumed: self.consumed.iter().map(|c| c.map_fresh(f)).collect(),
            inputs: self.inputs.iter().map(|i| i.map_fresh(f)).collect(),
            adversary_fresh: self.adversary_fresh.iter().map(f).collect(),
        }
    }
}

impl Event {
    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Event {
        Event {
            label: self.label.clone(),
            args: self.args.iter().map(|a| a.map_fresh(f)).collect(),
            time: self.time,
        }
    }
}

#[derive(Clone)]
struct Partial {
    subst: Substitution,
    adv: Vec<FreshName>,
}

/// Backtracking premise matcher respecting linear multiplicities.
fn match_premises(
    state: &SystemState,
    premises: &[Fact],
    subst: Substitution,
    used: &mut BTreeMap<Fact, u32>,
    consumed: &mut Vec<Fact>,
    out: &mut Vec<(Substitution, Vec<Fact>)>,
) {
    let Some((first, rest)) = premises.split_first() else {
        out.push((subst, consumed.clone()));
        return;
    };
    for (fact, &count) in state.facts.iter().filter(|(f, _)| {
        f.name == first.name
            && f.persistence == first.persistence
            && f.args.len() == first.args.len()
    }) {
        if !fact.is_persistent() && used.get(fact).copied().unwrap_or(0) >= count {
            continue;
        }
        let mut s = subst.clone();
        if !first
            .args
            .iter()
            .zip(&fact.args)
            .all(|(p, g)| match_into(p, g, &mut s))
        {
            continue;
        }
        if !fact.is_persistent() {
            *used.entry(fact.clone()).or_insert(0) += 1;
        }
        consumed.push(fact.clone());
        match_premises(state, rest, s, used, consumed, out);
        consumed.pop();
        if !fact.is_persistent() {
            *used.get_mut(fact).unwrap() -= 1;
        }
    }
}

/// Pattern-directed enumeration of adversary-derivable instances of
/// `pattern`. Unbound variables range over terms the adversary holds at
/// depth 0; fresh-sorted variables may also take a newly generated name.
fn synthesize(
    k: &Knowledge,
    pattern: &Term,
    depth: usize,
    cand: Partial,
    next_id: u32,
    guards: &[Guard],
) -> Vec<Partial> {
    let inst = cand.subst.instantiate(pattern);
    if inst.is_ground() {
        return vec![cand];
    }
    let mut out = Vec::new();
    match inst.kind() {
        TermKind::Var(v) => {
            let mut pool: Vec<Term> = k.atoms().collect();
            pool.push(Term::truth());
            pool.extend(cand.adv.iter().cloned().map(Term::fresh));
            for t in pool {
                let mut s = cand.subst.clone();
                if match_into(&inst, &t, &mut s) && !refuted(guards, &s) {
                    out.push(Partial {
                        subst: s,
                        adv: cand.adv.clone(),
                    });
                }
            }
            if v.sort == Sort::Fresh && (cand.adv.len() as u32) < k.fresh_budget() {
                let name = FreshName::new(next_id + cand.adv.len() as u32, Origin::Adversary, "k");
                let mut s = cand.subst.clone();
                s.insert(v.clone(), Term::fresh(name.clone()));
                let mut adv = cand.adv.clone();
                adv.push(name);
                out.push(Partial { subst: s, adv });
            }
        }
        TermKind::App(_, args) => {
            for t in k.basis() {
                let mut s = cand.subst.clone();
                if match_into(&inst, t, &mut s) {
                    out.push(Partial {
                        subst: s,
                        adv: cand.adv.clone(),
                    });
                }
            }
            if depth > 0 {
                let mut partial = vec![cand];
                for a in args {
                    partial = partial
                        .into_iter()
                        .flat_map(|c| synthesize(k, a, depth - 1, c, next_id, guards))
                        .collect();
                }
                out.extend(partial);
            }
        }
        _ => {}
    }
    out
}

/// True when some guard whose left side is already ground fails.
fn refuted(guards: &[Guard], subst: &Substitution) -> bool {
    guards.iter().any(|g| {
        let lhs = subst.instantiate(&g.lhs);
        lhs.is_ground() && !match_into(&g.rhs, &normalize(&lhs), &mut subst.clone())
    })
}

fn knowledge_with(k: &Knowledge, adv: &[FreshName]) -> Knowledge {
    let mut k = k.clone();
    for n in adv {
        k.add_generated(n.clone())
            .expect("synthesis respects the fresh budget");
    }
    k
}

fn eval_guards(guards: &[Guard], subst: &mut Substitution) -> Result<bool, TermError> {
    for g in guards {
        let value = subst.apply(&g.lhs)?;
        if !match_into(&g.rhs, &value, subst) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every complete instantiation of `rule` in `state`, in a deterministic
/// order. Budgets are left to the caller.
pub fn enabled_instances(
    state: &SystemState,
    rule: &Rule,
    synthesis_depth: usize,
) -> Vec<Instance> {
    let mut matches = Vec::new();
    match_premises(
        state,
        &rule.premises,
        Substitution::new(),
        &mut BTreeMap::new(),
        &mut Vec::new(),
        &mut matches,
    );
    let mut found: BTreeMap<(Substitution, Vec<FreshName>), Instance> = BTreeMap::new();
    for (subst, consumed) in matches {
        let mut partial = vec![Partial {
            subst,
            adv: Vec::new(),
        }];
        for pat in &rule.network_in {
            partial = partial
                .into_iter()
                .flat_map(|c| {
                    synthesize(
                        &state.knowledge,
                        pat,
                        synthesis_depth,
                        c,
                        state.next_fresh,
                        &rule.guards,
                    )
                })
                .collect();
        }
        for mut cand in partial {
            let k = knowledge_with(&state.knowledge, &cand.adv);
            let mut inputs = Vec::new();
            let mut ok = true;
            for pat in &rule.network_in {
                let Ok(term) = cand.subst.apply(pat) else {
                    ok = false;
                    break;
                };
                match k.can_derive(&term, synthesis_depth) {
                    Some(derivation) => inputs.push(Input { term, derivation }),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || !matches!(eval_guards(&rule.guards, &mut cand.subst), Ok(true)) {
                continue;
            }
            // Adversary names that ended up unused are dropped.
            let mut used = Vec::new();
            for i in &inputs {
                i.term.fresh_names(&mut used);
            }
            if cand.adv.iter().any(|n| !used.contains(n)) {
                continue;
            }
            let key = (cand.subst.clone(), cand.adv.clone());
            found.entry(key).or_insert(Instance {
                rule_id: rule.id.clone(),
                subst: cand.subst,
                consumed: consumed.clone(),
                inputs,
                adversary_fresh: cand.adv,
            });
        }
    }
    let mut list: Vec<Instance> = found.into_values().collect();
    list.sort_by(|a, b| {
        (a.subst.to_string(), &a.consumed, a.adversary_fresh.len()).cmp(&(
            b.subst.to_string(),
            &b.consumed,
            b.adversary_fresh.len(),
        ))
    });
    list
}

/// Result of firing one rule instance.
#[derive(Debug, Clone)]
pub struct Firing {
    pub state: SystemState,
    pub events: Vec<Event>,
    /// Substitution including the newly allocated fresh names.
    pub subst: Substitution,
    pub consumed: Vec<Fact>,
    pub produced: Vec<Fact>,
    pub outputs: Vec<Term>,
    pub fresh: Vec<FreshName>,
}

fn stale(rule: &Rule, reason: impl Into<String>) -> RewriteError {
    RewriteError::StaleInstance {
        rule: rule.id.clone(),
        reason: reason.into(),
    }
}

/// Applies an instance to a copy of `state`.
pub fn fire(state: &SystemState, rule: &Rule, instance: &Instance) -> Result<Firing, RewriteError> {
    if instance.rule_id != rule.id {
        return Err(stale(rule, "instance belongs to another rule"));
    }
    if instance.consumed.len() != rule.premises.len() {
        return Err(stale(rule, "premise count mismatch"));
    }
    let mut subst = instance.subst.clone();
    let mut next = state.clone();

    let mut need: BTreeMap<&Fact, u32> = BTreeMap::new();
    for (pat, fact) in rule.premises.iter().zip(&instance.consumed) {
        if pat.instantiate(&subst)? != *fact {
            return Err(stale(rule, format!("premise {pat} does not match {fact}")));
        }
        *need.entry(fact).or_insert(0) += u32::from(!fact.is_persistent());
        if state.count(fact) == 0 {
            return Err(stale(rule, format!("fact {fact} not present")));
        }
    }
    for (fact, n) in need {
        if state.count(fact) < n && !fact.is_persistent() {
            return Err(stale(rule, format!("fact {fact} not available {n} times")));
        }
    }

    for (i, name) in instance.adversary_fresh.iter().enumerate() {
        if name.id != state.next_fresh + i as u32 || name.origin != Origin::Adversary {
            return Err(stale(
                rule,
                format!("adversary name {name} out of sequence"),
            ));
        }
        next.knowledge
            .add_generated(name.clone())
            .map_err(|e| stale(rule, e.to_string()))?;
    }
    next.next_fresh += instance.adversary_fresh.len() as u32;

    if instance.inputs.len() != rule.network_in.len() {
        return Err(stale(rule, "input count mismatch"));
    }
    for (pat, input) in rule.network_in.iter().zip(&instance.inputs) {
        if subst.apply(pat)? != input.term {
            return Err(stale(
                rule,
                format!("input {} does not match pattern {pat}", input.term),
            ));
        }
        if !next.knowledge.derivable(&input.term, input.term.height()) {
            return Err(stale(
                rule,
                format!("input {} is not derivable", input.term),
            ));
        }
    }
    if !eval_guards(&rule.guards, &mut subst)? {
        return Err(stale(rule, "guard fails"));
    }

    let mut fresh = Vec::new();
    for v in &rule.fresh_vars {
        let name = FreshName::new(next.next_fresh, Origin::Protocol, &v.name);
        next.next_fresh += 1;
        subst.insert(v.clone(), Term::fresh(name.clone()));
        fresh.push(name);
    }

    for fact in &instance.consumed {
        if !fact.is_persistent() {
            let n = next.facts.get_mut(fact).expect("checked above");
            *n -= 1;
            if *n == 0 {
                next.facts.remove(fact);
            }
        }
    }
    let mut produced = Vec::new();
    for c in &rule.conclusions {
        let fact = c.instantiate(&subst)?;
        next.add_fact(fact.clone());
        produced.push(fact);
    }
    let mut outputs = Vec::new();
    for o in &rule.network_out {
        let t = subst.apply(o)?;
        next.knowledge.observe_in_place(&t);
        outputs.push(t);
    }
    let time = state.time;
    let events = rule
        .events
        .iter()
        .map(|a| {
            Ok(Event {
                label: a.label.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| subst.apply(t))
                    .collect::<Result<_, TermError>>()?,
                time,
            })
        })
        .collect::<Result<Vec<_>, TermError>>()?;
    if let Some(b) = &rule.budget {
        *next.budgets.entry(budget_key(b, &subst)).or_insert(0) += 1;
    }
    next.time += 1;
    Ok(Firing {
        state: next,
        events,
        subst,
        consumed: instance.consumed.clone(),
        produced,
        outputs,
        fresh,
    })
}

/// Why a rule cannot consume a particular message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnosis {
    Enabled,
    InputMismatch { pattern: Term },
    MissingPremise { premise: Fact, available: Vec<Fact> },
    GuardFails { guard: String },
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnosis::Enabled => f.write_str("enabled"),
            Diagnosis::InputMismatch { pattern } => {
                write!(f, "message does not fit pattern {pattern}")
            }
            Diagnosis::MissingPremise { premise, available } => {
                write!(f, "premise {premise} has no matching fact")?;
                if available.is_empty() {
                    f.write_str("; no fact of that name is present")
                } else {
                    let list: Vec<String> = available.iter().map(ToString::to_string).collect();
                    write!(f, "; present: {}", list.join(", "))
                }
            }
            Diagnosis::GuardFails { guard } => write!(f, "guard {guard} fails"),
        }
    }
}

/// Explains whether `rule` could consume `input` as its first network input.
/// Premises are matched greedily in order, so this is a diagnostic, not a
/// complete enabledness test.
pub fn diagnose(state: &SystemState, rule: &Rule, input: &Term) -> Diagnosis {
    let mut subst = Substitution::new();
    if let Some(pat) = rule.network_in.first() {
        if !match_into(pat, input, &mut subst) {
            return Diagnosis::InputMismatch {
                pattern: pat.clone(),
            };
        }
    }
    for p in &rule.premises {
        let mut hit = None;
        for fact in state.facts_named(&p.name) {
            let mut s = subst.clone();
            if p.args.len() == fact.args.len()
                && p.args
                    .iter()
                    .zip(&fact.args)
                    .all(|(a, g)| match_into(a, g, &mut s))
            {
                hit = Some(s);
                break;
            }
        }
        match hit {
            Some(s) => subst = s,
            None => {
                let premise = Fact {
                    name: p.name.clone(),
                    args: p
                        .args
                        .iter()
                        .map(|a| normalize(&subst.instantiate(a)))
                        .collect(),
                    persistence: p.persistence,
                };
                return Diagnosis::MissingPremise {
                    premise,
                    available: state.facts_named(&p.name).cloned().collect(),
                };
            }
        }
    }
    for g in &rule.guards {
        match eval_guards(std::slice::from_ref(g), &mut subst) {
            Ok(true) => {}
            _ => {
                return Diagnosis::GuardFails {
                    guard: format!("{} = {}", g.lhs, g.rhs),
                }
            }
        }
    }
    Diagnosis::Enabled
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for Fact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for FreshName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
