//! Dolev-Yao knowledge: eager analysis on observation, lazy goal-directed
//! synthesis on derivability queries.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::term::{normalize, FreshName, Origin, Symbol, Term, TermKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("adversary fresh-name budget exhausted")]
    BudgetExhausted,
}

/// Symbols the adversary may apply to derivable arguments. Decryption is
/// handled by analysis; `true` is a public constant.
pub const CONSTRUCTORS: [Symbol; 5] = [
    Symbol::Pk,
    Symbol::Sign,
    Symbol::Renc,
    Symbol::Oenc,
    Symbol::Verify,
];

fn is_constructor(s: Symbol) -> bool {
    matches!(s, Symbol::Tuple(_)) || CONSTRUCTORS.contains(&s)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Knowledge {
    /// Terms as they were released onto the network.
    observed: BTreeSet<Term>,
    /// Closure of `observed` under projection, signature opening and decryption.
    basis: BTreeSet<Term>,
    generated: BTreeSet<FreshName>,
    fresh_budget: u32,
}

/// How a term is built from the adversary's knowledge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Derivation {
    Known {
        term: Term,
    },
    Generated {
        name: FreshName,
    },
    Constant {
        term: Term,
    },
    Construct {
        symbol: &'static str,
        result: Term,
        args: Vec<Derivation>,
    },
}

impl Derivation {
    pub fn height(&self) -> usize {
        match self {
            Derivation::Construct { args, .. } => {
                1 + args.iter().map(Derivation::height).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Adversary-generated names used anywhere in the derivation.
    pub fn generated_names(&self) -> Vec<FreshName> {
        match self {
            Derivation::Generated { name } => vec![name.clone()],
            Derivation::Construct { args, .. } => {
                args.iter().flat_map(Derivation::generated_names).collect()
            }
            _ => Vec::new(),
        }
    }

    /// True when the root was built rather than replayed from knowledge.
    pub fn is_constructed(&self) -> bool {
        matches!(self, Derivation::Construct { .. })
    }

    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Derivation {
        match self {
            Derivation::Known { term } => Derivation::Known {
                term: term.map_fresh(f),
            },
            Derivation::Generated { name } => Derivation::Generated { name: f(name) },
            Derivation::Constant { term } => Derivation::Constant { term: term.clone() },
            Derivation::Construct {
                symbol,
                result,
                args,
            } => Derivation::Construct {
                symbol,
                result: result.map_fresh(f),
                args: args.iter().map(|a| a.map_fresh(f)).collect(),
            },
        }
    }
}

impl Knowledge {
    pub fn new() -> Self {
        Knowledge::default()
    }

    pub fn with_fresh_budget(mut self, budget: u32) -> Self {
        self.fresh_budget = budget;
        self
    }

    pub fn fresh_budget(&self) -> u32 {
        self.fresh_budget
    }

    pub fn observed(&self) -> &BTreeSet<Term> {
        &self.observed
    }

    pub fn basis(&self) -> &BTreeSet<Term> {
        &self.basis
    }

    pub fn generated(&self) -> &BTreeSet<FreshName> {
        &self.generated
    }

    /// Every term usable at derivation depth 0.
    pub fn atoms(&self) -> impl Iterator<Item = Term> + '_ {
        self.basis
            .iter()
            .cloned()
            .chain(self.generated.iter().cloned().map(Term::fresh))
    }

    pub fn observe(&self, t: &Term) -> Knowledge {
        let mut k = self.clone();
        k.observe_in_place(t);
        k
    }

    pub(crate) fn observe_in_place(&mut self, t: &Term) {
        let t = normalize(t);
        if !self.observed.insert(t.clone()) && self.basis.contains(&t) {
            return;
        }
        self.basis.insert(t);
        self.close();
    }

    fn close(&mut self) {
        loop {
            let mut new = Vec::new();
            for t in &self.basis {
                let Some((sym, args)) = t.as_app() else {
                    continue;
                };
                match sym {
                    Symbol::Tuple(_) => new.extend(args.iter().cloned()),
                    Symbol::Sign => new.push(args[0].clone()),
                    Symbol::Renc | Symbol::Oenc
                        if self.can_derive(&args[1], args[1].height()).is_some() =>
                    {
                        new.push(args[0].clone());
                    }
                    _ => {}
                }
            }
            let before = self.basis.len();
            self.basis.extend(new);
            if self.basis.len() == before {
                break;
            }
        }
    }

    /// Allocates an adversary-owned fresh name with the given id.
    pub fn gen_fresh(&self, id: u32) -> Result<(Knowledge, FreshName), AdversaryError> {
        if self.fresh_budget == 0 {
            return Err(AdversaryError::BudgetExhausted);
        }
        let name = FreshName::new(id, Origin::Adversary, "k");
        let mut k = self.clone();
        k.fresh_budget -= 1;
        k.generated.insert(name.clone());
        Ok((k, name))
    }

    pub(crate) fn add_generated(&mut self, name: FreshName) -> Result<(), AdversaryError> {
        if self.fresh_budget == 0 {
            return Err(AdversaryError::BudgetExhausted);
        }
        self.fresh_budget -= 1;
        self.generated.insert(name);
        Ok(())
    }

    fn known_at_zero(&self, t: &Term) -> bool {
        t.is_truth()
            || self.basis.contains(t)
            || t.as_fresh().is_some_and(|n| self.generated.contains(n))
    }

    /// Minimal construction height for `goal`, or `None` if underivable.
    fn min_height(&self, goal: &Term, memo: &mut HashMap<Term, Option<usize>>) -> Option<usize> {
        if self.known_at_zero(goal) {
            return Some(0);
        }
        if let Some(h) = memo.get(goal) {
            return *h;
        }
        let h = match goal.kind() {
            TermKind::App(sym, args) if is_constructor(*sym) => {
                let mut worst = 0;
                let mut ok = true;
                for a in args {
                    match self.min_height(a, memo) {
                        Some(h) => worst = worst.max(h),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                ok.then_some(worst + 1)
            }
            _ => None,
        };
        memo.insert(goal.clone(), h);
        h
    }

    fn witness(&self, goal: &Term, memo: &mut HashMap<Term, Option<usize>>) -> Derivation {
        if goal.is_truth() && !self.basis.contains(goal) {
            return Derivation::Constant { term: goal.clone() };
        }
        if self.basis.contains(goal) {
            return Derivation::Known { term: goal.clone() };
        }
        if let Some(n) = goal.as_fresh().filter(|n| self.generated.contains(n)) {
            return Derivation::Generated { name: n.clone() };
        }
        let (sym, args) = goal.as_app().expect("derivable non-atom is an application");
        Derivation::Construct {
            symbol: sym.name(),
            result: goal.clone(),
            args: args
                .iter()
                .map(|a| {
                    self.min_height(a, memo);
                    self.witness(a, memo)
                })
                .collect(),
        }
    }

    /// Whether `goal` is constructible with at most `depth` nested function
    /// applications; returns a derivation tree when it is.
    pub fn can_derive(&self, goal: &Term, depth: usize) -> Option<Derivation> {
        let goal = normalize(goal);
        let mut memo = HashMap::new();
        match self.min_height(&goal, &mut memo) {
            Some(h) if h <= depth => Some(self.witness(&goal, &mut memo)),
            _ => None,
        }
    }

    pub fn derivable(&self, goal: &Term, depth: usize) -> bool {
        let goal = normalize(goal);
        let mut memo = HashMap::new();
        self.min_height(&goal, &mut memo)
            .is_some_and(|h| h <= depth)
    }

    /// Derivable at any depth.
    pub fn knows(&self, goal: &Term) -> bool {
        self.derivable(goal, usize::MAX)
    }

    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Knowledge {
        Knowledge {
            observed: self.observed.iter().map(|t| t.map_fresh(f)).collect(),
            basis: self.basis.iter().map(|t| t.map_fresh(f)).collect(),
            generated: self.generated.iter().map(f).collect(),
            fresh_budget: self.fresh_budget,
        }
    }
}

/// Naive forward saturation of everything derivable from the observed
/// terms, with constructed terms capped at `size_cap` nodes. Independent of
/// the analysis closure and of `can_derive`; used as a test oracle.
pub fn saturate_oracle(k: &Knowledge, size_cap: usize) -> BTreeSet<Term> {
    let mut set: BTreeSet<Term> = k.observed.iter().cloned().collect();
    set.extend(k.generated.iter().cloned().map(Term::fresh));
    set.insert(Term::truth());
    loop {
        let before = set.len();
        // Analysis.
        let mut found = Vec::new();
        for t in &set {
            if let TermKind::App(sym, args) = t.kind() {
                match sym {
                    Symbol::Tuple(_) => found.extend(args.iter().cloned()),
                    Symbol::Sign => found.push(args[0].clone()),
                    Symbol::Renc | Symbol::Oenc if set.contains(&args[1]) => {
                        found.push(args[0].clone())
                    }
                    _ => {}
                }
            }
        }
        set.extend(found);
        // Construction.
        let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); size_cap + 1];
        for t in &set {
            let s = t.size();
            if s <= size_cap {
                by_size[s].push(t.clone());
            }
        }
        let mut built = Vec::new();
        let mut shapes: Vec<Symbol> = CONSTRUCTORS.to_vec();
        shapes.extend((2..size_cap).map(Symbol::Tuple));
        for sym in shapes {
            let arity = sym.arity();
            if arity + 1 > size_cap {
                continue;
            }
            let mut args = Vec::with_capacity(arity);
            build_args(&by_size, arity, size_cap - 1, &mut args, &mut |a| {
                built.push(normalize(
                    &Term::apply(sym, a.to_vec()).expect("arity checked"),
                ));
            });
        }
        set.extend(built);
        if set.len() == before {
            return set;
        }
    }
}

fn build_args(
    by_size: &[Vec<Term>],
    remaining: usize,
    budget: usize,
    acc: &mut Vec<Term>,
    emit: &mut impl FnMut(&[Term]),
) {
    if remaining == 0 {
        emit(acc);
        return;
    }
    // Reserve one node for each argument still to place.
    let max_here = budget.saturating_sub(remaining - 1);
    for s in 1..=max_here.min(by_size.len() - 1) {
        for t in &by_size[s] {
            acc.push(t.clone());
            build_args(by_size, remaining - 1, budget - s, acc, emit);
            acc.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(id: u32, hint: &str) -> Term {
        Term::fresh(FreshName::new(id, Origin::Protocol, hint))
    }

    #[test]
    fn tuples_are_projected() {
        let (a, b) = (Term::public("A"), Term::public("B"));
        let k = Knowledge::new().observe(&Term::tuple(vec![a.clone(), b.clone()]));
        assert!(k.derivable(&a, 0) && k.derivable(&b, 0));
    }

    #[test]
    fn decryption_needs_the_key() {
        let (r, sk) = (Term::public("R"), fresh(0, "SK"));
        let c = Term::renc(r.clone(), sk.clone());
        assert!(!Knowledge::new().observe(&c).knows(&r));
        let k = Knowledge::new().observe(&sk).observe(&c);
        assert!(k.derivable(&r, 0));
        // Key arriving after the ciphertext also opens it.
        let k = Knowledge::new().observe(&c).observe(&sk);
        assert!(k.derivable(&r, 0));
    }

    #[test]
    fn signatures_reveal_payload_not_key() {
        let (m, key) = (Term::public("M"), fresh(0, "K"));
        let k = Knowledge::new().observe(&Term::sign(m.clone(), key.clone()));
        assert!(k.derivable(&m, 0));
        assert!(!k.knows(&key));
        assert!(!saturate_oracle(&k, 4).contains(&key));
    }

    #[test]
    fn one_application_signs() {
        let (m, key) = (Term::public("M"), fresh(0, "K"));
        let k = Knowledge::new().observe(&m).observe(&key);
        let d = k
            .can_derive(&Term::sign(m.clone(), key.clone()), 1)
            .unwrap();
        assert_eq!(d.height(), 1);
        assert!(k.can_derive(&Term::sign(m, key), 0).is_none());
    }

    #[test]
    fn cannot_resign_without_key() {
        let key = fresh(0, "K");
        let k = Knowledge::new().observe(&Term::sign(Term::public("M"), key.clone()));
        assert!(!k.knows(&Term::sign(Term::public("M2"), key)));
    }

    #[test]
    fn gen_fresh_budget() {
        let k = Knowledge::new().with_fresh_budget(2);
        let (k, a) = k.gen_fresh(10).unwrap();
        let (k, b) = k.gen_fresh(11).unwrap();
        assert_ne!(a, b);
        assert!(k.derivable(&Term::fresh(a), 0));
        assert_eq!(
            k.gen_fresh(12).unwrap_err(),
            AdversaryError::BudgetExhausted
        );
        assert_eq!(
            Knowledge::new().gen_fresh(0).unwrap_err(),
            AdversaryError::BudgetExhausted
        );
    }

    #[test]
    fn oracle_on_empty_knowledge() {
        let k = Knowledge::new().with_fresh_budget(1);
        assert_eq!(saturate_oracle(&k, 1), BTreeSet::from([Term::truth()]));
        assert!(saturate_oracle(&k, 5).iter().all(|t| {
            let mut v = Vec::new();
            t.fresh_names(&mut v);
            v.is_empty()
        }));
        let (k, n) = k.gen_fresh(0).unwrap();
        let s = saturate_oracle(&k, 1);
        assert_eq!(s, BTreeSet::from([Term::truth(), Term::fresh(n)]));
    }

    #[test]
    fn oracle_small_constructions() {
        let a = Term::public("A");
        let s = saturate_oracle(&Knowledge::new().observe(&a), 3);
        assert!(s.contains(&Term::pk(a.clone())));
        assert!(s.contains(&Term::tuple(vec![a.clone(), a.clone()])));
        assert!(!s.contains(&Term::tuple(vec![a.clone(), a.clone(), a])));
    }
}
