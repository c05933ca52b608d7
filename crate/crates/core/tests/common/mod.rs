//! Naive oracles and random generators shared by the property suite and
//! the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revlab::adversary::{saturate_oracle, Knowledge};
use revlab::explorer::canonicalize;
use revlab::state::{Fact, SystemState};
use revlab::term::{normalize, FreshName, Origin, Term};

pub fn key(id: u32) -> Term {
    Term::fresh(FreshName::new(id, Origin::Protocol, "k"))
}

fn atom(rng: &mut impl Rng) -> Term {
    match rng.gen_range(0..6) {
        0 => Term::public("a"),
        1 => Term::public("b"),
        2 => Term::truth(),
        3 => Term::fresh(FreshName::new(9, Origin::Adversary, "x")),
        _ => key(rng.gen_range(0..3)),
    }
}

/// Random raw term with a good share of redexes at every depth.
fn random_term(rng: &mut impl Rng, depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.2) {
        return atom(rng);
    }
    let choice = rng.gen_range(0..12);
    let mut sub = || random_term(rng, depth - 1);
    match choice {
        0 => Term::pk(sub()),
        1 => Term::sign(sub(), sub()),
        2 => Term::verify(sub(), sub(), sub()),
        3 => Term::renc(sub(), sub()),
        4 => Term::rdec(sub(), sub()),
        5 => Term::oenc(sub(), sub()),
        6 => Term::odec(sub(), sub()),
        7 => Term::tuple(vec![sub(), sub()]),
        8 => {
            let (m, k) = (sub(), sub());
            Term::rdec(Term::renc(m, k.clone()), k)
        }
        9 => {
            let (m, k) = (sub(), sub());
            Term::odec(Term::oenc(m, k.clone()), k)
        }
        10 => {
            let (m, k) = (sub(), sub());
            Term::verify(Term::sign(m.clone(), k.clone()), m, Term::pk(k))
        }
        _ => Term::tuple(vec![sub(), sub(), sub()]),
    }
}

fn replace_at(t: &Term, path: &[usize], with: Term) -> Term {
    match path.split_first() {
        None => with,
        Some((&i, rest)) => {
            let (sym, args) = t.as_app().expect("path leads through applications");
            let mut args = args.to_vec();
            args[i] = replace_at(&args[i], rest, with);
            Term::apply(sym, args).expect("arity kept")
        }
    }
}

fn redexes(t: &Term, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Term)>) {
    if let Some(r) = t.reduce_root() {
        out.push((path.clone(), r));
    }
    if let Some((_, args)) = t.as_app() {
        for (i, a) in args.iter().enumerate() {
            path.push(i);
            redexes(a, path, out);
            path.pop();
        }
    }
}

/// Rewrites one randomly chosen redex at a time until none is left.
fn rewrite_randomly(t: &Term, rng: &mut impl Rng) -> Term {
    let mut t = t.clone();
    loop {
        let mut found = Vec::new();
        redexes(&t, &mut Vec::new(), &mut found);
        let Some((path, reduct)) = found.choose(rng).cloned() else {
            return t;
        };
        t = replace_at(&t, &path, reduct);
    }
}

/// Normalizes `count` random terms and compares each against two random
/// rewriting orders. Returns how many inputs were reducible.
pub fn check_normalization(count: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut with_redex = 0;
    for _ in 0..count {
        let t = random_term(&mut rng, 4);
        let n = normalize(&t);
        assert_eq!(normalize(&n), n, "not idempotent on {t}");
        assert!(n.is_normal());
        if !t.is_normal() {
            with_redex += 1;
        }
        for _ in 0..2 {
            assert_eq!(
                rewrite_randomly(&t, &mut rng),
                n,
                "rewrite order changed the result for {t}"
            );
        }
    }
    with_redex
}

fn small_term(rng: &mut impl Rng, budget: usize) -> Term {
    if budget <= 1 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..5) {
            0 => Term::public("a"),
            1 => Term::public("b"),
            _ => key(rng.gen_range(0..3)),
        };
    }
    match rng.gen_range(0..5) {
        0 => Term::pk(small_term(rng, budget - 1)),
        1 if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            Term::sign(small_term(rng, l), small_term(rng, budget - 1 - l))
        }
        2 if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            Term::renc(small_term(rng, l), small_term(rng, budget - 1 - l))
        }
        3 if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            Term::oenc(small_term(rng, l), small_term(rng, budget - 1 - l))
        }
        _ if budget >= 3 => {
            let l = rng.gen_range(1..budget - 1);
            Term::tuple(vec![small_term(rng, l), small_term(rng, budget - 1 - l)])
        }
        _ => Term::pk(small_term(rng, budget - 1)),
    }
}

/// Compares `can_derive` with forward saturation on `count` random
/// knowledge sets. Returns (derivable, underivable) goals checked.
pub fn check_derivation(count: usize, seed: u64) -> (usize, usize) {
    const CAP: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut positive, mut negative) = (0usize, 0usize);
    for _ in 0..count {
        let mut k = Knowledge::new();
        for _ in 0..rng.gen_range(1..=3) {
            k = k.observe(&normalize(&small_term(&mut rng, CAP)));
        }
        let oracle = saturate_oracle(&k, CAP);
        for t in oracle.iter().filter(|t| t.size() <= CAP) {
            assert!(
                k.derivable(t, 8),
                "oracle derives {t} but can_derive does not; knowledge {k:?}"
            );
            positive += 1;
        }
        for _ in 0..30 {
            let g = normalize(&small_term(&mut rng, CAP));
            if g.size() > CAP {
                continue;
            }
            assert_eq!(
                k.derivable(&g, 8),
                oracle.contains(&g),
                "disagreement on {g}; knowledge {k:?}"
            );
            negative += usize::from(!oracle.contains(&g));
        }
    }
    (positive, negative)
}

fn name(id: u32, adversary: bool, hint: &str) -> FreshName {
    FreshName::new(
        id,
        if adversary {
            Origin::Adversary
        } else {
            Origin::Protocol
        },
        hint,
    )
}

fn pool() -> [FreshName; 4] {
    [
        name(0, false, "k"),
        name(1, false, "k"),
        name(2, false, "n"),
        name(3, true, "k"),
    ]
}

fn pick(rng: &mut impl Rng) -> Term {
    let pool = pool();
    match rng.gen_range(0..6) {
        0 => Term::public("x"),
        1 => Term::pk(Term::fresh(pool[rng.gen_range(0..pool.len())].clone())),
        _ => Term::fresh(pool[rng.gen_range(0..pool.len())].clone()),
    }
}

fn random_fact(rng: &mut impl Rng) -> Fact {
    let args: Vec<Term> = (0..rng.gen_range(1..=2)).map(|_| pick(rng)).collect();
    if rng.gen_bool(0.3) {
        Fact::persistent("P", args)
    } else {
        Fact::linear(["A", "B"][rng.gen_range(0..2)], args)
    }
}

/// A small state over at most four fresh names.
fn random_state(rng: &mut impl Rng) -> SystemState {
    let mut knowledge = Knowledge::new();
    if rng.gen_bool(0.3) {
        knowledge = knowledge.observe(&pick(rng));
    }
    let mut s = SystemState::new(knowledge);
    for _ in 0..rng.gen_range(1..=3) {
        s.add_fact(random_fact(rng));
    }
    s
}

fn shuffled_ids(s: &SystemState, rng: &mut impl Rng) -> SystemState {
    let names: Vec<FreshName> = s.fresh_names().into_iter().collect();
    let mut ids: Vec<u32> = (10..10 + names.len() as u32).collect();
    ids.shuffle(rng);
    let map: BTreeMap<FreshName, u32> = names.into_iter().zip(ids).collect();
    s.map_fresh(&mut |n| n.with_id(map[n]), 0)
}

fn same_content(a: &SystemState, b: &SystemState) -> bool {
    a.facts().collect::<Vec<_>>() == b.facts().collect::<Vec<_>>()
        && a.knowledge == b.knowledge
        && a.budgets() == b.budgets()
}

fn permutations(items: &[FreshName]) -> Vec<Vec<FreshName>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Tries every bijection between the fresh names of `a` and `b` that keeps
/// origin and hint.
fn isomorphic(a: &SystemState, b: &SystemState) -> bool {
    let na: Vec<FreshName> = a.fresh_names().into_iter().collect();
    let nb: Vec<FreshName> = b.fresh_names().into_iter().collect();
    if na.len() != nb.len() {
        return false;
    }
    permutations(&nb).into_iter().any(|image| {
        if na
            .iter()
            .zip(&image)
            .any(|(x, y)| x.origin != y.origin || x.hint != y.hint)
        {
            return false;
        }
        let map: BTreeMap<&FreshName, &FreshName> = na.iter().zip(&image).collect();
        let renamed = a.map_fresh(&mut |n| (*map[n]).clone(), b.next_fresh());
        same_content(&renamed, b)
    })
}

/// Compares digest equality with brute-force isomorphism on `count` state
/// pairs. Returns (isomorphic, non-isomorphic) pairs checked.
pub fn check_canonical_forms(count: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut iso, mut non_iso) = (0, 0);
    for _ in 0..count {
        let a = random_state(&mut rng);
        let b = match rng.gen_range(0..3) {
            0 => random_state(&mut rng),
            1 => shuffled_ids(&a, &mut rng),
            _ => {
                let mut b = a.clone();
                b.add_fact(random_fact(&mut rng));
                shuffled_ids(&b, &mut rng)
            }
        };
        let (ca, cb) = (canonicalize(&a), canonicalize(&b));
        assert!(ca.exhaustive && cb.exhaustive);
        let expected = isomorphic(&a, &b);
        assert_eq!(
            ca.digest == cb.digest,
            expected,
            "digest disagrees with isomorphism:\n{}\n--\n{}",
            ca.text,
            cb.text
        );
        if expected {
            iso += 1;
        } else {
            non_iso += 1;
        }
    }
    (iso, non_iso)
}
