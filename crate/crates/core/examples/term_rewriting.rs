//! Builds message terms, normalizes them and matches a rule pattern.

use revlab::term::{match_pattern, normalize, FreshName, Origin, Term, Var};

fn main() {
    let sk = Term::fresh(FreshName::new(0, Origin::Protocol, "SK_RA"));
    let ltk = Term::fresh(FreshName::new(1, Origin::Protocol, "LTK"));
    let body = Term::tuple(vec![Term::public("revoke"), Term::pk(ltk.clone())]);

    let checks = [
        Term::verify(
            Term::sign(body.clone(), sk.clone()),
            body.clone(),
            Term::pk(sk.clone()),
        ),
        Term::verify(
            Term::sign(body.clone(), sk.clone()),
            body.clone(),
            Term::pk(ltk.clone()),
        ),
        Term::rdec(Term::renc(body.clone(), ltk.clone()), ltk.clone()),
        Term::odec(Term::renc(body.clone(), ltk.clone()), ltk.clone()),
        Term::tuple(vec![
            Term::rdec(Term::renc(Term::public("a"), ltk.clone()), ltk.clone()),
            Term::public("b"),
        ]),
    ];
    for t in &checks {
        println!("{t}\n  => {}\n", normalize(t));
    }

    // `$vj` only binds public names, `?m` anything.
    let pattern = Term::tuple(vec![Term::var(Var::public("vj")), Term::var(Var::msg("m"))]);
    let msg = Term::tuple(vec![Term::public("V1"), Term::sign(body, sk)]);
    match match_pattern(&pattern, &msg) {
        Some(s) => {
            for (v, t) in s.iter() {
                println!("{v} := {t}");
            }
        }
        None => println!("no match"),
    }
    let wrong = Term::tuple(vec![ltk, Term::public("x")]);
    println!(
        "fresh value in a public slot matches: {}",
        match_pattern(&pattern, &wrong).is_some()
    );
}
