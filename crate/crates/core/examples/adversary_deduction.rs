//! What a network adversary can deduce from observed traffic, with the
//! derivation it would use.

use revlab::adversary::{Derivation, Knowledge};
use revlab::term::{FreshName, Origin, Term};

fn show(d: &Derivation, indent: usize) {
    let pad = " ".repeat(indent);
    match d {
        Derivation::Known { term } => println!("{pad}known {term}"),
        Derivation::Generated { name } => println!("{pad}fresh {name}"),
        Derivation::Constant { term } => println!("{pad}constant {term}"),
        Derivation::Construct {
            symbol,
            result,
            args,
        } => {
            println!("{pad}{symbol} -> {result}");
            for a in args {
                show(a, indent + 2);
            }
        }
    }
}

fn main() {
    let ltk = Term::fresh(FreshName::new(0, Origin::Protocol, "LTK"));
    let psk = Term::fresh(FreshName::new(1, Origin::Protocol, "SK_PSi"));
    let token = Term::renc(
        Term::tuple(vec![Term::public("V1"), Term::pk(ltk.clone())]),
        ltk.clone(),
    );

    // Public names are only known once seen; the protocol models seed the
    // message tags and agent names the same way.
    let k = Knowledge::new()
        .with_fresh_budget(1)
        .observe(&Term::public("confirm"));
    // The adversary sees a revocation request carrying the token in clear.
    let request = Term::tuple(vec![
        Term::public("revoke"),
        Term::pk(psk.clone()),
        token.clone(),
    ]);
    let k = k.observe(&request);

    let (k, key) = k.gen_fresh(7).expect("budget allows one fresh key");
    let forged = Term::tuple(vec![
        Term::tuple(vec![Term::public("confirm"), token.clone()]),
        Term::sign(
            Term::tuple(vec![Term::public("confirm"), token]),
            Term::fresh(key),
        ),
    ]);

    for goal in [Term::pk(psk.clone()), forged, ltk, psk] {
        match k.can_derive(&goal, 4) {
            Some(d) => {
                println!("derivable: {goal}");
                show(&d, 2);
            }
            None => println!("not derivable: {goal}"),
        }
        println!();
    }
}
