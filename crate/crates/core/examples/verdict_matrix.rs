//! Runs every goal against every protocol with pseudonym change enabled and
//! prints the verdict matrix.

use revlab::explorer::Bounds;
use revlab::goals::{run_all, GoalId, Outcome};
use revlab::protocols::{build_protocol, ProtocolName};

fn cell(o: Outcome) -> &'static str {
    match o {
        Outcome::WitnessFound => "witness",
        Outcome::NoWitnessWithinBounds => "no witness",
        Outcome::NoCounterexampleWithinBounds => "holds",
        Outcome::CounterexampleFound => "ATTACK",
    }
}

fn main() {
    print!("{:<8}", "");
    for g in GoalId::ALL {
        print!("{:<12}", g.as_str());
    }
    println!();
    for p in ProtocolName::ALL {
        let verdicts = run_all(&build_protocol(p, true), &Bounds::default()).expect("run");
        print!("{:<8}", p.as_str());
        for v in &verdicts {
            print!("{:<12}", cell(v.outcome));
        }
        println!();
    }
    println!("\n\"holds\" means no counterexample within the default bounds.");
}
