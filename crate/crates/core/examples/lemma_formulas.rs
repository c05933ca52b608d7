//! Parses goal lemmas and evaluates them on hand-written event sequences.

use std::sync::Arc;

use revlab::formula::{holds, parse};
use revlab::goals::GoalId;
use revlab::state::Event;
use revlab::term::Term;

fn ev(label: &str, args: &[&str], time: usize) -> Event {
    Event {
        label: Arc::from(label),
        args: args.iter().map(|a| Term::public(a)).collect(),
        time,
    }
}

fn main() {
    let lemma = parse(GoalId::G7.lemma()).expect("built-in lemma parses");
    let matched = [
        ev("OsrReqMsgRecvBy", &["V1", "RA", "t"], 0),
        ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 1),
    ];
    let unmatched = [ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 0)];
    let excused = [
        ev("VehicleCompromised", &["V1", "k"], 0),
        ev("OsrConfAcceptedBy", &["RA", "V1", "t"], 1),
    ];
    println!("{}\n", GoalId::G7.lemma());
    println!("receive then accept:   {}", holds(&lemma, &matched));
    println!("accept only:           {}", holds(&lemma, &unmatched));
    println!("compromised vehicle:   {}", holds(&lemma, &excused));

    let custom = parse("Ex v #i #j. Reported(v) @ #i & Revoked(v) @ #j & #i < #j").expect("parses");
    let run = [ev("Reported", &["V2"], 0), ev("Revoked", &["V2"], 3)];
    println!(
        "\ncustom lemma on a two-event run: {}",
        holds(&custom, &run)
    );
    match parse("All x #i. Foo(y) @ #i") {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("rejected: {e}"),
    }
}
