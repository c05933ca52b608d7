//! Finds the forged-confirmation attack on the R-token variant and prints
//! it as a chart and as the JSON evidence a report would carry.

use revlab::explorer::{explore, Bounds};
use revlab::goals::{check_g2_weak_agreement, Outcome};
use revlab::msc::render_msc;
use revlab::protocols::{build_protocol, initial_state, ProtocolName};
use revlab::report::trace_doc;

fn main() {
    let spec = build_protocol(ProtocolName::Rtoken, true);
    let init = initial_state(&spec, 1).expect("one vehicle");
    let ts = explore(&spec, &init, &Bounds::default()).expect("exploration");

    let v = check_g2_weak_agreement(&ts).expect("goal check");
    assert_eq!(v.outcome, Outcome::CounterexampleFound);
    let attack = v.evidence.expect("counterexample");
    print!("{}", render_msc(&attack));

    let last = attack.steps.last().expect("non-empty");
    for input in last.inputs.iter().filter(|i| i.derivation.is_constructed()) {
        println!("\nadversary-built input: {}", input.term);
    }
    let doc = trace_doc(&attack, false);
    println!(
        "\nfinal step as JSON:\n{}",
        serde_json::to_string_pretty(&doc.steps.last()).expect("serializes")
    );
}
