//! Explores the plain protocol without pseudonym change and prints the
//! shortest complete revocation run as a sequence chart.

use revlab::explorer::{explore, Bounds};
use revlab::goals::{check_g1_executable, Outcome};
use revlab::msc::render_msc;
use revlab::protocols::{build_protocol, initial_state, ProtocolName};

fn main() {
    let spec = build_protocol(ProtocolName::Plain, false);
    let init = initial_state(&spec, 1).expect("one vehicle");
    let ts = explore(&spec, &init, &Bounds::default()).expect("exploration");
    let s = ts.stats();
    println!(
        "{} states, {} transitions, {} maximal traces\n",
        s.nodes, s.edges, s.traces
    );

    let v = check_g1_executable(&ts).expect("goal check");
    assert_eq!(v.outcome, Outcome::WitnessFound);
    let witness = v.evidence.expect("witness trace");
    print!("{}", render_msc(&witness));
}
