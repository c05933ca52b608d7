//! With pseudonym change enabled the plain protocol can no longer complete
//! a revocation for a vehicle that changed pseudonym after being reported.

use revlab::explorer::{explore, Bounds};
use revlab::goals::{run_goals, GoalId, DEFAULT_TRACE_LIMIT};
use revlab::protocols::{build_protocol, initial_state, ProtocolName};

fn main() {
    for p in ProtocolName::ALL {
        let spec = build_protocol(p, true);
        let init = initial_state(&spec, 1).expect("one vehicle");
        let ts = explore(&spec, &init, &Bounds::default()).expect("exploration");
        let v = run_goals(&ts, &[GoalId::G5], DEFAULT_TRACE_LIMIT)
            .expect("goal check")
            .remove(0);
        println!("{p:<7} G5 {}", v.outcome);
        if let Some(why) = &v.explanation {
            println!("        {why}");
        }
    }
}
