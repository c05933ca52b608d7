//! How state-space size reacts to the bounds: more vehicles, key reveals and
//! a tighter step limit.

use revlab::explorer::{explore_with, Bounds, ExploreOptions};
use revlab::protocols::{build_protocol, initial_state, ProtocolName};

fn main() {
    let opts = ExploreOptions {
        workers: 4,
        dedup: true,
    };
    let runs = [
        ("1 vehicle", 1, false, Bounds::default()),
        ("2 vehicles", 2, false, Bounds::default()),
        ("1 vehicle, reveals", 1, true, Bounds::default()),
        (
            "1 vehicle, 6 steps",
            1,
            false,
            Bounds {
                max_steps: 6,
                ..Bounds::default()
            },
        ),
    ];
    println!(
        "{:<22}{:>8}{:>10}{:>12}{:>11}",
        "rtoken, change", "states", "merged", "traces", "truncated"
    );
    for (label, n, reveals, bounds) in runs {
        let mut spec = build_protocol(ProtocolName::Rtoken, true);
        if reveals {
            spec = spec.with_reveals();
        }
        let init = initial_state(&spec, n).expect("vehicles");
        let ts = explore_with(&spec, &init, &bounds, &opts).expect("exploration");
        let s = ts.stats();
        println!(
            "{label:<22}{:>8}{:>10}{:>12}{:>11}",
            s.nodes, s.merged, s.traces, s.truncated_traces
        );
        let leaks = ts.secrecy_violations();
        if let Some((depth, t)) = leaks.first() {
            println!("{:<22}first derivable secret: {t} at depth {depth}", "");
        }
    }
}
