use revlab::explorer::{explore, Bounds, Trace, TraceSet};
use revlab::goals::{
    check, lemma_holds, run_goals, satisfied_by, GoalId, Mode, Outcome, DEFAULT_TRACE_LIMIT,
};
use revlab::protocols::{build_protocol, initial_state, ProtocolName};
use revlab::state::Event;
use revlab::term::{Origin, Term};

fn trace_set(p: ProtocolName, change: bool, reveals: bool, max_steps: usize) -> TraceSet {
    let mut spec = build_protocol(p, change);
    if reveals {
        spec = spec.with_reveals();
    }
    let init = initial_state(&spec, 1).unwrap();
    let bounds = Bounds {
        max_steps,
        ..Bounds::default()
    };
    explore(&spec, &init, &bounds).unwrap()
}

fn traces(p: ProtocolName, change: bool, reveals: bool, max_steps: usize) -> Vec<Trace> {
    trace_set(p, change, reveals, max_steps).traces().unwrap()
}

/// The checker uses prefix semantics: an all-traces goal fails as soon as
/// some prefix falsifies the lemma, an exists-trace goal succeeds as soon as
/// some prefix satisfies it.
fn agree_on_every_prefix(ts: &[Trace], goals: &[GoalId]) -> usize {
    let mut checked = 0;
    for t in ts {
        for &g in goals {
            let mut events: Vec<Event> = Vec::new();
            let mut agg = lemma_holds(g, &events);
            assert_eq!(satisfied_by(g, &events), agg);
            for s in &t.steps {
                events.extend(s.events.iter().cloned());
                let now = lemma_holds(g, &events);
                agg = match g.mode() {
                    Mode::AllTraces => agg && now,
                    Mode::ExistsTrace => agg || now,
                };
                assert_eq!(
                    satisfied_by(g, &events),
                    agg,
                    "{g} disagrees after {} events: {events:?}",
                    events.len()
                );
                checked += 1;
            }
        }
    }
    checked
}

#[test]
fn checker_and_lemma_evaluator_agree_without_reveals() {
    for p in ProtocolName::ALL {
        for change in [false, true] {
            let ts = traces(p, change, false, 14);
            assert!(agree_on_every_prefix(&ts, &GoalId::applicable(change)) > 0);
        }
    }
}

#[test]
fn checker_and_lemma_evaluator_agree_with_reveals() {
    for p in ProtocolName::ALL {
        let ts = traces(p, true, true, 8);
        agree_on_every_prefix(&ts, &GoalId::ALL);
    }
}

fn compromised(events: &[Event], vehicle: &Term) -> bool {
    events.iter().any(|e| {
        matches!(
            &*e.label,
            "RevealLtk" | "RevealSKPSi" | "VjSKPSiReveal" | "VehicleCompromised"
        ) && e.args.first() == Some(vehicle)
    })
}

#[test]
fn reveals_never_create_counterexamples_for_honest_protocols() {
    for p in [ProtocolName::Plain, ProtocolName::Otoken] {
        let ts = trace_set(p, true, true, 14);
        for g in GoalId::ALL
            .into_iter()
            .filter(|g| g.mode() == Mode::AllTraces)
        {
            assert_eq!(
                check(g, &ts).unwrap().outcome,
                Outcome::NoCounterexampleWithinBounds,
                "{p} {g}"
            );
        }
    }
}

#[test]
fn counterexamples_under_reveals_involve_only_uncompromised_vehicles() {
    let ts = trace_set(ProtocolName::Rtoken, true, true, 14);
    for g in [GoalId::G2, GoalId::G3, GoalId::G4, GoalId::G7] {
        let v = check(g, &ts).unwrap();
        assert_eq!(v.outcome, Outcome::CounterexampleFound, "{g}");
        let events = v.evidence.unwrap().event_list();
        let v1 = Term::public("V1");
        assert!(
            !compromised(&events, &v1),
            "{g} evidence relies on a compromised vehicle"
        );
    }
}

#[test]
fn g4_never_passes_where_g3_fails() {
    for p in ProtocolName::ALL {
        for change in [false, true] {
            let spec = build_protocol(p, change);
            let init = initial_state(&spec, 1).unwrap();
            let ts = explore(&spec, &init, &Bounds::default()).unwrap();
            let v = run_goals(&ts, &[GoalId::G3, GoalId::G4], DEFAULT_TRACE_LIMIT).unwrap();
            if v[1].outcome.passes() {
                assert!(v[0].outcome.passes(), "{p} change={change}");
            }
        }
    }
}

#[test]
fn rtoken_counterexample_uses_a_forged_confirmation() {
    let ts = traces(ProtocolName::Rtoken, true, false, 14);
    let v = check(GoalId::G2, &ts[..]).unwrap();
    let t = v.evidence.expect("counterexample");
    let last = t.steps.last().unwrap();
    assert!(last.events.iter().any(|e| &*e.label == "OsrConfAcceptedBy"));
    assert!(!t.events().any(|e| &*e.label == "OsrReqMsgRecvBy"));

    let forged = last
        .inputs
        .iter()
        .find(|i| i.derivation.is_constructed())
        .expect("synthesized input");
    assert!(!last.adversary_fresh.is_empty());
    // The confirmation is (tuple body (sign body key)) with an adversary key.
    let items = forged.term.tuple_items().expect("confirmation is a tuple");
    let (_, sig) = items.last().unwrap().as_app().unwrap();
    let key = sig[1].as_fresh().expect("fresh signing key");
    assert_eq!(key.origin, Origin::Adversary);
}

#[test]
fn g5_fails_for_plain_with_an_explanation() {
    let spec = build_protocol(ProtocolName::Plain, true);
    let init = initial_state(&spec, 1).unwrap();
    let ts = explore(&spec, &init, &Bounds::default()).unwrap();
    let v = run_goals(&ts, &[GoalId::G5], DEFAULT_TRACE_LIMIT)
        .unwrap()
        .remove(0);
    assert_eq!(v.outcome, Outcome::NoWitnessWithinBounds);
    let why = v.explanation.unwrap();
    assert!(
        why.contains("CHANGE_PSEUDONYM")
            && why.contains("OSR_REQ_RECV")
            && why.contains("CanChange"),
        "{why}"
    );
}
