#[macro_use]
mod common;

use std::collections::BTreeSet;

use common::*;
use edpn::coverage::{self, Item, Metric};
use edpn::patterns;
use edpn::sim::{self, Capacity};
use edpn::testgen;
use edpn::{id, Id, Marking};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(256)
}

fn ok(check: Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn firing_conserves_tokens(r in recipe()) {
        ok(check_token_conservation(&build(&r, false)))?;
    }

    #[test]
    fn conflict_members_disable_each_other(r in recipe()) {
        ok(check_conflict(&build(&r, false), false))?;
    }

    #[test]
    fn conflict_is_unconditional_without_self_loops(r in recipe()) {
        ok(check_conflict(&build(&r, true), true))?;
    }

    #[test]
    fn interlock_orders_its_transitions(r in recipe()) {
        let host = build(&r, false);
        let ts: Vec<Id> = host.transitions().map(|t| t.id.clone()).collect();
        prop_assume!(ts.len() >= 2);
        let pref = &ts[r.noise[0] as usize % ts.len()];
        let sec = &ts[r.noise[1] as usize % ts.len()];
        prop_assume!(pref != sec);
        let built = patterns::build_interlock(&host, pref.as_str(), sec.as_str()).unwrap();
        ok(check_interlock(&built.net, pref, sec))?;
    }

    #[test]
    fn triggered_transitions_fire_first(r in recipe()) {
        ok(check_trigger_priority(&build(&r, false), &r.noise))?;
    }

    #[test]
    fn relational_form_round_trips(r in recipe()) {
        ok(check_store_round_trip(&build(&r, false)))?;
    }

    #[test]
    fn composition_laws_hold(r in recipe()) {
        ok(check_compose_laws(&build(&r, false), &r.noise))?;
    }

    #[test]
    fn coverage_is_monotonic(r in recipe()) {
        ok(check_coverage_monotonic(&build(&r, false), &r.noise))?;
    }

    #[test]
    fn derived_tests_replay(r in recipe()) {
        ok(check_replay_soundness(&build(&r, false), 3))?;
    }

    #[test]
    fn builders_round_trip_and_only_add(r in recipe()) {
        ok(check_builder_round_trip(&build(&r, false), &r.noise))?;
    }

    #[test]
    fn shapeless_untagged_nets_have_no_patterns(r in recipe()) {
        let mut r = r;
        r.trigger = None;
        let (mut places, mut events) = (0u8, 0u8);
        for t in &mut r.transitions {
            t.in_places &= !places;
            t.in_events &= !events;
            places |= t.in_places;
            events |= t.in_events;
        }
        for t in &mut r.transitions {
            t.out_places &= !places;
        }
        let net = build(&r, false);
        // Oracle: no place or input event has two consumers and no place
        // both receives and loses tokens, so nothing links two transitions.
        let shapeless = net.places().map(|p| &p.id).chain(net.input_events().map(|e| &e.id)).all(|x| {
            let consumers = net.consumers_of(x.as_str()).count();
            let producers = net.producers_of(x.as_str()).count();
            consumers <= 1 && (net.place(x.as_str()).is_none() || consumers == 0 || producers == 0)
        });
        prop_assert!(shapeless);
        prop_assert_eq!(patterns::recognize(&net), vec![]);
    }
}

// ---------------------------------------------------------------------------
// Exhaustive checks on the bundled fixtures.

#[test]
fn fixtures_conserve_tokens_everywhere() {
    for name in edpn::fixtures::names() {
        check_token_conservation(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixture_conflicts_are_mutually_disabling() {
    for name in edpn::fixtures::names() {
        let net = fixture(name);
        check_conflict(&net, is_pure(&net)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixtures_round_trip_and_compose() {
    for name in edpn::fixtures::names() {
        let net = fixture(name);
        check_store_round_trip(&net).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_compose_laws(&net, &[3, 1, 4, 1, 5, 9, 2, 6]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixture_tests_replay() {
    for name in edpn::fixtures::names() {
        check_replay_soundness(&fixture(name), 4).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixture_triggers_take_priority_in_every_reachable_state() {
    let net = fixture("gdc-safety-full");
    let events: Vec<Id> = net.input_events().map(|e| e.id.clone()).collect();
    for m in reachable(&net, 10_000) {
        for mask in 0u32..(1 << events.len()) {
            let offered: Vec<Id> = events
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, e)| e.clone())
                .collect();
            let before = with_offers(&m, &offered);
            let enabled = oracle_enabled(&net, &before);
            let triggered: BTreeSet<&Id> = enabled
                .iter()
                .filter(|t| net.transition(t.as_str()).unwrap().priority == edpn::PriorityClass::Triggered)
                .collect();
            let out = sim::step(&net, &m, &offered, &Default::default());
            if let Ok(sim::StepOutcome::Fired(s)) = out {
                if !triggered.is_empty() {
                    assert!(
                        triggered.contains(&s.fired),
                        "{} fired at {before} over {triggered:?}",
                        s.fired
                    );
                }
            }
        }
    }
}

#[test]
fn fixture_builders_round_trip() {
    let host = fixture("gdc-basic");
    for a in 0..4u8 {
        for b in 0..4u8 {
            for kind in 0..7u8 {
                let noise = [kind, a, b, (a + b) % 4, a, b];
                check_builder_round_trip(&host, &noise).unwrap_or_else(|e| panic!("{noise:?}: {e}"));
            }
        }
    }
}

/// Brute-force oracle: every transition sequence of length 1..=4 that the
/// oracle firing rule accepts when each step's events are offered, where no
/// other transition could steal the step.
fn brute_force_paths(net: &edpn::Net, start: &Marking, max: usize) -> BTreeSet<Vec<Id>> {
    let ts: Vec<Id> = net.transitions().map(|t| t.id.clone()).collect();
    let mut found = BTreeSet::new();
    let mut frontier = vec![(start.clone(), Vec::<Id>::new())];
    for _ in 0..max {
        let mut next = Vec::new();
        for (m, seq) in &frontier {
            for t in &ts {
                let needed = oracle_needed(net, m, t.as_str());
                let offered = with_offers(m, &needed);
                let enabled = oracle_enabled(net, &offered);
                if !enabled.contains(t) {
                    continue;
                }
                // The simulator would pick the lexicographically first
                // enabled transition of the highest class.
                let chosen = enabled.iter().next().unwrap();
                if chosen != t {
                    continue;
                }
                let mut after = oracle_fire(net, &offered, t.as_str());
                after.clear_pending();
                if after.max_tokens() > 1 {
                    continue;
                }
                let mut seq = seq.clone();
                seq.push(t.clone());
                found.insert(seq.clone());
                next.push((after, seq));
            }
        }
        frontier = next;
    }
    found
}

#[test]
fn path_enumeration_is_exhaustive_on_the_basic_controller() {
    let net = fixture("gdc-basic");
    for bound in 1..=4 {
        let oracle = brute_force_paths(&net, net.initial_marking(), bound);
        let got: BTreeSet<Vec<Id>> = testgen::enumerate_paths(&net, net.initial_marking(), bound, None)
            .unwrap()
            .into_iter()
            .map(|p| p.transitions)
            .collect();
        assert_eq!(got, oracle, "bound {bound}");
    }
}

#[test]
fn context_coverage_refines_input_event_coverage() {
    let net = fixture("gdc-basic");
    let tests = derived_tests(&net, 4).unwrap();
    assert!(
        tests.len() <= 16,
        "subset search assumes a small suite, got {}",
        tests.len()
    );
    let mut strict = false;
    for mask in 1u32..(1 << tests.len()) {
        let subset: Vec<_> = tests
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| t.clone())
            .collect();
        let report = coverage::measure(&net, &subset).unwrap();
        let ctx = report.get(Metric::Ccontext).is_complete();
        let cie = report.get(Metric::Cie).is_complete();
        assert!(!ctx || cie, "full Ccontext without full Cie");
        strict |= cie && !ctx;
    }
    assert!(!strict, "every full-Cie suite of this net also covers all contexts");
}

#[test]
fn context_coverage_is_strictly_finer() {
    // One event consumed from two different marked places.
    let text = "lane l L\nplace a l\nplace b l\nplace c l\nplace d l\nevent e in l\ntrans t1 l\ntrans t2 l\n\
                arc a -> t1\narc e -> t1\narc t1 -> c\narc b -> t2\narc e -> t2\narc t2 -> d\nmark a\nmark b\n";
    let net = edpn::format::parse_model(text).unwrap().net;
    let paths = testgen::enumerate_paths(&net, net.initial_marking(), 1, None).unwrap();
    let first = testgen::derive_test_case(&net, &paths[0], "only t1").unwrap();
    assert_eq!(first.steps[0].transition, id("t1"));
    let report = coverage::measure(&net, &[first]).unwrap();
    assert!(report.get(Metric::Cie).is_complete());
    assert!(!report.get(Metric::Ccontext).is_complete());
    let all = derived_tests(&net, 2).unwrap();
    assert!(coverage::measure(&net, &all)
        .unwrap()
        .get(Metric::Ccontext)
        .is_complete());
}

#[test]
fn input_event_contexts_of_the_shared_event() {
    let net = fixture("gdc-basic");
    let contexts = coverage::contexts_of(&net, "p1").unwrap();
    let items: BTreeSet<Item> = contexts.iter().map(|c| c.item()).collect();
    let universe = coverage::universe(&net, Metric::Ccontext);
    assert!(items.is_subset(&universe));
    assert_eq!(contexts.len(), 2);
}

#[test]
fn firing_matches_oracle_under_unbounded_capacity() {
    let net = fixture("gdc-basic");
    let mut m = net.initial_marking().clone();
    m.add_tokens(&id("d1"), 2);
    m.offer(&id("p1"));
    let fired = sim::fire_with(&net, &m, "t1", Capacity::Unbounded).unwrap();
    assert_eq!(fired.marking, oracle_fire(&net, &m, "t1"));
}
