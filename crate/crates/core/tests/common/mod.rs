//! Shared generators and independent oracles for the integration suites.
//!
//! The oracles here re-derive firing, enabledness and reachability straight
//! from the arc list instead of going through the library's simulator.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use edpn::coverage::{self, Metric};
use edpn::patterns::{self, PatternKind};
use edpn::sim::{self, Capacity, EventLifetime, SimConfig, StepOutcome};
use edpn::store::{self, Relation, RelationalStore};
use edpn::testgen::{self, TestCase};
use edpn::{id, ArcKind, Direction, ElementKind, Id, Marking, Net, PlaceRole, PriorityClass};
use proptest::prelude::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Small random net description. Masks index into the element lists.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub lanes: u8,
    pub places: Vec<u8>,
    pub inputs: Vec<u8>,
    pub outputs: Vec<u8>,
    pub transitions: Vec<TransRecipe>,
    pub marking: u8,
    pub trigger: Option<u8>,
    /// Extra randomness for checks: event offers, subsets, builder choice.
    pub noise: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct TransRecipe {
    pub lane: u8,
    pub in_places: u8,
    pub out_places: u8,
    pub in_events: u8,
    pub out_events: u8,
    pub forward: u8,
}

fn trans_recipe(lanes: u8) -> impl Strategy<Value = TransRecipe> {
    (
        0..lanes,
        any::<u8>(),
        any::<u8>(),
        any::<u8>(),
        any::<u8>(),
        any::<u8>(),
    )
        .prop_map(
            |(lane, in_places, out_places, in_events, out_events, forward)| TransRecipe {
                lane,
                in_places,
                out_places,
                in_events,
                out_events,
                // Cross-lane handoffs are kept rare.
                forward: if forward & 0xC0 == 0xC0 { forward } else { 0 },
            },
        )
}

/// Nets with at most 8 places and 6 transitions.
pub fn recipe() -> impl Strategy<Value = Recipe> {
    (1u8..=3, 1usize..=8, 0usize..=3, 0usize..=3, 1usize..=6).prop_flat_map(|(lanes, np, ni, no, nt)| {
        (
            Just(lanes),
            prop::collection::vec(0..lanes, np),
            prop::collection::vec(0..lanes, ni),
            prop::collection::vec(0..lanes, no),
            prop::collection::vec(trans_recipe(lanes), nt),
            any::<u8>(),
            prop::option::weighted(0.3, 0..np as u8),
            prop::collection::vec(any::<u8>(), 16),
        )
            .prop_map(
                |(lanes, places, inputs, outputs, transitions, marking, trigger, noise)| Recipe {
                    lanes,
                    places,
                    inputs,
                    outputs,
                    transitions,
                    marking,
                    trigger,
                    noise,
                },
            )
    })
}

fn bit(mask: u8, i: usize) -> bool {
    mask & (1 << i) != 0
}

/// Builds the net. `pure` drops every self-loop.
pub fn build(r: &Recipe, pure: bool) -> Net {
    let mut net = Net::new();
    let lane = |i: u8| id(&format!("l{i}"));
    for l in 0..r.lanes {
        net.add_lane(lane(l), format!("Lane {l}")).unwrap();
    }
    for (i, l) in r.places.iter().enumerate() {
        net.add_place(id(&format!("d{i}")), lane(*l), format!("place {i}"))
            .unwrap();
    }
    for (i, l) in r.inputs.iter().enumerate() {
        net.add_event(id(&format!("e{i}")), Direction::Input, lane(*l), format!("input {i}"))
            .unwrap();
    }
    for (i, l) in r.outputs.iter().enumerate() {
        net.add_event(id(&format!("o{i}")), Direction::Output, lane(*l), format!("output {i}"))
            .unwrap();
    }
    for (k, t) in r.transitions.iter().enumerate() {
        let tid = id(&format!("t{k}"));
        net.add_transition(
            tid.clone(),
            lane(t.lane),
            PriorityClass::Normal,
            format!("transition {k}"),
        )
        .unwrap();
        for i in 0..r.places.len() {
            let p = id(&format!("d{i}"));
            let input = bit(t.in_places, i);
            if input {
                net.add_arc(p.clone(), tid.clone()).unwrap();
            }
            if bit(t.out_places, i) && !(pure && input) {
                net.add_arc(tid.clone(), p).unwrap();
            }
        }
        for i in 0..r.inputs.len() {
            let e = id(&format!("e{i}"));
            let input = bit(t.in_events, i);
            if input {
                net.add_arc(e.clone(), tid.clone()).unwrap();
            }
            let cross = r.inputs[i] != t.lane;
            if bit(t.forward, i) && cross && !(pure && input) {
                net.add_arc(tid.clone(), e).unwrap();
            }
        }
        for i in 0..r.outputs.len() {
            if bit(t.out_events, i) {
                net.add_arc(tid.clone(), id(&format!("o{i}"))).unwrap();
            }
        }
    }
    for i in 0..r.places.len() {
        if bit(r.marking, i) {
            net.set_initial_tokens(&id(&format!("d{i}")), 1);
        }
    }
    if let Some(p) = r.trigger {
        let p = id(&format!("d{p}"));
        net.set_role(p.clone(), PlaceRole::Trigger);
        let consumers: Vec<Id> = net.consumers_of(p.as_str()).cloned().collect();
        for t in consumers {
            net.set_priority(t.as_str(), PriorityClass::Triggered).unwrap();
        }
    }
    assert!(
        edpn::validation_errors(&net).is_empty(),
        "{:?}",
        edpn::validation_errors(&net)
    );
    net
}

// ---------------------------------------------------------------------------
// Oracles

fn arcs_in(net: &Net, t: &str) -> Vec<Id> {
    net.arcs()
        .filter(|a| a.kind == ArcKind::In && a.target.as_str() == t)
        .map(|a| a.source.clone())
        .collect()
}

fn arcs_out(net: &Net, t: &str) -> Vec<Id> {
    net.arcs()
        .filter(|a| a.kind == ArcKind::Out && a.source.as_str() == t)
        .map(|a| a.target.clone())
        .collect()
}

fn is_place(net: &Net, x: &str) -> bool {
    net.kind_of(x) == Some(ElementKind::Place)
}

pub fn oracle_enabled(net: &Net, m: &Marking) -> BTreeSet<Id> {
    net.transitions()
        .map(|t| t.id.clone())
        .filter(|t| {
            arcs_in(net, t.as_str()).iter().all(|x| {
                if is_place(net, x.as_str()) {
                    m.tokens(x.as_str()) > 0
                } else {
                    m.pending(x.as_str()) > 0
                }
            })
        })
        .collect()
}

/// Firing rule computed element by element: inputs lose one, data outputs
/// gain one, cross-lane input events become pending.
pub fn oracle_fire(net: &Net, m: &Marking, t: &str) -> Marking {
    let mut out = m.clone();
    for x in arcs_in(net, t) {
        if is_place(net, x.as_str()) {
            out.set_tokens(&x, m.tokens(x.as_str()) - 1);
        } else {
            assert!(out.take_pending(&x));
        }
    }
    for y in arcs_out(net, t) {
        match net.kind_of(y.as_str()) {
            Some(ElementKind::Place) => out.set_tokens(&y, out.tokens(y.as_str()) + 1),
            Some(ElementKind::Event(Direction::Input)) => out.offer(&y),
            _ => {}
        }
    }
    out
}

/// Events `t` would need offered on top of `m`.
pub fn oracle_needed(net: &Net, m: &Marking, t: &str) -> Vec<Id> {
    arcs_in(net, t)
        .into_iter()
        .filter(|x| !is_place(net, x.as_str()) && m.pending(x.as_str()) == 0)
        .collect()
}

pub fn with_offers(m: &Marking, events: &[Id]) -> Marking {
    let mut out = m.clone();
    for e in events {
        out.offer(e);
    }
    out
}

/// Breadth-first exploration where the environment may offer whatever a
/// transition needs, ignoring priority (a superset of real behaviour).
/// Calls `visit(state, fired, next)` for every edge; stops at `limit`
/// states. Capacity-violating firings are skipped.
pub fn explore<S: Ord + Clone>(
    net: &Net,
    start: S,
    marking: impl Fn(&S) -> Marking,
    advance: impl Fn(&S, &Id, Marking) -> S,
    limit: usize,
    mut visit: impl FnMut(&S, &Id, &S) -> Check,
) -> Check {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let m = marking(&s);
        for t in net.transitions().map(|t| t.id.clone()) {
            let offered = with_offers(&m, &oracle_needed(net, &m, t.as_str()));
            if !oracle_enabled(net, &offered).contains(&t) {
                continue;
            }
            let next_m = oracle_fire(net, &offered, t.as_str());
            if next_m.max_tokens() > 1 {
                continue;
            }
            let mut next_m = next_m;
            // Unconsumed offers are lost at the end of the step.
            next_m.clear_pending();
            let next = advance(&s, &t, next_m);
            visit(&s, &t, &next)?;
            if seen.len() < limit && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(())
}

pub fn reachable(net: &Net, limit: usize) -> Vec<Marking> {
    let mut all = BTreeSet::from([net.initial_marking().clone()]);
    explore(
        net,
        net.initial_marking().clone(),
        Marking::clone,
        |_, _, m| m,
        limit,
        |_, _, next| {
            all.insert(next.clone());
            Ok(())
        },
    )
    .unwrap();
    all.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Property checks shared by the proptest suite and the acceptance target.

pub fn check_token_conservation(net: &Net) -> Check {
    for m in reachable(net, 300) {
        for t in net.transitions() {
            let offered = with_offers(&m, &oracle_needed(net, &m, t.id.as_str()));
            if !oracle_enabled(net, &offered).contains(&t.id) {
                continue;
            }
            let fired = sim::fire_with(net, &offered, t.id.as_str(), Capacity::Unbounded)
                .map_err(|e| format!("{} at {offered}: {e}", t.id))?;
            let expected = oracle_fire(net, &offered, t.id.as_str());
            ensure!(
                fired.marking == expected,
                "{} at {offered}: library {} oracle {expected}",
                t.id,
                fired.marking
            );
        }
    }
    Ok(())
}

/// Firing one member of a conflict pair disables the other, unless the
/// fired member hands back every scarce shared input (a self-loop).
/// `unconditional` asserts the plain statement, for self-loop-free nets.
pub fn check_conflict(net: &Net, unconditional: bool) -> Check {
    let all_events: Vec<Id> = net.input_events().map(|e| e.id.clone()).collect();
    for base in reachable(net, 300) {
        let m = with_offers(&base, &all_events);
        for pair in sim::conflicts_at(net, &m).map_err(|e| e.to_string())? {
            let enabled = oracle_enabled(net, &m);
            ensure!(
                enabled.contains(&pair.first) && enabled.contains(&pair.second),
                "conflict {}/{} not both enabled at {m}",
                pair.first,
                pair.second
            );
            for (a, b) in [(&pair.first, &pair.second), (&pair.second, &pair.first)] {
                let after = oracle_fire(net, &m, a.as_str());
                if !oracle_enabled(net, &after).contains(b) {
                    continue;
                }
                let outs = arcs_out(net, a.as_str());
                let returned = pair.shared.iter().all(|x| outs.contains(x));
                ensure!(
                    !unconditional && returned,
                    "firing {a} at {m} leaves {b} enabled (shared {:?})",
                    pair.shared
                );
            }
        }
    }
    Ok(())
}

/// No transition both consumes and produces the same element.
pub fn is_pure(net: &Net) -> bool {
    net.transitions().all(|t| {
        arcs_in(net, t.id.as_str())
            .iter()
            .all(|x| !net.has_arc(t.id.as_str(), x.as_str()))
    })
}

/// Interlock `preferred -> lock -> secondary`: no explored trace fires the
/// secondary before the preferred.
pub fn check_interlock(net: &Net, preferred: &Id, secondary: &Id) -> Check {
    explore(
        net,
        (net.initial_marking().clone(), false),
        |s| s.0.clone(),
        |s, t, m| (m, s.1 || t == preferred),
        10_000,
        |s, t, _| {
            ensure!(
                !(t == secondary && !s.1),
                "{secondary} fired before {preferred} from {}",
                s.0
            );
            Ok(())
        },
    )
}

/// Steps the real simulator with offers drawn from `noise` and checks
/// that a triggered transition fires whenever one is enabled.
pub fn check_trigger_priority(net: &Net, noise: &[u8]) -> Check {
    let events: Vec<Id> = net.input_events().map(|e| e.id.clone()).collect();
    let config = SimConfig {
        capacity: Capacity::Unbounded,
        lifetime: EventLifetime::Persistent,
        ..SimConfig::default()
    };
    let mut m = net.initial_marking().clone();
    for (k, byte) in noise.iter().enumerate() {
        let offered: Vec<Id> = events
            .iter()
            .enumerate()
            .filter(|(i, _)| bit(*byte, *i))
            .map(|(_, e)| e.clone())
            .collect();
        let before = with_offers(&m, &offered);
        let enabled = oracle_enabled(net, &before);
        let triggered: BTreeSet<&Id> = enabled
            .iter()
            .filter(|t| net.transition(t.as_str()).unwrap().priority == PriorityClass::Triggered)
            .collect();
        match sim::step(net, &m, &offered, &config).map_err(|e| e.to_string())? {
            StepOutcome::Fired(s) => {
                ensure!(
                    enabled.contains(&s.fired),
                    "step {k}: {} fired but not enabled",
                    s.fired
                );
                if !triggered.is_empty() {
                    ensure!(
                        triggered.contains(&s.fired) && s.priority == PriorityClass::Triggered,
                        "step {k}: {} fired while {:?} were triggered",
                        s.fired,
                        triggered
                    );
                }
                m = s.marking_after;
            }
            StepOutcome::Quiescent { marking, .. } => {
                ensure!(enabled.is_empty(), "step {k}: quiescent with {enabled:?} enabled");
                m = marking;
            }
        }
        if m.max_tokens() > 4 {
            break;
        }
    }
    Ok(())
}

pub fn check_store_round_trip(net: &Net) -> Check {
    let st = store::to_relations(net).map_err(|e| e.to_string())?;
    let back = store::from_relations(&st).map_err(|e| e.to_string())?;
    ensure!(&back == net, "relational round trip changed the net");
    let rows: usize = st.row_count();
    ensure!(
        rows == net.arcs().count(),
        "{rows} rows for {} arcs",
        net.arcs().count()
    );
    let text = store::write_store(&st).map_err(|e| e.to_string())?;
    let parsed = store::parse_store(&text).map_err(|e| e.to_string())?;
    ensure!(parsed == st, "relational text round trip changed the store");
    let model = edpn::format::parse_model(&edpn::format::write_model(net)).map_err(|e| e.to_string())?;
    ensure!(&model.net == net, "model text round trip changed the net");
    Ok(())
}

/// Splits the rows of `net`'s store three ways using `noise`.
fn split_store(net: &Net, noise: &[u8]) -> [RelationalStore; 3] {
    let full = store::to_relations(net).unwrap();
    let mut parts = [(); 3].map(|_| RelationalStore {
        entities: full.entities.clone(),
        ..RelationalStore::default()
    });
    let mut k = 0;
    for relation in Relation::ALL {
        for row in full.relation(relation) {
            let which = noise[k % noise.len()] as usize % 3;
            parts[which].relation_mut(relation).insert(row.clone());
            k += 1;
        }
    }
    parts
}

pub fn check_compose_laws(net: &Net, noise: &[u8]) -> Check {
    let c = |a: &RelationalStore, b: &RelationalStore| store::compose(a, b).map_err(|e| e.to_string());
    let [a, b, d] = split_store(net, noise);
    let empty = RelationalStore::default();
    ensure!(
        c(&a, &empty)? == a && c(&empty, &a)? == a,
        "empty store is not an identity"
    );
    ensure!(c(&a, &b)? == c(&b, &a)?, "compose is not commutative");
    ensure!(c(&c(&a, &b)?, &d)? == c(&a, &c(&b, &d)?)?, "compose is not associative");
    let whole = c(&c(&a, &b)?, &d)?;
    ensure!(
        whole == store::to_relations(net).unwrap(),
        "parts do not compose back to the whole"
    );

    // Graphical union then export equals export then relational union.
    let mut left = net.clone();
    let mut right = net.clone();
    for (k, t) in net.transitions().enumerate() {
        let drop_from = if noise[k % noise.len()].is_multiple_of(2) {
            &mut left
        } else {
            &mut right
        };
        *drop_from = without_transition(drop_from, &t.id);
    }
    let graphical = store::to_relations(&left.union(&right).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let relational = c(
        &store::to_relations(&left).map_err(|e| e.to_string())?,
        &store::to_relations(&right).map_err(|e| e.to_string())?,
    )?;
    ensure!(graphical == relational, "graphical and relational composition differ");
    Ok(())
}

/// Copy of `net` without transition `t` and its arcs.
pub fn without_transition(net: &Net, t: &Id) -> Net {
    let mut st = store::to_relations(net).unwrap();
    st.entities.remove(t);
    for relation in Relation::ALL {
        st.relation_mut(relation).retain(|(_, tr)| tr != t);
    }
    store::from_relations(&st).unwrap()
}

pub fn derived_tests(net: &Net, max: usize) -> Result<Vec<TestCase>, String> {
    let paths = testgen::enumerate_paths(net, net.initial_marking(), max, None).map_err(|e| e.to_string())?;
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| testgen::derive_test_case(net, p, &format!("path {i}")).map_err(|e| e.to_string()))
        .collect()
}

/// Every derived test case replays: its inputs, fed from its
/// preconditions, produce exactly its outputs and postconditions.
pub fn check_replay_soundness(net: &Net, max: usize) -> Check {
    let paths = testgen::enumerate_paths(net, net.initial_marking(), max, None).map_err(|e| e.to_string())?;
    for p in &paths {
        let trace = testgen::replay_path(net, p).map_err(|e| e.to_string())?;
        ensure!(
            trace.fired() == p.transitions.iter().collect::<Vec<_>>(),
            "path {:?} replayed as {:?}",
            p.transitions,
            trace.fired()
        );
        let tc = testgen::derive_test_case(net, p, "replay").map_err(|e| e.to_string())?;
        let config = SimConfig {
            stop_after: Some(tc.steps.len()),
            ..SimConfig::default()
        };
        let run = sim::run_from(net, &tc.preconditions, &tc.schedule(), &config).map_err(|e| e.to_string())?;
        let expected: Vec<&Id> = tc.steps.iter().flat_map(|s| &s.outputs).collect();
        ensure!(
            run.emitted() == expected,
            "outputs {:?} != {:?}",
            run.emitted(),
            expected
        );
        ensure!(
            run.final_marking.data_only() == tc.postconditions,
            "final {} != post {}",
            run.final_marking,
            tc.postconditions
        );
        // The event sequence keeps each step's inputs before its outputs.
        let seq = tc.event_sequence();
        let mut k = 0;
        for s in &tc.steps {
            for e in &s.inputs {
                ensure!(
                    seq[k].direction == Direction::Input && &seq[k].event == e,
                    "sequence order"
                );
                k += 1;
            }
            for e in &s.outputs {
                ensure!(
                    seq[k].direction == Direction::Output && &seq[k].event == e,
                    "sequence order"
                );
                k += 1;
            }
        }
        testgen::replay(net, &tc).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// measure(T1 ∪ T2) covers everything measure(T1) covers.
pub fn check_coverage_monotonic(net: &Net, noise: &[u8]) -> Check {
    let tests = derived_tests(net, 3)?;
    let pick = |salt: u8| -> Vec<TestCase> {
        tests
            .iter()
            .enumerate()
            .filter(|(i, _)| noise[i % noise.len()].wrapping_add(salt).is_multiple_of(3))
            .map(|(_, t)| t.clone())
            .collect()
    };
    let t1 = pick(0);
    let mut both = t1.clone();
    both.extend(pick(1));
    let small = coverage::measure(net, &t1).map_err(|e| e.to_string())?;
    let large = coverage::measure(net, &both).map_err(|e| e.to_string())?;
    for m in Metric::ALL {
        ensure!(
            small.get(m).covered.is_subset(&large.get(m).covered),
            "{m} shrank when adding tests"
        );
        ensure!(
            large.get(m).covered.is_subset(&large.get(m).total),
            "{m} covers items outside its universe"
        );
    }
    Ok(())
}

/// Applies one builder chosen by `noise` and checks round trip, that only
/// elements were added, and that the result stays well-formed.
pub fn check_builder_round_trip(host: &Net, noise: &[u8]) -> Check {
    let ts: Vec<Id> = host.transitions().map(|t| t.id.clone()).collect();
    let pick = |k: usize| &ts[noise[k] as usize % ts.len()];
    let (a, b, c) = (pick(1), pick(2), pick(3));
    let kinds = [
        PatternKind::Conflict,
        PatternKind::Interlock,
        PatternKind::EnableDisable,
        PatternKind::Activate,
        PatternKind::Trigger,
        PatternKind::SuspendResume,
        PatternKind::Pause,
    ];
    let kind = kinds[noise[0] as usize % kinds.len()];
    let built = match kind {
        PatternKind::Conflict => {
            let places: Vec<Id> = host.places().map(|p| p.id.clone()).collect();
            patterns::build_conflict(
                host,
                places[noise[4] as usize % places.len()].as_str(),
                a.as_str(),
                b.as_str(),
            )
        }
        PatternKind::Interlock => patterns::build_interlock(host, a.as_str(), b.as_str()),
        PatternKind::EnableDisable => patterns::build_enable_disable(host, a.as_str(), b.as_str(), c.as_str()),
        PatternKind::Activate => patterns::build_activate(host, a.as_str(), b.as_str()),
        PatternKind::Trigger => {
            let d = noise[5].is_multiple_of(2).then_some(c.as_str());
            patterns::build_trigger(host, a.as_str(), b.as_str(), d)
        }
        PatternKind::SuspendResume => patterns::build_suspend_resume(host, a.as_str(), b.as_str(), c.as_str()),
        _ => patterns::build_pause(host, a.as_str(), b.as_str()),
    };
    let built = match built {
        Ok(b) => b,
        // Degenerate argument choices (same transition twice, existing
        // arc, self-loop) are rejected by design.
        Err(
            patterns::PatternError::SameTransition { .. }
            | patterns::PatternError::AlreadyWired(..)
            | patterns::PatternError::SelfLoop(..),
        ) => return Ok(()),
        Err(e) => return Err(format!("{kind}: {e}")),
    };
    ensure!(built.instance.kind == kind, "built {} for {kind}", built.instance.kind);
    let found = patterns::recognize(&built.net);
    ensure!(
        found.contains(&built.instance),
        "{} not recognized in {found:?}",
        built.instance
    );
    for x in host
        .lanes()
        .map(|l| &l.id)
        .chain(host.events().map(|e| &e.id))
        .chain(host.places().map(|p| &p.id))
    {
        ensure!(
            built.net.kind_of(x.as_str()) == host.kind_of(x.as_str()),
            "{x} changed kind"
        );
    }
    for t in &ts {
        ensure!(built.net.transition(t.as_str()).is_some(), "{t} removed");
    }
    for arc in host.arcs() {
        ensure!(
            built.net.has_arc(arc.source.as_str(), arc.target.as_str()),
            "arc {arc:?} removed"
        );
    }
    let errors = edpn::validation_errors(&built.net);
    ensure!(errors.is_empty(), "{kind} produced an invalid net: {errors:?}");
    let st = store::to_relations(&built.net).map_err(|e| e.to_string())?;
    let back = store::from_relations(&st).map_err(|e| e.to_string())?;
    ensure!(patterns::recognize(&back) == found, "roles lost through the store");
    Ok(())
}

/// Element counts, for messages.
pub fn census(net: &Net) -> BTreeMap<&'static str, usize> {
    BTreeMap::from([
        ("places", net.places().count()),
        ("transitions", net.transitions().count()),
        ("events", net.events().count()),
        ("arcs", net.arcs().count()),
    ])
}

pub fn fixture(name: &str) -> Net {
    edpn::fixtures::load(name).unwrap()
}
