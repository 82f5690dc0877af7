//! Firing semantics, event quiescence and trace execution.
//!
//! Transitions fire one at a time (interleaving). A transition is enabled
//! when every input data place holds a token and every input port event is
//! pending. Triggered-class transitions outrank normal ones; remaining ties
//! are broken by [`ConflictPolicy`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{Direction, ElementKind, Id, Marking, Net, NetError, PriorityClass};
use crate::validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Capacity {
    /// 1-bounded: producing a second token on a place is an error.
    #[default]
    Safe,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictPolicy {
    /// Fire the lowest transition id among the candidates.
    #[default]
    Lexicographic,
    /// Refuse to choose when candidates are in conflict.
    ErrorOnConflict,
}

/// How long an offered input event stays available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventLifetime {
    /// Events not consumed in the step they were offered are discarded.
    #[default]
    Step,
    /// Events stay pending until consumed.
    Persistent,
}

pub const DEFAULT_STEP_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub capacity: Capacity,
    pub policy: ConflictPolicy,
    pub lifetime: EventLifetime,
    /// Maximum number of steps (fired or idle) in one run.
    pub step_budget: usize,
    /// Stop cleanly after this many firings.
    pub stop_after: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            capacity: Capacity::Safe,
            policy: ConflictPolicy::Lexicographic,
            lifetime: EventLifetime::Step,
            step_budget: DEFAULT_STEP_BUDGET,
            stop_after: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid marking: {0}")]
    InvalidMarking(NetError),
    #[error("net is not well-formed: {0}")]
    InvalidNet(String),
    #[error("unknown transition {0}")]
    UnknownTransition(String),
    #[error("schedule step indices must be nondecreasing (entry {0})")]
    UnorderedSchedule(usize),
    #[error("{0} is not a declared input event")]
    UnknownEvent(Id),
    #[error("{transition} is not enabled: missing {}", join(missing))]
    NotEnabled { transition: Id, missing: Vec<Id> },
    #[error("firing {transition} would put a second token on {place}")]
    CapacityViolation { transition: Id, place: Id },
    #[error("conflict between {first} and {second}; policy refuses to choose")]
    Conflict { first: Id, second: Id },
    #[error("step budget of {budget} exhausted after {} firings", partial.steps.len())]
    BudgetExceeded {
        budget: usize,
        partial: Box<ExecutionTrace>,
    },
}

fn join(ids: &[Id]) -> String {
    ids.iter().map(Id::as_str).collect::<Vec<_>>().join(", ")
}

/// Result of firing one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub marking: Marking,
    /// Input events consumed, in id order.
    pub consumed: Vec<Id>,
    /// Output events emitted to the environment, in id order.
    pub emitted: Vec<Id>,
    /// Input events of other lanes offered by this firing.
    pub forwarded: Vec<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub index: usize,
    pub fired: Id,
    pub priority: PriorityClass,
    pub consumed: Vec<Id>,
    pub emitted: Vec<Id>,
    pub forwarded: Vec<Id>,
    /// Offered events discarded at the end of this step.
    pub lost: Vec<Id>,
    pub marking_after: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Fired(TraceStep),
    Quiescent { marking: Marking, lost: Vec<Id> },
}

/// An input event that was offered but never consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LostEvent {
    pub tick: usize,
    pub event: Id,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub initial: Marking,
    pub steps: Vec<TraceStep>,
    pub lost: Vec<LostEvent>,
    pub final_marking: Marking,
    pub final_quiescent: bool,
}

impl ExecutionTrace {
    pub fn fired(&self) -> Vec<&Id> {
        self.steps.iter().map(|s| &s.fired).collect()
    }

    pub fn emitted(&self) -> Vec<&Id> {
        self.steps.iter().flat_map(|s| &s.emitted).collect()
    }
}

/// One line per step, then lost events and the final state:
/// `step 1: fire t1 (normal) consumed [p1] emitted [p7] -> {d2}`.
impl fmt::Display for ExecutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial: {}", self.initial)?;
        for s in &self.steps {
            let class = match s.priority {
                PriorityClass::Triggered => "triggered",
                PriorityClass::Normal => "normal",
            };
            write!(f, "step {}: fire {} ({class})", s.index + 1, s.fired)?;
            for (what, ids) in [
                ("consumed", &s.consumed),
                ("emitted", &s.emitted),
                ("forwarded", &s.forwarded),
            ] {
                if !ids.is_empty() {
                    write!(f, " {what} [{}]", join(ids))?;
                }
            }
            writeln!(f, " -> {}", s.marking_after)?;
        }
        for l in &self.lost {
            writeln!(f, "lost: {} at tick {}", l.event, l.tick)?;
        }
        let state = if self.final_quiescent { "quiescent" } else { "stopped" };
        writeln!(f, "final: {} ({state})", self.final_marking)
    }
}

/// Input events scheduled at step indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Schedule {
    entries: Vec<(usize, Id)>,
}

impl Schedule {
    /// Entries must have nondecreasing step indices.
    pub fn new(entries: Vec<(usize, Id)>) -> Result<Self, SimError> {
        if let Some(i) = entries.windows(2).position(|w| w[0].0 > w[1].0) {
            return Err(SimError::UnorderedSchedule(i + 1));
        }
        Ok(Self { entries })
    }

    /// One event per step, in order.
    pub fn sequential(events: impl IntoIterator<Item = Id>) -> Self {
        Self {
            entries: events.into_iter().enumerate().collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, Id)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn at(&self, tick: usize) -> Vec<Id> {
        self.entries
            .iter()
            .filter(|(i, _)| *i == tick)
            .map(|(_, e)| e.clone())
            .collect()
    }

    fn last_tick(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }
}

fn check_marking(net: &Net, marking: &Marking) -> Result<(), SimError> {
    marking.check(net).map_err(SimError::InvalidMarking)
}

fn supply(net: &Net, marking: &Marking, element: &str) -> u32 {
    match net.kind_of(element) {
        Some(ElementKind::Place) => marking.tokens(element),
        Some(ElementKind::Event(_)) => marking.pending(element),
        _ => 0,
    }
}

fn missing_inputs(net: &Net, marking: &Marking, t: &str) -> Vec<Id> {
    net.inputs_of(t)
        .filter(|i| supply(net, marking, i.as_str()) == 0)
        .cloned()
        .collect()
}

pub(crate) fn is_enabled_unchecked(net: &Net, marking: &Marking, t: &str) -> bool {
    net.inputs_of(t).all(|i| supply(net, marking, i.as_str()) > 0)
}

pub(crate) fn enabled_unchecked(net: &Net, marking: &Marking) -> BTreeSet<Id> {
    net.transitions()
        .filter(|t| is_enabled_unchecked(net, marking, t.id.as_str()))
        .map(|t| t.id.clone())
        .collect()
}

pub fn enabled_transitions(net: &Net, marking: &Marking) -> Result<BTreeSet<Id>, SimError> {
    check_marking(net, marking)?;
    Ok(enabled_unchecked(net, marking))
}

pub fn is_quiescent(net: &Net, marking: &Marking) -> Result<bool, SimError> {
    Ok(enabled_transitions(net, marking)?.is_empty())
}

/// Fires `t` in safe mode.
pub fn fire(net: &Net, marking: &Marking, t: &str) -> Result<Firing, SimError> {
    fire_with(net, marking, t, Capacity::Safe)
}

pub fn fire_with(net: &Net, marking: &Marking, t: &str, capacity: Capacity) -> Result<Firing, SimError> {
    check_marking(net, marking)?;
    fire_unchecked(net, marking, t, capacity)
}

pub(crate) fn fire_unchecked(net: &Net, marking: &Marking, t: &str, capacity: Capacity) -> Result<Firing, SimError> {
    let transition = net
        .transition(t)
        .ok_or_else(|| SimError::UnknownTransition(t.to_string()))?;
    let missing = missing_inputs(net, marking, t);
    if !missing.is_empty() {
        return Err(SimError::NotEnabled {
            transition: transition.id.clone(),
            missing,
        });
    }
    let mut next = marking.clone();
    let mut consumed = Vec::new();
    for input in net.inputs_of(t) {
        match net.kind_of(input.as_str()) {
            Some(ElementKind::Place) => {
                next.take_token(input);
            }
            _ => {
                next.take_pending(input);
                consumed.push(input.clone());
            }
        }
    }
    let mut emitted = Vec::new();
    let mut forwarded = Vec::new();
    for output in net.outputs_of(t) {
        match net.kind_of(output.as_str()) {
            Some(ElementKind::Place) => {
                next.add_tokens(output, 1);
                if capacity == Capacity::Safe && next.tokens(output.as_str()) > 1 {
                    return Err(SimError::CapacityViolation {
                        transition: transition.id.clone(),
                        place: output.clone(),
                    });
                }
            }
            Some(ElementKind::Event(Direction::Output)) => emitted.push(output.clone()),
            Some(ElementKind::Event(Direction::Input)) => {
                next.offer(output);
                forwarded.push(output.clone());
            }
            _ => {}
        }
    }
    Ok(Firing {
        marking: next,
        consumed,
        emitted,
        forwarded,
    })
}

/// A pair of enabled transitions that cannot both fire from this marking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConflictPair {
    pub first: Id,
    pub second: Id,
    /// Shared inputs whose supply cannot satisfy both transitions.
    pub shared: Vec<Id>,
}

impl fmt::Display for ConflictPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) over {}", self.first, self.second, join(&self.shared))
    }
}

pub(crate) fn conflicts_among(net: &Net, marking: &Marking, enabled: &BTreeSet<Id>) -> Vec<ConflictPair> {
    let enabled: Vec<&Id> = enabled.iter().collect();
    let mut pairs = Vec::new();
    for (i, a) in enabled.iter().enumerate() {
        let inputs_a: BTreeSet<&Id> = net.inputs_of(a.as_str()).collect();
        for b in &enabled[i + 1..] {
            let shared: Vec<Id> = net
                .inputs_of(b.as_str())
                .filter(|x| inputs_a.contains(x))
                .filter(|x| supply(net, marking, x.as_str()) < 2)
                .cloned()
                .collect();
            if !shared.is_empty() {
                pairs.push(ConflictPair {
                    first: (*a).clone(),
                    second: (*b).clone(),
                    shared,
                });
            }
        }
    }
    pairs
}

pub fn conflicts_at(net: &Net, marking: &Marking) -> Result<Vec<ConflictPair>, SimError> {
    let enabled = enabled_transitions(net, marking)?;
    Ok(conflicts_among(net, marking, &enabled))
}

/// The transition `step` would fire from `marking` (pending events
/// included), or `None` when quiescent.
pub(crate) fn select(net: &Net, marking: &Marking, policy: ConflictPolicy) -> Result<Option<Id>, SimError> {
    let enabled = enabled_unchecked(net, marking);
    let triggered: BTreeSet<Id> = enabled
        .iter()
        .filter(|t| net.transition(t.as_str()).map(|t| t.priority) == Some(PriorityClass::Triggered))
        .cloned()
        .collect();
    let candidates = if triggered.is_empty() { enabled } else { triggered };
    if policy == ConflictPolicy::ErrorOnConflict {
        if let Some(pair) = conflicts_among(net, marking, &candidates).into_iter().next() {
            return Err(SimError::Conflict {
                first: pair.first,
                second: pair.second,
            });
        }
    }
    Ok(candidates.into_iter().next())
}

/// Offers `offered`, then fires one transition or reports quiescence.
pub fn step(net: &Net, marking: &Marking, offered: &[Id], config: &SimConfig) -> Result<StepOutcome, SimError> {
    check_marking(net, marking)?;
    step_unchecked(net, marking, offered, config, 0)
}

fn step_unchecked(
    net: &Net,
    marking: &Marking,
    offered: &[Id],
    config: &SimConfig,
    index: usize,
) -> Result<StepOutcome, SimError> {
    let mut current = marking.clone();
    for e in offered {
        match net.event(e.as_str()) {
            Some(ev) if ev.direction == Direction::Input => current.offer(e),
            _ => return Err(SimError::UnknownEvent(e.clone())),
        }
    }
    let Some(chosen) = select(net, &current, config.policy)? else {
        let lost = match config.lifetime {
            EventLifetime::Step => current.clear_pending(),
            EventLifetime::Persistent => Vec::new(),
        };
        return Ok(StepOutcome::Quiescent { marking: current, lost });
    };
    let firing = fire_unchecked(net, &current, chosen.as_str(), config.capacity)?;
    let mut after = firing.marking;
    let mut lost = Vec::new();
    if config.lifetime == EventLifetime::Step {
        let mut leftover = current.clone();
        for e in &firing.consumed {
            leftover.take_pending(e);
        }
        lost = leftover.clear_pending();
        for e in &lost {
            after.take_pending(e);
        }
    }
    let priority = net.transition(chosen.as_str()).map(|t| t.priority).unwrap_or_default();
    Ok(StepOutcome::Fired(TraceStep {
        index,
        fired: chosen,
        priority,
        consumed: firing.consumed,
        emitted: firing.emitted,
        forwarded: firing.forwarded,
        lost,
        marking_after: after,
    }))
}

/// Runs from the net's initial marking.
pub fn run(net: &Net, schedule: &Schedule, config: &SimConfig) -> Result<ExecutionTrace, SimError> {
    run_from(net, net.initial_marking(), schedule, config)
}

/// Injects scheduled events at their step indices and keeps stepping until
/// the schedule is exhausted and the net is quiescent.
pub fn run_from(
    net: &Net,
    initial: &Marking,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<ExecutionTrace, SimError> {
    let errors = validate::errors(net);
    if let Some(first) = errors.first() {
        return Err(SimError::InvalidNet(first.to_string()));
    }
    check_marking(net, initial)?;
    if config.capacity == Capacity::Safe {
        if let Some((place, _)) = initial.marked().find(|(_, n)| *n > 1) {
            return Err(SimError::CapacityViolation {
                transition: crate::id("initial"),
                place: place.clone(),
            });
        }
    }
    for (_, e) in schedule.entries() {
        if net.event(e.as_str()).map(|ev| ev.direction) != Some(Direction::Input) {
            return Err(SimError::UnknownEvent(e.clone()));
        }
    }

    let mut trace = ExecutionTrace {
        initial: initial.clone(),
        steps: Vec::new(),
        lost: Vec::new(),
        final_marking: initial.clone(),
        final_quiescent: false,
    };
    let mut marking = initial.clone();
    let mut tick = 0;
    loop {
        if config.stop_after.is_some_and(|n| trace.steps.len() >= n) {
            trace.final_quiescent = enabled_unchecked(net, &marking).is_empty();
            break;
        }
        let offered = schedule.at(tick);
        let exhausted = schedule.last_tick().is_none_or(|last| tick > last);
        if offered.is_empty() && exhausted && enabled_unchecked(net, &marking).is_empty() {
            trace.final_quiescent = true;
            break;
        }
        if tick >= config.step_budget {
            trace.final_marking = marking;
            return Err(SimError::BudgetExceeded {
                budget: config.step_budget,
                partial: Box::new(trace),
            });
        }
        match step_unchecked(net, &marking, &offered, config, trace.steps.len())? {
            StepOutcome::Fired(s) => {
                trace
                    .lost
                    .extend(s.lost.iter().map(|e| LostEvent { tick, event: e.clone() }));
                marking = s.marking_after.clone();
                trace.steps.push(s);
            }
            StepOutcome::Quiescent { marking: m, lost } => {
                trace
                    .lost
                    .extend(lost.into_iter().map(|event| LostEvent { tick, event }));
                marking = m;
            }
        }
        tick += 1;
    }
    trace.final_marking = marking;
    Ok(trace)
}
