//! Firing-path enumeration and system-level test case derivation.
//!
//! The generator plays the environment: before each firing it offers
//! exactly the input events the chosen transition still needs. A branch is
//! kept only when the simulator, given those events, would fire that very
//! transition, so every path replays through [`crate::sim::run_from`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::coverage::{self, Item, Metric, MetricReport};
use crate::format::{content, ParseError};
use crate::model::{Direction, Id, Marking, Net};
use crate::sim::{self, ExecutionTrace, Schedule, SimConfig, SimError, StepOutcome, DEFAULT_STEP_BUDGET};

/// Default cap on search-tree nodes visited by [`enumerate_paths`].
pub const DEFAULT_NODE_BUDGET: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TestgenError {
    #[error("maxFirings must be at least 1")]
    ZeroBound,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("exploration budget of {budget} markings exhausted ({} paths found)", partial.len())]
    BudgetExceeded { budget: usize, partial: Vec<Path> },
    #[error("test case {name:?} does not replay: {reason}")]
    NotReplayable { name: String, reason: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A firing sequence plus the external input events that drive it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub start: Marking,
    pub transitions: Vec<Id>,
    /// Events offered at each firing step.
    pub schedule: Schedule,
}

impl Path {
    pub fn events(&self) -> Vec<&Id> {
        self.schedule.entries().iter().map(|(_, e)| e).collect()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Configuration used for exploration and replay: safe, lexicographic,
/// step-lifetime events, stopping after `firings` transitions.
fn replay_config(firings: usize) -> SimConfig {
    SimConfig {
        step_budget: DEFAULT_STEP_BUDGET.max(firings + 1),
        stop_after: Some(firings),
        ..SimConfig::default()
    }
}

/// External events `t` needs on top of what is already pending.
fn needed(net: &Net, marking: &Marking, t: &str) -> Vec<Id> {
    net.inputs_of(t)
        .filter(|i| net.event(i.as_str()).is_some() && marking.pending(i.as_str()) == 0)
        .cloned()
        .collect()
}

struct Search<'a> {
    net: &'a Net,
    max: usize,
    target: Option<Marking>,
    budget: usize,
    visited: usize,
    transitions: Vec<Id>,
    offered: Vec<Vec<Id>>,
    found: Vec<Path>,
    start: Marking,
}

impl Search<'_> {
    fn record(&mut self, marking: &Marking) {
        if self.transitions.is_empty() {
            return;
        }
        if self.target.as_ref().is_some_and(|t| *t != marking.data_only()) {
            return;
        }
        let schedule = self
            .offered
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |e| (i, e.clone())))
            .collect();
        self.found.push(Path {
            start: self.start.clone(),
            transitions: self.transitions.clone(),
            schedule: Schedule::new(schedule).expect("ticks are increasing"),
        });
    }

    fn explore(&mut self, marking: &Marking) -> Result<(), TestgenError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(TestgenError::BudgetExceeded {
                budget: self.budget,
                partial: std::mem::take(&mut self.found),
            });
        }
        self.record(marking);
        if self.transitions.len() == self.max {
            return Ok(());
        }
        let config = replay_config(self.max);
        let ids: Vec<Id> = self.net.transitions().map(|t| t.id.clone()).collect();
        for t in ids {
            let offer = needed(self.net, marking, t.as_str());
            let next = match sim::step(self.net, marking, &offer, &config) {
                Ok(StepOutcome::Fired(s)) if s.fired == t => s.marking_after,
                Ok(_) | Err(SimError::CapacityViolation { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            self.transitions.push(t);
            self.offered.push(offer);
            let result = self.explore(&next);
            self.transitions.pop();
            self.offered.pop();
            result?;
        }
        Ok(())
    }
}

/// Every non-empty firing path of at most `max_firings` transitions from
/// the data part of `start`, in lexicographic order. With a target only
/// paths ending in that data marking are kept.
pub fn enumerate_paths(
    net: &Net,
    start: &Marking,
    max_firings: usize,
    target: Option<&Marking>,
) -> Result<Vec<Path>, TestgenError> {
    enumerate_paths_with_budget(net, start, max_firings, target, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_paths_with_budget(
    net: &Net,
    start: &Marking,
    max_firings: usize,
    target: Option<&Marking>,
    budget: usize,
) -> Result<Vec<Path>, TestgenError> {
    if max_firings == 0 {
        return Err(TestgenError::ZeroBound);
    }
    if let Some(v) = crate::validate::errors(net).first() {
        return Err(SimError::InvalidNet(v.to_string()).into());
    }
    let start = start.data_only();
    start.check(net).map_err(SimError::InvalidMarking)?;
    let mut search = Search {
        net,
        max: max_firings,
        target: target.map(Marking::data_only),
        budget,
        visited: 0,
        transitions: Vec::new(),
        offered: Vec::new(),
        found: Vec::new(),
        start: start.clone(),
    };
    search.explore(&start)?;
    Ok(search.found)
}

/// Runs a path's schedule and checks it fires exactly the path.
pub fn replay_path(net: &Net, path: &Path) -> Result<ExecutionTrace, TestgenError> {
    let trace = sim::run_from(net, &path.start, &path.schedule, &replay_config(path.len()))?;
    if trace.fired() != path.transitions.iter().collect::<Vec<_>>() {
        return Err(TestgenError::NotReplayable {
            name: join(&path.transitions),
            reason: format!("fired {}", join(trace.fired())),
        });
    }
    Ok(trace)
}

fn join<'a>(ids: impl IntoIterator<Item = &'a Id>) -> String {
    let v: Vec<&str> = ids.into_iter().map(Id::as_str).collect();
    if v.is_empty() {
        "nothing".into()
    } else {
        v.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestStep {
    pub transition: Id,
    /// External input events supplied for this step.
    pub inputs: Vec<Id>,
    /// Output events the system must emit.
    pub outputs: Vec<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    pub preconditions: Marking,
    pub steps: Vec<TestStep>,
    pub postconditions: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceEntry {
    /// Position in the numbering shared by both columns.
    pub number: usize,
    pub direction: Direction,
    pub event: Id,
}

impl TestCase {
    /// Inputs then outputs of each step, numbered consecutively.
    pub fn event_sequence(&self) -> Vec<SequenceEntry> {
        let entries = self.steps.iter().flat_map(|s| {
            let ins = s.inputs.iter().map(|e| (Direction::Input, e));
            let outs = s.outputs.iter().map(|e| (Direction::Output, e));
            ins.chain(outs)
        });
        entries
            .enumerate()
            .map(|(i, (direction, event))| SequenceEntry {
                number: i + 1,
                direction,
                event: event.clone(),
            })
            .collect()
    }

    pub fn schedule(&self) -> Schedule {
        let entries = self
            .steps
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.inputs.iter().map(move |e| (i, e.clone())))
            .collect();
        Schedule::new(entries).expect("ticks are increasing")
    }
}

pub fn derive_test_case(net: &Net, path: &Path, name: &str) -> Result<TestCase, TestgenError> {
    let trace = replay_path(net, path).map_err(|e| match e {
        TestgenError::NotReplayable { reason, .. } => TestgenError::NotReplayable {
            name: name.to_string(),
            reason,
        },
        TestgenError::Sim(e) => TestgenError::NotReplayable {
            name: name.to_string(),
            reason: e.to_string(),
        },
        other => other,
    })?;
    let steps = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| TestStep {
            transition: s.fired.clone(),
            inputs: path
                .schedule
                .entries()
                .iter()
                .filter(|(tick, _)| *tick == i)
                .map(|(_, e)| e.clone())
                .collect(),
            outputs: s.emitted.clone(),
        })
        .collect();
    Ok(TestCase {
        name: name.to_string(),
        preconditions: path.start.data_only(),
        steps,
        postconditions: trace.final_marking.data_only(),
    })
}

/// Runs a test case's inputs from its preconditions and checks the fired
/// transitions, emitted outputs and final data marking.
pub fn replay(net: &Net, tc: &TestCase) -> Result<ExecutionTrace, TestgenError> {
    let fail = |reason: String| TestgenError::NotReplayable {
        name: tc.name.clone(),
        reason,
    };
    let trace = sim::run_from(net, &tc.preconditions, &tc.schedule(), &replay_config(tc.steps.len()))
        .map_err(|e| fail(e.to_string()))?;
    if trace.steps.len() != tc.steps.len() {
        return Err(fail(format!(
            "expected {} firings, got {}",
            tc.steps.len(),
            trace.steps.len()
        )));
    }
    for (i, (want, got)) in tc.steps.iter().zip(&trace.steps).enumerate() {
        if want.transition != got.fired {
            return Err(fail(format!(
                "step {}: expected {}, fired {}",
                i + 1,
                want.transition,
                got.fired
            )));
        }
        if want.outputs != got.emitted {
            return Err(fail(format!(
                "step {}: expected outputs {}, got {}",
                i + 1,
                join(&want.outputs),
                join(&got.emitted)
            )));
        }
    }
    if trace.final_marking.data_only() != tc.postconditions {
        return Err(fail(format!(
            "expected final marking {}, got {}",
            tc.postconditions,
            trace.final_marking.data_only()
        )));
    }
    Ok(trace)
}

/// Result of [`generate_for_coverage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub tests: Vec<TestCase>,
    pub report: MetricReport,
    /// Exploration stopped early; the selection used the partial paths.
    pub budget_exceeded: bool,
}

/// Greedy set cover over the enumerated paths: repeatedly take the path
/// adding the most uncovered items, preferring shorter and then
/// lexicographically smaller paths.
pub fn generate_for_coverage(
    net: &Net,
    metric: Metric,
    start: &Marking,
    max_firings: usize,
) -> Result<Generated, TestgenError> {
    let (paths, budget_exceeded) = match enumerate_paths(net, start, max_firings, None) {
        Ok(p) => (p, false),
        Err(TestgenError::BudgetExceeded { partial, .. }) => (partial, true),
        Err(e) => return Err(e),
    };
    let universe = coverage::universe(net, metric);
    let mut candidates: Vec<(Path, BTreeSet<Item>)> = Vec::with_capacity(paths.len());
    for p in paths {
        let trace = replay_path(net, &p)?;
        let items = coverage::exercised(&trace, metric);
        candidates.push((p, items.intersection(&universe).cloned().collect()));
    }
    candidates.sort_by(|a, b| {
        a.0.len()
            .cmp(&b.0.len())
            .then_with(|| a.0.transitions.cmp(&b.0.transitions))
    });

    let mut covered = BTreeSet::new();
    let mut tests = Vec::new();
    loop {
        let best = candidates
            .iter()
            .enumerate()
            .map(|(i, (_, items))| (i, items.difference(&covered).count()))
            .filter(|(_, gain)| *gain > 0)
            // max_by_key keeps the last maximum; iterate reversed so the
            // earliest (shortest, then smallest) candidate wins ties.
            .rev()
            .max_by_key(|(_, gain)| *gain);
        let Some((i, _)) = best else { break };
        let (path, items) = candidates.remove(i);
        covered.extend(items);
        let name = format!("{} {}: {}", metric, tests.len() + 1, join(&path.transitions));
        tests.push(derive_test_case(net, &path, &name)?);
    }
    Ok(Generated {
        tests,
        report: MetricReport::new(metric, universe, &covered),
        budget_exceeded,
    })
}

fn describe_marking(net: &Net, marking: &Marking) -> String {
    let parts: Vec<String> = marking
        .marked()
        .map(|(p, n)| {
            let count = if n == 1 { String::new() } else { format!(" x{n}") };
            match net.label_of(p.as_str()).filter(|l| !l.is_empty()) {
                Some(label) => format!("{p} marked{count} ({label})"),
                None => format!("{p} marked{count}"),
            }
        })
        .collect();
    if parts.is_empty() {
        "no data place marked".into()
    } else {
        parts.join(", ")
    }
}

/// Name / Pre-conditions / two-column Event Sequence / Post-conditions.
pub fn render_test_case(net: &Net, tc: &TestCase) -> String {
    let cell = |e: &SequenceEntry| match net.label_of(e.event.as_str()).filter(|l| !l.is_empty()) {
        Some(label) => format!("{}. {}: {}", e.number, e.event, label),
        None => format!("{}. {}", e.number, e.event),
    };
    let sequence = tc.event_sequence();
    let width = sequence
        .iter()
        .filter(|e| e.direction == Direction::Input)
        .map(|e| cell(e).len())
        .chain(["Input events".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "Name: {}", tc.name);
    let _ = writeln!(out, "Pre-conditions: {}", describe_marking(net, &tc.preconditions));
    let _ = writeln!(out, "Event Sequence:");
    let _ = writeln!(out, "  {:<width$}  Output events", "Input events");
    for e in &sequence {
        match e.direction {
            Direction::Input => {
                let _ = writeln!(out, "  {}", cell(e));
            }
            Direction::Output => {
                let _ = writeln!(out, "  {:<width$}  {}", "", cell(e));
            }
        }
    }
    let _ = writeln!(out, "Post-conditions: {}", describe_marking(net, &tc.postconditions));
    out
}

fn marking_rows(out: &mut String, key: &str, marking: &Marking) {
    for (p, n) in marking.marked() {
        if n == 1 {
            let _ = writeln!(out, "{key},{p}");
        } else {
            let _ = writeln!(out, "{key},{p},{n}");
        }
    }
}

/// Machine-readable form: one `[testcase]` section per test with
/// `name`, `pre`, `step`, `in`, `out` and `post` rows.
pub fn write_test_cases(tests: &[TestCase]) -> String {
    let mut out = String::new();
    for tc in tests {
        out.push_str("[testcase]\n");
        let _ = writeln!(out, "name,{}", tc.name);
        marking_rows(&mut out, "pre", &tc.preconditions);
        for s in &tc.steps {
            let _ = writeln!(out, "step,{}", s.transition);
            for e in &s.inputs {
                let _ = writeln!(out, "in,{e}");
            }
            for e in &s.outputs {
                let _ = writeln!(out, "out,{e}");
            }
        }
        marking_rows(&mut out, "post", &tc.postconditions);
    }
    out
}

pub fn parse_test_cases(text: &str) -> Result<Vec<TestCase>, TestgenError> {
    let mut tests: Vec<TestCase> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| TestgenError::Parse(ParseError { line, message });
        let row = content(raw);
        if row.is_empty() {
            continue;
        }
        if row == "[testcase]" {
            tests.push(TestCase {
                name: String::new(),
                preconditions: Marking::new(),
                steps: Vec::new(),
                postconditions: Marking::new(),
            });
            continue;
        }
        let tc = tests
            .last_mut()
            .ok_or_else(|| err("rows must follow a [testcase] header".into()))?;
        let (key, rest) = row
            .split_once(',')
            .ok_or_else(|| err(format!("expected `key,value`, found {row:?}")))?;
        if key == "name" {
            tc.name = rest.trim().to_string();
            continue;
        }
        let fields: Vec<&str> = rest.split(',').map(str::trim).collect();
        let id = Id::new(fields[0]).map_err(|e| err(e.to_string()))?;
        let count = match fields.get(1) {
            Some(n) if matches!(key, "pre" | "post") => {
                n.parse::<u32>().map_err(|_| err(format!("bad token count {n:?}")))?
            }
            Some(_) => return Err(err(format!("too many fields in {key} row"))),
            None => 1,
        };
        if fields.len() > 2 {
            return Err(err(format!("too many fields in {key} row")));
        }
        fn step(tc: &mut TestCase, e: TestgenError) -> Result<&mut TestStep, TestgenError> {
            tc.steps.last_mut().ok_or(e)
        }
        let orphan = || err(format!("{key} row before any step row"));
        match key {
            "pre" => tc.preconditions.set_tokens(&id, count),
            "post" => tc.postconditions.set_tokens(&id, count),
            "step" => tc.steps.push(TestStep {
                transition: id,
                inputs: Vec::new(),
                outputs: Vec::new(),
            }),
            "in" => step(tc, orphan())?.inputs.push(id),
            "out" => step(tc, orphan())?.outputs.push(id),
            other => return Err(err(format!("unknown row kind {other:?}"))),
        }
    }
    Ok(tests)
}

/// Step-by-step table: marked data places per lane after each firing, the
/// input events consumed and the outputs emitted.
pub fn render_execution_table(net: &Net, trace: &ExecutionTrace) -> String {
    let lanes: Vec<(&Id, &str)> = net
        .lanes()
        .filter(|l| net.places().any(|p| p.lane == l.id))
        .map(|l| {
            (
                &l.id,
                if l.name.is_empty() {
                    l.id.as_str()
                } else {
                    l.name.as_str()
                },
            )
        })
        .collect();
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("Step".to_string())
        .chain(lanes.iter().map(|(_, name)| name.to_string()))
        .chain(["Input".to_string(), "Fired".to_string(), "Outputs".to_string()])
        .collect()];
    let list = |ids: &[Id]| {
        if ids.is_empty() {
            "-".to_string()
        } else {
            ids.iter().map(Id::as_str).collect::<Vec<_>>().join(", ")
        }
    };
    for s in &trace.steps {
        let mut row = vec![(s.index + 1).to_string()];
        for (lane, _) in &lanes {
            let marked: Vec<String> = s
                .marking_after
                .marked()
                .filter(|(p, _)| net.place(p.as_str()).is_some_and(|d| &d.lane == *lane))
                .map(|(p, n)| if n == 1 { p.to_string() } else { format!("{p}:{n}") })
                .collect();
            row.push(if marked.is_empty() {
                "-".into()
            } else {
                marked.join(", ")
            });
        }
        row.push(list(&s.consumed));
        row.push(s.fired.to_string());
        let mut outputs: Vec<Id> = s.emitted.clone();
        outputs.extend(s.forwarded.iter().cloned());
        row.push(list(&outputs));
        rows.push(row);
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
    }
    out
}
