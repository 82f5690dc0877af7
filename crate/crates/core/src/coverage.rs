//! Test-suite coverage over transitions, data places, input events, output
//! events and input events in context.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Direction, Id, Marking, Net};
use crate::sim::ExecutionTrace;
use crate::testgen::{self, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Ct,
    Cp,
    Cie,
    Coe,
    Ccontext,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Ct, Metric::Cp, Metric::Cie, Metric::Coe, Metric::Ccontext];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ct => "Ct",
            Metric::Cp => "Cp",
            Metric::Cie => "Cie",
            Metric::Coe => "Coe",
            Metric::Ccontext => "Ccontext",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Metric::Ct => "transitions",
            Metric::Cp => "data places",
            Metric::Cie => "input events",
            Metric::Coe => "output events",
            Metric::Ccontext => "input event contexts",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric {s:?}; expected ct, cp, cie, coe or ccontext"))
    }
}

/// Something a metric counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Element(Id),
    /// An input event consumed by one particular transition.
    Context {
        event: Id,
        transition: Id,
    },
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Element(id) => write!(f, "{id}"),
            Item::Context { event, transition } => write!(f, "{event}@{transition}"),
        }
    }
}

/// One way an input event can be consumed: the transition and the data
/// places that must be marked alongside it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    pub event: Id,
    pub transition: Id,
    pub places: BTreeSet<Id>,
}

impl Context {
    pub fn item(&self) -> Item {
        Item::Context {
            event: self.event.clone(),
            transition: self.transition.clone(),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let places: Vec<&str> = self.places.iter().map(Id::as_str).collect();
        write!(f, "({}, {}, {{{}}})", self.event, self.transition, places.join(", "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverageError {
    #[error("{0} is not a declared input event")]
    NotAnInputEvent(String),
    #[error("test case {name:?} does not replay: {reason}")]
    NotReplayable { name: String, reason: String },
}

pub fn contexts_of(net: &Net, event: &str) -> Result<Vec<Context>, CoverageError> {
    let e = net
        .event(event)
        .filter(|e| e.direction == Direction::Input)
        .ok_or_else(|| CoverageError::NotAnInputEvent(event.to_string()))?;
    Ok(net
        .consumers_of(event)
        .map(|t| Context {
            event: e.id.clone(),
            transition: t.clone(),
            places: net
                .inputs_of(t.as_str())
                .filter(|i| net.place(i.as_str()).is_some())
                .cloned()
                .collect(),
        })
        .collect())
}

/// Everything a metric could count in `net`.
pub fn universe(net: &Net, metric: Metric) -> BTreeSet<Item> {
    let el = |id: &Id| Item::Element(id.clone());
    match metric {
        Metric::Ct => net.transitions().map(|t| el(&t.id)).collect(),
        Metric::Cp => net.places().map(|p| el(&p.id)).collect(),
        Metric::Cie => net.input_events().map(|e| el(&e.id)).collect(),
        Metric::Coe => net.output_events().map(|e| el(&e.id)).collect(),
        Metric::Ccontext => net
            .input_events()
            .flat_map(|e| contexts_of(net, e.id.as_str()).expect("declared input event"))
            .map(|c| c.item())
            .collect(),
    }
}

/// Items a replayed trace exercises.
pub fn exercised(trace: &ExecutionTrace, metric: Metric) -> BTreeSet<Item> {
    let el = |id: &Id| Item::Element(id.clone());
    let steps = trace.steps.iter();
    match metric {
        Metric::Ct => steps.map(|s| el(&s.fired)).collect(),
        Metric::Cp => std::iter::once(&trace.initial)
            .chain(steps.map(|s| &s.marking_after))
            .flat_map(Marking::marked)
            .map(|(p, _)| el(p))
            .collect(),
        Metric::Cie => steps.flat_map(|s| &s.consumed).map(el).collect(),
        Metric::Coe => steps.flat_map(|s| &s.emitted).map(el).collect(),
        Metric::Ccontext => steps
            .flat_map(|s| {
                s.consumed.iter().map(|e| Item::Context {
                    event: e.clone(),
                    transition: s.fired.clone(),
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricReport {
    pub metric: Metric,
    pub covered: BTreeSet<Item>,
    pub total: BTreeSet<Item>,
}

impl MetricReport {
    pub fn new(metric: Metric, total: BTreeSet<Item>, exercised: &BTreeSet<Item>) -> Self {
        let covered = total.intersection(exercised).cloned().collect();
        MetricReport { metric, covered, total }
    }

    pub fn uncovered(&self) -> impl Iterator<Item = &Item> {
        self.total.difference(&self.covered)
    }

    /// Percentage covered; an empty universe counts as fully covered.
    pub fn percentage(&self) -> f64 {
        if self.total.is_empty() {
            100.0
        } else {
            100.0 * self.covered.len() as f64 / self.total.len() as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered.len() == self.total.len()
    }

    pub fn fraction(&self) -> String {
        format!("{}/{}", self.covered.len(), self.total.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub metrics: Vec<MetricReport>,
}

impl CoverageReport {
    pub fn get(&self, metric: Metric) -> &MetricReport {
        self.metrics
            .iter()
            .find(|m| m.metric == metric)
            .expect("report holds every metric")
    }

    pub fn is_complete(&self) -> bool {
        self.metrics.iter().all(MetricReport::is_complete)
    }

    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let rows: Vec<[String; 4]> = self
            .metrics
            .iter()
            .map(|m| {
                let uncovered: Vec<String> = m.uncovered().map(ToString::to_string).collect();
                [
                    m.metric.to_string(),
                    m.fraction(),
                    format!("{:.1}%", m.percentage()),
                    if uncovered.is_empty() {
                        "-".to_string()
                    } else {
                        uncovered.join(" ")
                    },
                ]
            })
            .collect();
        let header = ["metric", "covered", "percent", "uncovered"];
        let width = |i: usize| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        };
        let widths = [width(0), width(1), width(2)];
        let mut out = String::new();
        for row in std::iter::once(header.map(String::from)).chain(rows) {
            let _ = writeln!(
                out,
                "{:<w0$}  {:>w1$}  {:>w2$}  {}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
        }
        out
    }

    /// `[coverage]` section with `metric,covered,total,uncovered` rows;
    /// the uncovered list is space separated.
    pub fn render_rows(&self) -> String {
        let mut out = String::from("[coverage]\n");
        for m in &self.metrics {
            let uncovered: Vec<String> = m.uncovered().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.metric,
                m.covered.len(),
                m.total.len(),
                uncovered.join(" ")
            );
        }
        out
    }
}

/// Replays every test case and reports all five metrics.
pub fn measure(net: &Net, tests: &[TestCase]) -> Result<CoverageReport, CoverageError> {
    let mut traces = Vec::with_capacity(tests.len());
    for tc in tests {
        let trace = testgen::replay(net, tc).map_err(|e| CoverageError::NotReplayable {
            name: tc.name.clone(),
            reason: e.to_string(),
        })?;
        traces.push(trace);
    }
    let metrics = Metric::ALL
        .into_iter()
        .map(|metric| {
            let seen: BTreeSet<Item> = traces.iter().flat_map(|t| exercised(t, metric)).collect();
            MetricReport::new(metric, universe(net, metric), &seen)
        })
        .collect();
    Ok(CoverageReport { metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::id;
    use crate::testgen::{derive_test_case, enumerate_paths};

    fn gdc() -> Net {
        fixtures::load("gdc-basic").unwrap()
    }

    fn test_for(net: &Net, start: &str, target: &str, name: &str) -> TestCase {
        let paths = enumerate_paths(
            net,
            &Marking::with_places([start]),
            2,
            Some(&Marking::with_places([target])),
        )
        .unwrap();
        derive_test_case(net, &paths[0], name).unwrap()
    }

    #[test]
    fn contexts_of_keypad_signal() {
        let net = gdc();
        let ctx = contexts_of(&net, "p1").unwrap();
        let shown: Vec<String> = ctx.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["(p1, t1, {d1})", "(p1, t3, {d4})"]);
        assert_eq!(contexts_of(&net, "p2").unwrap().len(), 1);
        assert_eq!(
            contexts_of(&net, "p7").unwrap_err(),
            CoverageError::NotAnInputEvent("p7".into())
        );
        let mut lonely = net.clone();
        lonely
            .add_event(id("p5"), Direction::Input, id("door"), "light beam sensor")
            .unwrap();
        assert!(contexts_of(&lonely, "p5").unwrap().is_empty());
    }

    #[test]
    fn open_and_close_cover_everything() {
        let net = gdc();
        let tests = [
            test_for(&net, "d1", "d4", "Close an open garage door"),
            test_for(&net, "d4", "d1", "Open a closed garage door"),
        ];
        let report = measure(&net, &tests).unwrap();
        for m in Metric::ALL {
            assert!(report.get(m).is_complete(), "{m}");
        }
        assert_eq!(report.get(Metric::Ct).fraction(), "4/4");
        assert_eq!(report.get(Metric::Cie).fraction(), "3/3");
        assert_eq!(report.get(Metric::Coe).fraction(), "3/3");
        assert_eq!(report.get(Metric::Ccontext).fraction(), "4/4");
    }

    #[test]
    fn single_test_misses_the_other_context() {
        let net = gdc();
        let report = measure(&net, &[test_for(&net, "d1", "d4", "close")]).unwrap();
        assert_eq!(report.get(Metric::Ct).fraction(), "2/4");
        let ctx = &report.get(Metric::Ccontext).covered;
        let p1 = |t: &str| Item::Context {
            event: id("p1"),
            transition: id(t),
        };
        assert!(ctx.contains(&p1("t1")) && !ctx.contains(&p1("t3")));
        // Cie is complete for p1 while Ccontext is not.
        assert!(report.get(Metric::Cie).covered.contains(&Item::Element(id("p1"))));
    }

    #[test]
    fn empty_suite() {
        let report = measure(&gdc(), &[]).unwrap();
        assert!(report.metrics.iter().all(|m| m.covered.is_empty()));
        assert_eq!(report.get(Metric::Ct).percentage(), 0.0);
        let empty = measure(&Net::new(), &[]).unwrap();
        assert!(empty.metrics.iter().all(|m| m.percentage() == 100.0));
    }

    #[test]
    fn renderings() {
        let net = gdc();
        let report = measure(&net, &[test_for(&net, "d1", "d4", "close")]).unwrap();
        let text = report.render();
        assert!(text.starts_with("metric"), "{text}");
        assert!(text.contains("\nCt            2/4    50.0%  t3 t4\n"), "{text}");
        let rows = report.render_rows();
        assert!(rows.contains("\nCt,2,4,t3 t4\n"), "{rows}");
        assert!(rows.contains("\nCcontext,2,4,p1@t3 p3@t4\n"), "{rows}");
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("ccontext".parse::<Metric>().unwrap(), Metric::Ccontext);
        assert_eq!("Ct".parse::<Metric>().unwrap(), Metric::Ct);
        assert!("cx".parse::<Metric>().is_err());
    }
}
