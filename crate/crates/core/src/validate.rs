//! Structural well-formedness checks. Violations are returned as data so
//! callers can list all of them at once.

use std::fmt;

use crate::model::{Arc, ArcKind, Direction, ElementKind, Id, Net, PlaceRole, PriorityClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// Arc endpoint names no declared element.
    DanglingReference,
    /// Arc joins two non-transitions or two transitions, or touches a lane.
    TripartiteViolation,
    /// Element refers to a lane that was never declared.
    UnknownLane,
    /// An output port event is consumed by a transition.
    OutputEventConsumed,
    /// A transition produces an input event of its own lane.
    SameLaneHandoff,
    /// Transition priority class disagrees with the roles of its input places.
    TriggerClassMismatch,
    /// Initial marking or role tag names something that cannot carry it.
    BadMarking,
    BadRole,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::DanglingReference => "DanglingReference",
            ViolationKind::TripartiteViolation => "TripartiteViolation",
            ViolationKind::UnknownLane => "UnknownLane",
            ViolationKind::OutputEventConsumed => "OutputEventConsumed",
            ViolationKind::SameLaneHandoff => "SameLaneHandoff",
            ViolationKind::TriggerClassMismatch => "TriggerClassMismatch",
            ViolationKind::BadMarking => "BadMarking",
            ViolationKind::BadRole => "BadRole",
        }
    }

    /// Warnings describe models that still execute; errors make the net
    /// unusable for simulation.
    pub fn is_warning(self) -> bool {
        matches!(self, ViolationKind::SameLaneHandoff)
    }
}

/// Where a violation sits in the net.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Element(Id),
    Arc(Arc),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Element(id) => write!(f, "{id}"),
            Subject::Arc(a) => write!(f, "arc {} -> {}", a.source, a.target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: Subject,
    pub message: String,
}

impl Violation {
    pub fn is_warning(&self) -> bool {
        self.kind.is_warning()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = if self.is_warning() { "warning" } else { "error" };
        write!(
            f,
            "{severity}: {}: {}: {}",
            self.kind.name(),
            self.subject,
            self.message
        )
    }
}

fn violation(kind: ViolationKind, subject: Subject, message: String) -> Violation {
    Violation { kind, subject, message }
}

/// Checks every net invariant. The result is empty iff the net is
/// well-formed; warnings are included.
pub fn validate(net: &Net) -> Vec<Violation> {
    let mut out = Vec::new();

    let owners = net
        .events()
        .map(|e| (&e.id, &e.lane))
        .chain(net.places().map(|p| (&p.id, &p.lane)))
        .chain(net.transitions().map(|t| (&t.id, &t.lane)));
    for (element, lane) in owners {
        if net.lane(lane.as_str()).is_none() {
            out.push(violation(
                ViolationKind::UnknownLane,
                Subject::Element(element.clone()),
                format!("lane {lane} is not declared"),
            ));
        }
    }

    for arc in net.arcs() {
        check_arc(net, arc, &mut out);
    }

    for t in net.transitions() {
        let triggered_input = net
            .inputs_of(t.id.as_str())
            .any(|i| net.role(i.as_str()) == PlaceRole::Trigger);
        let triggered = t.priority == PriorityClass::Triggered;
        if triggered != triggered_input {
            let message = if triggered {
                "marked triggered but no input place has role trigger".to_string()
            } else {
                "consumes a trigger place but is not marked triggered".to_string()
            };
            out.push(violation(
                ViolationKind::TriggerClassMismatch,
                Subject::Element(t.id.clone()),
                message,
            ));
        }
    }

    for (p, _) in net.initial_marking().marked() {
        match net.kind_of(p.as_str()) {
            Some(ElementKind::Place) => {}
            Some(kind) => out.push(violation(
                ViolationKind::BadMarking,
                Subject::Element(p.clone()),
                format!("tokens can only mark data places, not a {}", kind.describe()),
            )),
            None => out.push(violation(
                ViolationKind::BadMarking,
                Subject::Element(p.clone()),
                "marked place is not declared".to_string(),
            )),
        }
    }

    for (element, role) in net.roles() {
        match net.kind_of(element.as_str()) {
            Some(ElementKind::Place) | Some(ElementKind::Event(_)) => {}
            Some(kind) => out.push(violation(
                ViolationKind::BadRole,
                Subject::Element(element.clone()),
                format!("role {role} cannot be carried by a {}", kind.describe()),
            )),
            None => out.push(violation(
                ViolationKind::BadRole,
                Subject::Element(element.clone()),
                format!("role {role} names an undeclared element"),
            )),
        }
    }

    out.sort();
    out
}

fn check_arc(net: &Net, arc: &Arc, out: &mut Vec<Violation>) {
    let subject = || Subject::Arc(arc.clone());
    let (source, target) = match (net.kind_of(arc.source.as_str()), net.kind_of(arc.target.as_str())) {
        (Some(s), Some(t)) => (s, t),
        (s, _) => {
            let missing = if s.is_none() { &arc.source } else { &arc.target };
            out.push(violation(
                ViolationKind::DanglingReference,
                subject(),
                format!("{missing} is not declared"),
            ));
            return;
        }
    };
    let node = |k: ElementKind| matches!(k, ElementKind::Event(_) | ElementKind::Place);
    let tripartite = match arc.kind {
        ArcKind::In => node(source) && target == ElementKind::Transition,
        ArcKind::Out => source == ElementKind::Transition && node(target),
    };
    if !tripartite {
        out.push(violation(
            ViolationKind::TripartiteViolation,
            subject(),
            format!(
                "arcs must join a transition with an event or data place, not a {} with a {}",
                source.describe(),
                target.describe()
            ),
        ));
        return;
    }
    match (arc.kind, source, target) {
        (ArcKind::In, ElementKind::Event(Direction::Output), _) => out.push(violation(
            ViolationKind::OutputEventConsumed,
            subject(),
            format!("output event {} is emitted, never consumed", arc.source),
        )),
        (ArcKind::Out, _, ElementKind::Event(Direction::Input))
            if !net.is_cross_lane(arc.source.as_str(), arc.target.as_str()) =>
        {
            out.push(violation(
                ViolationKind::SameLaneHandoff,
                subject(),
                format!("{} produces input event {} of its own lane", arc.source, arc.target),
            ));
        }
        _ => {}
    }
}

/// Error-severity violations only.
pub fn errors(net: &Net) -> Vec<Violation> {
    validate(net).into_iter().filter(|v| !v.is_warning()).collect()
}
