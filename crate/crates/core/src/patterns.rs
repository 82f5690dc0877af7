//! Communication primitives between lanes: builders that weave a pattern
//! into a net, and a recognizer that finds them again.
//!
//! Recognition is structural. Role tags select between shapes that look
//! alike (an enable place and a trigger place differ only in the tag and
//! the controlled transition's priority) and relax the extra checks an
//! untagged place must pass. Every instance is maximal for its own kind;
//! a composite such as suspend/resume is reported alongside the enable and
//! interlock instances it is made of.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{ElementKind, Id, Net, NetError, PlaceRole, PriorityClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternKind {
    Conflict,
    Interlock,
    EnableDisable,
    Activate,
    Trigger,
    SuspendResume,
    Pause,
    Request,
    AcceptReject,
    Postpone,
}

impl PatternKind {
    pub const ALL: [PatternKind; 10] = [
        PatternKind::Conflict,
        PatternKind::Interlock,
        PatternKind::EnableDisable,
        PatternKind::Activate,
        PatternKind::Trigger,
        PatternKind::SuspendResume,
        PatternKind::Pause,
        PatternKind::Request,
        PatternKind::AcceptReject,
        PatternKind::Postpone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Conflict => "conflict",
            PatternKind::Interlock => "interlock",
            PatternKind::EnableDisable => "enableDisable",
            PatternKind::Activate => "activate",
            PatternKind::Trigger => "trigger",
            PatternKind::SuspendResume => "suspendResume",
            PatternKind::Pause => "pause",
            PatternKind::Request => "request",
            PatternKind::AcceptReject => "acceptReject",
            PatternKind::Postpone => "postpone",
        }
    }

    /// Binding names in display order. Optional roles may be absent.
    pub fn roles(self) -> &'static [&'static str] {
        match self {
            PatternKind::Conflict => &["place", "first", "second"],
            PatternKind::Interlock => &["lockPlace", "preferred", "secondary"],
            PatternKind::EnableDisable => &["edPlace", "enabler", "controlled", "disabler"],
            PatternKind::Activate => &["edPlace", "activator", "controlled", "deactivator", "sequencePlace"],
            PatternKind::Trigger => &["triggerPlace", "triggerer", "controlled", "disabler"],
            PatternKind::SuspendResume => &["runPlace", "controlled", "suspender", "resumer", "suspendPlace"],
            PatternKind::Pause => &["runPlace", "controlled", "pauser", "resumer", "pausePlace"],
            PatternKind::Request => &["requestPlace", "requester", "provider", "waitPlace"],
            PatternKind::AcceptReject => &[
                "requestPlace",
                "requester",
                "waitPlace",
                "accept",
                "reject",
                "donePlace",
                "notDonePlace",
                "onDone",
                "onNotDone",
            ],
            PatternKind::Postpone => &[
                "requestPlace",
                "requester",
                "waitPlace",
                "urgentTask",
                "postponedResponse",
                "interlockPlace",
            ],
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternInstance {
    pub kind: PatternKind,
    pub bindings: BTreeMap<&'static str, Id>,
}

impl PatternInstance {
    fn new(kind: PatternKind, pairs: &[(&'static str, &Id)]) -> Self {
        debug_assert!(pairs.iter().all(|(r, _)| kind.roles().contains(r)));
        PatternInstance {
            kind,
            bindings: pairs.iter().map(|(r, id)| (*r, (*id).clone())).collect(),
        }
    }

    pub fn get(&self, role: &str) -> Option<&Id> {
        self.bindings.get(role)
    }

    pub fn elements(&self) -> BTreeSet<&Id> {
        self.bindings.values().collect()
    }
}

impl fmt::Display for PatternInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for role in self.kind.roles() {
            if let Some(id) = self.bindings.get(role) {
                write!(f, " {role}={id}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("{0} is not declared")]
    Missing(String),
    #[error("{id} is a {found}, expected a {expected}")]
    WrongKind {
        id: Id,
        found: &'static str,
        expected: &'static str,
    },
    #[error("{kind} needs two distinct transitions, got {id} twice")]
    SameTransition { kind: PatternKind, id: Id },
    #[error("{0} already consumes {1}")]
    AlreadyWired(Id, Id),
    #[error("{0} already produces {1}, consuming it too would form a self-loop")]
    SelfLoop(Id, Id),
    #[error("requester and provider must be different lanes, both are {0}")]
    SameLane(Id),
    #[error("{id} is in lane {actual}, expected lane {expected}")]
    WrongLane { id: Id, actual: Id, expected: Id },
    #[error("{0} is not a request pattern of this net")]
    NotARequest(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A builder's result: the extended net and the instance it added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Built {
    pub net: Net,
    pub instance: PatternInstance,
}

fn transition<'a>(net: &'a Net, t: &str) -> Result<&'a Id, PatternError> {
    match net.kind_of(t) {
        Some(ElementKind::Transition) => Ok(&net.transition(t).expect("kind checked").id),
        Some(kind) => Err(PatternError::WrongKind {
            id: Id::new(t)?,
            found: kind.describe(),
            expected: "transition",
        }),
        None => Err(PatternError::Missing(t.to_string())),
    }
}

fn lane_of(net: &Net, element: &str) -> Id {
    net.lane_of(element).expect("element has a lane").clone()
}

fn distinct(kind: PatternKind, a: &Id, b: &Id) -> Result<(), PatternError> {
    if a == b {
        Err(PatternError::SameTransition { kind, id: a.clone() })
    } else {
        Ok(())
    }
}

/// First id of the form `base`, `base_2`, `base_3`, ... not used in `net`.
fn fresh(net: &Net, base: &str) -> Id {
    let mut n = 1;
    loop {
        let candidate = if n == 1 {
            base.to_string()
        } else {
            format!("{base}_{n}")
        };
        if !net.contains(&candidate) {
            return Id::new(candidate).expect("built from valid ids");
        }
        n += 1;
    }
}

fn new_place(net: &mut Net, base: &str, lane: &Id, label: String, role: PlaceRole) -> Result<Id, PatternError> {
    let p = fresh(net, base);
    net.add_place(p.clone(), lane.clone(), label)?;
    if role != PlaceRole::Plain {
        net.set_role(p.clone(), role);
    }
    Ok(p)
}

fn new_transition(net: &mut Net, base: &str, lane: &Id, label: String) -> Result<Id, PatternError> {
    let t = fresh(net, base);
    net.add_transition(t.clone(), lane.clone(), PriorityClass::Normal, label)?;
    Ok(t)
}

fn arc(net: &mut Net, source: &Id, target: &Id) -> Result<(), PatternError> {
    net.add_arc(source.clone(), target.clone())?;
    Ok(())
}

fn triggered(net: &mut Net, t: &Id) -> Result<(), PatternError> {
    net.set_priority(t.as_str(), PriorityClass::Triggered)?;
    Ok(())
}

/// Makes `place` (a data place or input event) a shared input of `a` and `b`.
pub fn build_conflict(net: &Net, place: &str, a: &str, b: &str) -> Result<Built, PatternError> {
    let (a, b) = (transition(net, a)?, transition(net, b)?);
    distinct(PatternKind::Conflict, a, b)?;
    let place = match net.kind_of(place) {
        Some(ElementKind::Place) => &net.place(place).expect("kind checked").id,
        Some(ElementKind::Event(crate::Direction::Input)) => &net.event(place).expect("kind checked").id,
        Some(kind) => {
            return Err(PatternError::WrongKind {
                id: Id::new(place)?,
                found: kind.describe(),
                expected: "data place or input event",
            })
        }
        None => return Err(PatternError::Missing(place.to_string())),
    };
    for t in [a, b] {
        if net.has_arc(place.as_str(), t.as_str()) {
            return Err(PatternError::AlreadyWired(t.clone(), place.clone()));
        }
        if net.has_arc(t.as_str(), place.as_str()) {
            return Err(PatternError::SelfLoop(t.clone(), place.clone()));
        }
    }
    let mut out = net.clone();
    arc(&mut out, place, a)?;
    arc(&mut out, place, b)?;
    let (first, second) = if a < b { (a, b) } else { (b, a) };
    let instance = PatternInstance::new(
        PatternKind::Conflict,
        &[("place", place), ("first", first), ("second", second)],
    );
    Ok(Built { net: out, instance })
}

/// `secondary` cannot fire until `preferred` has fired.
pub fn build_interlock(net: &Net, preferred: &str, secondary: &str) -> Result<Built, PatternError> {
    let (p, s) = (transition(net, preferred)?, transition(net, secondary)?);
    distinct(PatternKind::Interlock, p, s)?;
    let mut out = net.clone();
    let lock = new_place(
        &mut out,
        &format!("lock_{p}_{s}"),
        &lane_of(net, s.as_str()),
        format!("{s} waits for {p}"),
        PlaceRole::Interlock,
    )?;
    arc(&mut out, p, &lock)?;
    arc(&mut out, &lock, s)?;
    let instance = PatternInstance::new(
        PatternKind::Interlock,
        &[("lockPlace", &lock), ("preferred", p), ("secondary", s)],
    );
    Ok(Built { net: out, instance })
}

fn wire_enable(out: &mut Net, ed: &Id, controlled: &Id, enabler: &Id, disabler: &Id) -> Result<(), PatternError> {
    arc(out, enabler, ed)?;
    arc(out, ed, controlled)?;
    arc(out, controlled, ed)?;
    arc(out, ed, disabler)
}

pub fn build_enable_disable(net: &Net, controlled: &str, enabler: &str, disabler: &str) -> Result<Built, PatternError> {
    let c = transition(net, controlled)?;
    let (e, d) = (transition(net, enabler)?, transition(net, disabler)?);
    distinct(PatternKind::EnableDisable, e, c)?;
    distinct(PatternKind::EnableDisable, d, c)?;
    distinct(PatternKind::EnableDisable, e, d)?;
    let mut out = net.clone();
    let ed = new_place(
        &mut out,
        &format!("ed_{c}"),
        &lane_of(net, c.as_str()),
        format!("{c} enabled"),
        PlaceRole::EnableDisable,
    )?;
    wire_enable(&mut out, &ed, c, e, d)?;
    let instance = PatternInstance::new(
        PatternKind::EnableDisable,
        &[("edPlace", &ed), ("enabler", e), ("controlled", c), ("disabler", d)],
    );
    Ok(Built { net: out, instance })
}

/// Enable followed by an automatic disable after one firing of
/// `controlled`. The disable is a generated triggered transition in the
/// activator's lane, sequenced after `controlled` by a trigger place.
pub fn build_activate(net: &Net, controlled: &str, activator: &str) -> Result<Built, PatternError> {
    let (c, a) = (transition(net, controlled)?, transition(net, activator)?);
    distinct(PatternKind::Activate, a, c)?;
    let lane = lane_of(net, a.as_str());
    let mut out = net.clone();
    let ed = new_place(
        &mut out,
        &format!("ed_{c}"),
        &lane_of(net, c.as_str()),
        format!("{c} activated"),
        PlaceRole::EnableDisable,
    )?;
    let deact = new_transition(&mut out, &format!("{a}_deact"), &lane, format!("{a} deactivates {c}"))?;
    let seq = new_place(
        &mut out,
        &format!("seq_{c}"),
        &lane,
        format!("{c} fired once"),
        PlaceRole::Trigger,
    )?;
    wire_enable(&mut out, &ed, c, a, &deact)?;
    arc(&mut out, c, &seq)?;
    arc(&mut out, &seq, &deact)?;
    triggered(&mut out, &deact)?;
    let instance = PatternInstance::new(
        PatternKind::Activate,
        &[
            ("edPlace", &ed),
            ("activator", a),
            ("controlled", c),
            ("deactivator", &deact),
            ("sequencePlace", &seq),
        ],
    );
    Ok(Built { net: out, instance })
}

/// Obliges `controlled` to fire as soon as it is fully enabled. The
/// trigger place loops back through `controlled`, so it stays marked until
/// the optional `disabler` removes it. Every consumer of a trigger place is
/// triggered-class, so `disabler` is promoted too.
pub fn build_trigger(
    net: &Net,
    controlled: &str,
    triggerer: &str,
    disabler: Option<&str>,
) -> Result<Built, PatternError> {
    let (c, tr) = (transition(net, controlled)?, transition(net, triggerer)?);
    distinct(PatternKind::Trigger, tr, c)?;
    let d = disabler.map(|d| transition(net, d)).transpose()?;
    if let Some(d) = d {
        distinct(PatternKind::Trigger, d, c)?;
        distinct(PatternKind::Trigger, d, tr)?;
    }
    let mut out = net.clone();
    let place = new_place(
        &mut out,
        &format!("trig_{c}"),
        &lane_of(net, c.as_str()),
        format!("{c} triggered"),
        PlaceRole::Trigger,
    )?;
    arc(&mut out, tr, &place)?;
    arc(&mut out, &place, c)?;
    arc(&mut out, c, &place)?;
    triggered(&mut out, c)?;
    let mut pairs = vec![("triggerPlace", &place), ("triggerer", tr), ("controlled", c)];
    if let Some(d) = d {
        arc(&mut out, &place, d)?;
        triggered(&mut out, d)?;
        pairs.push(("disabler", d));
    }
    let instance = PatternInstance::new(PatternKind::Trigger, &pairs);
    Ok(Built { net: out, instance })
}

/// Shared wiring of suspend/resume and pause: a marked run place that
/// `controlled` loops through, taken by the suspender and returned by the
/// resumer, plus a place ordering the resumer after the suspender.
/// Existing inputs of `controlled` are left alone, so suspending never
/// discards work.
fn wire_suspend(
    out: &mut Net,
    c: &Id,
    suspender: &Id,
    resumer: &Id,
    role: PlaceRole,
) -> Result<(Id, Id), PatternError> {
    let run = new_place(
        out,
        &format!("run_{c}"),
        &lane_of(out, c.as_str()),
        format!("{c} running"),
        PlaceRole::EnableDisable,
    )?;
    out.set_initial_tokens(&run, 1);
    let held = new_place(
        out,
        &format!("susp_{c}"),
        &lane_of(out, suspender.as_str()),
        format!("{c} suspended"),
        role,
    )?;
    wire_enable(out, &run, c, resumer, suspender)?;
    arc(out, suspender, &held)?;
    arc(out, &held, resumer)?;
    Ok((run, held))
}

pub fn build_suspend_resume(
    net: &Net,
    controlled: &str,
    suspender: &str,
    resumer: &str,
) -> Result<Built, PatternError> {
    let c = transition(net, controlled)?;
    let (s, r) = (transition(net, suspender)?, transition(net, resumer)?);
    distinct(PatternKind::SuspendResume, s, c)?;
    distinct(PatternKind::SuspendResume, r, c)?;
    distinct(PatternKind::SuspendResume, s, r)?;
    let mut out = net.clone();
    let (run, held) = wire_suspend(&mut out, c, s, r, PlaceRole::Interlock)?;
    let instance = PatternInstance::new(
        PatternKind::SuspendResume,
        &[
            ("runPlace", &run),
            ("controlled", c),
            ("suspender", s),
            ("resumer", r),
            ("suspendPlace", &held),
        ],
    );
    Ok(Built { net: out, instance })
}

/// Suspend immediately followed by resume. The resumer is a generated
/// triggered transition in the pauser's lane.
pub fn build_pause(net: &Net, controlled: &str, pauser: &str) -> Result<Built, PatternError> {
    let (c, p) = (transition(net, controlled)?, transition(net, pauser)?);
    distinct(PatternKind::Pause, p, c)?;
    let mut out = net.clone();
    let resume = new_transition(
        &mut out,
        &format!("{p}_resume"),
        &lane_of(net, p.as_str()),
        format!("{c} resumes after {p}"),
    )?;
    let (run, held) = wire_suspend(&mut out, c, p, &resume, PlaceRole::Trigger)?;
    triggered(&mut out, &resume)?;
    let instance = PatternInstance::new(
        PatternKind::Pause,
        &[
            ("runPlace", &run),
            ("controlled", c),
            ("pauser", p),
            ("resumer", &resume),
            ("pausePlace", &held),
        ],
    );
    Ok(Built { net: out, instance })
}

fn expect_lane(net: &Net, t: &Id, lane: &Id) -> Result<(), PatternError> {
    let actual = lane_of(net, t.as_str());
    if &actual != lane {
        return Err(PatternError::WrongLane {
            id: t.clone(),
            actual,
            expected: lane.clone(),
        });
    }
    Ok(())
}

/// `request` (in the requester lane) hands a request place to `service`
/// (in the provider lane) and leaves the requester in a wait place.
pub fn build_request(
    net: &Net,
    requester_lane: &str,
    provider_lane: &str,
    request: &str,
    service: &str,
) -> Result<Built, PatternError> {
    let lane = |l: &str| {
        net.lane(l)
            .map(|l| l.id.clone())
            .ok_or_else(|| PatternError::Missing(l.to_string()))
    };
    let (a, b) = (lane(requester_lane)?, lane(provider_lane)?);
    if a == b {
        return Err(PatternError::SameLane(a));
    }
    let (rq, sv) = (transition(net, request)?, transition(net, service)?);
    expect_lane(net, rq, &a)?;
    expect_lane(net, sv, &b)?;
    let mut out = net.clone();
    let req = new_place(
        &mut out,
        &format!("req_{rq}"),
        &b,
        format!("{rq} requested"),
        PlaceRole::Request,
    )?;
    let wait = new_place(
        &mut out,
        &format!("wait_{rq}"),
        &a,
        format!("{rq} awaiting response"),
        PlaceRole::Plain,
    )?;
    arc(&mut out, rq, &req)?;
    arc(&mut out, &req, sv)?;
    arc(&mut out, rq, &wait)?;
    let instance = PatternInstance::new(
        PatternKind::Request,
        &[
            ("requestPlace", &req),
            ("requester", rq),
            ("provider", sv),
            ("waitPlace", &wait),
        ],
    );
    Ok(Built { net: out, instance })
}

fn check_request(net: &Net, request: &PatternInstance) -> Result<(), PatternError> {
    if request.kind != PatternKind::Request || !recognize(net).contains(request) {
        return Err(PatternError::NotARequest(request.to_string()));
    }
    Ok(())
}

/// Provider answers a pending request with `accept` or `reject`. Both
/// consume the request place, so they are in conflict. Each answer marks a
/// response place in the requester lane, where a generated continuation
/// picks it up together with the wait place.
pub fn build_accept_reject(
    net: &Net,
    request: &PatternInstance,
    accept: &str,
    reject: &str,
) -> Result<Built, PatternError> {
    check_request(net, request)?;
    let (acc, rej) = (transition(net, accept)?, transition(net, reject)?);
    distinct(PatternKind::AcceptReject, acc, rej)?;
    let req = &request.bindings["requestPlace"];
    let rq = &request.bindings["requester"];
    let wait = &request.bindings["waitPlace"];
    let provider = lane_of(net, req.as_str());
    let home = lane_of(net, rq.as_str());
    expect_lane(net, acc, &provider)?;
    expect_lane(net, rej, &provider)?;
    let mut out = net.clone();
    for t in [acc, rej] {
        if !out.has_arc(req.as_str(), t.as_str()) {
            arc(&mut out, req, t)?;
        }
    }
    let done = new_place(
        &mut out,
        &format!("done_{rq}"),
        &home,
        format!("{rq} done"),
        PlaceRole::DoneResponse,
    )?;
    let not_done = new_place(
        &mut out,
        &format!("notdone_{rq}"),
        &home,
        format!("{rq} not done"),
        PlaceRole::NotDoneResponse,
    )?;
    let on_done = new_transition(&mut out, &format!("{rq}_on_done"), &home, format!("{rq} accepted"))?;
    let on_not_done = new_transition(&mut out, &format!("{rq}_on_not_done"), &home, format!("{rq} rejected"))?;
    arc(&mut out, acc, &done)?;
    arc(&mut out, rej, &not_done)?;
    for (response, cont) in [(&done, &on_done), (&not_done, &on_not_done)] {
        arc(&mut out, response, cont)?;
        arc(&mut out, wait, cont)?;
    }
    let instance = PatternInstance::new(
        PatternKind::AcceptReject,
        &[
            ("requestPlace", req),
            ("requester", rq),
            ("waitPlace", wait),
            ("accept", acc),
            ("reject", rej),
            ("donePlace", &done),
            ("notDonePlace", &not_done),
            ("onDone", &on_done),
            ("onNotDone", &on_not_done),
        ],
    );
    Ok(Built { net: out, instance })
}

/// Provider defers `postponed` (which serves the request) until `urgent`
/// has fired, using an interlock.
pub fn build_postpone(
    net: &Net,
    request: &PatternInstance,
    urgent: &str,
    postponed: &str,
) -> Result<Built, PatternError> {
    check_request(net, request)?;
    let (u, s) = (transition(net, urgent)?, transition(net, postponed)?);
    distinct(PatternKind::Postpone, u, s)?;
    let req = &request.bindings["requestPlace"];
    let rq = &request.bindings["requester"];
    if s == rq || u == rq {
        return Err(PatternError::SameTransition {
            kind: PatternKind::Postpone,
            id: rq.clone(),
        });
    }
    expect_lane(net, s, &lane_of(net, req.as_str()))?;
    let mut out = net.clone();
    if !out.has_arc(req.as_str(), s.as_str()) {
        arc(&mut out, req, s)?;
    }
    let lock = new_place(
        &mut out,
        &format!("lock_{u}_{s}"),
        &lane_of(net, s.as_str()),
        format!("{s} postponed until {u}"),
        PlaceRole::Interlock,
    )?;
    arc(&mut out, u, &lock)?;
    arc(&mut out, &lock, s)?;
    let instance = PatternInstance::new(
        PatternKind::Postpone,
        &[
            ("requestPlace", req),
            ("requester", rq),
            ("waitPlace", &request.bindings["waitPlace"]),
            ("urgentTask", u),
            ("postponedResponse", s),
            ("interlockPlace", &lock),
        ],
    );
    Ok(Built { net: out, instance })
}

/// Producers and consumers of one place, split by whether they loop.
struct Split<'a> {
    producers: Vec<&'a Id>,
    loops: Vec<&'a Id>,
    consumers: Vec<&'a Id>,
}

fn split<'a>(net: &'a Net, place: &'a str) -> Split<'a> {
    let prod: BTreeSet<&Id> = net.producers_of(place).collect();
    let cons: BTreeSet<&Id> = net.consumers_of(place).collect();
    Split {
        producers: prod.difference(&cons).copied().collect(),
        loops: prod.intersection(&cons).copied().collect(),
        consumers: cons.difference(&prod).copied().collect(),
    }
}

fn data_inputs<'a>(net: &'a Net, t: &'a str) -> BTreeSet<&'a Id> {
    net.inputs_of(t).filter(|i| net.place(i.as_str()).is_some()).collect()
}

fn data_outputs<'a>(net: &'a Net, t: &'a str) -> BTreeSet<&'a Id> {
    net.outputs_of(t).filter(|o| net.place(o.as_str()).is_some()).collect()
}

fn unmarked(net: &Net, place: &str) -> bool {
    net.initial_marking().tokens(place) == 0
}

/// `(producer, consumer)` when `place` links exactly one transition to
/// exactly one other.
fn one_to_one<'a>(net: &'a Net, place: &'a str) -> Option<(&'a Id, &'a Id)> {
    let s = split(net, place);
    match (s.producers.as_slice(), s.loops.as_slice(), s.consumers.as_slice()) {
        ([p], [], [c]) => Some((*p, *c)),
        _ => None,
    }
}

/// Interlock shape at `place`. A tagged place only needs the shape; an
/// untagged one must also be a side channel: the producer leaves another
/// data place marked and the consumer needs another data place, which
/// tells it apart from an ordinary state-to-state step.
fn interlock_at<'a>(net: &'a Net, place: &'a str) -> Option<(&'a Id, &'a Id)> {
    let (p, c) = one_to_one(net, place)?;
    if !unmarked(net, place) {
        return None;
    }
    match net.role(place) {
        PlaceRole::Interlock => Some((p, c)),
        PlaceRole::Plain => {
            let side_out = data_outputs(net, p.as_str()).len() >= 2;
            let side_in = data_inputs(net, c.as_str()).len() >= 2;
            (side_out && side_in).then_some((p, c))
        }
        _ => None,
    }
}

/// `(enabler, controlled, disabler)` triples of an enable-shaped place:
/// one transition looping through it, others only producing or only
/// consuming it.
fn enable_shape<'a>(net: &'a Net, place: &'a str, strict: bool) -> Vec<(&'a Id, &'a Id, &'a Id)> {
    let s = split(net, place);
    let [c] = s.loops.as_slice() else {
        return Vec::new();
    };
    if strict && (s.producers.len() != 1 || s.consumers.len() != 1) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for e in &s.producers {
        for d in &s.consumers {
            out.push((*e, *c, *d));
        }
    }
    out
}

fn enable_at<'a>(net: &'a Net, place: &'a str) -> Vec<(&'a Id, &'a Id, &'a Id)> {
    match net.role(place) {
        PlaceRole::EnableDisable => enable_shape(net, place, false),
        PlaceRole::Plain => enable_shape(net, place, true),
        _ => Vec::new(),
    }
}

/// `(requester, provider, wait)` for a request place. The request place
/// has a single producer in another lane; the wait place is the first
/// place of the requester lane that only the requester produces.
fn request_at<'a>(net: &'a Net, place: &'a str) -> Vec<(&'a Id, &'a Id, &'a Id)> {
    match net.role(place) {
        PlaceRole::Request => {}
        PlaceRole::Plain if unmarked(net, place) => {}
        _ => return Vec::new(),
    }
    let s = split(net, place);
    let ([rq], [], providers) = (s.producers.as_slice(), s.loops.as_slice(), s.consumers.as_slice()) else {
        return Vec::new();
    };
    let here = net.lane_of(place);
    let home = net.lane_of(rq.as_str());
    if providers.is_empty() || here == home || providers.iter().any(|p| net.lane_of(p.as_str()) != here) {
        return Vec::new();
    }
    let wait = net.outputs_of(rq.as_str()).find(|w| {
        w.as_str() != place
            && net.place(w.as_str()).is_some()
            && net.lane_of(w.as_str()) == home
            && net.role(w.as_str()) == PlaceRole::Plain
            && unmarked(net, w.as_str())
            && net.producers_of(w.as_str()).all(|p| p == *rq)
            && !net.has_arc(w.as_str(), rq.as_str())
    });
    match wait {
        Some(w) => providers.iter().map(|p| (*rq, *p, w)).collect(),
        None => Vec::new(),
    }
}

/// Every pattern instance in the net, sorted.
pub fn recognize(net: &Net) -> Vec<PatternInstance> {
    use PatternKind as K;
    let mut out = BTreeSet::new();

    let nodes = net.places().map(|p| &p.id).chain(net.input_events().map(|e| &e.id));
    for x in nodes {
        let s = split(net, x.as_str());
        for (i, a) in s.consumers.iter().enumerate() {
            for b in &s.consumers[i + 1..] {
                out.insert(PatternInstance::new(
                    K::Conflict,
                    &[("place", x), ("first", a), ("second", b)],
                ));
            }
        }
    }

    for place in net.places() {
        let x = &place.id;
        let xs = x.as_str();

        if let Some((p, c)) = interlock_at(net, xs) {
            out.insert(PatternInstance::new(
                K::Interlock,
                &[("lockPlace", x), ("preferred", p), ("secondary", c)],
            ));
        }

        for (e, c, d) in enable_at(net, xs) {
            out.insert(PatternInstance::new(
                K::EnableDisable,
                &[("edPlace", x), ("enabler", e), ("controlled", c), ("disabler", d)],
            ));
            // Activate: the disabler only fires once the controlled
            // transition has marked a trigger place.
            let inputs = data_inputs(net, d.as_str());
            let seq = inputs.iter().find(|q| {
                **q != x && net.role(q.as_str()) == PlaceRole::Trigger && one_to_one(net, q.as_str()) == Some((c, d))
            });
            if let Some(q) = seq.filter(|_| net.inputs_of(d.as_str()).count() == 2) {
                out.insert(PatternInstance::new(
                    K::Activate,
                    &[
                        ("edPlace", x),
                        ("activator", e),
                        ("controlled", c),
                        ("deactivator", d),
                        ("sequencePlace", q),
                    ],
                ));
            }
            // Suspend/resume and pause: the disabler leaves a place that
            // only the enabler consumes.
            for held in data_outputs(net, d.as_str()) {
                if held == x || one_to_one(net, held.as_str()) != Some((d, e)) || !unmarked(net, held.as_str()) {
                    continue;
                }
                match net.role(held.as_str()) {
                    PlaceRole::Plain | PlaceRole::Interlock => {
                        out.insert(PatternInstance::new(
                            K::SuspendResume,
                            &[
                                ("runPlace", x),
                                ("controlled", c),
                                ("suspender", d),
                                ("resumer", e),
                                ("suspendPlace", held),
                            ],
                        ));
                    }
                    PlaceRole::Trigger if net.inputs_of(e.as_str()).count() == 1 => {
                        out.insert(PatternInstance::new(
                            K::Pause,
                            &[
                                ("runPlace", x),
                                ("controlled", c),
                                ("pauser", d),
                                ("resumer", e),
                                ("pausePlace", held),
                            ],
                        ));
                    }
                    _ => {}
                }
            }
        }

        if net.role(xs) == PlaceRole::Trigger {
            let s = split(net, xs);
            if let [c] = s.loops.as_slice() {
                for tr in &s.producers {
                    let base = [("triggerPlace", x), ("triggerer", *tr), ("controlled", *c)];
                    if s.consumers.is_empty() {
                        out.insert(PatternInstance::new(K::Trigger, &base));
                    }
                    for d in &s.consumers {
                        let mut pairs = base.to_vec();
                        pairs.push(("disabler", d));
                        out.insert(PatternInstance::new(K::Trigger, &pairs));
                    }
                }
            }
        }

        let requests = request_at(net, xs);
        for &(rq, provider, wait) in &requests {
            out.insert(PatternInstance::new(
                K::Request,
                &[
                    ("requestPlace", x),
                    ("requester", rq),
                    ("provider", provider),
                    ("waitPlace", wait),
                ],
            ));
            for lock in data_inputs(net, provider.as_str()) {
                if lock == x {
                    continue;
                }
                if let Some((u, s)) = interlock_at(net, lock.as_str()) {
                    if s == provider && u != rq {
                        out.insert(PatternInstance::new(
                            K::Postpone,
                            &[
                                ("requestPlace", x),
                                ("requester", rq),
                                ("waitPlace", wait),
                                ("urgentTask", u),
                                ("postponedResponse", s),
                                ("interlockPlace", lock),
                            ],
                        ));
                    }
                }
            }
        }
        // Accept/reject: done and not-done cannot be told apart by shape,
        // so the response places must carry their tags.
        let (rq, wait) = match requests.first() {
            Some(&(rq, _, wait)) => (rq, wait),
            None => continue,
        };
        let responses = |role: PlaceRole| -> Vec<(&Id, &Id, &Id)> {
            net.places()
                .filter(|p| net.role(p.id.as_str()) == role)
                .filter_map(|p| {
                    let (answer, cont) = one_to_one(net, p.id.as_str())?;
                    let ok = net.has_arc(xs, answer.as_str())
                        && net.has_arc(wait.as_str(), cont.as_str())
                        && net.lane_of(cont.as_str()) == net.lane_of(rq.as_str());
                    ok.then_some((&p.id, answer, cont))
                })
                .collect()
        };
        for (done, acc, on_done) in responses(PlaceRole::DoneResponse) {
            for (not_done, rej, on_not_done) in responses(PlaceRole::NotDoneResponse) {
                if acc == rej || on_done == on_not_done {
                    continue;
                }
                out.insert(PatternInstance::new(
                    K::AcceptReject,
                    &[
                        ("requestPlace", x),
                        ("requester", rq),
                        ("waitPlace", wait),
                        ("accept", acc),
                        ("reject", rej),
                        ("donePlace", done),
                        ("notDonePlace", not_done),
                        ("onDone", on_done),
                        ("onNotDone", on_not_done),
                    ],
                ));
            }
        }
    }
    out.into_iter().collect()
}
