//! The EDPN data model: port events, data places, transitions, arcs and
//! swim lanes, plus the marking that drives execution.
//!
//! A [`Net`] is a tripartite directed graph. Arcs run from port events or
//! data places into transitions (`ArcKind::In`) and from transitions back
//! out to port events or data places (`ArcKind::Out`). Every element lives
//! in exactly one swim lane.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifier of a net element or lane.
///
/// Ids share a single namespace across events, places, transitions and
/// lanes, and follow `[A-Za-z][A-Za-z0-9_]*`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Id(String);

impl Id {
    pub fn new(raw: impl Into<String>) -> Result<Self, NetError> {
        let raw = raw.into();
        if Self::is_valid(&raw) {
            Ok(Id(raw))
        } else {
            Err(NetError::InvalidId(raw))
        }
    }

    pub fn is_valid(raw: &str) -> bool {
        let mut chars = raw.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Borrow<str> for Id {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Id {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Id {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

impl AsRef<str> for Id {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Shorthand used pervasively in fixtures and tests.
///
/// # Panics
/// Panics when `raw` is not a well-formed id.
pub fn id(raw: &str) -> Id {
    Id::new(raw).unwrap_or_else(|e| panic!("{e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "in",
            Direction::Output => "out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum PriorityClass {
    #[default]
    Normal,
    /// Fires ahead of every normal transition whenever it is enabled.
    Triggered,
}

/// Role tag carried by a place (or port event) taking part in a
/// communication primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum PlaceRole {
    #[default]
    Plain,
    EnableDisable,
    Trigger,
    Interlock,
    Request,
    DoneResponse,
    NotDoneResponse,
}

impl PlaceRole {
    pub const ALL: [PlaceRole; 7] = [
        PlaceRole::Plain,
        PlaceRole::EnableDisable,
        PlaceRole::Trigger,
        PlaceRole::Interlock,
        PlaceRole::Request,
        PlaceRole::DoneResponse,
        PlaceRole::NotDoneResponse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlaceRole::Plain => "plain",
            PlaceRole::EnableDisable => "enableDisable",
            PlaceRole::Trigger => "trigger",
            PlaceRole::Interlock => "interlock",
            PlaceRole::Request => "request",
            PlaceRole::DoneResponse => "doneResponse",
            PlaceRole::NotDoneResponse => "notDoneResponse",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for PlaceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lane {
    pub id: Id,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortEvent {
    pub id: Id,
    pub label: String,
    pub direction: Direction,
    pub lane: Id,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPlace {
    pub id: Id,
    pub label: String,
    pub lane: Id,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: Id,
    pub label: String,
    pub lane: Id,
    pub priority: PriorityClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    /// Port event or data place into a transition.
    In,
    /// Transition out to a port event or data place.
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub source: Id,
    pub target: Id,
    pub kind: ArcKind,
}

/// What kind of element an id names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Lane,
    Event(Direction),
    Place,
    Transition,
}

impl ElementKind {
    pub fn describe(self) -> &'static str {
        match self {
            ElementKind::Lane => "lane",
            ElementKind::Event(Direction::Input) => "input event",
            ElementKind::Event(Direction::Output) => "output event",
            ElementKind::Place => "data place",
            ElementKind::Transition => "transition",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("invalid identifier {0:?}: expected [A-Za-z][A-Za-z0-9_]*")]
    InvalidId(String),
    #[error("duplicate id {0}: already declared as a {1}")]
    DuplicateId(Id, &'static str),
    #[error("duplicate arc {0} -> {1}")]
    DuplicateArc(Id, Id),
    #[error("unknown element {0}")]
    UnknownElement(Id),
    #[error("{0} is not a {1}")]
    WrongKind(Id, &'static str),
    #[error("nets disagree on {id}: {field} differs")]
    Clash { id: Id, field: &'static str },
}

/// Token state over data places together with the input events currently
/// offered by the environment. Zero counts are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Marking {
    tokens: BTreeMap<Id, u32>,
    pending: BTreeMap<Id, u32>,
}

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    /// A marking holding one token on each listed place.
    pub fn with_places<'a>(places: impl IntoIterator<Item = &'a str>) -> Self {
        let mut m = Marking::new();
        for p in places {
            m.add_tokens(&id(p), 1);
        }
        m
    }

    pub fn tokens(&self, place: &str) -> u32 {
        self.tokens.get(place).copied().unwrap_or(0)
    }

    pub fn set_tokens(&mut self, place: &Id, count: u32) {
        if count == 0 {
            self.tokens.remove(place);
        } else {
            self.tokens.insert(place.clone(), count);
        }
    }

    pub fn add_tokens(&mut self, place: &Id, count: u32) {
        let next = self.tokens(place.as_str()) + count;
        self.set_tokens(place, next);
    }

    /// Removes one token; returns false when the place was empty.
    pub fn take_token(&mut self, place: &Id) -> bool {
        match self.tokens(place.as_str()) {
            0 => false,
            n => {
                self.set_tokens(place, n - 1);
                true
            }
        }
    }

    pub fn pending(&self, event: &str) -> u32 {
        self.pending.get(event).copied().unwrap_or(0)
    }

    pub fn offer(&mut self, event: &Id) {
        *self.pending.entry(event.clone()).or_insert(0) += 1;
    }

    pub fn take_pending(&mut self, event: &Id) -> bool {
        match self.pending.get_mut(event.as_str()) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.pending.remove(event.as_str());
                true
            }
            None => false,
        }
    }

    pub fn clear_pending(&mut self) -> Vec<Id> {
        let mut dropped = Vec::new();
        for (e, n) in std::mem::take(&mut self.pending) {
            dropped.extend(std::iter::repeat_n(e, n as usize));
        }
        dropped
    }

    /// Marked places with their counts, in id order.
    pub fn marked(&self) -> impl Iterator<Item = (&Id, u32)> {
        self.tokens.iter().map(|(k, v)| (k, *v))
    }

    pub fn pending_events(&self) -> impl Iterator<Item = (&Id, u32)> {
        self.pending.iter().map(|(k, v)| (k, *v))
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// The same token state with no pending events.
    pub fn data_only(&self) -> Marking {
        Marking {
            tokens: self.tokens.clone(),
            pending: BTreeMap::new(),
        }
    }

    pub fn max_tokens(&self) -> u32 {
        self.tokens.values().copied().max().unwrap_or(0)
    }

    /// Checks every key against the net.
    pub fn check(&self, net: &Net) -> Result<(), NetError> {
        for p in self.tokens.keys() {
            match net.kind_of(p.as_str()) {
                Some(ElementKind::Place) => {}
                Some(_) => return Err(NetError::WrongKind(p.clone(), "data place")),
                None => return Err(NetError::UnknownElement(p.clone())),
            }
        }
        for e in self.pending.keys() {
            match net.kind_of(e.as_str()) {
                Some(ElementKind::Event(Direction::Input)) => {}
                Some(_) => return Err(NetError::WrongKind(e.clone(), "input event")),
                None => return Err(NetError::UnknownElement(e.clone())),
            }
        }
        Ok(())
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (p, n) in &self.tokens {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            if *n == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}:{n}")?;
            }
        }
        f.write_str("}")?;
        if !self.pending.is_empty() {
            f.write_str(" pending [")?;
            let mut first = true;
            for (e, n) in &self.pending {
                for _ in 0..*n {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    write!(f, "{e}")?;
                }
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

/// An event-driven Petri net with swim lanes.
///
/// Element maps are ordered by id so that every derived listing (relations,
/// traces, exports) is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Net {
    pub(crate) lanes: BTreeMap<Id, Lane>,
    pub(crate) events: BTreeMap<Id, PortEvent>,
    pub(crate) places: BTreeMap<Id, DataPlace>,
    pub(crate) transitions: BTreeMap<Id, Transition>,
    pub(crate) arcs: BTreeSet<Arc>,
    pub(crate) initial: Marking,
    pub(crate) roles: BTreeMap<Id, PlaceRole>,
}

impl Net {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kind_of(&self, id: &str) -> Option<ElementKind> {
        if self.lanes.contains_key(id) {
            Some(ElementKind::Lane)
        } else if let Some(e) = self.events.get(id) {
            Some(ElementKind::Event(e.direction))
        } else if self.places.contains_key(id) {
            Some(ElementKind::Place)
        } else if self.transitions.contains_key(id) {
            Some(ElementKind::Transition)
        } else {
            None
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.kind_of(id).is_some()
    }

    fn claim(&self, id: &Id) -> Result<(), NetError> {
        match self.kind_of(id.as_str()) {
            Some(kind) => Err(NetError::DuplicateId(id.clone(), kind.describe())),
            None => Ok(()),
        }
    }

    pub fn add_lane(&mut self, id: Id, name: impl Into<String>) -> Result<(), NetError> {
        self.claim(&id)?;
        let name = name.into();
        self.lanes.insert(id.clone(), Lane { id, name });
        Ok(())
    }

    pub fn add_event(
        &mut self,
        id: Id,
        direction: Direction,
        lane: Id,
        label: impl Into<String>,
    ) -> Result<(), NetError> {
        self.claim(&id)?;
        let label = label.into();
        self.events.insert(
            id.clone(),
            PortEvent {
                id,
                label,
                direction,
                lane,
            },
        );
        Ok(())
    }

    pub fn add_place(&mut self, id: Id, lane: Id, label: impl Into<String>) -> Result<(), NetError> {
        self.claim(&id)?;
        let label = label.into();
        self.places.insert(id.clone(), DataPlace { id, label, lane });
        Ok(())
    }

    pub fn add_transition(
        &mut self,
        id: Id,
        lane: Id,
        priority: PriorityClass,
        label: impl Into<String>,
    ) -> Result<(), NetError> {
        self.claim(&id)?;
        let label = label.into();
        self.transitions.insert(
            id.clone(),
            Transition {
                id,
                label,
                lane,
                priority,
            },
        );
        Ok(())
    }

    /// Adds an arc. Its kind is inferred from the source: arcs leaving a
    /// transition are `Out`, everything else is `In`. Endpoints are not
    /// resolved here; [`crate::validate`] reports dangling or non-tripartite
    /// arcs.
    pub fn add_arc(&mut self, source: Id, target: Id) -> Result<(), NetError> {
        let kind = if self.transitions.contains_key(source.as_str()) {
            ArcKind::Out
        } else {
            ArcKind::In
        };
        let arc = Arc { source, target, kind };
        if self.arcs.contains(&arc) {
            return Err(NetError::DuplicateArc(arc.source, arc.target));
        }
        self.arcs.insert(arc);
        Ok(())
    }

    pub fn has_arc(&self, source: &str, target: &str) -> bool {
        self.arcs
            .iter()
            .any(|a| a.source.as_str() == source && a.target.as_str() == target)
    }

    pub fn set_role(&mut self, id: Id, role: PlaceRole) {
        if role == PlaceRole::Plain {
            self.roles.remove(&id);
        } else {
            self.roles.insert(id, role);
        }
    }

    pub fn role(&self, id: &str) -> PlaceRole {
        self.roles.get(id).copied().unwrap_or_default()
    }

    pub fn set_priority(&mut self, transition: &str, priority: PriorityClass) -> Result<(), NetError> {
        match self.transitions.get_mut(transition) {
            Some(t) => {
                t.priority = priority;
                Ok(())
            }
            None => Err(NetError::UnknownElement(id(transition))),
        }
    }

    pub fn set_initial_tokens(&mut self, place: &Id, count: u32) {
        self.initial.set_tokens(place, count);
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.values()
    }

    pub fn events(&self) -> impl Iterator<Item = &PortEvent> {
        self.events.values()
    }

    pub fn input_events(&self) -> impl Iterator<Item = &PortEvent> {
        self.events.values().filter(|e| e.direction == Direction::Input)
    }

    pub fn output_events(&self) -> impl Iterator<Item = &PortEvent> {
        self.events.values().filter(|e| e.direction == Direction::Output)
    }

    pub fn places(&self) -> impl Iterator<Item = &DataPlace> {
        self.places.values()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.transitions.values()
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter()
    }

    pub fn roles(&self) -> impl Iterator<Item = (&Id, PlaceRole)> {
        self.roles.iter().map(|(k, v)| (k, *v))
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.get(id)
    }

    pub fn event(&self, id: &str) -> Option<&PortEvent> {
        self.events.get(id)
    }

    pub fn place(&self, id: &str) -> Option<&DataPlace> {
        self.places.get(id)
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.get(id)
    }

    /// Lane owning any non-lane element.
    pub fn lane_of(&self, id: &str) -> Option<&Id> {
        if let Some(e) = self.events.get(id) {
            Some(&e.lane)
        } else if let Some(p) = self.places.get(id) {
            Some(&p.lane)
        } else {
            self.transitions.get(id).map(|t| &t.lane)
        }
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        if let Some(l) = self.lanes.get(id) {
            Some(&l.name)
        } else if let Some(e) = self.events.get(id) {
            Some(&e.label)
        } else if let Some(p) = self.places.get(id) {
            Some(&p.label)
        } else {
            self.transitions.get(id).map(|t| t.label.as_str())
        }
    }

    /// Elements consumed by `t`, in id order.
    pub fn inputs_of<'a>(&'a self, t: &'a str) -> impl Iterator<Item = &'a Id> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.kind == ArcKind::In && a.target.as_str() == t)
            .map(|a| &a.source)
    }

    /// Elements produced by `t`, in id order.
    pub fn outputs_of<'a>(&'a self, t: &'a str) -> impl Iterator<Item = &'a Id> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.kind == ArcKind::Out && a.source.as_str() == t)
            .map(|a| &a.target)
    }

    /// Transitions that consume `element`.
    pub fn consumers_of<'a>(&'a self, element: &'a str) -> impl Iterator<Item = &'a Id> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.kind == ArcKind::In && a.source.as_str() == element)
            .map(|a| &a.target)
    }

    /// Transitions that produce into `element`.
    pub fn producers_of<'a>(&'a self, element: &'a str) -> impl Iterator<Item = &'a Id> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.kind == ArcKind::Out && a.target.as_str() == element)
            .map(|a| &a.source)
    }

    /// True for an out-arc from `t` into an input event owned by another
    /// lane: the event becomes an offered input for the receiving
    /// constituent instead of leaving the system.
    pub fn is_cross_lane(&self, t: &str, event: &str) -> bool {
        match (self.transitions.get(t), self.events.get(event)) {
            (Some(t), Some(e)) => e.direction == Direction::Input && e.lane != t.lane,
            _ => false,
        }
    }

    /// Graph union of two nets. Shared ids must describe the same element;
    /// initial tokens and role tags merge when only one side sets them.
    pub fn union(&self, other: &Net) -> Result<Net, NetError> {
        let mut out = self.clone();
        for (k, l) in &other.lanes {
            out.claim_unique(k, ElementKind::Lane)?;
            merge_entry(&mut out.lanes, k, l, "lane name")?;
        }
        for (k, e) in &other.events {
            out.claim_unique(k, ElementKind::Event(e.direction))?;
            merge_entry(&mut out.events, k, e, "event metadata")?;
        }
        for (k, p) in &other.places {
            out.claim_unique(k, ElementKind::Place)?;
            merge_entry(&mut out.places, k, p, "place metadata")?;
        }
        for (k, t) in &other.transitions {
            out.claim_unique(k, ElementKind::Transition)?;
            merge_entry(&mut out.transitions, k, t, "transition metadata")?;
        }
        out.arcs.extend(other.arcs.iter().cloned());
        for (p, n) in other.initial.marked() {
            match out.initial.tokens(p.as_str()) {
                0 => out.initial.set_tokens(p, n),
                m if m == n => {}
                _ => {
                    return Err(NetError::Clash {
                        id: p.clone(),
                        field: "initial tokens",
                    })
                }
            }
        }
        for (k, r) in &other.roles {
            match out.roles.get(k) {
                None => {
                    out.roles.insert(k.clone(), *r);
                }
                Some(existing) if existing == r => {}
                Some(_) => {
                    return Err(NetError::Clash {
                        id: k.clone(),
                        field: "role",
                    })
                }
            }
        }
        Ok(out)
    }

    fn claim_unique(&self, id: &Id, kind: ElementKind) -> Result<(), NetError> {
        match self.kind_of(id.as_str()) {
            Some(existing) if existing != kind => Err(NetError::Clash {
                id: id.clone(),
                field: "kind",
            }),
            _ => Ok(()),
        }
    }
}

fn merge_entry<V: Clone + PartialEq>(
    map: &mut BTreeMap<Id, V>,
    key: &Id,
    value: &V,
    field: &'static str,
) -> Result<(), NetError> {
    match map.get(key) {
        None => {
            map.insert(key.clone(), value.clone());
            Ok(())
        }
        Some(existing) if existing == value => Ok(()),
        Some(_) => Err(NetError::Clash { id: key.clone(), field }),
    }
}
