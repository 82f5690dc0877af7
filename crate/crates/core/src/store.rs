//! Relational form of a net: four arc relations plus an entity table.
//!
//! `eventInput` and `dataInput` hold `(element, transition)` rows for arcs
//! into a transition; `eventOutput` and `dataOutput` hold
//! `(element, transition)` rows for arcs out of one. Composition of
//! constituent models is plain set union, with elements identified by id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::format::{content, write_entities, ParseError, RecordReader};
use crate::model::{ArcKind, Direction, ElementKind, Id, Net, PlaceRole, PriorityClass};
use crate::validate;

pub type Row = (Id, Id);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    EventInput,
    EventOutput,
    DataInput,
    DataOutput,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::EventInput,
        Relation::EventOutput,
        Relation::DataInput,
        Relation::DataOutput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::EventInput => "eventInput",
            Relation::EventOutput => "eventOutput",
            Relation::DataInput => "dataInput",
            Relation::DataOutput => "dataOutput",
        }
    }

    fn of(element: ElementKind, kind: ArcKind) -> Option<Relation> {
        match (element, kind) {
            (ElementKind::Event(_), ArcKind::In) => Some(Relation::EventInput),
            (ElementKind::Event(_), ArcKind::Out) => Some(Relation::EventOutput),
            (ElementKind::Place, ArcKind::In) => Some(Relation::DataInput),
            (ElementKind::Place, ArcKind::Out) => Some(Relation::DataOutput),
            _ => None,
        }
    }

    fn holds_events(self) -> bool {
        matches!(self, Relation::EventInput | Relation::EventOutput)
    }

    fn is_input(self) -> bool {
        matches!(self, Relation::EventInput | Relation::DataInput)
    }
}

/// Metadata needed to rebuild an element losslessly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub kind: ElementKind,
    /// Label, or the constituent name for lanes.
    pub label: String,
    pub lane: Option<Id>,
    pub role: Option<PlaceRole>,
    pub initial_tokens: u32,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelationalStore {
    pub event_input: BTreeSet<Row>,
    pub event_output: BTreeSet<Row>,
    pub data_input: BTreeSet<Row>,
    pub data_output: BTreeSet<Row>,
    pub entities: BTreeMap<Id, Entity>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("net is not well-formed: {0}")]
    InvalidNet(String),
    #[error("{relation} row ({}, {}) references undeclared {missing}", row.0, row.1)]
    Dangling {
        relation: &'static str,
        row: Row,
        missing: Id,
    },
    #[error("{relation} row ({}, {}) joins the wrong kinds of element", row.0, row.1)]
    WrongKind { relation: &'static str, row: Row },
    #[error("composition conflict on {id}: fields differ: {}", fields.join(", "))]
    CompositionConflict { id: Id, fields: Vec<&'static str> },
    #[error("unknown id {0}")]
    UnknownId(Id),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl RelationalStore {
    pub fn relation(&self, relation: Relation) -> &BTreeSet<Row> {
        match relation {
            Relation::EventInput => &self.event_input,
            Relation::EventOutput => &self.event_output,
            Relation::DataInput => &self.data_input,
            Relation::DataOutput => &self.data_output,
        }
    }

    pub fn relation_mut(&mut self, relation: Relation) -> &mut BTreeSet<Row> {
        match relation {
            Relation::EventInput => &mut self.event_input,
            Relation::EventOutput => &mut self.event_output,
            Relation::DataInput => &mut self.data_input,
            Relation::DataOutput => &mut self.data_output,
        }
    }

    pub fn row_count(&self) -> usize {
        Relation::ALL.iter().map(|r| self.relation(*r).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.row_count() == 0 && self.entities.is_empty()
    }
}

fn entities_of(net: &Net) -> BTreeMap<Id, Entity> {
    let mut out = BTreeMap::new();
    let role = |id: &Id| match net.role(id.as_str()) {
        PlaceRole::Plain => None,
        r => Some(r),
    };
    for l in net.lanes() {
        out.insert(
            l.id.clone(),
            Entity {
                kind: ElementKind::Lane,
                label: l.name.clone(),
                lane: None,
                role: None,
                initial_tokens: 0,
                triggered: false,
            },
        );
    }
    for e in net.events() {
        out.insert(
            e.id.clone(),
            Entity {
                kind: ElementKind::Event(e.direction),
                label: e.label.clone(),
                lane: Some(e.lane.clone()),
                role: role(&e.id),
                initial_tokens: 0,
                triggered: false,
            },
        );
    }
    for p in net.places() {
        out.insert(
            p.id.clone(),
            Entity {
                kind: ElementKind::Place,
                label: p.label.clone(),
                lane: Some(p.lane.clone()),
                role: role(&p.id),
                initial_tokens: net.initial_marking().tokens(p.id.as_str()),
                triggered: false,
            },
        );
    }
    for t in net.transitions() {
        out.insert(
            t.id.clone(),
            Entity {
                kind: ElementKind::Transition,
                label: t.label.clone(),
                lane: Some(t.lane.clone()),
                role: None,
                initial_tokens: 0,
                triggered: t.priority == PriorityClass::Triggered,
            },
        );
    }
    out
}

/// Net holding every entity and no arcs.
fn skeleton(entities: &BTreeMap<Id, Entity>) -> Result<Net, StoreError> {
    let mut net = Net::new();
    let clash = |e: crate::NetError| StoreError::InvalidNet(e.to_string());
    for (id, e) in entities {
        let lane = || {
            e.lane
                .clone()
                .ok_or_else(|| StoreError::InvalidNet(format!("{id} has no lane")))
        };
        match e.kind {
            ElementKind::Lane => net.add_lane(id.clone(), e.label.clone()).map_err(clash)?,
            ElementKind::Event(dir) => net
                .add_event(id.clone(), dir, lane()?, e.label.clone())
                .map_err(clash)?,
            ElementKind::Place => {
                net.add_place(id.clone(), lane()?, e.label.clone()).map_err(clash)?;
                net.set_initial_tokens(id, e.initial_tokens);
            }
            ElementKind::Transition => {
                let priority = if e.triggered {
                    PriorityClass::Triggered
                } else {
                    PriorityClass::Normal
                };
                net.add_transition(id.clone(), lane()?, priority, e.label.clone())
                    .map_err(clash)?
            }
        }
        if let Some(role) = e.role {
            net.set_role(id.clone(), role);
        }
    }
    Ok(net)
}

/// Exports a well-formed net to its relational form.
pub fn to_relations(net: &Net) -> Result<RelationalStore, StoreError> {
    if let Some(v) = validate::errors(net).first() {
        return Err(StoreError::InvalidNet(v.to_string()));
    }
    let mut store = RelationalStore {
        entities: entities_of(net),
        ..RelationalStore::default()
    };
    for arc in net.arcs() {
        let (element, transition) = match arc.kind {
            ArcKind::In => (&arc.source, &arc.target),
            ArcKind::Out => (&arc.target, &arc.source),
        };
        let kind = net
            .kind_of(element.as_str())
            .expect("validated nets have no dangling arcs");
        let relation = Relation::of(kind, arc.kind).expect("validated nets are tripartite");
        store
            .relation_mut(relation)
            .insert((element.clone(), transition.clone()));
    }
    Ok(store)
}

/// Rebuilds the net. Inverse of [`to_relations`].
pub fn from_relations(store: &RelationalStore) -> Result<Net, StoreError> {
    let mut net = skeleton(&store.entities)?;
    for relation in Relation::ALL {
        for row in store.relation(relation) {
            let (element, transition) = row;
            for id in [element, transition] {
                if !store.entities.contains_key(id) {
                    return Err(StoreError::Dangling {
                        relation: relation.name(),
                        row: row.clone(),
                        missing: id.clone(),
                    });
                }
            }
            let element_ok = match store.entities[element].kind {
                ElementKind::Event(_) => relation.holds_events(),
                ElementKind::Place => !relation.holds_events(),
                _ => false,
            };
            if !element_ok || store.entities[transition].kind != ElementKind::Transition {
                return Err(StoreError::WrongKind {
                    relation: relation.name(),
                    row: row.clone(),
                });
            }
            let added = if relation.is_input() {
                net.add_arc(element.clone(), transition.clone())
            } else {
                net.add_arc(transition.clone(), element.clone())
            };
            added.map_err(|e| StoreError::InvalidNet(e.to_string()))?;
        }
    }
    Ok(net)
}

/// Differences between two descriptions of the same id.
fn disagreements(a: &Entity, b: &Entity) -> Vec<&'static str> {
    let mut fields = Vec::new();
    if a.kind != b.kind {
        fields.push("kind");
    }
    if a.label != b.label {
        fields.push("label");
    }
    if a.lane != b.lane {
        fields.push("lane");
    }
    if a.triggered != b.triggered {
        fields.push("priority");
    }
    if a.role.is_some() && b.role.is_some() && a.role != b.role {
        fields.push("role");
    }
    if a.initial_tokens != 0 && b.initial_tokens != 0 && a.initial_tokens != b.initial_tokens {
        fields.push("initial tokens");
    }
    fields
}

/// Relational union of two constituent stores. Shared ids denote the same
/// element and must agree on kind, label, lane and priority; role tags and
/// initial tokens merge when only one side sets them.
pub fn compose(a: &RelationalStore, b: &RelationalStore) -> Result<RelationalStore, StoreError> {
    let mut out = a.clone();
    for (id, eb) in &b.entities {
        match out.entities.get_mut(id) {
            None => {
                out.entities.insert(id.clone(), eb.clone());
            }
            Some(ea) => {
                let fields = disagreements(ea, eb);
                if !fields.is_empty() {
                    return Err(StoreError::CompositionConflict { id: id.clone(), fields });
                }
                ea.role = ea.role.or(eb.role);
                ea.initial_tokens = ea.initial_tokens.max(eb.initial_tokens);
            }
        }
    }
    for relation in Relation::ALL {
        out.relation_mut(relation).extend(b.relation(relation).iter().cloned());
    }
    Ok(out)
}

/// Is there a directed path from `from` to `to` through the relation rows?
pub fn connected(store: &RelationalStore, from: &str, to: &str) -> Result<bool, StoreError> {
    for id in [from, to] {
        if !store.entities.contains_key(id) {
            return Err(StoreError::UnknownId(
                Id::new(id).map_err(|e| StoreError::InvalidNet(e.to_string()))?,
            ));
        }
    }
    if from == to {
        return Ok(true);
    }
    let mut next: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for relation in Relation::ALL {
        for (element, transition) in store.relation(relation) {
            let (src, dst) = if relation.is_input() {
                (element, transition)
            } else {
                (transition, element)
            };
            next.entry(src.as_str()).or_default().push(dst.as_str());
        }
    }
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        for &n in next.get(node).into_iter().flatten() {
            if n == to {
                return Ok(true);
            }
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    Ok(false)
}

/// Canonical relational text: an `[entities]` section in model-record
/// syntax followed by the four relations as `id,id` rows.
pub fn write_store(store: &RelationalStore) -> Result<String, StoreError> {
    let mut out = String::from("[entities]\n");
    write_entities(&skeleton(&store.entities)?, &mut out);
    for relation in Relation::ALL {
        let _ = writeln!(out, "[{}]", relation.name());
        for (a, b) in store.relation(relation) {
            let _ = writeln!(out, "{a},{b}");
        }
    }
    Ok(out)
}

/// True when `text` looks like relational rather than model format.
pub fn is_relational(text: &str) -> bool {
    text.lines()
        .map(content)
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with('['))
}

pub fn parse_store(text: &str) -> Result<RelationalStore, StoreError> {
    let err = |line: usize, message: String| StoreError::Parse(ParseError { line, message });
    let mut reader = RecordReader::new();
    let mut rows: Vec<(usize, Relation, Row)> = Vec::new();
    let mut section: Option<Option<Relation>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let text = content(raw);
        if text.is_empty() {
            continue;
        }
        if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            section = match name {
                "entities" => Some(None),
                other => match Relation::ALL.into_iter().find(|r| r.name() == other) {
                    Some(r) => Some(Some(r)),
                    None => return Err(err(line, format!("unknown section [{other}]"))),
                },
            };
            continue;
        }
        match section {
            None => return Err(err(line, "content before the first section header".into())),
            Some(None) => reader.record(line, text, false)?,
            Some(Some(relation)) => {
                let (a, b) = text
                    .split_once(',')
                    .ok_or_else(|| err(line, format!("expected `id,id`, found {text:?}")))?;
                let parse = |raw: &str| Id::new(raw.trim()).map_err(|e| err(line, e.to_string()));
                rows.push((line, relation, (parse(a)?, parse(b)?)));
            }
        }
    }
    let net = reader.finish()?.net;
    let mut store = RelationalStore {
        entities: entities_of(&net),
        ..RelationalStore::default()
    };
    for (line, relation, row) in rows {
        if !store.relation_mut(relation).insert(row.clone()) {
            return Err(err(
                line,
                format!("duplicate {} row {},{}", relation.name(), row.0, row.1),
            ));
        }
    }
    Ok(store)
}

/// Direction helper used by listings.
pub fn direction_of(store: &RelationalStore, id: &str) -> Option<Direction> {
    match store.entities.get(id)?.kind {
        ElementKind::Event(d) => Some(d),
        _ => None,
    }
}
