//! Line-oriented model file format.
//!
//! ```text
//! # comment
//! lane  <id> <name...>
//! event <id> in|out <lane> <label...>
//! place <id> <lane> <label...>
//! trans <id> <lane> [triggered] <label...>
//! arc   <source> -> <target>
//! mark  <place-id> [count]
//! role  <id> <roleName>
//! ```
//!
//! Arcs are resolved after every element record has been read, so record
//! order only matters for readability. [`write_model`] emits the canonical
//! ordering used by fixtures and the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Arc, Direction, Id, Net, PlaceRole, PriorityClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Line numbers of the records that produced each element and arc.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub elements: BTreeMap<Id, usize>,
    pub arcs: BTreeMap<(Id, Id), usize>,
}

impl SourceMap {
    pub fn line_of_arc(&self, arc: &Arc) -> Option<usize> {
        self.arcs.get(&(arc.source.clone(), arc.target.clone())).copied()
    }
}

#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub net: Net,
    pub source: SourceMap,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_id(line: usize, raw: Option<&str>, what: &str) -> Result<Id, ParseError> {
    let raw = raw.ok_or_else(|| err(line, format!("missing {what}")))?;
    Id::new(raw).map_err(|e| err(line, e.to_string()))
}

fn rest(words: &[&str]) -> String {
    words.join(" ")
}

/// Incremental reader shared by the model format and the `[entities]`
/// section of the relational format.
#[derive(Debug, Default)]
pub(crate) struct RecordReader {
    pub net: Net,
    pub source: SourceMap,
    arcs: Vec<(usize, Id, Id)>,
}

impl RecordReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, line: usize, text: &str, allow_arcs: bool) -> Result<(), ParseError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let Some((&keyword, args)) = words.split_first() else {
            return Ok(());
        };
        match keyword {
            "lane" => {
                let lane = parse_id(line, args.first().copied(), "lane id")?;
                self.source.elements.insert(lane.clone(), line);
                self.net
                    .add_lane(lane, rest(&args[1..]))
                    .map_err(|e| err(line, e.to_string()))
            }
            "event" => {
                let event = parse_id(line, args.first().copied(), "event id")?;
                let direction = match args.get(1).copied() {
                    Some("in") => Direction::Input,
                    Some("out") => Direction::Output,
                    Some(other) => return Err(err(line, format!("expected in|out, found {other:?}"))),
                    None => return Err(err(line, "missing event direction")),
                };
                let lane = parse_id(line, args.get(2).copied(), "lane id")?;
                self.source.elements.insert(event.clone(), line);
                self.net
                    .add_event(event, direction, lane, rest(args.get(3..).unwrap_or(&[])))
                    .map_err(|e| err(line, e.to_string()))
            }
            "place" => {
                let place = parse_id(line, args.first().copied(), "place id")?;
                let lane = parse_id(line, args.get(1).copied(), "lane id")?;
                self.source.elements.insert(place.clone(), line);
                self.net
                    .add_place(place, lane, rest(args.get(2..).unwrap_or(&[])))
                    .map_err(|e| err(line, e.to_string()))
            }
            "trans" => {
                let t = parse_id(line, args.first().copied(), "transition id")?;
                let lane = parse_id(line, args.get(1).copied(), "lane id")?;
                let mut label = args.get(2..).unwrap_or(&[]);
                let mut priority = PriorityClass::Normal;
                if label.first() == Some(&"triggered") {
                    priority = PriorityClass::Triggered;
                    label = &label[1..];
                }
                self.source.elements.insert(t.clone(), line);
                self.net
                    .add_transition(t, lane, priority, rest(label))
                    .map_err(|e| err(line, e.to_string()))
            }
            "arc" if allow_arcs => {
                if args.len() != 3 || args[1] != "->" {
                    return Err(err(line, "expected `arc <source> -> <target>`"));
                }
                let source = parse_id(line, Some(args[0]), "arc source")?;
                let target = parse_id(line, Some(args[2]), "arc target")?;
                self.arcs.push((line, source, target));
                Ok(())
            }
            "mark" => {
                let place = parse_id(line, args.first().copied(), "place id")?;
                let count = match args.get(1) {
                    None => 1,
                    Some(raw) => raw
                        .parse::<u32>()
                        .map_err(|_| err(line, format!("bad token count {raw:?}")))?,
                };
                if args.len() > 2 {
                    return Err(err(line, "trailing words after token count"));
                }
                if self.net.initial_marking().tokens(place.as_str()) != 0 {
                    return Err(err(line, format!("{place} marked twice")));
                }
                self.net.set_initial_tokens(&place, count);
                Ok(())
            }
            "role" => {
                let element = parse_id(line, args.first().copied(), "element id")?;
                let name = args.get(1).ok_or_else(|| err(line, "missing role name"))?;
                let role = PlaceRole::from_name(name).ok_or_else(|| err(line, format!("unknown role {name:?}")))?;
                if args.len() > 2 {
                    return Err(err(line, "trailing words after role name"));
                }
                self.net.set_role(element, role);
                Ok(())
            }
            other => Err(err(line, format!("unknown record {other:?}"))),
        }
    }

    pub fn finish(mut self) -> Result<ParsedModel, ParseError> {
        for (line, source, target) in std::mem::take(&mut self.arcs) {
            self.source.arcs.insert((source.clone(), target.clone()), line);
            self.net.add_arc(source, target).map_err(|e| err(line, e.to_string()))?;
        }
        Ok(ParsedModel {
            net: self.net,
            source: self.source,
        })
    }
}

/// Strips a trailing `#` comment.
pub(crate) fn content(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

pub fn parse_model(text: &str) -> Result<ParsedModel, ParseError> {
    let mut reader = RecordReader::new();
    for (i, line) in text.lines().enumerate() {
        reader.record(i + 1, content(line), true)?;
    }
    reader.finish()
}

/// Element records (everything except arcs) in canonical order.
pub(crate) fn write_entities(net: &Net, out: &mut String) {
    for lane in net.lanes() {
        push_record(out, &["lane", lane.id.as_str(), &lane.name]);
    }
    for e in net.events() {
        push_record(
            out,
            &["event", e.id.as_str(), e.direction.keyword(), e.lane.as_str(), &e.label],
        );
    }
    for p in net.places() {
        push_record(out, &["place", p.id.as_str(), p.lane.as_str(), &p.label]);
    }
    for t in net.transitions() {
        let class = match t.priority {
            PriorityClass::Triggered => "triggered",
            PriorityClass::Normal => "",
        };
        push_record(out, &["trans", t.id.as_str(), t.lane.as_str(), class, &t.label]);
    }
    for (p, n) in net.initial_marking().marked() {
        if n == 1 {
            push_record(out, &["mark", p.as_str()]);
        } else {
            push_record(out, &["mark", p.as_str(), &n.to_string()]);
        }
    }
    for (e, role) in net.roles() {
        push_record(out, &["role", e.as_str(), role.name()]);
    }
}

fn push_record(out: &mut String, words: &[&str]) {
    let line = words
        .iter()
        .filter(|w| !w.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&line);
    out.push('\n');
}

/// Canonical model text. Parsing the result yields an equal net.
pub fn write_model(net: &Net) -> String {
    let mut out = String::new();
    write_entities(net, &mut out);
    for arc in net.arcs() {
        let _ = writeln!(out, "arc {} -> {}", arc.source, arc.target);
    }
    out
}
