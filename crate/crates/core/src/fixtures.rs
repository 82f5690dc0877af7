//! Embedded garage door controller models.
//!
//! Element ids follow the garage door roster: input events p1-p6, output
//! events p7-p9, door states d1-d6. Pattern places added for the safety
//! features (`lb_ed`, `os_ed`, `rev`) use descriptive ids. Transition ids
//! are local to each fixture.

use thiserror::Error;

use crate::format::parse_model;
use crate::model::Net;

/// Catalog of `(name, model text)` pairs.
pub const CATALOG: &[(&str, &str)] = &[
    ("gdc-basic", include_str!("../fixtures/gdc-basic.edpn")),
    ("gdc-closing", include_str!("../fixtures/gdc-closing.edpn")),
    ("gdc-opening", include_str!("../fixtures/gdc-opening.edpn")),
    ("gdc-safety-enable", include_str!("../fixtures/gdc-safety-enable.edpn")),
    ("gdc-safety-full", include_str!("../fixtures/gdc-safety-full.edpn")),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("unknown fixture {name:?}; available: {}", names().collect::<Vec<_>>().join(", "))]
    Unknown { name: String },
    #[error("fixture {name} is malformed: {message}")]
    Malformed { name: String, message: String },
}

pub fn names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Result<&'static str, FixtureError> {
    CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| FixtureError::Unknown { name: name.to_string() })
}

/// Parses and validates a fixture.
pub fn load(name: &str) -> Result<Net, FixtureError> {
    let malformed = |message: String| FixtureError::Malformed {
        name: name.to_string(),
        message,
    };
    let net = parse_model(source(name)?).map_err(|e| malformed(e.to_string()))?.net;
    if let Some(v) = crate::validate(&net).first() {
        return Err(malformed(v.to_string()));
    }
    Ok(net)
}
