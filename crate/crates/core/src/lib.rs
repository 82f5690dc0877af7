//! Swim lane event-driven Petri nets (EDPNs) for offline model-based
//! testing of interacting systems.
//!
//! The crate covers the whole workflow:
//!
//! - [`model`] and [`format`]: the net itself and its line-oriented text form.
//! - [`validate()`]: structural well-formedness.
//! - [`sim`]: enabledness, firing, event quiescence and trace execution.
//! - [`patterns`]: builders and recognizers for communication primitives
//!   (conflict, interlock, enable/disable, trigger, suspend/resume,
//!   requests and their responses).
//! - [`store`]: the four-relation database form of a net and relational
//!   composition of constituent models.
//! - [`testgen`] and [`coverage`]: path enumeration, test-case derivation
//!   and the five system-level coverage metrics.
//! - [`fixtures`]: the garage door controller models.
//! - [`cli`]: the `edpn` command-line front end.

pub mod cli;
pub mod coverage;
pub mod dot;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod patterns;
pub mod sim;
pub mod store;
pub mod testgen;
mod validate;

pub use model::{
    id, Arc, ArcKind, DataPlace, Direction, ElementKind, Id, Lane, Marking, Net, NetError, PlaceRole, PortEvent,
    PriorityClass, Transition,
};
pub use validate::{errors as validation_errors, validate, Subject, Violation, ViolationKind};
