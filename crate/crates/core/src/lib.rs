//! Event abstraction with local process models: event logs, labelled
//! Petri nets, LPM mining, pattern-based abstraction, discovery and
//! conformance checking.

pub mod abstraction;
pub mod conformance;
pub mod discovery;
pub mod error;
pub mod eventlog;
pub mod lpm;
pub mod petrinet;

pub use error::{Error, Result};
