//! Command line pipeline: configuration, synthetic logs, single runs and
//! parameter sweeps.

pub mod config;
pub mod generate;
pub mod pipeline;
pub mod sweep;
