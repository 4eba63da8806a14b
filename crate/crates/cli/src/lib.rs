//! Experiment front end for the distributed dispatch solver: TOML
//! configuration, orchestration and summary reporting, CSV trace
//! serialization, and the standalone verification suites.

pub mod config;
pub mod experiment;
pub mod trace_io;
pub mod verify;
