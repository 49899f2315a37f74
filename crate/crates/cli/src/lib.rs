//! Config-driven front end for the `geoconvex` checker: JSON run configs in,
//! byte-deterministic JSON or text reports out.

pub mod commands;
pub mod config;
pub mod report;
