//! Benchmark suites, acceptance checks and report writers behind the `mtaar`
//! command-line tool.

pub mod acceptance;
pub mod bands;
pub mod cli;
pub mod problem;
pub mod report;
pub mod suites;
