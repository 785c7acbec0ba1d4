//! Std companion to `moduli-core`: file formats, a thread-pool executor,
//! run manifests, report emitters and the `moduli` command-line tool.

pub mod cli;
pub mod exec;
pub mod fixtures;
pub mod formats;
pub mod hexfloat;
pub mod manifest;
pub mod report;
