//! Command-line front end and file formats for `jerkmag-core`.
//!
//! * [`io`]: PNG frame directories and the `.jmv` raw container.
//! * [`manifest`]: JSON run manifests written next to every output.
//! * [`report`]: metric reports and cross-mode comparison tables.
//! * [`cli`]: the `magnify`, `metrics`, `slice` and `synth` subcommands.

pub mod cli;
pub mod io;
pub mod manifest;
pub mod report;

pub use jerkmag_core as core;
