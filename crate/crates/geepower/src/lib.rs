//! Command line companion to [`geepower_core`]: scenario files in, power
//! tables out.
//!
//! The crate splits into three layers, each usable on its own:
//!
//! * [`scenario`] reads trial descriptions (plain text or JSON) into a
//!   [`geepower_core::TrialSpec`];
//! * [`report`] renders evaluation results as the familiar fixed-width
//!   power table and as a full-precision debugging view;
//! * [`sweep`] evaluates a grid over one parameter and renders CSV.
//!
//! The `geepower` binary wires these to three subcommands (`run`,
//! `sweep`, `explain`) with a small exit-code contract: `0` on success,
//! `1` for I/O, parsing, or numerical failures, and `2` when a scenario
//! is rejected by the model validator.

pub mod report;
pub mod scenario;
pub mod sweep;
