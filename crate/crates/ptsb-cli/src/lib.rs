//! Run orchestration for the `ptsb` binary: configuration resolution,
//! figure presets, parallel dispatch, and bit-stable CSV/JSON output.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
