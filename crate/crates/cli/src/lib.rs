//! Run configuration, file formats and study harnesses around `mfg-core`.
//!
//! The binary exposes five subcommands: `solve`, `validate`,
//! `convergence-study`, `timing-study` and `sigma-study`. All of them read
//! a flat `key = value` config file and accept a handful of overrides.

pub mod config;
pub mod csvio;
pub mod plots;
pub mod solve;
pub mod studies;
pub mod summary;

pub use config::{RunConfig, SweepParameter};
pub use solve::{run_solve, Refusal, RunOutcome};
pub use studies::{run_convergence_study, run_sigma_study, run_timing_study, StudyReport};
pub use summary::RunSummary;
