//! Workbench for physics-grounded reward shaping in building energy control.
//!
//! The crate bundles everything needed to run the experimental pipeline
//! end to end on a single machine:
//!
//! - [`comfort`]: ISO 7730 PMV/PPD and the PMV-based comfort reward
//! - [`reward`]: the weighted energy/comfort/grid reward and the E1–E5 registry
//! - [`env`]: a seeded synthetic district with controllable batteries
//! - [`baseline`]: the hour-driven rule-based controller (E1)
//! - [`agent`]: reverse-mode autodiff, MLPs and Soft Actor-Critic
//! - [`kpi`]: district KPIs and ratios against the rule-based controller
//! - [`harness`]: experiment configuration, runs, reports and plot data

pub mod agent;
pub mod baseline;
pub mod comfort;
pub mod env;
pub mod error;
pub mod harness;
pub mod kpi;
pub mod reward;

pub use comfort::{ComfortInputs, PmvResult};
pub use env::{Action, Dataset, DistrictEnv, DistrictState, Observation};
pub use error::{Error, Result};
pub use kpi::{KpiReport, RawKpis};
pub use reward::{Condition, ConditionId, RewardWeights, StepSignals};
