//! Multi-armed bandits under a known, time-varying reward multiplier.
//!
//! Every round `t` the player picks one of `m` arms, an unscaled reward
//! `X_j(t)` is drawn from that arm's fixed distribution and the payoff is
//! `G(t) · X_j(t)` for a known schedule `G`. The policies in [`policy`]
//! regulate greed over time: they explore while `G` is low and exploit while
//! it is high. [`bounds`] evaluates the matching closed-form regret bounds and
//! [`engine`] runs seeded, reproducible Monte-Carlo batches.
//!
//! Rounds are 1-indexed (`t = 1..=n`); arms are 0-indexed in the API and
//! written 1-indexed in CSV output.

pub mod bandit;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod greed;
pub mod policy;
pub mod rng;

pub use bandit::{ArmKind, ArmModel, ArmSet, EstimatorState, GameTrace, TraceRow};
pub use bounds::{Beta, BoundComponent, BoundReport, RegionDiagnostics, RoundTerm};
pub use engine::{BatchResult, Comparison, Execution, ExperimentSpec, PolicyCurves};
pub use error::{Error, Result};
pub use greed::{GreedSchedule, ScheduleSpec, ThresholdStructure, Zone};
pub use policy::{Policy, PolicyConfig, PolicyKind, PolicyState};
pub use rng::{Purpose, TrialStreams};
