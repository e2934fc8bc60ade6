//! Optimal scheduling of anytime processes that share one resource.
//!
//! Each process is described by a goal-time distribution ([`profiles`]).
//! The [`optimizer`] builds a suspend-resume schedule minimising expected
//! cost, the [`simulator`] evaluates it against baseline strategies, and
//! [`latinsq`] supplies a constraint-solving workload for benchmarking.

pub mod analysis;
pub mod chain;
pub mod cost;
pub mod error;
pub mod io;
pub mod latinsq;
mod numeric;
pub mod optimizer;
pub mod profiles;
pub mod simulator;

pub use cost::{CostFunction, CostModel, Schedule, Segment, Share, ZetaSequence};
pub use error::{Error, Result};
pub use optimizer::{OptimalScheduleResult, OptimizerConfig};
pub use profiles::{fit_empirical, Evaluation, Family, Profile, Sample};
pub use simulator::StrategyReport;
