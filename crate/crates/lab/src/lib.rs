//! Experiment orchestration for the channel-selection laboratory:
//! reproducible random instances, named experiments over the policy and
//! planner machinery, and deterministic report files.

pub mod experiment;
pub mod instance;
pub mod report;

use osa_core::channel::ChannelError;
use osa_core::planner::PlannerError;
use osa_core::policy::PolicyError;
use osa_core::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(
        "unknown experiment `{0}` (expected structure, optimality, conjecture, lemma4 or montecarlo)"
    )]
    UnknownExperiment(String),

    #[error("experiment `{experiment}` requires {requirement}, spec has N={channels}")]
    ChannelCountUnsupported {
        experiment: String,
        requirement: &'static str,
        channels: usize,
    },

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error(transparent)]
    Planner(#[from] PlannerError),

    #[error(transparent)]
    Sim(#[from] SimError),
}
