//! Monte Carlo simulation of the full sense/transmit/acknowledge loop.
//!
//! Each episode draws initial channel states from the configured initial
//! belief, then per slot: the policy picks a channel from ACK/NAK history
//! alone, the detector fires (false alarm with probability ε on a good
//! channel, miss with probability δ on a bad one), the user transmits iff
//! the channel was detected good, and a unit reward is accrued exactly
//! when a transmission succeeds. Episodes derive independent RNG streams
//! from (master seed, episode index), so traces are reproducible and
//! episodes can run in any order.

use crate::channel::{BeliefVector, Channel, ChannelError, ChannelModel, Observation};
use crate::policy::{PolicyError, PolicySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("throughput estimation needs at least 2 episodes, got {0}")]
    TooFewEpisodes(u64),

    #[error("initial belief has {got} entries for {expected} channels")]
    InitialBeliefLength { expected: usize, got: usize },

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// The four possible per-slot events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotEvent {
    /// Good channel detected good: successful transmission, ACK, reward.
    Success,
    /// Good channel detected bad: opportunity missed, no transmission.
    FalseAlarm,
    /// Bad channel detected bad: correctly idle.
    CorrectReject,
    /// Bad channel detected good: failed transmission.
    MissDetection,
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    /// True joint state S(t); true = good.
    pub states: Vec<bool>,
    pub action: Channel,
    /// Detector decision for the sensed channel; true = detected good.
    pub detected_good: bool,
    pub transmitted: bool,
    pub event: SlotEvent,
    pub observation: Observation,
    pub reward: u8,
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode: u64,
    pub records: Vec<SlotRecord>,
    pub total_reward: u32,
}

/// Initial channel-state distribution; per-channel independent Bernoulli.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialBelief {
    /// Every channel at the chain's stationary probability.
    #[default]
    Stationary,
    /// Explicit per-channel probabilities (any belief vector).
    Explicit(Vec<f64>),
}

/// One simulation setup: model, dimensions, episode budget, seed, initial
/// distribution and policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ChannelModel,
    pub channels: usize,
    pub horizon: usize,
    pub episodes: u64,
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialBelief,
    pub policy: PolicySpec,
}

impl SimConfig {
    /// The belief vector the policy is initialized from; also the
    /// Bernoulli parameters of the initial states.
    pub fn initial_belief(&self) -> Result<BeliefVector, SimError> {
        match &self.initial {
            InitialBelief::Stationary => {
                Ok(BeliefVector::stationary(&self.model, self.channels)?)
            }
            InitialBelief::Explicit(values) => {
                if values.len() != self.channels {
                    return Err(SimError::InitialBeliefLength {
                        expected: self.channels,
                        got: values.len(),
                    });
                }
                Ok(BeliefVector::new(values.clone())?)
            }
        }
    }
}

/// Advance every channel one slot: 0→1 with probability p01, 1→1 with
/// probability p11, independently across channels.
pub fn step_channels<R: Rng>(states: &mut [bool], model: &ChannelModel, rng: &mut R) {
    for state in states.iter_mut() {
        let p_good = if *state { model.p11() } else { model.p01() };
        *state = rng.random_bool(p_good);
    }
}

/// Outcome of sensing and conditionally accessing one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseOutcome {
    pub detected_good: bool,
    pub transmitted: bool,
    pub observation: Observation,
    pub reward: bool,
    pub event: SlotEvent,
}

/// Detect the channel state and transmit iff it is detected good.
pub fn sense_and_access<R: Rng>(
    state_good: bool,
    model: &ChannelModel,
    rng: &mut R,
) -> SenseOutcome {
    if state_good {
        if rng.random_bool(model.epsilon()) {
            SenseOutcome {
                detected_good: false,
                transmitted: false,
                observation: Observation::Nak,
                reward: false,
                event: SlotEvent::FalseAlarm,
            }
        } else {
            SenseOutcome {
                detected_good: true,
                transmitted: true,
                observation: Observation::Ack,
                reward: true,
                event: SlotEvent::Success,
            }
        }
    } else if rng.random_bool(model.delta()) {
        SenseOutcome {
            detected_good: true,
            transmitted: true,
            observation: Observation::Nak,
            reward: false,
            event: SlotEvent::MissDetection,
        }
    } else {
        SenseOutcome {
            detected_good: false,
            transmitted: false,
            observation: Observation::Nak,
            reward: false,
            event: SlotEvent::CorrectReject,
        }
    }
}

fn episode_rng(seed: u64, episode: u64, lane: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Two lanes per episode: channel dynamics and (for random policies)
    // the policy's own draws.
    rng.set_stream(episode * 2 + lane);
    rng
}

fn run_loop(
    config: &SimConfig,
    episode: u64,
    mut records: Option<&mut Vec<SlotRecord>>,
) -> Result<u32, SimError> {
    let mut rng = episode_rng(config.seed, episode, 0);
    let mut omega = config.initial_belief()?;
    let mut cursor = config.policy.cursor(&omega, &config.model, {
        // Seed lane 1 is reserved for the policy; fold it into the stream
        // id handed to seeded policies.
        episode * 2 + 1
    })?;

    let mut states: Vec<bool> = omega
        .entries()
        .iter()
        .map(|&w| rng.random_bool(w))
        .collect();

    let mut total = 0u32;
    for slot in 1..=config.horizon {
        let action = cursor.decide(&omega);
        let outcome = sense_and_access(states[action.index()], &config.model, &mut rng);
        if outcome.reward {
            total += 1;
        }
        if let Some(records) = records.as_deref_mut() {
            records.push(SlotRecord {
                slot,
                states: states.clone(),
                action,
                detected_good: outcome.detected_good,
                transmitted: outcome.transmitted,
                event: outcome.event,
                observation: outcome.observation,
                reward: outcome.reward as u8,
            });
        }
        if slot < config.horizon {
            omega = omega.updated(action, outcome.observation, &config.model)?;
            cursor.observe(action, outcome.observation, &omega);
            step_channels(&mut states, &config.model, &mut rng);
        }
    }
    Ok(total)
}

/// Run one closed-loop episode, returning the full trace. Deterministic in
/// (config, episode index).
pub fn run_episode(config: &SimConfig, episode: u64) -> Result<EpisodeTrace, SimError> {
    let mut records = Vec::with_capacity(config.horizon);
    let total_reward = run_loop(config, episode, Some(&mut records))?;
    Ok(EpisodeTrace {
        episode,
        records,
        total_reward,
    })
}

/// Sample mean and standard error of the total episode reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputEstimate {
    pub episodes: u64,
    pub mean: f64,
    pub std_error: f64,
}

/// Estimate expected total reward over `config.episodes` independent
/// episodes (Welford's online moments; no traces are kept).
pub fn estimate_throughput(config: &SimConfig) -> Result<ThroughputEstimate, SimError> {
    if config.episodes < 2 {
        return Err(SimError::TooFewEpisodes(config.episodes));
    }
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for episode in 0..config.episodes {
        let x = run_loop(config, episode, None)? as f64;
        let count = (episode + 1) as f64;
        let delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    let n = config.episodes as f64;
    let variance = m2 / (n - 1.0);
    Ok(ThroughputEstimate {
        episodes: config.episodes,
        mean,
        std_error: (variance / n).sqrt(),
    })
}

/// Write one slot record per line as JSON.
pub fn write_trace_jsonl<W: Write>(trace: &EpisodeTrace, mut out: W) -> io::Result<()> {
    for record in &trace.records {
        let line = serde_json::to_string(record)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Write `episode,total_reward` rows with a header.
pub fn write_rewards_csv<W: Write>(totals: &[(u64, u32)], mut out: W) -> io::Result<()> {
    writeln!(out, "episode,total_reward")?;
    for (episode, total) in totals {
        writeln!(out, "{episode},{total}")?;
    }
    Ok(())
}
