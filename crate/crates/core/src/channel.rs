//! Two-state Markov channels with noisy state detection.
//!
//! Each channel is an independent Gilbert-Elliot chain: state 1 (good) or
//! 0 (bad), with transition probabilities p01 (bad→good) and p11
//! (good→good). The user senses one channel per slot through a detector
//! with false-alarm probability ε (good sensed as bad) and miss-detection
//! probability δ (bad sensed as good), transmits iff the channel is sensed
//! good, and observes only the resulting ACK/NAK.
//!
//! The sufficient statistic for decision making is the belief vector
//! Ω(t) = [ω_1(t), …, ω_N(t)], ω_i being the conditional probability that
//! channel i is good. One slot of Bayesian filtering is:
//!
//! ```text
//! ω_i(t+1) = p11                                  sensed, ACK
//!          = Γ(ε·ω_i / (ε·ω_i + (1 − ω_i)))       sensed, NAK
//!          = Γ(ω_i)                               not sensed
//! ```
//!
//! where Γ(x) ≜ x·p11 + (1−x)·p01 is the one-step Markov prediction.
//! A NAK carries no information about which bad-channel event occurred,
//! so δ cancels out of the update entirely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from model construction and belief arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("parameter {name} must lie in {range}, got {value}")]
    ParameterOutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("belief value {0} outside [0, 1]")]
    BeliefOutOfRange(f64),

    #[error("belief vector must contain at least one channel")]
    EmptyBelief,

    #[error("channel {0} out of range for {1} channels")]
    ChannelOutOfRange(usize, usize),

    /// A NAK was conditioned on when its probability is zero
    /// (ω = 1 with ε = 0). This indicates an inconsistency between the
    /// process generating observations and the belief being updated, so
    /// it is a hard error rather than a silent clamp.
    #[error("conditioning on a NAK that has probability zero (omega = 1, epsilon = 0)")]
    ZeroProbabilityObservation,
}

/// A channel index, numbered 1..=N as in the access protocol.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Channel(usize);

impl Channel {
    /// Channel with the given 1-based number. Panics if `number` is zero.
    pub fn new(number: usize) -> Self {
        assert!(number >= 1, "channel numbers start at 1");
        Channel(number)
    }

    /// Channel for a 0-based position.
    pub fn from_index(index: usize) -> Self {
        Channel(index + 1)
    }

    /// The 1-based channel number.
    pub fn number(self) -> usize {
        self.0
    }

    /// The 0-based position of this channel in a belief vector.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The per-slot acknowledgement feedback. An ACK is sent only on a
/// successful transmission; a NAK is the absence of an ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Observation {
    Ack,
    Nak,
}

impl Observation {
    pub fn is_ack(self) -> bool {
        matches!(self, Observation::Ack)
    }

    pub fn from_ack(ack: bool) -> Self {
        if ack {
            Observation::Ack
        } else {
            Observation::Nak
        }
    }
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observation::Ack => write!(f, "ACK"),
            Observation::Nak => write!(f, "NAK"),
        }
    }
}

/// Sign of the one-slot state correlation, determined solely by the order
/// of p11 and p01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationSign {
    /// p11 ≥ p01: a good channel tends to stay good.
    Positive,
    /// p11 < p01: states tend to flip between consecutive slots.
    Negative,
}

/// The ε threshold under which the round-robin structure of the myopic
/// policy holds, together with whether the model satisfies it (strictly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBound {
    pub bound: f64,
    pub satisfied: bool,
}

/// Gilbert-Elliot channel parameters plus the detector operating point.
///
/// p00 and p10 are derived (p00 = 1 − p01, p10 = 1 − p11), never stored.
/// δ is carried for simulator fidelity even though it cancels out of the
/// belief update and the expected reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelParams")]
pub struct ChannelModel {
    p01: f64,
    p11: f64,
    epsilon: f64,
    delta: f64,
}

/// Raw JSON form of a [`ChannelModel`]; all four keys are decimal numbers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    pub p01: f64,
    pub p11: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl TryFrom<ModelParams> for ChannelModel {
    type Error = ChannelError;

    fn try_from(raw: ModelParams) -> Result<Self, ChannelError> {
        ChannelModel::relaxed(raw.p01, raw.p11, raw.epsilon, raw.delta)
    }
}

fn check_range(
    name: &'static str,
    value: f64,
    range: &'static str,
    ok: bool,
) -> Result<(), ChannelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ChannelError::ParameterOutOfRange { name, range, value })
    }
}

impl ChannelModel {
    /// Model with transition probabilities restricted to the open interval
    /// (0, 1), the regime in which the planning and policy results hold.
    pub fn new(p01: f64, p11: f64, epsilon: f64, delta: f64) -> Result<Self, ChannelError> {
        check_range("p01", p01, "(0, 1)", p01 > 0.0 && p01 < 1.0)?;
        check_range("p11", p11, "(0, 1)", p11 > 0.0 && p11 < 1.0)?;
        Self::relaxed(p01, p11, epsilon, delta)
    }

    /// Model allowing p01, p11 anywhere in [0, 1]. Degenerate chains
    /// (frozen or deterministically alternating states) are useful as
    /// simulator test scaffolding, so the simulator accepts them even
    /// though policy and planner guarantees assume the open interval.
    pub fn relaxed(p01: f64, p11: f64, epsilon: f64, delta: f64) -> Result<Self, ChannelError> {
        check_range("p01", p01, "[0, 1]", (0.0..=1.0).contains(&p01))?;
        check_range("p11", p11, "[0, 1]", (0.0..=1.0).contains(&p11))?;
        check_range("epsilon", epsilon, "[0, 1)", (0.0..1.0).contains(&epsilon))?;
        check_range("delta", delta, "[0, 1)", (0.0..1.0).contains(&delta))?;
        Ok(ChannelModel {
            p01,
            p11,
            epsilon,
            delta,
        })
    }

    /// Same model with a different miss-detection probability.
    pub fn with_delta(self, delta: f64) -> Result<Self, ChannelError> {
        Self::relaxed(self.p01, self.p11, self.epsilon, delta)
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn p00(&self) -> f64 {
        1.0 - self.p01
    }

    pub fn p10(&self) -> f64 {
        1.0 - self.p11
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn correlation_sign(&self) -> CorrelationSign {
        if self.p11 >= self.p01 {
            CorrelationSign::Positive
        } else {
            CorrelationSign::Negative
        }
    }

    /// One-step Markov prediction Γ(x) = x·p11 + (1−x)·p01.
    ///
    /// # Panics
    ///
    /// Panics if `x` is outside [0, 1].
    pub fn gamma(&self, x: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&x),
            "gamma argument {x} outside [0, 1]"
        );
        x * self.p11 + (1.0 - x) * self.p01
    }

    /// Posterior-then-prediction for the sensed channel after a NAK:
    /// Γ(ε·ω / (ε·ω + (1−ω))). δ does not appear: conditioned on the true
    /// state, the NAK probability is ε for a good channel and 1 for a bad
    /// one regardless of δ.
    pub fn nak_posterior(&self, omega: f64) -> Result<f64, ChannelError> {
        assert!(
            (0.0..=1.0).contains(&omega),
            "belief {omega} outside [0, 1]"
        );
        let denominator = self.epsilon * omega + (1.0 - omega);
        if denominator <= 0.0 {
            return Err(ChannelError::ZeroProbabilityObservation);
        }
        Ok(self.gamma(self.epsilon * omega / denominator))
    }

    /// Probability of an ACK when sensing a channel believed good with
    /// probability `omega`; also the expected one-slot reward ω·(1−ε).
    pub fn ack_probability(&self, omega: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&omega),
            "belief {omega} outside [0, 1]"
        );
        omega * (1.0 - self.epsilon)
    }

    /// The strict ε threshold for the round-robin structure:
    /// p10·p01/(p11·p00) for positively correlated channels and
    /// p00·p11/(p01·p10) for negatively correlated ones.
    pub fn epsilon_bound(&self) -> EpsilonBound {
        let bound = match self.correlation_sign() {
            CorrelationSign::Positive => (self.p10() * self.p01) / (self.p11 * self.p00()),
            CorrelationSign::Negative => (self.p00() * self.p11) / (self.p01 * self.p10()),
        };
        EpsilonBound {
            bound,
            satisfied: self.epsilon < bound,
        }
    }

    /// Closed interval [min(p01, p11), max(p01, p11)] that one update step
    /// maps every belief into.
    pub fn belief_band(&self) -> (f64, f64) {
        if self.p11 >= self.p01 {
            (self.p01, self.p11)
        } else {
            (self.p11, self.p01)
        }
    }

    /// True iff `omega` lies outside the belief band. Such values can only
    /// occur as given initial beliefs in the first slot.
    pub fn is_transient(&self, omega: f64) -> bool {
        assert!(
            (0.0..=1.0).contains(&omega),
            "belief {omega} outside [0, 1]"
        );
        let (lo, hi) = self.belief_band();
        omega < lo || omega > hi
    }

    /// Stationary probability p01/(p01 + p10) of the good state. For the
    /// doubly-absorbing corner p01 = p10 = 0 every distribution is
    /// stationary; 1/2 is returned by convention.
    pub fn stationary_belief(&self) -> f64 {
        let denominator = self.p01 + self.p10();
        if denominator <= 0.0 {
            0.5
        } else {
            self.p01 / denominator
        }
    }
}

/// Per-channel probabilities of being in the good state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefVector(Vec<f64>);

impl TryFrom<Vec<f64>> for BeliefVector {
    type Error = ChannelError;

    fn try_from(entries: Vec<f64>) -> Result<Self, ChannelError> {
        BeliefVector::new(entries)
    }
}

impl From<BeliefVector> for Vec<f64> {
    fn from(omega: BeliefVector) -> Vec<f64> {
        omega.0
    }
}

impl BeliefVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, ChannelError> {
        if entries.is_empty() {
            return Err(ChannelError::EmptyBelief);
        }
        for &w in &entries {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(ChannelError::BeliefOutOfRange(w));
            }
        }
        Ok(BeliefVector(entries))
    }

    /// All channels at the chain's stationary probability.
    pub fn stationary(model: &ChannelModel, channels: usize) -> Result<Self, ChannelError> {
        Self::new(vec![model.stationary_belief(); channels])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty vectors
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, channel: Channel) -> f64 {
        self.0[channel.index()]
    }

    /// Iterator over (channel, belief) pairs in channel order.
    pub fn channels(&self) -> impl Iterator<Item = (Channel, f64)> + '_ {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &w)| (Channel::from_index(i), w))
    }

    /// One full Bayesian filtering step: the sensed channel takes p11 on
    /// ACK or the NAK posterior on NAK, every other channel is predicted
    /// forward by Γ.
    pub fn updated(
        &self,
        action: Channel,
        obs: Observation,
        model: &ChannelModel,
    ) -> Result<BeliefVector, ChannelError> {
        if action.index() >= self.0.len() {
            return Err(ChannelError::ChannelOutOfRange(action.number(), self.0.len()));
        }
        let mut next = Vec::with_capacity(self.0.len());
        for (i, &w) in self.0.iter().enumerate() {
            if i == action.index() {
                next.push(match obs {
                    Observation::Ack => model.p11(),
                    Observation::Nak => model.nak_posterior(w)?,
                });
            } else {
                next.push(model.gamma(w));
            }
        }
        Ok(BeliefVector(next))
    }

    /// True iff no entry is transient for the given model.
    pub fn all_in_band(&self, model: &ChannelModel) -> bool {
        self.0.iter().all(|&w| !model.is_transient(w))
    }
}
