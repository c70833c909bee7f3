//! Channel-selection policies.
//!
//! The myopic policy picks the channel with the largest belief each slot.
//! Under the strict ε threshold of [`ChannelModel::epsilon_bound`] it
//! collapses to a round-robin procedure driven only by a circular channel
//! order and the last ACK/NAK bit, with no belief tracking and no
//! knowledge of the transition probabilities beyond the order of p11 and
//! p01:
//!
//! * positively correlated channels (p11 ≥ p01): stay after an ACK,
//!   advance to the next channel in the fixed circular order after a NAK;
//! * negatively correlated channels (p11 < p01): stay after a NAK,
//!   advance after an ACK, where the order in effect reverses every slot.
//!
//! The circular order starts as the descending sort of the initial
//! beliefs. Initial beliefs outside the band [min(p01,p11), max(p01,p11)]
//! need a one-shot correction after a first-slot NAK: the slot-2 action
//! and the order used from then on are re-derived from the rank of the
//! first channel's post-NAK posterior among the remaining initial beliefs
//! (see [`transient_slot2_action`]).
//!
//! [`equivalent_actions`] is the harness that checks any policy against
//! exact belief tracking over every observation path.

use crate::channel::{
    BeliefVector, Channel, ChannelError, ChannelModel, CorrelationSign, Observation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

/// Two beliefs within this distance of the maximum are treated as tied
/// when building argmax sets.
pub const ARGMAX_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("false alarm probability {epsilon} does not satisfy the structural bound {bound}")]
    EpsilonBoundNotSatisfied { epsilon: f64, bound: f64 },

    #[error("{0:?} is not a circular order over channels 1..={1}")]
    NotAPermutation(Vec<usize>, usize),

    #[error("unknown policy name `{0}`")]
    UnknownPolicy(String),

    #[error("fixed policy channel {channel} out of range for {channels} channels")]
    FixedChannelOutOfRange { channel: usize, channels: usize },

    #[error(transparent)]
    Channel(#[from] ChannelError),
}

// ── Circular channel orders ──────────────────────────────────────────────

/// An ordering of all N channels interpreted cyclically: the starting
/// point is irrelevant, so equality is rotation-invariant.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CircularOrder(Vec<Channel>);

impl TryFrom<Vec<usize>> for CircularOrder {
    type Error = PolicyError;

    fn try_from(numbers: Vec<usize>) -> Result<Self, PolicyError> {
        let n = numbers.len();
        let mut seen = vec![false; n];
        for &c in &numbers {
            if c < 1 || c > n || seen[c - 1] {
                return Err(PolicyError::NotAPermutation(numbers.clone(), n));
            }
            seen[c - 1] = true;
        }
        Ok(CircularOrder(numbers.into_iter().map(Channel::new).collect()))
    }
}

impl From<CircularOrder> for Vec<usize> {
    fn from(order: CircularOrder) -> Vec<usize> {
        order.0.iter().map(|c| c.number()).collect()
    }
}

impl CircularOrder {
    /// Order over the given channels; must be a permutation of 1..=N.
    pub fn new(channels: Vec<Channel>) -> Result<Self, PolicyError> {
        Self::try_from(channels.iter().map(|c| c.number()).collect::<Vec<_>>())
    }

    /// The order (1, 2, …, n).
    pub fn identity(n: usize) -> Self {
        CircularOrder((1..=n).map(Channel::new).collect())
    }

    /// Stable descending sort of the belief vector; equal beliefs keep
    /// ascending channel order, so the first element is the tie-broken
    /// argmax.
    pub fn descending(omega: &BeliefVector) -> Self {
        let mut channels: Vec<Channel> = (1..=omega.len()).map(Channel::new).collect();
        channels.sort_by(|a, b| omega.get(*b).partial_cmp(&omega.get(*a)).unwrap());
        CircularOrder(channels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.0
    }

    /// The reverse circular order −C.
    pub fn reversed(&self) -> Self {
        let mut channels = self.0.clone();
        channels.reverse();
        CircularOrder(channels)
    }

    /// The channel after `channel` in this order, wrapping cyclically.
    ///
    /// # Panics
    ///
    /// Panics if `channel` is not a member of the order.
    pub fn next_after(&self, channel: Channel) -> Channel {
        let pos = self
            .0
            .iter()
            .position(|&c| c == channel)
            .expect("channel not in circular order");
        self.0[(pos + 1) % self.0.len()]
    }

    /// Entries rotated so the lowest channel number comes first; rotations
    /// of the same cycle share one canonical form.
    fn canonical(&self) -> Vec<Channel> {
        let start = self
            .0
            .iter()
            .enumerate()
            .min_by_key(|(_, c)| c.number())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut out = Vec::with_capacity(self.0.len());
        out.extend_from_slice(&self.0[start..]);
        out.extend_from_slice(&self.0[..start]);
        out
    }
}

impl PartialEq for CircularOrder {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.canonical() == other.canonical()
    }
}

impl std::fmt::Display for CircularOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

// ── Myopic argmax ────────────────────────────────────────────────────────

/// The myopic action: index of the maximal belief, ties broken by lowest
/// channel number.
pub fn myopic_action(omega: &BeliefVector) -> Channel {
    let mut best = Channel::new(1);
    let mut best_value = omega.entries()[0];
    for (channel, w) in omega.channels().skip(1) {
        if w > best_value {
            best = channel;
            best_value = w;
        }
    }
    best
}

/// Every channel whose belief is within [`ARGMAX_TIE_TOLERANCE`] of the
/// maximum, in ascending channel order.
pub fn argmax_set(omega: &BeliefVector) -> Vec<Channel> {
    let max = omega
        .entries()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    omega
        .channels()
        .filter(|(_, w)| *w >= max - ARGMAX_TIE_TOLERANCE)
        .map(|(c, _)| c)
        .collect()
}

// ── The round-robin structure ────────────────────────────────────────────

/// Pending first-slot correction when some initial belief is transient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientCorrection {
    /// Rank r of the sensed channel's post-NAK Bayes posterior among
    /// {posterior, remaining initial beliefs}, 1 = largest.
    pub rank: usize,
    /// Prescribed action for slot 2 after a first-slot NAK.
    pub slot2_action: Channel,
    /// Base order in effect from slot 2 onward after a first-slot NAK.
    pub corrected_base: CircularOrder,
}

/// State of the round-robin policy: the base circular order, the channel
/// currently selected, the slot it is selected for, and the correction
/// context when initial beliefs are transient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralPolicyState {
    base_order: CircularOrder,
    current: Channel,
    slot: usize,
    sign: CorrelationSign,
    transient: Option<TransientCorrection>,
}

impl StructuralPolicyState {
    pub fn base_order(&self) -> &CircularOrder {
        &self.base_order
    }

    /// The channel selected for [`Self::slot`].
    pub fn current_channel(&self) -> Channel {
        self.current
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn sign(&self) -> CorrelationSign {
        self.sign
    }

    pub fn transient_pending(&self) -> Option<&TransientCorrection> {
        self.transient.as_ref()
    }

    /// The order in effect for the given slot: the base order, reversed on
    /// even slots for negatively correlated channels.
    pub fn effective_order(&self, slot: usize) -> CircularOrder {
        match self.sign {
            CorrelationSign::Positive => self.base_order.clone(),
            CorrelationSign::Negative => {
                if slot % 2 == 1 {
                    self.base_order.clone()
                } else {
                    self.base_order.reversed()
                }
            }
        }
    }
}

/// Slot-2 action and corrected base order after a first-slot NAK when the
/// initial beliefs contain a transient value, expressed over relabeled
/// channels (1, 2, …, n) listed in descending initial-belief order.
///
/// `rank` is the position the sensed channel's post-NAK posterior takes
/// among all slot-1 values (1 = largest, n = smallest). The corrected base
/// order is (2, 3, …, r, 1, r+1, …, n) — the descending order with the
/// sensed channel demoted to position r.
pub fn transient_slot2_action(
    rank: usize,
    sign: CorrelationSign,
    n: usize,
) -> (Channel, CircularOrder) {
    assert!(n >= 1 && (1..=n).contains(&rank), "rank {rank} out of 1..={n}");
    let action = match sign {
        CorrelationSign::Positive => {
            if rank == 1 {
                Channel::new(1)
            } else {
                Channel::new(2)
            }
        }
        CorrelationSign::Negative => {
            if rank == n {
                Channel::new(1)
            } else {
                Channel::new(n)
            }
        }
    };
    let order = if rank == 1 {
        CircularOrder::identity(n)
    } else {
        let mut channels: Vec<Channel> = (2..=rank).map(Channel::new).collect();
        channels.push(Channel::new(1));
        channels.extend((rank + 1..=n).map(Channel::new));
        CircularOrder(channels)
    };
    (action, order)
}

/// Initialize the round-robin policy from the initial belief vector.
///
/// Fails when the model does not satisfy its ε threshold; callers must
/// then fall back to the generic argmax policy with full belief tracking.
pub fn structural_init(
    omega1: &BeliefVector,
    model: &ChannelModel,
) -> Result<StructuralPolicyState, PolicyError> {
    let eb = model.epsilon_bound();
    if !eb.satisfied {
        return Err(PolicyError::EpsilonBoundNotSatisfied {
            epsilon: model.epsilon(),
            bound: eb.bound,
        });
    }
    let base_order = CircularOrder::descending(omega1);
    let current = base_order.channels()[0];
    let sign = model.correlation_sign();

    let transient = if omega1.entries().iter().any(|&w| model.is_transient(w)) {
        let w1 = omega1.get(current);
        let denominator = model.epsilon() * w1 + (1.0 - w1);
        // denominator = 0 means a first-slot NAK has probability zero and
        // the correction can never fire; η = 1 is its limiting value.
        let eta = if denominator > 0.0 {
            model.epsilon() * w1 / denominator
        } else {
            1.0
        };
        let rest = &base_order.channels()[1..];
        let rank = 1 + rest.iter().filter(|c| omega1.get(**c) > eta).count();
        let (relabeled_action, relabeled_order) =
            transient_slot2_action(rank, sign, omega1.len());
        let relabel = |c: Channel| base_order.channels()[c.index()];
        Some(TransientCorrection {
            rank,
            slot2_action: relabel(relabeled_action),
            corrected_base: CircularOrder(
                relabeled_order.channels().iter().map(|&c| relabel(c)).collect(),
            ),
        })
    } else {
        None
    };

    Ok(StructuralPolicyState {
        base_order,
        current,
        slot: 1,
        sign,
        transient,
    })
}

/// Advance the round-robin policy by one slot. `obs` is the
/// acknowledgement received for [`StructuralPolicyState::current_channel`]
/// in slot [`StructuralPolicyState::slot`]; the returned decision is the
/// action for the following slot.
pub fn structural_step(
    state: &StructuralPolicyState,
    obs: Observation,
) -> (StructuralPolicyState, Channel) {
    let next_slot = state.slot + 1;

    let (base_order, current) = match (&state.transient, obs) {
        (Some(correction), Observation::Nak) if state.slot == 1 => (
            correction.corrected_base.clone(),
            correction.slot2_action,
        ),
        _ => {
            let stay = match state.sign {
                CorrelationSign::Positive => obs.is_ack(),
                CorrelationSign::Negative => !obs.is_ack(),
            };
            let current = if stay {
                state.current
            } else {
                state.effective_order(next_slot).next_after(state.current)
            };
            (state.base_order.clone(), current)
        }
    };

    let next = StructuralPolicyState {
        base_order,
        current,
        slot: next_slot,
        sign: state.sign,
        transient: None,
    };
    let decision = next.current;
    (next, decision)
}

// ── Uniform policy interface ─────────────────────────────────────────────

/// A named policy, as written in CLI arguments and config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    /// Argmax of the tracked belief vector each slot.
    MyopicArgmax,
    /// The round-robin structure; requires the ε threshold.
    Structural,
    /// Uniformly random channel each slot, seeded.
    Random { seed: u64 },
    /// Always the same channel.
    Fixed(Channel),
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, PolicyError> {
        if s == "myopic-argmax" {
            return Ok(PolicySpec::MyopicArgmax);
        }
        if s == "structural" {
            return Ok(PolicySpec::Structural);
        }
        if s == "random" {
            return Ok(PolicySpec::Random { seed: 0 });
        }
        if let Some(seed) = s.strip_prefix("random:") {
            if let Ok(seed) = seed.parse() {
                return Ok(PolicySpec::Random { seed });
            }
        }
        if let Some(k) = s.strip_prefix("fixed:") {
            if let Ok(k) = k.parse::<usize>() {
                if k >= 1 {
                    return Ok(PolicySpec::Fixed(Channel::new(k)));
                }
            }
        }
        Err(PolicyError::UnknownPolicy(s.to_string()))
    }
}

impl std::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicySpec::MyopicArgmax => write!(f, "myopic-argmax"),
            PolicySpec::Structural => write!(f, "structural"),
            PolicySpec::Random { seed: 0 } => write!(f, "random"),
            PolicySpec::Random { seed } => write!(f, "random:{seed}"),
            PolicySpec::Fixed(c) => write!(f, "fixed:{c}"),
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = PolicyError;

    fn try_from(s: String) -> Result<Self, PolicyError> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl PolicySpec {
    /// Instantiate a cursor for one run. `stream` distinguishes parallel
    /// runs of a seeded random policy (e.g. the episode index).
    pub fn cursor(
        &self,
        omega1: &BeliefVector,
        model: &ChannelModel,
        stream: u64,
    ) -> Result<Box<dyn PolicyCursor>, PolicyError> {
        match self {
            PolicySpec::MyopicArgmax => Ok(Box::new(MyopicCursor)),
            PolicySpec::Structural => Ok(Box::new(StructuralCursor {
                state: structural_init(omega1, model)?,
            })),
            PolicySpec::Random { seed } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                rng.set_stream(stream);
                Ok(Box::new(RandomCursor {
                    rng,
                    channels: omega1.len(),
                }))
            }
            PolicySpec::Fixed(channel) => {
                if channel.index() >= omega1.len() {
                    return Err(PolicyError::FixedChannelOutOfRange {
                        channel: channel.number(),
                        channels: omega1.len(),
                    });
                }
                Ok(Box::new(FixedCursor(*channel)))
            }
        }
    }
}

/// A policy mid-run. `decide` returns the action for the current slot;
/// `observe` feeds back the acknowledgement (and the updated belief, for
/// policies that track it) before the next slot.
///
/// Cursors are cloned wherever a run branches over both observations, so
/// state advances functionally along each branch.
pub trait PolicyCursor {
    fn decide(&mut self, omega: &BeliefVector) -> Channel;
    fn observe(&mut self, action: Channel, obs: Observation, next_omega: &BeliefVector);
    fn clone_box(&self) -> Box<dyn PolicyCursor>;
}

impl Clone for Box<dyn PolicyCursor> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

#[derive(Debug, Clone)]
struct MyopicCursor;

impl PolicyCursor for MyopicCursor {
    fn decide(&mut self, omega: &BeliefVector) -> Channel {
        myopic_action(omega)
    }

    fn observe(&mut self, _action: Channel, _obs: Observation, _next_omega: &BeliefVector) {}

    fn clone_box(&self) -> Box<dyn PolicyCursor> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone)]
struct StructuralCursor {
    state: StructuralPolicyState,
}

impl PolicyCursor for StructuralCursor {
    fn decide(&mut self, _omega: &BeliefVector) -> Channel {
        self.state.current_channel()
    }

    fn observe(&mut self, _action: Channel, obs: Observation, _next_omega: &BeliefVector) {
        self.state = structural_step(&self.state, obs).0;
    }

    fn clone_box(&self) -> Box<dyn PolicyCursor> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone)]
struct FixedCursor(Channel);

impl PolicyCursor for FixedCursor {
    fn decide(&mut self, _omega: &BeliefVector) -> Channel {
        self.0
    }

    fn observe(&mut self, _action: Channel, _obs: Observation, _next_omega: &BeliefVector) {}

    fn clone_box(&self) -> Box<dyn PolicyCursor> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone)]
struct RandomCursor {
    rng: ChaCha12Rng,
    channels: usize,
}

impl PolicyCursor for RandomCursor {
    fn decide(&mut self, _omega: &BeliefVector) -> Channel {
        Channel::new(self.rng.random_range(1..=self.channels))
    }

    fn observe(&mut self, _action: Channel, _obs: Observation, _next_omega: &BeliefVector) {}

    fn clone_box(&self) -> Box<dyn PolicyCursor> {
        Box::new(self.clone())
    }
}

// ── Equivalence against exact belief tracking ────────────────────────────

/// One spot where a candidate policy left the argmax set of the exactly
/// tracked beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDivergence {
    /// Observation prefix for slots 1..slot−1 leading to this node.
    pub observations: Vec<Observation>,
    pub slot: usize,
    /// Beliefs at the divergent slot under exact tracking.
    pub beliefs: Vec<f64>,
    pub candidate_action: Channel,
    /// Tie-broken argmax of `beliefs`.
    pub reference_action: Channel,
    pub argmax_set: Vec<Channel>,
}

/// Outcome of walking every observation path of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub horizon: usize,
    /// Observation paths reaching the final slot (zero-probability
    /// branches pruned).
    pub paths: u64,
    /// Per-slot action comparisons, counted once per distinct history.
    pub comparisons: u64,
    /// Comparisons where the candidate equalled the tie-broken argmax.
    pub strict_matches: u64,
    /// Total comparisons where the candidate fell outside the argmax set.
    pub divergence_count: u64,
    /// The first few divergences, in depth-first path order.
    pub divergences: Vec<ActionDivergence>,
}

impl EquivalenceReport {
    /// True when the candidate stayed inside the argmax set everywhere.
    pub fn full_agreement(&self) -> bool {
        self.divergence_count == 0
    }

    pub fn first_divergence(&self) -> Option<&ActionDivergence> {
        self.divergences.first()
    }
}

const MAX_RECORDED_DIVERGENCES: usize = 8;

/// Walk all 2^(T−1) observation sequences, playing `candidate` and
/// tracking beliefs exactly along the candidate's own actions; at every
/// slot the candidate's action is compared with the argmax of the tracked
/// beliefs. Observation branches with zero probability are pruned.
pub fn equivalent_actions(
    candidate: &PolicySpec,
    omega1: &BeliefVector,
    model: &ChannelModel,
    horizon: usize,
) -> Result<EquivalenceReport, PolicyError> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut report = EquivalenceReport {
        horizon,
        paths: 0,
        comparisons: 0,
        strict_matches: 0,
        divergence_count: 0,
        divergences: Vec::new(),
    };
    let cursor = candidate.cursor(omega1, model, 0)?;
    let mut prefix = Vec::with_capacity(horizon);
    walk(
        cursor,
        omega1.clone(),
        1,
        horizon,
        model,
        &mut prefix,
        &mut report,
    )?;
    Ok(report)
}

fn walk(
    mut cursor: Box<dyn PolicyCursor>,
    omega: BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
    prefix: &mut Vec<Observation>,
    report: &mut EquivalenceReport,
) -> Result<(), PolicyError> {
    let action = cursor.decide(&omega);
    report.comparisons += 1;
    let reference = myopic_action(&omega);
    if action == reference {
        report.strict_matches += 1;
    } else {
        let set = argmax_set(&omega);
        if !set.contains(&action) {
            report.divergence_count += 1;
            if report.divergences.len() < MAX_RECORDED_DIVERGENCES {
                report.divergences.push(ActionDivergence {
                    observations: prefix.clone(),
                    slot,
                    beliefs: omega.entries().to_vec(),
                    candidate_action: action,
                    reference_action: reference,
                    argmax_set: set,
                });
            }
        }
    }

    if slot == horizon {
        report.paths += 1;
        return Ok(());
    }

    let p_ack = model.ack_probability(omega.get(action));
    for obs in [Observation::Ack, Observation::Nak] {
        let reachable = match obs {
            Observation::Ack => p_ack > 0.0,
            Observation::Nak => p_ack < 1.0,
        };
        if !reachable {
            continue;
        }
        let next_omega = omega.updated(action, obs, model)?;
        let mut branch = cursor.clone_box();
        branch.observe(action, obs, &next_omega);
        prefix.push(obs);
        walk(branch, next_omega, slot + 1, horizon, model, prefix, report)?;
        prefix.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Observation::{Ack, Nak};

    fn model(p01: f64, p11: f64, epsilon: f64) -> ChannelModel {
        ChannelModel::new(p01, p11, epsilon, 0.05).unwrap()
    }

    fn beliefs(values: &[f64]) -> BeliefVector {
        BeliefVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn myopic_action_examples() {
        assert_eq!(myopic_action(&beliefs(&[0.5, 0.3])).number(), 1);
        assert_eq!(myopic_action(&beliefs(&[0.4, 0.4, 0.1])).number(), 1);
        assert_eq!(myopic_action(&beliefs(&[0.2, 0.7, 0.5])).number(), 2);
    }

    #[test]
    fn circular_order_rotation_invariant() {
        let a = CircularOrder::try_from(vec![1, 2, 3]).unwrap();
        let b = CircularOrder::try_from(vec![3, 1, 2]).unwrap();
        let c = CircularOrder::try_from(vec![2, 1, 3]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn circular_order_reverse_and_next() {
        let order = CircularOrder::try_from(vec![2, 3, 1]).unwrap();
        assert_eq!(order.reversed(), CircularOrder::try_from(vec![1, 3, 2]).unwrap());
        assert_eq!(order.next_after(Channel::new(1)).number(), 2);
        assert_eq!(order.next_after(Channel::new(3)).number(), 1);
    }

    #[test]
    fn circular_order_validates_permutation() {
        assert!(CircularOrder::try_from(vec![1, 1, 2]).is_err());
        assert!(CircularOrder::try_from(vec![1, 4, 2]).is_err());
    }

    #[test]
    fn init_sorts_descending() {
        let m = model(0.2, 0.8, 0.05);
        let state = structural_init(&beliefs(&[0.3, 0.7, 0.5]), &m).unwrap();
        assert_eq!(state.base_order(), &CircularOrder::try_from(vec![2, 3, 1]).unwrap());
        assert_eq!(state.current_channel().number(), 2);
        assert!(state.transient_pending().is_none());
    }

    #[test]
    fn init_stable_under_ties() {
        let m = model(0.2, 0.8, 0.05);
        let state = structural_init(&beliefs(&[0.5, 0.5]), &m).unwrap();
        assert_eq!(state.base_order().channels()[0].number(), 1);
        assert_eq!(state.current_channel().number(), 1);
    }

    #[test]
    fn init_requires_epsilon_bound() {
        let m = model(0.2, 0.8, 0.5); // bound is 0.0625
        let err = structural_init(&beliefs(&[0.5, 0.3]), &m).unwrap_err();
        assert!(matches!(err, PolicyError::EpsilonBoundNotSatisfied { .. }));
    }

    #[test]
    fn init_records_transient_rank() {
        let m = model(0.2, 0.8, 0.05);
        let state = structural_init(&beliefs(&[0.95, 0.5, 0.4]), &m).unwrap();
        let correction = state.transient_pending().expect("transient entry present");
        // η = 0.0475/0.0975 ≈ 0.487: below 0.5, above 0.4 → rank 2.
        assert_eq!(correction.rank, 2);
        assert_eq!(correction.slot2_action.number(), 2);
        assert_eq!(
            correction.corrected_base,
            CircularOrder::try_from(vec![2, 1, 3]).unwrap()
        );
    }

    #[test]
    fn positive_stays_on_ack() {
        let m = model(0.2, 0.8, 0.05);
        let state = structural_init(&beliefs(&[0.7, 0.5, 0.3]), &m).unwrap();
        let (next, action) = structural_step(&state, Ack);
        assert_eq!(action.number(), 1);
        assert_eq!(next.slot(), 2);
    }

    #[test]
    fn positive_advances_cyclically_on_nak() {
        let m = model(0.2, 0.8, 0.05);
        // Descending order (1,2,3); walk NAKs around the cycle.
        let state = structural_init(&beliefs(&[0.7, 0.5, 0.3]), &m).unwrap();
        let (state, a2) = structural_step(&state, Nak);
        let (state, a3) = structural_step(&state, Nak);
        let (_, a4) = structural_step(&state, Nak);
        assert_eq!((a2.number(), a3.number(), a4.number()), (2, 3, 1));
    }

    #[test]
    fn negative_stays_on_nak() {
        let m = model(0.8, 0.2, 0.05);
        let state = structural_init(&beliefs(&[0.7, 0.5, 0.3]), &m).unwrap();
        let (_, action) = structural_step(&state, Nak);
        assert_eq!(action.number(), 1);
    }

    #[test]
    fn negative_advance_uses_the_alternating_order() {
        let m = model(0.8, 0.2, 0.05);
        // In-band start: descending order (1,2,3).
        let state = structural_init(&beliefs(&[0.7, 0.5, 0.3]), &m).unwrap();
        // Slot 1 → 2: the slot-2 order is the reverse (3,2,1); after 1 comes 3.
        let (state, a2) = structural_step(&state, Ack);
        assert_eq!(a2.number(), 3);
        // Slot 2 → 3: odd slot, order (1,2,3); after 3 comes 1.
        let (_, a3) = structural_step(&state, Ack);
        assert_eq!(a3.number(), 1);
    }

    #[test]
    fn negative_advance_from_handmade_state() {
        // Stepping out of slot 2 on an ACK consults the slot-3 order,
        // which equals the base order; after 3 in (1,2,3) comes 1. The
        // exact-tracking walk in tests/structure.rs cross-checks this
        // convention against the argmax oracle.
        let state = StructuralPolicyState {
            base_order: CircularOrder::try_from(vec![1, 2, 3]).unwrap(),
            current: Channel::new(3),
            slot: 2,
            sign: CorrelationSign::Negative,
            transient: None,
        };
        let (_, a3) = structural_step(&state, Ack);
        assert_eq!(a3.number(), 1);
        // From slot 1 the slot-2 order is reversed: after 3 in (3,2,1) comes 2.
        let state = StructuralPolicyState { slot: 1, ..state };
        let (_, a2) = structural_step(&state, Ack);
        assert_eq!(a2.number(), 2);
    }

    #[test]
    fn transient_slot2_relabeled_examples() {
        let (a, order) = transient_slot2_action(1, CorrelationSign::Positive, 4);
        assert_eq!(a.number(), 1);
        assert_eq!(order, CircularOrder::try_from(vec![1, 2, 3, 4]).unwrap());

        let (a, order) = transient_slot2_action(3, CorrelationSign::Positive, 4);
        assert_eq!(a.number(), 2);
        assert_eq!(order, CircularOrder::try_from(vec![2, 3, 1, 4]).unwrap());

        let (a, _) = transient_slot2_action(3, CorrelationSign::Negative, 3);
        assert_eq!(a.number(), 1);
        let (a, _) = transient_slot2_action(2, CorrelationSign::Negative, 3);
        assert_eq!(a.number(), 3);
    }

    #[test]
    fn transient_correction_consumed_after_slot_one() {
        let m = model(0.2, 0.8, 0.05);
        let state = structural_init(&beliefs(&[0.95, 0.5, 0.4]), &m).unwrap();
        // NAK in slot 1 fires the correction: action 2, order (2,1,3).
        let (after_nak, a2) = structural_step(&state, Nak);
        assert_eq!(a2.number(), 2);
        assert_eq!(
            after_nak.base_order(),
            &CircularOrder::try_from(vec![2, 1, 3]).unwrap()
        );
        assert!(after_nak.transient_pending().is_none());

        // An ACK in slot 1 keeps the uncorrected structure.
        let (after_ack, a2) = structural_step(&state, Ack);
        assert_eq!(a2.number(), 1);
        assert_eq!(after_ack.base_order(), state.base_order());
    }

    #[test]
    fn policy_names_round_trip() {
        for name in ["myopic-argmax", "structural", "random", "random:9", "fixed:3"] {
            let spec: PolicySpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
        assert!("whittle".parse::<PolicySpec>().is_err());
        assert!("fixed:0".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn fixed_cursor_validates_channel() {
        let m = model(0.2, 0.8, 0.05);
        let omega = beliefs(&[0.5, 0.3]);
        let err = PolicySpec::Fixed(Channel::new(7))
            .cursor(&omega, &m, 0)
            .err()
            .expect("out-of-range channel must be rejected");
        assert!(matches!(err, PolicyError::FixedChannelOutOfRange { .. }));
    }

    #[test]
    fn single_channel_policies_always_pick_channel_one() {
        let m = model(0.8, 0.2, 0.05);
        let omega = beliefs(&[0.6]);
        let state = structural_init(&omega, &m).unwrap();
        assert_eq!(state.current_channel().number(), 1);
        let (state, a) = structural_step(&state, Ack);
        assert_eq!(a.number(), 1);
        let (_, a) = structural_step(&state, Nak);
        assert_eq!(a.number(), 1);
        assert_eq!(myopic_action(&omega).number(), 1);
    }

    #[test]
    fn equivalence_on_agreeing_instance() {
        let m = model(0.2, 0.8, 0.03);
        let omega = beliefs(&[0.7, 0.5, 0.3]);
        let report = equivalent_actions(&PolicySpec::Structural, &omega, &m, 10).unwrap();
        assert!(report.full_agreement());
        assert_eq!(report.paths, 512);
        assert_eq!(report.strict_matches, report.comparisons);
    }

    #[test]
    fn equivalence_walker_reports_divergences() {
        // The fixed policy cannot track the argmax for long.
        let m = model(0.2, 0.8, 0.03);
        let omega = beliefs(&[0.5, 0.7]);
        let report =
            equivalent_actions(&PolicySpec::Fixed(Channel::new(1)), &omega, &m, 4).unwrap();
        assert!(!report.full_agreement());
        let d = report.first_divergence().unwrap();
        assert_eq!(d.slot, 1);
        assert_eq!(d.candidate_action.number(), 1);
        assert_eq!(d.reference_action.number(), 2);
    }

    #[test]
    fn equivalence_prunes_zero_probability_paths() {
        // ω = 1 with ε = 0: a NAK on the first channel has probability 0,
        // so only the ACK branch is walked while channel 1 is sensed.
        let m = model(0.2, 0.8, 0.0);
        let omega = beliefs(&[1.0, 0.5]);
        let report = equivalent_actions(&PolicySpec::MyopicArgmax, &omega, &m, 3).unwrap();
        assert!(report.paths < 4);
        assert!(report.full_agreement());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn permutation(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
            (1..=max_n).prop_flat_map(|n| Just((1..=n).collect::<Vec<usize>>()).prop_shuffle())
        }

        proptest! {
            #[test]
            fn reverse_is_an_involution(perm in permutation(7)) {
                let order = CircularOrder::try_from(perm).unwrap();
                prop_assert_eq!(order.reversed().reversed(), order);
            }

            #[test]
            fn rotations_compare_equal(perm in permutation(7), shift in 0usize..7) {
                let n = perm.len();
                let mut rotated = perm.clone();
                rotated.rotate_left(shift % n);
                let a = CircularOrder::try_from(perm).unwrap();
                let b = CircularOrder::try_from(rotated).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn next_after_walks_the_whole_cycle(perm in permutation(7)) {
                let order = CircularOrder::try_from(perm).unwrap();
                let mut seen = vec![order.channels()[0]];
                let mut current = order.channels()[0];
                for _ in 1..order.len() {
                    current = order.next_after(current);
                    seen.push(current);
                }
                prop_assert_eq!(order.next_after(current), seen[0]);
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), order.len());
            }

            #[test]
            fn myopic_action_is_in_every_argmax_set(values in proptest::collection::vec(0.0f64..=1.0, 1..6)) {
                let omega = BeliefVector::new(values).unwrap();
                let action = myopic_action(&omega);
                prop_assert!(argmax_set(&omega).contains(&action));
                prop_assert_eq!(omega.get(action), omega.entries().iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            }
        }
    }
}
