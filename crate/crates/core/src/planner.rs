//! Exact finite-horizon planning over the reachable belief tree.
//!
//! The value function satisfies
//!
//! ```text
//! V_T(Ω) = max_a ω_a(1−ε)
//! V_t(Ω) = max_a { ω_a(1−ε)·(1 + V_{t+1}(T(Ω|a,ACK))) + (1−ω_a(1−ε))·V_{t+1}(T(Ω|a,NAK)) }
//! ```
//!
//! where T(Ω|a,k) is one step of the belief filter. [`Solver`] memoizes
//! values on quantized beliefs; [`policy_value`] evaluates a fixed policy
//! by the same weighted recursion; [`brute_force_optimal`] is an
//! independent oracle that enumerates whole observation-contingent policy
//! trees instead of solving the dynamic program. For two channels,
//! [`ConditionalValueTable`] computes the expected remaining reward of the
//! round-robin policy conditioned on the previous action and the previous
//! *true* joint state, which is independent of the belief vector.

use crate::channel::{
    BeliefVector, Channel, ChannelError, ChannelModel, CorrelationSign, Observation,
};
use crate::policy::{myopic_action, PolicyError, PolicySpec};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Branch values within this distance of the maximum count as optimal.
pub const OPTIMAL_ACTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("horizon must be at least 1, got {0}")]
    InvalidHorizon(usize),

    #[error("slot {slot} outside 1..={max}")]
    SlotOutOfRange { slot: usize, max: usize },

    #[error("conditional values are defined for two channels; previous action {0} is invalid")]
    InvalidPreviousAction(usize),

    #[error(
        "brute force enumeration is limited to N=1 (T<=12), N=2 (T<=4) and N=3 (T<=3); \
         got N={n}, T={horizon}"
    )]
    InstanceTooLarge { n: usize, horizon: usize },

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error(transparent)]
    Policy(#[from] PolicyError),
}

// ── Memoization keys ─────────────────────────────────────────────────────

const QUANTIZATION_SCALE: f64 = 1e12;

fn quantize(x: f64) -> i64 {
    (x * QUANTIZATION_SCALE).round() as i64
}

/// Memoization identity for a belief node: the slot plus every entry
/// rounded to 12 decimal digits. Two keys are equal iff the slot matches
/// and all entries agree after quantization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BeliefKey {
    slot: usize,
    quantized: Vec<i64>,
}

impl BeliefKey {
    pub fn new(slot: usize, omega: &BeliefVector) -> Self {
        BeliefKey {
            slot,
            quantized: omega.entries().iter().map(|&w| quantize(w)).collect(),
        }
    }

    /// Key with entries sorted. Channels are stochastically identical, so
    /// the value function is invariant under permutations of the belief
    /// vector; sorting lets permuted nodes share one memo entry.
    fn sorted(slot: usize, omega: &BeliefVector) -> Self {
        let mut quantized: Vec<i64> = omega.entries().iter().map(|&w| quantize(w)).collect();
        quantized.sort_unstable();
        BeliefKey { slot, quantized }
    }
}

// ── Optimal values ───────────────────────────────────────────────────────

/// Assembled value of one action at a belief node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBranch {
    pub action: Channel,
    /// Expected immediate reward ω_a(1−ε); also the ACK probability.
    pub immediate: f64,
    /// Optimal continuation after an ACK (0 at the terminal slot or when
    /// the ACK has probability zero).
    pub ack_value: f64,
    /// Optimal continuation after a NAK.
    pub nak_value: f64,
    /// immediate·(1 + ack_value) + (1 − immediate)·nak_value.
    pub total: f64,
}

/// Value and optimal action set at one belief node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    pub slot: usize,
    /// Maximum expected remaining reward.
    pub value: f64,
    /// Actions whose branch total is within [`OPTIMAL_ACTION_TOLERANCE`]
    /// of the maximum, ascending.
    pub optimal_actions: Vec<Channel>,
    pub branches: Vec<ActionBranch>,
}

/// Memoizing exact solver for one (model, horizon) pair.
pub struct Solver<'a> {
    model: &'a ChannelModel,
    horizon: usize,
    memo: HashMap<BeliefKey, f64>,
    expansions: u64,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a ChannelModel, horizon: usize) -> Result<Self, PlannerError> {
        if horizon < 1 {
            return Err(PlannerError::InvalidHorizon(horizon));
        }
        Ok(Solver {
            model,
            horizon,
            memo: HashMap::new(),
            expansions: 0,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of distinct belief nodes held in the memo table.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Number of interior nodes expanded (memo misses).
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// The maximum expected remaining reward from `slot` under belief
    /// `omega`, with per-action branch values and the optimal action set.
    pub fn optimal_value(
        &mut self,
        omega: &BeliefVector,
        slot: usize,
    ) -> Result<ValueEntry, PlannerError> {
        if slot < 1 || slot > self.horizon {
            return Err(PlannerError::SlotOutOfRange {
                slot,
                max: self.horizon,
            });
        }
        let mut branches = Vec::with_capacity(omega.len());
        for (action, _) in omega.channels() {
            branches.push(self.branch(omega, slot, action)?);
        }
        let value = branches
            .iter()
            .map(|b| b.total)
            .fold(f64::NEG_INFINITY, f64::max);
        let optimal_actions = branches
            .iter()
            .filter(|b| b.total >= value - OPTIMAL_ACTION_TOLERANCE)
            .map(|b| b.action)
            .collect();
        Ok(ValueEntry {
            slot,
            value,
            optimal_actions,
            branches,
        })
    }

    fn branch(
        &mut self,
        omega: &BeliefVector,
        slot: usize,
        action: Channel,
    ) -> Result<ActionBranch, PlannerError> {
        let immediate = self.model.ack_probability(omega.get(action));
        let (ack_value, nak_value) = if slot == self.horizon {
            (0.0, 0.0)
        } else {
            // Zero-probability observations contribute weight 0 and are
            // never expanded.
            let ack_value = if immediate > 0.0 {
                let next = omega.updated(action, Observation::Ack, self.model)?;
                self.value(&next, slot + 1)?
            } else {
                0.0
            };
            let nak_value = if immediate < 1.0 {
                let next = omega.updated(action, Observation::Nak, self.model)?;
                self.value(&next, slot + 1)?
            } else {
                0.0
            };
            (ack_value, nak_value)
        };
        let total = immediate * (1.0 + ack_value) + (1.0 - immediate) * nak_value;
        Ok(ActionBranch {
            action,
            immediate,
            ack_value,
            nak_value,
            total,
        })
    }

    fn value(&mut self, omega: &BeliefVector, slot: usize) -> Result<f64, PlannerError> {
        if slot == self.horizon {
            let best = omega
                .entries()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(self.model.ack_probability(best));
        }
        let key = BeliefKey::sorted(slot, omega);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.expansions += 1;
        let mut best = f64::NEG_INFINITY;
        for (action, _) in omega.channels() {
            let branch = self.branch(omega, slot, action)?;
            best = best.max(branch.total);
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

// ── Policy evaluation ────────────────────────────────────────────────────

/// Expected total reward of a policy together with the number of belief
/// nodes visited by the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub value: f64,
    pub nodes: u64,
}

/// Expected total reward of `policy` over slots 1..=horizon starting from
/// `omega`, by the observation-weighted recursion with the action fixed by
/// the policy at each node.
pub fn policy_value(
    policy: &PolicySpec,
    omega: &BeliefVector,
    horizon: usize,
    model: &ChannelModel,
) -> Result<PolicyEvaluation, PlannerError> {
    policy_value_from(policy, omega, 1, horizon, model)
}

/// As [`policy_value`], but starting at an arbitrary slot.
pub fn policy_value_from(
    policy: &PolicySpec,
    omega: &BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
) -> Result<PolicyEvaluation, PlannerError> {
    if horizon < 1 {
        return Err(PlannerError::InvalidHorizon(horizon));
    }
    if slot < 1 || slot > horizon {
        return Err(PlannerError::SlotOutOfRange { slot, max: horizon });
    }
    let cursor = policy.cursor(omega, model, 0)?;
    let mut nodes = 0;
    let value = eval_cursor(cursor, omega, slot, horizon, model, &mut nodes)?;
    Ok(PolicyEvaluation { value, nodes })
}

fn eval_cursor(
    mut cursor: Box<dyn crate::policy::PolicyCursor>,
    omega: &BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
    nodes: &mut u64,
) -> Result<f64, PlannerError> {
    *nodes += 1;
    let action = cursor.decide(omega);
    let p_ack = model.ack_probability(omega.get(action));
    if slot == horizon {
        return Ok(p_ack);
    }
    let mut value = p_ack;
    if p_ack > 0.0 {
        let next = omega.updated(action, Observation::Ack, model)?;
        let mut branch = cursor.clone_box();
        branch.observe(action, Observation::Ack, &next);
        value += p_ack * eval_cursor(branch, &next, slot + 1, horizon, model, nodes)?;
    }
    if p_ack < 1.0 {
        let next = omega.updated(action, Observation::Nak, model)?;
        let mut branch = cursor;
        branch.observe(action, Observation::Nak, &next);
        value += (1.0 - p_ack) * eval_cursor(branch, &next, slot + 1, horizon, model, nodes)?;
    }
    Ok(value)
}

// ── Myopic action gaps ───────────────────────────────────────────────────

/// Loss of playing `action` now (and the myopic policy afterwards)
/// relative to playing myopically throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionGap {
    pub action: Channel,
    /// Value of playing `action` now, then the myopic policy.
    pub action_value: f64,
    /// Myopic value minus `action_value`; exactly 0 for the myopic action.
    pub gap: f64,
}

/// Gap of every action at (slot, Ω): the myopic policy's value minus the
/// value of deviating to that action for one slot.
pub fn myopic_action_gap(
    omega: &BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
) -> Result<Vec<ActionGap>, PlannerError> {
    if horizon < 1 {
        return Err(PlannerError::InvalidHorizon(horizon));
    }
    if slot < 1 || slot > horizon {
        return Err(PlannerError::SlotOutOfRange { slot, max: horizon });
    }
    let myopic = myopic_action(omega);
    let mut gaps = Vec::with_capacity(omega.len());
    let mut myopic_value = 0.0;
    for (action, _) in omega.channels() {
        let action_value = deviation_rollout(action, omega, slot, horizon, model)?;
        if action == myopic {
            myopic_value = action_value;
        }
        gaps.push(ActionGap {
            action,
            action_value,
            gap: 0.0,
        });
    }
    for g in &mut gaps {
        g.gap = myopic_value - g.action_value;
    }
    Ok(gaps)
}

/// Value of playing `action` at (slot, Ω) and the myopic policy in every
/// later slot.
fn deviation_rollout(
    action: Channel,
    omega: &BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
) -> Result<f64, PlannerError> {
    let p_ack = model.ack_probability(omega.get(action));
    if slot == horizon {
        return Ok(p_ack);
    }
    let mut value = p_ack;
    if p_ack > 0.0 {
        let next = omega.updated(action, Observation::Ack, model)?;
        value += p_ack * deviation_rollout(myopic_action(&next), &next, slot + 1, horizon, model)?;
    }
    if p_ack < 1.0 {
        let next = omega.updated(action, Observation::Nak, model)?;
        value += (1.0 - p_ack)
            * deviation_rollout(myopic_action(&next), &next, slot + 1, horizon, model)?;
    }
    Ok(value)
}

// ── Conditional values for two channels ──────────────────────────────────

/// Expected remaining reward of the round-robin policy from `slot`
/// onwards, conditioned on the previous slot's action and true joint
/// state. Independent of the belief vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalValue {
    pub slot: usize,
    pub prev_action: Channel,
    /// True states \[s1, s2\] in the previous slot (true = good).
    pub prev_state: [bool; 2],
    pub value: f64,
}

/// All conditional values for slots 1..=horizon+1, two previous actions
/// and four previous joint states.
pub struct ConditionalValueTable {
    horizon: usize,
    /// values\[slot−1\]\[prev_action−1\]\[2·s1 + s2\]
    values: Vec<[[f64; 4]; 2]>,
}

impl ConditionalValueTable {
    #[allow(clippy::needless_range_loop)] // loops decode joint-state bit codes
    pub fn new(model: &ChannelModel, horizon: usize) -> Result<Self, PlannerError> {
        if horizon < 1 {
            return Err(PlannerError::InvalidHorizon(horizon));
        }
        let epsilon = model.epsilon();
        let sign = model.correlation_sign();
        // P(next state good | current state)
        let to_good = |good: bool| if good { model.p11() } else { model.p01() };

        let mut values = vec![[[0.0; 4]; 2]; horizon + 1];
        for slot in (1..=horizon).rev() {
            for prev_action in [1usize, 2] {
                for state_index in 0..4usize {
                    let s = [state_index & 2 != 0, state_index & 1 != 0];
                    let sensed_good = s[prev_action - 1];
                    // A bad channel can never produce an ACK.
                    let branches: &[(Observation, f64)] = if sensed_good {
                        &[
                            (Observation::Ack, 1.0 - epsilon),
                            (Observation::Nak, epsilon),
                        ]
                    } else {
                        &[(Observation::Nak, 1.0)]
                    };
                    let mut value = 0.0;
                    for &(obs, p_obs) in branches {
                        if p_obs <= 0.0 {
                            continue;
                        }
                        let stay = match sign {
                            CorrelationSign::Positive => obs.is_ack(),
                            CorrelationSign::Negative => !obs.is_ack(),
                        };
                        let action = if stay { prev_action } else { 3 - prev_action };
                        let mut continuation = 0.0;
                        for next_index in 0..4usize {
                            let next = [next_index & 2 != 0, next_index & 1 != 0];
                            let p_next = (if next[0] {
                                to_good(s[0])
                            } else {
                                1.0 - to_good(s[0])
                            }) * (if next[1] {
                                to_good(s[1])
                            } else {
                                1.0 - to_good(s[1])
                            });
                            let reward = if next[action - 1] { 1.0 - epsilon } else { 0.0 };
                            continuation +=
                                p_next * (reward + values[slot][action - 1][next_index]);
                        }
                        value += p_obs * continuation;
                    }
                    values[slot - 1][prev_action - 1][state_index] = value;
                }
            }
        }
        Ok(ConditionalValueTable { horizon, values })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Value at `slot` ∈ 1..=horizon+1 (zero at horizon+1).
    pub fn get(
        &self,
        slot: usize,
        prev_action: Channel,
        prev_state: [bool; 2],
    ) -> Result<ConditionalValue, PlannerError> {
        if prev_action.number() > 2 {
            return Err(PlannerError::InvalidPreviousAction(prev_action.number()));
        }
        if slot < 1 || slot > self.horizon + 1 {
            return Err(PlannerError::SlotOutOfRange {
                slot,
                max: self.horizon + 1,
            });
        }
        let state_index = (prev_state[0] as usize) * 2 + prev_state[1] as usize;
        Ok(ConditionalValue {
            slot,
            prev_action,
            prev_state,
            value: self.values[slot - 1][prev_action.index()][state_index],
        })
    }
}

/// One conditional value, computing the table on the fly. Experiments that
/// sweep all slots should build a [`ConditionalValueTable`] once instead.
pub fn conditional_myopic_value(
    prev_action: Channel,
    prev_state: [bool; 2],
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
) -> Result<ConditionalValue, PlannerError> {
    ConditionalValueTable::new(model, horizon)?.get(slot, prev_action, prev_state)
}

// ── Brute-force oracle ───────────────────────────────────────────────────

/// Maximum expected reward over *every* deterministic
/// observation-history-contingent policy tree, evaluated exactly one tree
/// at a time. Exponential by construction; serves as an independent check
/// on [`Solver::optimal_value`].
pub fn brute_force_optimal(
    omega: &BeliefVector,
    horizon: usize,
    model: &ChannelModel,
) -> Result<f64, PlannerError> {
    if horizon < 1 {
        return Err(PlannerError::InvalidHorizon(horizon));
    }
    let n = omega.len();
    let enumerable = match n {
        1 => horizon <= 12,
        2 => horizon <= 4,
        3 => horizon <= 3,
        _ => false,
    };
    if !enumerable {
        return Err(PlannerError::InstanceTooLarge { n, horizon });
    }

    // A policy tree assigns an action to each node of the complete binary
    // observation-history tree (heap layout: ACK child 2i+1, NAK child
    // 2i+2); trees are enumerated as base-N integers over the node list.
    let node_count = (1usize << horizon) - 1;
    let mut powers = Vec::with_capacity(node_count);
    let mut p = 1u64;
    for _ in 0..node_count {
        powers.push(p);
        p = p.saturating_mul(n as u64);
    }
    let tree_count = if n == 1 {
        1
    } else {
        (n as u64).pow(node_count as u32)
    };

    let mut best = f64::NEG_INFINITY;
    for tree in 0..tree_count {
        let value = eval_tree(tree, &powers, n, 0, omega, 1, horizon, model)?;
        best = best.max(value);
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn eval_tree(
    tree: u64,
    powers: &[u64],
    n: usize,
    node: usize,
    omega: &BeliefVector,
    slot: usize,
    horizon: usize,
    model: &ChannelModel,
) -> Result<f64, PlannerError> {
    let action = Channel::from_index(((tree / powers[node]) % n as u64) as usize);
    let p_ack = model.ack_probability(omega.get(action));
    if slot == horizon {
        return Ok(p_ack);
    }
    let mut value = p_ack;
    if p_ack > 0.0 {
        let next = omega.updated(action, Observation::Ack, model)?;
        value += p_ack * eval_tree(tree, powers, n, 2 * node + 1, &next, slot + 1, horizon, model)?;
    }
    if p_ack < 1.0 {
        let next = omega.updated(action, Observation::Nak, model)?;
        value += (1.0 - p_ack)
            * eval_tree(tree, powers, n, 2 * node + 2, &next, slot + 1, horizon, model)?;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p01: f64, p11: f64, epsilon: f64) -> ChannelModel {
        ChannelModel::new(p01, p11, epsilon, 0.05).unwrap()
    }

    fn beliefs(values: &[f64]) -> BeliefVector {
        BeliefVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn terminal_slot_is_single_slot_argmax() {
        let m = model(0.2, 0.8, 0.1);
        let mut solver = Solver::new(&m, 1).unwrap();
        let entry = solver.optimal_value(&beliefs(&[0.5, 0.3]), 1).unwrap();
        assert!((entry.value - 0.45).abs() < 1e-15);
        assert_eq!(entry.optimal_actions, vec![Channel::new(1)]);
    }

    #[test]
    fn forced_action_matches_policy_rollout() {
        let m = model(0.3, 0.7, 0.1);
        let omega = beliefs(&[0.6]);
        let mut solver = Solver::new(&m, 6).unwrap();
        let optimal = solver.optimal_value(&omega, 1).unwrap().value;
        let rollout = policy_value(&PolicySpec::Fixed(Channel::new(1)), &omega, 6, &m)
            .unwrap()
            .value;
        assert!((optimal - rollout).abs() < 1e-12);
    }

    #[test]
    fn two_slot_value_matches_brute_force() {
        let m = ChannelModel::new(0.2, 0.8, 0.05, 0.0).unwrap();
        let omega = beliefs(&[0.8, 0.2]);
        let mut solver = Solver::new(&m, 2).unwrap();
        let dp = solver.optimal_value(&omega, 1).unwrap().value;
        let oracle = brute_force_optimal(&omega, 2, &m).unwrap();
        assert!((dp - oracle).abs() < 1e-12);
    }

    #[test]
    fn brute_force_single_slot() {
        let m = model(0.2, 0.8, 0.1);
        let omega = beliefs(&[0.5, 0.3]);
        assert!((brute_force_optimal(&omega, 1, &m).unwrap() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let m = model(0.2, 0.8, 0.1);
        assert_eq!(
            brute_force_optimal(&beliefs(&[0.5, 0.3]), 5, &m),
            Err(PlannerError::InstanceTooLarge { n: 2, horizon: 5 })
        );
        assert!(brute_force_optimal(&beliefs(&[0.5, 0.3, 0.1, 0.2]), 2, &m).is_err());
    }

    #[test]
    fn bellman_consistency() {
        let m = model(0.3, 0.7, 0.04);
        let mut solver = Solver::new(&m, 6).unwrap();
        let entry = solver
            .optimal_value(&beliefs(&[0.6, 0.4, 0.55]), 1)
            .unwrap();
        let max = entry
            .branches
            .iter()
            .map(|b| b.total)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(entry.value, max);
        for b in &entry.branches {
            let assembled = b.immediate * (1.0 + b.ack_value) + (1.0 - b.immediate) * b.nak_value;
            assert_eq!(b.total, assembled);
        }
    }

    #[test]
    fn policy_dominance() {
        let m = model(0.25, 0.75, 0.05);
        let omega = beliefs(&[0.6, 0.4]);
        let mut solver = Solver::new(&m, 8).unwrap();
        let optimal = solver.optimal_value(&omega, 1).unwrap().value;
        for policy in [
            PolicySpec::MyopicArgmax,
            PolicySpec::Random { seed: 11 },
            PolicySpec::Fixed(Channel::new(2)),
        ] {
            let v = policy_value(&policy, &omega, 8, &m).unwrap().value;
            assert!(
                v <= optimal + 1e-12,
                "{policy} valued {v} above optimal {optimal}"
            );
        }
    }

    #[test]
    fn value_monotone_in_horizon() {
        let m = model(0.3, 0.6, 0.08);
        let omega = beliefs(&[0.5, 0.35]);
        let mut previous = 0.0;
        for horizon in 1..=9 {
            let v = Solver::new(&m, horizon)
                .unwrap()
                .optimal_value(&omega, 1)
                .unwrap()
                .value;
            assert!(v >= previous - 1e-12);
            previous = v;
        }
    }

    #[test]
    fn memoization_does_not_change_values() {
        // Unmemoized reference recursion, small instance.
        fn reference(omega: &BeliefVector, slot: usize, horizon: usize, m: &ChannelModel) -> f64 {
            let mut best = f64::NEG_INFINITY;
            for (action, _) in omega.channels() {
                let p = m.ack_probability(omega.get(action));
                let mut total = p;
                if slot < horizon {
                    if p > 0.0 {
                        let next = omega.updated(action, Observation::Ack, m).unwrap();
                        total += p * reference(&next, slot + 1, horizon, m);
                    }
                    if p < 1.0 {
                        let next = omega.updated(action, Observation::Nak, m).unwrap();
                        total += (1.0 - p) * reference(&next, slot + 1, horizon, m);
                    }
                }
                best = best.max(total);
            }
            best
        }
        let m = model(0.35, 0.65, 0.07);
        let omega = beliefs(&[0.6, 0.45, 0.5]);
        let mut solver = Solver::new(&m, 5).unwrap();
        let memoized = solver.optimal_value(&omega, 1).unwrap().value;
        assert!((memoized - reference(&omega, 1, 5, &m)).abs() < 1e-11);
        assert!(solver.memo_len() > 0);
    }

    #[test]
    fn gap_of_myopic_action_is_zero() {
        let m = model(0.2, 0.8, 0.05);
        let omega = beliefs(&[0.7, 0.4]);
        let gaps = myopic_action_gap(&omega, 1, 6, &m).unwrap();
        assert_eq!(gaps[0].gap, 0.0);
        assert!(gaps[1].gap >= -1e-12);
    }

    #[test]
    fn conditional_value_zero_after_horizon() {
        let m = model(0.8, 0.2, 0.05);
        let table = ConditionalValueTable::new(&m, 7).unwrap();
        for state in [[false, false], [false, true], [true, false], [true, true]] {
            let v = table.get(8, Channel::new(1), state).unwrap();
            assert_eq!(v.value, 0.0);
        }
    }

    #[test]
    fn conditional_value_state_swap_symmetry() {
        for m in [model(0.8, 0.2, 0.05), model(0.2, 0.8, 0.05)] {
            let table = ConditionalValueTable::new(&m, 9).unwrap();
            for slot in 1..=10 {
                for s1 in [false, true] {
                    for s2 in [false, true] {
                        let a = table.get(slot, Channel::new(1), [s1, s2]).unwrap().value;
                        let b = table.get(slot, Channel::new(2), [s2, s1]).unwrap().value;
                        assert!(
                            (a - b).abs() < 1e-12,
                            "swap symmetry broken at slot {slot} [{s1},{s2}]: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conditional_difference_bounded_by_ack_reward() {
        for m in [model(0.8, 0.2, 0.05), model(0.2, 0.8, 0.05)] {
            let table = ConditionalValueTable::new(&m, 12).unwrap();
            for slot in 1..=13 {
                for action in [Channel::new(1), Channel::new(2)] {
                    let hi = table.get(slot, action, [true, false]).unwrap().value;
                    let lo = table.get(slot, action, [false, true]).unwrap().value;
                    assert!((hi - lo).abs() <= (1.0 - m.epsilon()) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn gap_matches_conditional_value_identity() {
        // For two channels with ω1 > ω2, the loss of deviating to channel
        // 2 factors as (ω1−ω2)·(1−ε + V(1|[1,0]) − V(1|[0,1])) with the
        // conditional values taken at the next slot.
        for m in [model(0.2, 0.8, 0.05), model(0.8, 0.2, 0.05)] {
            let horizon = 8;
            let table = ConditionalValueTable::new(&m, horizon).unwrap();
            let (lo, hi) = m.belief_band();
            let omega = beliefs(&[lo + 0.8 * (hi - lo), lo + 0.3 * (hi - lo)]);
            for slot in 1..=horizon {
                let gaps = myopic_action_gap(&omega, slot, horizon, &m).unwrap();
                let expected = (omega.entries()[0] - omega.entries()[1])
                    * (1.0 - m.epsilon()
                        + table
                            .get(slot + 1, Channel::new(1), [true, false])
                            .unwrap()
                            .value
                        - table
                            .get(slot + 1, Channel::new(1), [false, true])
                            .unwrap()
                            .value);
                assert!(
                    (gaps[1].gap - expected).abs() < 1e-9,
                    "slot {slot}: gap {} vs identity {expected}",
                    gaps[1].gap
                );
            }
        }
    }

    #[test]
    fn solver_rejects_bad_slots() {
        let m = model(0.2, 0.8, 0.05);
        assert!(Solver::new(&m, 0).is_err());
        let mut solver = Solver::new(&m, 3).unwrap();
        assert!(solver.optimal_value(&beliefs(&[0.5]), 4).is_err());
    }
}
