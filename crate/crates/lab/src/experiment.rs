//! The named experiments.
//!
//! Each experiment draws instances from an [`InstanceSpec`](crate::instance::InstanceSpec),
//! evaluates a claim about the myopic policy on every instance, and
//! assembles a deterministic [`ExperimentReport`]:
//!
//! * `structure` — the round-robin policy equals the tracked argmax on
//!   every observation path (divergences attributable to the documented
//!   second-slot ordering ambiguity for negatively correlated transient
//!   starts are reported as witnesses instead of failing);
//! * `optimality` — for two channels the myopic policy attains the
//!   optimal value and stays inside the optimal action set everywhere;
//! * `conjecture` — the same check for three to five channels;
//! * `lemma4` — conditional-value swap symmetry and the (1−ε) bound on
//!   the state-swap difference;
//! * `montecarlo` — simulated mean rewards match planner values within
//!   three standard errors, and the round-robin and argmax policies
//!   produce identical traces seed for seed.

use crate::instance::{generate, Instance};
use crate::report::{
    compare_reports, ExperimentConfig, ExperimentReport, InstanceReport, ReplayOutcome, Verdict,
    Witness,
};
use crate::LabError;
use osa_core::planner::{policy_value, policy_value_from, ConditionalValueTable, Solver};
use osa_core::policy::{equivalent_actions, myopic_action, PolicySpec};
use osa_core::sim::{estimate_throughput, run_episode, InitialBelief, SimConfig};
use osa_core::{Channel, CorrelationSign, Observation};
use std::time::Instant;

/// Optimality comparisons use this absolute tolerance on values.
pub const VALUE_TOLERANCE: f64 = 1e-9;

type InstanceOutcome = (Verdict, String, Vec<Witness>);
type InstanceCheck = Box<dyn Fn(&Instance) -> Result<InstanceOutcome, LabError>>;
/// Symmetry and bound checks on conditional values use this tolerance.
pub const CONDITIONAL_TOLERANCE: f64 = 1e-12;

/// Run the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    let start = Instant::now();
    let spec = &config.spec;
    let check: InstanceCheck = match config.experiment.as_str() {
            "structure" => Box::new(structure_check),
            "optimality" => {
                require_channels(config, |n| n == 2, "N=2")?;
                Box::new(optimality_check)
            }
            "conjecture" => {
                require_channels(config, |n| (3..=5).contains(&n), "N in {3,4,5}")?;
                Box::new(optimality_check)
            }
            "lemma4" => {
                require_channels(config, |n| n == 2, "N=2")?;
                Box::new(conditional_bound_check)
            }
            "montecarlo" => {
                let episodes = config.episodes;
                Box::new(move |inst| montecarlo_check(inst, episodes))
            }
            other => return Err(LabError::UnknownExperiment(other.to_string())),
        };

    let mut instances = Vec::with_capacity(config.instances);
    for index in 0..config.instances {
        let report = match generate(spec, index) {
            Err(e) => InstanceReport::generation_failure(index, spec, e.to_string()),
            Ok(inst) => match check(&inst) {
                Ok((verdict, detail, witnesses)) => InstanceReport::new(
                    index,
                    inst.channels,
                    inst.horizon,
                    inst.model,
                    &inst.omega1,
                    verdict,
                    detail,
                    witnesses,
                ),
                Err(e) => InstanceReport::new(
                    index,
                    inst.channels,
                    inst.horizon,
                    inst.model,
                    &inst.omega1,
                    Verdict::Fail,
                    format!("evaluation error: {e}"),
                    Vec::new(),
                ),
            },
        };
        instances.push(report);
    }
    Ok(ExperimentReport::assemble(
        config.clone(),
        instances,
        start.elapsed(),
    ))
}

/// Re-run a stored report's configuration and compare the outcome.
pub fn replay(stored: &ExperimentReport) -> Result<ReplayOutcome, LabError> {
    let fresh = run(&stored.config)?;
    Ok(compare_reports(stored, &fresh))
}

fn require_channels(
    config: &ExperimentConfig,
    ok: impl Fn(usize) -> bool,
    requirement: &'static str,
) -> Result<(), LabError> {
    if ok(config.spec.channels) {
        Ok(())
    } else {
        Err(LabError::ChannelCountUnsupported {
            experiment: config.experiment.clone(),
            requirement,
            channels: config.spec.channels,
        })
    }
}

fn skip_unsatisfied(inst: &Instance) -> Option<InstanceOutcome> {
    let eb = inst.model.epsilon_bound();
    if eb.satisfied {
        None
    } else {
        Some((
            Verdict::Skipped,
            format!(
                "epsilon {:.6} does not satisfy the structural bound {:.6}",
                inst.model.epsilon(),
                eb.bound
            ),
            Vec::new(),
        ))
    }
}

fn observation_strings(observations: &[Observation]) -> Vec<String> {
    observations.iter().map(|o| o.to_string()).collect()
}

// ── structure ────────────────────────────────────────────────────────────

fn structure_check(inst: &Instance) -> Result<InstanceOutcome, LabError> {
    if let Some(skip) = skip_unsatisfied(inst) {
        return Ok(skip);
    }
    let report = equivalent_actions(
        &PolicySpec::Structural,
        &inst.omega1,
        &inst.model,
        inst.horizon,
    )?;
    let transient = !inst.omega1.all_in_band(&inst.model);
    let negative = inst.model.correlation_sign() == CorrelationSign::Negative;

    let mut witnesses = Vec::new();
    let mut hard_failures = 0usize;
    for d in &report.divergences {
        let lenient = transient && negative && d.slot == 2;
        if !lenient {
            hard_failures += 1;
        }
        witnesses.push(Witness {
            kind: if lenient {
                "slot2-order-ambiguity".into()
            } else {
                "action-divergence".into()
            },
            slot: Some(d.slot),
            observations: Some(observation_strings(&d.observations)),
            beliefs: Some(d.beliefs.clone()),
            actions: Some(vec![
                d.candidate_action.number(),
                d.reference_action.number(),
            ]),
            values: None,
            note: format!(
                "round-robin chose {} but argmax set is {:?}",
                d.candidate_action,
                d.argmax_set.iter().map(|c| c.number()).collect::<Vec<_>>()
            ),
        });
    }
    // Divergences beyond the recording cap cannot be classified; treat
    // them as hard failures.
    let unrecorded = report.divergence_count as usize - report.divergences.len();
    hard_failures += unrecorded;

    let verdict = if hard_failures == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let detail = format!(
        "paths={}, comparisons={}, strict_matches={}, divergences={}",
        report.paths, report.comparisons, report.strict_matches, report.divergence_count
    );
    Ok((verdict, detail, witnesses))
}

// ── optimality / conjecture ──────────────────────────────────────────────

fn optimality_check(inst: &Instance) -> Result<InstanceOutcome, LabError> {
    if let Some(skip) = skip_unsatisfied(inst) {
        return Ok(skip);
    }
    let mut solver = Solver::new(&inst.model, inst.horizon)?;
    let root = solver.optimal_value(&inst.omega1, 1)?;
    let myopic = policy_value(&PolicySpec::MyopicArgmax, &inst.omega1, inst.horizon, &inst.model)?;
    let transient = !inst.omega1.all_in_band(&inst.model);

    let mut witnesses = Vec::new();

    // Value agreement. A transient start may cost value in the first slot
    // only, so it is checked from every reachable second-slot node
    // instead of at the root.
    if transient {
        if inst.horizon >= 2 {
            let first = myopic_action(&inst.omega1);
            let p_ack = inst.model.ack_probability(inst.omega1.get(first));
            for obs in [Observation::Ack, Observation::Nak] {
                let reachable = if obs.is_ack() { p_ack > 0.0 } else { p_ack < 1.0 };
                if !reachable {
                    continue;
                }
                let omega2 = inst.omega1.updated(first, obs, &inst.model)?;
                let v2 = policy_value_from(
                    &PolicySpec::MyopicArgmax,
                    &omega2,
                    2,
                    inst.horizon,
                    &inst.model,
                )?;
                let o2 = solver.optimal_value(&omega2, 2)?;
                if (v2.value - o2.value).abs() > VALUE_TOLERANCE {
                    witnesses.push(Witness {
                        kind: "value-gap".into(),
                        slot: Some(2),
                        observations: Some(vec![obs.to_string()]),
                        beliefs: Some(omega2.entries().to_vec()),
                        actions: None,
                        values: Some(vec![v2.value, o2.value]),
                        note: format!(
                            "myopic continuation {} vs optimal {} after slot-1 {obs}",
                            v2.value, o2.value
                        ),
                    });
                }
            }
        }
    } else if (myopic.value - root.value).abs() > VALUE_TOLERANCE {
        witnesses.push(Witness {
            kind: "value-gap".into(),
            slot: Some(1),
            observations: None,
            beliefs: Some(inst.omega1.entries().to_vec()),
            actions: None,
            values: Some(vec![myopic.value, root.value]),
            note: format!("myopic value {} vs optimal {}", myopic.value, root.value),
        });
    }

    // Myopic action inside the optimal action set at every belief node
    // reachable under myopic play (slot 1 exempt for transient starts).
    let mut stack = vec![(inst.omega1.clone(), 1usize, Vec::<Observation>::new())];
    while let Some((omega, slot, prefix)) = stack.pop() {
        let action = myopic_action(&omega);
        if !(transient && slot == 1) {
            let entry = solver.optimal_value(&omega, slot)?;
            if !entry.optimal_actions.contains(&action) {
                witnesses.push(Witness {
                    kind: "action-not-optimal".into(),
                    slot: Some(slot),
                    observations: Some(observation_strings(&prefix)),
                    beliefs: Some(omega.entries().to_vec()),
                    actions: Some(
                        std::iter::once(action.number())
                            .chain(entry.optimal_actions.iter().map(|c| c.number()))
                            .collect(),
                    ),
                    values: Some(entry.branches.iter().map(|b| b.total).collect()),
                    note: format!(
                        "myopic action {} outside optimal set {:?} at slot {slot}",
                        action,
                        entry.optimal_actions.iter().map(|c| c.number()).collect::<Vec<_>>()
                    ),
                });
                if witnesses.len() >= 8 {
                    break;
                }
            }
        }
        if slot < inst.horizon {
            let p_ack = inst.model.ack_probability(omega.get(action));
            for obs in [Observation::Ack, Observation::Nak] {
                let reachable = if obs.is_ack() { p_ack > 0.0 } else { p_ack < 1.0 };
                if !reachable {
                    continue;
                }
                let mut next_prefix = prefix.clone();
                next_prefix.push(obs);
                stack.push((omega.updated(action, obs, &inst.model)?, slot + 1, next_prefix));
            }
        }
    }

    let verdict = if witnesses.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let detail = format!(
        "myopic={:.12}, optimal={:.12}, memo_nodes={}{}",
        myopic.value,
        root.value,
        solver.memo_len(),
        if transient { ", transient-start" } else { "" }
    );
    Ok((verdict, detail, witnesses))
}

// ── lemma4 (conditional-value bound and symmetry) ────────────────────────

fn conditional_bound_check(inst: &Instance) -> Result<InstanceOutcome, LabError> {
    if let Some(skip) = skip_unsatisfied(inst) {
        return Ok(skip);
    }
    let table = ConditionalValueTable::new(&inst.model, inst.horizon)?;
    let limit = (1.0 - inst.model.epsilon()) + CONDITIONAL_TOLERANCE;
    let mut witnesses = Vec::new();
    let mut max_difference = 0.0f64;
    let mut max_asymmetry = 0.0f64;

    for slot in 1..=inst.horizon + 1 {
        for action in [Channel::new(1), Channel::new(2)] {
            let other = Channel::new(3 - action.number());
            for s1 in [false, true] {
                for s2 in [false, true] {
                    let direct = table.get(slot, action, [s1, s2])?.value;
                    let swapped = table.get(slot, other, [s2, s1])?.value;
                    let asymmetry = (direct - swapped).abs();
                    max_asymmetry = max_asymmetry.max(asymmetry);
                    if asymmetry > CONDITIONAL_TOLERANCE {
                        witnesses.push(Witness {
                            kind: "swap-asymmetry".into(),
                            slot: Some(slot),
                            observations: None,
                            beliefs: None,
                            actions: Some(vec![action.number(), other.number()]),
                            values: Some(vec![direct, swapped]),
                            note: format!(
                                "V(slot {slot}, a={action}, [{s1},{s2}]) != swapped value"
                            ),
                        });
                    }
                }
            }
            let hi = table.get(slot, action, [true, false])?.value;
            let lo = table.get(slot, action, [false, true])?.value;
            let difference = (hi - lo).abs();
            max_difference = max_difference.max(difference);
            if difference > limit {
                witnesses.push(Witness {
                    kind: "difference-bound".into(),
                    slot: Some(slot),
                    observations: None,
                    beliefs: None,
                    actions: Some(vec![action.number()]),
                    values: Some(vec![hi, lo]),
                    note: format!(
                        "|V[1,0] − V[0,1]| = {difference} exceeds 1−ε = {}",
                        1.0 - inst.model.epsilon()
                    ),
                });
            }
        }
    }

    let verdict = if witnesses.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let detail = format!(
        "max_state_difference={max_difference:.12}, max_swap_asymmetry={max_asymmetry:.3e}, limit={:.12}",
        1.0 - inst.model.epsilon()
    );
    Ok((verdict, detail, witnesses))
}

// ── montecarlo ───────────────────────────────────────────────────────────

fn montecarlo_check(inst: &Instance, episodes: u64) -> Result<InstanceOutcome, LabError> {
    let episodes = if episodes == 0 { 100_000 } else { episodes };
    let mut witnesses = Vec::new();
    let mut details = Vec::new();

    let sim_seed = 0x6f73616cu64 ^ ((inst.index as u64) << 20);
    for policy in [PolicySpec::MyopicArgmax, PolicySpec::Fixed(Channel::new(1))] {
        let expected = policy_value(&policy, &inst.omega1, inst.horizon, &inst.model)?.value;
        let config = SimConfig {
            model: inst.model,
            channels: inst.channels,
            horizon: inst.horizon,
            episodes,
            seed: sim_seed,
            initial: InitialBelief::Explicit(inst.omega1.entries().to_vec()),
            policy,
        };
        let estimate = estimate_throughput(&config)?;
        let consistent = if estimate.std_error > 0.0 {
            (estimate.mean - expected).abs() <= 3.0 * estimate.std_error
        } else {
            (estimate.mean - expected).abs() <= VALUE_TOLERANCE
        };
        if !consistent {
            witnesses.push(Witness {
                kind: "simulation-mismatch".into(),
                slot: None,
                observations: None,
                beliefs: Some(inst.omega1.entries().to_vec()),
                actions: None,
                values: Some(vec![estimate.mean, estimate.std_error, expected]),
                note: format!(
                    "{policy}: simulated {} ± {} vs planner {expected}",
                    estimate.mean, estimate.std_error
                ),
            });
        }
        details.push(format!(
            "{policy}: sim={:.6}±{:.6} plan={:.6}",
            estimate.mean, estimate.std_error, expected
        ));
    }

    // Per-seed trace identity between the argmax and round-robin
    // policies. Their tie-breaking differs (lowest index vs circular
    // position), so the check is meaningful only for tie-free beliefs.
    if inst.model.epsilon_bound().satisfied {
        let mut sorted = inst.omega1.entries().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tie_free = sorted.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-9);
        if tie_free {
            let myopic_cfg = SimConfig {
                model: inst.model,
                channels: inst.channels,
                horizon: inst.horizon,
                episodes,
                seed: sim_seed,
                initial: InitialBelief::Explicit(inst.omega1.entries().to_vec()),
                policy: PolicySpec::MyopicArgmax,
            };
            let structural_cfg = SimConfig {
                policy: PolicySpec::Structural,
                ..myopic_cfg.clone()
            };
            let mut compared = 0u64;
            for episode in 0..episodes.min(50) {
                let a = run_episode(&myopic_cfg, episode)?;
                let b = run_episode(&structural_cfg, episode)?;
                compared += 1;
                if a.records != b.records {
                    witnesses.push(Witness {
                        kind: "trace-divergence".into(),
                        slot: None,
                        observations: None,
                        beliefs: Some(inst.omega1.entries().to_vec()),
                        actions: None,
                        values: Some(vec![episode as f64]),
                        note: format!("episode {episode}: argmax and round-robin traces differ"),
                    });
                    break;
                }
            }
            details.push(format!("trace-identity episodes={compared}"));
        } else {
            details.push("trace-identity skipped (tied beliefs)".into());
        }
    } else {
        details.push("trace-identity skipped (epsilon bound unsatisfied)".into());
    }

    let verdict = if witnesses.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok((verdict, details.join("; "), witnesses))
}
