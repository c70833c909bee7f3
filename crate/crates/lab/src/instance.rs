//! Random instance generation.
//!
//! An [`InstanceSpec`] describes a family of test instances: dimensions,
//! explicit or sampled model parameters, how ε relates to the structural
//! bound, and how initial beliefs are drawn. Instance `index` under a spec
//! is fully determined by (spec.seed, index), so any instance mentioned in
//! a report can be regenerated exactly.

use crate::LabError;
use osa_core::{BeliefVector, ChannelModel, CorrelationSign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// How the transition probabilities and δ are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    /// p01, p11 uniform on (p_low, p_high), resampled until
    /// |p11 − p01| > min_separation and the requested correlation sign
    /// holds; δ uniform on [delta_low, delta_high).
    Sampled {
        p_low: f64,
        p_high: f64,
        min_separation: f64,
        sign: Option<CorrelationSign>,
        delta_low: f64,
        delta_high: f64,
    },
    /// Fixed transition probabilities and δ (ε still set separately).
    Explicit { p01: f64, p11: f64, delta: f64 },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Sampled {
            p_low: 0.05,
            p_high: 0.95,
            min_separation: 0.01,
            sign: None,
            delta_low: 0.0,
            delta_high: 0.5,
        }
    }
}

/// How the detector's false-alarm probability is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSpec {
    Explicit(f64),
    /// ε = fraction × min(structural bound, 1); 0 < fraction < 1 keeps the
    /// bound strictly satisfied.
    BelowBoundFraction(f64),
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::BelowBoundFraction(0.5)
    }
}

/// How initial beliefs are drawn.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefSpec {
    Explicit(Vec<f64>),
    /// Every channel at the stationary probability.
    Stationary,
    /// Uniform inside [min(p01,p11), max(p01,p11)].
    #[default]
    RandomInBand,
    /// In-band draws with at least one entry forced outside the band.
    RandomWithTransients,
}

/// A family of instances; `seed` plus an instance index pins one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub channels: usize,
    pub horizon: usize,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub epsilon: EpsilonSpec,
    #[serde(default)]
    pub initial_belief: BeliefSpec,
    #[serde(default)]
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(channels: usize, horizon: usize, seed: u64) -> Self {
        InstanceSpec {
            channels,
            horizon,
            model: ModelSpec::default(),
            epsilon: EpsilonSpec::default(),
            initial_belief: BeliefSpec::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.channels < 1 {
            return Err(LabError::InvalidSpec("channels must be at least 1".into()));
        }
        if self.horizon < 1 {
            return Err(LabError::InvalidSpec("horizon must be at least 1".into()));
        }
        if let ModelSpec::Sampled { p_low, p_high, min_separation, .. } = &self.model {
            if !(0.0 < *p_low && p_low < p_high && *p_high < 1.0) {
                return Err(LabError::InvalidSpec(format!(
                    "sampling range ({p_low}, {p_high}) must sit inside (0, 1)"
                )));
            }
            if *min_separation < 0.0 || *min_separation >= p_high - p_low {
                return Err(LabError::InvalidSpec(
                    "min_separation must be non-negative and below the range width".into(),
                ));
            }
        }
        match self.epsilon {
            EpsilonSpec::Explicit(e) if !(0.0..1.0).contains(&e) => {
                return Err(LabError::InvalidSpec(format!("epsilon {e} outside [0, 1)")));
            }
            EpsilonSpec::BelowBoundFraction(f) if !(f > 0.0 && f < 1.0) => {
                return Err(LabError::InvalidSpec(format!(
                    "below-bound fraction {f} outside (0, 1)"
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// One concrete instance drawn from a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub index: usize,
    pub channels: usize,
    pub horizon: usize,
    pub model: ChannelModel,
    pub omega1: BeliefVector,
}

/// Deterministically generate instance `index` of `spec`.
pub fn generate(spec: &InstanceSpec, index: usize) -> Result<Instance, LabError> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let (p01, p11, delta) = match &spec.model {
        ModelSpec::Explicit { p01, p11, delta } => (*p01, *p11, *delta),
        ModelSpec::Sampled {
            p_low,
            p_high,
            min_separation,
            sign,
            delta_low,
            delta_high,
        } => loop {
            let p01: f64 = rng.random_range(*p_low..*p_high);
            let p11: f64 = rng.random_range(*p_low..*p_high);
            if (p11 - p01).abs() <= *min_separation {
                continue;
            }
            if let Some(sign) = sign {
                let actual = if p11 >= p01 {
                    CorrelationSign::Positive
                } else {
                    CorrelationSign::Negative
                };
                if actual != *sign {
                    continue;
                }
            }
            let delta = if delta_high > delta_low {
                rng.random_range(*delta_low..*delta_high)
            } else {
                *delta_low
            };
            break (p01, p11, delta);
        },
    };

    let epsilon = match spec.epsilon {
        EpsilonSpec::Explicit(e) => e,
        EpsilonSpec::BelowBoundFraction(fraction) => {
            let probe = ChannelModel::new(p01, p11, 0.0, 0.0)?;
            fraction * probe.epsilon_bound().bound.min(1.0)
        }
    };
    let model = ChannelModel::new(p01, p11, epsilon, delta)?;

    let omega1 = match &spec.initial_belief {
        BeliefSpec::Explicit(values) => {
            if values.len() != spec.channels {
                return Err(LabError::InvalidSpec(format!(
                    "explicit belief has {} entries for {} channels",
                    values.len(),
                    spec.channels
                )));
            }
            BeliefVector::new(values.clone())?
        }
        BeliefSpec::Stationary => BeliefVector::stationary(&model, spec.channels)?,
        BeliefSpec::RandomInBand => sample_in_band(&mut rng, &model, spec.channels)?,
        BeliefSpec::RandomWithTransients => {
            sample_with_transients(&mut rng, &model, spec.channels)?
        }
    };

    Ok(Instance {
        index,
        channels: spec.channels,
        horizon: spec.horizon,
        model,
        omega1,
    })
}

fn sample_in_band(
    rng: &mut ChaCha12Rng,
    model: &ChannelModel,
    channels: usize,
) -> Result<BeliefVector, LabError> {
    let (lo, hi) = model.belief_band();
    Ok(BeliefVector::new(
        (0..channels).map(|_| rng.random_range(lo..=hi)).collect(),
    )?)
}

fn sample_with_transients(
    rng: &mut ChaCha12Rng,
    model: &ChannelModel,
    channels: usize,
) -> Result<BeliefVector, LabError> {
    let (lo, hi) = model.belief_band();
    let below_room = lo > 0.01;
    let above_room = hi < 0.99;
    if !below_room && !above_room {
        return Err(LabError::InvalidSpec(
            "belief band leaves no room for transient values".into(),
        ));
    }
    let mut values: Vec<f64> = (0..channels).map(|_| rng.random_range(lo..=hi)).collect();
    let count = rng.random_range(1..=channels);
    for value in values.iter_mut().take(count) {
        let go_below = below_room && (!above_room || rng.random_bool(0.5));
        *value = if go_below {
            rng.random_range(0.005..lo * 0.999)
        } else {
            rng.random_range(hi + (1.0 - hi) * 0.001..0.995)
        };
    }
    Ok(BeliefVector::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_per_index() {
        let spec = InstanceSpec::new(4, 10, 99);
        let a = generate(&spec, 3).unwrap();
        let b = generate(&spec, 3).unwrap();
        assert_eq!(a, b);
        let c = generate(&spec, 4).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn sampled_models_respect_separation_and_sign() {
        let mut spec = InstanceSpec::new(3, 8, 7);
        spec.model = ModelSpec::Sampled {
            p_low: 0.05,
            p_high: 0.95,
            min_separation: 0.01,
            sign: Some(CorrelationSign::Negative),
            delta_low: 0.0,
            delta_high: 0.5,
        };
        for index in 0..50 {
            let inst = generate(&spec, index).unwrap();
            assert!(inst.model.p11() < inst.model.p01());
            assert!((inst.model.p11() - inst.model.p01()).abs() > 0.01);
            assert!(inst.model.epsilon_bound().satisfied);
        }
    }

    #[test]
    fn below_bound_fraction_keeps_bound_satisfied() {
        let mut spec = InstanceSpec::new(2, 6, 21);
        spec.epsilon = EpsilonSpec::BelowBoundFraction(0.9);
        for index in 0..50 {
            assert!(generate(&spec, index).unwrap().model.epsilon_bound().satisfied);
        }
    }

    #[test]
    fn transient_spec_produces_transients() {
        let mut spec = InstanceSpec::new(4, 6, 5);
        spec.initial_belief = BeliefSpec::RandomWithTransients;
        for index in 0..50 {
            let inst = generate(&spec, index).unwrap();
            assert!(
                !inst.omega1.all_in_band(&inst.model),
                "instance {index} has no transient entry"
            );
        }
    }

    #[test]
    fn in_band_spec_stays_in_band() {
        let spec = InstanceSpec::new(5, 6, 13);
        for index in 0..50 {
            let inst = generate(&spec, index).unwrap();
            assert!(inst.omega1.all_in_band(&inst.model));
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = InstanceSpec::new(3, 12, 42);
        spec.epsilon = EpsilonSpec::Explicit(0.02);
        spec.initial_belief = BeliefSpec::Explicit(vec![0.1, 0.5, 0.9]);
        let json = serde_json::to_string(&spec).unwrap();
        let back: InstanceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = InstanceSpec::new(0, 10, 1);
        assert!(generate(&spec, 0).is_err());
        spec = InstanceSpec::new(2, 10, 1);
        spec.epsilon = EpsilonSpec::BelowBoundFraction(1.5);
        assert!(generate(&spec, 0).is_err());
        spec = InstanceSpec::new(2, 10, 1);
        spec.initial_belief = BeliefSpec::Explicit(vec![0.5]);
        assert!(generate(&spec, 0).is_err());
    }
}
