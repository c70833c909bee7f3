//! Shared random-instance sampling for integration tests.
#![allow(dead_code)] // each test target uses a different subset

use osa_core::{BeliefVector, ChannelModel, CorrelationSign};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Transition probabilities uniform on (0.05, 0.95), resampled until the
/// separation |p11 − p01| exceeds 0.01 and the requested correlation sign
/// holds; ε is the given fraction of the structural bound.
pub fn sample_model(
    rng: &mut ChaCha12Rng,
    sign: Option<CorrelationSign>,
    epsilon_fraction: f64,
) -> ChannelModel {
    loop {
        let p01: f64 = rng.random_range(0.05..0.95);
        let p11: f64 = rng.random_range(0.05..0.95);
        if (p11 - p01).abs() <= 0.01 {
            continue;
        }
        let probe = ChannelModel::new(p01, p11, 0.0, 0.0).unwrap();
        if let Some(sign) = sign {
            if probe.correlation_sign() != sign {
                continue;
            }
        }
        let epsilon = epsilon_fraction * probe.epsilon_bound().bound.min(1.0);
        let delta = rng.random_range(0.0..0.5);
        return ChannelModel::new(p01, p11, epsilon, delta).unwrap();
    }
}

pub fn sample_in_band(rng: &mut ChaCha12Rng, model: &ChannelModel, channels: usize) -> BeliefVector {
    let (lo, hi) = model.belief_band();
    BeliefVector::new((0..channels).map(|_| rng.random_range(lo..=hi)).collect()).unwrap()
}

/// In-band beliefs with at least one entry pushed strictly outside the
/// band (either side, whichever has room).
pub fn sample_with_transients(
    rng: &mut ChaCha12Rng,
    model: &ChannelModel,
    channels: usize,
) -> BeliefVector {
    let (lo, hi) = model.belief_band();
    let mut values: Vec<f64> = (0..channels).map(|_| rng.random_range(lo..=hi)).collect();
    let count = rng.random_range(1..=channels);
    let below_room = lo > 0.01;
    let above_room = hi < 0.99;
    for value in values.iter_mut().take(count) {
        let go_below = below_room && (!above_room || rng.random_bool(0.5));
        *value = if go_below {
            rng.random_range(0.005..lo * 0.999)
        } else {
            rng.random_range(hi + (1.0 - hi) * 0.001..0.995)
        };
    }
    BeliefVector::new(values).unwrap()
}
