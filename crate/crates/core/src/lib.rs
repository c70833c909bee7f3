//! Core machinery for multichannel opportunistic access under noisy
//! sensing: the two-state channel model and its belief-state filter, the
//! myopic policy and its observation-driven round-robin form, an exact
//! finite-horizon planner over the reachable belief tree, and a seeded
//! Monte Carlo simulator of the full sense/transmit/ACK loop.

pub mod channel;
pub mod planner;
pub mod policy;
pub mod sim;

pub use channel::{
    BeliefVector, Channel, ChannelError, ChannelModel, CorrelationSign, EpsilonBound, Observation,
};

#[cfg(test)]
mod concurrency_contract {
    // Models, beliefs and policy states are plain value objects advanced
    // functionally; they can be shared or moved across threads freely.
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_types_are_send_and_sync() {
        assert_send_sync::<crate::ChannelModel>();
        assert_send_sync::<crate::BeliefVector>();
        assert_send_sync::<crate::policy::StructuralPolicyState>();
        assert_send_sync::<crate::policy::CircularOrder>();
        assert_send_sync::<crate::planner::Solver>();
        assert_send_sync::<crate::sim::SimConfig>();
    }
}
