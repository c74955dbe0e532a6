//! Fixtures shared by the criterion benchmarks.

use permqkd::{
    run_protocol, ChannelAttack, CharlieStrategy, ProbeState, ProtocolConfig, ProtocolRun, SeedTree,
};

/// A completed honest run at the default batch size.
pub fn honest_run(rounds: usize, seed: u64) -> ProtocolRun {
    run_protocol(
        &ProtocolConfig::new(rounds, 8, 0.3, seed),
        &CharlieStrategy::Honest,
        ChannelAttack::None,
    )
    .expect("valid config")
}

pub fn random_probe(m: usize, seed: u64) -> ProbeState {
    ProbeState::random(m, &mut SeedTree::new(seed).rng())
}
