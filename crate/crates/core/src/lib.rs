//! Simulator and analysis toolkit for permutation-based
//! measurement-device-independent QKD.
//!
//! Alice sends batches of BB84 registers through Bob, who secretly permutes
//! each batch before Charlie measures it in a fixed, position-dependent
//! basis pattern. Bob undoes the permutation on Charlie's announcements, a
//! random portion of the registers is checked against Alice's states, and
//! the remaining correctly measured registers form the raw key.
//!
//! * [`qubit`]: the four states, two bases and Born-rule measurement.
//! * [`protocol`]: the full protocol run with a phase-ordered public channel.
//! * [`adversary`]: cheating Charlie, intercept-resend and output-tap Eve.
//! * [`physical`]: time slots, filters, the delay bank and the routing probes.
//! * [`analysis`]: counting and Gram-matrix orthogonality arguments.
//!
//! Every experiment is deterministic in its seed; see [`rng::SeedTree`].

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod permutation;
pub mod physical;
pub mod protocol;
pub mod qubit;
pub mod rng;
pub mod stats;

pub use adversary::{
    estimate_pass_probability, eve_guess_bits, eve_information, intercept_resend,
    pass_probability_analytic, pass_probability_sampling_model, trial_seed, ChannelAttack,
    CharlieStrategy, DetectionEstimate, EveRecord, Interception, PublicView, StrategyKind,
    SweepRow,
};
pub use analysis::{
    detection_curve, discrimination_feasible_by_counting, expected_key_rate, feasibility_table,
    orbit_gram, unambiguous_discrimination_possible, CurveRow, Feasibility, FeasibilityRow,
    ProbeState,
};
pub use error::{Error, Result};
pub use permutation::Permutation;
pub use physical::{
    apply_filters, photon_number_attack, route_through_bob, sample_delay_bank, timing_attack,
    validate_timing, AttackInference, DelayBank, OutputEvent, PortInjection, TimingConfig,
    TimingReport, TimingSweepRow, TimingTrials, TimingVerdict,
};
pub use protocol::{
    run_protocol, CheckReport, ProtocolConfig, ProtocolOutcome, ProtocolRun, RegisterIndex,
    RoundTranscript, SiftedKey, Verdict,
};
pub use qubit::{basis_of, bit_of, measure, Basis, Outcome, PreparedState};
pub use rng::{SeedTree, SimRng};
