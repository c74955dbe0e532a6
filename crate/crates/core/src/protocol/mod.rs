//! The four-step protocol among Alice, Bob and Charlie.
//!
//! Per round Alice prepares a batch of registers, Bob permutes them with a
//! fresh secret permutation, Charlie measures the first half of the
//! transmitted positions in the rectilinear basis and the second half in the
//! diagonal basis and announces the results, and Bob maps the announcements
//! back to original register order. After all rounds Alice reveals her
//! bases, a random portion of the registers is checked, and the remaining
//! registers measured in the right basis become the raw key.

mod channel;
mod check;
pub mod export;

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use channel::{ClassicalChannel, Message, Phase};
pub use check::{
    check_count, evaluate_check, security_check, select_check_indices, sift_indices, sift_key,
    AbortReason, CheckReport, SiftedKey, UniformityCell, Verdict,
};

use crate::adversary::{intercept_resend, ChannelAttack, CharlieStrategy, Interception};
use crate::error::{invalid, Error, Result};
use crate::permutation::{enough_permutations, factorial, random_excluding, Permutation};
use crate::qubit::{measure, Basis, Outcome, PreparedState};
use crate::rng::{labels, SeedTree};

/// Default fraction of registers sacrificed to the security check.
pub const DEFAULT_CHECK_FRACTION: f64 = 0.3;

/// Default per-cell significance for the wrong-basis uniformity test.
///
/// Small enough that honest runs essentially never abort (four cells per
/// run), large enough that a constant wrong-basis answer over roughly 20
/// registers in one cell is rejected.
pub const DEFAULT_UNIFORMITY_ALPHA: f64 = 1e-5;

/// Batch size below which a warning is logged.
pub const RECOMMENDED_MIN_BATCH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of rounds (batches).
    pub rounds: usize,
    /// Registers per batch; even.
    pub batch_size: usize,
    pub check_fraction: f64,
    pub uniformity_alpha: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            batch_size: 8,
            check_fraction: DEFAULT_CHECK_FRACTION,
            uniformity_alpha: DEFAULT_UNIFORMITY_ALPHA,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn new(rounds: usize, batch_size: usize, check_fraction: f64, seed: u64) -> Self {
        Self {
            rounds,
            batch_size,
            check_fraction,
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn total_registers(&self) -> usize {
        self.rounds * self.batch_size
    }

    pub fn validate(&self) -> Result<()> {
        validate_batch_size(self.batch_size)?;
        if self.rounds == 0 {
            return Err(Error::NoRounds);
        }
        if !(0.0..=1.0).contains(&self.check_fraction) {
            return Err(invalid("check_fraction", "must lie in [0, 1]"));
        }
        if !(self.uniformity_alpha > 0.0 && self.uniformity_alpha < 1.0) {
            return Err(invalid("uniformity_alpha", "must lie in (0, 1)"));
        }
        if !enough_permutations(self.batch_size, self.rounds) {
            return Err(Error::TooManyRounds {
                rounds: self.rounds,
                batch_size: self.batch_size,
                available: factorial(self.batch_size)
                    .map_or_else(|| "many".into(), |f| f.to_string()),
            });
        }
        if self.batch_size < RECOMMENDED_MIN_BATCH {
            log::warn!(
                "batch size {} is below the recommended minimum of {}",
                self.batch_size,
                RECOMMENDED_MIN_BATCH
            );
        }
        Ok(())
    }
}

fn validate_batch_size(m: usize) -> Result<()> {
    if m < 2 || !m.is_multiple_of(2) {
        Err(Error::InvalidBatchSize(m))
    } else {
        Ok(())
    }
}

/// A register address: batch `round`, original position `register`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterIndex {
    pub round: usize,
    pub register: usize,
}

impl RegisterIndex {
    pub fn new(round: usize, register: usize) -> Self {
        Self { round, register }
    }
}

impl fmt::Display for RegisterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.round, self.register)
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round_index: usize,
    /// Alice-private.
    pub prepared: Vec<PreparedState>,
    /// Bob-private.
    pub permutation: Permutation,
    /// Transmission order.
    pub charlie_announced: Vec<Outcome>,
    /// Original register order.
    pub bob_deduced: Vec<Outcome>,
    /// Empty until Alice reveals her bases.
    pub alice_bases: Vec<Basis>,
}

/// Basis Charlie must use at transmitted `position`: the first half is
/// rectilinear, the second half diagonal.
pub fn charlie_basis(position: usize, batch_size: usize) -> Basis {
    if position < batch_size / 2 {
        Basis::Rectilinear
    } else {
        Basis::Diagonal
    }
}

/// Alice's batch: i.i.d. uniform over the four states.
pub fn alice_prepare_batch<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Vec<PreparedState>> {
    validate_batch_size(m)?;
    Ok((0..m)
        .map(|_| PreparedState::ALL[rng.random_range(0..4)])
        .collect())
}

/// Uniform over S_m minus the permutations already used.
pub fn bob_choose_permutation<R: Rng + ?Sized>(
    m: usize,
    rng: &mut R,
    history: &HashSet<Permutation>,
) -> Result<Permutation> {
    random_excluding(m, history, rng)
}

pub fn apply_permutation(p: &Permutation, batch: &[PreparedState]) -> Result<Vec<PreparedState>> {
    p.apply(batch)
}

/// Honest Charlie: position j < m/2 rectilinear, the rest diagonal.
pub fn charlie_measure_honest<R: Rng + ?Sized>(
    batch: &[PreparedState],
    rng: &mut R,
) -> Vec<Outcome> {
    let m = batch.len();
    batch
        .iter()
        .enumerate()
        .map(|(pos, &s)| measure(s, charlie_basis(pos, m), rng))
        .collect()
}

/// `result[j] = announced[p.mapping[j]]`.
pub fn bob_deduce(p: &Permutation, announced: &[Outcome]) -> Result<Vec<Outcome>> {
    p.pull_back(announced)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ProtocolOutcome {
    Accept {
        alice_key: SiftedKey,
        bob_key: SiftedKey,
    },
    Abort {
        reason: AbortReason,
    },
}

/// A complete protocol execution.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub config: ProtocolConfig,
    pub outcome: ProtocolOutcome,
    pub transcripts: Vec<RoundTranscript>,
    pub report: CheckReport,
    /// Eve's record when the channel is attacked.
    pub interceptions: Vec<Interception>,
    /// Every public classical message, in order.
    pub public_log: Vec<Message>,
}

impl ProtocolRun {
    pub fn accepted(&self) -> bool {
        matches!(self.outcome, ProtocolOutcome::Accept { .. })
    }

    pub fn keys(&self) -> Option<(&SiftedKey, &SiftedKey)> {
        match &self.outcome {
            ProtocolOutcome::Accept { alice_key, bob_key } => Some((alice_key, bob_key)),
            ProtocolOutcome::Abort { .. } => None,
        }
    }

    /// Bob's secret permutations, round by round.
    pub fn permutations(&self) -> Vec<Permutation> {
        self.transcripts
            .iter()
            .map(|t| t.permutation.clone())
            .collect()
    }
}

/// Run steps (1)–(4) end to end. Deterministic in `config.seed`.
pub fn run_protocol(
    config: &ProtocolConfig,
    strategy: &CharlieStrategy,
    attack: ChannelAttack,
) -> Result<ProtocolRun> {
    config.validate()?;
    let (n, m) = (config.rounds, config.batch_size);
    let tree = SeedTree::new(config.seed);
    let targets = strategy.choose_targets(n, m, &mut tree.child(labels::CHARLIE_TARGETS).rng())?;

    let mut channel = ClassicalChannel::new(n);
    let mut history = HashSet::with_capacity(n);
    let mut interceptions = Vec::new();
    let mut transcripts = Vec::with_capacity(n);

    for (round, round_targets) in targets.iter().enumerate() {
        let prepared =
            alice_prepare_batch(m, &mut tree.child(labels::ALICE).child(round as u64).rng())?;
        let arriving = match attack {
            ChannelAttack::None => prepared.clone(),
            ChannelAttack::InterceptResend => intercept_resend(
                round,
                &prepared,
                &mut tree.child(labels::EVE).child(round as u64).rng(),
                &mut interceptions,
            ),
        };
        let permutation = bob_choose_permutation(
            m,
            &mut tree
                .child(labels::BOB_PERMUTATION)
                .child(round as u64)
                .rng(),
            &history,
        )?;
        history.insert(permutation.clone());
        let transmitted = apply_permutation(&permutation, &arriving)?;
        let announced = strategy.announce(
            &transmitted,
            round_targets,
            &mut tree.child(labels::CHARLIE).child(round as u64).rng(),
        );
        channel.post(Message::Announcement {
            round,
            outcomes: announced.clone(),
        })?;
        let bob_deduced = bob_deduce(&permutation, &announced)?;
        transcripts.push(RoundTranscript {
            round_index: round,
            prepared,
            permutation,
            charlie_announced: announced,
            bob_deduced,
            alice_bases: Vec::new(),
        });
    }

    let bases: Vec<Vec<Basis>> = transcripts
        .iter()
        .map(|t| t.prepared.iter().map(|s| s.basis()).collect())
        .collect();
    channel.post(Message::BasisReveal {
        bases: bases.clone(),
    })?;
    for (t, b) in transcripts.iter_mut().zip(bases) {
        t.alice_bases = b;
    }

    // Bob names the check registers first, then Alice reveals them.
    let indices = select_check_indices(
        n,
        m,
        config.check_fraction,
        &mut tree.child(labels::CHECK).rng(),
    );
    channel.post(Message::CheckSelection {
        indices: indices.clone(),
    })?;
    let revealed: Vec<PreparedState> = indices
        .iter()
        .map(|i| transcripts[i.round].prepared[i.register])
        .collect();
    channel.post(Message::StateReveal {
        states: revealed.clone(),
    })?;
    let report = evaluate_check(&transcripts, &indices, &revealed, config.uniformity_alpha)?;
    channel.post(Message::CheckVerdict {
        verdict: report.verdict.clone(),
    })?;

    let outcome = match &report.verdict {
        Verdict::Pass => {
            let (alice_key, bob_key) = sift_key(&transcripts, &report)?;
            channel.post(Message::SiftAnnouncement {
                indices: bob_key.indices.clone(),
            })?;
            ProtocolOutcome::Accept { alice_key, bob_key }
        }
        Verdict::Abort(reason) => ProtocolOutcome::Abort {
            reason: reason.clone(),
        },
    };

    Ok(ProtocolRun {
        config: config.clone(),
        outcome,
        transcripts,
        report,
        interceptions,
        public_log: channel.into_log(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn honest(n: usize, m: usize, f: f64, seed: u64) -> ProtocolRun {
        run_protocol(
            &ProtocolConfig::new(n, m, f, seed),
            &CharlieStrategy::Honest,
            ChannelAttack::None,
        )
        .unwrap()
    }

    #[test]
    fn config_errors() {
        let bad = |m| ProtocolConfig::new(1, m, 0.3, 0).validate();
        assert_eq!(bad(3), Err(Error::InvalidBatchSize(3)));
        assert_eq!(bad(0), Err(Error::InvalidBatchSize(0)));
        assert!(matches!(
            ProtocolConfig::new(3, 2, 0.3, 0).validate(),
            Err(Error::TooManyRounds { rounds: 3, .. })
        ));
        assert!(ProtocolConfig::new(2, 2, 0.3, 0).validate().is_ok());
        assert!(ProtocolConfig::new(1, 2, 1.5, 0).validate().is_err());
        assert_eq!(
            ProtocolConfig::new(0, 2, 0.3, 0).validate(),
            Err(Error::NoRounds)
        );
    }

    #[test]
    fn too_many_rounds_fails_before_any_round() {
        let err = run_protocol(
            &ProtocolConfig::new(25, 4, 0.3, 1),
            &CharlieStrategy::Honest,
            ChannelAttack::None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooManyRounds { .. }));
    }

    #[test]
    fn prepare_shapes() {
        let mut rng = SeedTree::new(1).rng();
        assert_eq!(alice_prepare_batch(2, &mut rng).unwrap().len(), 2);
        assert_eq!(
            alice_prepare_batch(3, &mut rng),
            Err(Error::InvalidBatchSize(3))
        );
        let a = alice_prepare_batch(8, &mut SeedTree::new(4).rng()).unwrap();
        let b = alice_prepare_batch(8, &mut SeedTree::new(4).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permutation_excludes_history() {
        let mut history = HashSet::new();
        history.insert(Permutation::identity(3));
        for seed in 0..50 {
            let p = bob_choose_permutation(3, &mut SeedTree::new(seed).rng(), &history).unwrap();
            assert_ne!(p, Permutation::identity(3));
        }
        assert_eq!(
            bob_choose_permutation(8, &mut SeedTree::new(0).rng(), &HashSet::new())
                .unwrap()
                .len(),
            8
        );
    }

    #[test]
    fn permutation_examples() {
        use PreparedState::*;
        let id = Permutation::identity(2);
        let swap = Permutation::transposition(2, 0, 1);
        assert_eq!(
            apply_permutation(&id, &[Zero, Plus]).unwrap(),
            vec![Zero, Plus]
        );
        assert_eq!(
            apply_permutation(&swap, &[Zero, Plus]).unwrap(),
            vec![Plus, Zero]
        );
        let a = Outcome::new(One);
        let b = Outcome::new(Minus);
        assert_eq!(bob_deduce(&id, &[a, b]).unwrap(), vec![a, b]);
        assert_eq!(bob_deduce(&swap, &[a, b]).unwrap(), vec![b, a]);
        assert!(bob_deduce(&swap, &[a]).is_err());
        assert!(apply_permutation(&swap, &[Zero]).is_err());
    }

    #[test]
    fn honest_measurement_examples() {
        use PreparedState::*;
        for seed in 0..20 {
            let mut rng = SeedTree::new(seed).rng();
            let out = charlie_measure_honest(&[Zero, Plus], &mut rng);
            assert_eq!(out, vec![Outcome::new(Zero), Outcome::new(Plus)]);
            let out = charlie_measure_honest(&[Plus, Zero], &mut rng);
            assert_eq!(out[0].basis(), Basis::Rectilinear);
            assert_eq!(out[1].basis(), Basis::Diagonal);
            let out = charlie_measure_honest(&[Plus, Minus, Zero, One], &mut rng);
            let bases: Vec<_> = out.iter().map(|o| o.basis()).collect();
            assert_eq!(
                bases,
                vec![
                    Basis::Rectilinear,
                    Basis::Rectilinear,
                    Basis::Diagonal,
                    Basis::Diagonal
                ]
            );
        }
    }

    #[test]
    fn honest_run_accepts_with_equal_keys() {
        let run = honest(10, 8, 0.3, 7);
        let (a, b) = run.keys().expect("accepted");
        assert_eq!(a, b);
        assert_eq!(run.report.mismatches, 0);
        assert_eq!(run.report.checked_indices.len(), 24);
        // distinct permutations across rounds
        let perms: HashSet<_> = run.permutations().into_iter().collect();
        assert_eq!(perms.len(), 10);
        for t in &run.transcripts {
            for j in 0..8 {
                assert_eq!(
                    t.bob_deduced[j],
                    t.charlie_announced[t.permutation.image(j)]
                );
            }
        }
    }

    #[test]
    fn degenerate_all_checked_gives_empty_keys() {
        let run = honest(2, 4, 1.0, 3);
        let (a, _) = run.keys().unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn public_log_follows_phases() {
        let run = honest(3, 4, 0.5, 11);
        let kinds: Vec<_> = run.public_log.iter().map(std::mem::discriminant).collect();
        assert_eq!(kinds.len(), 3 + 5);
        assert!(matches!(run.public_log[3], Message::BasisReveal { .. }));
        assert!(matches!(
            run.public_log.last(),
            Some(Message::SiftAnnouncement { .. })
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = honest(5, 8, 0.3, 99);
        let b = honest(5, 8, 0.3, 99);
        assert_eq!(a.transcripts, b.transcripts);
        assert_eq!(a.report, b.report);
        assert_eq!(a.outcome, b.outcome);
        let c = honest(5, 8, 0.3, 100);
        assert_ne!(a.transcripts, c.transcripts);
    }

    #[test]
    fn sift_after_abort_is_an_error() {
        let mut run = honest(4, 8, 0.5, 1);
        run.report.verdict = Verdict::Abort(AbortReason::Mismatch { count: 1 });
        assert_eq!(
            sift_key(&run.transcripts, &run.report),
            Err(Error::SiftAfterAbort)
        );
    }
}
