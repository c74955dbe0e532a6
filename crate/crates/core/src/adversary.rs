//! Cheating strategies and the eavesdropper's view.
//!
//! Charlie may lie about his measurement results ([`CharlieStrategy`]); an
//! outside eavesdropper may intercept and resend Alice's registers
//! ([`ChannelAttack`]) or simply tap Bob's output and the public channel.
//! The estimators here compare Monte-Carlo detection rates against the
//! closed-form pass probability and against the exact probability under the
//! simulator's own sampling.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::permutation::{all_permutations, Permutation};
use crate::protocol::{
    charlie_basis, check_count, run_protocol, Message, ProtocolConfig, ProtocolRun, RegisterIndex,
    SiftedKey,
};
use crate::qubit::{measure, Basis, Outcome, PreparedState};
use crate::rng::{labels, SeedTree};
use crate::stats::{hypergeometric_pmf, proportion_stderr};

/// Largest batch size for which Eve's marginalization enumerates S_m.
pub const EXACT_MARGINAL_MAX: usize = 8;
/// Permutations sampled per round above [`EXACT_MARGINAL_MAX`].
pub const SAMPLED_MARGINAL_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Measure as told, announce the opposite outcome.
    FlipK,
    /// Skip the measurement, announce a uniform outcome in the assigned basis.
    RandomAnnounceK,
}

impl StrategyKind {
    /// Conflict probability on a checked register measured in the right basis.
    pub fn epsilon(self) -> f64 {
        match self {
            Self::FlipK => 1.0,
            Self::RandomAnnounceK => 0.5,
        }
    }

    pub fn with_k(self, k: usize) -> CharlieStrategy {
        match self {
            Self::FlipK => CharlieStrategy::FlipK { k },
            Self::RandomAnnounceK => CharlieStrategy::RandomAnnounceK { k },
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FlipK => "flip",
            Self::RandomAnnounceK => "random",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flip" | "flip_k" => Ok(Self::FlipK),
            "random" | "random_announce_k" => Ok(Self::RandomAnnounceK),
            other => Err(invalid("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

/// Charlie's behaviour. Cheating strategies pick `k` target registers
/// uniformly among all transmitted positions of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CharlieStrategy {
    Honest,
    FlipK { k: usize },
    RandomAnnounceK { k: usize },
}

impl CharlieStrategy {
    pub fn kind(&self) -> Option<StrategyKind> {
        match self {
            Self::Honest => None,
            Self::FlipK { .. } => Some(StrategyKind::FlipK),
            Self::RandomAnnounceK { .. } => Some(StrategyKind::RandomAnnounceK),
        }
    }

    pub fn k(&self) -> usize {
        match *self {
            Self::Honest => 0,
            Self::FlipK { k } | Self::RandomAnnounceK { k } => k,
        }
    }

    /// Per-round target masks over transmitted positions.
    pub(crate) fn choose_targets<R: Rng + ?Sized>(
        &self,
        rounds: usize,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<bool>>> {
        let total = rounds * batch_size;
        let k = self.k();
        if k > total {
            return Err(invalid(
                "k",
                format!("{k} targets requested but the run has only {total} registers"),
            ));
        }
        let mut mask = vec![vec![false; batch_size]; rounds];
        if k > 0 {
            for flat in index::sample(rng, total, k) {
                mask[flat / batch_size][flat % batch_size] = true;
            }
        }
        Ok(mask)
    }

    /// Charlie's announcement for one transmitted batch.
    pub(crate) fn announce<R: Rng + ?Sized>(
        &self,
        transmitted: &[PreparedState],
        targets: &[bool],
        rng: &mut R,
    ) -> Vec<Outcome> {
        let m = transmitted.len();
        transmitted
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(pos, (&state, &targeted))| {
                let basis = charlie_basis(pos, m);
                match (self, targeted) {
                    (Self::FlipK { .. }, true) => {
                        Outcome::new(measure(state, basis, rng).state.flipped())
                    }
                    (Self::RandomAnnounceK { .. }, true) => {
                        Outcome::new(basis.state_for_bit(u8::from(rng.random::<bool>())))
                    }
                    _ => measure(state, basis, rng),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelAttack {
    #[default]
    None,
    /// Measure every Alice→Bob register in a uniformly random basis and
    /// forward the collapsed state.
    InterceptResend,
}

/// One register measured by the intercept-resend eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interception {
    pub round: usize,
    pub register: usize,
    pub basis: Basis,
    pub outcome: Outcome,
}

/// Measure each register in a random basis, record it, forward the result.
pub fn intercept_resend<R: Rng + ?Sized>(
    round: usize,
    batch: &[PreparedState],
    rng: &mut R,
    record: &mut Vec<Interception>,
) -> Vec<PreparedState> {
    batch
        .iter()
        .enumerate()
        .map(|(register, &state)| {
            let basis = if rng.random::<bool>() {
                Basis::Diagonal
            } else {
                Basis::Rectilinear
            };
            let outcome = measure(state, basis, rng);
            record.push(Interception {
                round,
                register,
                basis,
                outcome,
            });
            outcome.state
        })
        .collect()
}

/// (1 − ε/2)^(λ·k): order-of-magnitude pass probability for a Charlie who
/// cheats on `k` registers.
pub fn pass_probability_analytic(epsilon: f64, lambda: f64, k: usize) -> Result<f64> {
    if !(0.5..=1.0).contains(&epsilon) {
        return Err(invalid("epsilon", "must lie in [1/2, 1]"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid("lambda", "must lie in (0, 1)"));
    }
    Ok((1.0 - epsilon / 2.0).powf(lambda * k as f64))
}

/// Exact pass probability under this simulator's sampling: the number J of
/// targeted registers among the ⌈f·n·m⌉ checked ones is hypergeometric, and
/// each of those is caught independently with probability ε/2 (basis right
/// with probability 1/2, then conflict with probability ε).
pub fn pass_probability_sampling_model(config: &ProtocolConfig, strategy: &CharlieStrategy) -> f64 {
    let Some(kind) = strategy.kind() else {
        return 1.0;
    };
    let total = config.total_registers() as u64;
    let checked = check_count(config.total_registers(), config.check_fraction) as u64;
    let k = strategy.k() as u64;
    let survive = 1.0 - kind.epsilon() / 2.0;
    (0..=k.min(checked))
        .map(|j| hypergeometric_pmf(total, checked, k, j) * survive.powi(j as i32))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    /// Closed-form value with λ = f/2.
    pub analytic: f64,
    pub empirical: f64,
    pub trials: u64,
    pub stderr: f64,
    /// Exact value under the simulator's sampling.
    pub sampling_model: f64,
}

/// Seed of trial `t` of an experiment rooted at `seed`.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    SeedTree::new(seed).child(labels::TRIALS).child(t).seed()
}

/// Monte-Carlo pass rate of a cheating Charlie over `trials` seeded runs.
pub fn estimate_pass_probability(
    config: &ProtocolConfig,
    strategy: &CharlieStrategy,
    trials: u64,
) -> Result<DetectionEstimate> {
    let kind = strategy.kind().ok_or(Error::HonestStrategy)?;
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    config.validate()?;
    let lambda = config.check_fraction / 2.0;
    let analytic = pass_probability_analytic(kind.epsilon(), lambda, strategy.k())?;
    let passes = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_protocol(
                &config.with_seed(trial_seed(config.seed, t)),
                strategy,
                ChannelAttack::None,
            )
            .map(|run| u64::from(run.accepted()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let empirical = passes as f64 / trials as f64;
    Ok(DetectionEstimate {
        analytic,
        empirical,
        trials,
        stderr: proportion_stderr(empirical, trials),
        sampling_model: pass_probability_sampling_model(config, strategy),
    })
}

/// One row of an attack sweep (CSV columns in this order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub k: usize,
    pub f: f64,
    pub m: usize,
    pub n: usize,
    pub trials: u64,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
}

impl SweepRow {
    pub fn new(
        kind: StrategyKind,
        k: usize,
        config: &ProtocolConfig,
        est: &DetectionEstimate,
    ) -> Self {
        Self {
            strategy: kind.to_string(),
            k,
            f: config.check_fraction,
            m: config.batch_size,
            n: config.rounds,
            trials: est.trials,
            analytic: est.analytic,
            empirical: est.empirical,
            stderr: est.stderr,
        }
    }
}

/// What an eavesdropper learns from the public classical channel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublicView {
    pub bases: Vec<Vec<Basis>>,
    pub checked: Vec<(RegisterIndex, PreparedState)>,
    pub sifted: Vec<RegisterIndex>,
}

impl PublicView {
    pub fn from_log(log: &[Message]) -> Self {
        let mut view = Self::default();
        let mut selection = Vec::new();
        for message in log {
            match message {
                Message::BasisReveal { bases } => view.bases = bases.clone(),
                Message::CheckSelection { indices } => selection = indices.clone(),
                Message::StateReveal { states } => {
                    view.checked = selection
                        .iter()
                        .copied()
                        .zip(states.iter().copied())
                        .collect()
                }
                Message::SiftAnnouncement { indices } => view.sifted = indices.clone(),
                _ => {}
            }
        }
        view
    }
}

/// The eavesdropper's raw material.
#[derive(Debug, Clone, PartialEq)]
pub enum EveRecord {
    /// Charlie's announcements (equivalently, measurements at Bob's
    /// output), optionally together with the public channel.
    OutputTap {
        announcements: Vec<Vec<Outcome>>,
        public: Option<PublicView>,
    },
    /// Direct measurements of Alice's registers before they reach Bob.
    Intercepted(Vec<Interception>),
}

impl EveRecord {
    pub fn output_tap(run: &ProtocolRun, with_public_channel: bool) -> Self {
        Self::OutputTap {
            announcements: run
                .transcripts
                .iter()
                .map(|t| t.charlie_announced.clone())
                .collect(),
            public: with_public_channel.then(|| PublicView::from_log(&run.public_log)),
        }
    }

    pub fn intercepted(run: &ProtocolRun) -> Self {
        Self::Intercepted(run.interceptions.clone())
    }
}

/// Eve's best guess for every bit of `key`, in key order.
///
/// With `known_permutations` the output tap reads each bit directly. Without
/// them Eve forms the posterior over each round's permutation (uniform over
/// the permutations consistent with everything she saw) and takes the
/// posterior-majority bit, ties going to 0.
pub fn eve_guess_bits(
    key: &SiftedKey,
    record: &EveRecord,
    known_permutations: Option<&[Permutation]>,
) -> Vec<u8> {
    match record {
        EveRecord::Intercepted(interceptions) => {
            let by_index: HashMap<RegisterIndex, Outcome> = interceptions
                .iter()
                .map(|i| (RegisterIndex::new(i.round, i.register), i.outcome))
                .collect();
            key.indices
                .iter()
                .map(|idx| by_index.get(idx).map_or(0, |o| o.bit()))
                .collect()
        }
        EveRecord::OutputTap {
            announcements,
            public,
        } => match known_permutations {
            Some(perms) => key
                .indices
                .iter()
                .map(|idx| announcements[idx.round][perms[idx.round].image(idx.register)].bit())
                .collect(),
            None => marginal_guesses(key, announcements, public.as_ref()),
        },
    }
}

/// Fraction of `key` bits Eve identifies correctly; 0 for an empty key.
pub fn eve_information(
    key: &SiftedKey,
    record: &EveRecord,
    known_permutations: Option<&[Permutation]>,
) -> f64 {
    if key.is_empty() {
        return 0.0;
    }
    let guesses = eve_guess_bits(key, record, known_permutations);
    let correct = guesses
        .iter()
        .zip(&key.bits)
        .filter(|(g, b)| g == b)
        .count();
    correct as f64 / key.len() as f64
}

#[derive(Clone, Copy)]
enum Seen {
    Unknown,
    Sifted(Basis),
    Discarded(Basis),
    Checked(PreparedState),
}

fn consistent(p: &Permutation, announced: &[Outcome], seen: &[Seen]) -> bool {
    let m = announced.len();
    seen.iter().enumerate().all(|(j, s)| {
        let pos = p.image(j);
        let measured_in = charlie_basis(pos, m);
        match *s {
            Seen::Unknown => true,
            Seen::Sifted(b) => measured_in == b,
            Seen::Discarded(b) => measured_in != b,
            Seen::Checked(state) => measured_in != state.basis() || announced[pos].state == state,
        }
    })
}

fn marginal_guesses(
    key: &SiftedKey,
    announcements: &[Vec<Outcome>],
    public: Option<&PublicView>,
) -> Vec<u8> {
    let mut rounds: HashMap<usize, Vec<usize>> = HashMap::new();
    for idx in &key.indices {
        rounds.entry(idx.round).or_default().push(idx.register);
    }
    let checked: HashMap<RegisterIndex, PreparedState> = public
        .map(|v| v.checked.iter().copied().collect())
        .unwrap_or_default();
    let sifted: std::collections::HashSet<RegisterIndex> = public
        .map(|v| v.sifted.iter().copied().collect())
        .unwrap_or_default();

    let mut guess: HashMap<RegisterIndex, u8> = HashMap::new();
    for (&round, registers) in &rounds {
        let announced = &announcements[round];
        let m = announced.len();
        let seen: Vec<Seen> = (0..m)
            .map(|j| {
                let Some(view) = public else {
                    return Seen::Unknown;
                };
                let idx = RegisterIndex::new(round, j);
                let basis = view.bases[round][j];
                if let Some(&state) = checked.get(&idx) {
                    Seen::Checked(state)
                } else if sifted.contains(&idx) {
                    Seen::Sifted(basis)
                } else {
                    Seen::Discarded(basis)
                }
            })
            .collect();

        let mut ones = vec![0u64; m];
        let mut total = 0u64;
        let mut tally = |p: &Permutation| {
            if consistent(p, announced, &seen) {
                total += 1;
                for &j in registers {
                    ones[j] += u64::from(announced[p.image(j)].bit());
                }
            }
        };
        if m <= EXACT_MARGINAL_MAX {
            all_permutations(m).for_each(|p| tally(&p));
        } else {
            let mut rng = SeedTree::new(round as u64)
                .child(labels::MARGINAL_SAMPLING)
                .rng();
            for _ in 0..SAMPLED_MARGINAL_DRAWS {
                tally(&Permutation::random(m, &mut rng));
            }
        }
        for &j in registers {
            guess.insert(RegisterIndex::new(round, j), u8::from(2 * ones[j] > total));
        }
    }
    key.indices.iter().map(|idx| guess[idx]).collect()
}
