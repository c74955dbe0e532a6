//! Physical layer at Bob's site: time slots and fibre-rate limits, single
//! photon filters, shutters, the optical delay bank, and the two routing
//! side channels (photon-number and timing probes).
//!
//! Photon counts and timestamps are plain bookkeeping; both probes only
//! extract classical routing information.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::permutation::Permutation;
use crate::rng::{labels, SeedTree};

/// Ratio `x·τ/m` above which the soft rate condition `x << m/τ` is flagged.
pub const SOFT_RATE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Slot duration in seconds.
    pub tau: f64,
    /// Fibre rate in bits per second.
    pub rate: f64,
    pub ports: usize,
    /// One slot shared by all ports (time-division multiplexing).
    pub multiplexed: bool,
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", "must be positive"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(invalid("rate", "must be positive"));
        }
        if self.multiplexed && self.ports == 0 {
            return Err(invalid("m", "multiplexed slots need at least one port"));
        }
        Ok(())
    }

    /// Strict upper bound on τ: 2/x, or 2m/x when multiplexed.
    pub fn slot_bound(&self) -> f64 {
        if self.multiplexed {
            2.0 * self.ports as f64 / self.rate
        } else {
            2.0 / self.rate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TimingVerdict {
    Secure,
    Insecure { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub config: TimingConfig,
    #[serde(flatten)]
    pub verdict: TimingVerdict,
    pub slot_bound: f64,
    /// x·τ/m; the soft condition wants this far below 1.
    pub rate_ratio: Option<f64>,
    pub soft_warning: Option<String>,
}

/// Secure iff τ < 2/x (τ < 2m/x when multiplexed): at most one photon can
/// enter a port per slot. The soft `x << m/τ` condition only warns.
pub fn validate_timing(cfg: &TimingConfig) -> Result<TimingReport> {
    cfg.validate()?;
    let bound = cfg.slot_bound();
    let verdict = if cfg.tau < bound {
        TimingVerdict::Secure
    } else {
        TimingVerdict::Insecure {
            reason: format!(
                "slot duration {:e} s is not below {} = {:e} s",
                cfg.tau,
                if cfg.multiplexed { "2m/x" } else { "2/x" },
                bound
            ),
        }
    };
    let rate_ratio = (cfg.ports > 0).then(|| cfg.rate * cfg.tau / cfg.ports as f64);
    let soft_warning = rate_ratio.filter(|&r| r >= SOFT_RATE_MARGIN).map(|r| {
        format!("fibre rate is not well below m/tau (x*tau/m = {r:.3}, want < {SOFT_RATE_MARGIN})")
    });
    Ok(TimingReport {
        config: *cfg,
        verdict,
        slot_bound: bound,
        rate_ratio,
        soft_warning,
    })
}

/// Photons injected into one of Bob's input ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortInjection {
    pub port: usize,
    /// Seconds from the start of the slot.
    pub arrival_time: f64,
    pub photon_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputEvent {
    pub output_port: usize,
    pub exit_time: f64,
    pub photon_count: u32,
}

/// Shutters drop anything outside `[0, τ)`; the single-photon filter
/// truncates each injection to one photon.
pub fn apply_filters(
    injections: &[PortInjection],
    single_photon_filter: bool,
    slot: &TimingConfig,
) -> Vec<PortInjection> {
    injections
        .iter()
        .filter(|inj| inj.arrival_time >= 0.0 && inj.arrival_time < slot.tau)
        .map(|inj| PortInjection {
            photon_count: if single_photon_filter {
                inj.photon_count.min(1)
            } else {
                inj.photon_count
            },
            ..*inj
        })
        .collect()
}

/// Bob's optical delays and their assignment to input ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBank {
    delays: Vec<f64>,
    assignment: Vec<usize>,
}

impl DelayBank {
    /// `delays` must be pairwise distinct and outnumber the ports;
    /// `assignment[port]` indexes into `delays` injectively.
    pub fn new(delays: Vec<f64>, assignment: Vec<usize>) -> Result<Self> {
        if delays.len() <= assignment.len() {
            return Err(Error::DelayBankTooSmall {
                delays: delays.len(),
                ports: assignment.len(),
            });
        }
        let mut sorted = delays.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.iter().any(|d| !d.is_finite()) {
            return Err(invalid("delays", "must be finite and pairwise distinct"));
        }
        let mut used = vec![false; delays.len()];
        for &a in &assignment {
            if a >= delays.len() || std::mem::replace(&mut used[a], true) {
                return Err(invalid(
                    "assignment",
                    "must be an injective map into the delays",
                ));
            }
        }
        Ok(Self { delays, assignment })
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn ports(&self) -> usize {
        self.assignment.len()
    }

    pub fn delay_for(&self, port: usize) -> f64 {
        self.delays[self.assignment[port]]
    }

    /// Smallest gap between consecutive sorted delays.
    pub fn min_gap(&self) -> f64 {
        let mut sorted = self.delays.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Fresh uniform injective assignment of ports to delays.
    pub fn reassign<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let ports = self.assignment.len();
        let mut pool: Vec<usize> = (0..self.delays.len()).collect();
        let (chosen, _) = pool.partial_shuffle(rng, ports);
        self.assignment = chosen.to_vec();
    }
}

/// `bank_size` delays spaced by gaps in `[min_gap, 2·min_gap)`, starting at
/// `min_gap`, with a uniform assignment for `ports` ports.
pub fn sample_delay_bank<R: Rng + ?Sized>(
    ports: usize,
    bank_size: usize,
    min_gap: f64,
    rng: &mut R,
) -> Result<DelayBank> {
    if bank_size <= ports {
        return Err(Error::DelayBankTooSmall {
            delays: bank_size,
            ports,
        });
    }
    if !(min_gap > 0.0 && min_gap.is_finite()) {
        return Err(invalid("min_gap", "must be positive"));
    }
    let mut delays = Vec::with_capacity(bank_size);
    let mut t = min_gap;
    for _ in 0..bank_size {
        delays.push(t);
        t += min_gap * (1.0 + rng.random::<f64>());
    }
    let mut bank = DelayBank {
        delays,
        assignment: vec![0; ports],
    };
    bank.reassign(rng);
    Ok(bank)
}

/// Route injections through Bob's fibres: input port j exits at output
/// `p.image(j)`, delayed by the bank when present.
pub fn route_through_bob(
    p: &Permutation,
    bank: Option<&DelayBank>,
    injections: &[PortInjection],
) -> Vec<OutputEvent> {
    injections
        .iter()
        .map(|inj| OutputEvent {
            output_port: p.image(inj.port),
            exit_time: inj.arrival_time + bank.map_or(0.0, |b| b.delay_for(inj.port)),
            photon_count: inj.photon_count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackInference {
    Inferred(Permutation),
    Undetermined,
}

impl AttackInference {
    pub fn is(&self, p: &Permutation) -> bool {
        matches!(self, Self::Inferred(q) if q == p)
    }
}

/// Send j+1 photons into port j and read the counts at the outputs.
pub fn photon_number_attack(p: &Permutation, filter_on: bool) -> AttackInference {
    let m = p.len();
    let slot = TimingConfig {
        tau: 1.0,
        rate: 1.0,
        ports: m,
        multiplexed: false,
    };
    let injections: Vec<PortInjection> = (0..m)
        .map(|port| PortInjection {
            port,
            arrival_time: 0.0,
            photon_count: port as u32 + 1,
        })
        .collect();
    let events = route_through_bob(p, None, &apply_filters(&injections, filter_on, &slot));
    let mut mapping = vec![usize::MAX; m];
    for e in &events {
        let port = e.photon_count as usize;
        if port == 0 || port > m || mapping[port - 1] != usize::MAX {
            return AttackInference::Undetermined;
        }
        mapping[port - 1] = e.output_port;
    }
    Permutation::new(mapping).map_or(AttackInference::Undetermined, AttackInference::Inferred)
}

/// One photon into port j at time j·δ; the k-th output to fire is assumed to
/// carry the photon from input port k. Near-simultaneous exits give
/// `Undetermined`.
pub fn timing_attack(p: &Permutation, bank: Option<&DelayBank>, stagger: f64) -> AttackInference {
    let m = p.len();
    let injections: Vec<PortInjection> = (0..m)
        .map(|port| PortInjection {
            port,
            arrival_time: port as f64 * stagger,
            photon_count: 1,
        })
        .collect();
    let mut events = route_through_bob(p, bank, &injections);
    events.sort_by(|a, b| a.exit_time.total_cmp(&b.exit_time));
    let scale = events
        .iter()
        .map(|e| e.exit_time.abs())
        .fold(stagger.abs(), f64::max);
    if events
        .windows(2)
        .any(|w| w[1].exit_time - w[0].exit_time <= 1e-9 * scale)
    {
        return AttackInference::Undetermined;
    }
    let mapping = events.iter().map(|e| e.output_port).collect();
    Permutation::new(mapping).map_or(AttackInference::Undetermined, AttackInference::Inferred)
}

/// One row of a timing-attack sweep. `bank_size` 0 means no delay bank;
/// `gap_ratio` is min_gap / ((m−1)·δ), so values above 1 satisfy the gap
/// condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSweepRow {
    pub m: usize,
    pub bank_size: usize,
    pub gap_ratio: f64,
    pub trials: u64,
    pub success_rate: f64,
}

/// Parameters for repeated timing-attack trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingTrials {
    pub m: usize,
    /// 0 disables the delay bank.
    pub bank_size: usize,
    /// min_gap / ((m−1)·δ).
    pub gap_ratio: f64,
    /// Attacker stagger δ in seconds.
    pub stagger: f64,
    pub trials: u64,
    pub seed: u64,
}

impl TimingTrials {
    /// Run the attack `trials` times. The delay values are drawn once; the
    /// port-to-delay assignment is re-randomized every trial (every round).
    /// With `fixed` the same permutation is attacked each time, otherwise
    /// Bob draws a fresh uniform permutation per trial.
    pub fn run(&self, fixed: Option<&Permutation>) -> Result<Vec<(Permutation, AttackInference)>> {
        if self.m < 2 {
            return Err(invalid("m", "needs at least two ports"));
        }
        if let Some(p) = fixed {
            if p.len() != self.m {
                return Err(Error::LengthMismatch {
                    expected: self.m,
                    actual: p.len(),
                });
            }
        }
        if !(self.stagger > 0.0 && self.stagger.is_finite()) {
            return Err(invalid("stagger", "must be positive"));
        }
        let tree = SeedTree::new(self.seed);
        let mut bank = if self.bank_size == 0 {
            None
        } else {
            let min_gap = self.gap_ratio * (self.m - 1) as f64 * self.stagger;
            Some(sample_delay_bank(
                self.m,
                self.bank_size,
                min_gap,
                &mut tree.child(labels::DELAY_BANK).rng(),
            )?)
        };
        Ok((0..self.trials)
            .map(|t| {
                let mut rng = tree.child(labels::TRIALS).child(t).rng();
                let p = fixed
                    .cloned()
                    .unwrap_or_else(|| Permutation::random(self.m, &mut rng));
                if let Some(bank) = bank.as_mut() {
                    bank.reassign(&mut rng);
                }
                let inferred = timing_attack(&p, bank.as_ref(), self.stagger);
                (p, inferred)
            })
            .collect())
    }

    pub fn sweep_row(&self) -> Result<TimingSweepRow> {
        let results = self.run(None)?;
        let successes = results.iter().filter(|(p, inf)| inf.is(p)).count();
        Ok(TimingSweepRow {
            m: self.m,
            bank_size: self.bank_size,
            gap_ratio: if self.bank_size == 0 {
                0.0
            } else {
                self.gap_ratio
            },
            trials: self.trials,
            success_rate: if self.trials == 0 {
                0.0
            } else {
                successes as f64 / self.trials as f64
            },
        })
    }
}
