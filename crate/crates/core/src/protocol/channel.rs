//! Ordered, reliable, authenticated classical channel with a phase state
//! machine. Charlie's announcements for every round must be posted before
//! Alice may reveal her bases; any other order is rejected.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::check::Verdict;
use super::RegisterIndex;
use crate::error::{Error, Result};
use crate::qubit::{Basis, Outcome, PreparedState};

/// A public classical message. Everything here is visible to an
/// eavesdropper; nothing is secret except by omission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    /// Charlie to Bob, one per round, in transmission order.
    Announcement {
        round: usize,
        outcomes: Vec<Outcome>,
    },
    /// Alice's preparation bases for every register of every round.
    BasisReveal {
        bases: Vec<Vec<Basis>>,
    },
    /// Bob's choice of check registers.
    CheckSelection {
        indices: Vec<RegisterIndex>,
    },
    /// Alice's exact states for the selected registers, same order.
    StateReveal {
        states: Vec<PreparedState>,
    },
    CheckVerdict {
        verdict: Verdict,
    },
    /// Indices Bob keeps for the raw key.
    SiftAnnouncement {
        indices: Vec<RegisterIndex>,
    },
}

impl Message {
    fn name(&self) -> &'static str {
        match self {
            Self::Announcement { .. } => "announcement",
            Self::BasisReveal { .. } => "basis_reveal",
            Self::CheckSelection { .. } => "check_selection",
            Self::StateReveal { .. } => "state_reveal",
            Self::CheckVerdict { .. } => "check_verdict",
            Self::SiftAnnouncement { .. } => "sift_announcement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Quantum rounds in progress; `announced` rounds are complete.
    Distribution {
        announced: usize,
    },
    BasesRevealed,
    CheckSelected,
    StatesRevealed,
    Accepted,
    Aborted,
    Sifted,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Distribution { announced } => write!(f, "distribution({announced})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalChannel {
    rounds: usize,
    phase: Phase,
    log: Vec<Message>,
}

impl ClassicalChannel {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            phase: Phase::Distribution { announced: 0 },
            log: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }

    pub fn into_log(self) -> Vec<Message> {
        self.log
    }

    pub fn post(&mut self, message: Message) -> Result<()> {
        let next = match (&self.phase, &message) {
            (Phase::Distribution { announced }, Message::Announcement { round, .. })
                if *round == *announced && *announced < self.rounds =>
            {
                Phase::Distribution {
                    announced: announced + 1,
                }
            }
            (Phase::Distribution { announced }, Message::BasisReveal { .. })
                if *announced == self.rounds =>
            {
                Phase::BasesRevealed
            }
            (Phase::BasesRevealed, Message::CheckSelection { .. }) => Phase::CheckSelected,
            (Phase::CheckSelected, Message::StateReveal { .. }) => Phase::StatesRevealed,
            (Phase::StatesRevealed, Message::CheckVerdict { verdict }) => {
                if verdict.is_pass() {
                    Phase::Accepted
                } else {
                    Phase::Aborted
                }
            }
            (Phase::Accepted, Message::SiftAnnouncement { .. }) => Phase::Sifted,
            _ => {
                return Err(Error::PhaseViolation {
                    message: message.name(),
                    phase: self.phase.to_string(),
                })
            }
        };
        self.phase = next;
        self.log.push(message);
        Ok(())
    }
}
