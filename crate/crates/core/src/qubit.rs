//! The four protocol states, the two measurement bases, and Born-rule
//! measurement. All registers are product states of these four, so a
//! symbolic representation is exact.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// One of |0⟩, |1⟩, |+⟩, |−⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PreparedState {
    Zero,
    One,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    /// {|0⟩, |1⟩}
    Rectilinear,
    /// {|+⟩, |−⟩}
    Diagonal,
}

/// A measurement result as announced by Charlie. The carried state always
/// belongs to the basis it was measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome {
    pub state: PreparedState,
}

impl PreparedState {
    pub const ALL: [PreparedState; 4] = [Self::Zero, Self::One, Self::Plus, Self::Minus];

    pub fn basis(self) -> Basis {
        match self {
            Self::Zero | Self::One => Basis::Rectilinear,
            Self::Plus | Self::Minus => Basis::Diagonal,
        }
    }

    /// Key bit: |0⟩ and |+⟩ encode 0, |1⟩ and |−⟩ encode 1.
    pub fn bit(self) -> u8 {
        match self {
            Self::Zero | Self::Plus => 0,
            Self::One | Self::Minus => 1,
        }
    }

    /// The other state of the same basis.
    pub fn flipped(self) -> Self {
        match self {
            Self::Zero => Self::One,
            Self::One => Self::Zero,
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }
}

impl fmt::Display for PreparedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "|0>",
            Self::One => "|1>",
            Self::Plus => "|+>",
            Self::Minus => "|->",
        })
    }
}

impl Basis {
    pub const ALL: [Basis; 2] = [Self::Rectilinear, Self::Diagonal];

    /// The basis states, ordered by key bit.
    pub fn states(self) -> [PreparedState; 2] {
        match self {
            Self::Rectilinear => [PreparedState::Zero, PreparedState::One],
            Self::Diagonal => [PreparedState::Plus, PreparedState::Minus],
        }
    }

    pub fn state_for_bit(self, bit: u8) -> PreparedState {
        self.states()[usize::from(bit & 1)]
    }

    pub fn other(self) -> Self {
        match self {
            Self::Rectilinear => Self::Diagonal,
            Self::Diagonal => Self::Rectilinear,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rectilinear => "rectilinear",
            Self::Diagonal => "diagonal",
        })
    }
}

impl Outcome {
    pub fn new(state: PreparedState) -> Self {
        Self { state }
    }

    pub fn basis(self) -> Basis {
        self.state.basis()
    }

    pub fn bit(self) -> u8 {
        self.state.bit()
    }
}

pub fn basis_of(state: PreparedState) -> Basis {
    state.basis()
}

pub fn bit_of(state: PreparedState) -> u8 {
    state.bit()
}

/// Measure `state` in `basis`.
///
/// A matching basis returns the state itself without touching `rng`. A
/// mismatched basis yields each basis state with probability
/// |⟨b|s⟩|² = 1/2, consuming exactly one draw.
pub fn measure<R: Rng + ?Sized>(state: PreparedState, basis: Basis, rng: &mut R) -> Outcome {
    if state.basis() == basis {
        Outcome::new(state)
    } else {
        let bit = u8::from(rng.random::<bool>());
        Outcome::new(basis.state_for_bit(bit))
    }
}
