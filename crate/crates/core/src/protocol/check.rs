//! Security check (step 3) and sifting (step 4).

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{charlie_basis, RegisterIndex, RoundTranscript};
use crate::error::{Error, Result};
use crate::qubit::{Basis, PreparedState};
use crate::stats::binomial_half_two_sided;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortReason {
    /// Correct-basis registers whose deduced outcome differs from Alice's state.
    Mismatch { count: usize },
    /// Wrong-basis outcomes for one cell are not balanced.
    NonUniform {
        prepared: PreparedState,
        basis: Basis,
        p_value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Abort(AbortReason),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Self::Pass)
    }
}

/// Outcome counts for registers prepared in `prepared` but measured in the
/// other basis. `counts[b]` is the number of deduced outcomes with key bit `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityCell {
    pub prepared: PreparedState,
    pub basis: Basis,
    pub counts: [u64; 2],
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checked_indices: Vec<RegisterIndex>,
    /// Checked registers that Charlie measured in Alice's basis.
    pub correct_basis_checked: usize,
    pub mismatches: usize,
    /// Only non-empty cells are tested.
    pub uniformity: Vec<UniformityCell>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub bits: Vec<u8>,
    pub indices: Vec<RegisterIndex>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// ⌈f·total⌉, tolerant of rounding noise in `f·total`.
pub fn check_count(total: usize, check_fraction: f64) -> usize {
    let raw = (check_fraction * total as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(total)
}

/// Uniform sample of registers without replacement, sorted.
pub fn select_check_indices<R: Rng + ?Sized>(
    rounds: usize,
    batch_size: usize,
    check_fraction: f64,
    rng: &mut R,
) -> Vec<RegisterIndex> {
    let total = rounds * batch_size;
    let amount = check_count(total, check_fraction);
    let mut flat = index::sample(rng, total, amount).into_vec();
    flat.sort_unstable();
    flat.into_iter()
        .map(|k| RegisterIndex::new(k / batch_size, k % batch_size))
        .collect()
}

/// Compare Bob's deduced outcomes against Alice's revealed states.
pub fn evaluate_check(
    transcripts: &[RoundTranscript],
    indices: &[RegisterIndex],
    revealed: &[PreparedState],
    uniformity_alpha: f64,
) -> Result<CheckReport> {
    if indices.len() != revealed.len() {
        return Err(Error::LengthMismatch {
            expected: indices.len(),
            actual: revealed.len(),
        });
    }
    let mut mismatches = 0;
    let mut correct_basis_checked = 0;
    let mut cells: BTreeMap<(PreparedState, Basis), [u64; 2]> = BTreeMap::new();

    for (idx, &truth) in indices.iter().zip(revealed) {
        let t = &transcripts[idx.round];
        let measured_in = charlie_basis(t.permutation.image(idx.register), t.prepared.len());
        let deduced = t.bob_deduced[idx.register];
        if measured_in == truth.basis() {
            correct_basis_checked += 1;
            if deduced.state != truth {
                mismatches += 1;
            }
        } else if deduced.basis() != measured_in {
            // announced a state outside the basis Charlie was told to use
            mismatches += 1;
        } else {
            cells.entry((truth, measured_in)).or_default()[usize::from(deduced.bit())] += 1;
        }
    }

    let uniformity: Vec<UniformityCell> = cells
        .into_iter()
        .map(|((prepared, basis), counts)| UniformityCell {
            prepared,
            basis,
            counts,
            p_value: binomial_half_two_sided(counts[0], counts[0] + counts[1]),
        })
        .collect();

    let verdict = if mismatches > 0 {
        Verdict::Abort(AbortReason::Mismatch { count: mismatches })
    } else if let Some(cell) = uniformity.iter().find(|c| c.p_value < uniformity_alpha) {
        Verdict::Abort(AbortReason::NonUniform {
            prepared: cell.prepared,
            basis: cell.basis,
            p_value: cell.p_value,
        })
    } else {
        Verdict::Pass
    };

    Ok(CheckReport {
        checked_indices: indices.to_vec(),
        correct_basis_checked,
        mismatches,
        uniformity,
        verdict,
    })
}

/// Sample check registers, reveal Alice's states for them and evaluate.
pub fn security_check<R: Rng + ?Sized>(
    transcripts: &[RoundTranscript],
    alice_truth: &[Vec<PreparedState>],
    check_fraction: f64,
    uniformity_alpha: f64,
    rng: &mut R,
) -> Result<CheckReport> {
    let batch_size = transcripts.first().map_or(0, |t| t.prepared.len());
    let indices = select_check_indices(transcripts.len(), batch_size, check_fraction, rng);
    let revealed: Vec<PreparedState> = indices
        .iter()
        .map(|i| alice_truth[i.round][i.register])
        .collect();
    evaluate_check(transcripts, &indices, &revealed, uniformity_alpha)
}

/// Non-checked registers that Charlie measured in Alice's basis, in
/// (round, register) order.
pub fn sift_indices(transcripts: &[RoundTranscript], report: &CheckReport) -> Vec<RegisterIndex> {
    let checked: HashSet<RegisterIndex> = report.checked_indices.iter().copied().collect();
    transcripts
        .iter()
        .flat_map(|t| {
            let m = t.prepared.len();
            (0..m).filter_map(move |j| {
                let idx = RegisterIndex::new(t.round_index, j);
                (charlie_basis(t.permutation.image(j), m) == t.alice_bases[j]).then_some(idx)
            })
        })
        .filter(|idx| !checked.contains(idx))
        .collect()
}

/// Raw keys for Alice (from her preparations) and Bob (from his deductions).
pub fn sift_key(
    transcripts: &[RoundTranscript],
    report: &CheckReport,
) -> Result<(SiftedKey, SiftedKey)> {
    if !report.verdict.is_pass() {
        return Err(Error::SiftAfterAbort);
    }
    let indices = sift_indices(transcripts, report);
    let alice = indices
        .iter()
        .map(|i| transcripts[i.round].prepared[i.register].bit())
        .collect();
    let bob = indices
        .iter()
        .map(|i| transcripts[i.round].bob_deduced[i.register].bit())
        .collect();
    Ok((
        SiftedKey {
            bits: alice,
            indices: indices.clone(),
        },
        SiftedKey { bits: bob, indices },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_count_rounding() {
        assert_eq!(check_count(800, 0.3), 240);
        assert_eq!(check_count(10, 0.25), 3);
        assert_eq!(check_count(10, 0.0), 0);
        assert_eq!(check_count(10, 1.0), 10);
    }

    #[test]
    fn selection_is_sorted_and_distinct() {
        let mut rng = crate::rng::SeedTree::new(2).rng();
        let idx = select_check_indices(5, 4, 0.5, &mut rng);
        assert_eq!(idx.len(), 10);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.iter().all(|i| i.round < 5 && i.register < 4));
    }
}
