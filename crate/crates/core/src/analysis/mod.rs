//! Counting and orthogonality arguments about discriminating Bob's
//! permutation, plus detection curves and expected key length.

mod orbit;

use serde::{Deserialize, Serialize};

pub use orbit::{
    hermitian_rank, is_identity, orbit, orbit_gram, orbit_rank,
    unambiguous_discrimination_possible, PermutationMatrixAction, ProbeState, DENSE_ORBIT_MAX,
    ORTHOGONALITY_TOL, STREAMING_ORBIT_MAX,
};

use crate::adversary::{estimate_pass_probability, StrategyKind};
use crate::error::{invalid, Result};
use crate::permutation::factorial;
use crate::protocol::{check_count, ProtocolConfig};

/// Largest m for which m! fits the feasibility table.
pub const FEASIBILITY_MAX: usize = 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

/// A 2^m-dimensional probe has at most 2^m mutually orthogonal images, so
/// all m! permutations can be told apart only if m! ≤ 2^m.
pub fn discrimination_feasible_by_counting(m: usize) -> Result<Feasibility> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    let dimension = 1u128.checked_shl(m as u32).filter(|_| m < 128);
    Ok(match (factorial(m), dimension) {
        (Some(perms), Some(dim)) if perms <= dim => Feasibility::Feasible,
        // m! outgrows 2^m from m = 4 on, and overflows u128 first
        _ => Feasibility::Infeasible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub m: usize,
    pub permutations: u128,
    pub dimension: u128,
    pub verdict: Feasibility,
}

pub fn feasibility_table(m_max: usize) -> Result<Vec<FeasibilityRow>> {
    if m_max > FEASIBILITY_MAX {
        return Err(invalid(
            "m_max",
            format!("must be at most {FEASIBILITY_MAX}"),
        ));
    }
    (1..=m_max)
        .map(|m| {
            Ok(FeasibilityRow {
                m,
                permutations: factorial(m).expect("checked above"),
                dimension: 1u128 << m,
                verdict: discrimination_feasible_by_counting(m)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub sampling_model: f64,
}

/// Pass probability against k for one cheating strategy.
pub fn detection_curve(
    kind: StrategyKind,
    config: &ProtocolConfig,
    ks: &[usize],
    trials: u64,
) -> Result<Vec<CurveRow>> {
    ks.iter()
        .map(|&k| {
            let est = estimate_pass_probability(config, &kind.with_k(k), trials)?;
            Ok(CurveRow {
                k,
                analytic: est.analytic,
                empirical: est.empirical,
                stderr: est.stderr,
                sampling_model: est.sampling_model,
            })
        })
        .collect()
}

/// Expected raw-key length of an honest run: half of the unchecked
/// registers. Equals n·m·(1−f)/2 whenever f·n·m is an integer.
pub fn expected_key_rate(config: &ProtocolConfig) -> f64 {
    let total = config.total_registers();
    (total - check_count(total, config.check_fraction)) as f64 / 2.0
}
