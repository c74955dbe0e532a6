//! Orbits of a probe state under the register permutations.
//!
//! A permutation acts on the 2^m-dimensional space by permuting tensor
//! factors. Register j is stored in bit (m−1−j) of a basis label, so |01⟩
//! (register 0 in |0⟩, register 1 in |1⟩) has label 1. Following the
//! crate-wide convention, factor j of the input becomes factor
//! `mapping[j]` of the output.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::{all_permutations, Permutation};
use crate::qubit::PreparedState;

/// Largest m for which whole orbits (and dense Gram matrices) are built.
pub const DENSE_ORBIT_MAX: usize = 7;
/// Largest m accepted by the streaming orthogonality check.
pub const STREAMING_ORBIT_MAX: usize = 10;
/// Off-diagonal tolerance for orthogonality.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeState {
    m: usize,
    amplitudes: Vec<Complex64>,
}

impl ProbeState {
    pub fn new(m: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << m;
        if amplitudes.len() != dim {
            return Err(Error::ProbeDimension {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::ProbeNotNormalized(norm));
        }
        Ok(Self { m, amplitudes })
    }

    /// Computational basis state, e.g. `&[0, 1]` for |01⟩.
    pub fn basis_state(bits: &[u8]) -> Self {
        let m = bits.len();
        let label = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << m];
        amplitudes[label] = Complex64::new(1.0, 0.0);
        Self { m, amplitudes }
    }

    /// Tensor product of protocol states, register 0 first.
    pub fn product(states: &[PreparedState]) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for s in states {
            let (a0, a1) = match s {
                PreparedState::Zero => (1.0, 0.0),
                PreparedState::One => (0.0, 1.0),
                PreparedState::Plus => (h, h),
                PreparedState::Minus => (h, -h),
            };
            amplitudes = amplitudes.iter().flat_map(|&x| [x * a0, x * a1]).collect();
        }
        Self {
            m: states.len(),
            amplitudes,
        }
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let raw: Vec<Complex64> = (0..1usize << m)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Self {
            m,
            amplitudes: raw.into_iter().map(|a| a / norm).collect(),
        }
    }

    pub fn registers(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// A permutation acting on 2^m-dimensional amplitude vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationMatrixAction {
    permutation: Permutation,
    /// `target[x]` is the label that basis state x is sent to.
    target: Vec<usize>,
}

impl PermutationMatrixAction {
    pub fn new(permutation: Permutation) -> Self {
        let m = permutation.len();
        let target = (0..1usize << m)
            .map(|x| {
                (0..m).fold(0usize, |y, j| {
                    let bit = (x >> (m - 1 - j)) & 1;
                    y | (bit << (m - 1 - permutation.image(j)))
                })
            })
            .collect();
        Self {
            permutation,
            target,
        }
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn apply(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
        for (x, &a) in amplitudes.iter().enumerate() {
            out[self.target[x]] = a;
        }
        out
    }

    /// Dense 2^m × 2^m matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = self.target.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for (x, &y) in self.target.iter().enumerate() {
            mat[(y, x)] = Complex64::new(1.0, 0.0);
        }
        mat
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap {
        Err(Error::TooManyRegisters { m, cap })
    } else {
        Ok(())
    }
}

/// {P·η : P ∈ S_m} in the order of [`all_permutations`].
pub fn orbit(eta: &ProbeState) -> Result<Vec<Vec<Complex64>>> {
    check_cap(eta.m, DENSE_ORBIT_MAX)?;
    Ok(all_permutations(eta.m)
        .map(|p| PermutationMatrixAction::new(p).apply(&eta.amplitudes))
        .collect())
}

/// Gram matrix G[a][b] = ⟨η|P_a† P_b|η⟩ over all of S_m.
pub fn orbit_gram(eta: &ProbeState) -> Result<DMatrix<Complex64>> {
    let vectors = orbit(eta)?;
    let n = vectors.len();
    let mut gram = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let g = inner(&vectors[a], &vectors[b]);
            gram[(a, b)] = g;
            gram[(b, a)] = g.conj();
        }
    }
    Ok(gram)
}

/// Numerical rank of a Hermitian matrix.
pub fn hermitian_rank(matrix: &DMatrix<Complex64>) -> usize {
    let eig = matrix.clone().symmetric_eigen();
    let largest = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * largest.max(1.0);
    eig.eigenvalues.iter().filter(|v| v.abs() > tol).count()
}

/// Rank of the orbit via the 2^m × 2^m frame operator Σ_P |Pη⟩⟨Pη|, which
/// shares its nonzero spectrum with the Gram matrix.
pub fn orbit_rank(eta: &ProbeState) -> Result<usize> {
    let vectors = orbit(eta)?;
    let dim = eta.amplitudes.len();
    let mut frame = DMatrix::<Complex64>::zeros(dim, dim);
    for v in &vectors {
        for r in 0..dim {
            if v[r] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..dim {
                frame[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    Ok(hermitian_rank(&frame))
}

pub fn is_identity(matrix: &DMatrix<Complex64>, tol: f64) -> bool {
    matrix.is_square()
        && matrix.row_iter().enumerate().all(|(r, row)| {
            row.iter().enumerate().all(|(c, v)| {
                let expect = if r == c { 1.0 } else { 0.0 };
                (v - Complex64::new(expect, 0.0)).norm() <= tol
            })
        })
}

/// Whether the orbit of η is orthonormal, i.e. every P_i could be
/// identified without error.
///
/// Gram entries depend only on Q = P_a⁻¹P_b, so the orbit is orthonormal iff
/// ⟨η|Q|η⟩ = 0 for every non-identity Q. This streams S_m with early exit
/// instead of materializing the m!×m! matrix.
pub fn unambiguous_discrimination_possible(eta: &ProbeState) -> Result<bool> {
    check_cap(eta.m, STREAMING_ORBIT_MAX)?;
    let identity = Permutation::identity(eta.m);
    Ok(all_permutations(eta.m).filter(|q| *q != identity).all(|q| {
        let moved = PermutationMatrixAction::new(q).apply(&eta.amplitudes);
        inner(&eta.amplitudes, &moved).norm() <= ORTHOGONALITY_TOL
    }))
}
