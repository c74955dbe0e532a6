//! Bob's secret register permutation.
//!
//! Convention: transmitted position `mapping[j]` carries original register
//! `j`, i.e. `output[mapping[j]] = input[j]`. Every module (routing through
//! fibres, the orbit action on 2^m-dimensional states, the attacks) uses
//! this direction.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        Self::new(mapping)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let m = mapping.len();
        let mut seen = vec![false; m];
        for &t in &mapping {
            if t >= m || std::mem::replace(&mut seen[t], true) {
                return Err(Error::NotABijection(m));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            mapping: (0..m).collect(),
        }
    }

    /// Swap of positions `a` and `b`.
    pub fn transposition(m: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(m);
        p.mapping.swap(a, b);
        p
    }

    /// Uniformly random element of S_m.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..m).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// Transmitted position of original register `j`.
    pub fn image(&self, j: usize) -> usize {
        self.mapping[j]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (j, &t) in self.mapping.iter().enumerate() {
            inv[t] = j;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            mapping: other.mapping.iter().map(|&t| self.mapping[t]).collect(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                actual: len,
            })
        }
    }

    /// Reorder `items` into transmission order: `out[mapping[j]] = items[j]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        self.check_len(items.len())?;
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (j, item) in items.iter().enumerate() {
            out[self.mapping[j]] = Some(item.clone());
        }
        Ok(out.into_iter().map(|x| x.expect("bijection")).collect())
    }

    /// Undo [`apply`](Self::apply): `out[j] = items[mapping[j]]`.
    pub fn pull_back<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        self.check_len(items.len())?;
        Ok(self.mapping.iter().map(|&t| items[t].clone()).collect())
    }
}

/// m! when it fits in a `u128`.
pub fn factorial(m: usize) -> Option<u128> {
    (1..=m as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// Whether `count` distinct permutations of `m` elements exist.
pub fn enough_permutations(m: usize, count: usize) -> bool {
    factorial(m).is_none_or(|f| count as u128 <= f)
}

/// All m! permutations in lexicographic order of their mappings.
pub fn all_permutations(m: usize) -> AllPermutations {
    AllPermutations {
        next: Some((0..m).collect()),
    }
}

pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation { mapping: current })
    }
}

fn next_lexicographic(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len())
        .rev()
        .find(|&j| v[j] > v[i])
        .expect("pivot");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Uniform draw from S_m excluding `history`.
///
/// Uses rejection sampling while most of S_m is still free, and falls back to
/// enumerating the complement once `history` covers at least half of it.
pub fn random_excluding<R: Rng + ?Sized>(
    m: usize,
    history: &HashSet<Permutation>,
    rng: &mut R,
) -> Result<Permutation> {
    let total = factorial(m);
    if total.is_some_and(|t| history.len() as u128 >= t) {
        return Err(Error::PermutationsExhausted(m));
    }
    let dense = total.is_some_and(|t| 2 * history.len() as u128 >= t);
    if !dense {
        loop {
            let p = Permutation::random(m, rng);
            if !history.contains(&p) {
                return Ok(p);
            }
        }
    }
    let free: Vec<Permutation> = all_permutations(m)
        .filter(|p| !history.contains(p))
        .collect();
    let idx = rng.random_range(0..free.len());
    Ok(free.into_iter().nth(idx).expect("index in range"))
}
