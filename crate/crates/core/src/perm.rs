//! Rankings (permutations of candidates) and partial rankings.
//!
//! Candidates and positions are stored 0-based. Every serialized form and
//! every `Display` impl is 1-based, matching how rankings are written by hand.

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{invalid, Result};

/// A permutation of `0..m`: `order[p]` is the candidate ranked at position `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &c in &order {
            if c >= m || seen[c] {
                return invalid(format!("{order:?} is not a permutation of 0..{m}"));
            }
            seen[c] = true;
        }
        Ok(Ranking { order })
    }

    /// Builds a ranking from 1-based candidate labels.
    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return invalid(format!("{order:?}: 1-based labels start at 1"));
        }
        Ranking::new(order.iter().map(|c| c - 1).collect())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Ranking::new(order.clone()).is_ok());
        Ranking { order }
    }

    pub fn identity(m: usize) -> Self {
        Ranking {
            order: (0..m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.order
    }

    pub fn at(&self, position: usize) -> usize {
        self.order[position]
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.order.iter().map(|c| c + 1).collect()
    }

    /// `positions()[c]` is the position of candidate `c`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &c) in self.order.iter().enumerate() {
            pos[c] = p;
        }
        pos
    }

    pub fn position_of(&self, candidate: usize) -> Option<usize> {
        self.order.iter().position(|&c| c == candidate)
    }

    /// The ranking with the entries at positions `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Ranking {
        let mut order = self.order.clone();
        order.swap(i, j);
        Ranking { order }
    }

    /// Relabels candidates: candidate `c` becomes `relabel[c]`.
    pub fn relabeled(&self, relabel: &[usize]) -> Ranking {
        Ranking {
            order: self.order.iter().map(|&c| relabel[c]).collect(),
        }
    }

    /// Highest-ranked candidate contained in `available`.
    pub fn top_among(&self, available: &[bool]) -> Option<usize> {
        self.order.iter().copied().find(|&c| available[c])
    }

    pub fn restrict(&self, removed: &BTreeSet<usize>) -> Result<PartialRanking> {
        if let Some(&bad) = removed.iter().find(|&&c| c >= self.len()) {
            return invalid(format!(
                "candidate {} out of range for m={}",
                bad + 1,
                self.len()
            ));
        }
        Ok(PartialRanking {
            base: self.clone(),
            removed: removed.clone(),
        })
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.order.iter().map(|c| c + 1).join(","))
    }
}

impl Serialize for Ranking {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ranking {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(d)?;
        Ranking::from_one_based(&raw).map_err(serde::de::Error::custom)
    }
}

/// A ranking with some candidates removed from consideration; the survivors
/// keep the base ranking's relative order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRanking {
    base: Ranking,
    removed: BTreeSet<usize>,
}

impl PartialRanking {
    pub fn base(&self) -> &Ranking {
        &self.base
    }

    pub fn removed(&self) -> &BTreeSet<usize> {
        &self.removed
    }

    pub fn order(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.base
            .order
            .iter()
            .copied()
            .filter(|c| !self.removed.contains(c))
    }

    pub fn len(&self) -> usize {
        self.base.len() - self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Candidate at 0-based position `j` of the restriction.
    pub fn at(&self, j: usize) -> Option<usize> {
        self.iter().nth(j)
    }

    /// 0-based position of `candidate` within the restriction.
    pub fn position_of(&self, candidate: usize) -> Option<usize> {
        self.iter().position(|c| c == candidate)
    }
}

/// All permutations of `0..m` in lexicographic order.
pub fn all_rankings(m: usize) -> impl Iterator<Item = Ranking> {
    (0..m).permutations(m).map(|order| Ranking { order })
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Falling factorial `m (m-1) ... (m-k+1)`.
pub fn falling_factorial(m: usize, k: usize) -> u128 {
    (0..k.min(m)).map(|i| (m - i) as u128).product()
}
