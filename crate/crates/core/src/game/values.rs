//! Finite-support candidate value distributions.

use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::{self, serde_rational, serde_rational_vec};
use crate::tech::ValueVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueAtom {
    #[serde(with = "serde_rational")]
    pub p: BigRational,
    pub x: ValueVector,
}

/// Wire form of a value distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueSpec {
    /// Explicit atoms. A declared permutation invariance is verified.
    Support {
        atoms: Vec<ValueAtom>,
        #[serde(default)]
        permutation_invariant: bool,
    },
    /// Each entry's mass is spread uniformly over the distinct
    /// rearrangements of its vector.
    Exchangeable { orbits: Vec<ValueAtom> },
    /// `m` iid draws from a finite law.
    Iid {
        m: usize,
        #[serde(with = "serde_rational_vec")]
        support: Vec<BigRational>,
        #[serde(with = "serde_rational_vec")]
        probs: Vec<BigRational>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Orbit {
    mass: BigRational,
    /// Entries sorted in descending order.
    representative: ValueVector,
    size: BigUint,
}

#[derive(Debug, Clone, PartialEq)]
enum Compiled {
    Atoms(Vec<(BigRational, ValueVector)>),
    Orbits(Vec<Orbit>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ValueSpec", into = "ValueSpec")]
pub struct ValueDistribution {
    spec: ValueSpec,
    m: usize,
    permutation_invariant: bool,
    compiled: Compiled,
}

impl From<ValueDistribution> for ValueSpec {
    fn from(d: ValueDistribution) -> Self {
        d.spec
    }
}

impl TryFrom<ValueSpec> for ValueDistribution {
    type Error = Error;

    fn try_from(spec: ValueSpec) -> Result<Self> {
        ValueDistribution::new(spec)
    }
}

fn multinomial(v: &ValueVector) -> BigUint {
    let mut counts: BTreeMap<&BigRational, usize> = BTreeMap::new();
    for x in v.as_slice() {
        *counts.entry(x).or_default() += 1;
    }
    let fact = |k: usize| (1..=k).fold(BigUint::one(), |a, b| a * BigUint::from(b));
    counts.values().fold(fact(v.len()), |acc, &k| acc / fact(k))
}

fn check_masses<'a>(masses: impl Iterator<Item = &'a BigRational>) -> Result<()> {
    let mut total = BigRational::zero();
    for p in masses {
        if p.is_negative() {
            return invalid("negative probability in value distribution");
        }
        total += p;
    }
    if !total.is_one() {
        return invalid(format!(
            "value probabilities sum to {}",
            exact::format_exact(&total)
        ));
    }
    Ok(())
}

/// Advances `v` to the next lexicographic permutation; false at the last.
fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl ValueDistribution {
    pub fn new(spec: ValueSpec) -> Result<Self> {
        let (m, invariant, compiled) = match &spec {
            ValueSpec::Support {
                atoms,
                permutation_invariant,
            } => {
                let m = atoms.first().map(|a| a.x.len()).unwrap_or(0);
                if atoms.is_empty() {
                    return invalid("value support is empty");
                }
                if atoms.iter().any(|a| a.x.len() != m) {
                    return invalid("value vectors of different lengths");
                }
                check_masses(atoms.iter().map(|a| &a.p))?;
                let mut merged: BTreeMap<ValueVector, BigRational> = BTreeMap::new();
                for a in atoms.iter().filter(|a| !a.p.is_zero()) {
                    *merged.entry(a.x.clone()).or_insert_with(BigRational::zero) += &a.p;
                }
                let atoms: Vec<(BigRational, ValueVector)> =
                    merged.into_iter().map(|(x, p)| (p, x)).collect();
                if *permutation_invariant {
                    verify_closure(&atoms)?;
                }
                (m, *permutation_invariant, Compiled::Atoms(atoms))
            }
            ValueSpec::Exchangeable { orbits } => {
                let m = orbits.first().map(|a| a.x.len()).unwrap_or(0);
                if orbits.is_empty() {
                    return invalid("value support is empty");
                }
                if orbits.iter().any(|a| a.x.len() != m) {
                    return invalid("value vectors of different lengths");
                }
                check_masses(orbits.iter().map(|a| &a.p))?;
                let mut merged: BTreeMap<ValueVector, BigRational> = BTreeMap::new();
                for a in orbits.iter().filter(|a| !a.p.is_zero()) {
                    *merged
                        .entry(a.x.sorted_desc())
                        .or_insert_with(BigRational::zero) += &a.p;
                }
                (m, true, Compiled::Orbits(to_orbits(merged)))
            }
            ValueSpec::Iid { m, support, probs } => {
                if *m == 0 || support.is_empty() || support.len() != probs.len() {
                    return invalid("iid values need m >= 1 and matching support/probs");
                }
                if support.iter().any(|v| v.is_negative()) {
                    return invalid("negative value in iid support");
                }
                check_masses(probs.iter())?;
                let live: Vec<usize> = (0..support.len())
                    .filter(|&k| !probs[k].is_zero())
                    .collect();
                let mut merged: BTreeMap<ValueVector, BigRational> = BTreeMap::new();
                for combo in live.iter().copied().combinations_with_replacement(*m) {
                    let x = ValueVector::new(combo.iter().map(|&k| support[k].clone()).collect())?
                        .sorted_desc();
                    let p: BigRational = combo.iter().map(|&k| probs[k].clone()).product();
                    let mass = p * BigRational::from_integer(multinomial(&x).into());
                    *merged.entry(x).or_insert_with(BigRational::zero) += mass;
                }
                (*m, true, Compiled::Orbits(to_orbits(merged)))
            }
        };
        if m == 0 {
            return invalid("value vectors must be non-empty");
        }
        Ok(ValueDistribution {
            spec,
            m,
            permutation_invariant: invariant,
            compiled,
        })
    }

    /// Point mass on `x`.
    pub fn deterministic(x: ValueVector) -> Result<Self> {
        Self::new(ValueSpec::Support {
            atoms: vec![ValueAtom {
                p: BigRational::one(),
                x,
            }],
            permutation_invariant: false,
        })
    }

    pub fn spec(&self) -> &ValueSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_permutation_invariant(&self) -> bool {
        self.permutation_invariant
    }

    /// Number of support points (saturating).
    pub fn support_size(&self) -> u128 {
        match &self.compiled {
            Compiled::Atoms(a) => a.len() as u128,
            Compiled::Orbits(o) => o
                .iter()
                .map(|orb| orb.size.to_u128().unwrap_or(u128::MAX))
                .fold(0u128, |a, b| a.saturating_add(b)),
        }
    }

    /// Every support point with its probability, in a fixed order.
    pub fn atoms(&self, limit: u128) -> Result<Vec<(BigRational, ValueVector)>> {
        check_limit("value support size", self.support_size(), limit)?;
        match &self.compiled {
            Compiled::Atoms(a) => Ok(a.clone()),
            Compiled::Orbits(orbits) => {
                let mut out = Vec::new();
                for orb in orbits {
                    let p = &orb.mass / BigRational::from_integer(orb.size.clone().into());
                    let mut v = orb.representative.as_slice().to_vec();
                    v.sort();
                    loop {
                        out.push((p.clone(), ValueVector::new(v.clone())?));
                        if !next_permutation(&mut v) {
                            break;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// One descending-sorted representative per relabeling orbit with the
    /// orbit's total mass; `None` unless the law is permutation invariant.
    pub fn orbit_representatives(&self) -> Option<Vec<(BigRational, ValueVector)>> {
        if !self.permutation_invariant {
            return None;
        }
        Some(match &self.compiled {
            Compiled::Orbits(o) => o
                .iter()
                .map(|orb| (orb.mass.clone(), orb.representative.clone()))
                .collect(),
            Compiled::Atoms(atoms) => {
                let mut merged: BTreeMap<ValueVector, BigRational> = BTreeMap::new();
                for (p, x) in atoms {
                    *merged
                        .entry(x.sorted_desc())
                        .or_insert_with(BigRational::zero) += p;
                }
                merged.into_iter().rev().map(|(x, p)| (p, x)).collect()
            }
        })
    }

    /// Whether no support vector has two equal entries.
    pub fn all_values_distinct(&self) -> bool {
        let distinct = |x: &ValueVector| x.as_slice().iter().all_unique();
        match &self.compiled {
            Compiled::Atoms(a) => a.iter().all(|(_, x)| distinct(x)),
            Compiled::Orbits(o) => o.iter().all(|orb| distinct(&orb.representative)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ValueVector {
        match &self.compiled {
            Compiled::Atoms(atoms) => {
                let i = pick_index(atoms.iter().map(|(p, _)| p), rng);
                atoms[i].1.clone()
            }
            Compiled::Orbits(orbits) => {
                let i = pick_index(orbits.iter().map(|o| &o.mass), rng);
                let mut v = orbits[i].representative.as_slice().to_vec();
                v.shuffle(rng);
                ValueVector::new(v).expect("non-negative entries")
            }
        }
    }
}

/// Index drawn with probability proportional to the given masses.
pub(crate) fn pick_index<'a, R: Rng + ?Sized>(
    masses: impl Iterator<Item = &'a BigRational>,
    rng: &mut R,
) -> usize {
    let masses: Vec<f64> = masses.map(exact::to_f64).collect();
    let total: f64 = masses.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in masses.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    masses.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn to_orbits(merged: BTreeMap<ValueVector, BigRational>) -> Vec<Orbit> {
    merged
        .into_iter()
        .rev()
        .map(|(x, mass)| Orbit {
            size: multinomial(&x),
            representative: x,
            mass,
        })
        .collect()
}

/// Every rearrangement of every atom is present with equal mass.
fn verify_closure(atoms: &[(BigRational, ValueVector)]) -> Result<()> {
    let mut groups: BTreeMap<ValueVector, Vec<&BigRational>> = BTreeMap::new();
    for (p, x) in atoms {
        groups.entry(x.sorted_desc()).or_default().push(p);
    }
    for (rep, masses) in groups {
        let size = multinomial(&rep);
        if BigUint::from(masses.len()) != size || masses.iter().any(|p| *p != masses[0]) {
            return invalid(format!(
                "support declared permutation invariant is not closed under relabeling \
                 (orbit of {} has {} of {} rearrangements or unequal masses)",
                serde_json::to_string(&rep).unwrap_or_default(),
                masses.len(),
                size
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn vv(v: &[i64]) -> ValueVector {
        ValueVector::from_ints(v).unwrap()
    }

    #[test]
    fn exchangeable_expands_to_distinct_rearrangements() {
        let d = ValueDistribution::new(ValueSpec::Exchangeable {
            orbits: vec![ValueAtom {
                p: rat(1, 1),
                x: vv(&[0, 1, 0, 2]),
            }],
        })
        .unwrap();
        assert_eq!(d.support_size(), 12);
        let atoms = d.atoms(100).unwrap();
        assert_eq!(atoms.len(), 12);
        assert!(atoms.iter().all(|(p, _)| *p == rat(1, 12)));
        assert_eq!(atoms.iter().map(|(_, x)| x).unique().count(), 12);
        let reps = d.orbit_representatives().unwrap();
        assert_eq!(reps, vec![(rat(1, 1), vv(&[2, 1, 0, 0]))]);
    }

    #[test]
    fn iid_orbits_carry_multinomial_mass() {
        let d = ValueDistribution::new(ValueSpec::Iid {
            m: 3,
            support: vec![int(0), int(1)],
            probs: vec![rat(1, 3), rat(2, 3)],
        })
        .unwrap();
        let reps = d.orbit_representatives().unwrap();
        let total: BigRational = reps.iter().map(|(p, _)| p.clone()).sum();
        assert_eq!(total, rat(1, 1));
        let one_one = reps.iter().find(|(_, x)| *x == vv(&[1, 1, 0])).unwrap();
        assert_eq!(one_one.0, rat(12, 27));
        let atoms = d.atoms(100).unwrap();
        assert_eq!(atoms.len(), 8);
        assert_eq!(
            atoms.iter().find(|(_, x)| *x == vv(&[0, 1, 1])).unwrap().0,
            rat(4, 27)
        );
    }

    #[test]
    fn closure_check() {
        let half = |x: &[i64]| ValueAtom {
            p: rat(1, 2),
            x: vv(x),
        };
        let ok = ValueSpec::Support {
            atoms: vec![half(&[1, 0]), half(&[0, 1])],
            permutation_invariant: true,
        };
        assert!(ValueDistribution::new(ok).is_ok());
        let bad = ValueSpec::Support {
            atoms: vec![half(&[1, 0]), half(&[1, 1])],
            permutation_invariant: true,
        };
        assert!(ValueDistribution::new(bad).is_err());
        let uneven = ValueSpec::Support {
            atoms: vec![
                ValueAtom {
                    p: rat(1, 3),
                    x: vv(&[1, 0]),
                },
                ValueAtom {
                    p: rat(2, 3),
                    x: vv(&[0, 1]),
                },
            ],
            permutation_invariant: true,
        };
        assert!(ValueDistribution::new(uneven).is_err());
    }

    #[test]
    fn masses_must_sum_to_one() {
        let spec = ValueSpec::Support {
            atoms: vec![ValueAtom {
                p: rat(1, 2),
                x: vv(&[1]),
            }],
            permutation_invariant: false,
        };
        assert!(ValueDistribution::new(spec).is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"kind":"iid","m":2,"support":[0,"1/2"],"probs":["1/2","1/2"]}"#;
        let d: ValueDistribution = serde_json::from_str(json).unwrap();
        assert!(d.is_permutation_invariant());
        let back: ValueDistribution =
            serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn permutation_iterator() {
        let mut v = vec![0, 1, 1];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
    }
}
