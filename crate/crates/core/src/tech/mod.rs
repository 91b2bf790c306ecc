//! Ranking technologies: conditional distributions over rankings given the
//! candidates' value vector.

mod layered;
mod mallows;
mod noise;
mod pmf;

pub use layered::{Arrange, Layer, Selector};
pub use noise::NoiseSpec;
pub use pmf::{
    estimate_pmf, exact_pmf, exact_pmf_with, Caps, ExactPmf, PreparedTech, RankingPmf,
    DEFAULT_ESTIMATION_SAMPLES,
};

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashSet;

use crate::distance::RankDistance;
use crate::error::{invalid, Result};
use crate::exact::{self, serde_rational, Value, Wire};
use crate::perm::Ranking;

/// Candidate values `x(0), ..., x(m-1)`; every entry is non-negative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueVector(Vec<Value>);

impl ValueVector {
    pub fn new(values: Vec<Value>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| v.is_negative()) {
            return invalid(format!(
                "negative candidate value {}",
                exact::format_exact(v)
            ));
        }
        Ok(ValueVector(values))
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        ValueVector::new(values.iter().map(|&v| exact::int(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, candidate: usize) -> &Value {
        &self.0[candidate]
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(exact::to_f64).collect()
    }

    /// The vector seen after relabeling: candidate `c` becomes `relabel[c]`.
    pub fn relabeled(&self, relabel: &[usize]) -> ValueVector {
        let mut out = self.0.clone();
        for (c, v) in self.0.iter().enumerate() {
            out[relabel[c]] = v.clone();
        }
        ValueVector(out)
    }

    /// Descending sort of the entries; identifies the relabeling orbit.
    pub fn sorted_desc(&self) -> ValueVector {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.cmp(a));
        ValueVector(v)
    }
}

impl Serialize for ValueVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        exact::serde_rational_vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ValueVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<Wire>::deserialize(d)?;
        ValueVector::new(raw.into_iter().map(|w| w.0).collect()).map_err(serde::de::Error::custom)
    }
}

/// How equal values (or equal noisy scores) are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Lower candidate index first.
    #[default]
    Index,
    /// Uniformly random order within each tie block.
    Uniform,
}

/// Candidates sorted by value, descending; ties by ascending index.
pub fn ground_truth_ranking(x: &ValueVector) -> Ranking {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x.get(b).cmp(x.get(a)).then(a.cmp(&b)));
    Ranking::from_vec_unchecked(order)
}

/// Candidates sorted by value, descending; ties in uniformly random order.
pub fn ground_truth_ranking_random<R: Rng + ?Sized>(x: &ValueVector, rng: &mut R) -> Ranking {
    let mut order = ground_truth_ranking(x).into_vec();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x.get(order[end]) == x.get(order[start]) {
            end += 1;
        }
        order[start..end].shuffle(rng);
        start = end;
    }
    Ranking::from_vec_unchecked(order)
}

/// Every ranking that sorts `x` in descending order (all tie orders).
pub fn tie_consistent_rankings(x: &ValueVector) -> Vec<Ranking> {
    let base = ground_truth_ranking(x).into_vec();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &c in &base {
        match blocks.last_mut() {
            Some(b) if x.get(b[0]) == x.get(c) => b.push(c),
            _ => blocks.push(vec![c]),
        }
    }
    blocks
        .iter()
        .map(|b| b.iter().copied().permutations(b.len()).collect::<Vec<_>>())
        .multi_cartesian_product()
        .map(|parts| Ranking::from_vec_unchecked(parts.concat()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfEntry {
    pub ranking: Ranking,
    #[serde(with = "serde_rational")]
    pub p: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub x: ValueVector,
    pub pmf: Vec<PmfEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicRule {
    pub x: ValueVector,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TechKind {
    /// `P(pi) ~ phi^d(pi, pi0)` around the ground-truth ranking.
    Mallows {
        #[serde(with = "serde_rational")]
        phi: BigRational,
        distance: RankDistance,
        #[serde(default)]
        tie_break: TieBreak,
    },
    /// Rank by `x(c) + eps(c)` descending with iid noise.
    AdditiveNoise {
        noise: NoiseSpec,
        #[serde(default)]
        tie_break: TieBreak,
    },
    /// Explicit pmf per value vector.
    Table { entries: Vec<TableEntry> },
    /// Fixed ranking per value vector, with an optional fallback.
    Deterministic {
        #[serde(default)]
        rules: Vec<DeterministicRule>,
        #[serde(default)]
        otherwise: Option<Ranking>,
    },
    /// Value-driven layout: each layer places the candidates it selects
    /// inside a window of positions; the rest are uniformly shuffled.
    Layered { layers: Vec<Layer> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTechnology {
    pub id: String,
    #[serde(flatten)]
    pub kind: TechKind,
}

impl RankingTechnology {
    pub fn new(id: impl Into<String>, kind: TechKind) -> Result<Self> {
        let t = RankingTechnology {
            id: id.into(),
            kind,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn mallows(
        id: impl Into<String>,
        phi: BigRational,
        distance: RankDistance,
    ) -> Result<Self> {
        Self::new(
            id,
            TechKind::Mallows {
                phi,
                distance,
                tie_break: TieBreak::Index,
            },
        )
    }

    pub fn constant(id: impl Into<String>, ranking: Ranking) -> Result<Self> {
        Self::new(
            id,
            TechKind::Deterministic {
                rules: vec![],
                otherwise: Some(ranking),
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return invalid("technology id must be non-empty");
        }
        match &self.kind {
            TechKind::Mallows { phi, .. } => {
                if !phi.is_positive() || phi > &BigRational::one() {
                    return invalid(format!(
                        "{}: phi must lie in (0, 1], got {}",
                        self.id,
                        exact::format_exact(phi)
                    ));
                }
            }
            TechKind::AdditiveNoise { noise, .. } => noise.validate()?,
            TechKind::Table { entries } => {
                let mut seen = HashSet::new();
                for e in entries {
                    if !seen.insert(&e.x) {
                        return invalid(format!("{}: duplicate table entry", self.id));
                    }
                    let mut total = BigRational::zero();
                    let mut rankings = HashSet::new();
                    for pe in &e.pmf {
                        if pe.ranking.len() != e.x.len() {
                            return invalid(format!("{}: ranking length mismatch", self.id));
                        }
                        if pe.p.is_negative() {
                            return invalid(format!("{}: negative probability", self.id));
                        }
                        if !rankings.insert(&pe.ranking) {
                            return invalid(format!(
                                "{}: ranking {} listed twice",
                                self.id, pe.ranking
                            ));
                        }
                        total += &pe.p;
                    }
                    if !total.is_one() {
                        return invalid(format!(
                            "{}: pmf sums to {}",
                            self.id,
                            exact::format_exact(&total)
                        ));
                    }
                }
            }
            TechKind::Deterministic { rules, otherwise } => {
                if rules.is_empty() && otherwise.is_none() {
                    return invalid(format!(
                        "{}: deterministic technology with no rules",
                        self.id
                    ));
                }
                if rules.iter().any(|r| r.ranking.len() != r.x.len()) {
                    return invalid(format!("{}: rule ranking length mismatch", self.id));
                }
            }
            TechKind::Layered { layers } => {
                if layers.iter().any(|l| l.window == 0) {
                    return invalid(format!("{}: layer window must be positive", self.id));
                }
            }
        }
        Ok(())
    }

    /// Rejects explicit rankings or value vectors of a length other than `m`.
    pub fn check_m(&self, m: usize) -> Result<()> {
        let bad = match &self.kind {
            TechKind::Table { entries } => entries.iter().any(|e| e.x.len() != m),
            TechKind::Deterministic { rules, otherwise } => {
                rules.iter().any(|r| r.x.len() != m)
                    || otherwise.as_ref().is_some_and(|r| r.len() != m)
            }
            _ => false,
        };
        if bad {
            return invalid(format!(
                "{}: sized for a different candidate count than {m}",
                self.id
            ));
        }
        Ok(())
    }

    /// Whether the technology's law given `x` commutes with relabeling
    /// candidates. `distinct_values` states that `x` has no ties, in which
    /// case index tie-breaking is irrelevant for Mallows.
    pub fn is_label_equivariant(&self, distinct_values: bool) -> bool {
        match &self.kind {
            TechKind::Mallows { tie_break, .. } => {
                distinct_values || *tie_break == TieBreak::Uniform
            }
            TechKind::Layered { .. } => true,
            TechKind::AdditiveNoise { noise, tie_break } => {
                !noise.is_discrete() || *tie_break == TieBreak::Uniform
            }
            TechKind::Table { .. } | TechKind::Deterministic { .. } => false,
        }
    }

    /// Whether an exact (rational) pmf is available.
    pub fn has_exact_pmf(&self) -> bool {
        !matches!(&self.kind, TechKind::AdditiveNoise { noise, .. } if !noise.is_discrete())
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, TechKind::Deterministic { .. })
    }

    /// One draw from the technology's ranking distribution given `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: &ValueVector, rng: &mut R) -> Result<Ranking> {
        PreparedTech::new(self, std::slice::from_ref(x), &Caps::default())?.sample(x, rng)
    }

    pub(crate) fn table_entry(&self, x: &ValueVector) -> Result<&TableEntry> {
        match &self.kind {
            TechKind::Table { entries } => entries.iter().find(|e| &e.x == x).ok_or_else(|| {
                crate::Error::InvalidInput(format!(
                    "{}: no table entry for x = {}",
                    self.id,
                    serde_json::to_string(x).unwrap_or_default()
                ))
            }),
            _ => unreachable!("table_entry on non-table technology"),
        }
    }

    pub(crate) fn deterministic_ranking(&self, x: &ValueVector) -> Result<Ranking> {
        match &self.kind {
            TechKind::Deterministic { rules, otherwise } => rules
                .iter()
                .find(|r| &r.x == x)
                .map(|r| r.ranking.clone())
                .or_else(|| otherwise.clone())
                .filter(|r| r.len() == x.len())
                .ok_or_else(|| {
                    crate::Error::InvalidInput(format!(
                        "{}: no deterministic ranking of length {} for this x",
                        self.id,
                        x.len()
                    ))
                }),
            _ => unreachable!("deterministic_ranking on non-deterministic technology"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn ground_truth_examples() {
        let x = ValueVector::from_ints(&[5, 9, 1]).unwrap();
        assert_eq!(
            ground_truth_ranking(&x),
            Ranking::from_one_based(&[2, 1, 3]).unwrap()
        );
        let x = ValueVector::from_ints(&[7, 7]).unwrap();
        assert_eq!(ground_truth_ranking(&x), Ranking::identity(2));
        let x = ValueVector::from_ints(&[0, 0, 0, 0]).unwrap();
        assert_eq!(ground_truth_ranking(&x), Ranking::identity(4));
    }

    #[test]
    fn tie_consistent_enumeration() {
        let x = ValueVector::from_ints(&[1, 3, 1, 3]).unwrap();
        let all = tie_consistent_rankings(&x);
        assert_eq!(all.len(), 4);
        assert!(all.contains(&Ranking::from_one_based(&[4, 2, 3, 1]).unwrap()));
    }

    #[test]
    fn negative_values_rejected() {
        assert!(ValueVector::new(vec![rat(-1, 2)]).is_err());
    }

    #[test]
    fn technology_json_round_trip() {
        let json = r#"{"id":"M","kind":"mallows","phi":"1/2","distance":"kendall_tau"}"#;
        let t: RankingTechnology = serde_json::from_str(json).unwrap();
        t.validate().unwrap();
        assert!(matches!(
            t.kind,
            TechKind::Mallows {
                tie_break: TieBreak::Index,
                ..
            }
        ));
        let back: RankingTechnology =
            serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(t, back);

        let json = r#"{"id":"T","kind":"table","entries":[
            {"x":[1,0],"pmf":[{"ranking":[2,1],"p":0.9},{"ranking":[1,2],"p":"1/10"}]}]}"#;
        let t: RankingTechnology = serde_json::from_str(json).unwrap();
        t.validate().unwrap();

        let json =
            r#"{"id":"N","kind":"additive_noise","noise":{"family":"gaussian","sigma":1.0}}"#;
        let t: RankingTechnology = serde_json::from_str(json).unwrap();
        t.validate().unwrap();
        assert!(!t.has_exact_pmf());
    }

    #[test]
    fn invalid_technologies() {
        assert!(RankingTechnology::mallows("M", rat(3, 2), RankDistance::KendallTau).is_err());
        assert!(RankingTechnology::mallows("M", rat(0, 1), RankDistance::KendallTau).is_err());
        let t = RankingTechnology::new(
            "T",
            TechKind::Table {
                entries: vec![TableEntry {
                    x: ValueVector::from_ints(&[1, 0]).unwrap(),
                    pmf: vec![PmfEntry {
                        ranking: Ranking::identity(2),
                        p: rat(1, 2),
                    }],
                }],
            },
        );
        assert!(t.is_err());
    }
}
