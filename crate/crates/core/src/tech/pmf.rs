use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::collections::{BTreeMap, HashMap};

use super::{
    ground_truth_ranking, layered, mallows, tie_consistent_rankings, RankingTechnology, TechKind,
    TieBreak, ValueVector,
};
use crate::distance::RankDistance;
use crate::error::{check_limit, Error, Result};
use crate::exact::{self, common_denominator, ExactNumber};
use crate::perm::Ranking;

/// Default sample count for estimated (continuous-noise) pmfs.
pub const DEFAULT_ESTIMATION_SAMPLES: u64 = 1_000_000;

/// Enumeration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest `m` for which `m!`-sized pmfs (Mallows, discrete noise) are built.
    pub pmf_m: usize,
    /// Largest `m` for which continuous-noise pmfs are estimated.
    pub estimate_m: usize,
    /// Largest support of a layered technology.
    pub support_limit: u128,
    /// Largest number of joint discrete-noise outcomes enumerated.
    pub noise_outcomes: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            pmf_m: 5,
            estimate_m: 4,
            support_limit: 1_000_000,
            noise_outcomes: 10_000_000,
        }
    }
}

/// A pmf with integer weights over a common denominator. Only rankings with
/// positive probability are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    m: usize,
    rankings: Vec<Ranking>,
    weights: Vec<BigUint>,
    total: BigUint,
    index: HashMap<Ranking, usize>,
}

impl ExactPmf {
    /// Builds a pmf from unnormalized weights; duplicates are merged.
    pub fn from_weights(m: usize, entries: Vec<(Ranking, BigUint)>) -> Result<Self> {
        let mut merged: BTreeMap<Ranking, BigUint> = BTreeMap::new();
        for (r, w) in entries {
            if r.len() != m {
                return Err(Error::InvalidInput(format!(
                    "ranking {r} has length != {m}"
                )));
            }
            if !w.is_zero() {
                *merged.entry(r).or_insert_with(BigUint::zero) += w;
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidInput("pmf has no positive mass".into()));
        }
        let (rankings, weights): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
        let total = weights.iter().fold(BigUint::zero(), |a, b| a + b);
        let index = rankings
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, r)| (r, i))
            .collect();
        Ok(ExactPmf {
            m,
            rankings,
            weights,
            total,
            index,
        })
    }

    /// Builds a pmf from exact probabilities that must sum to one.
    pub fn from_probabilities(m: usize, entries: Vec<(Ranking, BigRational)>) -> Result<Self> {
        let sum: BigRational = entries.iter().map(|(_, p)| p.clone()).sum();
        if sum != BigRational::from_integer(1.into()) {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {}",
                exact::format_exact(&sum)
            )));
        }
        let den = common_denominator(entries.iter().map(|(_, p)| p));
        let weighted = entries
            .into_iter()
            .map(|(r, p)| {
                let scaled = (p * BigRational::from_integer(den.clone())).to_integer();
                let w = scaled
                    .to_biguint()
                    .ok_or_else(|| Error::InvalidInput("negative probability".into()))?;
                Ok((r, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_weights(m, weighted)
    }

    pub fn point_mass(r: Ranking) -> Self {
        let m = r.len();
        Self::from_weights(m, vec![(r, BigUint::from(1u8))]).expect("valid point mass")
    }

    pub fn uniform(m: usize, support: Vec<Ranking>) -> Result<Self> {
        Self::from_weights(
            m,
            support
                .into_iter()
                .map(|r| (r, BigUint::from(1u8)))
                .collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of rankings with positive probability.
    pub fn support_len(&self) -> usize {
        self.rankings.len()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ranking, &BigUint)> {
        self.rankings.iter().zip(&self.weights)
    }

    pub fn weight(&self, r: &Ranking) -> Option<&BigUint> {
        self.index.get(r).map(|&i| &self.weights[i])
    }

    pub fn prob(&self, r: &Ranking) -> BigRational {
        match self.weight(r) {
            Some(w) => exact::ratio_of(w, &self.total),
            None => BigRational::zero(),
        }
    }

    pub fn prob_f64(&self, r: &Ranking) -> f64 {
        exact::to_f64(&self.prob(r))
    }

    /// Sum of all probabilities, exactly.
    pub fn mass(&self) -> BigRational {
        let s = self.weights.iter().fold(BigUint::zero(), |a, b| a + b);
        exact::ratio_of(&s, &self.total)
    }

    /// The pmf after relabeling candidate `c` as `relabel[c]`.
    pub fn relabeled(&self, relabel: &[usize]) -> ExactPmf {
        ExactPmf::from_weights(
            self.m,
            self.iter()
                .map(|(r, w)| (r.relabeled(relabel), w.clone()))
                .collect(),
        )
        .expect("relabeling preserves mass")
    }

    fn cdf(&self) -> Vec<f64> {
        let total = self.total.to_f64().unwrap_or(f64::INFINITY);
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w.to_f64().unwrap_or(0.0) / total;
                acc
            })
            .collect()
    }
}

impl Serialize for ExactPmf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            ranking: &'a Ranking,
            p: ExactNumber,
        }
        let mut seq = s.serialize_seq(Some(self.rankings.len()))?;
        for (r, w) in self.iter() {
            seq.serialize_element(&Entry {
                ranking: r,
                p: ExactNumber::from(&exact::ratio_of(w, &self.total)),
            })?;
        }
        seq.end()
    }
}

/// Empirical pmf from independent draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedPmf {
    pub m: usize,
    pub samples: u64,
    pub seed: u64,
    #[serde(serialize_with = "serialize_counts")]
    pub counts: BTreeMap<Ranking, u64>,
}

fn serialize_counts<S: Serializer>(c: &BTreeMap<Ranking, u64>, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        ranking: &'a Ranking,
        count: u64,
    }
    let mut seq = s.serialize_seq(Some(c.len()))?;
    for (r, &count) in c {
        seq.serialize_element(&Entry { ranking: r, count })?;
    }
    seq.end()
}

impl EstimatedPmf {
    pub fn count(&self, r: &Ranking) -> u64 {
        self.counts.get(r).copied().unwrap_or(0)
    }

    pub fn prob(&self, r: &Ranking) -> f64 {
        self.count(r) as f64 / self.samples as f64
    }

    /// Binomial standard error of `prob(r)`.
    pub fn stderr(&self, r: &Ranking) -> f64 {
        let p = self.prob(r);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RankingPmf {
    Exact { x: ValueVector, pmf: ExactPmf },
    Estimated { x: ValueVector, pmf: EstimatedPmf },
}

impl RankingPmf {
    pub fn m(&self) -> usize {
        match self {
            RankingPmf::Exact { pmf, .. } => pmf.m(),
            RankingPmf::Estimated { pmf, .. } => pmf.m,
        }
    }

    pub fn x(&self) -> &ValueVector {
        match self {
            RankingPmf::Exact { x, .. } | RankingPmf::Estimated { x, .. } => x,
        }
    }

    pub fn prob_f64(&self, r: &Ranking) -> f64 {
        match self {
            RankingPmf::Exact { pmf, .. } => pmf.prob_f64(r),
            RankingPmf::Estimated { pmf, .. } => pmf.prob(r),
        }
    }

    pub fn as_exact(&self) -> Option<&ExactPmf> {
        match self {
            RankingPmf::Exact { pmf, .. } => Some(pmf),
            RankingPmf::Estimated { .. } => None,
        }
    }
}

/// The pmf of `tech` given `x`: exact where possible, otherwise estimated
/// from [`DEFAULT_ESTIMATION_SAMPLES`] draws with seed 0.
pub fn exact_pmf(tech: &RankingTechnology, x: &ValueVector) -> Result<RankingPmf> {
    if tech.has_exact_pmf() {
        Ok(RankingPmf::Exact {
            x: x.clone(),
            pmf: exact_pmf_with(tech, x, &Caps::default())?,
        })
    } else {
        estimate_pmf(tech, x, DEFAULT_ESTIMATION_SAMPLES, 0, &Caps::default())
    }
}

/// Exact pmf under explicit caps; fails for continuous noise.
pub fn exact_pmf_with(tech: &RankingTechnology, x: &ValueVector, caps: &Caps) -> Result<ExactPmf> {
    let m = x.len();
    match &tech.kind {
        TechKind::Mallows {
            phi,
            distance,
            tie_break,
        } => {
            check_limit(
                "m for Mallows pmf enumeration",
                m as u128,
                caps.pmf_m as u128,
            )?;
            let centres = match tie_break {
                TieBreak::Index => vec![ground_truth_ranking(x)],
                TieBreak::Uniform => tie_consistent_rankings(x),
            };
            ExactPmf::from_weights(m, mallows::weights(phi, distance, &centres, m)?)
        }
        TechKind::Table { .. } => {
            let entry = tech.table_entry(x)?;
            ExactPmf::from_probabilities(
                m,
                entry
                    .pmf
                    .iter()
                    .map(|e| (e.ranking.clone(), e.p.clone()))
                    .collect(),
            )
        }
        TechKind::Deterministic { .. } => Ok(ExactPmf::point_mass(tech.deterministic_ranking(x)?)),
        TechKind::Layered { layers } => {
            ExactPmf::uniform(m, layered::enumerate(layers, x, caps.support_limit)?)
        }
        TechKind::AdditiveNoise { noise, tie_break } => {
            let atoms = noise.discrete_atoms().ok_or_else(|| {
                Error::Unsupported(format!(
                    "{}: continuous noise has no exact pmf; use the estimated pmf",
                    tech.id
                ))
            })?;
            check_limit("m for noise pmf enumeration", m as u128, caps.pmf_m as u128)?;
            let outcomes = (atoms.len() as u128)
                .checked_pow(m as u32)
                .unwrap_or(u128::MAX);
            check_limit("joint noise outcomes", outcomes, caps.noise_outcomes)?;
            let mut acc: HashMap<Ranking, BigRational> = HashMap::new();
            for combo in (0..m).map(|_| 0..atoms.len()).multi_cartesian_product() {
                let p: BigRational = combo.iter().map(|&a| atoms[a].1.clone()).product();
                let scores: Vec<BigRational> = combo
                    .iter()
                    .enumerate()
                    .map(|(c, &a)| x.get(c) + &atoms[a].0)
                    .collect();
                let orders = match tie_break {
                    TieBreak::Index => vec![descending_index_order(&scores)],
                    TieBreak::Uniform => descending_orders(&scores),
                };
                let share = p / BigRational::from_integer((orders.len() as u64).into());
                for r in orders {
                    *acc.entry(r).or_insert_with(BigRational::zero) += &share;
                }
            }
            ExactPmf::from_probabilities(m, acc.into_iter().collect())
        }
    }
}

fn descending_index_order<T: Ord>(keys: &[T]) -> Ranking {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(a.cmp(&b)));
    Ranking::from_vec_unchecked(order)
}

/// All descending orders of `keys`, every order of each tie block.
fn descending_orders<T: Ord>(keys: &[T]) -> Vec<Ranking> {
    let base = descending_index_order(keys).into_vec();
    base.into_iter()
        .chunk_by(|&c| &keys[c])
        .into_iter()
        .map(|(_, g)| {
            let block: Vec<usize> = g.collect();
            let k = block.len();
            block.into_iter().permutations(k).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .multi_cartesian_product()
        .map(|parts| Ranking::from_vec_unchecked(parts.concat()))
        .collect()
}

/// Empirical pmf from `samples` draws on a ChaCha8 stream seeded by `seed`.
pub fn estimate_pmf(
    tech: &RankingTechnology,
    x: &ValueVector,
    samples: u64,
    seed: u64,
    caps: &Caps,
) -> Result<RankingPmf> {
    let m = x.len();
    check_limit("m for pmf estimation", m as u128, caps.estimate_m as u128)?;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let prepared = PreparedTech::new(tech, std::slice::from_ref(x), caps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Ranking, u64> = BTreeMap::new();
    for _ in 0..samples {
        *counts.entry(prepared.sample(x, &mut rng)?).or_default() += 1;
    }
    Ok(RankingPmf::Estimated {
        x: x.clone(),
        pmf: EstimatedPmf {
            m,
            samples,
            seed,
            counts,
        },
    })
}

struct CdfTable {
    rankings: Vec<Ranking>,
    cdf: Vec<f64>,
}

impl CdfTable {
    fn new(pmf: &ExactPmf) -> Self {
        CdfTable {
            rankings: pmf.rankings().to_vec(),
            cdf: pmf.cdf(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Ranking {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.rankings[i.min(self.rankings.len() - 1)].clone()
    }
}

/// Ground-truth order and its `(start, end)` tie blocks.
type Centre = (Vec<usize>, Vec<(usize, usize)>);

/// Per-value-vector sampling state.
struct PointCache {
    table: Option<CdfTable>,
    selections: Option<Vec<layered::Selection>>,
    /// Index-tie-broken ground truth and its tie blocks.
    centre: Option<Centre>,
    xf: Vec<f64>,
}

fn tie_blocks(x: &ValueVector, order: &[usize]) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x.get(order[end]) == x.get(order[start]) {
            end += 1;
        }
        if end - start > 1 {
            blocks.push((start, end));
        }
        start = end;
    }
    blocks
}

/// A technology ready for repeated sampling. Inverse-CDF tables, layer
/// selections and ground-truth orders are cached per value vector of the
/// support. Shareable across threads.
pub struct PreparedTech {
    tech: RankingTechnology,
    caps: Caps,
    index: HashMap<ValueVector, usize>,
    points: Vec<PointCache>,
}

impl PreparedTech {
    /// Prepares sampling for every vector in `support`.
    pub fn new(tech: &RankingTechnology, support: &[ValueVector], caps: &Caps) -> Result<Self> {
        tech.validate()?;
        let mut index = HashMap::new();
        let mut points = Vec::with_capacity(support.len());
        for x in support {
            if !index.contains_key(x) {
                index.insert(x.clone(), points.len());
                points.push(Self::build(tech, x, caps)?);
            }
        }
        Ok(PreparedTech {
            tech: tech.clone(),
            caps: *caps,
            index,
            points,
        })
    }

    pub fn tech(&self) -> &RankingTechnology {
        &self.tech
    }

    fn build(tech: &RankingTechnology, x: &ValueVector, caps: &Caps) -> Result<PointCache> {
        let mut cache = PointCache {
            table: None,
            selections: None,
            centre: None,
            xf: Vec::new(),
        };
        match &tech.kind {
            TechKind::Mallows { distance, .. } if *distance != RankDistance::KendallTau => {
                if x.len() > caps.pmf_m {
                    return Err(Error::Unsupported(format!(
                        "{}: sampling Mallows with {} needs m <= {} (got {})",
                        tech.id,
                        distance.name(),
                        caps.pmf_m,
                        x.len()
                    )));
                }
                cache.table = Some(CdfTable::new(&exact_pmf_with(tech, x, caps)?));
            }
            TechKind::Mallows { .. } => {
                let order = ground_truth_ranking(x).into_vec();
                let blocks = tie_blocks(x, &order);
                cache.centre = Some((order, blocks));
            }
            TechKind::Table { .. } => {
                cache.table = Some(CdfTable::new(&exact_pmf_with(tech, x, caps)?));
            }
            TechKind::Layered { layers } => cache.selections = Some(layered::select(layers, x)),
            TechKind::AdditiveNoise { .. } => cache.xf = x.to_f64(),
            TechKind::Deterministic { .. } => {}
        }
        Ok(cache)
    }

    /// Position of `x` in the prepared support.
    pub fn point_of(&self, x: &ValueVector) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &ValueVector, rng: &mut R) -> Result<Ranking> {
        match self.point_of(x) {
            Some(i) => self.sample_point(i, x, rng),
            None => self.draw(&Self::build(&self.tech, x, &self.caps)?, x, rng),
        }
    }

    /// Draw for the `point`-th support vector, which must equal `x`.
    pub fn sample_point<R: Rng + ?Sized>(
        &self,
        point: usize,
        x: &ValueVector,
        rng: &mut R,
    ) -> Result<Ranking> {
        self.draw(&self.points[point], x, rng)
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        cache: &PointCache,
        x: &ValueVector,
        rng: &mut R,
    ) -> Result<Ranking> {
        if let Some(t) = &cache.table {
            return Ok(t.draw(rng));
        }
        match &self.tech.kind {
            TechKind::Mallows { phi, tie_break, .. } => {
                let (order, blocks) = cache.centre.as_ref().expect("centre cached");
                let mut order = order.clone();
                if *tie_break == TieBreak::Uniform {
                    for &(a, b) in blocks {
                        order[a..b].shuffle(rng);
                    }
                }
                let centre = Ranking::from_vec_unchecked(order);
                Ok(mallows::sample_kendall(mallows::phi_f64(phi), &centre, rng))
            }
            TechKind::AdditiveNoise { noise, tie_break } => {
                let scores: Vec<f64> = cache.xf.iter().map(|&v| v + noise.draw(rng)).collect();
                let keys: Vec<(f64, f64)> = match tie_break {
                    TieBreak::Index => scores.iter().map(|&s| (s, 0.0)).collect(),
                    TieBreak::Uniform => scores.iter().map(|&s| (s, rng.random())).collect(),
                };
                let mut order: Vec<usize> = (0..keys.len()).collect();
                order.sort_by(|&a, &b| {
                    keys[b]
                        .0
                        .total_cmp(&keys[a].0)
                        .then(keys[b].1.total_cmp(&keys[a].1))
                        .then(a.cmp(&b))
                });
                Ok(Ranking::from_vec_unchecked(order))
            }
            TechKind::Deterministic { .. } => self.tech.deterministic_ranking(x),
            TechKind::Layered { .. } => {
                let sel = cache.selections.as_ref().expect("selections cached");
                layered::sample_selected(sel, x.len(), rng)
            }
            TechKind::Table { .. } => unreachable!("tables are sampled by inverse cdf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::RankDistance;
    use crate::exact::rat;
    use crate::tech::NoiseSpec;

    fn mallows(phi: BigRational, d: RankDistance) -> RankingTechnology {
        RankingTechnology::mallows("M", phi, d).unwrap()
    }

    fn r(v: &[usize]) -> Ranking {
        Ranking::from_one_based(v).unwrap()
    }

    #[test]
    fn mallows_kendall_half() {
        let x = ValueVector::from_ints(&[3, 2, 1]).unwrap();
        let pmf = exact_pmf_with(
            &mallows(rat(1, 2), RankDistance::KendallTau),
            &x,
            &Caps::default(),
        )
        .unwrap();
        assert_eq!(pmf.prob(&r(&[1, 2, 3])), rat(8, 21));
        assert_eq!(pmf.prob(&r(&[3, 2, 1])), rat(1, 21));
        assert_eq!(pmf.mass(), rat(1, 1));
    }

    #[test]
    fn mallows_hamming_half() {
        let x = ValueVector::from_ints(&[3, 2, 1]).unwrap();
        let pmf = exact_pmf_with(
            &mallows(rat(1, 2), RankDistance::Hamming),
            &x,
            &Caps::default(),
        )
        .unwrap();
        // weights 1/8 and 1/4 relative to the identity's 1
        assert_eq!(
            pmf.prob(&r(&[2, 3, 1])) * rat(2, 1),
            pmf.prob(&r(&[3, 2, 1]))
        );
        assert_eq!(
            pmf.prob(&r(&[1, 2, 3])),
            pmf.prob(&r(&[2, 3, 1])) * rat(8, 1)
        );
    }

    #[test]
    fn phi_one_is_uniform() {
        let x = ValueVector::from_ints(&[1, 5, 2, 2]).unwrap();
        for d in [RankDistance::Cayley, RankDistance::SpearmanRho] {
            let pmf = exact_pmf_with(&mallows(rat(1, 1), d), &x, &Caps::default()).unwrap();
            assert_eq!(pmf.support_len(), 24);
            for rk in pmf.rankings() {
                assert_eq!(pmf.prob(rk), rat(1, 24));
            }
        }
    }

    #[test]
    fn cap_exceeded() {
        let x = ValueVector::from_ints(&[6, 5, 4, 3, 2, 1]).unwrap();
        let err = exact_pmf_with(
            &mallows(rat(1, 2), RankDistance::KendallTau),
            &x,
            &Caps::default(),
        );
        assert!(matches!(err, Err(Error::ResourceLimit { .. })));
        let t = mallows(rat(1, 2), RankDistance::Hamming);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(t.sample(&x, &mut rng), Err(Error::Unsupported(_))));
        // Kendall tau samples at any m
        let t = mallows(rat(1, 2), RankDistance::KendallTau);
        assert_eq!(t.sample(&x, &mut rng).unwrap().len(), 6);
    }

    #[test]
    fn discrete_noise_exact() {
        let t = RankingTechnology::new(
            "N",
            TechKind::AdditiveNoise {
                noise: NoiseSpec::DiscreteIid {
                    support: vec![rat(0, 1), rat(2, 1)],
                    probs: vec![rat(1, 2), rat(1, 2)],
                },
                tie_break: TieBreak::Index,
            },
        )
        .unwrap();
        let x = ValueVector::from_ints(&[1, 0]).unwrap();
        let pmf = exact_pmf_with(&t, &x, &Caps::default()).unwrap();
        // scores (1,0),(1,2),(3,0),(3,2): only (1,2) reverses the order
        assert_eq!(pmf.prob(&r(&[2, 1])), rat(1, 4));
        let tied = ValueVector::from_ints(&[0, 0]).unwrap();
        let pmf = exact_pmf_with(&t, &tied, &Caps::default()).unwrap();
        assert_eq!(pmf.prob(&r(&[1, 2])), rat(3, 4));
        let t = RankingTechnology::new(
            "N",
            TechKind::AdditiveNoise {
                noise: NoiseSpec::DiscreteIid {
                    support: vec![rat(0, 1), rat(2, 1)],
                    probs: vec![rat(1, 2), rat(1, 2)],
                },
                tie_break: TieBreak::Uniform,
            },
        )
        .unwrap();
        let pmf = exact_pmf_with(&t, &tied, &Caps::default()).unwrap();
        assert_eq!(pmf.prob(&r(&[1, 2])), rat(1, 2));
    }

    #[test]
    fn relabeling_equivariance() {
        let x = ValueVector::from_ints(&[4, 1, 3, 2]).unwrap();
        let relabel = vec![2, 0, 3, 1];
        for d in [
            RankDistance::KendallTau,
            RankDistance::Hamming,
            RankDistance::SpearmanFootrule,
        ] {
            let t = mallows(rat(1, 3), d);
            let a = exact_pmf_with(&t, &x, &Caps::default())
                .unwrap()
                .relabeled(&relabel);
            let b = exact_pmf_with(&t, &x.relabeled(&relabel), &Caps::default()).unwrap();
            for rk in crate::perm::all_rankings(4) {
                assert_eq!(a.prob(&rk), b.prob(&rk));
            }
        }
    }

    #[test]
    fn noiseless_gaussian_is_ground_truth() {
        let t = RankingTechnology::new(
            "G",
            TechKind::AdditiveNoise {
                noise: NoiseSpec::Gaussian { sigma: 1e-9 },
                tie_break: TieBreak::Index,
            },
        )
        .unwrap();
        let x = ValueVector::from_ints(&[3, 2, 1]).unwrap();
        let est = estimate_pmf(&t, &x, 10_000, 4, &Caps::default()).unwrap();
        assert!(est.prob_f64(&Ranking::identity(3)) >= 0.999);
    }
}
