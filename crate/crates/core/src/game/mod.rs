//! The hiring game: advice spaces, profiles, selection policies and the
//! random serial dictatorship mechanism in both variants.

mod exact;
mod ic;
mod lazy;
mod mc;
mod play;
mod values;

pub use exact::{
    expected_utilities_exact, DeviationGapReport, EngineOptions, ExactEngine, GapCell, SplitReport,
    UtilityReport, DEFAULT_ATOM_BUDGET,
};
pub use ic::{ic_audit, DecisionReport, IcReport, Observation, IC_MAX_M, IC_MAX_N};
pub use mc::{expected_utilities_mc, mc_panel, Estimate, McOptions, McPanel, McUtilityReport};
pub use play::{play_once, OutcomeRecord, TechSample};
pub use values::{ValueAtom, ValueDistribution, ValueSpec};

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{HashMap, HashSet};

use crate::error::{invalid, Error, Result};
use crate::perm::Ranking;
use crate::tech::RankingTechnology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Each firm takes the top remaining candidate of its own sample.
    #[default]
    ObedienceConstrained,
    /// Each firm picks any remaining candidate through its policy.
    Unconstrained,
}

/// Serde helpers for 1-based candidate labels.
pub(crate) mod one_based {
    use super::*;

    pub fn serialize<S: Serializer>(c: &usize, s: S) -> Result<S::Ok, S::Error> {
        (c + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = usize::deserialize(d)?;
        v.checked_sub(1)
            .ok_or_else(|| serde::de::Error::custom("1-based labels start at 1"))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|c| c + 1).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
            Vec::<usize>::deserialize(d)?
                .into_iter()
                .map(|v| {
                    v.checked_sub(1)
                        .ok_or_else(|| serde::de::Error::custom("1-based labels start at 1"))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LookupEntry {
    /// Hires of the firms that acted before, in order (1-based).
    #[serde(with = "one_based::vec")]
    pub predecessor_hires: Vec<usize>,
    #[serde(with = "one_based")]
    pub pick: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Top available candidate of the firm's own sample.
    #[default]
    Obedient,
    /// First available candidate of a fixed list; obedient once the list is
    /// exhausted.
    FixedCandidatePreference {
        #[serde(with = "one_based::vec")]
        order: Vec<usize>,
    },
    /// The `q`-th available candidate of the firm's sample (1-based); the
    /// last available one when fewer than `q` remain.
    QthAvailable { q: usize },
    /// Explicit pick per predecessor-hire history; obedient otherwise.
    TableLookup { entries: Vec<LookupEntry> },
}

impl SelectionPolicy {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            SelectionPolicy::Obedient => Ok(()),
            SelectionPolicy::FixedCandidatePreference { order } => {
                if order.iter().any(|&c| c >= m) || !order.iter().all_unique() {
                    return invalid(format!(
                        "preference list {order:?} is not a list of distinct candidates"
                    ));
                }
                Ok(())
            }
            SelectionPolicy::QthAvailable { q } => {
                if *q == 0 || *q > m {
                    return invalid(format!("q = {q} outside 1..={m}"));
                }
                Ok(())
            }
            SelectionPolicy::TableLookup { entries } => {
                if entries
                    .iter()
                    .any(|e| e.pick >= m || e.predecessor_hires.iter().any(|&c| c >= m))
                {
                    return invalid("lookup entry refers to a candidate out of range");
                }
                Ok(())
            }
        }
    }

    /// The candidate picked given the firm's sample, the availability mask
    /// and the hires made so far (in order).
    pub fn pick(&self, sample: &Ranking, available: &[bool], history: &[usize]) -> Result<usize> {
        let top = || {
            sample
                .top_among(available)
                .ok_or_else(|| Error::Evaluation("no candidate left to hire".into()))
        };
        match self {
            SelectionPolicy::Obedient => top(),
            SelectionPolicy::FixedCandidatePreference { order } => {
                match order.iter().copied().find(|&c| available[c]) {
                    Some(c) => Ok(c),
                    None => top(),
                }
            }
            SelectionPolicy::QthAvailable { q } => {
                let remaining: Vec<usize> = sample
                    .as_slice()
                    .iter()
                    .copied()
                    .filter(|&c| available[c])
                    .take(*q)
                    .collect();
                remaining
                    .last()
                    .copied()
                    .ok_or_else(|| Error::Evaluation("no candidate left to hire".into()))
            }
            SelectionPolicy::TableLookup { entries } => {
                match entries.iter().find(|e| e.predecessor_hires == history) {
                    Some(e) if available[e.pick] => Ok(e.pick),
                    Some(e) => Err(Error::InvalidPolicy(format!(
                        "lookup picks candidate {} which is already hired",
                        e.pick + 1
                    ))),
                    None => top(),
                }
            }
        }
    }
}

/// What a firm may use beyond nothing: a subset of the common space and its
/// private technologies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmAdvice {
    /// Ids of the accessible common technologies; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common: Option<Vec<String>>,
    #[serde(default)]
    pub idiosyncratic: Vec<RankingTechnology>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceSpace {
    #[serde(default)]
    pub common: Vec<RankingTechnology>,
    pub firms: Vec<FirmAdvice>,
}

impl AdviceSpace {
    /// Every firm can use every technology in `common`; no private ones.
    pub fn all_common(common: Vec<RankingTechnology>, n: usize) -> Self {
        AdviceSpace {
            common,
            firms: vec![
                FirmAdvice {
                    common: None,
                    idiosyncratic: vec![],
                };
                n
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GameSpecWire {
    n: usize,
    m: usize,
    values: ValueDistribution,
    advice: AdviceSpace,
    #[serde(default)]
    mechanism: Mechanism,
}

/// A validated game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameSpecWire", into = "GameSpecWire")]
pub struct GameSpec {
    wire: GameSpecWire,
    techs: Vec<RankingTechnology>,
    index: HashMap<String, usize>,
    /// `strategies[i]`: indices into `techs` of the firm's space, common first.
    strategies: Vec<Vec<usize>>,
    common_count: usize,
}

impl From<GameSpec> for GameSpecWire {
    fn from(g: GameSpec) -> Self {
        g.wire
    }
}

impl TryFrom<GameSpecWire> for GameSpec {
    type Error = Error;

    fn try_from(w: GameSpecWire) -> Result<Self> {
        GameSpec::new(w.n, w.m, w.values, w.advice, w.mechanism)
    }
}

impl GameSpec {
    pub fn new(
        n: usize,
        m: usize,
        values: ValueDistribution,
        advice: AdviceSpace,
        mechanism: Mechanism,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return invalid("need n >= 1 and m >= 1");
        }
        if m < n {
            return invalid(format!(
                "m = {m} < n = {n}: every firm must be able to hire"
            ));
        }
        if values.m() != m {
            return invalid(format!(
                "value vectors have length {}, expected m = {m}",
                values.m()
            ));
        }
        if advice.firms.len() != n {
            return invalid(format!(
                "advice space lists {} firms, expected n = {n}",
                advice.firms.len()
            ));
        }
        let mut techs = Vec::new();
        let mut index = HashMap::new();
        fn add(
            t: &RankingTechnology,
            m: usize,
            techs: &mut Vec<RankingTechnology>,
            index: &mut HashMap<String, usize>,
        ) -> Result<usize> {
            t.validate()?;
            t.check_m(m)?;
            if index.contains_key(&t.id) {
                return invalid(format!("technology id {:?} is used twice", t.id));
            }
            index.insert(t.id.clone(), techs.len());
            techs.push(t.clone());
            Ok(techs.len() - 1)
        }
        let common: Vec<usize> = advice
            .common
            .iter()
            .map(|t| add(t, m, &mut techs, &mut index))
            .collect::<Result<_>>()?;
        let common_count = common.len();
        let mut strategies = Vec::new();
        for (i, firm) in advice.firms.iter().enumerate() {
            let mut space: Vec<usize> = match &firm.common {
                None => common.clone(),
                Some(ids) => {
                    let mut seen = HashSet::new();
                    let mut chosen = Vec::new();
                    for id in ids {
                        let k = *index
                            .get(id)
                            .filter(|&&k| k < common_count)
                            .ok_or_else(|| {
                                Error::InvalidInput(format!(
                                    "firm {} lists {id:?}, which is not a common technology",
                                    i + 1
                                ))
                            })?;
                        if seen.insert(k) {
                            chosen.push(k);
                        }
                    }
                    chosen.sort();
                    chosen
                }
            };
            for t in &firm.idiosyncratic {
                space.push(add(t, m, &mut techs, &mut index)?);
            }
            if space.is_empty() {
                return invalid(format!("firm {} has no technology to choose", i + 1));
            }
            strategies.push(space);
        }
        Ok(GameSpec {
            wire: GameSpecWire {
                n,
                m,
                values,
                advice,
                mechanism,
            },
            techs,
            index,
            strategies,
            common_count,
        })
    }

    pub fn n(&self) -> usize {
        self.wire.n
    }

    pub fn m(&self) -> usize {
        self.wire.m
    }

    pub fn values(&self) -> &ValueDistribution {
        &self.wire.values
    }

    pub fn advice(&self) -> &AdviceSpace {
        &self.wire.advice
    }

    pub fn mechanism(&self) -> Mechanism {
        self.wire.mechanism
    }

    /// A copy with a different mechanism.
    pub fn with_mechanism(&self, mechanism: Mechanism) -> GameSpec {
        let mut g = self.clone();
        g.wire.mechanism = mechanism;
        g
    }

    /// All technologies: common ones first, then each firm's private ones.
    pub fn technologies(&self) -> &[RankingTechnology] {
        &self.techs
    }

    pub fn technology(&self, id: &str) -> Option<&RankingTechnology> {
        self.index.get(id).map(|&k| &self.techs[k])
    }

    pub(crate) fn tech_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_common(&self, id: &str) -> bool {
        self.index.get(id).is_some_and(|&k| k < self.common_count)
    }

    /// Technology ids firm `i` may choose, common ones first.
    pub fn strategies(&self, firm: usize) -> Vec<&str> {
        self.strategies[firm]
            .iter()
            .map(|&k| self.techs[k].id.as_str())
            .collect()
    }

    /// Number of pure profiles (saturating).
    pub fn profile_count(&self) -> u128 {
        self.strategies
            .iter()
            .fold(1u128, |a, s| a.saturating_mul(s.len() as u128))
    }

    /// Every pure profile in lexicographic order of per-firm strategy index.
    pub fn all_profiles(&self) -> impl Iterator<Item = Profile> + '_ {
        self.strategies
            .iter()
            .map(|s| s.to_vec())
            .multi_cartesian_product()
            .map(|ks| Profile::obedient(ks.into_iter().map(|k| self.techs[k].id.clone()).collect()))
    }

    /// Everyone uses `id` (which must be accessible to all).
    pub fn symmetric_profile(&self, id: &str) -> Profile {
        Profile::obedient(vec![id.to_string(); self.n()])
    }

    pub(crate) fn resolve(&self, profile: &Profile) -> Result<Resolved> {
        let n = self.n();
        if profile.choices.len() != n {
            return invalid(format!(
                "profile has {} choices, expected {n}",
                profile.choices.len()
            ));
        }
        let mut techs = Vec::with_capacity(n);
        for (i, id) in profile.choices.iter().enumerate() {
            let k = self.tech_index(id).ok_or_else(|| {
                Error::InvalidInput(format!("unknown technology {id:?} for firm {}", i + 1))
            })?;
            if !self.strategies[i].contains(&k) {
                return invalid(format!("firm {} may not use {id:?}", i + 1));
            }
            techs.push(k);
        }
        let policies = match &profile.policies {
            None => vec![SelectionPolicy::Obedient; n],
            Some(p) => {
                if p.len() != n {
                    return invalid(format!("profile has {} policies, expected {n}", p.len()));
                }
                for pol in p {
                    pol.validate(self.m())?;
                }
                if self.mechanism() == Mechanism::ObedienceConstrained
                    && p.iter().any(|pol| *pol != SelectionPolicy::Obedient)
                {
                    return invalid(
                        "the obedience-constrained mechanism admits only obedient policies",
                    );
                }
                p.clone()
            }
        };
        Ok(Resolved { techs, policies })
    }
}

/// Technology choice (and, under the unconstrained mechanism, a selection
/// policy) for every firm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<SelectionPolicy>>,
}

impl Profile {
    pub fn obedient(choices: Vec<String>) -> Self {
        Profile {
            choices,
            policies: None,
        }
    }

    pub fn from_ids(ids: &[&str]) -> Self {
        Profile::obedient(ids.iter().map(|s| s.to_string()).collect())
    }

    /// The profile with firm `i` switched to `id`.
    pub fn with_choice(&self, firm: usize, id: &str) -> Profile {
        let mut p = self.clone();
        p.choices[firm] = id.to_string();
        p
    }

    pub fn label(&self) -> String {
        self.choices.join(",")
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// A profile mapped onto technology indices.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub techs: Vec<usize>,
    pub policies: Vec<SelectionPolicy>,
}
