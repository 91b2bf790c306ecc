//! Pure equilibria, dominance, social optimum, price of anarchy and the
//! smoothness inequality over a game's finite profile space.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::HashMap;

use crate::consistency::{measure_delta, DeltaReport};
use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::{self, serde_rational, serde_rational_vec};
use crate::game::{mc_panel, EngineOptions, ExactEngine, GameSpec, McOptions, McPanel, Profile};
use crate::tech::{Caps, ValueVector};

/// Default cap on the number of pure profiles scanned.
pub const DEFAULT_PROFILE_CAP: u128 = 10_000;

/// Exact utilities of every pure profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityTable {
    pub profiles: Vec<Profile>,
    #[serde(with = "rows")]
    pub utilities: Vec<Vec<BigRational>>,
    #[serde(skip)]
    index: HashMap<Vec<String>, usize>,
}

mod rows {
    use super::*;
    use serde::Serializer;

    #[derive(Serialize)]
    struct Row(#[serde(with = "serde_rational_vec")] Vec<BigRational>);

    pub fn serialize<S: Serializer>(v: &[Vec<BigRational>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|r| Row(r.clone()))
            .collect::<Vec<_>>()
            .serialize(s)
    }
}

impl UtilityTable {
    /// Evaluates every profile exactly; fails past `cap` profiles.
    pub fn exact(engine: &ExactEngine, cap: u128) -> Result<Self> {
        let spec = engine.spec();
        check_limit("pure profiles", spec.profile_count(), cap)?;
        let mut profiles = Vec::new();
        let mut utilities = Vec::new();
        for p in spec.all_profiles() {
            utilities.push(engine.utilities(&p)?.utilities);
            profiles.push(p);
        }
        Ok(Self::from_parts(profiles, utilities))
    }

    pub fn from_parts(profiles: Vec<Profile>, utilities: Vec<Vec<BigRational>>) -> Self {
        let index = profiles
            .iter()
            .enumerate()
            .map(|(k, p)| (p.choices.clone(), k))
            .collect();
        UtilityTable {
            profiles,
            utilities,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn lookup(&self, profile: &Profile) -> Option<&[BigRational]> {
        self.index
            .get(&profile.choices)
            .map(|&k| self.utilities[k].as_slice())
    }

    fn get(&self, profile: &Profile) -> Result<&[BigRational]> {
        self.lookup(profile)
            .ok_or_else(|| Error::InvalidInput(format!("profile {profile} is not in the table")))
    }

    pub fn social_welfare(&self, profile: &Profile) -> Result<BigRational> {
        Ok(self.get(profile)?.iter().sum())
    }
}

/// `max over s'_i of u_i(s'_i, s_-i) - u_i(s)` with a maximising strategy.
pub fn best_response_gap(
    spec: &GameSpec,
    table: &UtilityTable,
    profile: &Profile,
    firm: usize,
) -> Result<(BigRational, String)> {
    let here = table.get(profile)?[firm].clone();
    let mut best = (BigRational::zero(), profile.choices[firm].clone());
    for id in spec.strategies(firm) {
        let u = &table.get(&profile.with_choice(firm, id))?[firm];
        let gap = u - &here;
        if gap > best.0 {
            best = (gap, id.to_string());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashEntry {
    pub profile: Profile,
    #[serde(with = "serde_rational_vec")]
    pub gaps: Vec<BigRational>,
    #[serde(with = "serde_rational")]
    pub social_welfare: BigRational,
}

/// Every pure profile whose best-response gaps are all at most `epsilon`.
pub fn find_pure_nash(
    spec: &GameSpec,
    table: &UtilityTable,
    epsilon: &BigRational,
) -> Result<Vec<NashEntry>> {
    let mut out = Vec::new();
    for p in &table.profiles {
        let gaps = (0..spec.n())
            .map(|i| best_response_gap(spec, table, p, i).map(|g| g.0))
            .collect::<Result<Vec<_>>>()?;
        if gaps.iter().all(|g| g <= epsilon) {
            out.push(NashEntry {
                profile: p.clone(),
                gaps,
                social_welfare: table.social_welfare(p)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "technology", rename_all = "snake_case")]
pub enum Dominance {
    Strict(String),
    Weak(String),
    None,
}

/// Whether some technology dominates all others for `firm` against every
/// opponent sub-profile. Weak dominance needs a strict gain somewhere
/// against each alternative; a firm with one technology has it weakly.
pub fn dominant_strategy(spec: &GameSpec, table: &UtilityTable, firm: usize) -> Result<Dominance> {
    let ids = spec.strategies(firm);
    if ids.len() == 1 {
        return Ok(Dominance::Weak(ids[0].to_string()));
    }
    // opponent sub-profiles: profiles where firm plays its first strategy
    let others: Vec<&Profile> = table
        .profiles
        .iter()
        .filter(|p| p.choices[firm] == ids[0])
        .collect();
    let mut weak = None;
    for t in &ids {
        let mut strict = true;
        let mut weakly = true;
        let mut somewhere = vec![false; ids.len()];
        for p in &others {
            let ut = &table.get(&p.with_choice(firm, t))?[firm];
            for (k, alt) in ids.iter().enumerate().filter(|(_, a)| *a != t) {
                let ua = &table.get(&p.with_choice(firm, alt))?[firm];
                if ut <= ua {
                    strict = false;
                }
                if ut < ua {
                    weakly = false;
                }
                if ut > ua {
                    somewhere[k] = true;
                }
            }
        }
        if strict {
            return Ok(Dominance::Strict(t.to_string()));
        }
        let beats_all = ids.iter().enumerate().all(|(k, a)| a == t || somewhere[k]);
        if weakly && beats_all && weak.is_none() {
            weak = Some(t.to_string());
        }
    }
    Ok(weak.map_or(Dominance::None, Dominance::Weak))
}

/// Profile of maximal welfare; ties go to the lexicographically smallest
/// vector of technology ids.
pub fn social_optimum(table: &UtilityTable) -> Result<(Profile, BigRational)> {
    let mut best: Option<(Profile, BigRational)> = None;
    for p in &table.profiles {
        let sw = table.social_welfare(p)?;
        let better = match &best {
            None => true,
            Some((bp, bsw)) => sw > *bsw || (sw == *bsw && p.choices < bp.choices),
        };
        if better {
            best = Some((p.clone(), sw));
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no profile to optimise over".into()))
}

/// Value vectors on which the space's consistency is measured: orbit
/// representatives when every technology commutes with relabeling.
pub fn delta_points(spec: &GameSpec, limit: u128) -> Result<Vec<ValueVector>> {
    let values = spec.values();
    let distinct = values.all_values_distinct();
    let equivariant = spec
        .technologies()
        .iter()
        .all(|t| t.is_label_equivariant(distinct));
    if equivariant {
        if let Some(reps) = values.orbit_representatives() {
            return Ok(reps.into_iter().map(|(_, x)| x).collect());
        }
    }
    Ok(values.atoms(limit)?.into_iter().map(|(_, x)| x).collect())
}

/// `delta*` of the game's whole advice space over its value support.
pub fn game_delta(spec: &GameSpec, caps: &Caps) -> Result<DeltaReport> {
    let xs = delta_points(spec, caps.support_limit)?;
    measure_delta(spec.technologies(), &xs, caps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub pure_nash: Vec<NashEntry>,
    pub dominant_strategies: Vec<Dominance>,
    pub social_optimum: Profile,
    #[serde(with = "serde_rational")]
    pub optimal_welfare: BigRational,
    #[serde(
        with = "opt_rational",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub worst_ne_welfare: Option<BigRational>,
    /// Absent when no pure equilibrium exists.
    #[serde(
        with = "opt_rational",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub poa: Option<BigRational>,
    pub method: String,
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    #[serde(
        with = "opt_rational",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub delta_star: Option<BigRational>,
    /// `1 + 1/(1 - delta*)^2`; absent when unbounded or not measured.
    #[serde(
        with = "opt_rational",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub bound: Option<BigRational>,
    /// Some equilibrium has welfare below `SW* / bound`.
    pub bound_violated: bool,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => serde_rational::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Ok(Option::<exact::Wire>::deserialize(d)?.map(|w| w.0))
    }
}

/// Full exact pipeline: equilibria, dominance, optimum and the price of
/// anarchy, checked against the bound implied by `delta` when given.
pub fn price_of_anarchy(
    spec: &GameSpec,
    table: &UtilityTable,
    delta: Option<&DeltaReport>,
) -> Result<EquilibriumReport> {
    let epsilon = BigRational::zero();
    let pure_nash = find_pure_nash(spec, table, &epsilon)?;
    let dominant_strategies = (0..spec.n())
        .map(|i| dominant_strategy(spec, table, i))
        .collect::<Result<Vec<_>>>()?;
    let (social_optimum, optimal_welfare) = social_optimum(table)?;
    let worst_ne_welfare = pure_nash.iter().map(|e| e.social_welfare.clone()).min();
    let poa = worst_ne_welfare.as_ref().and_then(|w| {
        if w.is_zero() {
            None
        } else {
            Some(&optimal_welfare / w)
        }
    });
    let bound = delta.and_then(|d| d.bound.clone());
    let bound_violated = match &bound {
        Some(b) => pure_nash
            .iter()
            .any(|e| &e.social_welfare * b < optimal_welfare),
        None => false,
    };
    Ok(EquilibriumReport {
        pure_nash,
        dominant_strategies,
        social_optimum,
        optimal_welfare,
        worst_ne_welfare,
        poa,
        method: "exact".into(),
        epsilon,
        delta_star: delta.map(|d| d.delta_star.clone()),
        bound,
        bound_violated,
    })
}

/// Convenience: table, `delta*` and the full report for a game.
pub fn analyze_exact(
    spec: &GameSpec,
    options: EngineOptions,
    cap: u128,
) -> Result<(UtilityTable, DeltaReport, EquilibriumReport)> {
    let engine = ExactEngine::new(spec, options)?;
    let table = UtilityTable::exact(&engine, cap)?;
    let delta = game_delta(spec, &options.caps)?;
    let report = price_of_anarchy(spec, &table, Some(&delta))?;
    Ok((table, delta, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessFailure {
    pub s: Profile,
    pub t: Profile,
    /// `sum_i u_i(t_i, s_-i) - (SW(t) - SW(s))`, negative on failure.
    #[serde(with = "serde_rational")]
    pub slack: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub pairs_checked: usize,
    pub passed: bool,
    #[serde(with = "serde_rational")]
    pub min_slack: BigRational,
    pub failures: Vec<SmoothnessFailure>,
}

/// Checks `sum_i u_i(t_i, s_-i) >= SW(t) - SW(s)` for all ordered pairs.
pub fn smoothness_check(table: &UtilityTable) -> Result<SmoothnessReport> {
    let mut min_slack: Option<BigRational> = None;
    let mut failures = Vec::new();
    let mut pairs = 0;
    let sws: Vec<BigRational> = table.utilities.iter().map(|u| u.iter().sum()).collect();
    for (a, s) in table.profiles.iter().enumerate() {
        for (b, t) in table.profiles.iter().enumerate() {
            pairs += 1;
            let mut lhs = BigRational::zero();
            for i in 0..s.choices.len() {
                lhs += &table.get(&s.with_choice(i, &t.choices[i]))?[i];
            }
            let slack = lhs - (&sws[b] - &sws[a]);
            if slack < BigRational::zero() {
                failures.push(SmoothnessFailure {
                    s: s.clone(),
                    t: t.clone(),
                    slack: slack.clone(),
                });
            }
            if min_slack.as_ref().is_none_or(|m| slack < *m) {
                min_slack = Some(slack);
            }
        }
    }
    Ok(SmoothnessReport {
        pairs_checked: pairs,
        passed: failures.is_empty(),
        min_slack: min_slack.unwrap_or_else(BigRational::one),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McVerdict {
    /// Every deviation gain has its upper confidence bound at most epsilon.
    Verified,
    /// Some deviation gain has its lower confidence bound above epsilon.
    NotNash,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationGain {
    pub firm: usize,
    pub technology: String,
    pub mean: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNashReport {
    pub profile: Profile,
    pub confidence: f64,
    pub epsilon: f64,
    /// One-sided normal quantile after Bonferroni over all deviations.
    pub z: f64,
    pub deviations: Vec<DeviationGain>,
    pub verdict: McVerdict,
    pub social_welfare: f64,
    pub social_welfare_stderr: f64,
}

/// Statistical epsilon-equilibrium check of `profile`: every unilateral
/// deviation is simulated on the same draws and its paired gain bounded.
pub fn mc_nash_check(
    spec: &GameSpec,
    profile: &Profile,
    options: &McOptions,
    confidence: f64,
    epsilon: f64,
) -> Result<(McNashReport, McPanel)> {
    if !(0.0..1.0).contains(&confidence) {
        return invalid("confidence must lie in [0, 1)");
    }
    let mut profiles = vec![profile.clone()];
    let mut labels = Vec::new();
    for i in 0..spec.n() {
        for id in spec.strategies(i) {
            if id != profile.choices[i] {
                profiles.push(profile.with_choice(i, id));
                labels.push((i, id.to_string()));
            }
        }
    }
    let panel = mc_panel(spec, &profiles, options)?;
    let k = labels.len().max(1) as f64;
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / k);
    let deviations: Vec<DeviationGain> = labels
        .iter()
        .enumerate()
        .map(|(j, (i, id))| {
            let d = panel.differences[j + 1][*i];
            DeviationGain {
                firm: i + 1,
                technology: id.clone(),
                mean: d.mean,
                stderr: d.stderr,
                lower: d.mean - z * d.stderr,
                upper: d.mean + z * d.stderr,
            }
        })
        .collect();
    let verdict = if deviations.iter().all(|d| d.upper <= epsilon) {
        McVerdict::Verified
    } else if deviations.iter().any(|d| d.lower > epsilon) {
        McVerdict::NotNash
    } else {
        McVerdict::Inconclusive
    };
    let sw = panel.reports[0].social_welfare;
    Ok((
        McNashReport {
            profile: profile.clone(),
            confidence,
            epsilon,
            z,
            deviations,
            verdict,
            social_welfare: sw.mean,
            social_welfare_stderr: sw.stderr,
        },
        panel,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPoaReport {
    pub nash: McNashReport,
    pub optimum: Profile,
    pub optimal_welfare: f64,
    pub optimal_welfare_stderr: f64,
    pub poa: f64,
    /// Ratio interval from the two welfare confidence intervals.
    pub poa_interval: (f64, f64),
    pub method: String,
}

/// Price of anarchy estimated by simulation from a given equilibrium
/// candidate and a given optimum candidate. Epsilon defaults to a
/// thousandth of the optimum's estimated welfare.
pub fn mc_price_of_anarchy(
    spec: &GameSpec,
    equilibrium: &Profile,
    optimum: &Profile,
    options: &McOptions,
    confidence: f64,
    epsilon: Option<f64>,
) -> Result<McPoaReport> {
    let opt_panel = mc_panel(spec, std::slice::from_ref(optimum), options)?;
    let opt = opt_panel.reports[0].social_welfare;
    let eps = epsilon.unwrap_or(1e-3 * opt.mean);
    let (nash, _) = mc_nash_check(spec, equilibrium, options, confidence, eps)?;
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let ne_lo = nash.social_welfare - z * nash.social_welfare_stderr;
    let ne_hi = nash.social_welfare + z * nash.social_welfare_stderr;
    let opt_lo = opt.mean - z * opt.stderr;
    let opt_hi = opt.mean + z * opt.stderr;
    Ok(McPoaReport {
        poa: opt.mean / nash.social_welfare,
        poa_interval: (
            opt_lo / ne_hi,
            if ne_lo > 0.0 {
                opt_hi / ne_lo
            } else {
                f64::INFINITY
            },
        ),
        optimum: optimum.clone(),
        optimal_welfare: opt.mean,
        optimal_welfare_stderr: opt.stderr,
        method: format!("mc({confidence})"),
        nash,
    })
}

/// One row of a sweep summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub delta_star: String,
    pub sw_star: f64,
    pub worst_ne_sw: Option<f64>,
    pub poa: Option<f64>,
    pub bound: Option<f64>,
    pub method: String,
}

impl SummaryRow {
    pub fn from_report(instance: &str, spec: &GameSpec, report: &EquilibriumReport) -> Self {
        SummaryRow {
            instance: instance.to_string(),
            n: spec.n(),
            m: spec.m(),
            delta_star: report
                .delta_star
                .as_ref()
                .map(exact::format_exact)
                .unwrap_or_default(),
            sw_star: exact::to_f64(&report.optimal_welfare),
            worst_ne_sw: report.worst_ne_welfare.as_ref().map(exact::to_f64),
            poa: report.poa.as_ref().map(exact::to_f64),
            bound: report.bound.as_ref().map(exact::to_f64),
            method: report.method.clone(),
        }
    }
}
