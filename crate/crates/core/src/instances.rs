//! Instance generators: the tight and linear price-of-anarchy families, the
//! deviation counterexample, incentive counterexamples and random games.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::distance::RankDistance;
use crate::equilibrium::{
    dominant_strategy, game_delta, mc_nash_check, Dominance, McVerdict, UtilityTable,
};
use crate::error::{invalid, Error, Result};
use crate::exact::{format_exact, int, rat, to_f64};
use crate::game::{
    ic_audit, AdviceSpace, EngineOptions, ExactEngine, FirmAdvice, GameSpec, McOptions, Mechanism,
    Profile, ValueAtom, ValueDistribution, ValueSpec,
};
use crate::perm::Ranking;
use crate::tech::{
    Arrange, Layer, PmfEntry, RankingTechnology, Selector, TableEntry, TechKind, TieBreak,
    ValueVector,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verification {
    Verified {
        method: String,
    },
    Unverified {
        reason: String,
    },
    /// Generated without any numerical re-check.
    Unchecked,
}

/// A generated game with the profiles its claims are about and the
/// outcome of re-checking those claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub spec: GameSpec,
    /// How the instance is built.
    pub notes: Vec<String>,
    /// Named profiles (e.g. "equilibrium", "optimum").
    pub profiles: BTreeMap<String, Profile>,
    pub verification: Verification,
    /// Quantities measured while verifying, as exact strings or decimals.
    pub measured: BTreeMap<String, String>,
}

impl InstanceDescriptor {
    pub fn is_verified(&self) -> bool {
        matches!(self.verification, Verification::Verified { .. })
    }

    pub fn profile(&self, name: &str) -> Result<&Profile> {
        self.profiles
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("{}: no profile named {name:?}", self.name)))
    }
}

/// How generators re-check their claims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    /// Largest firm count checked by exact enumeration.
    pub exact_max_n: usize,
    pub engine: EngineOptions,
    pub mc: McOptions,
    pub confidence: f64,
    /// Skip verification entirely.
    pub skip: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            exact_max_n: 3,
            engine: EngineOptions::default(),
            mc: McOptions::new(1_000_000, 0),
            confidence: 0.95,
            skip: false,
        }
    }
}

fn layered(id: &str, layers: Vec<Layer>) -> Result<RankingTechnology> {
    RankingTechnology::new(id, TechKind::Layered { layers })
}

/// Ranking with `top` first and the rest in index order.
fn top_first(top: usize, m: usize) -> Result<Ranking> {
    let mut order = vec![top];
    order.extend((0..m).filter(|&c| c != top));
    Ranking::new(order)
}

/// Tight family: `2^n` candidates, a random pair valued `{1, v}` and the
/// rest 0. `A` puts the value-1 candidate first; `A'` puts both valued
/// candidates somewhere in the first `n` positions. Everyone on `A` is an
/// equilibrium while everyone on `A'` doubles welfare as `n` grows.
/// `v = (n-1)/(n+1) * (1 - eta)`.
pub fn gen_tight_poa(
    n: usize,
    eta: &BigRational,
    verify: &VerifyOptions,
) -> Result<InstanceDescriptor> {
    if n < 2 {
        return invalid("the tight family needs n >= 2");
    }
    if *eta <= BigRational::zero() || *eta >= BigRational::one() {
        return invalid("eta must lie in (0, 1)");
    }
    if n > 20 {
        return invalid("the tight family has 2^n candidates; n <= 20 supported");
    }
    let m = 1usize << n;
    let v = rat(n as i64 - 1, n as i64 + 1) * (BigRational::one() - eta);
    let mut x = vec![BigRational::zero(); m];
    x[0] = BigRational::one();
    x[1] = v.clone();
    let values = ValueDistribution::new(ValueSpec::Exchangeable {
        orbits: vec![ValueAtom {
            p: BigRational::one(),
            x: ValueVector::new(x)?,
        }],
    })?;
    let a = layered(
        "A",
        vec![Layer {
            select: Selector::Equal(BigRational::one()),
            window: 1,
            arrange: Arrange::Uniform,
        }],
    )?;
    let a2 = layered(
        "A'",
        vec![Layer {
            select: Selector::Positive,
            window: n,
            arrange: Arrange::Uniform,
        }],
    )?;
    let spec = GameSpec::new(
        n,
        m,
        values,
        AdviceSpace::all_common(vec![a, a2], n),
        Mechanism::ObedienceConstrained,
    )?;
    let mut d = InstanceDescriptor {
        name: format!("tight-poa-n{n}"),
        parameters: BTreeMap::from([
            ("n".into(), n.to_string()),
            ("eta".into(), format_exact(eta)),
            ("v".into(), format_exact(&v)),
        ]),
        notes: vec![
            "values: a uniformly random pair of candidates gets {1, v}, all others 0".into(),
            "A: value-1 candidate first, the rest uniformly shuffled".into(),
            "A': both non-zero candidates in uniformly random slots among the first n, the rest uniformly shuffled".into(),
            format!("v = (n-1)/(n+1) * (1 - eta) = {}", format_exact(&v)),
        ],
        profiles: BTreeMap::from([
            ("equilibrium".into(), spec.symmetric_profile("A")),
            ("optimum".into(), spec.symmetric_profile("A'")),
        ]),
        spec,
        verification: Verification::Unchecked,
        measured: BTreeMap::new(),
    };
    d.measured.insert(
        "optimal_welfare_claimed".into(),
        format_exact(&(BigRational::one() + &v)),
    );
    if verify.skip {
        return Ok(d);
    }
    let eq = d.profile("equilibrium")?.clone();
    let opt = d.profile("optimum")?.clone();
    if n <= verify.exact_max_n {
        let engine = ExactEngine::new(&d.spec, verify.engine)?;
        let base = engine.utilities(&eq)?;
        let mut worst_gap: Option<BigRational> = None;
        for i in 0..n {
            let dev = engine.utilities(&eq.with_choice(i, "A'"))?;
            let gap = &dev.utilities[i] - &base.utilities[i];
            if worst_gap.as_ref().is_none_or(|g| gap > *g) {
                worst_gap = Some(gap);
            }
        }
        let gap = worst_gap.expect("n >= 2");
        let sw_opt = engine.utilities(&opt)?.social_welfare;
        d.measured.insert(
            "equilibrium_welfare".into(),
            format_exact(&base.social_welfare),
        );
        d.measured
            .insert("optimal_welfare".into(), format_exact(&sw_opt));
        d.measured
            .insert("max_deviation_gain".into(), format_exact(&gap));
        d.measured.insert(
            "welfare_ratio".into(),
            format!("{:.6}", to_f64(&(&sw_opt / &base.social_welfare))),
        );
        d.verification = if gap > BigRational::zero() {
            Verification::Unverified {
                reason: format!("deviating to A' gains {}", format_exact(&gap)),
            }
        } else if sw_opt != BigRational::one() + &v {
            Verification::Unverified {
                reason: format!("SW(A'^n) = {} differs from 1 + v", format_exact(&sw_opt)),
            }
        } else {
            Verification::Verified {
                method: "exact".into(),
            }
        };
    } else {
        let (nash, _) = mc_nash_check(&d.spec, &eq, &verify.mc, verify.confidence, 0.0)?;
        let worst = nash
            .deviations
            .iter()
            .map(|g| g.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        d.measured.insert(
            "equilibrium_welfare".into(),
            format!("{:.6}", nash.social_welfare),
        );
        d.measured
            .insert("max_deviation_gain_ucb".into(), format!("{worst:.6}"));
        d.verification = match nash.verdict {
            McVerdict::Verified => Verification::Verified {
                method: format!("mc({}, {} samples)", verify.confidence, verify.mc.samples),
            },
            other => Verification::Unverified {
                reason: format!(
                    "simulated equilibrium check: {other:?}, worst gain ucb {worst:.6}"
                ),
            },
        };
    }
    Ok(d)
}

/// `a_j = 1 + j(j-1)/(n-j+1) - (j-1)(j-2)/(n-j+2) - eps/n^2`, j = 1..n.
pub fn linear_sequence(n: usize, eps: &BigRational) -> Vec<BigRational> {
    let nn = n as i64;
    let shift = eps / int(nn * nn);
    (1..=nn)
        .map(|j| {
            BigRational::one() + rat(j * (j - 1), nn - j + 1)
                - rat((j - 1) * (j - 2), nn - j + 2)
                - &shift
        })
        .collect()
}

/// Linear family: `2n` candidates holding one value `n`, the sequence
/// `a_1..a_n` and `n - 1` zeros, shuffled. The common `A` puts the
/// value-`n` candidate first and zeros after it; each firm's private `H_i`
/// puts the sequence values first in increasing order. `A` is strictly
/// dominant but everyone on `H` earns far more.
pub fn gen_linear_poa(
    n: usize,
    eps: &BigRational,
    verify: &VerifyOptions,
) -> Result<InstanceDescriptor> {
    if n < 2 {
        return invalid("the linear family needs n >= 2");
    }
    if *eps <= BigRational::zero() {
        return invalid("eps must be positive");
    }
    let m = 2 * n;
    let a = linear_sequence(n, eps);
    let nv = int(n as i64);
    if a.iter()
        .any(|v| v.is_zero() || *v == nv || *v < BigRational::zero())
    {
        return invalid("eps too large: sequence values must be positive and differ from n");
    }
    let mut x = vec![nv.clone()];
    x.extend(a.iter().cloned());
    x.extend(std::iter::repeat_n(BigRational::zero(), n - 1));
    let values = ValueDistribution::new(ValueSpec::Exchangeable {
        orbits: vec![ValueAtom {
            p: BigRational::one(),
            x: ValueVector::new(x)?,
        }],
    })?;
    let common = layered(
        "A",
        vec![
            Layer {
                select: Selector::Equal(nv.clone()),
                window: 1,
                arrange: Arrange::Uniform,
            },
            Layer {
                select: Selector::Zero,
                window: n - 1,
                arrange: Arrange::Uniform,
            },
        ],
    )?;
    let firms = (1..=n)
        .map(|i| {
            Ok(FirmAdvice {
                common: None,
                idiosyncratic: vec![layered(
                    &format!("H{i}"),
                    vec![Layer {
                        select: Selector::OneOf(a.clone()),
                        window: n,
                        arrange: Arrange::Ascending,
                    }],
                )?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = GameSpec::new(
        n,
        m,
        values,
        AdviceSpace {
            common: vec![common],
            firms,
        },
        Mechanism::ObedienceConstrained,
    )?;
    let all_h = Profile::obedient((1..=n).map(|i| format!("H{i}")).collect());
    let mut d = InstanceDescriptor {
        name: format!("linear-poa-n{n}"),
        parameters: BTreeMap::from([
            ("n".into(), n.to_string()),
            ("eps".into(), format_exact(eps)),
        ]),
        notes: vec![
            "values: one candidate worth n, n candidates worth a_1..a_n, n-1 zeros, uniformly shuffled".into(),
            "a_j = 1 + j(j-1)/(n-j+1) - (j-1)(j-2)/(n-j+2) - eps/n^2".into(),
            "A: value-n candidate first, then the zeros, the rest uniformly shuffled".into(),
            "H_i: the a-valued candidates first in increasing value order, the rest uniformly shuffled".into(),
        ],
        profiles: BTreeMap::from([
            ("equilibrium".into(), spec.symmetric_profile("A")),
            ("optimum".into(), all_h),
        ]),
        spec,
        verification: Verification::Unchecked,
        measured: BTreeMap::new(),
    };
    d.measured.insert(
        "sequence".into(),
        a.iter().map(format_exact).collect::<Vec<_>>().join(","),
    );
    if verify.skip {
        return Ok(d);
    }
    if n > verify.exact_max_n {
        d.verification = Verification::Unverified {
            reason: format!(
                "n = {n} exceeds the exact verification limit {}",
                verify.exact_max_n
            ),
        };
        return Ok(d);
    }
    let engine = ExactEngine::new(&d.spec, verify.engine)?;
    let table = UtilityTable::exact(&engine, crate::equilibrium::DEFAULT_PROFILE_CAP)?;
    let mut problems = Vec::new();
    for i in 0..n {
        if dominant_strategy(&d.spec, &table, i)? != Dominance::Strict("A".into()) {
            problems.push(format!("A is not strictly dominant for firm {}", i + 1));
        }
    }
    // firm 1 on A against k opponents on H
    for k in 0..n {
        let mut choices = vec!["A".to_string(); n];
        for (j, c) in choices.iter_mut().enumerate().skip(n - k) {
            *c = format!("H{}", j + 1);
        }
        let p = Profile::obedient(choices);
        let u = table
            .lookup(&p)
            .ok_or_else(|| Error::Evaluation("profile missing".into()))?[0]
            .clone();
        let expected = BigRational::one() + rat(k as i64, (n - k) as i64);
        d.measured.insert(format!("u_A_vs_{k}_H"), format_exact(&u));
        if u != expected {
            problems.push(format!(
                "u(A) against {k} H firms is {} not {}",
                format_exact(&u),
                format_exact(&expected)
            ));
        }
    }
    let sw_a = table.social_welfare(d.profile("equilibrium")?)?;
    let sw_h = table.social_welfare(d.profile("optimum")?)?;
    d.measured
        .insert("equilibrium_welfare".into(), format_exact(&sw_a));
    d.measured
        .insert("all_h_welfare".into(), format_exact(&sw_h));
    d.verification = if problems.is_empty() {
        Verification::Verified {
            method: "exact".into(),
        }
    } else {
        Verification::Unverified {
            reason: problems.join("; "),
        }
    };
    Ok(d)
}

/// Deviation counterexample: `m = n + 3` candidates with `x(c) = m - c + 1`
/// (1-based). Under the base profile firms `1..n-1` hire `2..n`; under the
/// comparison profile they hire the worst candidates. The last firm uses
/// Mallows-Kendall with dispersion `phi` in both. Reported conditional on
/// the last firm acting last.
pub fn gen_deviation_counterexample(
    n: usize,
    phi: &BigRational,
    verify: &VerifyOptions,
) -> Result<InstanceDescriptor> {
    if n < 2 {
        return invalid("the deviation counterexample needs n >= 2");
    }
    let m = n + 3;
    let x: Vec<i64> = (1..=m as i64).map(|c| m as i64 - c + 1).collect();
    let values = ValueDistribution::deterministic(ValueVector::from_ints(&x)?)?;
    let mut firms = Vec::new();
    for j in 0..n - 1 {
        firms.push(FirmAdvice {
            common: Some(vec![]),
            idiosyncratic: vec![
                RankingTechnology::constant(format!("S{}", j + 1), top_first(j + 1, m)?)?,
                RankingTechnology::constant(format!("T{}", j + 1), top_first(m - 1 - j, m)?)?,
            ],
        });
    }
    firms.push(FirmAdvice {
        common: Some(vec![]),
        idiosyncratic: vec![RankingTechnology::new(
            "M",
            TechKind::Mallows {
                phi: phi.clone(),
                distance: RankDistance::KendallTau,
                tie_break: TieBreak::Index,
            },
        )?],
    });
    let spec = GameSpec::new(
        n,
        m,
        values,
        AdviceSpace {
            common: vec![],
            firms,
        },
        Mechanism::ObedienceConstrained,
    )?;
    let mut base: Vec<String> = (1..n).map(|j| format!("S{j}")).collect();
    base.push("M".into());
    let mut star: Vec<String> = (1..n).map(|j| format!("T{j}")).collect();
    star.push("M".into());
    let mut d = InstanceDescriptor {
        name: format!("deviation-counterexample-n{n}"),
        parameters: BTreeMap::from([
            ("n".into(), n.to_string()),
            ("phi".into(), format_exact(phi)),
            ("firm".into(), n.to_string()),
        ]),
        notes: vec![
            "x(c) = m - c + 1 with m = n + 3".into(),
            "base: firm j hires candidate j+1, leaving {1, n+1, m-1, m} to the last firm".into(),
            "comparison: firm j hires candidate m-j+1, leaving {1, 2, 3, 4} to the last firm"
                .into(),
            "the last firm ranks with Mallows-Kendall in both profiles".into(),
        ],
        profiles: BTreeMap::from([
            ("base".into(), Profile::obedient(base)),
            ("comparison".into(), Profile::obedient(star)),
        ]),
        spec,
        verification: Verification::Unchecked,
        measured: BTreeMap::new(),
    };
    if verify.skip {
        return Ok(d);
    }
    let gap = ExactEngine::new(&d.spec, verify.engine)
        .and_then(|e| e.deviation_gap(d.profile("base")?, d.profile("comparison")?, n - 1, None));
    d.verification = match gap.map(|r| r.aggregate_where(|c| c.order[n - 1] == n)) {
        Ok(Some(g)) => {
            d.measured.insert("gap_last".into(), format_exact(&g));
            if g < BigRational::zero() {
                Verification::Verified {
                    method: "exact".into(),
                }
            } else {
                Verification::Unverified {
                    reason: format!(
                        "gap with the last firm last is {}, not negative",
                        format_exact(&g)
                    ),
                }
            }
        }
        Ok(None) => Verification::Unverified {
            reason: "the conditioning event never occurs".into(),
        },
        Err(e) => Verification::Unverified {
            reason: e.to_string(),
        },
    };
    Ok(d)
}

/// Single firm, `x = (10, 0)`, a uniform ranking: obeying yields 5 while
/// always taking candidate 1 yields 10.
pub fn ic_uniform_counterexample() -> Result<InstanceDescriptor> {
    let values = ValueDistribution::deterministic(ValueVector::from_ints(&[10, 0])?)?;
    let tech = RankingTechnology::mallows("U", BigRational::one(), RankDistance::KendallTau)?;
    ic_single(
        "ic-uniform-counterexample",
        values,
        tech,
        "uniform ranking over two candidates with x = (10, 0)",
    )
}

/// Single firm, `x = (10, 0)`, a table ranking that is reversed with
/// probability 9/10: obeying yields 1 while taking candidate 1 yields 10.
pub fn ic_table_counterexample() -> Result<InstanceDescriptor> {
    let x = ValueVector::from_ints(&[10, 0])?;
    let values = ValueDistribution::deterministic(x.clone())?;
    let tech = RankingTechnology::new(
        "T",
        TechKind::Table {
            entries: vec![TableEntry {
                x,
                pmf: vec![
                    PmfEntry {
                        ranking: Ranking::from_one_based(&[2, 1])?,
                        p: rat(9, 10),
                    },
                    PmfEntry {
                        ranking: Ranking::from_one_based(&[1, 2])?,
                        p: rat(1, 10),
                    },
                ],
            }],
        },
    )?;
    ic_single(
        "ic-table-counterexample",
        values,
        tech,
        "table ranking reversed with probability 9/10 over x = (10, 0)",
    )
}

fn ic_single(
    name: &str,
    values: ValueDistribution,
    tech: RankingTechnology,
    note: &str,
) -> Result<InstanceDescriptor> {
    let id = tech.id.clone();
    let spec = GameSpec::new(
        1,
        2,
        values,
        AdviceSpace::all_common(vec![tech], 1),
        Mechanism::Unconstrained,
    )?;
    let mut d = InstanceDescriptor {
        name: name.into(),
        parameters: BTreeMap::new(),
        notes: vec![note.into()],
        profiles: BTreeMap::from([("audited".into(), spec.symmetric_profile(&id))]),
        spec,
        verification: Verification::Unchecked,
        measured: BTreeMap::new(),
    };
    let report = ic_audit(&d.spec, d.profile("audited")?, EngineOptions::default())?;
    let dec = report
        .decisions
        .first()
        .ok_or_else(|| Error::Evaluation("no decision point".into()))?;
    d.measured
        .insert("obedient_value".into(), format_exact(&dec.obedient_value));
    d.measured
        .insert("best_value".into(), format_exact(&dec.best_value));
    d.measured
        .insert("best_deviation".into(), dec.best_deviation.clone());
    d.verification = if report.violations > 0 {
        Verification::Verified {
            method: "exact".into(),
        }
    } else {
        Verification::Unverified {
            reason: "obedience is a best response".into(),
        }
    };
    Ok(d)
}

/// What random games draw their technologies and values from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechPool {
    #[serde(with = "crate::exact::serde_rational_vec")]
    pub phis: Vec<BigRational>,
    pub distances: Vec<RankDistance>,
    /// Inclusive range of common technologies.
    pub common: (usize, usize),
    /// Inclusive range of private technologies per firm.
    pub idiosyncratic: (usize, usize),
    /// Value support for iid candidate values.
    #[serde(with = "crate::exact::serde_rational_vec")]
    pub value_support: Vec<BigRational>,
}

impl Default for TechPool {
    fn default() -> Self {
        TechPool {
            phis: vec![rat(1, 4), rat(1, 2), rat(3, 4)],
            distances: vec![
                RankDistance::KendallTau,
                RankDistance::SpearmanRho,
                RankDistance::SpearmanFootrule,
            ],
            common: (1, 2),
            idiosyncratic: (0, 1),
            value_support: vec![int(0), int(1), int(3)],
        }
    }
}

impl TechPool {
    /// Same pool with Hamming distance only.
    pub fn hamming() -> Self {
        TechPool {
            distances: vec![RankDistance::Hamming],
            ..Default::default()
        }
    }
}

fn draw_tech<R: Rng + ?Sized>(
    id: String,
    pool: &TechPool,
    rng: &mut R,
) -> Result<RankingTechnology> {
    let phi = pool
        .phis
        .choose(rng)
        .ok_or_else(|| Error::InvalidInput("empty phi pool".into()))?
        .clone();
    let distance = pool
        .distances
        .choose(rng)
        .ok_or_else(|| Error::InvalidInput("empty distance pool".into()))?
        .clone();
    RankingTechnology::new(
        id,
        TechKind::Mallows {
            phi,
            distance,
            tie_break: TieBreak::Uniform,
        },
    )
}

/// Random game over Mallows technologies with uniform tie-breaking and iid
/// values from the pool's support (uniform probabilities). With
/// `certify_sc`, draws are repeated until the space's `delta*` is 0.
pub fn gen_random_game<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    pool: &TechPool,
    mechanism: Mechanism,
    certify_sc: bool,
    rng: &mut R,
) -> Result<InstanceDescriptor> {
    if n == 0 || m < n {
        return invalid("need 1 <= n <= m");
    }
    if pool.value_support.is_empty() {
        return invalid("empty value support");
    }
    const ATTEMPTS: usize = 10;
    for attempt in 0..ATTEMPTS {
        let c = rng.random_range(pool.common.0..=pool.common.1);
        let common = (0..c)
            .map(|k| draw_tech(format!("C{}", k + 1), pool, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut firms = Vec::new();
        for i in 0..n {
            let access: Vec<String> = common
                .iter()
                .filter(|_| rng.random_bool(0.75))
                .map(|t| t.id.clone())
                .collect();
            let k = rng.random_range(pool.idiosyncratic.0..=pool.idiosyncratic.1);
            let mut own = (0..k)
                .map(|j| draw_tech(format!("H{}.{}", i + 1, j + 1), pool, rng))
                .collect::<Result<Vec<_>>>()?;
            if access.is_empty() && own.is_empty() {
                own.push(draw_tech(format!("H{}.1", i + 1), pool, rng)?);
            }
            firms.push(FirmAdvice {
                common: Some(access),
                idiosyncratic: own,
            });
        }
        let k = pool.value_support.len() as i64;
        let values = ValueDistribution::new(ValueSpec::Iid {
            m,
            support: pool.value_support.clone(),
            probs: vec![rat(1, k); k as usize],
        })?;
        let spec = GameSpec::new(n, m, values, AdviceSpace { common, firms }, mechanism)?;
        let mut measured = BTreeMap::new();
        let mut verification = Verification::Unchecked;
        if certify_sc {
            let delta = game_delta(&spec, &Default::default())?;
            if !delta.delta_star.is_zero() {
                continue;
            }
            measured.insert("delta_star".into(), "0".into());
            verification = Verification::Verified {
                method: "exact consistency check".into(),
            };
        }
        let first = Profile::obedient((0..n).map(|i| spec.strategies(i)[0].to_string()).collect());
        return Ok(InstanceDescriptor {
            name: format!("random-n{n}-m{m}"),
            parameters: BTreeMap::from([
                ("n".into(), n.to_string()),
                ("m".into(), m.to_string()),
                ("attempt".into(), attempt.to_string()),
            ]),
            notes: vec![
                "Mallows technologies with uniform tie-breaking; iid candidate values".into(),
            ],
            profiles: BTreeMap::from([("first".into(), first)]),
            spec,
            verification,
            measured,
        });
    }
    Err(Error::Evaluation(format!(
        "no consistent space drawn in {ATTEMPTS} attempts"
    )))
}

/// Random game whose every technology is certified consistent.
pub fn gen_random_sc_game<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    pool: &TechPool,
    rng: &mut R,
) -> Result<InstanceDescriptor> {
    gen_random_game(n, m, pool, Mechanism::ObedienceConstrained, true, rng)
}
