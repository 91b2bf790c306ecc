//! Incentive audit of obedience under the unconstrained mechanism.
//!
//! A decision point is a firm, its position in the order and what it
//! observes: the predecessors' technologies and hires. At each point the
//! conditional value of obeying is compared with single-shot deviations to a
//! fixed candidate or to the q-th available candidate of the firm's sample.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use super::exact::{EngineOptions, ExactEngine};
use super::lazy::{Dfs, Query, Visitor};
use super::{GameSpec, Mechanism, Profile};
use crate::error::{check_limit, invalid, Result};
use crate::exact::{from_biguint, serde_rational};
use crate::perm::factorial;
use crate::tech::ValueVector;

pub const IC_MAX_N: usize = 3;
pub const IC_MAX_M: usize = 5;

/// (firm, position, [(predecessor, technology index, hire)])
type Key = (usize, usize, Vec<(usize, usize, usize)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub firm: usize,
    pub technology: String,
    pub hire: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    /// 1-based firm, position and candidates throughout.
    pub firm: usize,
    pub position: usize,
    pub predecessors: Vec<Observation>,
    #[serde(with = "serde_rational")]
    pub probability: BigRational,
    #[serde(with = "serde_rational")]
    pub obedient_value: BigRational,
    pub best_deviation: String,
    #[serde(with = "serde_rational")]
    pub best_value: BigRational,
    /// Best deviation value minus obedient value, both conditional.
    #[serde(with = "serde_rational")]
    pub gap: BigRational,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub profile: Profile,
    pub decisions: Vec<DecisionReport>,
    pub violations: usize,
    #[serde(with = "serde_rational")]
    pub max_gap: BigRational,
}

impl IcReport {
    pub fn is_incentive_compatible(&self) -> bool {
        self.violations == 0
    }
}

struct Acc {
    mass: BigUint,
    /// `qth[q][c]`: weight with which the (q+1)-th available candidate is c.
    qth: Vec<Vec<BigUint>>,
}

struct IcVisitor {
    order: Vec<usize>,
    techs: Vec<usize>,
    m: usize,
    keys: HashMap<Key, Acc>,
}

impl Visitor for IcVisitor {
    fn before_query(&mut self, dfs: &Dfs<'_>, k: usize) -> Result<()> {
        let q = &dfs.queries[k];
        let history = dfs.history(0);
        let preds = self.order[..k]
            .iter()
            .zip(history)
            .map(|(&f, &c)| (f, self.techs[f], c))
            .collect();
        let key = (q.firm, k, preds);
        let m = self.m;
        let acc = self.keys.entry(key).or_insert_with(|| Acc {
            mass: BigUint::ZERO,
            qth: vec![vec![BigUint::ZERO; m]; m],
        });
        let pmf = dfs.pmfs[q.slot];
        let avail = dfs.available(0);
        let others = dfs.others_weight(q.slot);
        let mut mass = BigUint::ZERO;
        let mut qth = vec![vec![BigUint::ZERO; m]; m];
        for &idx in dfs.live(q.slot) {
            let w = &pmf.weights()[idx as usize];
            mass += w;
            let open: Vec<usize> = pmf.rankings()[idx as usize]
                .as_slice()
                .iter()
                .copied()
                .filter(|&c| avail[c])
                .collect();
            for (qi, row) in qth.iter_mut().enumerate() {
                row[open[qi.min(open.len() - 1)]] += w;
            }
        }
        acc.mass += mass * &others;
        for (row, add) in acc.qth.iter_mut().zip(qth) {
            for (a, b) in row.iter_mut().zip(add) {
                if !b.is_zero() {
                    *a += b * &others;
                }
            }
        }
        Ok(())
    }

    fn leaf(&mut self, _w: &BigUint, _hires: &[Vec<usize>]) -> Result<()> {
        Ok(())
    }
}

#[derive(Default)]
struct Totals {
    mass: BigRational,
    qth: Vec<BigRational>,
    /// Probability mass times x(c), per candidate.
    fixed: Vec<BigRational>,
}

fn value_of(x: &ValueVector, acc: &[BigUint]) -> BigRational {
    acc.iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .fold(BigRational::zero(), |t, (c, a)| {
            t + x.get(c) * from_biguint(a)
        })
}

/// Audits obedience for every firm at every reachable decision point of
/// `profile` (technology choices; all firms obedient on path).
pub fn ic_audit(spec: &GameSpec, profile: &Profile, options: EngineOptions) -> Result<IcReport> {
    if spec.mechanism() != Mechanism::Unconstrained {
        return invalid("the incentive audit needs the unconstrained mechanism");
    }
    let n = spec.n();
    let m = spec.m();
    check_limit("firms for the incentive audit", n as u128, IC_MAX_N as u128)?;
    check_limit(
        "candidates for the incentive audit",
        m as u128,
        IC_MAX_M as u128,
    )?;
    let on_path = Profile::obedient(profile.choices.clone());
    let r = spec.resolve(&on_path)?;
    let mut slots = r.techs.clone();
    slots.sort();
    slots.dedup();
    let slot = |t: usize| slots.binary_search(&t).expect("slot");
    // decision keys name candidates, so relabeling orbits cannot be merged
    let engine = ExactEngine::new(spec, options)?;
    let script = |order: &[usize]| -> Vec<Query> {
        order
            .iter()
            .map(|&f| Query {
                run: 0,
                firm: f,
                slot: slot(r.techs[f]),
                policy: r.policies[f].clone(),
            })
            .collect()
    };
    let (points, cells) = engine.drive(&slots, false, script, |_, order| IcVisitor {
        order: order.to_vec(),
        techs: r.techs.clone(),
        m,
        keys: HashMap::new(),
    })?;

    let n_fact = BigUint::from(factorial(n));
    let mut totals: BTreeMap<Key, Totals> = BTreeMap::new();
    for cell in cells {
        let point = &points[cell.point];
        let factor =
            &point.mass / BigRational::from_integer(BigInt::from(&n_fact * &cell.denominator));
        for (key, acc) in cell.visitor.keys {
            let t = totals.entry(key).or_insert_with(|| Totals {
                mass: BigRational::zero(),
                qth: vec![BigRational::zero(); m],
                fixed: vec![BigRational::zero(); m],
            });
            let mass = &factor * from_biguint(&acc.mass);
            for (c, f) in t.fixed.iter_mut().enumerate() {
                *f += point.x.get(c) * &mass;
            }
            t.mass += mass;
            for (q, row) in acc.qth.iter().enumerate() {
                t.qth[q] += &factor * value_of(&point.x, row);
            }
        }
    }

    let mut decisions = Vec::new();
    let mut violations = 0;
    let mut max_gap = BigRational::zero();
    for ((firm, position, preds), t) in totals {
        if t.mass.is_zero() {
            continue;
        }
        let taken: Vec<usize> = preds.iter().map(|p| p.2).collect();
        let obedient = &t.qth[0] / &t.mass;
        let mut best = (String::from("obedient"), obedient.clone());
        for q in 1..(m - position) {
            let v = &t.qth[q] / &t.mass;
            if v > best.1 {
                best = (format!("qth_available({})", q + 1), v);
            }
        }
        for c in (0..m).filter(|c| !taken.contains(c)) {
            let v = &t.fixed[c] / &t.mass;
            if v > best.1 {
                best = (format!("fixed_candidate_preference({})", c + 1), v);
            }
        }
        let gap = &best.1 - &obedient;
        let violation = gap > BigRational::zero();
        if violation {
            violations += 1;
        }
        if gap > max_gap {
            max_gap = gap.clone();
        }
        decisions.push(DecisionReport {
            firm: firm + 1,
            position: position + 1,
            predecessors: preds
                .iter()
                .map(|&(f, tech, hire)| Observation {
                    firm: f + 1,
                    technology: spec.technologies()[tech].id.clone(),
                    hire: hire + 1,
                })
                .collect(),
            probability: t.mass,
            obedient_value: obedient,
            best_deviation: best.0,
            best_value: best.1,
            gap,
            violation,
        });
    }
    Ok(IcReport {
        profile: on_path,
        decisions,
        violations,
        max_gap,
    })
}
