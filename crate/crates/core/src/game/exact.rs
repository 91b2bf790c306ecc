//! Exact evaluation by enumeration over value vectors, firm orders and the
//! joint technology samples. All arithmetic is rational.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::lazy::{Dfs, Query, Visitor};
use super::{GameSpec, Profile, Resolved};
use crate::error::{check_limit, Result};
use crate::exact::{from_biguint, serde_rational, serde_rational_vec};
use crate::perm::{factorial, falling_factorial, Ranking};
use crate::tech::{exact_pmf_with, Caps, ExactPmf, ValueVector};

/// Default cap on enumerated outcomes (value points x orders x samples).
pub const DEFAULT_ATOM_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineOptions {
    pub budget: u128,
    pub caps: Caps,
    /// Evaluate one representative per relabeling orbit when the value law
    /// is permutation invariant and every technology involved is label
    /// equivariant.
    pub orbit_reduction: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            budget: DEFAULT_ATOM_BUDGET,
            caps: Caps::default(),
            orbit_reduction: true,
        }
    }
}

pub(crate) struct Point {
    pub mass: BigRational,
    pub x: ValueVector,
}

/// One (value point, firm order) enumeration result.
pub(crate) struct Cell<V> {
    pub point: usize,
    pub order: Vec<usize>,
    pub denominator: BigUint,
    pub visitor: V,
}

/// Value points and per-(point, order) results of one enumeration.
type Enumerated<V> = (Arc<Vec<Point>>, Vec<Cell<V>>);

fn all_orders(n: usize) -> Vec<Vec<usize>> {
    crate::perm::all_rankings(n)
        .map(Ranking::into_vec)
        .collect()
}

/// Exact engine bound to one game. Ranking pmfs are computed on demand and
/// cached.
pub struct ExactEngine {
    spec: GameSpec,
    options: EngineOptions,
    atoms: Mutex<Option<Arc<Vec<Point>>>>,
    reps: Option<Arc<Vec<Point>>>,
    pmfs: Mutex<HashMap<(bool, usize, usize), Arc<ExactPmf>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub profile: Profile,
    #[serde(with = "serde_rational_vec")]
    pub utilities: Vec<BigRational>,
    #[serde(with = "serde_rational")]
    pub social_welfare: BigRational,
    pub method: String,
    pub value_points: usize,
    pub orbit_reduced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub x: ValueVector,
    /// Firm order, 1-based.
    pub order: Vec<usize>,
    /// Probability of the (x, order) cell.
    #[serde(with = "serde_rational")]
    pub weight: BigRational,
    /// Probability of the conditioning event within the cell.
    #[serde(with = "serde_rational")]
    pub event_probability: BigRational,
    /// Conditional expected gap; absent when the event is impossible.
    #[serde(
        with = "opt_rational",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub gap: Option<BigRational>,
    #[serde(
        with = "opt_rational",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub delta_gap: Option<BigRational>,
    #[serde(skip)]
    dev: BigRational,
    #[serde(skip)]
    star: BigRational,
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
        Ok(Option::<crate::exact::Wire>::deserialize(d)?.map(|w| w.0))
    }
}

/// Expected hire value of one firm when it alone switches to its
/// comparison technology, against the comparison profile, conditioned on
/// the comparison hire not being taken by its predecessors under the base
/// profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationGapReport {
    pub firm: usize,
    pub base: Profile,
    pub comparison: Profile,
    #[serde(
        with = "opt_rational",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub delta: Option<BigRational>,
    pub cells: Vec<GapCell>,
    #[serde(with = "serde_rational")]
    pub event_probability: BigRational,
    /// Aggregate conditional gap; absent when the event never occurs.
    #[serde(
        with = "opt_rational",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub gap: Option<BigRational>,
    #[serde(
        with = "opt_rational",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub delta_gap: Option<BigRational>,
}

impl DeviationGapReport {
    pub fn is_vacuous(&self) -> bool {
        self.gap.is_none()
    }

    /// Aggregate conditional gap over the cells accepted by `keep`.
    pub fn aggregate_where(&self, keep: impl Fn(&GapCell) -> bool) -> Option<BigRational> {
        let mut num = BigRational::zero();
        let mut den = BigRational::zero();
        for c in self.cells.iter().filter(|c| keep(c)) {
            num += &c.weight * (&c.dev - &c.star);
            den += &c.weight * &c.event_probability;
        }
        (!den.is_zero()).then(|| num / den)
    }

    /// Smallest conditional gap over cells with a possible event.
    pub fn min_cell_gap(&self) -> Option<&BigRational> {
        self.cells.iter().filter_map(|c| c.gap.as_ref()).min()
    }
}

/// Split of the comparison profile's welfare by whether each firm's hire
/// was already taken by its predecessors under the base profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub base: Profile,
    pub comparison: Profile,
    #[serde(with = "serde_rational")]
    pub snatched: BigRational,
    #[serde(with = "serde_rational")]
    pub available: BigRational,
    #[serde(with = "serde_rational")]
    pub base_welfare: BigRational,
    #[serde(with = "serde_rational")]
    pub comparison_welfare: BigRational,
}

struct UtilityVisitor {
    acc: Vec<Vec<BigUint>>,
}

impl Visitor for UtilityVisitor {
    fn leaf(&mut self, w: &BigUint, hires: &[Vec<usize>]) -> Result<()> {
        for (f, &c) in hires[0].iter().enumerate() {
            self.acc[f][c] += w;
        }
        Ok(())
    }
}

struct GapVisitor {
    firm: usize,
    event: BigUint,
    dev: Vec<BigUint>,
    star: Vec<BigUint>,
}

impl Visitor for GapVisitor {
    fn leaf(&mut self, w: &BigUint, hires: &[Vec<usize>]) -> Result<()> {
        let star_hire = hires[1][self.firm];
        if hires[0]
            .iter()
            .enumerate()
            .any(|(f, &c)| f != self.firm && c == star_hire)
        {
            return Ok(());
        }
        self.event += w;
        self.dev[hires[0][self.firm]] += w;
        self.star[star_hire] += w;
        Ok(())
    }
}

struct SplitVisitor {
    order: Vec<usize>,
    snatched: Vec<BigUint>,
    available: Vec<BigUint>,
    base: Vec<BigUint>,
}

impl Visitor for SplitVisitor {
    fn leaf(&mut self, w: &BigUint, hires: &[Vec<usize>]) -> Result<()> {
        for (k, &f) in self.order.iter().enumerate() {
            let c = hires[1][f];
            let taken = self.order[..k].iter().any(|&g| hires[0][g] == c);
            if taken {
                self.snatched[c] += w;
            } else {
                self.available[c] += w;
            }
            self.base[hires[0][f]] += w;
        }
        Ok(())
    }
}

/// `sum_c x(c) acc[c]` as a rational.
fn value_of(x: &ValueVector, acc: &[BigUint]) -> BigRational {
    let mut total = BigRational::zero();
    for (c, a) in acc.iter().enumerate() {
        if !a.is_zero() && !x.get(c).is_zero() {
            total += x.get(c) * from_biguint(a);
        }
    }
    total
}

impl ExactEngine {
    pub fn new(spec: &GameSpec, options: EngineOptions) -> Result<Self> {
        let reps = spec.values().orbit_representatives().map(|r| {
            Arc::new(
                r.into_iter()
                    .map(|(mass, x)| Point { mass, x })
                    .collect::<Vec<_>>(),
            )
        });
        Ok(ExactEngine {
            spec: spec.clone(),
            options,
            atoms: Mutex::new(None),
            reps,
            pmfs: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    /// Whether evaluation over `techs` may use orbit representatives.
    pub(crate) fn reducible(&self, techs: &[usize]) -> bool {
        let distinct = self.spec.values().all_values_distinct();
        self.options.orbit_reduction
            && self.reps.is_some()
            && techs
                .iter()
                .all(|&t| self.spec.techs[t].is_label_equivariant(distinct))
    }

    pub(crate) fn points(&self, reduced: bool) -> Result<Arc<Vec<Point>>> {
        if reduced {
            return Ok(self.reps.clone().expect("representatives exist"));
        }
        let mut guard = self.atoms.lock().expect("atoms lock");
        if let Some(a) = guard.as_ref() {
            return Ok(a.clone());
        }
        let atoms = Arc::new(
            self.spec
                .values()
                .atoms(self.options.budget)?
                .into_iter()
                .map(|(mass, x)| Point { mass, x })
                .collect::<Vec<_>>(),
        );
        *guard = Some(atoms.clone());
        Ok(atoms)
    }

    /// The pmf of technology `tech` at the `point`-th value point.
    pub(crate) fn pmf(&self, reduced: bool, point: usize, tech: usize) -> Result<Arc<ExactPmf>> {
        let key = (reduced, point, tech);
        if let Some(p) = self.pmfs.lock().expect("pmf lock").get(&key) {
            return Ok(p.clone());
        }
        let points = self.points(reduced)?;
        let pmf = Arc::new(exact_pmf_with(
            &self.spec.techs[tech],
            &points[point].x,
            &self.options.caps,
        )?);
        self.pmfs.lock().expect("pmf lock").insert(key, pmf.clone());
        Ok(pmf)
    }

    /// Enumerates every (point, order) cell. `slots` lists the technology
    /// indices sampled; `script` turns a firm order into the queries.
    pub(crate) fn drive<V, S, F>(
        &self,
        slots: &[usize],
        reduced: bool,
        script: S,
        make: F,
    ) -> Result<Enumerated<V>>
    where
        V: Visitor + Send,
        S: Fn(&[usize]) -> Vec<Query> + Sync,
        F: Fn(&ValueVector, &[usize]) -> V + Sync,
    {
        let n = self.spec.n();
        let m = self.spec.m();
        let points = self.points(reduced)?;
        let orders = all_orders(n);
        let cells = (points.len() as u128).saturating_mul(orders.len() as u128);
        check_limit("enumeration atoms", cells, self.options.budget)?;

        // per-slot query counts are the same for every order
        let probe = script(&orders[0]);
        let runs = probe.iter().map(|q| q.run + 1).max().unwrap_or(1);
        let mut queries_per_slot = vec![0usize; slots.len()];
        for q in &probe {
            queries_per_slot[q.slot] += 1;
        }

        let pmfs: Vec<Vec<Arc<ExactPmf>>> = (0..points.len())
            .into_par_iter()
            .map(|p| {
                slots
                    .iter()
                    .map(|&t| self.pmf(reduced, p, t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        let mut estimate: u128 = 0;
        for row in &pmfs {
            let per_order = row
                .iter()
                .zip(&queries_per_slot)
                .map(|(pmf, &q)| (pmf.support_len() as u128).min(falling_factorial(m, q)))
                .fold(1u128, |a, b| a.saturating_mul(b));
            estimate = estimate.saturating_add(per_order.saturating_mul(orders.len() as u128));
        }
        check_limit("enumeration atoms", estimate, self.options.budget)?;

        let jobs: Vec<(usize, &Vec<usize>)> = (0..points.len())
            .flat_map(|p| orders.iter().map(move |o| (p, o)))
            .collect();
        let out = jobs
            .into_par_iter()
            .map(|(p, order)| {
                let queries = script(order);
                let row: Vec<&ExactPmf> = pmfs[p].iter().map(|a| a.as_ref()).collect();
                let mut dfs = Dfs::new(row, &queries, runs, n, m);
                let mut visitor = make(&points[p].x, order);
                dfs.run(&mut visitor)?;
                Ok(Cell {
                    point: p,
                    order: order.clone(),
                    denominator: dfs.denominator(),
                    visitor,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((points, out))
    }

    /// Technology indices of a set of resolved profiles, deduplicated in
    /// index order.
    fn slots_of(profiles: &[&Resolved]) -> Vec<usize> {
        let mut slots: Vec<usize> = profiles
            .iter()
            .flat_map(|r| r.techs.iter().copied())
            .collect();
        slots.sort();
        slots.dedup();
        slots
    }

    fn slot(slots: &[usize], tech: usize) -> usize {
        slots.binary_search(&tech).expect("slot exists")
    }

    fn weight_of(&self, point: &Point, denominator: &BigUint) -> BigRational {
        let n_fact = BigUint::from(factorial(self.spec.n()));
        &point.mass / BigRational::from_integer(BigInt::from(n_fact * denominator))
    }

    /// Exact expected utility of every firm under `profile`.
    pub fn utilities(&self, profile: &Profile) -> Result<UtilityReport> {
        let r = self.spec.resolve(profile)?;
        let slots = Self::slots_of(&[&r]);
        let reduced = self.reducible(&slots);
        let n = self.spec.n();
        let m = self.spec.m();
        let script = |order: &[usize]| -> Vec<Query> {
            order
                .iter()
                .map(|&f| Query {
                    run: 0,
                    firm: f,
                    slot: Self::slot(&slots, r.techs[f]),
                    policy: r.policies[f].clone(),
                })
                .collect()
        };
        let (points, cells) = self.drive(&slots, reduced, script, |_, _| UtilityVisitor {
            acc: vec![vec![BigUint::ZERO; m]; n],
        })?;
        let mut utilities = vec![BigRational::zero(); n];
        // orders of one point share the denominator; merge before converting
        let mut k = 0;
        while k < cells.len() {
            let p = cells[k].point;
            let mut acc = vec![vec![BigUint::ZERO; m]; n];
            let denominator = cells[k].denominator.clone();
            while k < cells.len() && cells[k].point == p {
                for (f, row) in cells[k].visitor.acc.iter().enumerate() {
                    for (c, a) in row.iter().enumerate() {
                        acc[f][c] += a;
                    }
                }
                k += 1;
            }
            let w = self.weight_of(&points[p], &denominator);
            for f in 0..n {
                utilities[f] += &w * value_of(&points[p].x, &acc[f]);
            }
        }
        let social_welfare = utilities.iter().fold(BigRational::zero(), |a, u| a + u);
        Ok(UtilityReport {
            profile: profile.clone(),
            utilities,
            social_welfare,
            method: "exact".into(),
            value_points: points.len(),
            orbit_reduced: reduced,
        })
    }

    /// Conditional deviation gap of `firm` between the base profile `s`
    /// and the comparison profile `s_star`, with all runs coupled through
    /// shared samples per technology. With `delta`, also the gap against
    /// `(1 - delta)^2` times the comparison hire.
    pub fn deviation_gap(
        &self,
        s: &Profile,
        s_star: &Profile,
        firm: usize,
        delta: Option<&BigRational>,
    ) -> Result<DeviationGapReport> {
        let n = self.spec.n();
        let m = self.spec.m();
        if firm >= n {
            return crate::error::invalid(format!("firm {} out of range", firm + 1));
        }
        let rs = self.spec.resolve(s)?;
        let rt = self.spec.resolve(s_star)?;
        let slots = Self::slots_of(&[&rs, &rt]);
        let reduced = self.reducible(&slots);
        let script = |order: &[usize]| -> Vec<Query> {
            let k = order
                .iter()
                .position(|&f| f == firm)
                .expect("firm in order");
            let mut qs = Vec::new();
            for (run, prof) in [(0, &rs), (1, &rt)] {
                for &f in &order[..k] {
                    qs.push(Query {
                        run,
                        firm: f,
                        slot: Self::slot(&slots, prof.techs[f]),
                        policy: prof.policies[f].clone(),
                    });
                }
                qs.push(Query {
                    run,
                    firm,
                    slot: Self::slot(&slots, rt.techs[firm]),
                    policy: rt.policies[firm].clone(),
                });
            }
            qs
        };
        let (points, cells) = self.drive(&slots, reduced, script, |_, _| GapVisitor {
            firm,
            event: BigUint::ZERO,
            dev: vec![BigUint::ZERO; m],
            star: vec![BigUint::ZERO; m],
        })?;
        let factor = delta.map(|d| {
            let one_minus = BigRational::one() - d;
            &one_minus * &one_minus
        });
        let n_fact = BigRational::from_integer(BigInt::from(factorial(n)));
        let mut out = Vec::with_capacity(cells.len());
        for cell in cells {
            let point = &points[cell.point];
            let den = from_biguint(&cell.denominator);
            let v = &cell.visitor;
            let event_probability = from_biguint(&v.event) / &den;
            let dev = value_of(&point.x, &v.dev) / &den;
            let star = value_of(&point.x, &v.star) / &den;
            let (gap, delta_gap) = if v.event.is_zero() {
                (None, None)
            } else {
                (
                    Some((&dev - &star) / &event_probability),
                    factor
                        .as_ref()
                        .map(|f| (&dev - f * &star) / &event_probability),
                )
            };
            out.push(GapCell {
                x: point.x.clone(),
                order: cell.order.iter().map(|f| f + 1).collect(),
                weight: &point.mass / &n_fact,
                event_probability,
                gap,
                delta_gap,
                dev,
                star,
            });
        }
        let mut report = DeviationGapReport {
            firm,
            base: s.clone(),
            comparison: s_star.clone(),
            delta: delta.cloned(),
            cells: out,
            event_probability: BigRational::zero(),
            gap: None,
            delta_gap: None,
        };
        report.event_probability = report.cells.iter().fold(BigRational::zero(), |a, c| {
            a + &c.weight * &c.event_probability
        });
        report.gap = report.aggregate_where(|_| true);
        if let (Some(f), false) = (&factor, report.event_probability.is_zero()) {
            let num = report.cells.iter().fold(BigRational::zero(), |a, c| {
                a + &c.weight * (&c.dev - f * &c.star)
            });
            report.delta_gap = Some(num / &report.event_probability);
        }
        Ok(report)
    }

    /// Snatched / available split of the welfare of `s_star` against `s`.
    pub fn snatched_available(&self, s: &Profile, s_star: &Profile) -> Result<SplitReport> {
        let m = self.spec.m();
        let rs = self.spec.resolve(s)?;
        let rt = self.spec.resolve(s_star)?;
        let slots = Self::slots_of(&[&rs, &rt]);
        let reduced = self.reducible(&slots);
        let script = |order: &[usize]| -> Vec<Query> {
            let mut qs = Vec::new();
            for (run, prof) in [(0, &rs), (1, &rt)] {
                for &f in order {
                    qs.push(Query {
                        run,
                        firm: f,
                        slot: Self::slot(&slots, prof.techs[f]),
                        policy: prof.policies[f].clone(),
                    });
                }
            }
            qs
        };
        let (points, cells) = self.drive(&slots, reduced, script, |_, order| SplitVisitor {
            order: order.to_vec(),
            snatched: vec![BigUint::ZERO; m],
            available: vec![BigUint::ZERO; m],
            base: vec![BigUint::ZERO; m],
        })?;
        let mut snatched = BigRational::zero();
        let mut available = BigRational::zero();
        let mut base_welfare = BigRational::zero();
        for cell in &cells {
            let point = &points[cell.point];
            let w = self.weight_of(point, &cell.denominator);
            snatched += &w * value_of(&point.x, &cell.visitor.snatched);
            available += &w * value_of(&point.x, &cell.visitor.available);
            base_welfare += &w * value_of(&point.x, &cell.visitor.base);
        }
        Ok(SplitReport {
            base: s.clone(),
            comparison: s_star.clone(),
            comparison_welfare: &snatched + &available,
            snatched,
            available,
            base_welfare,
        })
    }
}

/// Exact utilities with default options.
pub fn expected_utilities_exact(spec: &GameSpec, profile: &Profile) -> Result<UtilityReport> {
    ExactEngine::new(spec, EngineOptions::default())?.utilities(profile)
}
