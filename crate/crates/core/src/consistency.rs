//! Stochastic consistency: exact certification, statistical testing,
//! `delta` measurement and Schur-concavity spot checks.
//!
//! A tuple fixes two positions `i < j`, two candidates `k, l` and the
//! placement of every other candidate. Such a tuple pins down exactly two
//! full rankings: the one with `k` at `i` (correct when `x(k) >= x(l)`) and
//! the swapped one.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::{self, ExactNumber};
use crate::majorize::majorizes;
use crate::perm::{all_rankings, Ranking};
use crate::tech::{
    estimate_pmf, exact_pmf_with, Caps, NoiseSpec, RankingPmf, RankingTechnology, ValueVector,
    DEFAULT_ESTIMATION_SAMPLES,
};

/// Default confidence level of statistical checks.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
/// Tuples whose two rankings were observed fewer times are not tested.
pub const DEFAULT_MIN_CELL: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTuple {
    /// 0-based positions, `i < j`.
    pub positions: (usize, usize),
    /// `(k, l)`: the candidates at `(i, j)` in the correctly ordered ranking.
    pub candidates: (usize, usize),
    /// `(position, candidate)` for every other candidate.
    pub conditioning: Vec<(usize, usize)>,
    pub correct: Ranking,
    pub incorrect: Ranking,
    pub p_correct: BigRational,
    pub p_incorrect: BigRational,
}

impl ConsistencyTuple {
    fn new(
        correct: Ranking,
        i: usize,
        j: usize,
        p_correct: BigRational,
        p_incorrect: BigRational,
    ) -> Self {
        let conditioning = (0..correct.len())
            .filter(|&p| p != i && p != j)
            .map(|p| (p, correct.at(p)))
            .collect();
        ConsistencyTuple {
            positions: (i, j),
            candidates: (correct.at(i), correct.at(j)),
            conditioning,
            incorrect: correct.swapped(i, j),
            correct,
            p_correct,
            p_incorrect,
        }
    }

    /// `p_correct / p_incorrect`, undefined when `p_incorrect = 0`.
    pub fn ratio(&self) -> Option<BigRational> {
        (!self.p_incorrect.is_zero()).then(|| &self.p_correct / &self.p_incorrect)
    }

    /// `1 - p_correct / p_incorrect`; zero for vacuous tuples.
    pub fn delta(&self) -> BigRational {
        self.ratio()
            .map(|r| BigRational::one() - r)
            .unwrap_or_else(BigRational::zero)
    }
}

impl Serialize for ConsistencyTuple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Placement {
            position: usize,
            candidate: usize,
        }
        #[derive(Serialize)]
        struct Wire<'a> {
            positions: (usize, usize),
            candidates: (usize, usize),
            conditioning: Vec<Placement>,
            correct: &'a Ranking,
            incorrect: &'a Ranking,
            p_correct: ExactNumber,
            p_incorrect: ExactNumber,
            ratio: Option<ExactNumber>,
        }
        Wire {
            positions: (self.positions.0 + 1, self.positions.1 + 1),
            candidates: (self.candidates.0 + 1, self.candidates.1 + 1),
            conditioning: self
                .conditioning
                .iter()
                .map(|&(p, c)| Placement {
                    position: p + 1,
                    candidate: c + 1,
                })
                .collect(),
            correct: &self.correct,
            incorrect: &self.incorrect,
            p_correct: (&self.p_correct).into(),
            p_incorrect: (&self.p_incorrect).into(),
            ratio: self.ratio().as_ref().map(ExactNumber::from),
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Statistical { consistent: bool, confidence: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticalDetails {
    pub samples: u64,
    pub seed: u64,
    pub confidence: f64,
    pub min_cell: u64,
    /// Tuples tested (the Bonferroni denominator).
    pub tests: u64,
    pub rejections: u64,
    /// Tuples with too few observations to test.
    pub inconclusive: u64,
    /// Upper confidence bound on `delta*`.
    pub delta_ucb: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub technology: String,
    pub x: ValueVector,
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Exact in exact mode; a point estimate from counts otherwise.
    #[serde(serialize_with = "ser_exact")]
    pub delta_star: BigRational,
    pub witness: Option<ConsistencyTuple>,
    pub tuples_examined: u64,
    pub statistical: Option<StatisticalDetails>,
}

fn ser_exact<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    ExactNumber::from(q).serialize(s)
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        matches!(
            self.verdict,
            Verdict::Consistent
                | Verdict::Statistical {
                    consistent: true,
                    ..
                }
        )
    }

    pub fn is_exact(&self) -> bool {
        self.statistical.is_none()
    }
}

/// Exact check over the enumerated pmf; continuous noise is delegated to
/// [`check_sc_statistical`] with default settings and seed 0.
pub fn check_sc_exact(tech: &RankingTechnology, x: &ValueVector) -> Result<ConsistencyReport> {
    check_sc_exact_with(tech, x, &Caps::default())
}

pub fn check_sc_exact_with(
    tech: &RankingTechnology,
    x: &ValueVector,
    caps: &Caps,
) -> Result<ConsistencyReport> {
    if !tech.has_exact_pmf() {
        return check_sc_statistical_with(
            tech,
            x,
            DEFAULT_ESTIMATION_SAMPLES,
            DEFAULT_CONFIDENCE,
            0,
            DEFAULT_MIN_CELL,
            caps,
        );
    }
    let pmf = exact_pmf_with(tech, x, caps)?;
    let m = x.len();
    let total = pmf.total();
    let prob = |w: &BigUint| exact::ratio_of(w, total);
    let zero = BigUint::zero();
    let mut examined = 0u64;
    let mut worst: Option<(BigRational, ConsistencyTuple)> = None;
    let mut consider = |delta: BigRational, make: &dyn Fn() -> ConsistencyTuple| {
        if delta.is_zero() || delta < BigRational::zero() {
            return;
        }
        if worst.as_ref().is_none_or(|(d, _)| &delta > d) {
            worst = Some((delta, make()));
        }
    };
    for (r, w) in pmf.iter() {
        for i in 0..m {
            for j in i + 1..m {
                let (k, l) = (r.at(i), r.at(j));
                let swapped = r.swapped(i, j);
                let w_swapped = pmf.weight(&swapped);
                if x.get(k) >= x.get(l) {
                    // r is the correct ranking of this tuple
                    if let Some(wi) = w_swapped {
                        examined += 1;
                        if w < wi {
                            let delta = BigRational::one() - exact::ratio_of(w, wi);
                            consider(delta, &|| {
                                ConsistencyTuple::new(r.clone(), i, j, prob(w), prob(wi))
                            });
                        }
                    }
                }
                if x.get(k) <= x.get(l) && w_swapped.is_none() {
                    // r is the incorrect ranking and its partner has no mass
                    examined += 1;
                    consider(BigRational::one(), &|| {
                        ConsistencyTuple::new(swapped.clone(), i, j, prob(&zero), prob(w))
                    });
                }
            }
        }
    }
    let (delta_star, witness) = match worst {
        Some((d, t)) => (d, Some(t)),
        None => (BigRational::zero(), None),
    };
    Ok(ConsistencyReport {
        technology: tech.id.clone(),
        x: x.clone(),
        verdict: if witness.is_none() {
            Verdict::Consistent
        } else {
            Verdict::Violated
        },
        delta_star,
        witness,
        tuples_examined: examined,
        statistical: None,
    })
}

/// Statistical check from `samples` draws (seed `seed`).
pub fn check_sc_statistical(
    tech: &RankingTechnology,
    x: &ValueVector,
    samples: u64,
    confidence: f64,
    seed: u64,
) -> Result<ConsistencyReport> {
    check_sc_statistical_with(
        tech,
        x,
        samples,
        confidence,
        seed,
        DEFAULT_MIN_CELL,
        &Caps::default(),
    )
}

/// One-sided binomial test per tuple with a Bonferroni correction over the
/// tested tuples. Under the null `p_correct >= p_incorrect`, the count of the
/// correct ranking among the tuple's observations is at least `Bin(n, 1/2)`.
pub fn check_sc_statistical_with(
    tech: &RankingTechnology,
    x: &ValueVector,
    samples: u64,
    confidence: f64,
    seed: u64,
    min_cell: u64,
    caps: &Caps,
) -> Result<ConsistencyReport> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return invalid(format!("confidence must lie in (0, 1), got {confidence}"));
    }
    let m = x.len();
    check_limit(
        "m for statistical consistency check",
        m as u128,
        caps.estimate_m as u128,
    )?;
    let est = match estimate_pmf(tech, x, samples, seed, caps)? {
        RankingPmf::Estimated { pmf, .. } => pmf,
        RankingPmf::Exact { .. } => unreachable!("estimate_pmf always estimates"),
    };
    let frac = |c: u64| BigRational::new(c.into(), samples.into());

    struct Cell {
        r: Ranking,
        i: usize,
        j: usize,
        nc: u64,
        ni: u64,
    }
    let mut cells = Vec::new();
    let mut inconclusive = 0u64;
    for r in all_rankings(m) {
        for i in 0..m {
            for j in i + 1..m {
                if x.get(r.at(i)) < x.get(r.at(j)) {
                    continue;
                }
                let nc = est.count(&r);
                let ni = est.count(&r.swapped(i, j));
                if nc + ni == 0 {
                    continue;
                }
                if nc + ni < min_cell {
                    inconclusive += 1;
                    continue;
                }
                cells.push(Cell {
                    r: r.clone(),
                    i,
                    j,
                    nc,
                    ni,
                });
            }
        }
    }
    let tests = cells.len() as u64;
    let alpha = 1.0 - confidence;
    let level = alpha / tests.max(1) as f64;
    let mut rejections = 0u64;
    let mut delta_ucb = 0.0f64;
    let mut worst: Option<(BigRational, ConsistencyTuple)> = None;
    for cell in &cells {
        let n = cell.nc + cell.ni;
        let binom = Binomial::new(0.5, n).map_err(|e| Error::Evaluation(e.to_string()))?;
        if binom.cdf(cell.nc) < level {
            rejections += 1;
        }
        // Clopper-Pearson lower bound on theta = p_c / (p_c + p_i)
        let theta_low = if cell.nc == 0 {
            0.0
        } else {
            Beta::new(cell.nc as f64, (cell.ni + 1) as f64)
                .map_err(|e| Error::Evaluation(e.to_string()))?
                .inverse_cdf(level)
        };
        let d_up = if theta_low >= 0.5 {
            0.0
        } else if theta_low <= 0.0 {
            1.0
        } else {
            1.0 - theta_low / (1.0 - theta_low)
        };
        delta_ucb = delta_ucb.max(d_up);
        if cell.ni > cell.nc {
            let delta = BigRational::one() - BigRational::new(cell.nc.into(), cell.ni.into());
            if worst.as_ref().is_none_or(|(d, _)| &delta > d) {
                let t = ConsistencyTuple::new(
                    cell.r.clone(),
                    cell.i,
                    cell.j,
                    frac(cell.nc),
                    frac(cell.ni),
                );
                worst = Some((delta, t));
            }
        }
    }
    let (delta_star, witness) = match worst {
        Some((d, t)) => (d, Some(t)),
        None => (BigRational::zero(), None),
    };
    let note = if inconclusive == 0 {
        "every observed tuple had enough samples".to_string()
    } else {
        format!(
            "{inconclusive} observed tuples had fewer than {min_cell} samples and were not tested"
        )
    };
    Ok(ConsistencyReport {
        technology: tech.id.clone(),
        x: x.clone(),
        verdict: Verdict::Statistical {
            consistent: rejections == 0,
            confidence,
        },
        delta_star,
        witness,
        tuples_examined: tests,
        statistical: Some(StatisticalDetails {
            samples,
            seed,
            confidence,
            min_cell,
            tests,
            rejections,
            inconclusive,
            delta_ucb,
            note,
        }),
    })
}

/// `1 + 1/(1 - delta)^2`; unbounded when `delta >= 1`.
pub fn poa_bound(delta: &BigRational) -> Option<BigRational> {
    let slack = BigRational::one() - delta;
    if slack <= BigRational::zero() {
        return None;
    }
    Some(BigRational::one() + (&slack * &slack).recip())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechDelta {
    pub technology: String,
    #[serde(serialize_with = "ser_exact")]
    pub delta_star: BigRational,
    pub exact: bool,
    pub worst_x: Option<ValueVector>,
    pub witness: Option<ConsistencyTuple>,
    pub points_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub technologies: Vec<TechDelta>,
    #[serde(serialize_with = "ser_exact")]
    pub delta_star: BigRational,
    /// Implied price-of-anarchy bound; `None` when `delta* = 1`.
    #[serde(serialize_with = "ser_opt_exact")]
    pub bound: Option<BigRational>,
    pub exact: bool,
}

fn ser_opt_exact<S: Serializer>(q: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    q.as_ref().map(ExactNumber::from).serialize(s)
}

/// `delta*` of every technology over the value vectors `xs`, and of the
/// whole space.
pub fn measure_delta(
    space: &[RankingTechnology],
    xs: &[ValueVector],
    caps: &Caps,
) -> Result<DeltaReport> {
    if xs.is_empty() {
        return invalid("measure_delta needs at least one value vector");
    }
    let mut technologies = Vec::new();
    for tech in space {
        let mut best = TechDelta {
            technology: tech.id.clone(),
            delta_star: BigRational::zero(),
            exact: true,
            worst_x: None,
            witness: None,
            points_checked: xs.len(),
        };
        for x in xs {
            let rep = check_sc_exact_with(tech, x, caps)?;
            best.exact &= rep.is_exact();
            if rep.delta_star > best.delta_star {
                best.delta_star = rep.delta_star.clone();
                best.worst_x = Some(x.clone());
                best.witness = rep.witness.clone();
            }
        }
        technologies.push(best);
    }
    let delta_star = technologies
        .iter()
        .map(|t| t.delta_star.clone())
        .max()
        .unwrap_or_else(BigRational::zero);
    Ok(DeltaReport {
        exact: technologies.iter().all(|t| t.exact),
        bound: poa_bound(&delta_star),
        delta_star,
        technologies,
    })
}

/// A joint density on `R^m` that can be evaluated pointwise.
pub trait JointDensity {
    fn density(&self, z: &[f64]) -> Result<f64>;
}

impl JointDensity for NoiseSpec {
    fn density(&self, z: &[f64]) -> Result<f64> {
        self.joint_density(z)
    }
}

/// Adapts a closure into a [`JointDensity`].
pub struct FnDensity<F>(pub F);

impl<F: Fn(&[f64]) -> f64> JointDensity for FnDensity<F> {
    fn density(&self, z: &[f64]) -> Result<f64> {
        Ok((self.0)(z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurCounterexample {
    /// The majorizing point.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub fx: f64,
    pub fy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurCheck {
    pub passed: bool,
    pub trials: u64,
    pub counterexample: Option<SchurCounterexample>,
}

/// Draws `y` uniformly from `[-scale, scale]^m`, moves mass `c` from a
/// smaller to a larger coordinate to get `x` majorizing `y`, and requires
/// `f(x) <= f(y) + 1e-12`.
pub fn schur_spot_check<D: JointDensity + ?Sized, R: Rng + ?Sized>(
    density: &D,
    m: usize,
    trials: u64,
    scale: f64,
    rng: &mut R,
) -> Result<SchurCheck> {
    if m < 2 {
        return invalid("Schur spot check needs m >= 2");
    }
    if !(scale.is_finite() && scale > 0.0) {
        return invalid("scale must be positive");
    }
    for t in 0..trials {
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-scale..scale)).collect();
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let (hi, lo) = if y[a] >= y[b] { (a, b) } else { (b, a) };
        let c = rng.random_range(0.0..scale);
        let mut x = y.clone();
        x[hi] += c;
        x[lo] -= c;
        debug_assert!(majorizes(&x, &y).unwrap_or(false));
        let fx = density.density(&x)?;
        let fy = density.density(&y)?;
        if fx > fy + 1e-12 {
            return Ok(SchurCheck {
                passed: false,
                trials: t + 1,
                counterexample: Some(SchurCounterexample { x, y, fx, fy }),
            });
        }
    }
    Ok(SchurCheck {
        passed: true,
        trials,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::RankDistance;
    use crate::exact::rat;
    use crate::tech::{PmfEntry, TableEntry, TechKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mallows(phi: BigRational, d: RankDistance) -> RankingTechnology {
        RankingTechnology::mallows("M", phi, d).unwrap()
    }

    #[test]
    fn kendall_is_consistent() {
        let x = ValueVector::from_ints(&[3, 2, 1]).unwrap();
        let rep = check_sc_exact(&mallows(rat(1, 2), RankDistance::KendallTau), &x).unwrap();
        assert_eq!(rep.verdict, Verdict::Consistent);
        assert!(rep.delta_star.is_zero());
    }

    #[test]
    fn hamming_witness() {
        let x = ValueVector::from_ints(&[3, 2, 1]).unwrap();
        let rep = check_sc_exact(&mallows(rat(1, 2), RankDistance::Hamming), &x).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        let w = rep.witness.unwrap();
        assert_eq!(w.positions, (0, 1));
        assert_eq!(w.candidates, (1, 2));
        assert_eq!(w.conditioning, vec![(2, 0)]);
        assert_eq!(w.ratio(), Some(rat(1, 2)));
        assert_eq!(rep.delta_star, rat(1, 2));
    }

    #[test]
    fn zero_mass_partner_counts_as_full_violation() {
        let t =
            RankingTechnology::constant("D", Ranking::from_one_based(&[2, 1]).unwrap()).unwrap();
        let x = ValueVector::from_ints(&[1, 0]).unwrap();
        let rep = check_sc_exact(&t, &x).unwrap();
        assert_eq!(rep.delta_star, rat(1, 1));
        assert_eq!(poa_bound(&rep.delta_star), None);
        // ties demand equality in both directions
        let x = ValueVector::from_ints(&[1, 1]).unwrap();
        assert!(!check_sc_exact(&t, &x).unwrap().is_consistent());
    }

    #[test]
    fn table_statistical_violation() {
        let t = RankingTechnology::new(
            "T",
            TechKind::Table {
                entries: vec![TableEntry {
                    x: ValueVector::from_ints(&[1, 0]).unwrap(),
                    pmf: vec![
                        PmfEntry {
                            ranking: Ranking::from_one_based(&[2, 1]).unwrap(),
                            p: rat(9, 10),
                        },
                        PmfEntry {
                            ranking: Ranking::identity(2),
                            p: rat(1, 10),
                        },
                    ],
                }],
            },
        )
        .unwrap();
        let x = ValueVector::from_ints(&[1, 0]).unwrap();
        let rep = check_sc_statistical(&t, &x, 100_000, 0.99, 1).unwrap();
        assert!(!rep.is_consistent());
        assert!((exact::to_f64(&rep.delta_star) - 8.0 / 9.0).abs() < 0.01);
    }

    #[test]
    fn bound_formula() {
        assert_eq!(poa_bound(&rat(0, 1)), Some(rat(2, 1)));
        assert_eq!(poa_bound(&rat(1, 2)), Some(rat(5, 1)));
    }

    #[test]
    fn schur_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = NoiseSpec::Gaussian { sigma: 1.0 };
        assert!(schur_spot_check(&g, 3, 2000, 2.0, &mut rng).unwrap().passed);
        let convex = FnDensity(|z: &[f64]| {
            if z.iter().all(|v| v.abs() <= 1.0) {
                z.iter().map(|v| v * v).sum::<f64>().exp()
            } else {
                0.0
            }
        });
        let res = schur_spot_check(&convex, 3, 2000, 1.0, &mut rng).unwrap();
        assert!(!res.passed);
        let ce = res.counterexample.unwrap();
        assert!(majorizes(&ce.x, &ce.y).unwrap());
    }
}
