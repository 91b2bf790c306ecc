//! Distances between rankings and the inversion-monotonicity checker.

use serde::{Deserialize, Serialize};

use crate::error::{check_limit, invalid, Result};
use crate::perm::{all_rankings, factorial, Ranking};

/// Default enumeration cap for exhaustive checks over `S_m`.
pub const INVERSION_CHECK_CAP: usize = 6;

/// A tabulated function `g` on `{0, ..., len-1}`, non-decreasing and convex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct GTable(Vec<u64>);

impl GTable {
    pub fn new(table: Vec<u64>) -> Result<Self> {
        if table.is_empty() {
            return invalid("g table must have at least one entry");
        }
        if table.windows(2).any(|w| w[1] < w[0]) {
            return invalid(format!("g table {table:?} is not non-decreasing"));
        }
        if table
            .windows(3)
            .any(|w| (w[2] as i128) - 2 * (w[1] as i128) + (w[0] as i128) < 0)
        {
            return invalid(format!("g table {table:?} is not convex"));
        }
        Ok(GTable(table))
    }

    /// `g(t) = t^p` tabulated on `0..len`.
    pub fn power(len: usize, p: u32) -> Self {
        GTable((0..len as u64).map(|t| t.pow(p)).collect())
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for GTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        GTable::new(Vec::<u64>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDistance {
    KendallTau,
    SpearmanRho,
    SpearmanFootrule,
    Cayley,
    Hamming,
    GSum(GTable),
}

impl RankDistance {
    pub fn name(&self) -> &'static str {
        match self {
            RankDistance::KendallTau => "kendall_tau",
            RankDistance::SpearmanRho => "spearman_rho",
            RankDistance::SpearmanFootrule => "spearman_footrule",
            RankDistance::Cayley => "cayley",
            RankDistance::Hamming => "hamming",
            RankDistance::GSum(_) => "g_sum",
        }
    }

    /// Largest value this distance takes on `S_m`.
    pub fn max_over(&self, m: usize) -> Result<u64> {
        let identity = Ranking::identity(m);
        match self {
            RankDistance::KendallTau => Ok((m * m.saturating_sub(1) / 2) as u64),
            RankDistance::Cayley => Ok(m.saturating_sub(1) as u64),
            RankDistance::Hamming => Ok(if m == 1 { 0 } else { m as u64 }),
            _ => {
                let mut reversed: Vec<usize> = (0..m).collect();
                reversed.reverse();
                let reversed = Ranking::from_vec_unchecked(reversed);
                // Spearman-type sums of a non-decreasing convex function of
                // displacement are maximised by the reversal.
                distance(self, &reversed, &identity)
            }
        }
    }
}

/// `d(a, b)`. Displacement-based kinds compare each candidate's positions.
pub fn distance(d: &RankDistance, a: &Ranking, b: &Ranking) -> Result<u64> {
    let m = a.len();
    if b.len() != m {
        return invalid(format!(
            "rankings of different lengths {} and {}",
            m,
            b.len()
        ));
    }
    let pa = a.positions();
    let pb = b.positions();
    let disp = |c: usize| pa[c].abs_diff(pb[c]) as u64;
    let value = match d {
        RankDistance::KendallTau => {
            let mut count = 0u64;
            for x in 0..m {
                for y in x + 1..m {
                    if (pa[x] < pa[y]) != (pb[x] < pb[y]) {
                        count += 1;
                    }
                }
            }
            count
        }
        RankDistance::SpearmanRho => (0..m).map(|c| disp(c) * disp(c)).sum(),
        RankDistance::SpearmanFootrule => (0..m).map(disp).sum(),
        RankDistance::Hamming => (0..m).filter(|&p| a.at(p) != b.at(p)).count() as u64,
        RankDistance::Cayley => {
            // sigma = a o b^{-1} as a map on positions of b
            let mut seen = vec![false; m];
            let mut cycles = 0u64;
            for start in 0..m {
                if seen[start] {
                    continue;
                }
                cycles += 1;
                let mut p = start;
                while !seen[p] {
                    seen[p] = true;
                    p = pb[a.at(p)];
                }
            }
            m as u64 - cycles
        }
        RankDistance::GSum(g) => {
            let table = g.values();
            if table.len() < m {
                return invalid(format!(
                    "g table has {} entries, need {m} for m={m}",
                    table.len()
                ));
            }
            (0..m).map(|c| table[disp(c) as usize]).sum()
        }
    };
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum InversionCheck {
    Holds {
        permutations: u64,
    },
    Violation {
        pi: Ranking,
        /// The correctly ordered pair, higher-ranked candidate first.
        pair: (usize, usize),
        positions: (usize, usize),
        swapped: Ranking,
        d_pi: u64,
        d_swapped: u64,
    },
}

impl InversionCheck {
    pub fn holds(&self) -> bool {
        matches!(self, InversionCheck::Holds { .. })
    }
}

/// Exhaustively checks that swapping any correctly ordered pair never
/// brings a ranking closer to `ground_truth`.
///
/// Reports the violation with the lexicographically smallest `pi`, then the
/// smallest position pair.
pub fn is_inversion_monotone(
    d: &RankDistance,
    m: usize,
    ground_truth: &Ranking,
    cap: usize,
) -> Result<InversionCheck> {
    check_limit(
        "permutation size for exhaustive check",
        m as u128,
        cap as u128,
    )?;
    if ground_truth.len() != m {
        return invalid("ground truth length does not match m");
    }
    let truth_pos = ground_truth.positions();
    for pi in all_rankings(m) {
        let d_pi = distance(d, &pi, ground_truth)?;
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (pi.at(i), pi.at(j));
                if truth_pos[a] > truth_pos[b] {
                    continue;
                }
                let swapped = pi.swapped(i, j);
                let d_swapped = distance(d, &swapped, ground_truth)?;
                if d_pi > d_swapped {
                    return Ok(InversionCheck::Violation {
                        pi,
                        pair: (a, b),
                        positions: (i, j),
                        swapped,
                        d_pi,
                        d_swapped,
                    });
                }
            }
        }
    }
    Ok(InversionCheck::Holds {
        permutations: factorial(m) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[usize]) -> Ranking {
        Ranking::from_one_based(v).unwrap()
    }

    fn all_kinds(m: usize) -> Vec<RankDistance> {
        vec![
            RankDistance::KendallTau,
            RankDistance::SpearmanRho,
            RankDistance::SpearmanFootrule,
            RankDistance::Cayley,
            RankDistance::Hamming,
            RankDistance::GSum(GTable::power(m, 3)),
        ]
    }

    #[test]
    fn worked_examples() {
        let id = r(&[1, 2, 3]);
        assert_eq!(
            distance(&RankDistance::KendallTau, &r(&[3, 1, 2]), &id).unwrap(),
            2
        );
        assert_eq!(
            distance(&RankDistance::SpearmanFootrule, &r(&[2, 1, 3]), &id).unwrap(),
            2
        );
        assert_eq!(
            distance(&RankDistance::Hamming, &r(&[2, 3, 1]), &id).unwrap(),
            3
        );
        assert_eq!(
            distance(&RankDistance::Hamming, &r(&[3, 2, 1]), &id).unwrap(),
            2
        );
        assert_eq!(
            distance(&RankDistance::Cayley, &r(&[2, 3, 1]), &id).unwrap(),
            2
        );
        assert_eq!(
            distance(&RankDistance::Cayley, &r(&[2, 1, 3]), &id).unwrap(),
            1
        );
        assert_eq!(
            distance(&RankDistance::SpearmanRho, &r(&[3, 2, 1]), &id).unwrap(),
            8
        );
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(distance(&RankDistance::KendallTau, &r(&[1, 2]), &r(&[1, 2, 3])).is_err());
    }

    #[test]
    fn metric_axioms_on_small_sets() {
        for m in 1..=4 {
            for d in all_kinds(m) {
                let all: Vec<_> = all_rankings(m).collect();
                for a in &all {
                    assert_eq!(distance(&d, a, a).unwrap(), 0);
                    for b in &all {
                        let ab = distance(&d, a, b).unwrap();
                        assert_eq!(ab, distance(&d, b, a).unwrap(), "{d:?} not symmetric");
                        if a != b {
                            assert!(ab > 0, "{d:?} zero on distinct {a} {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kendall_matches_brute_force_inversions() {
        for m in 1..=4 {
            let id = Ranking::identity(m);
            for pi in all_rankings(m) {
                let s = pi.as_slice();
                let mut inv = 0;
                for i in 0..m {
                    for j in i + 1..m {
                        if s[i] > s[j] {
                            inv += 1;
                        }
                    }
                }
                assert_eq!(distance(&RankDistance::KendallTau, &pi, &id).unwrap(), inv);
            }
        }
    }

    #[test]
    fn max_over_matches_enumeration() {
        for m in 1..=5 {
            for d in all_kinds(m) {
                let id = Ranking::identity(m);
                let brute = all_rankings(m)
                    .map(|p| distance(&d, &p, &id).unwrap())
                    .max()
                    .unwrap();
                assert_eq!(d.max_over(m).unwrap(), brute, "{d:?} m={m}");
            }
        }
    }

    #[test]
    fn g_table_validation() {
        assert!(GTable::new(vec![0, 1, 4, 9]).is_ok());
        assert!(GTable::new(vec![0, 2, 3]).is_err()); // concave
        assert!(GTable::new(vec![3, 2, 1]).is_err()); // decreasing
        let parsed: std::result::Result<RankDistance, _> =
            serde_json::from_str(r#"{"g_sum":[0,5,6]}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn inversion_monotone_kinds() {
        for m in 2..=5 {
            let id = Ranking::identity(m);
            for d in [
                RankDistance::KendallTau,
                RankDistance::SpearmanRho,
                RankDistance::SpearmanFootrule,
                RankDistance::GSum(GTable::power(m, 2)),
                RankDistance::GSum(GTable::power(m, 1)),
            ] {
                let res = is_inversion_monotone(&d, m, &id, INVERSION_CHECK_CAP).unwrap();
                assert!(res.holds(), "{d:?} m={m}: {res:?}");
            }
        }
        // non-identity ground truth
        let truth = r(&[3, 1, 4, 2]);
        assert!(
            is_inversion_monotone(&RankDistance::KendallTau, 4, &truth, 6)
                .unwrap()
                .holds()
        );
    }

    #[test]
    fn hamming_violation_witness() {
        let res =
            is_inversion_monotone(&RankDistance::Hamming, 3, &Ranking::identity(3), 6).unwrap();
        match res {
            InversionCheck::Violation {
                pi,
                pair,
                swapped,
                d_pi,
                d_swapped,
                ..
            } => {
                assert_eq!(pi, r(&[2, 3, 1]));
                assert_eq!(pair, (1, 2));
                assert_eq!(swapped, r(&[3, 2, 1]));
                assert_eq!((d_pi, d_swapped), (3, 2));
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = is_inversion_monotone(&RankDistance::KendallTau, 7, &Ranking::identity(7), 6);
        assert!(matches!(err, Err(crate::Error::ResourceLimit { .. })));
    }
}
