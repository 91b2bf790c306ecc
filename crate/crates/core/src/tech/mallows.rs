use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use rand::Rng;

use crate::distance::{distance, RankDistance};
use crate::error::Result;
use crate::perm::{all_rankings, Ranking};

/// Integer weights proportional to the Mallows pmf around the mixture of
/// centres `centres`: `w(pi) = sum_c p^d(pi,c) q^(D - d(pi,c))` where
/// `phi = p/q` and `D` is the largest distance seen.
pub(crate) fn weights(
    phi: &BigRational,
    d: &RankDistance,
    centres: &[Ranking],
    m: usize,
) -> Result<Vec<(Ranking, BigUint)>> {
    let p = phi.numer().magnitude().clone();
    let q = phi.denom().magnitude().clone();
    let rankings: Vec<Ranking> = all_rankings(m).collect();
    let mut dists = Vec::with_capacity(rankings.len());
    let mut dmax = 0u64;
    for pi in &rankings {
        let row = centres
            .iter()
            .map(|c| distance(d, pi, c))
            .collect::<Result<Vec<u64>>>()?;
        dmax = dmax.max(row.iter().copied().max().unwrap_or(0));
        dists.push(row);
    }
    let p_pow: Vec<BigUint> = (0..=dmax).map(|k| Pow::pow(&p, k)).collect();
    let q_pow: Vec<BigUint> = (0..=dmax).map(|k| Pow::pow(&q, k)).collect();
    Ok(rankings
        .into_iter()
        .zip(dists)
        .map(|(pi, row)| {
            let w = row
                .iter()
                .map(|&k| &p_pow[k as usize] * &q_pow[(dmax - k) as usize])
                .fold(BigUint::ZERO, |a, b| a + b);
            (pi, w)
        })
        .collect())
}

/// Repeated-insertion draw from Mallows with Kendall tau around `centre`.
///
/// The `i`-th candidate of the centre is inserted at slot `j` of the `i`
/// already placed with probability proportional to `phi^(i - j)`.
pub(crate) fn sample_kendall<R: Rng + ?Sized>(phi: f64, centre: &Ranking, rng: &mut R) -> Ranking {
    let m = centre.len();
    let mut order: Vec<usize> = Vec::with_capacity(m);
    let mut powers = vec![1.0f64; m + 1];
    for k in 1..=m {
        powers[k] = powers[k - 1] * phi;
    }
    for i in 0..m {
        // slots 0..=i; slot j costs i - j inversions
        let total: f64 = powers[..=i].iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut slot = 0;
        for j in (0..=i).rev() {
            let w = powers[i - j];
            if u < w {
                slot = j;
                break;
            }
            u -= w;
            slot = j;
        }
        order.insert(slot, centre.at(i));
    }
    Ranking::from_vec_unchecked(order)
}

pub(crate) fn phi_f64(phi: &BigRational) -> f64 {
    if phi.is_one() {
        1.0
    } else {
        phi.to_f64().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn kendall_weights_s3() {
        let w = weights(
            &rat(1, 2),
            &RankDistance::KendallTau,
            &[Ranking::identity(3)],
            3,
        )
        .unwrap();
        // D = 3, so weights are 2^(3-d): 8,4,4,2,2,1
        let as_u: Vec<u64> = w.iter().map(|(_, v)| v.to_u64().unwrap()).collect();
        assert_eq!(as_u, vec![8, 4, 4, 2, 2, 1]);
    }

    #[test]
    fn insertion_sampler_matches_weights() {
        let centre = Ranking::from_one_based(&[2, 3, 1]).unwrap();
        let w = weights(
            &rat(1, 2),
            &RankDistance::KendallTau,
            std::slice::from_ref(&centre),
            3,
        )
        .unwrap();
        let total: f64 = w.iter().map(|(_, v)| v.to_f64().unwrap()).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts: HashMap<Ranking, u32> = HashMap::new();
        for _ in 0..n {
            *counts
                .entry(sample_kendall(0.5, &centre, &mut rng))
                .or_default() += 1;
        }
        let tv: f64 = w
            .iter()
            .map(|(r, v)| {
                let f = f64::from(*counts.get(r).unwrap_or(&0)) / f64::from(n);
                (f - v.to_f64().unwrap() / total).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv = {tv}");
    }
}
