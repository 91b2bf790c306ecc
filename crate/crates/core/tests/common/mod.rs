//! Independent oracles shared by the integration tests: plain enumeration
//! of every value atom, firm order and joint sample, with no branching
//! tricks or orbit merging.
#![allow(dead_code)]

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rsd_core::game::GameSpec;
use rsd_core::perm::Ranking;
use rsd_core::tech::{exact_pmf_with, Caps, ValueVector};
use rsd_core::Profile;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// One fully enumerated outcome: probability, values, order, per-run hires.
pub struct Outcome {
    pub p: Q,
    pub x: ValueVector,
    pub order: Vec<usize>,
    pub hires: Vec<Vec<usize>>,
}

fn obedient_run(rankings: &[&Ranking], order: &[usize], n: usize, m: usize) -> Vec<usize> {
    let mut taken = vec![false; m];
    let mut hires = vec![usize::MAX; n];
    for &f in order {
        let c = rankings[f]
            .as_slice()
            .iter()
            .copied()
            .find(|&c| !taken[c])
            .expect("a candidate is left");
        taken[c] = true;
        hires[f] = c;
    }
    hires
}

/// Enumerates obedient full runs of every profile in `profiles`, coupled by
/// technology id.
pub fn enumerate(spec: &GameSpec, profiles: &[&Profile]) -> Vec<Outcome> {
    let n = spec.n();
    let m = spec.m();
    let caps = Caps::default();
    let ids: Vec<String> = profiles
        .iter()
        .flat_map(|p| p.choices.iter().cloned())
        .unique()
        .collect();
    let atoms = spec.values().atoms(10_000_000).unwrap();
    let orders: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let nf = q(orders.len() as i64, 1);
    let mut out = Vec::new();
    for (mass, x) in atoms {
        let pmfs: Vec<Vec<(Ranking, Q)>> = ids
            .iter()
            .map(|id| {
                let pmf = exact_pmf_with(spec.technology(id).unwrap(), &x, &caps).unwrap();
                pmf.rankings()
                    .iter()
                    .map(|r| (r.clone(), pmf.prob(r)))
                    .collect()
            })
            .collect();
        for combo in pmfs.iter().map(|p| p.iter()).multi_cartesian_product() {
            let p_combo = combo.iter().fold(Q::one(), |a, (_, p)| a * p);
            for order in &orders {
                let hires = profiles
                    .iter()
                    .map(|prof| {
                        let rankings: Vec<&Ranking> = prof
                            .choices
                            .iter()
                            .map(|id| &combo[ids.iter().position(|i| i == id).unwrap()].0)
                            .collect();
                        obedient_run(&rankings, order, n, m)
                    })
                    .collect();
                out.push(Outcome {
                    p: &mass * &p_combo / &nf,
                    x: x.clone(),
                    order: order.clone(),
                    hires,
                });
            }
        }
    }
    out
}

pub fn utilities(spec: &GameSpec, profile: &Profile) -> Vec<Q> {
    let mut u = vec![Q::zero(); spec.n()];
    for o in enumerate(spec, &[profile]) {
        for (f, &c) in o.hires[0].iter().enumerate() {
            u[f] += &o.p * o.x.get(c);
        }
    }
    u
}

/// Conditional gap of `firm` over outcomes accepted by `keep`; `None` when
/// the event is impossible. The deviation run is (s*_i, s_-i).
pub fn deviation_gap(
    spec: &GameSpec,
    s: &Profile,
    s_star: &Profile,
    firm: usize,
    keep: impl Fn(&[usize]) -> bool,
) -> Option<Q> {
    let dev = s.with_choice(firm, &s_star.choices[firm]);
    let mut num = Q::zero();
    let mut den = Q::zero();
    for o in enumerate(spec, &[&dev, s_star]) {
        if !keep(&o.order) {
            continue;
        }
        let k = o.order.iter().position(|&f| f == firm).unwrap();
        let preds: Vec<usize> = o.order[..k].iter().map(|&f| o.hires[0][f]).collect();
        let star_hire = o.hires[1][firm];
        if preds.contains(&star_hire) {
            continue;
        }
        num += &o.p * (o.x.get(o.hires[0][firm]) - o.x.get(star_hire));
        den += &o.p;
    }
    (!den.is_zero()).then(|| num / den)
}

/// (snatched, available) welfare of `s_star` against `s`.
pub fn split(spec: &GameSpec, s: &Profile, s_star: &Profile) -> (Q, Q) {
    let mut snatched = Q::zero();
    let mut available = Q::zero();
    for o in enumerate(spec, &[s, s_star]) {
        for (k, &f) in o.order.iter().enumerate() {
            let c = o.hires[1][f];
            let v = &o.p * o.x.get(c);
            if o.order[..k].iter().any(|&g| o.hires[0][g] == c) {
                snatched += v;
            } else {
                available += v;
            }
        }
    }
    (snatched, available)
}
