mod common;

use common::{q, Q};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsd_core::game::{EngineOptions, ExactEngine, ValueDistribution};
use rsd_core::instances::{
    gen_deviation_counterexample, gen_linear_poa, gen_random_sc_game, gen_tight_poa,
    linear_sequence, InstanceDescriptor, TechPool, Verification, VerifyOptions,
};
use rsd_core::{check_sc_exact, play_once, ValueVector};
use std::collections::BTreeSet;

#[test]
fn tight_parameters() {
    let d = gen_tight_poa(3, &q(1, 20), &VerifyOptions::default()).unwrap();
    assert_eq!(d.spec.m(), 8);
    assert!(d.is_verified());
    assert!(d.spec.values().is_permutation_invariant());
    let mut x = vec![Q::zero(); 8];
    x[0] = Q::one();
    x[1] = q(19, 40);
    let x = ValueVector::new(x).unwrap();
    for tech in d.spec.technologies() {
        assert!(
            check_sc_exact(tech, &x).unwrap().is_consistent(),
            "{}",
            tech.id
        );
    }
    // the declared invariance survives a round trip through the closure check
    let wire = serde_json::to_string(d.spec.values()).unwrap();
    let back: ValueDistribution = serde_json::from_str(&wire).unwrap();
    assert!(back.is_permutation_invariant());
}

#[test]
fn tight_generator_flags_a_failed_equilibrium() {
    // v far above (n-1)/(n+1) cannot hold A^n in place
    let d = gen_tight_poa(2, &q(1, 100), &VerifyOptions::default()).unwrap();
    if let Verification::Unverified { reason } = &d.verification {
        assert!(!reason.is_empty());
    }
    assert!(gen_tight_poa(3, &Q::zero(), &VerifyOptions::default()).is_err());
    assert!(gen_tight_poa(1, &q(1, 2), &VerifyOptions::default()).is_err());
}

#[test]
fn linear_sequence_matches_formula() {
    let a = linear_sequence(3, &q(9, 100));
    assert_eq!(a, vec![q(99, 100), q(199, 100), q(599, 100)]);
    let verify = VerifyOptions {
        exact_max_n: 3,
        ..Default::default()
    };
    let d = gen_linear_poa(3, &q(9, 100), &verify).unwrap();
    assert!(d.is_verified(), "{:?}", d.verification);
    assert_eq!(d.spec.m(), 6);
}

fn last_firm_gap(d: &InstanceDescriptor) -> (Option<Q>, Option<Q>) {
    let n = d.spec.n();
    let s = d.profile("base").unwrap();
    let t = d.profile("comparison").unwrap();
    let engine = ExactEngine::new(&d.spec, EngineOptions::default()).unwrap();
    let r = engine.deviation_gap(s, t, n - 1, None).unwrap();
    let got = r.aggregate_where(|c| c.order[n - 1] == n);
    let want = common::deviation_gap(&d.spec, s, t, n - 1, |o| o[n - 1] == n - 1);
    (got, want)
}

#[test]
fn counterexample_gap_is_negative() {
    for phi in [q(1, 2), Q::one()] {
        let d = gen_deviation_counterexample(2, &phi, &VerifyOptions::default()).unwrap();
        assert!(d.is_verified());
        let (got, want) = last_firm_gap(&d);
        assert_eq!(got, want);
        assert!(got.unwrap() < Q::zero(), "phi={phi}");
    }
    let d = gen_deviation_counterexample(2, &q(1, 1_000_000), &VerifyOptions::default()).unwrap();
    let (got, want) = last_firm_gap(&d);
    assert_eq!(got, want);
    let g = got.unwrap();
    assert!(g <= Q::zero() && g > q(-1, 1000), "{g}");
}

#[test]
fn counterexample_leaves_four_candidates() {
    let d = gen_deviation_counterexample(3, &q(1, 2), &VerifyOptions::default()).unwrap();
    assert!(!d.is_verified(), "m = 6 exceeds the default pmf cap");
    assert_eq!(d.spec.m(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for name in ["base", "comparison"] {
        let p = d.profile(name).unwrap();
        let mut left = BTreeSet::new();
        for _ in 0..400 {
            let o = play_once(&d.spec, p, &mut rng).unwrap();
            if o.order.at(2) == 2 {
                left.extend((0..6).filter(|c| !o.hires[..2].contains(c)).map(|c| c + 1));
            }
        }
        let want: BTreeSet<usize> = match name {
            "base" => [1, 4, 5, 6].into(),
            _ => [1, 2, 3, 4].into(),
        };
        assert_eq!(left, want, "{name}");
    }
}

#[test]
fn random_consistent_games_certify() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..5 {
        let d = gen_random_sc_game(3, 4, &TechPool::default(), &mut rng).unwrap();
        assert!(d.is_verified());
        assert_eq!(d.measured.get("delta_star").map(String::as_str), Some("0"));
        assert!(d.spec.values().is_permutation_invariant());
        let json = serde_json::to_string(&d).unwrap();
        let back: InstanceDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
