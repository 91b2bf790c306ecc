mod common;

use common::{q, Q};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsd_core::equilibrium::{
    analyze_exact, best_response_gap, dominant_strategy, find_pure_nash, price_of_anarchy,
    smoothness_check, social_optimum, Dominance, UtilityTable, DEFAULT_PROFILE_CAP,
};
use rsd_core::game::{
    AdviceSpace, EngineOptions, ExactEngine, FirmAdvice, GameSpec, Mechanism, ValueDistribution,
};
use rsd_core::instances::{
    gen_linear_poa, gen_random_game, gen_random_sc_game, gen_tight_poa, TechPool, VerifyOptions,
};
use rsd_core::perm::Ranking;
use rsd_core::{Profile, RankDistance, RankingTechnology, ValueVector};

fn table_for(spec: &GameSpec) -> UtilityTable {
    let engine = ExactEngine::new(spec, EngineOptions::default()).unwrap();
    UtilityTable::exact(&engine, DEFAULT_PROFILE_CAP).unwrap()
}

fn no_verify() -> VerifyOptions {
    VerifyOptions {
        skip: true,
        ..Default::default()
    }
}

/// a_j as written, summed directly.
fn sequence_sum(n: i64, eps: &Q) -> Q {
    (1..=n)
        .map(|j| {
            Q::one() + q(j * (j - 1), n - j + 1)
                - q((j - 1) * (j - 2), n - j + 2)
                - eps / q(n * n, 1)
        })
        .sum()
}

#[test]
fn linear_instance_n3_values() {
    let eps = q(9, 100);
    let d = gen_linear_poa(3, &eps, &no_verify()).unwrap();
    let spec = &d.spec;
    let t = table_for(spec);
    let u = |ids: &[&str]| t.lookup(&Profile::from_ids(ids)).unwrap().to_vec();

    assert_eq!(u(&["A", "A", "A"])[0], Q::one());
    assert_eq!(u(&["H1", "A", "A"])[0], q(99, 100));
    assert_eq!(u(&["H1", "A", "H3"])[0], q(149, 100));
    assert_eq!(u(&["A", "A", "H3"])[0], q(3, 2));
    assert_eq!(
        t.social_welfare(&spec.symmetric_profile("A")).unwrap(),
        q(3, 1)
    );

    let all_h = Profile::from_ids(&["H1", "H2", "H3"]);
    for firm in 0..3 {
        let (gap, id) = best_response_gap(spec, &t, &all_h, firm).unwrap();
        assert_eq!(gap, &eps / q(9, 1));
        assert_eq!(id, "A");
    }

    let nash = find_pure_nash(spec, &t, &Q::zero()).unwrap();
    assert_eq!(nash.len(), 1);
    assert_eq!(nash[0].profile, spec.symmetric_profile("A"));
    for firm in 0..3 {
        assert_eq!(
            dominant_strategy(spec, &t, firm).unwrap(),
            Dominance::Strict("A".into())
        );
    }
    let (opt, sw) = social_optimum(&t).unwrap();
    assert_eq!(opt, all_h);
    assert_eq!(sw, sequence_sum(3, &eps));
    assert_eq!(sw, q(9, 1) - &eps / q(3, 1));
}

#[test]
fn linear_instance_closed_form_utilities() {
    for n in [3usize, 4] {
        let eps = q(1, 100);
        let d = gen_linear_poa(n, &eps, &no_verify()).unwrap();
        let engine = ExactEngine::new(&d.spec, EngineOptions::default()).unwrap();
        for k in 0..n {
            // firm 0 on A, k of the others on their private technology
            let ids: Vec<String> = (0..n)
                .map(|i| {
                    if i >= 1 && i <= k {
                        format!("H{}", i + 1)
                    } else {
                        "A".into()
                    }
                })
                .collect();
            let u = engine.utilities(&Profile::obedient(ids)).unwrap().utilities[0].clone();
            assert_eq!(u, Q::one() + q(k as i64, (n - k) as i64), "n={n} k={k}");
        }
        let sw_h = engine
            .utilities(d.profile("optimum").unwrap())
            .unwrap()
            .social_welfare;
        assert_eq!(sw_h, sequence_sum(n as i64, &eps));
    }
}

#[test]
fn tight_instance_n3_equilibrium_and_optimum() {
    let eta = q(1, 20);
    let d = gen_tight_poa(3, &eta, &VerifyOptions::default()).unwrap();
    assert!(d.is_verified(), "{:?}", d.verification);
    let spec = &d.spec;
    let t = table_for(spec);
    let a3 = spec.symmetric_profile("A");
    for firm in 0..3 {
        assert!(best_response_gap(spec, &t, &a3, firm).unwrap().0 <= Q::zero());
    }
    let nash = find_pure_nash(spec, &t, &Q::zero()).unwrap();
    assert!(nash.iter().any(|e| e.profile == a3));
    let (opt, sw) = social_optimum(&t).unwrap();
    assert_eq!(opt, spec.symmetric_profile("A'"));
    assert_eq!(sw, q(1475, 1000));
}

#[test]
fn trivial_strategy_spaces() {
    let x = ValueVector::from_ints(&[4, 1, 0]).unwrap();
    let k = RankingTechnology::mallows("K", q(1, 2), RankDistance::KendallTau).unwrap();
    let k2 = RankingTechnology::mallows("L", q(1, 2), RankDistance::KendallTau).unwrap();
    let rev =
        RankingTechnology::constant("R", Ranking::from_one_based(&[3, 2, 1]).unwrap()).unwrap();

    // a single technology each: the only profile is an equilibrium, weakly dominant
    let single = GameSpec::new(
        2,
        3,
        ValueDistribution::deterministic(x.clone()).unwrap(),
        AdviceSpace::all_common(vec![k.clone()], 2),
        Mechanism::ObedienceConstrained,
    )
    .unwrap();
    let t = table_for(&single);
    assert_eq!(find_pure_nash(&single, &t, &Q::zero()).unwrap().len(), 1);
    assert_eq!(
        dominant_strategy(&single, &t, 0).unwrap(),
        Dominance::Weak("K".into())
    );
    assert_eq!(
        best_response_gap(&single, &t, &Profile::from_ids(&["K", "K"]), 1)
            .unwrap()
            .0,
        Q::zero()
    );

    // identical private copies: ties everywhere, so nothing dominates
    let twins = GameSpec::new(
        1,
        3,
        ValueDistribution::deterministic(x.clone()).unwrap(),
        AdviceSpace::all_common(vec![k.clone(), k2], 1),
        Mechanism::ObedienceConstrained,
    )
    .unwrap();
    assert_eq!(
        dominant_strategy(&twins, &table_for(&twins), 0).unwrap(),
        Dominance::None
    );

    // one firm picks its best technology
    let solo = GameSpec::new(
        1,
        3,
        ValueDistribution::deterministic(x).unwrap(),
        AdviceSpace {
            common: vec![],
            firms: vec![FirmAdvice {
                common: None,
                idiosyncratic: vec![rev, k],
            }],
        },
        Mechanism::ObedienceConstrained,
    )
    .unwrap();
    let t = table_for(&solo);
    let (opt, _) = social_optimum(&t).unwrap();
    assert_eq!(opt, Profile::from_ids(&["K"]));
    let rep = price_of_anarchy(&solo, &t, None).unwrap();
    assert_eq!(rep.poa, Some(Q::one()));
}

#[test]
fn reports_are_internally_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let d = gen_random_game(
            2,
            3,
            &TechPool::default(),
            Mechanism::ObedienceConstrained,
            false,
            &mut rng,
        )
        .unwrap();
        let (t, delta, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        for e in &rep.pure_nash {
            assert!(e.gaps.iter().all(|g| *g <= Q::zero()));
        }
        if let Some(poa) = &rep.poa {
            assert!(*poa >= Q::one());
        }
        assert_eq!(rep.epsilon, Q::zero());
        assert_eq!(rep.bound, delta.bound);
        // all firms strictly dominant: that profile is the only equilibrium
        let strict: Option<Vec<String>> = rep
            .dominant_strategies
            .iter()
            .map(|s| match s {
                Dominance::Strict(id) => Some(id.clone()),
                _ => None,
            })
            .collect();
        if let Some(ids) = strict {
            assert_eq!(rep.pure_nash.len(), 1);
            assert_eq!(rep.pure_nash[0].profile, Profile::obedient(ids));
        }
        assert!(smoothness_check(&t).unwrap().passed || !delta.delta_star.is_zero());
    }
}

#[test]
fn consistent_games_are_smooth_and_within_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..3 {
        let d = gen_random_sc_game(2, 3, &TechPool::default(), &mut rng).unwrap();
        let (t, delta, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(delta.delta_star, Q::zero());
        assert_eq!(delta.bound, Some(q(2, 1)));
        assert!(!rep.bound_violated);
        let s = smoothness_check(&t).unwrap();
        assert!(s.passed, "{:?}", s.failures.first());
    }
}

#[test]
fn single_firm_random_games_have_unit_poa() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..3 {
        let d = gen_random_sc_game(1, 3, &TechPool::default(), &mut rng).unwrap();
        let (_, _, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(rep.poa, Some(Q::one()));
    }
}
