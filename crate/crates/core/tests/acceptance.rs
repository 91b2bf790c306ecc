//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! measured quantities and wall time. Run with
//! `cargo test -p rsd-core --test acceptance`; extra arguments select
//! criteria by id (e.g. `-- 4 7`).
//!
//! One check is known to be unattainable: at n = 3 the tight family's
//! welfare ratio cannot reach 1.4 for any admissible v (it is at most
//! (1 + v)/(1 + 2v/7) < 1.32). It is evaluated and printed as FAIL, and
//! does not fail the run; see the README.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsd_core::consistency::schur_spot_check;
use rsd_core::distance::InversionCheck;
use rsd_core::equilibrium::{
    analyze_exact, find_pure_nash, mc_price_of_anarchy, smoothness_check, social_optimum,
    Dominance, McVerdict, UtilityTable, DEFAULT_PROFILE_CAP,
};
use rsd_core::exact::{format_exact, rat, to_f64};
use rsd_core::game::{
    ic_audit, mc_panel, EngineOptions, ExactEngine, GameSpec, McOptions, Mechanism,
};
use rsd_core::instances::{
    gen_deviation_counterexample, gen_linear_poa, gen_random_game, gen_random_sc_game,
    gen_tight_poa, ic_table_counterexample, ic_uniform_counterexample, InstanceDescriptor,
    TechPool, VerifyOptions,
};
use rsd_core::perm::Ranking;
use rsd_core::tech::NoiseSpec;
use rsd_core::{
    check_sc_exact, check_sc_statistical, expected_utilities_exact, is_inversion_monotone, Profile,
    RankDistance, RankingTechnology, TechKind, TieBreak, ValueVector,
};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Q = BigRational;

/// Outcome of one criterion: pass flag, one-line detail.
struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
    /// Documented as unattainable; printed but not counted as a failure.
    known: bool,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line {
        id,
        pass,
        detail: detail.into(),
        known: false,
    }
}

fn decreasing(m: usize) -> ValueVector {
    ValueVector::from_ints(&(1..=m as i64).rev().collect::<Vec<_>>()).unwrap()
}

fn dims(i: usize) -> (usize, usize) {
    [(2, 3), (3, 3), (2, 4), (3, 4), (1, 4)][i % 5]
}

/// Wider strategy spaces than the default pool, so that equilibria and
/// optima can differ.
fn pool() -> TechPool {
    TechPool {
        common: (1, 3),
        idiosyncratic: (1, 2),
        ..Default::default()
    }
}

fn sc_games(count: usize, seed: u64) -> Vec<InstanceDescriptor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (n, m) = dims(i);
            gen_random_sc_game(n, m, &pool(), &mut rng).unwrap()
        })
        .collect()
}

fn c1() -> Vec<Line> {
    let mut checked = 0;
    let mut bad = Vec::new();
    for m in 2..=4 {
        let x = decreasing(m);
        for d in [
            RankDistance::KendallTau,
            RankDistance::SpearmanRho,
            RankDistance::SpearmanFootrule,
        ] {
            for phi in [rat(1, 4), rat(1, 2), rat(3, 4), Q::one()] {
                let tech = RankingTechnology::mallows("M", phi.clone(), d.clone()).unwrap();
                let r = check_sc_exact(&tech, &x).unwrap();
                checked += 1;
                if !(r.is_consistent() && r.is_exact() && r.delta_star.is_zero()) {
                    bad.push(format!("{} m={m} phi={}", d.name(), format_exact(&phi)));
                }
            }
        }
    }
    vec![line(
        "1",
        bad.is_empty(),
        format!("{checked} Mallows models certified consistent with delta*=0; failures: {bad:?}"),
    )]
}

fn c2() -> Vec<Line> {
    let tech = RankingTechnology::mallows("H", rat(1, 2), RankDistance::Hamming).unwrap();
    let r = check_sc_exact(&tech, &decreasing(3)).unwrap();
    let w = r.witness.as_ref().expect("witness");
    let ratio = w.ratio();
    let documented = w.positions == (0, 1)
        && w.candidates == (1, 2)
        && w.conditioning == vec![(2, 0)]
        && ratio == Some(rat(1, 2));
    let inv = is_inversion_monotone(&RankDistance::Hamming, 3, &Ranking::identity(3), 6).unwrap();
    let cross = matches!(
        &inv,
        InversionCheck::Violation { pi, pair, d_pi: 3, d_swapped: 2, .. }
            if pi.to_one_based() == vec![2, 3, 1] && *pair == (1, 2)
    );
    vec![line(
        "2",
        !r.is_consistent() && documented && cross,
        format!(
            "witness positions (1,2) candidates ({},{}) with r3={} ratio {}; delta*={}; inversion cross-check {}",
            w.candidates.0 + 1,
            w.candidates.1 + 1,
            w.conditioning[0].1 + 1,
            ratio.as_ref().map(format_exact).unwrap_or_default(),
            format_exact(&r.delta_star),
            if cross { "ok" } else { "mismatch" }
        ),
    )]
}

fn c3() -> Vec<Line> {
    let x = decreasing(3);
    let noises = [
        ("gaussian", NoiseSpec::Gaussian { sigma: 1.0 }),
        ("laplacian", NoiseSpec::Laplacian { b: 1.0 }),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, (name, noise)) in noises.iter().enumerate() {
        let tech = RankingTechnology::new(
            *name,
            TechKind::AdditiveNoise {
                noise: noise.clone(),
                tie_break: TieBreak::Index,
            },
        )
        .unwrap();
        let r = check_sc_statistical(&tech, &x, 1_000_000, 0.99, k as u64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let s = schur_spot_check(noise, 3, 10_000, 4.0, &mut rng).unwrap();
        pass &= r.is_consistent() && s.passed;
        parts.push(format!(
            "{name}: statistical {} (delta ucb {:.4}), schur {} / {} trials",
            if r.is_consistent() {
                "consistent"
            } else {
                "violated"
            },
            r.statistical.as_ref().map_or(f64::NAN, |d| d.delta_ucb),
            if s.passed { "pass" } else { "fail" },
            s.trials
        ));
    }
    vec![line("3", pass, parts.join("; "))]
}

fn c4_5() -> Vec<Line> {
    let mut worst = Q::one();
    let mut ne = 0;
    let mut bad4 = Vec::new();
    let mut bad5 = Vec::new();
    let mut pairs = 0;
    for (g, d) in sc_games(20, 4).iter().enumerate() {
        assert!(d.is_verified());
        let (t, _, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        let half = &rep.optimal_welfare / Q::from_integer(2.into());
        for e in &rep.pure_nash {
            ne += 1;
            if e.social_welfare < half {
                bad4.push(g);
            }
            if !e.social_welfare.is_zero() {
                worst = worst.max(&rep.optimal_welfare / &e.social_welfare);
            }
        }
        if rep.pure_nash.is_empty() {
            bad4.push(g);
        }
        let s = smoothness_check(&t).unwrap();
        pairs += s.pairs_checked;
        if !s.passed {
            bad5.push(g);
        }
    }
    vec![
        line(
            "4",
            bad4.is_empty(),
            format!(
                "20 games, {ne} pure NE, max SW*/SW_NE = {:.4}; failing games {bad4:?}",
                to_f64(&worst)
            ),
        ),
        line(
            "5",
            bad5.is_empty(),
            format!("{pairs} ordered profile pairs smooth; failing games {bad5:?}"),
        ),
    ]
}

fn c6() -> Vec<Line> {
    let mut checked = 0;
    let mut min_gap: Option<Q> = None;
    let mut negative = Vec::new();
    for (g, d) in sc_games(10, 6).iter().enumerate() {
        let engine = ExactEngine::new(&d.spec, EngineOptions::default()).unwrap();
        let profiles: Vec<Profile> = d.spec.all_profiles().collect();
        for s in &profiles {
            for t in &profiles {
                for i in 0..d.spec.n() {
                    let r = engine.deviation_gap(s, t, i, None).unwrap();
                    checked += 1;
                    if let Some(gap) = r.gap {
                        if gap < Q::zero() {
                            negative.push(g);
                        }
                        if min_gap.as_ref().is_none_or(|m| gap < *m) {
                            min_gap = Some(gap);
                        }
                    }
                }
            }
        }
    }
    let mut out = vec![line(
        "6a",
        negative.is_empty(),
        format!(
            "{checked} (firm, s, s*) triples in 10 consistent games, min gap {}",
            min_gap
                .as_ref()
                .map(format_exact)
                .unwrap_or_else(|| "vacuous".into())
        ),
    )];
    let mut parts = Vec::new();
    let mut pass = true;
    for phi in [rat(1, 1_000_000), rat(1, 2), Q::one()] {
        let d = gen_deviation_counterexample(2, &phi, &VerifyOptions::default()).unwrap();
        let engine = ExactEngine::new(&d.spec, EngineOptions::default()).unwrap();
        let r = engine
            .deviation_gap(
                d.profile("base").unwrap(),
                d.profile("comparison").unwrap(),
                1,
                None,
            )
            .unwrap();
        let gap = r.aggregate_where(|c| c.order[1] == 2).unwrap();
        let ok = if phi < rat(1, 1000) {
            gap <= Q::zero() && gap > rat(-1, 1000)
        } else {
            gap < Q::zero()
        };
        pass &= ok && d.is_verified();
        parts.push(format!("phi={}: {:.3e}", format_exact(&phi), to_f64(&gap)));
    }
    out.push(line(
        "6b",
        pass,
        format!("counterexample gaps (last firm last): {}", parts.join(", ")),
    ));
    out
}

fn c7() -> Vec<Line> {
    let mut out = Vec::new();
    let eta = rat(1, 20);
    let d3 = gen_tight_poa(3, &eta, &VerifyOptions::default()).unwrap();
    let engine = ExactEngine::new(&d3.spec, EngineOptions::default()).unwrap();
    let table = UtilityTable::exact(&engine, DEFAULT_PROFILE_CAP).unwrap();
    let a3 = d3.spec.symmetric_profile("A");
    let nash = find_pure_nash(&d3.spec, &table, &Q::zero()).unwrap();
    let is_ne = nash.iter().any(|e| e.profile == a3);
    let sw_a = table.social_welfare(&a3).unwrap();
    let sw_a2 = table
        .social_welfare(&d3.spec.symmetric_profile("A'"))
        .unwrap();
    let ratio3 = &sw_a2 / &sw_a;
    out.push(line(
        "7a",
        is_ne && d3.is_verified(),
        format!(
            "n=3 exact: A^3 pure NE = {is_ne}, SW(A^3) = {}, SW(A'^3) = {}",
            format_exact(&sw_a),
            format_exact(&sw_a2)
        ),
    ));
    let mut l = line(
        "7b",
        ratio3 >= rat(7, 5),
        format!(
            "n=3 exact: SW(A'^3)/SW(A^3) = {:.4} (target >= 1.4)",
            to_f64(&ratio3)
        ),
    );
    l.known = true;
    out.push(l);

    let mc = McOptions::new(1_000_000, 0);
    let eta9 = rat(1, 100);
    let verify = VerifyOptions {
        mc,
        ..Default::default()
    };
    let d9 = gen_tight_poa(9, &eta9, &verify).unwrap();
    let rep = mc_price_of_anarchy(
        &d9.spec,
        &d9.spec.symmetric_profile("A"),
        &d9.spec.symmetric_profile("A'"),
        &mc,
        0.95,
        None,
    )
    .unwrap();
    let verified = rep.nash.verdict == McVerdict::Verified;
    out.push(line(
        "7c",
        verified && rep.poa >= 1.7 && d9.is_verified(),
        format!(
            "n=9 MC 1e6: A^9 {:?} at 95% (eps {:.2e}), SW(A^9) = {:.4}, SW(A'^9) = {:.4}, PoA = {:.4} [{:.4}, {:.4}]",
            rep.nash.verdict,
            rep.nash.epsilon,
            rep.nash.social_welfare,
            rep.optimal_welfare,
            rep.poa,
            rep.poa_interval.0,
            rep.poa_interval.1
        ),
    ));

    let mut trend = vec![to_f64(&ratio3)];
    for n in 4..=8 {
        let d = gen_tight_poa(
            n,
            &eta9,
            &VerifyOptions {
                skip: true,
                ..Default::default()
            },
        )
        .unwrap();
        let panel = mc_panel(
            &d.spec,
            &[
                d.spec.symmetric_profile("A"),
                d.spec.symmetric_profile("A'"),
            ],
            &McOptions::new(100_000, n as u64),
        )
        .unwrap();
        trend.push(panel.reports[1].social_welfare.mean / panel.reports[0].social_welfare.mean);
    }
    trend.push(rep.poa);
    let monotone = trend.windows(2).all(|w| w[1] > w[0]);
    out.push(line(
        "7d",
        monotone,
        format!(
            "PoA trend n=3..9: {}",
            trend
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    ));
    out
}

fn c8() -> Vec<Line> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 3..=5 {
        let eps = rat(1, 100);
        let verify = VerifyOptions {
            exact_max_n: 5,
            ..Default::default()
        };
        let d = gen_linear_poa(n, &eps, &verify).unwrap();
        let (table, _, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        let dominant = rep
            .dominant_strategies
            .iter()
            .all(|s| *s == Dominance::Strict("A".into()));
        let mut closed = true;
        for k in 0..n {
            let ids: Vec<String> = (0..n)
                .map(|i| {
                    if i >= n - k {
                        format!("H{}", i + 1)
                    } else {
                        "A".into()
                    }
                })
                .collect();
            let u = &table.lookup(&Profile::obedient(ids)).unwrap()[0];
            closed &= *u == Q::one() + rat(k as i64, (n - k) as i64);
        }
        let poa = rep.poa.clone().unwrap_or_else(Q::zero);
        let ok =
            dominant && closed && poa >= Q::from_integer((n as i64 - 1).into()) && d.is_verified();
        pass &= ok;
        let (_, sw_opt) = social_optimum(&table).unwrap();
        parts.push(format!(
            "n={n}: strict A {dominant}, closed form {closed}, SW*={} PoA={:.4}",
            format_exact(&sw_opt),
            to_f64(&poa)
        ));
    }
    vec![line("8", pass, parts.join("; "))]
}

fn c9() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 0..10 {
        let n = [1, 2, 3, 2, 3][i % 5];
        let d = gen_random_game(
            n,
            3,
            &TechPool {
                common: (1, 3),
                idiosyncratic: (1, 2),
                ..TechPool::hamming()
            },
            Mechanism::ObedienceConstrained,
            false,
            &mut rng,
        )
        .unwrap();
        let (_, delta, rep) =
            analyze_exact(&d.spec, EngineOptions::default(), DEFAULT_PROFILE_CAP).unwrap();
        let bound_ok = match (&rep.bound, &rep.worst_ne_welfare) {
            (Some(b), Some(w)) => w * b >= rep.optimal_welfare,
            (None, Some(_)) => true,
            _ => false,
        };
        pass &= bound_ok && !rep.bound_violated;
        parts.push(format!(
            "d*={} PoA={:.3}",
            format_exact(&delta.delta_star),
            rep.poa.as_ref().map_or(f64::NAN, to_f64)
        ));
    }
    vec![line(
        "9",
        pass,
        format!("10 Hamming games: {}", parts.join(", ")),
    )]
}

fn c10() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut audits = 0;
    let mut violations = 0;
    let mut max_gap = Q::zero();
    for i in 0..5 {
        let (n, m) = [(2, 3), (3, 3), (2, 4), (3, 4), (1, 4)][i];
        let d = gen_random_game(n, m, &pool(), Mechanism::Unconstrained, true, &mut rng).unwrap();
        assert!(d.is_verified() && d.spec.values().is_permutation_invariant());
        for p in d.spec.all_profiles() {
            let r = ic_audit(&d.spec, &p, EngineOptions::default()).unwrap();
            audits += 1;
            violations += r.violations;
            max_gap = max_gap.max(r.max_gap);
        }
    }
    let mut out = vec![line(
        "10a",
        violations == 0,
        format!("{audits} audited profiles on 5 exchangeable consistent games: {violations} violations, max gap {}", format_exact(&max_gap)),
    )];
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, obedient) in [
        (ic_uniform_counterexample().unwrap(), rat(5, 1)),
        (ic_table_counterexample().unwrap(), Q::one()),
    ] {
        let r = ic_audit(
            &d.spec,
            d.profile("audited").unwrap(),
            EngineOptions::default(),
        )
        .unwrap();
        let dec = &r.decisions[0];
        pass &= d.is_verified()
            && dec.violation
            && dec.obedient_value == obedient
            && dec.best_value == rat(10, 1)
            && dec.best_deviation == "fixed_candidate_preference(1)";
        parts.push(format!(
            "{}: obedient {} vs {} {}",
            d.name,
            format_exact(&dec.obedient_value),
            dec.best_deviation,
            format_exact(&dec.best_value)
        ));
    }
    out.push(line("10b", pass, parts.join("; ")));
    out
}

fn c11() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut specs: Vec<GameSpec> = Vec::new();
    for i in 0..10 {
        let (n, m) = dims(i);
        let d = gen_random_game(
            n,
            m,
            &TechPool::default(),
            Mechanism::ObedienceConstrained,
            false,
            &mut rng,
        )
        .unwrap();
        let profiles: Vec<Profile> = d.spec.all_profiles().collect();
        let p = &profiles[i % profiles.len()];
        let exact = expected_utilities_exact(&d.spec, p).unwrap();
        let est = rsd_core::expected_utilities_mc(&d.spec, p, &McOptions::new(100_000, i as u64))
            .unwrap();
        for f in 0..n {
            let z = (est.utilities[f] - to_f64(&exact.utilities[f])).abs();
            let z = if est.stderrs[f] > 0.0 {
                z / est.stderrs[f]
            } else if z == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
            pass &= z <= 4.0;
        }
        specs.push(d.spec);
    }
    let mut identical = true;
    for spec in &specs {
        let profiles: Vec<Profile> = spec.all_profiles().take(4).collect();
        let out = |w| {
            let o = McOptions {
                workers: Some(w),
                ..McOptions::new(20_000, 77)
            };
            serde_json::to_vec(&mc_panel(spec, &profiles, &o).unwrap()).unwrap()
        };
        identical &= out(1) == out(4);
    }
    vec![
        line(
            "11a",
            pass,
            format!("10 instances at 1e5 samples, max |MC - exact| = {worst:.2} stderr"),
        ),
        line(
            "11b",
            identical,
            "MC panels byte-identical at 1 and 4 workers on 10 instances",
        ),
    ]
}

type Criterion = (&'static str, fn() -> Vec<Line>);

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria: [Criterion; 10] = [
        ("1", c1),
        ("2", c2),
        ("3", c3),
        ("4", c4_5),
        ("6", c6),
        ("7", c7),
        ("8", c8),
        ("9", c9),
        ("10", c10),
        ("11", c11),
    ];
    let mut failed = 0;
    let mut known = 0;
    for (id, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| f == id || (id == "4" && f == "5")) {
            continue;
        }
        let start = Instant::now();
        let lines = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| vec![line("?", false, format!("criterion {id} panicked"))]);
        let secs = start.elapsed().as_secs_f64();
        for l in lines {
            let tag = if l.pass { "PASS" } else { "FAIL" };
            let note = if !l.pass && l.known {
                " [known unattainable]"
            } else {
                ""
            };
            println!("{tag} {:<4} {}{note} ({secs:.1}s)", l.id, l.detail);
            if !l.pass {
                if l.known {
                    known += 1;
                } else {
                    failed += 1;
                }
            }
        }
    }
    println!("acceptance: {failed} failed, {known} known unattainable");
    if failed > 0 {
        std::process::exit(1);
    }
}
