//! `reproduce`: documented instance families, generated, re-verified and
//! evaluated, with a per-instance sweep table.

use anyhow::bail;
use clap::ValueEnum;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsd_core::equilibrium::{analyze_exact, mc_price_of_anarchy, smoothness_check, McVerdict};
use rsd_core::exact::{format_exact, parse_exact, rat, to_f64, Value};
use rsd_core::instances::{
    gen_deviation_counterexample, gen_linear_poa, gen_random_game, gen_tight_poa,
    ic_table_counterexample, ic_uniform_counterexample, InstanceDescriptor, TechPool, Verification,
    VerifyOptions,
};
use rsd_core::{check_sc_exact, ic_audit, poa_bound, Mechanism};
use serde::Serialize;

use crate::commands::{engine_options, mc_options, profile_cap, DEFAULT_MC_CONFIDENCE};
use crate::config::{ExperimentConfig, ReproduceParams};
use crate::output::Run;
use crate::InputError;

/// Largest tight-family size evaluated exactly (2^n candidates).
const TIGHT_EXACT_MAX_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    TightPoa,
    LinearPoa,
    DeviationCounterexample,
    Smoothness,
    Ic,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::TightPoa => "tight-poa",
            Which::LinearPoa => "linear-poa",
            Which::DeviationCounterexample => "deviation-counterexample",
            Which::Smoothness => "smoothness",
            Which::Ic => "ic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    PermutationInvariant,
    Counterexamples,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PermutationInvariant => "permutation-invariant",
            Preset::Counterexamples => "counterexamples",
        }
    }
}

/// One row of a PoA sweep. Empty cells mean "not measured".
#[derive(Debug, Serialize)]
struct SweepRow {
    instance: String,
    n: usize,
    m: usize,
    poa: f64,
    poa_exact: String,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    bound: Option<f64>,
    method: String,
    seed: Option<u64>,
    verified: bool,
}

fn verified_detail(d: &InstanceDescriptor) -> String {
    match &d.verification {
        Verification::Verified { method } => format!("verified ({method})"),
        Verification::Unverified { reason } => format!("unverified: {reason}"),
        Verification::Unchecked => "unchecked".into(),
    }
}

fn n_range(p: &ReproduceParams, default: (usize, usize)) -> Vec<usize> {
    let (a, b) = p.n.unwrap_or(default);
    (a..=b).collect()
}

fn seed_rng(cfg: &ExperimentConfig) -> anyhow::Result<ChaCha8Rng> {
    Ok(ChaCha8Rng::seed_from_u64(cfg.seed()?))
}

pub fn run(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let which = Which::from_str(&p.which, false)
        .map_err(|_| InputError(format!("unknown family {:?}", p.which)))?;
    if p.preset.is_some() && which != Which::Ic {
        bail!(InputError("--preset applies to `reproduce ic` only".into()));
    }
    match which {
        Which::TightPoa => tight(cfg, p, out),
        Which::LinearPoa => linear(cfg, p, out),
        Which::DeviationCounterexample => deviation(cfg, p, out),
        Which::Smoothness => smooth(cfg, p, out),
        Which::Ic => ic(cfg, p, out),
    }
}

fn tight(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let eta = p.eta.as_ref().map_or_else(|| rat(1, 20), |w| w.0.clone());
    let mut rows = Vec::new();
    let mut summary = String::from("tight family: SW(A'^n) / SW(A^n)\n");
    for n in n_range(p, (3, 3)) {
        let row = if n <= TIGHT_EXACT_MAX_N {
            let verify = VerifyOptions {
                exact_max_n: TIGHT_EXACT_MAX_N,
                engine: engine_options(cfg),
                ..Default::default()
            };
            let d = gen_tight_poa(n, &eta, &verify)?;
            let eq = parse_exact(&d.measured["equilibrium_welfare"])?;
            let opt = parse_exact(&d.measured["optimal_welfare"])?;
            let ratio = &opt / &eq;
            // one orbit of value vectors and relabeling-equivariant
            // technologies: delta* at the representative is the game's
            let x = d
                .spec
                .values()
                .orbit_representatives()
                .and_then(|r| r.first().map(|a| a.1.clone()));
            let mut delta = Some(Value::zero());
            for t in d.spec.technologies() {
                match &x {
                    Some(x) => {
                        let r = check_sc_exact(t, x)?;
                        delta = delta.map(|d| d.max(r.delta_star));
                    }
                    None => delta = None,
                }
            }
            out.json(&format!("{}.json", d.name), &d)?;
            summary += &format!(
                "n={n}: {} = {:.6}, {}\n",
                format_exact(&ratio),
                to_f64(&ratio),
                verified_detail(&d)
            );
            SweepRow {
                instance: d.name.clone(),
                n,
                m: d.spec.m(),
                poa: to_f64(&ratio),
                poa_exact: format_exact(&ratio),
                ci_low: None,
                ci_high: None,
                bound: delta.as_ref().and_then(poa_bound).as_ref().map(to_f64),
                method: "exact".into(),
                seed: None,
                verified: d.is_verified(),
            }
        } else {
            let mut d = gen_tight_poa(
                n,
                &eta,
                &VerifyOptions {
                    skip: true,
                    ..Default::default()
                },
            )?;
            let opts = mc_options(cfg)?;
            let confidence = cfg.confidence.unwrap_or(DEFAULT_MC_CONFIDENCE);
            let eps = cfg.epsilon.as_ref().map(|w| to_f64(&w.0));
            let rep = mc_price_of_anarchy(
                &d.spec,
                d.profile("equilibrium")?,
                d.profile("optimum")?,
                &opts,
                confidence,
                eps,
            )?;
            d.measured.insert(
                "equilibrium_welfare".into(),
                format!("{:.6}", rep.nash.social_welfare),
            );
            d.measured.insert(
                "optimal_welfare".into(),
                format!("{:.6}", rep.optimal_welfare),
            );
            d.verification = if rep.nash.verdict == McVerdict::Verified {
                Verification::Verified {
                    method: format!(
                        "mc({confidence}, {} samples, eps {:.3e})",
                        opts.samples, rep.nash.epsilon
                    ),
                }
            } else {
                Verification::Unverified {
                    reason: format!("simulated equilibrium check: {:?}", rep.nash.verdict),
                }
            };
            out.json(&format!("{}.json", d.name), &d)?;
            summary += &format!(
                "n={n}: {:.6} [{:.6}, {:.6}], {}\n",
                rep.poa,
                rep.poa_interval.0,
                rep.poa_interval.1,
                verified_detail(&d)
            );
            SweepRow {
                instance: d.name.clone(),
                n,
                m: d.spec.m(),
                poa: rep.poa,
                poa_exact: String::new(),
                ci_low: Some(rep.poa_interval.0),
                ci_high: Some(rep.poa_interval.1),
                bound: None,
                method: rep.method.clone(),
                seed: Some(opts.seed),
                verified: d.is_verified(),
            }
        };
        rows.push(row);
    }
    let verified = rows.iter().all(|r| r.verified);
    let monotone = rows.windows(2).all(|w| w[1].poa > w[0].poa);
    let below_two = rows.iter().all(|r| r.poa < 2.0);
    out.csv("sweep.csv", &rows)?;
    out.text("summary.txt", &summary)?;
    let column = rows
        .iter()
        .map(|r| format!("{:.4}", r.poa))
        .collect::<Vec<_>>()
        .join(" ");
    out.suite(
        "equilibrium-verified",
        verified,
        format!("{} instances", rows.len()),
    );
    out.suite(
        "poa-trend",
        monotone && below_two,
        format!("increasing below 2: {column}"),
    );
    Ok(())
}

fn linear(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let eps = p.eps.as_ref().map_or_else(|| rat(1, 100), |w| w.0.clone());
    let ns = n_range(p, (3, 5));
    let verify = VerifyOptions {
        exact_max_n: *ns.last().expect("non-empty range"),
        engine: engine_options(cfg),
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut summary = String::from("linear family: PoA against n - 1\n");
    let mut above = true;
    for n in ns {
        let d = gen_linear_poa(n, &eps, &verify)?;
        let (_, _, rep) = analyze_exact(&d.spec, engine_options(cfg), profile_cap(cfg))?;
        let poa = rep.poa.clone().unwrap_or_else(Value::zero);
        above &= poa >= Value::from_integer((n as i64 - 1).into());
        out.json(&format!("{}.json", d.name), &d)?;
        out.json(&format!("{}-equilibrium.json", d.name), &rep)?;
        summary += &format!(
            "n={n}: SW* = {}, worst NE SW = {}, PoA = {:.6}, {}\n",
            format_exact(&rep.optimal_welfare),
            rep.worst_ne_welfare
                .as_ref()
                .map_or_else(|| "none".into(), format_exact),
            to_f64(&poa),
            verified_detail(&d)
        );
        rows.push(SweepRow {
            instance: d.name.clone(),
            n,
            m: d.spec.m(),
            poa: to_f64(&poa),
            poa_exact: format_exact(&poa),
            ci_low: None,
            ci_high: None,
            bound: rep.bound.as_ref().map(to_f64),
            method: "exact".into(),
            seed: None,
            verified: d.is_verified(),
        });
    }
    out.csv("sweep.csv", &rows)?;
    out.text("summary.txt", &summary)?;
    let column = rows
        .iter()
        .map(|r| format!("{:.4}", r.poa))
        .collect::<Vec<_>>()
        .join(" ");
    out.suite(
        "instance-verified",
        rows.iter().all(|r| r.verified),
        format!("{} instances", rows.len()),
    );
    out.suite(
        "poa-at-least-n-minus-1",
        above,
        format!("PoA column: {column}"),
    );
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    instance: String,
    n: usize,
    phi: String,
    gap: String,
    gap_decimal: Option<f64>,
    method: String,
    verified: bool,
}

fn deviation(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let phis: Vec<Value> = if p.phi.is_empty() {
        vec![rat(1, 1_000_000), rat(1, 2), rat(1, 1)]
    } else {
        p.phi.iter().map(|w| w.0.clone()).collect()
    };
    let verify = VerifyOptions {
        engine: engine_options(cfg),
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut summary = String::from("deviation counterexample: gap for the last firm acting last\n");
    for n in n_range(p, (2, 2)) {
        for phi in &phis {
            let d = gen_deviation_counterexample(n, phi, &verify)?;
            let gap = d.measured.get("gap_last").cloned().unwrap_or_default();
            let gap_decimal = parse_exact(&gap).ok().map(|g| to_f64(&g));
            summary += &format!(
                "n={n} phi={}: gap {gap}, {}\n",
                format_exact(phi),
                verified_detail(&d)
            );
            out.json(&format!("{}-phi{}.json", d.name, rows.len()), &d)?;
            rows.push(GapRow {
                instance: d.name.clone(),
                n,
                phi: format_exact(phi),
                gap,
                gap_decimal,
                method: "exact".into(),
                verified: d.is_verified(),
            });
        }
    }
    out.csv("sweep.csv", &rows)?;
    out.text("summary.txt", &summary)?;
    let negatives = rows.iter().filter(|r| r.verified).count();
    out.suite(
        "negative-gap",
        negatives == rows.len(),
        format!(
            "{negatives} of {} instances with a strictly negative gap",
            rows.len()
        ),
    );
    Ok(())
}

/// Random-suite shapes (n, m), cycled.
const SHAPES: [(usize, usize); 5] = [(2, 3), (3, 3), (2, 4), (3, 4), (1, 4)];

fn pool() -> TechPool {
    TechPool {
        common: (1, 3),
        idiosyncratic: (1, 2),
        ..Default::default()
    }
}

#[derive(Serialize)]
struct SmoothRow {
    instance: String,
    n: usize,
    m: usize,
    poa: Option<f64>,
    bound: Option<f64>,
    smooth: bool,
    min_slack: String,
    method: String,
    seed: u64,
}

fn smooth(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let seed = cfg.seed()?;
    let mut rng = seed_rng(cfg)?;
    let mut rows = Vec::new();
    let mut bound_ok = true;
    for i in 0..p.count.unwrap_or(5) {
        let (n, m) = SHAPES[i % SHAPES.len()];
        let mut d = gen_random_game(
            n,
            m,
            &pool(),
            Mechanism::ObedienceConstrained,
            true,
            &mut rng,
        )?;
        d.name = format!("sc-game-{i}");
        let (table, _, rep) = analyze_exact(&d.spec, engine_options(cfg), profile_cap(cfg))?;
        let s = smoothness_check(&table)?;
        let two = Value::from_integer(2.into());
        bound_ok &= d.is_verified()
            && rep
                .worst_ne_welfare
                .as_ref()
                .is_none_or(|w| w * &two >= rep.optimal_welfare);
        out.json(&format!("{}.json", d.name), &d)?;
        rows.push(SmoothRow {
            instance: d.name.clone(),
            n,
            m,
            poa: rep.poa.as_ref().map(to_f64),
            bound: rep.bound.as_ref().map(to_f64),
            smooth: s.passed,
            min_slack: format_exact(&s.min_slack),
            method: "exact".into(),
            seed,
        });
    }
    out.csv("sweep.csv", &rows)?;
    let smooth = rows.iter().all(|r| r.smooth);
    let column = rows
        .iter()
        .map(|r| r.poa.map_or_else(|| "-".into(), |v| format!("{v:.4}")))
        .collect::<Vec<_>>()
        .join(" ");
    out.text(
        "summary.txt",
        &format!(
            "{} consistent games, smooth: {smooth}, PoA column: {column}\n",
            rows.len()
        ),
    )?;
    out.suite("smoothness", smooth, format!("{} games", rows.len()));
    out.suite("poa-at-most-2", bound_ok, format!("PoA column: {column}"));
    Ok(())
}

#[derive(Serialize)]
struct IcRow {
    instance: String,
    n: usize,
    m: usize,
    profiles: usize,
    violations: usize,
    max_gap: String,
    method: String,
}

fn ic(cfg: &ExperimentConfig, p: &ReproduceParams, out: &mut Run) -> anyhow::Result<()> {
    let preset = match p.preset.as_deref() {
        None => Preset::PermutationInvariant,
        Some(s) => {
            Preset::from_str(s, false).map_err(|_| InputError(format!("unknown preset {s:?}")))?
        }
    };
    let mut rows = Vec::new();
    let mut instances = Vec::new();
    match preset {
        Preset::PermutationInvariant => {
            let mut rng = seed_rng(cfg)?;
            for i in 0..p.count.unwrap_or(3) {
                let (n, m) = SHAPES[i % SHAPES.len()];
                let mut d =
                    gen_random_game(n, m, &pool(), Mechanism::Unconstrained, true, &mut rng)?;
                d.name = format!("exchangeable-game-{i}");
                let profiles: Vec<_> = d.spec.all_profiles().collect();
                instances.push((d, profiles));
            }
        }
        Preset::Counterexamples => {
            for d in [ic_uniform_counterexample()?, ic_table_counterexample()?] {
                let profiles = vec![d.profile("audited")?.clone()];
                instances.push((d, profiles));
            }
        }
    }
    for (d, profiles) in &instances {
        let mut violations = 0;
        let mut max_gap = Value::zero();
        let mut reports = Vec::new();
        for pr in profiles {
            let r = ic_audit(&d.spec, pr, engine_options(cfg))?;
            violations += r.violations;
            max_gap = max_gap.max(r.max_gap.clone());
            reports.push(r);
        }
        out.json(&format!("{}.json", d.name), d)?;
        out.json(&format!("{}-audit.json", d.name), &reports)?;
        rows.push(IcRow {
            instance: d.name.clone(),
            n: d.spec.n(),
            m: d.spec.m(),
            profiles: profiles.len(),
            violations,
            max_gap: format_exact(&max_gap),
            method: "exact".into(),
        });
    }
    out.csv("sweep.csv", &rows)?;
    let total: usize = rows.iter().map(|r| r.violations).sum();
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{}: {} profiles, {} violations, max gap {}",
                r.instance, r.profiles, r.violations, r.max_gap
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    out.text("summary.txt", &(summary + "\n"))?;
    match preset {
        Preset::PermutationInvariant => out.suite(
            "obedience-incentive-compatible",
            total == 0,
            format!("{} instances, {total} violations", rows.len()),
        ),
        Preset::Counterexamples => {
            let each = rows.iter().all(|r| r.violations > 0)
                && instances.iter().all(|(d, _)| d.is_verified());
            out.suite(
                "documented-violations",
                each,
                format!("{} counterexamples, {total} violations", rows.len()),
            )
        }
    }
    Ok(())
}
