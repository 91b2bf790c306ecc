//! The single-game commands.

use anyhow::bail;
use num_traits::Zero;
use rsd_core::consistency::DEFAULT_CONFIDENCE;
use rsd_core::equilibrium::{
    analyze_exact, game_delta, mc_nash_check, mc_price_of_anarchy, McVerdict, SummaryRow,
    UtilityTable, DEFAULT_PROFILE_CAP,
};
use rsd_core::exact::{format_exact, to_f64, Value};
use rsd_core::game::{mc_panel, McPanel};
use rsd_core::tech::Caps;
use rsd_core::{
    check_sc_exact, check_sc_statistical, dominant_strategy, find_pure_nash, ic_audit as audit,
    measure_delta as measure, smoothness_check, ConsistencyReport, EngineOptions, ExactEngine,
    GameSpec, McOptions, Profile, RankingTechnology, ValueVector, Verdict,
};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{ExperimentConfig, Method};
use crate::output::Run;
use crate::InputError;

pub const DEFAULT_MC_SAMPLES: u64 = 100_000;
pub const DEFAULT_SC_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_MC_CONFIDENCE: f64 = 0.95;

pub fn engine_options(cfg: &ExperimentConfig) -> EngineOptions {
    let mut o = EngineOptions::default();
    if let Some(b) = cfg.budget {
        o.budget = b;
    }
    o
}

pub fn mc_options(cfg: &ExperimentConfig) -> anyhow::Result<McOptions> {
    Ok(McOptions {
        workers: cfg.workers,
        ..McOptions::new(cfg.samples.unwrap_or(DEFAULT_MC_SAMPLES), cfg.seed()?)
    })
}

pub fn profile_cap(cfg: &ExperimentConfig) -> u128 {
    cfg.profile_cap.unwrap_or(DEFAULT_PROFILE_CAP)
}

/// Two-sided normal quantile at `confidence`.
pub fn z_value(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

pub fn fmt_x(x: &ValueVector) -> String {
    x.as_slice()
        .iter()
        .map(format_exact)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn profile_label(p: &Profile) -> String {
    match &p.policies {
        None => p.label(),
        Some(_) => serde_json::to_string(p).unwrap_or_else(|_| p.label()),
    }
}

fn technologies(cfg: &ExperimentConfig) -> anyhow::Result<Vec<RankingTechnology>> {
    let techs: Vec<_> = cfg
        .technology
        .iter()
        .chain(&cfg.technologies)
        .cloned()
        .collect();
    if techs.is_empty() {
        bail!(InputError(
            "config needs \"technology\" or \"technologies\"".into()
        ));
    }
    Ok(techs)
}

fn value_vectors(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ValueVector>> {
    let xs: Vec<_> = cfg.x.iter().chain(&cfg.xs).cloned().collect();
    if xs.is_empty() {
        bail!(InputError("config needs \"x\" or \"xs\"".into()));
    }
    Ok(xs)
}

/// Profiles named in the config, or every profile of the game.
fn profiles(cfg: &ExperimentConfig, spec: &GameSpec) -> anyhow::Result<Vec<Profile>> {
    let named = cfg.profiles();
    if !named.is_empty() {
        return Ok(named);
    }
    let cap = profile_cap(cfg);
    if spec.profile_count() > cap {
        return Err(rsd_core::Error::ResourceLimit {
            what: "profiles".into(),
            requested: spec.profile_count(),
            limit: cap,
        }
        .into());
    }
    Ok(spec.all_profiles().collect())
}

fn exact_table(cfg: &ExperimentConfig, spec: &GameSpec) -> anyhow::Result<UtilityTable> {
    let engine = ExactEngine::new(spec, engine_options(cfg))?;
    Ok(UtilityTable::exact(&engine, profile_cap(cfg))?)
}

fn epsilon(cfg: &ExperimentConfig) -> Value {
    cfg.epsilon
        .as_ref()
        .map(|w| w.0.clone())
        .unwrap_or_else(Value::zero)
}

#[derive(Serialize)]
struct ScRow {
    technology: String,
    x: String,
    consistent: bool,
    delta_star: String,
    witness: String,
    method: String,
    seed: Option<u64>,
    confidence: Option<f64>,
    delta_ucb: Option<f64>,
}

fn sc_row(r: &ConsistencyReport) -> anyhow::Result<ScRow> {
    let witness = match &r.witness {
        Some(w) => serde_json::to_string(w)?,
        None => String::new(),
    };
    let stats = r.statistical.as_ref();
    Ok(ScRow {
        technology: r.technology.clone(),
        x: fmt_x(&r.x),
        consistent: r.is_consistent(),
        delta_star: format_exact(&r.delta_star),
        witness,
        method: match r.verdict {
            Verdict::Statistical { .. } => "statistical".into(),
            _ => "exact".into(),
        },
        seed: stats.map(|s| s.seed),
        confidence: stats.map(|s| s.confidence),
        delta_ucb: stats.map(|s| s.delta_ucb),
    })
}

pub fn check_sc(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let techs = technologies(cfg)?;
    let xs = value_vectors(cfg)?;
    let mut reports = Vec::new();
    for t in &techs {
        for x in &xs {
            let r = match cfg.method {
                Method::Exact => check_sc_exact(t, x)?,
                Method::Mc => check_sc_statistical(
                    t,
                    x,
                    cfg.samples.unwrap_or(DEFAULT_SC_SAMPLES),
                    cfg.confidence.unwrap_or(DEFAULT_CONFIDENCE),
                    cfg.seed()?,
                )?,
            };
            reports.push(r);
        }
    }
    run.json("check_sc.json", &reports)?;
    let rows = reports
        .iter()
        .map(sc_row)
        .collect::<anyhow::Result<Vec<_>>>()?;
    run.csv("check_sc.csv", &rows)?;
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.is_consistent())
        .map(|r| {
            format!(
                "{} at ({}) delta* = {}",
                r.technology,
                fmt_x(&r.x),
                format_exact(&r.delta_star)
            )
        })
        .collect();
    let detail = if bad.is_empty() {
        format!("{} checks consistent", reports.len())
    } else {
        format!("violated: {}", bad.join("; "))
    };
    run.suite("stochastic-consistency", bad.is_empty(), detail);
    Ok(())
}

#[derive(Serialize)]
struct DeltaRow {
    technology: String,
    delta_star: String,
    exact: bool,
    worst_x: String,
    points_checked: usize,
}

pub fn measure_delta(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let report = match &cfg.game {
        Some(spec) => game_delta(spec, &Caps::default())?,
        None => measure(&technologies(cfg)?, &value_vectors(cfg)?, &Caps::default())?,
    };
    run.json("delta.json", &report)?;
    let rows: Vec<DeltaRow> = report
        .technologies
        .iter()
        .map(|t| DeltaRow {
            technology: t.technology.clone(),
            delta_star: format_exact(&t.delta_star),
            exact: t.exact,
            worst_x: t.worst_x.as_ref().map(fmt_x).unwrap_or_default(),
            points_checked: t.points_checked,
        })
        .collect();
    run.csv("delta.csv", &rows)?;
    let bound = report
        .bound
        .as_ref()
        .map_or_else(|| "unbounded".to_string(), format_exact);
    run.suite(
        "delta-measured",
        true,
        format!(
            "delta* = {}, PoA bound {bound}",
            format_exact(&report.delta_star)
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct UtilityRow {
    profile: String,
    firm: usize,
    utility: String,
    utility_decimal: f64,
    stderr: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    method: String,
    seed: Option<u64>,
}

fn exact_rows(profiles: &[Profile], utilities: &[Vec<Value>]) -> Vec<UtilityRow> {
    let mut rows = Vec::new();
    for (p, us) in profiles.iter().zip(utilities) {
        for (i, u) in us.iter().enumerate() {
            rows.push(UtilityRow {
                profile: profile_label(p),
                firm: i + 1,
                utility: format_exact(u),
                utility_decimal: to_f64(u),
                stderr: None,
                ci_low: None,
                ci_high: None,
                method: "exact".into(),
                seed: None,
            });
        }
    }
    rows
}

fn mc_rows(panel: &McPanel, confidence: f64) -> Vec<UtilityRow> {
    let z = z_value(confidence);
    let mut rows = Vec::new();
    for r in &panel.reports {
        for (i, (u, se)) in r.utilities.iter().zip(&r.stderrs).enumerate() {
            rows.push(UtilityRow {
                profile: profile_label(&r.profile),
                firm: i + 1,
                utility: format!("{u}"),
                utility_decimal: *u,
                stderr: Some(*se),
                ci_low: Some(u - z * se),
                ci_high: Some(u + z * se),
                method: r.method.clone(),
                seed: Some(r.seed),
            });
        }
    }
    rows
}

const INSTANCE: &str = "game";

#[derive(Serialize)]
struct McSummaryRow {
    instance: String,
    n: usize,
    m: usize,
    sw_star: f64,
    ne_sw: f64,
    poa: f64,
    ci_low: f64,
    ci_high: f64,
    verdict: McVerdict,
    method: String,
    seed: u64,
}

pub fn poa(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let spec = cfg.game()?;
    match cfg.method {
        Method::Exact => {
            let (table, delta, report) =
                analyze_exact(spec, engine_options(cfg), profile_cap(cfg))?;
            run.json("equilibrium.json", &report)?;
            run.json("delta.json", &delta)?;
            run.csv(
                "utilities.csv",
                &exact_rows(&table.profiles, &table.utilities),
            )?;
            run.csv(
                "summary.csv",
                &[SummaryRow::from_report(INSTANCE, spec, &report)],
            )?;
            let poa = report.poa.as_ref().map_or_else(
                || "undefined (no pure equilibrium)".to_string(),
                |p| format!("{:.6}", to_f64(p)),
            );
            let bound = report
                .bound
                .as_ref()
                .map_or_else(|| "unbounded".to_string(), |b| format!("{:.6}", to_f64(b)));
            run.suite(
                "delta-bound",
                !report.bound_violated,
                format!(
                    "{} pure NE, PoA {poa}, delta* = {}, bound {bound}",
                    report.pure_nash.len(),
                    format_exact(&delta.delta_star)
                ),
            );
        }
        Method::Mc => {
            let (eq, opt) = match (&cfg.equilibrium, &cfg.optimum) {
                (Some(e), Some(o)) => (e.to_profile(), o.to_profile()),
                _ => bail!(InputError(
                    "simulated PoA needs \"equilibrium\" and \"optimum\" profiles".into()
                )),
            };
            let confidence = cfg.confidence.unwrap_or(DEFAULT_MC_CONFIDENCE);
            let eps = cfg.epsilon.as_ref().map(|w| to_f64(&w.0));
            let opts = mc_options(cfg)?;
            let rep = mc_price_of_anarchy(spec, &eq, &opt, &opts, confidence, eps)?;
            run.json("poa_mc.json", &rep)?;
            run.csv(
                "summary.csv",
                &[McSummaryRow {
                    instance: INSTANCE.into(),
                    n: spec.n(),
                    m: spec.m(),
                    sw_star: rep.optimal_welfare,
                    ne_sw: rep.nash.social_welfare,
                    poa: rep.poa,
                    ci_low: rep.poa_interval.0,
                    ci_high: rep.poa_interval.1,
                    verdict: rep.nash.verdict,
                    method: rep.method.clone(),
                    seed: opts.seed,
                }],
            )?;
            run.suite(
                "mc-equilibrium",
                rep.nash.verdict == McVerdict::Verified,
                format!(
                    "{} is {:?} (eps {:.3e}); PoA {:.4} [{:.4}, {:.4}]",
                    eq,
                    rep.nash.verdict,
                    rep.nash.epsilon,
                    rep.poa,
                    rep.poa_interval.0,
                    rep.poa_interval.1
                ),
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Equilibria<'a> {
    epsilon: String,
    pure_nash: &'a [rsd_core::equilibrium::NashEntry],
    dominant_strategies: &'a [rsd_core::equilibrium::Dominance],
}

pub fn find_equilibria(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let spec = cfg.game()?;
    match cfg.method {
        Method::Exact => {
            let table = exact_table(cfg, spec)?;
            let eps = epsilon(cfg);
            let nash = find_pure_nash(spec, &table, &eps)?;
            let dominance = (0..spec.n())
                .map(|i| dominant_strategy(spec, &table, i))
                .collect::<rsd_core::Result<Vec<_>>>()?;
            run.json(
                "equilibria.json",
                &Equilibria {
                    epsilon: format_exact(&eps),
                    pure_nash: &nash,
                    dominant_strategies: &dominance,
                },
            )?;
            run.csv(
                "utilities.csv",
                &exact_rows(&table.profiles, &table.utilities),
            )?;
            let list: Vec<String> = nash.iter().map(|e| e.profile.to_string()).collect();
            run.suite(
                "pure-equilibrium",
                !nash.is_empty(),
                format!(
                    "{} of {} profiles: {}",
                    nash.len(),
                    table.len(),
                    list.join(" ")
                ),
            );
        }
        Method::Mc => {
            let candidates = match (&cfg.equilibrium, cfg.profiles()) {
                (Some(e), named) if named.is_empty() => vec![e.to_profile()],
                (_, named) if !named.is_empty() => named,
                _ => bail!(InputError(
                    "simulated equilibrium checks need \"profiles\" or \"equilibrium\"".into()
                )),
            };
            let confidence = cfg.confidence.unwrap_or(DEFAULT_MC_CONFIDENCE);
            let eps = cfg.epsilon.as_ref().map_or(0.0, |w| to_f64(&w.0));
            let opts = mc_options(cfg)?;
            let mut reports = Vec::new();
            for p in &candidates {
                reports.push(mc_nash_check(spec, p, &opts, confidence, eps)?.0);
            }
            run.json("equilibria_mc.json", &reports)?;
            let verified: Vec<String> = reports
                .iter()
                .filter(|r| r.verdict == McVerdict::Verified)
                .map(|r| r.profile.to_string())
                .collect();
            run.suite(
                "mc-equilibrium",
                !verified.is_empty(),
                format!(
                    "{} of {} candidates verified: {}",
                    verified.len(),
                    reports.len(),
                    verified.join(" ")
                ),
            );
        }
    }
    Ok(())
}

pub fn simulate(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let spec = cfg.game()?;
    let ps = profiles(cfg, spec)?;
    match cfg.method {
        Method::Exact => {
            let engine = ExactEngine::new(spec, engine_options(cfg))?;
            let reports = ps
                .iter()
                .map(|p| engine.utilities(p))
                .collect::<rsd_core::Result<Vec<_>>>()?;
            run.json("utilities.json", &reports)?;
            let us: Vec<Vec<Value>> = reports.iter().map(|r| r.utilities.clone()).collect();
            run.csv("utilities.csv", &exact_rows(&ps, &us))?;
        }
        Method::Mc => {
            let panel = mc_panel(spec, &ps, &mc_options(cfg)?)?;
            run.json("utilities.json", &panel)?;
            run.csv(
                "utilities.csv",
                &mc_rows(&panel, cfg.confidence.unwrap_or(DEFAULT_MC_CONFIDENCE)),
            )?;
        }
    }
    run.suite("simulate", true, format!("{} profiles evaluated", ps.len()));
    Ok(())
}

#[derive(Serialize)]
struct IcRow {
    profile: String,
    decisions: usize,
    violations: usize,
    max_gap: String,
}

pub fn ic_audit(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let spec = cfg.game()?;
    let ps = profiles(cfg, spec)?;
    let reports = ps
        .iter()
        .map(|p| audit(spec, p, engine_options(cfg)))
        .collect::<rsd_core::Result<Vec<_>>>()?;
    run.json("ic_audit.json", &reports)?;
    let rows: Vec<IcRow> = reports
        .iter()
        .map(|r| IcRow {
            profile: profile_label(&r.profile),
            decisions: r.decisions.len(),
            violations: r.violations,
            max_gap: format_exact(&r.max_gap),
        })
        .collect();
    run.csv("ic_audit.csv", &rows)?;
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    run.suite(
        "incentive-compatibility",
        violations == 0,
        format!(
            "{} profiles audited, {violations} violations",
            reports.len()
        ),
    );
    Ok(())
}

pub fn smoothness(cfg: &ExperimentConfig, run: &mut Run) -> anyhow::Result<()> {
    let spec = cfg.game()?;
    let table = exact_table(cfg, spec)?;
    let report = smoothness_check(&table)?;
    run.json("smoothness.json", &report)?;
    run.suite(
        "smoothness",
        report.passed,
        format!(
            "{} ordered pairs, {} failures, min slack {}",
            report.pairs_checked,
            report.failures.len(),
            format_exact(&report.min_slack)
        ),
    );
    Ok(())
}
