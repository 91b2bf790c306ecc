//! Hiring with shared ranking technologies under random serial dictatorship:
//! rankings and distances, ranking technologies, stochastic-consistency
//! checks, exact and Monte Carlo game evaluation, equilibrium analysis and
//! instance generators.

pub mod consistency;
pub mod distance;
pub mod equilibrium;
pub mod error;
pub mod exact;
pub mod game;
pub mod instances;
pub mod majorize;
pub mod perm;
pub mod tech;

pub use consistency::{
    check_sc_exact, check_sc_statistical, measure_delta, poa_bound, ConsistencyReport, DeltaReport,
    Verdict,
};
pub use distance::{is_inversion_monotone, RankDistance};
pub use equilibrium::{
    best_response_gap, dominant_strategy, find_pure_nash, price_of_anarchy, smoothness_check,
    social_optimum, EquilibriumReport, UtilityTable,
};
pub use error::{Error, Result};
pub use exact::Value;
pub use game::{
    expected_utilities_exact, expected_utilities_mc, ic_audit, play_once, AdviceSpace,
    EngineOptions, ExactEngine, FirmAdvice, GameSpec, McOptions, Mechanism, OutcomeRecord, Profile,
    SelectionPolicy, ValueDistribution, ValueSpec,
};
pub use instances::InstanceDescriptor;
pub use perm::Ranking;
pub use tech::{exact_pmf, ExactPmf, RankingTechnology, TechKind, TieBreak, ValueVector};
