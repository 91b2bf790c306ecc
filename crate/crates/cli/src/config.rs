//! Experiment configuration: one JSON file per run, overridable by flags.

use anyhow::{bail, Context};
use rsd_core::exact::Wire;
use rsd_core::game::{GameSpec, SelectionPolicy};
use rsd_core::{Profile, RankingTechnology, ValueVector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::InputError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RSDLAB_OUT";
pub const DEFAULT_OUT: &str = "rsdlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Exact,
    /// Monte Carlo, or a sampled consistency test for `check-sc`.
    Mc,
}

/// A profile written either as a list of technology ids or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileArg {
    Ids(Vec<String>),
    Full {
        choices: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        policies: Option<Vec<SelectionPolicy>>,
    },
}

impl ProfileArg {
    pub fn to_profile(&self) -> Profile {
        match self {
            ProfileArg::Ids(ids) => Profile::obedient(ids.clone()),
            ProfileArg::Full { choices, policies } => Profile {
                choices: choices.clone(),
                policies: policies.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Wire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Exact-engine atom budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_cap: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technology: Option<RankingTechnology>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub technologies: Vec<RankingTechnology>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<ValueVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xs: Vec<ValueVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProfileArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<ProfileArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<ProfileArg>,

    /// Parameters of `reproduce`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<ReproduceParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReproduceParams {
    pub which: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Wire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Wire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.samples == Some(0) {
            bail!(InputError("samples must be positive".into()));
        }
        if self.workers == Some(0) {
            bail!(InputError("workers must be positive".into()));
        }
        if self.budget == Some(0) || self.profile_cap == Some(0) {
            bail!(InputError("budgets must be positive".into()));
        }
        if let Some(c) = self.confidence {
            if !(c > 0.0 && c < 1.0) {
                bail!(InputError("confidence must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }

    pub fn game(&self) -> anyhow::Result<&GameSpec> {
        self.game
            .as_ref()
            .ok_or_else(|| InputError("config needs a \"game\"".into()).into())
    }

    /// Seed for a stochastic run; absent seeds are an input error.
    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed.ok_or_else(|| {
            InputError("a seed is required for stochastic runs (--seed or \"seed\")".into()).into()
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn profiles(&self) -> Vec<Profile> {
        self.profiles.iter().map(ProfileArg::to_profile).collect()
    }

    /// The config without execution-only settings (output path, worker
    /// count), which by contract do not change any result.
    pub fn canonical(&self) -> ExperimentConfig {
        ExperimentConfig {
            out: None,
            workers: None,
            ..self.clone()
        }
    }

    pub fn canonical_bytes(&self) -> anyhow::Result<Vec<u8>> {
        serde_json::to_vec(&self.canonical()).context("serializing config")
    }
}

/// `a..b` (inclusive) or a single `a`.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let a = parse(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..9"), Ok((3, 9)));
        assert_eq!(parse_range("3..=9"), Ok((3, 9)));
        assert_eq!(parse_range("4"), Ok((4, 4)));
        assert!(parse_range("5..3").is_err());
        assert!(parse_range("a..3").is_err());
    }

    #[test]
    fn canonical_drops_execution_settings() {
        let cfg = ExperimentConfig {
            seed: Some(1),
            workers: Some(4),
            out: Some("x".into()),
            ..Default::default()
        };
        let plain = ExperimentConfig {
            seed: Some(1),
            ..Default::default()
        };
        assert_eq!(
            cfg.canonical_bytes().unwrap(),
            plain.canonical_bytes().unwrap()
        );
    }

    #[test]
    fn rejects_unknown_fields_and_zero_budgets() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sead": 1}"#).is_err());
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"samples": 0}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
