use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{self, serde_rational_vec};

/// Per-candidate iid noise for additive-noise rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian {
        sigma: f64,
    },
    Laplacian {
        b: f64,
    },
    /// Uniform on `[-width/2, width/2]`.
    Uniform {
        width: f64,
    },
    DiscreteIid {
        #[serde(with = "serde_rational_vec")]
        support: Vec<BigRational>,
        #[serde(with = "serde_rational_vec")]
        probs: Vec<BigRational>,
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                invalid(format!("{name} must be a positive finite number, got {v}"))
            }
        };
        match self {
            NoiseSpec::Gaussian { sigma } => positive("sigma", *sigma),
            NoiseSpec::Laplacian { b } => positive("b", *b),
            NoiseSpec::Uniform { width } => positive("width", *width),
            NoiseSpec::DiscreteIid { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return invalid("discrete noise needs matching non-empty support and probs");
                }
                if probs.iter().any(|p| p.is_negative()) {
                    return invalid("negative noise probability");
                }
                let total: BigRational = probs.iter().cloned().sum();
                if !total.is_one() {
                    return invalid(format!(
                        "noise probabilities sum to {}",
                        exact::format_exact(&total)
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, NoiseSpec::DiscreteIid { .. })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::Gaussian { sigma } => Normal::new(0.0, *sigma)
                .expect("validated sigma")
                .sample(rng),
            NoiseSpec::Laplacian { b } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseSpec::Uniform { width } => (rng.random::<f64>() - 0.5) * width,
            NoiseSpec::DiscreteIid { support, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in support.iter().zip(probs) {
                    acc += exact::to_f64(p);
                    if u < acc {
                        return exact::to_f64(v);
                    }
                }
                exact::to_f64(support.last().expect("non-empty support"))
            }
        }
    }

    /// Univariate density at `z`; discrete noise has none.
    pub fn density(&self, z: f64) -> Result<f64> {
        Ok(match self {
            NoiseSpec::Gaussian { sigma } => {
                (-(z * z) / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            NoiseSpec::Laplacian { b } => (-(z.abs()) / b).exp() / (2.0 * b),
            NoiseSpec::Uniform { width } => {
                if z.abs() <= width / 2.0 {
                    1.0 / width
                } else {
                    0.0
                }
            }
            NoiseSpec::DiscreteIid { .. } => {
                return Err(Error::Evaluation(
                    "discrete noise has no density to evaluate pointwise".into(),
                ))
            }
        })
    }

    /// Joint density of `m` iid draws at `z`.
    pub fn joint_density(&self, z: &[f64]) -> Result<f64> {
        z.iter().map(|&v| self.density(v)).product()
    }

    /// Support points with their probabilities, for exact enumeration.
    pub(crate) fn discrete_atoms(&self) -> Option<Vec<(BigRational, BigRational)>> {
        match self {
            NoiseSpec::DiscreteIid { support, probs } => Some(
                support
                    .iter()
                    .cloned()
                    .zip(probs.iter().cloned())
                    .filter(|(_, p)| !p.is_zero())
                    .collect(),
            ),
            _ => None,
        }
    }
}
