//! Single plays of the mechanism.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GameSpec, Profile, Resolved, SelectionPolicy};
use crate::error::{Error, Result};
use crate::exact::Value;
use crate::perm::Ranking;
use crate::tech::ValueVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechSample {
    pub technology: String,
    pub ranking: Ranking,
}

/// Everything realised in one play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// Firms in acting order.
    pub order: Ranking,
    pub x: ValueVector,
    /// Candidate hired by each firm.
    #[serde(with = "super::one_based::vec")]
    pub hires: Vec<usize>,
    #[serde(with = "crate::exact::serde_rational_vec")]
    pub hire_values: Vec<Value>,
    /// One sample per distinct technology used.
    pub samples: Vec<TechSample>,
}

impl OutcomeRecord {
    pub fn welfare(&self) -> Value {
        self.hire_values.iter().sum()
    }
}

/// Reusable buffers for repeated plays.
pub(crate) struct Scratch {
    available: Vec<bool>,
    cursor: Vec<usize>,
    history: Vec<usize>,
}

impl Scratch {
    pub fn new(m: usize, techs: usize) -> Self {
        Scratch {
            available: vec![true; m],
            cursor: vec![0; techs],
            history: Vec::with_capacity(m),
        }
    }
}

/// Plays `r` with fixed samples (indexed by technology index) and order,
/// writing each firm's hire into `hires`.
pub(crate) fn run(
    r: &Resolved,
    samples: &[Option<Ranking>],
    order: &[usize],
    scratch: &mut Scratch,
    hires: &mut [usize],
) -> Result<()> {
    scratch.available.iter_mut().for_each(|a| *a = true);
    scratch.cursor.iter_mut().for_each(|c| *c = 0);
    scratch.history.clear();
    for &f in order {
        let t = r.techs[f];
        let sample = samples[t]
            .as_ref()
            .ok_or_else(|| Error::Evaluation(format!("no sample for technology {t}")))?;
        let c = match &r.policies[f] {
            SelectionPolicy::Obedient => {
                // availability only shrinks, so a per-sample cursor is exact
                let s = sample.as_slice();
                let mut k = scratch.cursor[t];
                while k < s.len() && !scratch.available[s[k]] {
                    k += 1;
                }
                scratch.cursor[t] = k;
                *s.get(k)
                    .ok_or_else(|| Error::Evaluation("no candidate left to hire".into()))?
            }
            p => p.pick(sample, &scratch.available, &scratch.history)?,
        };
        if !scratch.available[c] {
            return Err(Error::InvalidPolicy(format!(
                "candidate {} picked twice",
                c + 1
            )));
        }
        scratch.available[c] = false;
        scratch.history.push(c);
        hires[f] = c;
    }
    Ok(())
}

/// Draws values, a firm order and one sample per technology used, then
/// plays the profile.
pub fn play_once<R: Rng + ?Sized>(
    spec: &GameSpec,
    profile: &Profile,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    let r = spec.resolve(profile)?;
    let x = spec.values().sample(rng);
    let mut order: Vec<usize> = (0..spec.n()).collect();
    order.shuffle(rng);
    let mut used = r.techs.clone();
    used.sort();
    used.dedup();
    let mut samples: Vec<Option<Ranking>> = vec![None; spec.technologies().len()];
    for &t in &used {
        samples[t] = Some(spec.technologies()[t].sample(&x, rng)?);
    }
    let mut scratch = Scratch::new(spec.m(), samples.len());
    let mut hires = vec![0; spec.n()];
    run(&r, &samples, &order, &mut scratch, &mut hires)?;
    Ok(OutcomeRecord {
        order: Ranking::new(order)?,
        hire_values: hires.iter().map(|&c| x.get(c).clone()).collect(),
        hires,
        samples: used
            .iter()
            .map(|&t| TechSample {
                technology: spec.technologies()[t].id.clone(),
                ranking: samples[t].clone().expect("sampled"),
            })
            .collect(),
        x,
    })
}
