//! Monte Carlo evaluation with common random numbers across profiles.
//!
//! Replicates are grouped in fixed-size batches. Batch `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, and batch sums are
//! reduced in batch order, so results depend only on the seed and never on
//! the number of workers.

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::play::{run, Scratch};
use super::values::pick_index;
use super::{GameSpec, Profile, Resolved};
use crate::error::{invalid, Error, Result};
use crate::perm::Ranking;
use crate::tech::{Caps, PreparedTech, ValueVector};

/// Largest explicit value support prepared for indexed sampling.
const MAX_PREPARED_POINTS: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    pub batch_size: u64,
    /// Worker threads; the ambient rayon pool when absent.
    pub workers: Option<usize>,
    pub caps: Caps,
    pub orbit_reduction: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 100_000,
            seed: 0,
            batch_size: 10_000,
            workers: None,
            caps: Caps::default(),
            orbit_reduction: true,
        }
    }
}

impl McOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        McOptions {
            samples,
            seed,
            ..Default::default()
        }
    }
}

/// Mean and standard error of a simulated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn from_sums(s: f64, s2: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = s / nf;
        let var = if n > 1 {
            ((s2 - s * s / nf) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / nf).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McUtilityReport {
    pub profile: Profile,
    pub utilities: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub social_welfare: Estimate,
    pub method: String,
    pub samples: u64,
    pub seed: u64,
}

/// Utilities of several profiles on shared draws, with paired differences
/// against the first profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPanel {
    pub samples: u64,
    pub seed: u64,
    pub batch_size: u64,
    pub reports: Vec<McUtilityReport>,
    /// `differences[p][i]`: firm `i`'s utility under profile `p` minus
    /// under profile 0.
    pub differences: Vec<Vec<Estimate>>,
    pub welfare_differences: Vec<Estimate>,
}

#[derive(Clone)]
struct Sums {
    u: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
    sw: Vec<f64>,
    sw2: Vec<f64>,
    d: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    dw: Vec<f64>,
    dw2: Vec<f64>,
}

impl Sums {
    fn new(p: usize, n: usize) -> Self {
        Sums {
            u: vec![vec![0.0; n]; p],
            u2: vec![vec![0.0; n]; p],
            sw: vec![0.0; p],
            sw2: vec![0.0; p],
            d: vec![vec![0.0; n]; p],
            d2: vec![vec![0.0; n]; p],
            dw: vec![0.0; p],
            dw2: vec![0.0; p],
        }
    }

    fn add(&mut self, o: &Sums) {
        fn add2(a: &mut [Vec<f64>], b: &[Vec<f64>]) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
        }
        fn add1(a: &mut [f64], b: &[f64]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        add2(&mut self.u, &o.u);
        add2(&mut self.u2, &o.u2);
        add1(&mut self.sw, &o.sw);
        add1(&mut self.sw2, &o.sw2);
        add2(&mut self.d, &o.d);
        add2(&mut self.d2, &o.d2);
        add1(&mut self.dw, &o.dw);
        add1(&mut self.dw2, &o.dw2);
    }
}

/// Where replicate value vectors come from.
enum Points {
    /// Indexed support with masses and float values.
    Indexed {
        masses: Vec<BigRational>,
        xs: Vec<ValueVector>,
        xf: Vec<Vec<f64>>,
    },
    /// Draw from the value law directly (support too large to index).
    Direct,
}

struct Sampler<'a> {
    spec: &'a GameSpec,
    resolved: Vec<Resolved>,
    used: Vec<usize>,
    prepared: Vec<Option<PreparedTech>>,
    points: Points,
}

impl Sampler<'_> {
    fn batch(&self, b: u64, count: u64, seed: u64) -> Result<Sums> {
        let n = self.spec.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let mut sums = Sums::new(self.resolved.len(), n);
        let mut samples: Vec<Option<Ranking>> = vec![None; self.spec.technologies().len()];
        let mut scratch = Scratch::new(self.spec.m(), samples.len());
        let mut hires = vec![0usize; n];
        let mut base = vec![0.0f64; n];
        let mut order: Vec<usize> = (0..n).collect();
        let mut drawn: (ValueVector, Vec<f64>);
        for _ in 0..count {
            let (point, x, xf) = match &self.points {
                Points::Indexed { masses, xs, xf } => {
                    let i = pick_index(masses.iter(), &mut rng);
                    (Some(i), &xs[i], xf[i].as_slice())
                }
                Points::Direct => {
                    let x = self.spec.values().sample(&mut rng);
                    let xf = x.to_f64();
                    drawn = (x, xf);
                    (None, &drawn.0, drawn.1.as_slice())
                }
            };
            order.shuffle(&mut rng);
            for &t in &self.used {
                let prep = self.prepared[t].as_ref().expect("prepared");
                samples[t] = Some(match point {
                    Some(i) => prep.sample_point(i, x, &mut rng)?,
                    None => prep.sample(x, &mut rng)?,
                });
            }
            for (k, r) in self.resolved.iter().enumerate() {
                run(r, &samples, &order, &mut scratch, &mut hires)?;
                let mut sw = 0.0;
                for f in 0..n {
                    let v = xf[hires[f]];
                    sw += v;
                    sums.u[k][f] += v;
                    sums.u2[k][f] += v * v;
                    if k == 0 {
                        base[f] = v;
                    }
                    let d = v - base[f];
                    sums.d[k][f] += d;
                    sums.d2[k][f] += d * d;
                }
                sums.sw[k] += sw;
                sums.sw2[k] += sw * sw;
                let dw = sw - base.iter().sum::<f64>();
                sums.dw[k] += dw;
                sums.dw2[k] += dw * dw;
            }
        }
        Ok(sums)
    }
}

/// Simulates every profile on the same draws of values, firm order and
/// technology samples.
pub fn mc_panel(spec: &GameSpec, profiles: &[Profile], options: &McOptions) -> Result<McPanel> {
    if options.samples == 0 || options.batch_size == 0 {
        return invalid("samples and batch size must be positive");
    }
    if profiles.is_empty() {
        return invalid("no profile to simulate");
    }
    let resolved: Vec<Resolved> = profiles
        .iter()
        .map(|p| spec.resolve(p))
        .collect::<Result<_>>()?;
    let mut used: Vec<usize> = resolved
        .iter()
        .flat_map(|r| r.techs.iter().copied())
        .collect();
    used.sort();
    used.dedup();

    let values = spec.values();
    let distinct = values.all_values_distinct();
    let reduced = options.orbit_reduction
        && values.is_permutation_invariant()
        && used
            .iter()
            .all(|&t| spec.technologies()[t].is_label_equivariant(distinct));
    let support: Option<Vec<(BigRational, ValueVector)>> = if reduced {
        values.orbit_representatives()
    } else if values.support_size() <= MAX_PREPARED_POINTS {
        Some(values.atoms(MAX_PREPARED_POINTS)?)
    } else {
        None
    };
    let xs: Vec<ValueVector> = support.iter().flatten().map(|(_, x)| x.clone()).collect();
    let mut prepared: Vec<Option<PreparedTech>> =
        (0..spec.technologies().len()).map(|_| None).collect();
    for &t in &used {
        prepared[t] = Some(PreparedTech::new(
            &spec.technologies()[t],
            &xs,
            &options.caps,
        )?);
    }
    let points = match support {
        Some(s) => Points::Indexed {
            masses: s.into_iter().map(|(p, _)| p).collect(),
            xf: xs.iter().map(|x| x.to_f64()).collect(),
            xs,
        },
        None => Points::Direct,
    };
    let sampler = Sampler {
        spec,
        resolved,
        used,
        prepared,
        points,
    };
    finish(spec, profiles, options, |b, count| {
        sampler.batch(b, count, options.seed)
    })
}

fn finish<F>(
    spec: &GameSpec,
    profiles: &[Profile],
    options: &McOptions,
    batch: F,
) -> Result<McPanel>
where
    F: Fn(u64, u64) -> Result<Sums> + Sync,
{
    let n = spec.n();
    let total = options.samples;
    let size = options.batch_size;
    let batches = total.div_ceil(size);
    let work = || -> Result<Vec<Sums>> {
        (0..batches)
            .into_par_iter()
            .map(|b| batch(b, size.min(total - b * size)))
            .collect()
    };
    let parts = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Evaluation(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut sums = Sums::new(profiles.len(), n);
    for part in &parts {
        sums.add(part);
    }
    let reports = profiles
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let est: Vec<Estimate> = (0..n)
                .map(|f| Estimate::from_sums(sums.u[k][f], sums.u2[k][f], total))
                .collect();
            McUtilityReport {
                profile: p.clone(),
                utilities: est.iter().map(|e| e.mean).collect(),
                stderrs: est.iter().map(|e| e.stderr).collect(),
                social_welfare: Estimate::from_sums(sums.sw[k], sums.sw2[k], total),
                method: "mc".into(),
                samples: total,
                seed: options.seed,
            }
        })
        .collect();
    let differences = (0..profiles.len())
        .map(|k| {
            (0..n)
                .map(|f| Estimate::from_sums(sums.d[k][f], sums.d2[k][f], total))
                .collect()
        })
        .collect();
    let welfare_differences = (0..profiles.len())
        .map(|k| Estimate::from_sums(sums.dw[k], sums.dw2[k], total))
        .collect();
    Ok(McPanel {
        samples: total,
        seed: options.seed,
        batch_size: size,
        reports,
        differences,
        welfare_differences,
    })
}

/// Monte Carlo utilities of one profile.
pub fn expected_utilities_mc(
    spec: &GameSpec,
    profile: &Profile,
    options: &McOptions,
) -> Result<McUtilityReport> {
    let mut panel = mc_panel(spec, std::slice::from_ref(profile), options)?;
    Ok(panel.reports.remove(0))
}
