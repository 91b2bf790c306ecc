//! Value-driven layered layouts.
//!
//! Layers run in order. Each selects the not-yet-placed candidates matching
//! its selector and places them inside the first `window` unfilled
//! positions. Candidates left over after the last layer fill the remaining
//! positions in uniformly random order. Every admissible outcome is equally
//! likely.

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ValueVector;
use crate::error::{check_limit, invalid, Result};
use crate::exact::{serde_rational, serde_rational_vec};
use crate::perm::{factorial, falling_factorial, Ranking};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Equal(#[serde(with = "serde_rational")] BigRational),
    OneOf(#[serde(with = "serde_rational_vec")] Vec<BigRational>),
    Positive,
    Zero,
}

impl Selector {
    fn matches(&self, v: &BigRational) -> bool {
        match self {
            Selector::Equal(t) => v == t,
            Selector::OneOf(ts) => ts.contains(v),
            Selector::Positive => v.is_positive(),
            Selector::Zero => v.is_zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrange {
    /// Uniformly random distinct positions inside the window.
    #[default]
    Uniform,
    /// The window's leading positions, lowest value first.
    Ascending,
    /// The window's leading positions, highest value first.
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub select: Selector,
    pub window: usize,
    #[serde(default)]
    pub arrange: Arrange,
}

/// One layer's placement problem on a partial layout: which candidates go
/// into which free slots.
struct Step {
    /// Selected candidates; for sorted arrangements, grouped into blocks of
    /// equal value in placement order.
    blocks: Vec<Vec<usize>>,
    slots: Vec<usize>,
    arrange: Arrange,
}

impl Step {
    fn count(&self) -> u128 {
        let k: usize = self.blocks.iter().map(Vec::len).sum();
        match self.arrange {
            Arrange::Uniform => falling_factorial(self.slots.len(), k),
            _ => self.blocks.iter().map(|b| factorial(b.len())).product(),
        }
    }

    fn assignments(&self) -> Vec<Vec<(usize, usize)>> {
        match self.arrange {
            Arrange::Uniform => {
                let cands = &self.blocks[0];
                self.slots
                    .iter()
                    .copied()
                    .permutations(cands.len())
                    .map(|slots| slots.into_iter().zip(cands.iter().copied()).collect())
                    .collect()
            }
            _ => self
                .blocks
                .iter()
                .map(|b| b.iter().copied().permutations(b.len()).collect::<Vec<_>>())
                .multi_cartesian_product()
                .map(|parts| self.slots.iter().copied().zip(parts.concat()).collect())
                .collect(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(usize, usize)> {
        match self.arrange {
            Arrange::Uniform => {
                let mut cands = self.blocks[0].clone();
                cands.shuffle(rng);
                self.slots
                    .choose_multiple(rng, cands.len())
                    .copied()
                    .zip(cands)
                    .collect()
            }
            _ => {
                let mut seq = Vec::new();
                for b in &self.blocks {
                    let mut b = b.clone();
                    b.shuffle(rng);
                    seq.extend(b);
                }
                self.slots.iter().copied().zip(seq).collect()
            }
        }
    }
}

/// Candidates chosen by one layer, fixed by `x` alone.
#[derive(Debug, Clone)]
pub(crate) struct Selection {
    /// Selected candidates; for sorted arrangements, grouped into blocks of
    /// equal value in placement order.
    blocks: Vec<Vec<usize>>,
    window: usize,
    arrange: Arrange,
}

/// Resolves every layer's selection for `x`.
pub(crate) fn select(layers: &[Layer], x: &ValueVector) -> Vec<Selection> {
    let m = x.len();
    let mut placed = vec![false; m];
    let mut out = Vec::new();
    for layer in layers {
        let selected: Vec<usize> = (0..m)
            .filter(|&c| !placed[c] && layer.select.matches(x.get(c)))
            .collect();
        if selected.is_empty() {
            continue;
        }
        for &c in &selected {
            placed[c] = true;
        }
        let blocks = match layer.arrange {
            Arrange::Uniform => vec![selected],
            arrange => {
                let mut sorted = selected;
                if arrange == Arrange::Ascending {
                    sorted.sort_by(|&a, &b| x.get(a).cmp(x.get(b)).then(a.cmp(&b)));
                } else {
                    sorted.sort_by(|&a, &b| x.get(b).cmp(x.get(a)).then(a.cmp(&b)));
                }
                sorted
                    .into_iter()
                    .chunk_by(|&c| x.get(c).clone())
                    .into_iter()
                    .map(|(_, g)| g.collect())
                    .collect()
            }
        };
        out.push(Selection {
            blocks,
            window: layer.window,
            arrange: layer.arrange,
        });
    }
    out
}

/// The placement problem of `sel` given the partial layout `order`.
/// Its size does not depend on `order`, so every complete outcome is
/// equally likely.
fn step(sel: &Selection, order: &[Option<usize>]) -> Result<Step> {
    let k: usize = sel.blocks.iter().map(Vec::len).sum();
    let window: Vec<usize> = (0..order.len())
        .filter(|&p| order[p].is_none())
        .take(sel.window)
        .collect();
    if k > window.len() {
        return invalid(format!(
            "layer selects {k} candidates but its window has {} free positions",
            window.len()
        ));
    }
    let slots = match sel.arrange {
        Arrange::Uniform => window,
        _ => window[..k].to_vec(),
    };
    Ok(Step {
        blocks: sel.blocks.clone(),
        slots,
        arrange: sel.arrange,
    })
}

fn fill_leftovers(order: &[Option<usize>]) -> (Vec<usize>, Vec<usize>) {
    let m = order.len();
    let mut placed = vec![false; m];
    for c in order.iter().flatten() {
        placed[*c] = true;
    }
    let leftover = (0..m).filter(|&c| !placed[c]).collect();
    let free = (0..m).filter(|&p| order[p].is_none()).collect();
    (leftover, free)
}

/// Number of equally likely outcomes.
pub(crate) fn support_size(layers: &[Layer], x: &ValueVector) -> Result<u128> {
    // Step sizes do not depend on earlier choices, so one path suffices.
    let mut order: Vec<Option<usize>> = vec![None; x.len()];
    let mut total: u128 = 1;
    for sel in select(layers, x) {
        let s = step(&sel, &order)?;
        total = total.saturating_mul(s.count());
        let cands = s.blocks.concat();
        for (&slot, c) in s.slots.iter().zip(cands) {
            order[slot] = Some(c);
        }
    }
    let (leftover, _) = fill_leftovers(&order);
    Ok(total.saturating_mul(factorial(leftover.len())))
}

/// All outcomes (each with probability `1 / len`), lexicographically sorted.
pub(crate) fn enumerate(layers: &[Layer], x: &ValueVector, limit: u128) -> Result<Vec<Ranking>> {
    check_limit("layered support size", support_size(layers, x)?, limit)?;
    let mut partials: Vec<Vec<Option<usize>>> = vec![vec![None; x.len()]];
    for sel in select(layers, x) {
        let mut next = Vec::new();
        for partial in partials {
            for assignment in step(&sel, &partial)?.assignments() {
                let mut p = partial.clone();
                for (slot, c) in assignment {
                    p[slot] = Some(c);
                }
                next.push(p);
            }
        }
        partials = next;
    }
    let mut out = Vec::new();
    for partial in partials {
        let (leftover, free) = fill_leftovers(&partial);
        for perm in leftover.iter().copied().permutations(leftover.len()) {
            let mut order = partial.clone();
            for (&slot, c) in free.iter().zip(perm) {
                order[slot] = Some(c);
            }
            out.push(Ranking::from_vec_unchecked(
                order
                    .into_iter()
                    .map(|c| c.expect("complete layout"))
                    .collect(),
            ));
        }
    }
    out.sort();
    Ok(out)
}

/// One draw given precomputed selections.
pub(crate) fn sample_selected<R: Rng + ?Sized>(
    selections: &[Selection],
    m: usize,
    rng: &mut R,
) -> Result<Ranking> {
    let mut order: Vec<Option<usize>> = vec![None; m];
    for sel in selections {
        for (slot, c) in step(sel, &order)?.draw(rng) {
            order[slot] = Some(c);
        }
    }
    let (mut leftover, _) = fill_leftovers(&order);
    leftover.shuffle(rng);
    let mut rest = leftover.into_iter();
    Ok(Ranking::from_vec_unchecked(
        order
            .into_iter()
            .map(|c| c.unwrap_or_else(|| rest.next().expect("leftovers fill free slots")))
            .collect(),
    ))
}

#[cfg(test)]
fn sample<R: Rng + ?Sized>(layers: &[Layer], x: &ValueVector, rng: &mut R) -> Result<Ranking> {
    sample_selected(&select(layers, x), x.len(), rng)
}
