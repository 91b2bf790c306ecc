//! Depth-first enumeration of one or more coupled RSD runs. A technology's
//! sample is only split as finely as the firms' picks distinguish it, so a
//! branch carries a set of rankings and its integer weight sum.

use num_bigint::BigUint;
use num_traits::One;

use super::SelectionPolicy;
use crate::error::Result;
use crate::tech::ExactPmf;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Query {
    pub run: usize,
    pub firm: usize,
    pub slot: usize,
    pub policy: SelectionPolicy,
}

pub(crate) trait Visitor {
    /// Called before firm `dfs.queries[k]` picks.
    fn before_query(&mut self, _dfs: &Dfs<'_>, _k: usize) -> Result<()> {
        Ok(())
    }

    /// `weight` is the unnormalised probability of the branch;
    /// `hires[run][firm]` is `NONE` for firms that did not act in `run`.
    fn leaf(&mut self, weight: &BigUint, hires: &[Vec<usize>]) -> Result<()>;
}

pub(crate) struct Dfs<'a> {
    pub pmfs: Vec<&'a ExactPmf>,
    pub queries: &'a [Query],
    live: Vec<Vec<u32>>,
    sums: Vec<BigUint>,
    avail: Vec<Vec<bool>>,
    history: Vec<Vec<usize>>,
    hires: Vec<Vec<usize>>,
}

impl<'a> Dfs<'a> {
    pub fn new(
        pmfs: Vec<&'a ExactPmf>,
        queries: &'a [Query],
        runs: usize,
        n: usize,
        m: usize,
    ) -> Self {
        let live = pmfs
            .iter()
            .map(|p| (0..p.support_len() as u32).collect())
            .collect();
        let sums = pmfs.iter().map(|p| p.total().clone()).collect();
        Dfs {
            pmfs,
            queries,
            live,
            sums,
            avail: vec![vec![true; m]; runs],
            history: vec![Vec::new(); runs],
            hires: vec![vec![NONE; n]; runs],
        }
    }

    /// Product of every slot's total weight: the normaliser of leaf weights.
    pub fn denominator(&self) -> BigUint {
        self.pmfs.iter().fold(BigUint::one(), |a, p| a * p.total())
    }

    pub fn live(&self, slot: usize) -> &[u32] {
        &self.live[slot]
    }

    pub fn available(&self, run: usize) -> &[bool] {
        &self.avail[run]
    }

    pub fn history(&self, run: usize) -> &[usize] {
        &self.history[run]
    }

    /// Product of the live weight sums of all slots except `slot`.
    pub fn others_weight(&self, slot: usize) -> BigUint {
        self.sums
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != slot)
            .fold(BigUint::one(), |a, (_, w)| a * w)
    }

    pub fn run<V: Visitor>(&mut self, visitor: &mut V) -> Result<()> {
        self.step(0, visitor)
    }

    fn step<V: Visitor>(&mut self, k: usize, visitor: &mut V) -> Result<()> {
        if k == self.queries.len() {
            let w = self.sums.iter().fold(BigUint::one(), |a, s| a * s);
            return visitor.leaf(&w, &self.hires);
        }
        visitor.before_query(self, k)?;
        let q = &self.queries[k];
        let pmf = self.pmfs[q.slot];
        let live = std::mem::take(&mut self.live[q.slot]);
        let mut groups: Vec<(usize, Vec<u32>)> = Vec::new();
        {
            let avail = &self.avail[q.run];
            let history = &self.history[q.run];
            for &idx in &live {
                let c = q
                    .policy
                    .pick(&pmf.rankings()[idx as usize], avail, history)?;
                match groups.iter_mut().find(|g| g.0 == c) {
                    Some(g) => g.1.push(idx),
                    None => groups.push((c, vec![idx])),
                }
            }
        }
        groups.sort_by_key(|g| g.0);
        let saved_sum = std::mem::take(&mut self.sums[q.slot]);
        let single = groups.len() == 1;
        for (c, members) in groups {
            self.sums[q.slot] = if single {
                saved_sum.clone()
            } else {
                members
                    .iter()
                    .fold(BigUint::ZERO, |a, &i| a + &pmf.weights()[i as usize])
            };
            self.live[q.slot] = members;
            self.avail[q.run][c] = false;
            self.history[q.run].push(c);
            self.hires[q.run][q.firm] = c;
            self.step(k + 1, visitor)?;
            self.hires[q.run][q.firm] = NONE;
            self.history[q.run].pop();
            self.avail[q.run][c] = true;
        }
        self.live[q.slot] = live;
        self.sums[q.slot] = saved_sum;
        Ok(())
    }
}
