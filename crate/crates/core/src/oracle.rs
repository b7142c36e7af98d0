//! Reference computations for checking the greedy on small instances.

use std::collections::BTreeSet;

use itertools::Itertools;
use rayon::prelude::*;

use crate::entropy::{build_pairs, Estimator, PairMode, PairSet};
use crate::error::{Error, Result};
use crate::simulator::Trajectory;

/// Largest graph the exhaustive search accepts.
pub const MAX_EXHAUSTIVE_NODES: usize = 12;

/// Smallest conditioning set `S` (ties broken lexicographically) such that
/// no outside node lowers `H(v+ | v, S)` by more than `kappa / 2`.
pub fn exhaustive_with(
    est: &Estimator<'_>,
    v: usize,
    kappa: f64,
    max_size: usize,
) -> Result<BTreeSet<usize>> {
    let n = est.node_count();
    if n > MAX_EXHAUSTIVE_NODES {
        return Err(Error::TooManyNodes {
            nodes: n,
            max: MAX_EXHAUSTIVE_NODES,
        });
    }
    if v >= n {
        return Err(Error::NodeOutOfRange { index: v, nodes: n });
    }
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", format!("{kappa} must be positive")));
    }
    let threshold = kappa / 2.0;
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();

    let closed = |set: &Vec<usize>| -> Result<bool> {
        let base = est.cond_entropy(v, set)?;
        for &u in &others {
            if set.contains(&u) {
                continue;
            }
            let mut bigger = set.clone();
            bigger.push(u);
            if base - est.cond_entropy(v, &bigger)? > threshold {
                return Ok(false);
            }
        }
        Ok(true)
    };

    for size in 0..=max_size.min(others.len()) {
        let subsets: Vec<Vec<usize>> = others.iter().copied().combinations(size).collect();
        let hit = subsets
            .par_iter()
            .map(|s| closed(s).map(|ok| ok.then(|| s.clone())))
            .find_first(|r| !matches!(r, Ok(None)));
        match hit {
            Some(Ok(Some(s))) => return Ok(s.into_iter().collect()),
            Some(Err(e)) => return Err(e),
            _ => {}
        }
    }
    Err(Error::NoClosedSubset { v, max_size })
}

pub fn exhaustive_neighborhood(
    traj: &Trajectory,
    pairs: &PairSet,
    v: usize,
    kappa: f64,
    max_size: usize,
) -> Result<BTreeSet<usize>> {
    exhaustive_with(&Estimator::new(traj, pairs)?, v, kappa, max_size)
}

/// Entropy drops from adding `u` to `Q`, under naive and under genie pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub naive: f64,
    pub genie: f64,
}

pub fn genie_gap(traj: &Trajectory, v: usize, u: usize, q: &[usize]) -> Result<Gap> {
    if u == v || q.contains(&u) {
        return Err(Error::param("u", format!("{u} must lie outside Q and differ from v")));
    }
    let genie_pairs = build_pairs(traj, PairMode::Genie)?;
    let naive_pairs = build_pairs(traj, PairMode::Naive)?;
    let mut with_u = q.to_vec();
    with_u.push(u);
    let drop = |pairs: &PairSet| -> Result<f64> {
        let est = Estimator::new(traj, pairs)?;
        Ok(est.cond_entropy(v, q)? - est.cond_entropy(v, &with_u)?)
    };
    Ok(Gap {
        naive: drop(&naive_pairs)?,
        genie: drop(&genie_pairs)?,
    })
}
