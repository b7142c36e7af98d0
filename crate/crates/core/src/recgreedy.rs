//! Recursive greedy neighbourhood recovery.
//!
//! For every node `v` a working set `U` is grown one node at a time by the
//! largest drop in `H(v+ | v, U)`. A candidate joins `U` only when its drop
//! is strictly greater than `kappa / 2`. When no candidate passes, only the
//! node added last is promoted into the estimate `T(v)`, and the search
//! restarts from `U = T(v)`. The run for `v` ends when a restart promotes
//! nothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::pmax_bound;
use crate::entropy::{build_pairs, Estimator, PairMode, PairSet};
use crate::error::{Error, Result};
use crate::simulator::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// Best candidate of one inner pass and whether it cleared `kappa / 2`.
    Evaluated {
        outer: usize,
        candidate: usize,
        score: f64,
        accepted: bool,
    },
    /// `node` moved from the working set into the estimate.
    Promoted { outer: usize, node: usize },
    /// The working set hit the size cap with candidates left.
    SizeCap { outer: usize, size: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodEstimate {
    pub neighborhood: BTreeSet<usize>,
    pub trace: Vec<TraceEvent>,
    pub converged: bool,
}

/// Cap on the working-set size: `min(|V| - 1, Pmax)` with `Pmax` evaluated at
/// `epsilon' = kappa / 2`.
pub fn default_max_set(nodes: usize, m_bar: u32, kappa: f64) -> usize {
    nodes.saturating_sub(1).min(pmax_bound(kappa / 2.0, m_bar)).max(1)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::param("kappa", format!("{kappa} must be positive and finite")))
    }
}

/// Recover `T(v)` from a prepared estimator.
pub fn recover_with(
    est: &Estimator<'_>,
    v: usize,
    kappa: f64,
    max_set: usize,
) -> Result<NeighborhoodEstimate> {
    check_kappa(kappa)?;
    let n = est.node_count();
    if v >= n {
        return Err(Error::NodeOutOfRange { index: v, nodes: n });
    }
    if max_set == 0 || max_set > n.saturating_sub(1).max(1) {
        return Err(Error::param(
            "max_set",
            format!("{max_set} not in 1..={}", n.saturating_sub(1).max(1)),
        ));
    }
    let threshold = kappa / 2.0;

    let mut memo: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut h = |set: &BTreeSet<usize>| -> Result<f64> {
        let key: Vec<usize> = set.iter().copied().collect();
        if let Some(&x) = memo.get(&key) {
            return Ok(x);
        }
        let x = est.cond_entropy(v, &key)?;
        memo.insert(key, x);
        Ok(x)
    };

    let mut estimate = BTreeSet::new();
    let mut trace = Vec::new();
    let mut converged = true;

    'outer: for outer in 0.. {
        let mut working = estimate.clone();
        let mut last: Option<usize> = None;
        loop {
            let candidates: Vec<usize> = (0..n).filter(|&k| k != v && !working.contains(&k)).collect();
            if candidates.is_empty() {
                break;
            }
            if working.len() >= max_set {
                trace.push(TraceEvent::SizeCap {
                    outer,
                    size: working.len(),
                });
                converged = false;
                if let Some(u) = last {
                    estimate.insert(u);
                    trace.push(TraceEvent::Promoted { outer, node: u });
                }
                break 'outer;
            }

            let base = h(&working)?;
            let mut best: Option<(usize, f64)> = None;
            for k in candidates {
                working.insert(k);
                let score = base - h(&working)?;
                working.remove(&k);
                // strict comparison keeps the smallest index on ties
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((k, score));
                }
            }
            let (u, score) = best.expect("non-empty candidate pool");
            let accepted = score > threshold;
            trace.push(TraceEvent::Evaluated {
                outer,
                candidate: u,
                score,
                accepted,
            });
            if !accepted {
                break;
            }
            working.insert(u);
            last = Some(u);
        }

        match last {
            Some(u) if estimate.insert(u) => trace.push(TraceEvent::Promoted { outer, node: u }),
            _ => break,
        }
    }

    Ok(NeighborhoodEstimate {
        neighborhood: estimate,
        trace,
        converged,
    })
}

/// Recover `T(v)` over an explicit pair set.
pub fn recover_neighborhood(
    traj: &Trajectory,
    pairs: &PairSet,
    v: usize,
    kappa: f64,
    max_set: usize,
) -> Result<NeighborhoodEstimate> {
    let est = Estimator::new(traj, pairs)?;
    recover_with(&est, v, kappa, max_set)
}

/// Estimated influence graph: one neighbourhood per node.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredGraph {
    pub kappa: f64,
    pub neighborhoods: Vec<BTreeSet<usize>>,
    pub traces: Vec<Vec<TraceEvent>>,
    pub converged: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RecoveredGraphFile {
    kappa: f64,
    neighborhoods: BTreeMap<String, Vec<usize>>,
    converged: bool,
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    node: usize,
    #[serde(flatten)]
    event: &'a TraceEvent,
}

impl RecoveredGraph {
    pub fn node_count(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// `(u, v)` for every `u` in `T(v)`.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.neighborhoods
            .iter()
            .enumerate()
            .flat_map(|(v, nb)| nb.iter().map(move |&u| (u, v)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = RecoveredGraphFile {
            kappa: self.kappa,
            neighborhoods: self
                .neighborhoods
                .iter()
                .enumerate()
                .map(|(v, nb)| (v.to_string(), nb.iter().copied().collect()))
                .collect(),
            converged: self.all_converged(),
        };
        serde_json::to_string_pretty(&file).expect("serialisable")
    }

    /// Parse the result file; traces are not part of it.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let file: RecoveredGraphFile = serde_json::from_str(text)?;
        let n = file
            .neighborhoods
            .keys()
            .filter_map(|k| k.parse::<usize>().ok())
            .map(|v| v + 1)
            .max()
            .unwrap_or(0);
        let mut neighborhoods = vec![BTreeSet::new(); n];
        for (k, nb) in file.neighborhoods {
            if let Ok(v) = k.parse::<usize>() {
                neighborhoods[v] = nb.into_iter().collect();
            }
        }
        Ok(RecoveredGraph {
            kappa: file.kappa,
            traces: vec![Vec::new(); n],
            converged: vec![file.converged; n],
            neighborhoods,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Trace as JSON Lines, one event per line tagged with its node.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (node, events) in self.traces.iter().enumerate() {
            for event in events {
                let line = serde_json::to_string(&TraceRecord { node, event })
                    .map_err(|e| Error::json(path, e))?;
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Run the recovery for every node over naive pairs.
///
/// `max_set = None` uses [`default_max_set`] with the sample cap read off
/// the data.
pub fn recover_graph(traj: &Trajectory, kappa: f64, max_set: Option<usize>) -> Result<RecoveredGraph> {
    check_kappa(kappa)?;
    if traj.len() < 2 {
        return Err(Error::param("t", "need at least two observed steps"));
    }
    let pairs = build_pairs(traj, PairMode::Naive)?;
    let est = Estimator::new(traj, &pairs)?;
    let n = traj.node_count();
    let cap = max_set.unwrap_or_else(|| default_max_set(n, traj.max_samples().saturating_sub(1), kappa));
    let results: Vec<NeighborhoodEstimate> = (0..n)
        .into_par_iter()
        .map(|v| recover_with(&est, v, kappa, cap))
        .collect::<Result<_>>()?;
    let mut out = RecoveredGraph {
        kappa,
        neighborhoods: Vec::with_capacity(n),
        traces: Vec::with_capacity(n),
        converged: Vec::with_capacity(n),
    };
    for r in results {
        out.neighborhoods.push(r.neighborhood);
        out.traces.push(r.trace);
        out.converged.push(r.converged);
    }
    Ok(out)
}
