//! Trajectories of the Past Influence Model.
//!
//! Each step every node emits `M_v(t)` Bernoulli samples with success
//! probability `X_v(t)`; `N_v(t)` of them are ones. A single global coin
//! `C(t) ~ Ber(p)` decides whether the next latent state is driven by the
//! current observables (`C = 1`) or by those from `d` steps back (`C = 0`):
//!
//! ```text
//! X_v(t+1) = (1 - alpha_v) [(1 - beta) Z_v(t) + beta l_v]
//!          + alpha_v sum_{u in N_v + v} a_uv Y_u(C(t) ? t : t - d)
//! ```
//!
//! Randomness is split into per-purpose ChaCha streams derived from one
//! seed, so e.g. changing the sample cap leaves the coin sequence untouched.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InfluenceGraph;
use crate::symbol::Symbol;

/// How the reset coin is parameterised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetSpec {
    /// No coin at all: the plain Markov chain.
    Disabled,
    /// Explicit head probability `p` in (0, 1].
    Probability(f64),
    /// `1 - p = (T - 1)^alpha_exp / (beta1 (T - d - 1))`.
    Schedule { alpha_exp: f64, beta1: f64 },
    /// Every eligible step is a tail. Diagnostic worst case, `p = 0`.
    AlwaysReset,
}

/// Law of the fluctuation term `Z_v(t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZDist {
    /// Uniform on [0, 1] (mean 0.5 regardless of the node's `zbar`).
    #[default]
    Uniform,
    /// Degenerate at the node's `zbar`.
    Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PimParams {
    /// Reset depth `d`.
    pub d: usize,
    pub reset: ResetSpec,
    /// Weight of the intrinsic bias against the fluctuation.
    pub beta: f64,
    /// Cap on the Poisson draw; `M_v(t) <= m_bar + 1`.
    pub m_bar: u32,
    /// Number of observed (kept) steps.
    pub t: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub z_dist: ZDist,
}

fn default_burn_in() -> usize {
    200
}

impl PimParams {
    /// `beta = 0.75`, schedule `alpha = 0.5`, `beta1 = 0.75`, burn-in 200.
    pub fn with_schedule(d: usize, m_bar: u32, t: usize, seed: u64) -> Self {
        PimParams {
            d,
            reset: ResetSpec::Schedule {
                alpha_exp: 0.5,
                beta1: 0.75,
            },
            beta: 0.75,
            m_bar,
            t,
            burn_in: default_burn_in(),
            seed,
            z_dist: ZDist::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d", "reset depth must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta", format!("{} not in (0, 1)", self.beta)));
        }
        if self.t == 0 {
            return Err(Error::param("t", "need at least one observed step"));
        }
        if self.reset != ResetSpec::Disabled && self.t < self.d + 2 {
            return Err(Error::param(
                "t",
                format!("{} observed steps cannot host resets of depth {}", self.t, self.d),
            ));
        }
        Ok(())
    }
}

/// Head probability implied by `spec` for a run of `t` observed steps.
pub fn resolve_reset_probability(spec: ResetSpec, t: usize, d: usize) -> Result<f64> {
    match spec {
        ResetSpec::Disabled => Ok(1.0),
        ResetSpec::AlwaysReset => Ok(0.0),
        ResetSpec::Probability(p) => {
            if p > 0.0 && p <= 1.0 {
                Ok(p)
            } else {
                Err(Error::param("p", format!("{p} not in (0, 1]")))
            }
        }
        ResetSpec::Schedule { alpha_exp, beta1 } => {
            if !(alpha_exp < 1.0) {
                return Err(Error::param("alpha_exp", format!("{alpha_exp} must be < 1")));
            }
            if !(beta1 > 0.0 && beta1 < 1.0) {
                return Err(Error::param("beta1", format!("{beta1} not in (0, 1)")));
            }
            if t <= d + 1 {
                return Err(Error::param(
                    "t",
                    format!("schedule needs T > d + 1 (T = {t}, d = {d})"),
                ));
            }
            let tail = ((t - 1) as f64).powf(alpha_exp) / (beta1 * (t - d - 1) as f64);
            let p = 1.0 - tail;
            if p > 0.0 && p <= 1.0 {
                Ok(p)
            } else {
                Err(Error::InfeasibleSchedule { p })
            }
        }
    }
}

/// `min(Poisson(mu_slope * x), m_bar) + 1`.
pub fn sample_count<R: Rng + ?Sized>(x: f64, mu_slope: f64, m_bar: u32, rng: &mut R) -> u32 {
    let rate = mu_slope * x;
    if m_bar == 0 || rate <= 0.0 {
        return 1;
    }
    let draw = Poisson::new(rate)
        .expect("positive finite rate")
        .sample(rng);
    (draw as u32).min(m_bar) + 1
}

/// Latent diagnostics recorded alongside the observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Hidden {
    /// Reset depth the run used.
    pub d: usize,
    /// `X_v(t)`, row-major `[t][v]`.
    pub latent: Vec<f64>,
    /// `C(t)`; `true` is a head (present-driven step).
    pub coins: Vec<bool>,
    /// Effective time index `e(t)`.
    pub effective: Vec<usize>,
}

/// Observations `(N_v(t), M_v(t))` plus optional hidden diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    nodes: usize,
    len: usize,
    successes: Vec<u32>,
    samples: Vec<u32>,
    hidden: Option<Hidden>,
}

impl Trajectory {
    /// Build from row-major `[t][v]` count arrays.
    pub fn from_counts(nodes: usize, successes: Vec<u32>, samples: Vec<u32>) -> Result<Self> {
        if nodes == 0 || successes.len() != samples.len() || !successes.len().is_multiple_of(nodes) {
            return Err(Error::param(
                "counts",
                "count arrays must be equal-length multiples of the node count",
            ));
        }
        if let Some(i) = (0..samples.len()).find(|&i| samples[i] == 0 || successes[i] > samples[i]) {
            return Err(Error::param(
                "counts",
                format!(
                    "t = {}, v = {}: need 0 <= N <= M and M >= 1",
                    i / nodes,
                    i % nodes
                ),
            ));
        }
        Ok(Trajectory {
            nodes,
            len: successes.len() / nodes,
            successes,
            samples,
            hidden: None,
        })
    }

    /// Build directly from per-step symbols (`N / M` taken from the fractions).
    pub fn from_symbols(rows: &[Vec<Symbol>]) -> Result<Self> {
        let nodes = rows.first().map_or(0, Vec::len);
        let mut n = Vec::with_capacity(rows.len() * nodes);
        let mut m = Vec::with_capacity(rows.len() * nodes);
        for row in rows {
            if row.len() != nodes {
                return Err(Error::param("rows", "ragged symbol rows"));
            }
            for s in row {
                n.push(s.num());
                m.push(s.den());
            }
        }
        Self::from_counts(nodes, n, m)
    }

    pub fn with_hidden(mut self, hidden: Hidden) -> Result<Self> {
        if hidden.coins.len() != self.len
            || hidden.effective.len() != self.len
            || hidden.latent.len() != self.len * self.nodes
        {
            return Err(Error::param("hidden", "diagnostic lengths do not match the trajectory"));
        }
        self.hidden = Some(hidden);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn successes(&self, t: usize, v: usize) -> u32 {
        self.successes[t * self.nodes + v]
    }

    pub fn samples(&self, t: usize, v: usize) -> u32 {
        self.samples[t * self.nodes + v]
    }

    pub fn symbol(&self, t: usize, v: usize) -> Symbol {
        Symbol::new(self.successes(t, v), self.samples(t, v))
    }

    pub fn hidden(&self) -> Option<&Hidden> {
        self.hidden.as_ref()
    }

    pub fn without_hidden(&self) -> Self {
        Trajectory {
            hidden: None,
            ..self.clone()
        }
    }

    pub fn reset_count(&self) -> Option<usize> {
        self.hidden
            .as_ref()
            .map(|h| h.coins.iter().filter(|&&c| !c).count())
    }

    pub fn max_samples(&self) -> u32 {
        self.samples.iter().copied().max().unwrap_or(0)
    }

    /// Check every documented invariant; returns the first broken one.
    pub fn check_invariants(&self, m_bar: u32) -> std::result::Result<(), String> {
        for t in 0..self.len {
            for v in 0..self.nodes {
                let (n, m) = (self.successes(t, v), self.samples(t, v));
                if !(n <= m && m >= 1 && m <= m_bar + 1) {
                    return Err(format!("t={t} v={v}: N={n} M={m} with cap {m_bar}"));
                }
            }
        }
        if let Some(h) = &self.hidden {
            if let Some(i) = h.latent.iter().position(|x| !(0.0..=1.0).contains(x)) {
                return Err(format!("latent X out of [0,1] at index {i}"));
            }
            if let Some(t) = (0..self.len.min(h.d + 1)).find(|&t| !h.coins[t]) {
                return Err(format!("tail at t={t} before resets are possible"));
            }
            if replay_effective_index(&h.coins, h.d) != h.effective {
                return Err("effective index inconsistent with coin record".into());
            }
        }
        Ok(())
    }

    /// Observation file: one JSON object `{"t", "N", "M"}` per line.
    pub fn write_observations(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = String::new();
        for t in 0..self.len {
            line.clear();
            let row = t * self.nodes..(t + 1) * self.nodes;
            write!(
                line,
                "{{\"t\":{t},\"N\":{},\"M\":{}}}",
                json_list(&self.successes[row.clone()]),
                json_list(&self.samples[row])
            )
            .unwrap();
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Sidecar file: `{"t", "C", "e", "X"}` per line.
    pub fn write_hidden(&self, path: &Path) -> Result<()> {
        let h = self.hidden.as_ref().ok_or(Error::MissingHiddenData)?;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for t in 0..self.len {
            let record = HiddenRecord {
                t,
                c: u8::from(h.coins[t]),
                e: h.effective[t],
                x: h.latent[t * self.nodes..(t + 1) * self.nodes].to_vec(),
            };
            let line = serde_json::to_string(&record).map_err(|e| Error::json(path, e))?;
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_observations(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut nodes = None;
        let (mut n, mut m) = (Vec::new(), Vec::new());
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ObservationRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                path: path.into(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            let width = *nodes.get_or_insert(rec.n.len());
            if rec.t != i || rec.n.len() != width || rec.m.len() != width {
                return Err(Error::Malformed {
                    path: path.into(),
                    line: i + 1,
                    reason: "unexpected time index or row width".into(),
                });
            }
            n.extend(rec.n);
            m.extend(rec.m);
        }
        Self::from_counts(nodes.unwrap_or(0), n, m)
    }

    /// Attach a sidecar written by [`Trajectory::write_hidden`]; the reset
    /// depth is not part of the sidecar and must be supplied.
    pub fn read_hidden(self, path: &Path, d: usize) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut hidden = Hidden {
            d,
            latent: Vec::new(),
            coins: Vec::new(),
            effective: Vec::new(),
        };
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: HiddenRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
                path: path.into(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            hidden.coins.push(rec.c != 0);
            hidden.effective.push(rec.e);
            hidden.latent.extend(rec.x);
        }
        self.with_hidden(hidden)
    }
}

fn json_list(xs: &[u32]) -> String {
    let mut s = String::with_capacity(2 + xs.len() * 2);
    s.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{x}").unwrap();
    }
    s.push(']');
    s
}

#[derive(Deserialize)]
struct ObservationRecord {
    t: usize,
    #[serde(rename = "N")]
    n: Vec<u32>,
    #[serde(rename = "M")]
    m: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct HiddenRecord {
    t: usize,
    #[serde(rename = "C")]
    c: u8,
    e: usize,
    #[serde(rename = "X")]
    x: Vec<f64>,
}

/// Recompute `e(t)` from the coin record: `e(0) = 0`,
/// `e(t+1) = e(t) + 1` on a head and `e(t - d) + 1` on a tail.
pub fn replay_effective_index(coins: &[bool], d: usize) -> Vec<usize> {
    let mut e = Vec::with_capacity(coins.len());
    if coins.is_empty() {
        return e;
    }
    e.push(0);
    for t in 0..coins.len() - 1 {
        let next = if coins[t] { e[t] + 1 } else { e[t - d] + 1 };
        e.push(next);
    }
    e
}

// Stream ids for the per-purpose generators.
const STREAM_COIN: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_FLUCT: u64 = 3;
const STREAM_POISSON: u64 = 4;
const STREAM_BINOMIAL: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Run the dynamics for `burn_in + t` steps and keep the last `t`.
///
/// Resets are switched off during burn-in and for the first `d + 1` kept
/// steps, so every tail has a parent inside the kept window.
pub fn simulate(g: &InfluenceGraph, params: &PimParams) -> Result<Trajectory> {
    let fatal: Vec<String> = g
        .validate()
        .iter()
        .filter(|v| !v.is_boundary_alpha())
        .map(ToString::to_string)
        .collect();
    if !fatal.is_empty() {
        return Err(Error::InvalidGraph(fatal));
    }
    params.validate()?;
    let p = resolve_reset_probability(params.reset, params.t, params.d)?;
    let use_coin = !matches!(params.reset, ResetSpec::Disabled);

    let n = g.node_count();
    let d = params.d;
    let total = params.burn_in + params.t;
    let first_tail = params.burn_in + d + 1;
    let in_edges: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| {
            let mut e = g.in_neighbors(v);
            if g.self_weight(v) > 0.0 {
                e.push((v, g.self_weight(v)));
            }
            e
        })
        .collect();

    let mut coin_rng = stream(params.seed, STREAM_COIN);
    let mut init_rng = stream(params.seed, STREAM_INIT);
    let mut fluct_rng = stream(params.seed, STREAM_FLUCT);
    let mut poisson_rng = stream(params.seed, STREAM_POISSON);
    let mut binom_rng = stream(params.seed, STREAM_BINOMIAL);

    let mut x: Vec<f64> = (0..n).map(|_| init_rng.gen::<f64>()).collect();
    let mut y_hist: Vec<f64> = Vec::with_capacity(total * n);

    let kept = params.t;
    let mut successes = Vec::with_capacity(kept * n);
    let mut samples = Vec::with_capacity(kept * n);
    let mut latent = Vec::with_capacity(kept * n);
    let mut coins = Vec::with_capacity(kept);

    for s in 0..total {
        let keep = s >= params.burn_in;
        for v in 0..n {
            let xv = x[v];
            let m = sample_count(xv, g.params(v).mu_slope, params.m_bar, &mut poisson_rng);
            let k = (0..m).filter(|_| binom_rng.gen::<f64>() < xv).count() as u32;
            y_hist.push(f64::from(k) / f64::from(m));
            if keep {
                successes.push(k);
                samples.push(m);
                latent.push(xv);
            }
        }

        let head = if use_coin && s >= first_tail {
            match params.reset {
                ResetSpec::AlwaysReset => false,
                _ => coin_rng.gen::<f64>() < p,
            }
        } else {
            true
        };
        if keep {
            coins.push(head);
        }
        if s + 1 == total {
            break;
        }

        let src = if head { s } else { s - d };
        let y_src = &y_hist[src * n..(src + 1) * n];
        for v in 0..n {
            let pv = g.params(v);
            let z = match params.z_dist {
                ZDist::Uniform => fluct_rng.gen::<f64>(),
                ZDist::Point => pv.zbar,
            };
            let social: f64 = in_edges[v].iter().map(|&(u, a)| a * y_src[u]).sum();
            let next = (1.0 - pv.alpha) * ((1.0 - params.beta) * z + params.beta * pv.bias)
                + pv.alpha * social;
            assert!(
                (-1e-9..=1.0 + 1e-9).contains(&next),
                "latent state left [0, 1]: {next}"
            );
            x[v] = next.clamp(0.0, 1.0);
        }
    }

    let effective = replay_effective_index(&coins, d);
    Trajectory::from_counts(n, successes, samples)?.with_hidden(Hidden {
        d,
        latent,
        coins,
        effective,
    })
}

/// Time average of `Y_v(t)` over the trajectory.
pub fn stationary_mean_estimate(traj: &Trajectory, v: usize) -> f64 {
    let sum: f64 = (0..traj.len())
        .map(|t| f64::from(traj.successes(t, v)) / f64::from(traj.samples(t, v)))
        .sum();
    sum / traj.len() as f64
}
