//! Seeded trial grids over sample size and threshold, recovery scoring,
//! threshold cross-validation and figure data.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeParams};
use crate::recgreedy::{recover_graph, RecoveredGraph};
use crate::simulator::{resolve_reset_probability, simulate, PimParams, ResetSpec, ZDist};

/// Sample sizes used when a grid is not given.
pub const DEFAULT_T_GRID: [usize; 5] = [500, 1000, 2000, 3000, 4000];

/// Thresholds used when a grid is not given. Spans the region where the
/// ring and line graphs go from over-selecting to missing edges.
pub const DEFAULT_KAPPA_GRID: [f64; 10] = [0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8];

pub const DEFAULT_TRIALS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Ring,
    Line,
    Random,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Ring => "ring",
            GraphKind::Line => "line",
            GraphKind::Random => "random",
        }
    }
}

/// Recipe for the ground-truth graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n: usize,
    /// Only used by `random`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_degree: Option<usize>,
    /// Only used by `random`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: NodeParams,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, n: usize) -> Self {
        GraphSpec {
            kind,
            n,
            in_degree: None,
            seed: 0,
            params: NodeParams::default(),
        }
    }

    pub fn build(&self) -> Result<InfluenceGraph> {
        match self.kind {
            GraphKind::Ring => InfluenceGraph::ring(self.n, self.params),
            GraphKind::Line => InfluenceGraph::line(self.n, self.params),
            GraphKind::Random => {
                let k = self
                    .in_degree
                    .ok_or_else(|| Error::param("in_degree", "required for random graphs"))?;
                InfluenceGraph::random(self.n, k, self.params, self.seed)
            }
        }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.kind.name(), self.n)
    }
}

/// Simulator settings shared by every cell; `t` and `seed` are filled in
/// per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PimTemplate {
    pub d: usize,
    pub m_bar: u32,
    #[serde(default = "default_reset")]
    pub reset: ResetSpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub z_dist: ZDist,
}

fn default_reset() -> ResetSpec {
    ResetSpec::Schedule {
        alpha_exp: 0.5,
        beta1: 0.75,
    }
}

fn default_beta() -> f64 {
    0.75
}

fn default_burn_in() -> usize {
    200
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

impl PimTemplate {
    /// Scheduled resets with `beta = 0.75`, `alpha = 0.5`, `beta1 = 0.75`.
    pub fn scheduled(d: usize, m_bar: u32) -> Self {
        PimTemplate {
            d,
            m_bar,
            reset: default_reset(),
            beta: default_beta(),
            burn_in: default_burn_in(),
            z_dist: ZDist::Uniform,
        }
    }

    pub fn instantiate(&self, t: usize, seed: u64) -> PimParams {
        PimParams {
            d: self.d,
            reset: self.reset,
            beta: self.beta,
            m_bar: self.m_bar,
            t,
            burn_in: self.burn_in,
            seed,
            z_dist: self.z_dist,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    RecoveryVsT,
    Crossval,
}

/// A whole experiment. The trial table is a pure function of this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub pim: PimTemplate,
    pub t_grid: Vec<usize>,
    pub kappa_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Cap on the conditioning-set size; defaults to the bound-derived cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_set: Option<usize>,
    /// Wall-clock times make tables irreproducible, so they are off unless
    /// asked for; `runtime_ms` is then 0.
    #[serde(default)]
    pub record_runtime: bool,
}

fn config_err(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, pim: PimTemplate, t_grid: Vec<usize>, kappa_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            graph,
            pim,
            t_grid,
            kappa_grid,
            trials: DEFAULT_TRIALS,
            seed_base: 0,
            mode: Mode::RecoveryVsT,
            max_set: None,
            record_runtime: false,
        }
    }

    /// Parse and validate; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(config_err("t_grid", "must not be empty"));
        }
        if self.kappa_grid.is_empty() {
            return Err(config_err("kappa_grid", "must not be empty"));
        }
        for (i, &k) in self.kappa_grid.iter().enumerate() {
            if !(k > 0.0 && k.is_finite()) {
                return Err(config_err(format!("kappa_grid[{i}]"), format!("{k} must be positive")));
            }
        }
        for (i, &t) in self.t_grid.iter().enumerate() {
            if t < 2 {
                return Err(config_err(format!("t_grid[{i}]"), "need at least two steps"));
            }
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.pim.d == 0 {
            return Err(config_err("pim.d", "must be at least 1"));
        }
        if !(self.pim.beta > 0.0 && self.pim.beta < 1.0) {
            return Err(config_err("pim.beta", format!("{} not in (0, 1)", self.pim.beta)));
        }
        if let ResetSpec::Probability(p) = self.pim.reset {
            if !(p > 0.0 && p <= 1.0) {
                return Err(config_err("pim.reset.probability", format!("{p} not in (0, 1]")));
            }
        }
        if self.max_set == Some(0) {
            return Err(config_err("max_set", "must be at least 1"));
        }
        if self.mode == Mode::Crossval {
            if self.t_grid.len() != 1 {
                return Err(config_err("t_grid", "crossval runs at a single sample size"));
            }
            if self.kappa_grid.len() < 2 {
                return Err(config_err("kappa_grid", "crossval needs at least two thresholds"));
            }
        }
        self.graph.build().map_err(|e| config_err("graph", e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("serialisable");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Simulation seed of one grid cell. Depends only on the cell coordinates,
/// so extending a grid leaves existing cells untouched.
pub fn cell_seed(seed_base: u64, t: usize, kappa_index: usize, trial: usize) -> u64 {
    let h = [t as u64, kappa_index as u64, trial as u64]
        .into_iter()
        .fold(0x5eed_u64, |h, x| splitmix64(h ^ x));
    seed_base ^ h
}

/// Edge-set comparison with self-loops left out of both sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeMetrics {
    pub precision: f64,
    pub recall: f64,
    pub hamming: usize,
    pub exact: bool,
}

pub fn edge_set_metrics(truth: &BTreeSet<(usize, usize)>, est: &BTreeSet<(usize, usize)>) -> EdgeMetrics {
    let truth: BTreeSet<_> = truth.iter().filter(|(u, v)| u != v).collect();
    let est: BTreeSet<_> = est.iter().filter(|(u, v)| u != v).collect();
    let hits = truth.intersection(&est).count();
    let hamming = truth.symmetric_difference(&est).count();
    let precision = if est.is_empty() {
        if truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / est.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits as f64 / truth.len() as f64
    };
    EdgeMetrics {
        precision,
        recall,
        hamming,
        exact: hamming == 0,
    }
}

pub fn edge_metrics(truth: &InfluenceGraph, est: &RecoveredGraph) -> Result<EdgeMetrics> {
    if truth.node_count() != est.node_count() {
        return Err(Error::IncompatibleGraphs {
            left: truth.node_count(),
            right: est.node_count(),
        });
    }
    Ok(edge_set_metrics(&truth.edge_set(), &est.edge_set()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The reset schedule is infeasible at this `T`.
    Skipped,
}

/// One `(T, kappa, trial)` cell. Metric fields are empty for skipped cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub kappa: f64,
    pub trial: usize,
    pub exact: Option<u8>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub hamming: Option<usize>,
    pub runtime_ms: u64,
    pub status: Status,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialTable {
    pub rows: Vec<TrialRow>,
}

/// Mean and standard error of each metric over the non-skipped trials of
/// one `(T, kappa)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub kappa: f64,
    pub trials: usize,
    pub skipped: usize,
    pub exact_mean: f64,
    pub exact_stderr: f64,
    pub precision_mean: f64,
    pub precision_stderr: f64,
    pub recall_mean: f64,
    pub recall_stderr: f64,
    pub hamming_mean: f64,
    pub hamming_stderr: f64,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    match xs.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (xs[0], 0.0),
        n => (xs.mean(), xs.std_dev() / (n as f64).sqrt()),
    }
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

impl TrialTable {
    pub fn ok_rows(&self) -> impl Iterator<Item = &TrialRow> {
        self.rows.iter().filter(|r| r.status == Status::Ok)
    }

    /// Grid order of first appearance.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut cells: Vec<(usize, f64)> = Vec::new();
        for r in &self.rows {
            if !cells.iter().any(|&(t, k)| t == r.t && k == r.kappa) {
                cells.push((r.t, r.kappa));
            }
        }
        cells
            .into_iter()
            .map(|(t, kappa)| {
                let cell: Vec<&TrialRow> = self.rows.iter().filter(|r| r.t == t && r.kappa == kappa).collect();
                let ok: Vec<&TrialRow> = cell.iter().copied().filter(|r| r.status == Status::Ok).collect();
                let col = |f: &dyn Fn(&TrialRow) -> f64| -> (f64, f64) {
                    mean_stderr(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
                };
                let (exact_mean, exact_stderr) = col(&|r| f64::from(r.exact.unwrap_or(0)));
                let (precision_mean, precision_stderr) = col(&|r| r.precision.unwrap_or(0.0));
                let (recall_mean, recall_stderr) = col(&|r| r.recall.unwrap_or(0.0));
                let (hamming_mean, hamming_stderr) = col(&|r| r.hamming.unwrap_or(0) as f64);
                SummaryRow {
                    t,
                    kappa,
                    trials: ok.len(),
                    skipped: cell.len() - ok.len(),
                    exact_mean,
                    exact_stderr,
                    precision_mean,
                    precision_stderr,
                    recall_mean,
                    recall_stderr,
                    hamming_mean,
                    hamming_stderr,
                }
            })
            .collect()
    }

    /// Mean exact recovery of the non-skipped trials at `(t, kappa)`.
    pub fn exact_rate(&self, t: usize, kappa: f64) -> Option<f64> {
        let xs: Vec<f64> = self
            .ok_rows()
            .filter(|r| r.t == t && r.kappa == kappa)
            .map(|r| f64::from(r.exact.unwrap_or(0)))
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv_rows(path, &self.rows)
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        write_csv_rows(path, &self.summary())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let rows = r
            .deserialize()
            .enumerate()
            .map(|(i, rec)| {
                rec.map_err(|e| Error::Malformed {
                    path: path.to_path_buf(),
                    line: i + 2,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(TrialTable { rows })
    }
}

fn run_cell(cfg: &ExperimentConfig, truth: &InfluenceGraph, t: usize, ki: usize, trial: usize) -> Result<TrialRow> {
    let kappa = cfg.kappa_grid[ki];
    let params = cfg.pim.instantiate(t, cell_seed(cfg.seed_base, t, ki, trial));
    let mut row = TrialRow {
        t,
        kappa,
        trial,
        exact: None,
        precision: None,
        recall: None,
        hamming: None,
        runtime_ms: 0,
        status: Status::Skipped,
    };
    if params.validate().is_err() || resolve_reset_probability(params.reset, t, params.d).is_err() {
        return Ok(row);
    }
    let start = Instant::now();
    let traj = simulate(truth, &params)?;
    let est = recover_graph(&traj, kappa, cfg.max_set)?;
    let m = edge_metrics(truth, &est)?;
    if cfg.record_runtime {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    row.exact = Some(u8::from(m.exact));
    row.precision = Some(m.precision);
    row.recall = Some(m.recall);
    row.hamming = Some(m.hamming);
    row.status = Status::Ok;
    Ok(row)
}

/// Simulate, recover and score every `(T, kappa, trial)` cell. Rows come
/// out in grid order (T, then kappa, then trial) whatever the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialTable> {
    cfg.validate()?;
    let truth = cfg.graph.build()?;
    let cells: Vec<(usize, usize, usize)> = cfg
        .t_grid
        .iter()
        .flat_map(|&t| (0..cfg.kappa_grid.len()).flat_map(move |ki| (0..cfg.trials).map(move |i| (t, ki, i))))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(t, ki, i)| run_cell(cfg, &truth, t, ki, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialTable { rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crossval {
    pub t: usize,
    pub best_kappa: f64,
    /// `(kappa, mean exact recovery)` in ascending kappa.
    pub curve: Vec<(f64, f64)>,
    pub table: TrialTable,
}

impl Crossval {
    pub fn is_interior(&self) -> bool {
        let first = self.curve.first().map(|c| c.0);
        let last = self.curve.last().map(|c| c.0);
        Some(self.best_kappa) != first && Some(self.best_kappa) != last
    }

    /// `kappa,exact_mean,exact_stderr,trials` per grid point.
    pub fn write_curve_csv(&self, path: &Path) -> Result<()> {
        let summary = self.table.summary();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["kappa", "exact_mean", "exact_stderr", "trials"])
            .map_err(|e| csv_err(path, e))?;
        for &(k, _) in &self.curve {
            let s = summary.iter().find(|s| s.kappa == k).expect("every kappa summarised");
            w.write_record([
                k.to_string(),
                s.exact_mean.to_string(),
                s.exact_stderr.to_string(),
                s.trials.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Pick the threshold with the highest mean exact recovery at the single
/// grid `T`; ties go to the smallest threshold.
pub fn crossval_kappa(cfg: &ExperimentConfig) -> Result<Crossval> {
    if cfg.kappa_grid.len() < 2 {
        return Err(config_err("kappa_grid", "crossval needs at least two thresholds"));
    }
    if cfg.t_grid.len() != 1 {
        return Err(config_err("t_grid", "crossval runs at a single sample size"));
    }
    let t = cfg.t_grid[0];
    let table = run_experiment(cfg)?;
    let mut kappas = cfg.kappa_grid.clone();
    kappas.sort_by(f64::total_cmp);
    kappas.dedup();
    let curve: Vec<(f64, f64)> = kappas
        .iter()
        .map(|&k| (k, table.exact_rate(t, k).unwrap_or(0.0)))
        .collect();
    let best_kappa = curve
        .iter()
        .fold(None::<(f64, f64)>, |best, &(k, r)| match best {
            Some((_, br)) if br >= r => best,
            _ => Some((k, r)),
        })
        .expect("grid non-empty")
        .0;
    Ok(Crossval {
        t,
        best_kappa,
        curve,
        table,
    })
}

/// Spearman rank correlation with a one-sided p-value for a positive trend.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trend {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks. A constant input gives
/// `rho = 0`, `p = 1`.
pub fn spearman_trend(xs: &[f64], ys: &[f64]) -> Trend {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let n = xs.len();
    let none = Trend {
        rho: 0.0,
        p_value: 1.0,
        n,
    };
    if n < 3 {
        return none;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let (mx, my) = (rx.iter().sum::<f64>() / n as f64, ry.iter().sum::<f64>() / n as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return none;
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if rho >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        1.0 - StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(t)
    };
    Trend { rho, p_value, n }
}

/// Trend of per-trial exact recovery against `T` at one threshold.
pub fn recovery_trend(table: &TrialTable, kappa: f64) -> Trend {
    let (xs, ys): (Vec<f64>, Vec<f64>) = table
        .ok_rows()
        .filter(|r| r.kappa == kappa)
        .map(|r| (r.t as f64, f64::from(r.exact.unwrap_or(0))))
        .unzip();
    spearman_trend(&xs, &ys)
}

/// The two evaluation settings: the easier `d = 5, M = 1` and the harder
/// `d = 10, M = 2`, each on a 10-node ring and line.
#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub d: usize,
    pub m_bar: u32,
    pub t_grid: Vec<usize>,
    /// Sample size at which the threshold is cross-validated.
    pub crossval_t: usize,
}

impl Setting {
    pub fn easy() -> Self {
        Setting {
            d: 5,
            m_bar: 1,
            t_grid: vec![500, 1000, 2000, 3000],
            crossval_t: 3000,
        }
    }

    pub fn hard() -> Self {
        Setting {
            d: 10,
            m_bar: 2,
            t_grid: DEFAULT_T_GRID.to_vec(),
            crossval_t: 4000,
        }
    }

    pub fn graphs() -> [GraphSpec; 2] {
        [GraphSpec::new(GraphKind::Ring, 10), GraphSpec::new(GraphKind::Line, 10)]
    }

    pub fn crossval_config(&self, graph: GraphSpec, trials: usize, seed_base: u64) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            seed_base,
            mode: Mode::Crossval,
            ..ExperimentConfig::new(
                graph,
                PimTemplate::scheduled(self.d, self.m_bar),
                vec![self.crossval_t],
                DEFAULT_KAPPA_GRID.to_vec(),
            )
        }
    }

    pub fn sweep_config(&self, graph: GraphSpec, kappa: f64, trials: usize, seed_base: u64) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            seed_base,
            ..ExperimentConfig::new(
                graph,
                PimTemplate::scheduled(self.d, self.m_bar),
                self.t_grid.clone(),
                vec![kappa],
            )
        }
    }
}

/// One point of a figure: a graph, a sample size and a threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureRow {
    pub graph: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub kappa: f64,
    pub trials: usize,
    pub exact_mean: f64,
    pub exact_stderr: f64,
}

/// Recovery-versus-`T` rows (at the cross-validated threshold) and the
/// cross-validation curve, for both graphs of a setting.
pub struct FigureData {
    pub recovery: Vec<FigureRow>,
    pub curve: Vec<FigureRow>,
}

pub fn figure_data(setting: &Setting, trials: usize, seed_base: u64) -> Result<FigureData> {
    let mut out = FigureData {
        recovery: Vec::new(),
        curve: Vec::new(),
    };
    for graph in Setting::graphs() {
        let label = graph.label();
        let cv = crossval_kappa(&setting.crossval_config(graph.clone(), trials, seed_base))?;
        let to_rows = |table: &TrialTable| -> Vec<FigureRow> {
            table
                .summary()
                .into_iter()
                .map(|s| FigureRow {
                    graph: label.clone(),
                    t: s.t,
                    kappa: s.kappa,
                    trials: s.trials,
                    exact_mean: s.exact_mean,
                    exact_stderr: s.exact_stderr,
                })
                .collect()
        };
        let mut curve = to_rows(&cv.table);
        curve.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
        out.curve.extend(curve);
        // fresh seeds for the sweep so the threshold is not scored on the
        // data it was picked with
        let sweep = run_experiment(&setting.sweep_config(graph, cv.best_kappa, trials, splitmix64(seed_base)))?;
        out.recovery.extend(to_rows(&sweep));
    }
    Ok(out)
}

/// Write `fig1.csv` .. `fig4.csv` into `dir`: recovery against `T` for the
/// easy and hard settings, then their cross-validation curves.
pub fn write_plot_data(dir: &Path, trials: usize, seed_base: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let easy = figure_data(&Setting::easy(), trials, seed_base)?;
    let hard = figure_data(&Setting::hard(), trials, seed_base)?;
    write_csv_rows(&dir.join("fig1.csv"), &easy.recovery)?;
    write_csv_rows(&dir.join("fig2.csv"), &hard.recovery)?;
    write_csv_rows(&dir.join("fig3.csv"), &easy.curve)?;
    write_csv_rows(&dir.join("fig4.csv"), &hard.curve)?;
    Ok(())
}

/// Provenance written next to every output table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config_sha256: Option<String>,
    pub seed_base: u64,
    pub trials: usize,
    pub note: String,
}

impl Metadata {
    pub fn new(cfg: Option<&ExperimentConfig>, seed_base: u64, trials: usize) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: cfg.map(ExperimentConfig::hash),
            seed_base,
            trials,
            note: "trial counts, T grids and kappa grids are chosen by this tool, not taken from a published table"
                .to_string(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let text = serde_json::to_string_pretty(self).expect("serialisable");
        writeln!(f, "{text}").map_err(|e| Error::io(path, e))
    }
}
