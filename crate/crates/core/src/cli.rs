//! The `pim` command: graph generation, simulation, recovery, experiment
//! grids, threshold cross-validation and the sample-size calculator.
//!
//! Data always goes to files; stdout only carries short summaries.
//! Exit codes: 0 success, 2 invalid input, 3 I/O, 4 infeasible reset
//! schedule, 5 non-convergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{theorem1_sample_size, BoundInputs, SampleSizeReport};
use crate::error::{Error, Result};
use crate::experiments::{crossval_kappa, run_experiment, write_plot_data, ExperimentConfig, Metadata, Mode};
use crate::graph::{InfluenceGraph, NodeParams};
use crate::recgreedy::recover_graph;
use crate::simulator::{simulate, PimParams, ResetSpec, Trajectory, ZDist};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SCHEDULE: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::InfeasibleSchedule { .. } => EXIT_SCHEDULE,
        Error::NoConvergence { .. } | Error::NoClosedSubset { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_INVALID,
    }
}

#[derive(Parser, Debug)]
#[command(name = "pim", version, about = "Past Influence Model simulation and influence-graph recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an influence graph file.
    Graph(GraphArgs),
    /// Simulate a trajectory on a graph.
    Simulate(SimulateArgs),
    /// Recover the influence graph from a trajectory.
    Recover(RecoverArgs),
    /// Run a seeded (T, kappa, trial) grid.
    Experiment(ExperimentArgs),
    /// Pick the threshold by exact-recovery rate at a single T.
    Crossval(CrossvalArgs),
    /// Evaluate the sample-size bound.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Ring,
    Line,
    Random,
}

#[derive(Args, Debug)]
pub struct NodeFlags {
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// Intrinsic bias `l`.
    #[arg(long = "l", default_value_t = 0.167)]
    pub bias: f64,
    #[arg(long, default_value_t = 0.4)]
    pub mu_slope: f64,
    #[arg(long, default_value_t = 0.5)]
    pub zbar: f64,
}

impl NodeFlags {
    fn params(&self) -> NodeParams {
        NodeParams {
            alpha: self.alpha,
            bias: self.bias,
            mu_slope: self.mu_slope,
            zbar: self.zbar,
        }
    }
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    /// In-degree of every node (random graphs only).
    #[arg(long)]
    pub in_degree: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub node: NodeFlags,
    #[arg(long, short, default_value = "graph.json")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ZFlag {
    Uniform,
    Point,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, short, default_value = "trajectory.jsonl")]
    pub out: PathBuf,
    /// Also write coins, effective indices and latent states to
    /// `<out stem>.hidden.jsonl`.
    #[arg(long)]
    pub with_hidden: bool,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub m_bar: u32,
    #[arg(long, short = 't', default_value_t = 3000)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit head probability; overrides the schedule.
    #[arg(long, conflicts_with = "no_reset")]
    pub p: Option<f64>,
    /// Plain Markov chain, no reset coin.
    #[arg(long)]
    pub no_reset: bool,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_exp: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub z_dist: ZFlag,
}

impl SimulateArgs {
    fn params(&self) -> PimParams {
        let reset = if self.no_reset {
            ResetSpec::Disabled
        } else if let Some(p) = self.p {
            ResetSpec::Probability(p)
        } else {
            ResetSpec::Schedule {
                alpha_exp: self.alpha_exp,
                beta1: self.beta1,
            }
        };
        PimParams {
            d: self.d,
            reset,
            beta: self.beta,
            m_bar: self.m_bar,
            t: self.t,
            burn_in: self.burn_in,
            seed: self.seed,
            z_dist: match self.z_dist {
                ZFlag::Uniform => ZDist::Uniform,
                ZFlag::Point => ZDist::Point,
            },
        }
    }
}

/// `traj.jsonl` -> `traj.hidden.jsonl`.
pub fn hidden_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.hidden.jsonl"))
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: f64,
    #[arg(long)]
    pub max_set: Option<usize>,
    #[arg(long, short, default_value = "recovered.json")]
    pub out: PathBuf,
    /// Write the per-candidate decision trace as JSON Lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridFlags {
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed_base: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long, required_unless_present = "plot_data")]
    pub config: Option<PathBuf>,
    #[arg(long, short, default_value = "trials.csv")]
    pub out: PathBuf,
    /// Mean and standard error per (T, kappa).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Directory for fig1.csv .. fig4.csv (ring and line, both settings).
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Threshold curve: kappa, mean exact recovery, standard error.
    #[arg(long, short, default_value = "kappa_curve.csv")]
    pub out: PathBuf,
    /// Per-trial rows behind the curve.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// JSON file with any subset of the inputs; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Take `rho` from the spectral radius of this graph's influence matrix.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub mbar: Option<u32>,
    #[arg(long)]
    pub v: Option<u64>,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub epsilon_prime: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub delta_prime: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub mu_bar: Option<f64>,
    #[arg(long = "lipschitz")]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Inputs of the ring/line evaluation: `M = 1`, ten nodes, `d = 5`,
/// `mu(x) = 0.4 x` (so `mu_bar = L = 0.4`) and `rho = 0.8`.
pub fn default_bound_inputs() -> BoundInputs {
    BoundInputs {
        m_bar: 1,
        v_size: 10,
        gamma: 0.1,
        epsilon: 0.2,
        epsilon_prime: 0.2,
        delta: 0.001,
        delta_prime: 0.001,
        c: 1.0,
        c1: 0.01,
        alpha_exp: 0.5,
        beta1: 0.75,
        d: 5,
        mu_bar: 0.4,
        lipschitz: 0.4,
        rho: 0.8,
    }
}

fn bound_inputs(a: &BoundArgs) -> Result<BoundInputs> {
    let mut b = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = serde_json::to_value(default_bound_inputs()).expect("serialisable");
            let patch: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
            let (serde_json::Value::Object(mut obj), serde_json::Value::Object(patch)) = (base, patch) else {
                return Err(Error::Config {
                    path: String::new(),
                    reason: "bound config must be a JSON object".into(),
                });
            };
            obj.extend(patch);
            let de = serde_json::Value::Object(obj);
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: e.path().to_string(),
                reason: e.into_inner().to_string(),
            })?
        }
        None => default_bound_inputs(),
    };
    if let Some(path) = &a.graph {
        let g = InfluenceGraph::load(path)?;
        b.rho = g.influence_matrix()?.spectral_radius()?;
        b.v_size = g.node_count() as u64;
    }
    macro_rules! over {
        ($($flag:ident => $field:ident),*) => {$(if let Some(x) = a.$flag { b.$field = x; })*};
    }
    over!(mbar => m_bar, v => v_size, d => d, gamma => gamma, epsilon => epsilon,
          epsilon_prime => epsilon_prime, delta => delta, delta_prime => delta_prime, c => c, c1 => c1,
          alpha => alpha_exp, beta1 => beta1, mu_bar => mu_bar, lipschitz => lipschitz, rho => rho);
    Ok(b)
}

fn bound_table(b: &BoundInputs, r: &SampleSizeReport) -> String {
    let mut s = String::new();
    let mut row = |k: &str, v: String| s.push_str(&format!("{k:<22} {v}\n"));
    row("M_bar", b.m_bar.to_string());
    row("|V|", b.v_size.to_string());
    row("d", b.d.to_string());
    row("gamma", b.gamma.to_string());
    row("epsilon / epsilon'", format!("{} / {}", b.epsilon, b.epsilon_prime));
    row("delta / delta'", format!("{} / {}", b.delta, b.delta_prime));
    row("c / c1", format!("{} / {}", b.c, b.c1));
    row("alpha / beta1", format!("{} / {}", b.alpha_exp, b.beta1));
    row("mu_bar / L / rho", format!("{} / {} / {}", b.mu_bar, b.lipschitz, b.rho));
    row("|chi|", r.chi.to_string());
    row("|P|max", r.pmax.to_string());
    row("|xi|", format!("{:e}", r.xi));
    row("log term", r.log_term.to_string());
    let verdict = if r.mixing_satisfied { "satisfied" } else { "condition violated" };
    row("mixing value", format!("{} ({verdict})", r.mixing_value));
    row("reset term", r.term_reset.to_string());
    row("concentration term", r.term_concentration.to_string());
    row(
        "T_required",
        r.t_required.map_or_else(|| "not applicable".to_string(), |t| t.to_string()),
    );
    for c in &r.side_conditions {
        row(&c.name, format!("{} vs {} ({})", c.lhs, c.rhs, if c.holds { "holds" } else { "fails" }));
    }
    s
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::param("jobs", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param("jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn load_config(path: &Path, grid: &GridFlags) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(t) = grid.trials {
        cfg.trials = t;
    }
    if let Some(s) = grid.seed_base {
        cfg.seed_base = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn cmd_graph(a: &GraphArgs) -> Result<i32> {
    let params = a.node.params();
    let g = match a.kind {
        Kind::Ring => InfluenceGraph::ring(a.n, params)?,
        Kind::Line => InfluenceGraph::line(a.n, params)?,
        Kind::Random => {
            let k = a
                .in_degree
                .ok_or_else(|| Error::param("in_degree", "--in-degree is required for random graphs"))?;
            InfluenceGraph::random(a.n, k, params, a.seed)?
        }
    };
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidGraph(violations.iter().map(ToString::to_string).collect()));
    }
    g.save(&a.out)?;
    let rho = g.influence_matrix()?.spectral_radius()?;
    println!(
        "{}: {} nodes, {} edges, valid, spectral radius {rho:.6}",
        a.out.display(),
        g.node_count(),
        g.edge_set().len()
    );
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let g = InfluenceGraph::load(&a.graph)?;
    let traj = simulate(&g, &a.params())?;
    traj.write_observations(&a.out)?;
    if a.with_hidden {
        traj.write_hidden(&hidden_path(&a.out))?;
    }
    println!(
        "T={} nodes={} resets={}",
        traj.len(),
        traj.node_count(),
        traj.reset_count().unwrap_or(0)
    );
    Ok(EXIT_OK)
}

fn cmd_recover(a: &RecoverArgs) -> Result<i32> {
    let traj = Trajectory::read_observations(&a.traj)?;
    let est = recover_graph(&traj, a.kappa, a.max_set)?;
    est.save(&a.out)?;
    if let Some(path) = &a.trace {
        est.write_trace(path)?;
    }
    let edges = est.edge_set();
    println!("recovered {} edges from T={} (kappa {})", edges.len(), traj.len(), a.kappa);
    if est.all_converged() {
        Ok(EXIT_OK)
    } else {
        let capped: Vec<String> = (0..est.node_count())
            .filter(|&v| !est.converged[v])
            .map(|v| v.to_string())
            .collect();
        eprintln!("conditioning-set cap reached for nodes {}", capped.join(", "));
        Ok(EXIT_NO_CONVERGENCE)
    }
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<i32> {
    if let Some(path) = &a.config {
        let cfg = load_config(path, &a.grid)?;
        let table = with_pool(a.grid.jobs, || run_experiment(&cfg))??;
        table.write_csv(&a.out)?;
        Metadata::new(Some(&cfg), cfg.seed_base, cfg.trials).save(&meta_path(&a.out))?;
        if let Some(s) = &a.summary {
            table.write_summary_csv(s)?;
        }
        let skipped = table.rows.len() - table.ok_rows().count();
        println!("{} rows written to {} ({skipped} skipped)", table.rows.len(), a.out.display());
    }
    if let Some(dir) = &a.plot_data {
        let trials = a.grid.trials.unwrap_or(crate::experiments::DEFAULT_TRIALS);
        let seed_base = a.grid.seed_base.unwrap_or(0);
        with_pool(a.grid.jobs, || write_plot_data(dir, trials, seed_base))??;
        Metadata::new(None, seed_base, trials).save(&dir.join("figures.meta.json"))?;
        println!("fig1.csv .. fig4.csv written to {}", dir.display());
    }
    Ok(EXIT_OK)
}

fn cmd_crossval(a: &CrossvalArgs) -> Result<i32> {
    let mut cfg = load_config(&a.config, &a.grid)?;
    cfg.mode = Mode::Crossval;
    cfg.validate()?;
    let cv = with_pool(a.grid.jobs, || crossval_kappa(&cfg))??;
    cv.write_curve_csv(&a.out)?;
    Metadata::new(Some(&cfg), cfg.seed_base, cfg.trials).save(&meta_path(&a.out))?;
    if let Some(path) = &a.trials_out {
        cv.table.write_csv(path)?;
    }
    let rate = cv.curve.iter().find(|c| c.0 == cv.best_kappa).map_or(0.0, |c| c.1);
    println!("T={} best kappa {} (exact recovery {rate})", cv.t, cv.best_kappa);
    Ok(EXIT_OK)
}

fn cmd_bound(a: &BoundArgs) -> Result<i32> {
    let b = bound_inputs(a)?;
    let report = theorem1_sample_size(&b)?;
    let json = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": b,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&json).expect("serialisable");
    if let Some(path) = &a.out {
        std::fs::write(path, text.clone() + "\n").map_err(|e| Error::io(path, e))?;
    }
    if a.json {
        println!("{text}");
    } else {
        print!("{}", bound_table(&b, &report));
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Crossval(a) => cmd_crossval(a),
        Command::Bound(a) => cmd_bound(a),
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::io("x", std::io::ErrorKind::NotFound.into())), EXIT_IO);
        assert_eq!(exit_code(&Error::InfeasibleSchedule { p: -0.5 }), EXIT_SCHEDULE);
        assert_eq!(
            exit_code(&Error::NoConvergence {
                iterations: 1,
                estimate: 0.0
            }),
            EXIT_NO_CONVERGENCE
        );
        assert_eq!(exit_code(&Error::param("kappa", "bad")), EXIT_INVALID);
    }

    #[test]
    fn hidden_sidecar_name() {
        assert_eq!(hidden_path(Path::new("out/traj.jsonl")), PathBuf::from("out/traj.hidden.jsonl"));
        assert_eq!(hidden_path(Path::new("traj")), PathBuf::from("traj.hidden.jsonl"));
    }

    #[test]
    fn bound_flags_override_defaults() {
        let cli = Cli::try_parse_from(["pim", "bound", "--mbar", "2", "--rho", "0.5"]).unwrap();
        let Command::Bound(a) = cli.command else { panic!() };
        let b = bound_inputs(&a).unwrap();
        assert_eq!((b.m_bar, b.rho, b.v_size), (2, 0.5, 10));
    }

    #[test]
    fn parse_errors_exit_two() {
        assert_eq!(run(["pim", "graph"]), EXIT_INVALID);
        assert_eq!(run(["pim", "nonsense"]), EXIT_INVALID);
    }
}
