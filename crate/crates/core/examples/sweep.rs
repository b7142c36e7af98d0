//! Recovery against sample size, written as CSV with a summary, plus
//! the trend test.
//!
//! cargo run --release --example sweep -- out_dir [trials]

use std::path::PathBuf;

use pim_core::experiments::{recovery_trend, run_experiment, GraphKind, GraphSpec, Metadata, Setting};

fn main() -> pim_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "sweep".into()));
    let trials = args.next().map_or(20, |s| s.parse().expect("trials"));
    std::fs::create_dir_all(&dir).map_err(|e| pim_core::Error::Io { path: dir.clone(), source: e })?;

    let kappa = 0.03;
    let cfg = Setting::easy().sweep_config(GraphSpec::new(GraphKind::Line, 10), kappa, trials, 5);
    let table = run_experiment(&cfg)?;
    table.write_csv(&dir.join("trials.csv"))?;
    table.write_summary_csv(&dir.join("summary.csv"))?;
    Metadata::new(Some(&cfg), cfg.seed_base, cfg.trials).save(&dir.join("trials.csv.meta.json"))?;

    for s in table.summary() {
        println!("T={:<5} exact {:.2} +- {:.2}", s.t, s.exact_mean, s.exact_stderr);
    }
    let trend = recovery_trend(&table, kappa);
    println!("spearman rho {:.3}, one-sided p {:.2e}", trend.rho, trend.p_value);
    Ok(())
}
