//! Cross-validate the threshold on the 10-node ring at T = 3000.
//!
//! cargo run --release --example crossval -- [trials]

use pim_core::experiments::{crossval_kappa, GraphKind, GraphSpec, Setting};

fn main() -> pim_core::Result<()> {
    let trials = std::env::args().nth(1).map_or(10, |s| s.parse().expect("trials"));
    let cfg = Setting::easy().crossval_config(GraphSpec::new(GraphKind::Ring, 10), trials, 1);
    let cv = crossval_kappa(&cfg)?;
    for (kappa, rate) in &cv.curve {
        println!("{kappa:>6}  {rate:.2}  {}", "#".repeat((rate * 40.0).round() as usize));
    }
    println!("best kappa {} (interior: {})", cv.best_kappa, cv.is_interior());
    Ok(())
}
