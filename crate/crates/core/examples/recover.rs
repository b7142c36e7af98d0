//! Simulate, recover and score.
//!
//! cargo run --release --example recover -- [kappa] [T]

use pim_core::experiments::edge_metrics;
use pim_core::{recover_graph, simulate, InfluenceGraph, NodeParams, PimParams};

fn main() -> pim_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let kappa: f64 = args.next().map_or(0.1, |s| s.parse().expect("kappa"));
    let t: usize = args.next().map_or(3000, |s| s.parse().expect("T"));

    for (name, g) in [
        ("ring", InfluenceGraph::ring(10, NodeParams::default())?),
        ("line", InfluenceGraph::line(10, NodeParams::default())?),
    ] {
        let traj = simulate(&g, &PimParams::with_schedule(5, 1, t, 1))?;
        let est = recover_graph(&traj, kappa, None)?;
        let m = edge_metrics(&g, &est)?;
        println!(
            "{name}: exact={} precision={:.2} recall={:.2} hamming={}",
            m.exact, m.precision, m.recall, m.hamming
        );
        for (v, nb) in est.neighborhoods.iter().enumerate().take(3) {
            println!("  T({v}) = {nb:?}");
        }
    }
    Ok(())
}
