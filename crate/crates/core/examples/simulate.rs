//! Simulate the ring with scheduled resets and look at what comes out.

use pim_core::simulator::stationary_mean_estimate;
use pim_core::{simulate, InfluenceGraph, NodeParams, PimParams};

fn main() -> pim_core::Result<()> {
    let g = InfluenceGraph::ring(10, NodeParams::default())?;
    let params = PimParams::with_schedule(5, 1, 3000, 7);
    let traj = simulate(&g, &params)?;
    traj.check_invariants(params.m_bar).expect("trajectory invariants");

    let hidden = traj.hidden().expect("simulated runs carry the coins");
    println!("T = {}, resets = {}", traj.len(), traj.reset_count().unwrap());
    println!("last effective index = {}", hidden.effective.last().unwrap());
    for v in 0..3 {
        println!("node {v}: mean N/M = {:.4}", stationary_mean_estimate(&traj, v));
    }

    let first: Vec<String> = (0..12).map(|t| traj.symbol(t, 0).to_string()).collect();
    println!("node 0, first steps: {}", first.join(" "));

    let out = std::env::temp_dir().join("pim_ring10.jsonl");
    traj.write_observations(&out)?;
    println!("observations -> {}", out.display());
    Ok(())
}
