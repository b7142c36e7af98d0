//! Plug-in conditional entropies under naive and genie pairing.

use pim_core::entropy::{empirical_joint, entropy};
use pim_core::{build_pairs, simulate, Estimator, InfluenceGraph, NodeParams, PairMode, PimParams, ResetSpec};

fn main() -> pim_core::Result<()> {
    let g = InfluenceGraph::ring(4, NodeParams::default())?;
    let params = PimParams {
        reset: ResetSpec::Probability(0.9),
        ..PimParams::with_schedule(2, 1, 20_000, 3)
    };
    let traj = simulate(&g, &params)?;

    let naive = build_pairs(&traj, PairMode::Naive)?;
    let genie = build_pairs(&traj, PairMode::Genie)?;
    let differing = naive.pairs.iter().zip(&genie.pairs).filter(|(a, b)| a != b).count();
    println!("{} pairs, {differing} differ between pairings", naive.len());

    let joint = empirical_joint(&traj, &naive, 1, &[0])?;
    println!("H(v+, v, u) for v = 1, u = 0: {:.4} bits over {} cells", entropy(&joint)?, joint.support_size());

    // node 1 listens to node 0 on the ring
    for (name, pairs) in [("naive", &naive), ("genie", &genie)] {
        let est = Estimator::new(&traj, pairs)?;
        println!(
            "{name}: H(1+|1) = {:.4}  H(1+|1,0) = {:.4}  H(1+|1,0,2) = {:.4}",
            est.cond_entropy(1, &[])?,
            est.cond_entropy(1, &[0])?,
            est.cond_entropy(1, &[0, 2])?
        );
    }
    Ok(())
}
