//! Compare the greedy against exhaustive search, and measure how much
//! the hidden reset coins would help.

use pim_core::oracle::{exhaustive_neighborhood, genie_gap};
use pim_core::recgreedy::recover_neighborhood;
use pim_core::{build_pairs, simulate, InfluenceGraph, NodeParams, PairMode, PimParams, ResetSpec};

fn main() -> pim_core::Result<()> {
    let g = InfluenceGraph::random(5, 2, NodeParams::default(), 9)?;
    let params = PimParams {
        reset: ResetSpec::Probability(0.9),
        ..PimParams::with_schedule(3, 1, 50_000, 4)
    };
    let traj = simulate(&g, &params)?;
    let pairs = build_pairs(&traj, PairMode::Naive)?;

    let kappa = 0.05;
    for v in 0..g.node_count() {
        let greedy = recover_neighborhood(&traj, &pairs, v, kappa, 4)?.neighborhood;
        let exhaustive = exhaustive_neighborhood(&traj, &pairs, v, kappa, 4)?;
        println!(
            "node {v}: truth {:?} greedy {greedy:?} exhaustive {exhaustive:?}",
            g.neighborhood(v)
        );
    }

    println!();
    for v in 0..g.node_count() {
        for u in (0..g.node_count()).filter(|&u| u != v) {
            let gap = genie_gap(&traj, v, u, &[])?;
            let mark = if g.neighborhood(v).contains(&u) { "*" } else { " " };
            println!("{mark} {u} -> {v}: naive {:.4}  genie {:.4}", gap.naive, gap.genie);
        }
    }
    Ok(())
}
