//! Build the three graph families, check them and write them out.
//!
//! cargo run --example graphs -- /tmp/graphs

use std::path::PathBuf;

use pim_core::{InfluenceGraph, NodeParams};

fn main() -> pim_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "graphs".into()));
    std::fs::create_dir_all(&dir).map_err(|e| pim_core::Error::Io { path: dir.clone(), source: e })?;

    let params = NodeParams::default();
    let graphs = [
        ("ring10", InfluenceGraph::ring(10, params)?),
        ("line10", InfluenceGraph::line(10, params)?),
        ("random8", InfluenceGraph::random(8, 2, params, 42)?),
    ];
    for (name, g) in &graphs {
        assert!(g.validate().is_empty());
        let rho = g.influence_matrix()?.spectral_radius()?;
        let path = dir.join(format!("{name}.json"));
        g.save(&path)?;
        println!("{name:<8} edges={:<3} rho={rho:.4} -> {}", g.edge_set().len(), path.display());
    }

    // random graphs reject degrees they cannot host
    match InfluenceGraph::random(6, 7, params, 0) {
        Err(e) => println!("random(6, 7): {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
