//! Write fig1.csv .. fig4.csv: recovery against T at the cross-validated
//! threshold, and the threshold curves, for both settings.
//!
//! cargo run --release --example figures -- out_dir [trials]

use std::path::PathBuf;

fn main() -> pim_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "figures".into()));
    let trials = args.next().map_or(10, |s| s.parse().expect("trials"));
    pim_core::experiments::write_plot_data(&dir, trials, 0)?;
    for i in 1..=4 {
        let path = dir.join(format!("fig{i}.csv"));
        let text = std::fs::read_to_string(&path).expect("just written");
        println!("{} ({} rows)", path.display(), text.lines().count() - 1);
    }
    Ok(())
}
