//! Prints the PDE VVIX across the grid ladder for one parameter set.
//!
//! `cargo run --release -p vvix-core --example pde_ladder -- set2 5 [rows] [spx strikes]`

use std::time::Instant;

use vvix_core::model::{preset, MarketConvention};
use vvix_core::pde::{pde_vvix_report, spx_grid_with, PdeConfig, DEFAULT_SPX_STRIKES, GRID_LADDER};
use vvix_core::replication::default_vix_option_grid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("set2");
    let k1: f64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(5.0);
    let rows: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(GRID_LADDER.len());
    let count: usize = args.get(4).map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SPX_STRIKES);
    let params = preset(name).ok_or("unknown preset")?;
    let conv = MarketConvention::default();
    let spot = 100.0;
    let spx = spx_grid_with(spot, count)?;
    let vix = default_vix_option_grid(k1)?;
    println!("N,M,L,vvix,stages1,stages2,seconds");
    for &(n, m, l) in GRID_LADDER.iter().take(rows) {
        let start = Instant::now();
        let r = pde_vvix_report(&params, &conv, spot, &PdeConfig::new(n, m, l), &spx, &vix)?;
        println!(
            "{n},{m},{l},{:.2},{},{},{:.1}",
            r.vvix.points,
            r.legs[0].stages,
            r.legs[1].stages,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
