use vvix_core::calibration::heston_vanilla_price;
use vvix_core::model::preset;
use vvix_core::pde::{
    apply_initial_condition, build_grid, evolve, pde_vvix_report, spline_readout, spx_grid_with, HestonOperator,
    PdeConfig, StackMode,
};
use vvix_core::replication::{default_vix_option_grid, StrikeGrid};
use vvix_core::MarketConvention;

#[test]
fn vanilla_call_matches_fourier_price() {
    let p = preset("set1").unwrap();
    let conv = MarketConvention::default();
    let grid = build_grid(&p, &conv, 200, 240, 400, 100.0).unwrap();
    let horizon = grid.maturity + grid.delta;
    let strikes = StrikeGrid::new(vec![90.0, 100.0, 110.0]).unwrap();
    let mut stack = apply_initial_condition(&grid, &strikes);
    let op = HestonOperator::new(&grid, &p, &conv);
    let ns = stack.surface_count();
    evolve(&op, stack.values_mut(), ns, horizon, grid.n_steps).unwrap();
    // the out-of-the-money strike is left out: its value is too small for a
    // relative bound at this x spacing
    for (i, &k) in strikes.strikes().iter().enumerate().take(2) {
        let pde = spline_readout(&grid, &stack.surface(i), 100.0, p.v0, 4.0 * p.theta).unwrap();
        let cf = heston_vanilla_price(&p, &conv, 100.0, k, horizon, true).unwrap();
        assert!((pde / cf - 1.0).abs() < 2e-3, "K = {k}: {pde} vs {cf}");
    }
}

#[test]
fn constants_and_forwards_are_preserved() {
    let p = preset("set2").unwrap();
    let conv = MarketConvention::default();
    let grid = build_grid(&p, &conv, 40, 30, 60, 100.0).unwrap();
    let op = HestonOperator::new(&grid, &p, &conv);
    let nodes = grid.node_count();
    // surfaces: 1 and x, interleaved node-major
    let mut f: Vec<f64> = (0..nodes)
        .flat_map(|k| [1.0, grid.x_nodes[k / grid.v_nodes.len()]])
        .collect();
    let before = f.clone();
    evolve(&op, &mut f, 2, grid.maturity, 30).unwrap();
    for (a, b) in f.iter().zip(&before) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn prices_stay_nonnegative() {
    let p = preset("set3").unwrap();
    let conv = MarketConvention::default();
    let grid = build_grid(&p, &conv, 50, 60, 100, 100.0).unwrap();
    let strikes = spx_grid_with(100.0, 50).unwrap();
    let mut stack = apply_initial_condition(&grid, &strikes);
    let op = HestonOperator::new(&grid, &p, &conv);
    let ns = stack.surface_count();
    evolve(&op, stack.values_mut(), ns, grid.delta, grid.n_steps_first_leg).unwrap();
    // central differences ring slightly next to unresolved strike kinks
    let worst = stack.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(worst > -5e-4 * 100.0, "{worst}");
}

#[test]
fn full_and_aggregated_stacks_agree() {
    let p = preset("set2").unwrap();
    let conv = MarketConvention::default();
    let spx = spx_grid_with(100.0, 100).unwrap();
    let vix = default_vix_option_grid(10.0).unwrap();
    let cfg = PdeConfig::new(50, 25, 30);
    let agg = pde_vvix_report(&p, &conv, 100.0, &cfg, &spx, &vix).unwrap();
    let full = pde_vvix_report(&p, &conv, 100.0, &cfg.with_mode(StackMode::Full), &spx, &vix).unwrap();
    assert!((agg.vvix.points - full.vvix.points).abs() < 1e-8, "{} {}", agg.vvix.points, full.vvix.points);
    for (a, b) in agg.vix_surface.iter().zip(&full.vix_surface) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn vvix_does_not_depend_on_spot() {
    let p = preset("set2").unwrap();
    let conv = MarketConvention::default();
    let vix = default_vix_option_grid(10.0).unwrap();
    let cfg = PdeConfig::new(100, 50, 60);
    let level = |spot: f64| {
        let spx = spx_grid_with(spot, 400).unwrap();
        pde_vvix_report(&p, &conv, spot, &cfg, &spx, &vix).unwrap().vvix.points
    };
    let (a, b) = (level(100.0), level(5000.0));
    assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
}

#[test]
fn coarse_grid_is_reported() {
    let p = preset("set1").unwrap();
    let conv = MarketConvention::default();
    let spx = spx_grid_with(100.0, 200).unwrap();
    let vix = default_vix_option_grid(5.0).unwrap();
    let rep = pde_vvix_report(&p, &conv, 100.0, &PdeConfig::new(25, 12, 16), &spx, &vix).unwrap();
    assert!(rep.vvix.points.is_finite() && rep.vvix.points > 0.0);
    assert_eq!(rep.legs[0].steps + rep.legs[1].steps, 25);
    let json = serde_json::to_value(&rep).unwrap();
    assert!(json.get("vix_surface").is_none());
    assert_eq!(json["config"]["m"], 12);
}
