//! VVIX by double replication on the two-dimensional Heston PDE.
//!
//! SPX calls and puts are evolved backward from `T + delta` to `T`. At `T`
//! each grid node turns its option values into a VIX level through a parity
//! regression and a variance strip; VIX options on that level are then
//! evolved back to time zero and stripped again into a VVIX surface, which is
//! read out at `(spot, v0)` with a bicubic spline.
//!
//! Because the scheme is linear, the strip only ever needs three surfaces per
//! leg: the strip-weighted sum of calls, the underlying and the unit claim.
//! [`StackMode::Aggregated`] evolves those; [`StackMode::Full`] evolves every
//! call and put and is kept as a cross-check on small grids.

pub mod continuity;
pub mod grid;
pub mod operator;
pub mod rkg;
pub mod stack;

use serde::{Deserialize, Serialize};

use crate::analytics::IndexQuote;
use crate::error::{Error, Result};
use crate::model::{HestonParams, MarketConvention};
use crate::numerics::Spline2D;
use crate::replication::StrikeGrid;

pub use continuity::{continuity_condition, ContinuityDiagnostics, NodeLevel, StripEvaluator, StripPrefix};
pub use grid::{build_grid, build_grid_with, PdeGrid, DEFAULT_X_STDDEVS};
pub use operator::HestonOperator;
pub use rkg::{evolve, EvolveStats, RkgCoefficients};
pub use stack::{apply_initial_condition, PayoffStack};

/// Number of SPX strikes in the default strip. Coarser strips alias
/// against the `x` grid: the strike kinks fall at varying offsets from the
/// nodes and the node-wise VIX oscillates along `x`.
pub const DEFAULT_SPX_STRIKES: usize = 1600;

/// SPX strikes from 40% to 140% of spot.
pub fn default_spx_grid(spot: f64) -> Result<StrikeGrid> {
    spx_grid_with(spot, DEFAULT_SPX_STRIKES)
}

pub fn spx_grid_with(spot: f64, count: usize) -> Result<StrikeGrid> {
    StrikeGrid::linspace(0.4 * spot, 1.4 * spot, count)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackMode {
    #[default]
    Aggregated,
    Full,
}

/// Grid resolution and solver options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    /// Steps along `x`.
    pub m: usize,
    /// Steps along `v`.
    pub l: usize,
    /// Time steps over `[0, T + delta]`.
    pub n: usize,
    pub x_max_stddevs: f64,
    pub mode: StackMode,
}

impl PdeConfig {
    pub fn new(n: usize, m: usize, l: usize) -> Self {
        Self {
            m,
            l,
            n,
            x_max_stddevs: DEFAULT_X_STDDEVS,
            mode: StackMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: StackMode) -> Self {
        self.mode = mode;
        self
    }
}

/// The `(N, M, L)` ladder of the convergence table.
pub const GRID_LADDER: [(usize, usize, usize); 5] =
    [(25, 12, 16), (50, 25, 30), (100, 50, 60), (200, 100, 120), (400, 200, 240)];

#[derive(Debug, Clone, Serialize)]
pub struct PdeReport {
    pub vvix: IndexQuote,
    pub config: PdeConfig,
    pub x_max: f64,
    pub v_max: f64,
    /// Evolution over `[T, T + delta]` and then `[0, T]`.
    pub legs: [EvolveStats; 2],
    pub continuity: ContinuityDiagnostics,
    pub readout: ContinuityDiagnostics,
    /// VIX level at every node at time `T`.
    #[serde(skip)]
    pub vix_surface: Vec<f64>,
    /// VVIX level at every node at time zero.
    #[serde(skip)]
    pub vvix_surface: Vec<f64>,
    #[serde(skip)]
    pub grid: PdeGrid,
}

/// Evolves every surface of `stack` from time `t_from` back to `t_to` in
/// `steps` equal steps.
#[allow(clippy::too_many_arguments)]
pub fn rkg_evolve(
    stack: &mut PayoffStack,
    grid: &PdeGrid,
    t_from: f64,
    t_to: f64,
    steps: usize,
    params: &HestonParams,
    conv: &MarketConvention,
) -> Result<EvolveStats> {
    if !(t_from > t_to) {
        return Err(Error::InvalidParameter(format!("need t_from > t_to, got {t_from} and {t_to}")));
    }
    let op = HestonOperator::new(grid, params, conv);
    let ns = stack.surface_count();
    evolve(&op, stack.values_mut(), ns, t_from - t_to, steps)
}

/// VVIX from the PDE with the aggregated stack.
#[allow(clippy::too_many_arguments)]
pub fn pde_vvix(
    params: &HestonParams,
    conv: &MarketConvention,
    spot: f64,
    m: usize,
    l: usize,
    n: usize,
    spx_grid: &StrikeGrid,
    vix_grid: &StrikeGrid,
) -> Result<IndexQuote> {
    Ok(pde_vvix_report(params, conv, spot, &PdeConfig::new(n, m, l), spx_grid, vix_grid)?.vvix)
}

pub fn pde_vvix_report(
    params: &HestonParams,
    conv: &MarketConvention,
    spot: f64,
    config: &PdeConfig,
    spx_grid: &StrikeGrid,
    vix_grid: &StrikeGrid,
) -> Result<PdeReport> {
    let grid = build_grid_with(params, conv, config.m, config.l, config.n, spot, config.x_max_stddevs)?;
    let op = HestonOperator::new(&grid, params, conv);
    let maturity = grid.maturity;
    let spx_eval = StripEvaluator::new(spx_grid, conv.delta)?;
    let vix_eval = StripEvaluator::new(vix_grid, maturity)?;
    let steps1 = grid.n_steps_first_leg;
    let steps2 = grid.n_steps_second_leg();
    let x_of = |k: usize| grid.x_nodes[k / grid.v_nodes.len()];
    let nodes = grid.node_count();

    let mut continuity = ContinuityDiagnostics::default();
    let mut readout = ContinuityDiagnostics::default();
    let (leg1, leg2, vix_surface, vvix_surface) = match config.mode {
        StackMode::Full => {
            let mut stack = apply_initial_condition(&grid, spx_grid);
            let ns = stack.surface_count();
            let leg1 = evolve(&op, stack.values_mut(), ns, conv.delta, steps1)?;
            let (mut stack, vix, diag) = continuity_condition(&stack, spx_grid, vix_grid, conv.delta)?;
            continuity = diag;
            let ns = stack.surface_count();
            let leg2 = evolve(&op, stack.values_mut(), ns, maturity, steps2)?;
            let mut scratch = Vec::new();
            let vvix: Vec<f64> = (0..nodes)
                .map(|k| {
                    let lvl = vix_eval.level(stack.node(k), &mut scratch);
                    readout.record(&lvl);
                    lvl.points
                })
                .collect();
            (leg1, leg2, vix, vvix)
        }
        StackMode::Aggregated => {
            let spx_prefix = StripPrefix::new(&spx_eval);
            let vix_prefix = StripPrefix::new(&vix_eval);
            let weighted_calls = |eval: &StripEvaluator, x: f64| -> f64 {
                eval.strikes()
                    .iter()
                    .zip(eval.weights())
                    .map(|(k, w)| w * (x - k).max(0.0))
                    .sum()
            };
            let mut f: Vec<f64> = (0..nodes)
                .flat_map(|k| {
                    let x = x_of(k);
                    [weighted_calls(&spx_eval, x), x, 1.0]
                })
                .collect();
            let leg1 = evolve(&op, &mut f, 3, conv.delta, steps1)?;
            let vix: Vec<f64> = f
                .chunks_exact(3)
                .map(|c| {
                    let lvl = spx_eval.level_aggregated(c[0], c[1], c[2], &spx_prefix);
                    continuity.record(&lvl);
                    lvl.points
                })
                .collect();
            let mut g: Vec<f64> = vix.iter().flat_map(|&y| [weighted_calls(&vix_eval, y), y, 1.0]).collect();
            let leg2 = evolve(&op, &mut g, 3, maturity, steps2)?;
            let vvix: Vec<f64> = g
                .chunks_exact(3)
                .map(|c| {
                    let lvl = vix_eval.level_aggregated(c[0], c[1], c[2], &vix_prefix);
                    readout.record(&lvl);
                    lvl.points
                })
                .collect();
            (leg1, leg2, vix, vvix)
        }
    };

    let points = spline_readout(&grid, &vvix_surface, spot, params.v0, 4.0 * params.theta)?;
    Ok(PdeReport {
        vvix: IndexQuote::new(points, maturity)?,
        config: *config,
        x_max: grid.x_max(),
        v_max: grid.v_max(),
        legs: [leg1, leg2],
        continuity,
        readout,
        vix_surface,
        vvix_surface,
        grid,
    })
}

/// Node index range covering `[lo, hi]`, widened until it brackets
/// `target` with at least four knots.
fn knot_range(nodes: &[f64], lo: f64, hi: f64, target: f64) -> (usize, usize) {
    let last = nodes.len() - 1;
    let mut a = nodes.partition_point(|x| *x < lo).min(last);
    let mut b = nodes.partition_point(|x| *x <= hi).saturating_sub(1).max(a);
    while a > 0 && nodes[a] > target {
        a -= 1;
    }
    while b < last && nodes[b] < target {
        b += 1;
    }
    while b - a < 3 && (a > 0 || b < last) {
        if b < last {
            b += 1;
        }
        if b - a < 3 && a > 0 {
            a -= 1;
        }
    }
    (a, b)
}

/// Bicubic spline of the node values on the box `x in [spot/2, 3 spot/2]`,
/// `v in [0, v_hi]`, evaluated at `(spot, v0)`.
pub fn spline_readout(grid: &PdeGrid, values: &[f64], spot: f64, v0: f64, v_hi: f64) -> Result<f64> {
    let (i0, i1) = knot_range(&grid.x_nodes, 0.5 * spot, 1.5 * spot, spot);
    let (j0, j1) = knot_range(&grid.v_nodes, 0.0, v_hi, v0);
    let xs = &grid.x_nodes[i0..=i1];
    let vs = &grid.v_nodes[j0..=j1];
    let table: Vec<Vec<f64>> = (i0..=i1)
        .map(|i| (j0..=j1).map(|j| values[grid.index(i, j)]).collect())
        .collect();
    Spline2D::fit(xs, vs, &table)?.eval(spot, v0)
}
