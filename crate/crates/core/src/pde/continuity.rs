//! Node-wise conversion of option surfaces into an index level, and the
//! continuity event that turns SPX options into VIX options.

use serde::Serialize;

use crate::error::Result;
use crate::numerics::ParityRegression;
use crate::replication::StrikeGrid;

use super::stack::PayoffStack;

/// Index level implied by one node's call and put values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLevel {
    pub forward: f64,
    /// `100 sqrt(variance)` in index points.
    pub points: f64,
    /// No strike at or below the forward; the lowest strike was used as `K*`.
    pub no_k_star: bool,
    /// Negative strip variance floored at zero.
    pub floored: bool,
}

/// Precomputed per-strip data shared by all nodes.
#[derive(Debug, Clone)]
pub struct StripEvaluator {
    strikes: Vec<f64>,
    weights: Vec<f64>,
    regression: ParityRegression,
    tenor: f64,
}

impl StripEvaluator {
    pub fn new(grid: &StrikeGrid, tenor: f64) -> Result<Self> {
        Ok(Self {
            strikes: grid.strikes().to_vec(),
            weights: grid.strip_weights(),
            regression: ParityRegression::new(grid.strikes())?,
            tenor,
        })
    }

    fn k_star(&self, forward: f64) -> (usize, bool) {
        match self.strikes.partition_point(|k| *k <= forward) {
            0 => (0, true),
            p => (p - 1, false),
        }
    }

    fn finish(&self, forward: f64, j: usize, weighted_otm: f64, no_k_star: bool) -> NodeLevel {
        let raw = (2.0 * weighted_otm - (forward / self.strikes[j] - 1.0).powi(2)) / self.tenor;
        let variance = raw.max(0.0);
        NodeLevel {
            forward,
            points: 100.0 * variance.sqrt(),
            no_k_star,
            floored: raw < 0.0,
        }
    }

    /// Regression forward and strip level from `2n` values (calls, puts).
    pub fn level(&self, values: &[f64], scratch: &mut Vec<f64>) -> NodeLevel {
        let n = self.strikes.len();
        let (calls, puts) = values.split_at(n);
        scratch.clear();
        scratch.extend(calls.iter().zip(puts).map(|(c, p)| c - p));
        let (_, forward) = self.regression.solve_unchecked(scratch);
        let (j, missing) = self.k_star(forward);
        let otm: f64 = (0..n)
            .map(|i| self.weights[i] * if i < j { puts[i] } else { calls[i] })
            .sum();
        self.finish(forward, j, otm, missing)
    }

    /// Strip level from aggregated surfaces: `w = sum_i weight_i call_i`,
    /// the underlying `u` and the unit claim `e`. The puts follow from
    /// parity, `put_i = call_i - u + K_i e`, which makes the regression
    /// forward equal to `u`.
    pub fn level_aggregated(&self, w: f64, u: f64, e: f64, prefix: &StripPrefix) -> NodeLevel {
        let (j, missing) = self.k_star(u);
        let otm = w + e * prefix.weighted_strikes[j] - u * prefix.weights[j];
        self.finish(u, j, otm, missing)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }
}

/// Prefix sums over strikes below `K*`: `sum_{i<j} weight_i` and
/// `sum_{i<j} weight_i K_i`.
#[derive(Debug, Clone)]
pub struct StripPrefix {
    weights: Vec<f64>,
    weighted_strikes: Vec<f64>,
}

impl StripPrefix {
    pub fn new(eval: &StripEvaluator) -> Self {
        let mut weights = vec![0.0];
        let mut weighted_strikes = vec![0.0];
        for (w, k) in eval.weights.iter().zip(&eval.strikes) {
            weights.push(weights.last().unwrap() + w);
            weighted_strikes.push(weighted_strikes.last().unwrap() + w * k);
        }
        Self {
            weights,
            weighted_strikes,
        }
    }
}

/// Counts of nodes where the strip needed a fallback.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ContinuityDiagnostics {
    pub no_k_star: usize,
    pub floored: usize,
}

impl ContinuityDiagnostics {
    pub fn record(&mut self, level: &NodeLevel) {
        self.no_k_star += usize::from(level.no_k_star);
        self.floored += usize::from(level.floored);
    }
}

/// Replaces SPX option surfaces by VIX option payoffs: at each node the
/// parity regression gives the forward, the strip gives the VIX, and the
/// surfaces become calls and puts on that VIX at the VIX strikes.
pub fn continuity_condition(
    stack: &PayoffStack,
    spx_grid: &StrikeGrid,
    vix_grid: &StrikeGrid,
    delta: f64,
) -> Result<(PayoffStack, Vec<f64>, ContinuityDiagnostics)> {
    let eval = StripEvaluator::new(spx_grid, delta)?;
    let mut diag = ContinuityDiagnostics::default();
    let mut scratch = Vec::with_capacity(spx_grid.len());
    let vix: Vec<f64> = (0..stack.node_count())
        .map(|k| {
            let level = eval.level(stack.node(k), &mut scratch);
            diag.record(&level);
            level.points
        })
        .collect();
    let mut out = PayoffStack::zeros(vix_grid.clone(), stack.node_count());
    out.set_intrinsic(&vix);
    Ok((out, vix, diag))
}
