use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HestonParams, MarketConvention};

/// Default width of the asset axis in standard deviations of the log-price.
pub const DEFAULT_X_STDDEVS: f64 = 6.0;

/// Upper variance boundary as a multiple of `max(theta, v0)`.
pub const V_MAX_MULTIPLE: f64 = 5.0;

/// Uniform `(x, v)` grid and time partition over `[0, T + delta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_nodes: Vec<f64>,
    pub v_nodes: Vec<f64>,
    /// Total number of time steps over `[0, T + delta]`.
    pub n_steps: usize,
    /// Steps on `[T, T + delta]`; the rest cover `[0, T]`.
    pub n_steps_first_leg: usize,
    pub x_max_stddevs: f64,
    pub spot: f64,
    pub maturity: f64,
    pub delta: f64,
}

impl PdeGrid {
    /// Number of steps on the `x` axis.
    pub fn m(&self) -> usize {
        self.x_nodes.len() - 1
    }

    /// Number of steps on the `v` axis.
    pub fn l(&self) -> usize {
        self.v_nodes.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.x_nodes[1] - self.x_nodes[0]
    }

    pub fn dv(&self) -> f64 {
        self.v_nodes[1] - self.v_nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x_nodes.last().expect("non-empty grid")
    }

    pub fn v_max(&self) -> f64 {
        *self.v_nodes.last().expect("non-empty grid")
    }

    pub fn node_count(&self) -> usize {
        self.x_nodes.len() * self.v_nodes.len()
    }

    /// Flat index of node `(i, j)`, `i` along `x` and `j` along `v`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.v_nodes.len() + j
    }

    pub fn n_steps_second_leg(&self) -> usize {
        self.n_steps - self.n_steps_first_leg
    }
}

/// Upper variance boundary. Widening it coarsens `dv`, and the variance
/// axis dominates the discretization error, so it sits at the smallest
/// multiple of the variance scale.
pub fn variance_upper_bound(params: &HestonParams) -> f64 {
    V_MAX_MULTIPLE * params.theta.max(params.v0)
}

/// Builds the grid for a VVIX of maturity `conv.vvix_maturity()`: `m` steps in
/// `x`, `l` in `v`, `n` time steps split between the two legs in proportion
/// to their lengths.
pub fn build_grid(
    params: &HestonParams,
    conv: &MarketConvention,
    m: usize,
    l: usize,
    n: usize,
    spot: f64,
) -> Result<PdeGrid> {
    build_grid_with(params, conv, m, l, n, spot, DEFAULT_X_STDDEVS)
}

pub fn build_grid_with(
    params: &HestonParams,
    conv: &MarketConvention,
    m: usize,
    l: usize,
    n: usize,
    spot: f64,
    x_max_stddevs: f64,
) -> Result<PdeGrid> {
    params.validate()?;
    conv.validate()?;
    if m < 4 || l < 4 {
        return Err(Error::InvalidParameter(format!("grid needs M, L >= 4 (got {m}, {l})")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid needs N >= 2 (got {n})")));
    }
    if !(spot > 0.0) || !(x_max_stddevs > 0.0) {
        return Err(Error::InvalidParameter("spot and width must be positive".into()));
    }
    let maturity = conv.vvix_maturity();
    let horizon = maturity + conv.delta;
    let x_max = spot * (x_max_stddevs * (params.theta * horizon).sqrt()).exp();
    let v_max = variance_upper_bound(params);
    let x_nodes = (0..=m).map(|i| x_max * i as f64 / m as f64).collect();
    let v_nodes = (0..=l).map(|j| v_max * j as f64 / l as f64).collect();
    let first = ((n as f64) * conv.delta / horizon).round() as usize;
    let n_steps_first_leg = first.clamp(1, n - 1);
    Ok(PdeGrid {
        x_nodes,
        v_nodes,
        n_steps: n,
        n_steps_first_leg,
        x_max_stddevs,
        spot,
        maturity,
        delta: conv.delta,
    })
}
