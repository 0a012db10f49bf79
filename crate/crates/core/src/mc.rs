//! Monte Carlo checks of the variance-only quantities by exact sampling of
//! the terminal variance.
//!
//! Paths are split into fixed chunks; chunk `i` draws from ChaCha8 stream
//! `i` of the seed, so results do not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::OptionKind;
use crate::error::{Error, Result};
use crate::model::{cir_transition, vix_squared_affine, HestonParams, MarketConvention};
use crate::numerics::ncx2_sample;

/// Smallest accepted sample size.
pub const MIN_PATHS: usize = 1000;

const CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - value) / self.std_error
        }
    }
}

/// Running sums of `x`, `y`, and their second moments for a pair of path
/// functionals.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.x += o.x;
        self.y += o.y;
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
    }
}

/// Sums of `g(VIX_T)` over `n_paths` terminal VIX draws in points.
fn simulate<G>(params: &HestonParams, maturity: f64, conv: &MarketConvention, n_paths: usize, seed: u64, g: G) -> Result<Sums>
where
    G: Fn(f64) -> (f64, f64) + Sync,
{
    params.validate()?;
    conv.validate()?;
    if !(maturity > 0.0) {
        return Err(Error::Domain(format!("maturity {maturity} must be positive")));
    }
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_PATHS} paths, got {n_paths}")));
    }
    let tr = cir_transition(params, maturity)?;
    let lambda = tr.lambda_of(params.v0);
    let (a, b) = vix_squared_affine(conv.delta, params);
    let chunks = n_paths.div_ceil(CHUNK);
    let run = |c: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = CHUNK.min(n_paths - c * CHUNK);
        let mut s = Sums::default();
        for _ in 0..n {
            let v = tr.c1 * ncx2_sample(tr.d, lambda, &mut rng);
            let (x, y) = g(100.0 * (a + b * v).sqrt());
            s.x += x;
            s.y += y;
            s.xx += x * x;
            s.yy += y * y;
            s.xy += x * y;
        }
        s
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(chunks);
    let mut parts = vec![Sums::default(); chunks];
    std::thread::scope(|scope| {
        for (t, slot) in parts.chunks_mut(chunks.div_ceil(threads)).enumerate() {
            let run = &run;
            let first = t * chunks.div_ceil(threads);
            scope.spawn(move || {
                for (k, s) in slot.iter_mut().enumerate() {
                    *s = run(first + k);
                }
            });
        }
    });
    let mut total = Sums::default();
    for p in &parts {
        total.add(p);
    }
    Ok(total)
}

fn sample_mean(sum: f64, sum_sq: f64, n: usize, seed: u64) -> McEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    McEstimate {
        mean,
        std_error: (var / nf).sqrt(),
        n_paths: n,
        seed,
    }
}

/// VIX future in points.
pub fn mc_vix_future(params: &HestonParams, maturity: f64, conv: &MarketConvention, n_paths: usize, seed: u64) -> Result<McEstimate> {
    let s = simulate(params, maturity, conv, n_paths, seed, |vix| (vix, 0.0))?;
    Ok(sample_mean(s.x, s.xx, n_paths, seed))
}

/// Undiscounted VIX option in points.
pub fn mc_vix_option(
    params: &HestonParams,
    strike: f64,
    maturity: f64,
    kind: OptionKind,
    conv: &MarketConvention,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(strike >= 0.0) {
        return Err(Error::Domain(format!("strike {strike} must be nonnegative")));
    }
    let eta = kind.eta();
    let s = simulate(params, maturity, conv, n_paths, seed, |vix| ((eta * (vix - strike)).max(0.0), 0.0))?;
    Ok(sample_mean(s.x, s.xx, n_paths, seed))
}

/// VVIX in points from `-(2/T) (mean ln VIX_T - ln mean VIX_T)`, with the
/// standard error by the delta method.
pub fn mc_vvix_log(params: &HestonParams, maturity: f64, conv: &MarketConvention, n_paths: usize, seed: u64) -> Result<McEstimate> {
    let s = simulate(params, maturity, conv, n_paths, seed, |vix| (vix, vix.ln()))?;
    let n = n_paths as f64;
    let (mv, ml) = (s.x / n, s.y / n);
    let variance = (-2.0 / maturity * (ml - mv.ln())).max(0.0);
    let cov = |sxy: f64, mx: f64, my: f64| (sxy / n - mx * my) * n / (n - 1.0);
    let (var_v, var_l, cov_vl) = (cov(s.xx, mv, mv), cov(s.yy, ml, ml), cov(s.xy, mv, ml));
    // gradient of the variance in (mean VIX, mean ln VIX)
    let (gv, gl) = (2.0 / (maturity * mv), -2.0 / maturity);
    let var_est = ((gv * gv * var_v + gl * gl * var_l + 2.0 * gv * gl * cov_vl) / n).max(0.0);
    let points = 100.0 * variance.sqrt();
    let std_error = if variance > 0.0 {
        100.0 * var_est.sqrt() / (2.0 * variance.sqrt())
    } else {
        0.0
    };
    Ok(McEstimate {
        mean: points,
        std_error,
        n_paths,
        seed,
    })
}
