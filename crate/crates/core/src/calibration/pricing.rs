//! European options under Heston by Fourier inversion, and the Black
//! formulas used for weights and implied volatilities.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{HestonParams, MarketConvention};
use crate::numerics::{integrate, kronrod_rule, QuadratureSpec};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `ln(1 + w) / s` for a `w` proportional to `s`, accurate as `s -> 0`.
fn ln1p_over(w: Complex64, w_over_s: Complex64, s: f64) -> Complex64 {
    if w.norm() < 1e-5 {
        w_over_s * (1.0 - w / 2.0 + w * w / 3.0)
    } else {
        (1.0 + w).ln() / s
    }
}

/// Characteristic function of `ln(X_T / F)` at complex `u`.
///
/// Written without `xi - d` differences so it stays accurate as the vol of
/// vol tends to zero.
pub fn heston_cf(params: &HestonParams, tau: f64, u: Complex64) -> Complex64 {
    let i = Complex64::i();
    let HestonParams {
        v0,
        kappa,
        theta,
        rho,
        sigma,
    } = *params;
    let s2 = sigma * sigma;
    let q = u * u + i * u;
    let xi = kappa - i * rho * sigma * u;
    let d = (xi * xi + s2 * q).sqrt();
    let sum = xi + d;
    // (xi - d) / sigma^2 and g = (xi - d) / (xi + d) divided by sigma^2
    let xmd_s2 = -q / sum;
    let g_s2 = xmd_s2 / sum;
    let g = g_s2 * s2;
    let e = (-d * tau).exp();
    let dcoef = xmd_s2 * (1.0 - e) / (1.0 - g * e);
    let w_s2 = g_s2 * (1.0 - e) / (1.0 - g);
    let log_term = ln1p_over(w_s2 * s2, w_s2, s2);
    let ccoef = kappa * theta * (xmd_s2 * tau - 2.0 * log_term);
    (ccoef + dcoef * v0).exp()
}

fn lewis_integrand(params: &HestonParams, tau: f64, k: f64, u: f64) -> f64 {
    let phi = heston_cf(params, tau, Complex64::new(u, -0.5));
    let z = Complex64::new(0.0, u * k).exp() * phi;
    z.re / (u * u + 0.25)
}

fn validate_option(strike: f64, tau: f64) -> Result<()> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::Domain(format!("strike {strike} must be positive")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("maturity {tau} must be positive")));
    }
    Ok(())
}

/// Undiscounted European price on spot `x0` by adaptive quadrature of the
/// Lewis formula. Puts follow from parity.
pub fn heston_vanilla_price(
    params: &HestonParams,
    conv: &MarketConvention,
    x0: f64,
    strike: f64,
    tau: f64,
    is_call: bool,
) -> Result<f64> {
    validate_option(strike, tau)?;
    let f = conv.forward(x0, tau);
    let k = (f / strike).ln();
    // the integral is scaled by sqrt(F K); fix the absolute tolerance on the price
    let spec = QuadratureSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-14 * (f / strike).sqrt(),
        max_subdivisions: 2000,
        left_singularity: None,
    };
    let integral = integrate(|u| lewis_integrand(params, tau, k, u), 0.0, f64::INFINITY, &spec)?;
    let call = f - (f * strike).sqrt() / std::f64::consts::PI * integral;
    Ok(if is_call { call } else { call - (f - strike) })
}

/// Heston prices for one maturity on a fixed composite rule. The
/// characteristic function is evaluated once per node and shared across
/// strikes.
#[derive(Debug, Clone)]
pub struct HestonSlice {
    forward: f64,
    nodes: Vec<f64>,
    /// Quadrature weight times `phi(u - i/2) / (u^2 + 1/4)`.
    values: Vec<Complex64>,
}

/// Panels of the composite rule on the mapped unit interval.
const SLICE_PANELS: usize = 64;

impl HestonSlice {
    pub fn new(params: &HestonParams, conv: &MarketConvention, x0: f64, tau: f64) -> Result<Self> {
        validate_option(1.0, tau)?;
        let forward = conv.forward(x0, tau);
        // u = c s / (1 - s), with c the larger of the Gaussian scale of the
        // characteristic function and its exponential tail length.
        let var = params.v0.max(params.theta).max(1e-4) * tau;
        let tail_rate = (params.v0 + params.kappa * params.theta * tau) * (1.0 - params.rho * params.rho).sqrt() / params.sigma;
        let c = (2.0 / var.sqrt()).max(1.0 / tail_rate);
        let rule = kronrod_rule();
        let mut nodes = Vec::with_capacity(SLICE_PANELS * 15);
        let mut values = Vec::with_capacity(SLICE_PANELS * 15);
        let h = 1.0 / SLICE_PANELS as f64;
        for p in 0..SLICE_PANELS {
            let mid = (p as f64 + 0.5) * h;
            for &(x, w) in &rule {
                let s = mid + 0.5 * h * x;
                let one_m = 1.0 - s;
                let u = c * s / one_m;
                let jac = c / (one_m * one_m);
                let phi = heston_cf(params, tau, Complex64::new(u, -0.5));
                let v = phi * (0.5 * h * w * jac / (u * u + 0.25));
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NanIntegrand { at: u });
                }
                nodes.push(u);
                values.push(v);
            }
        }
        Ok(Self {
            forward,
            nodes,
            values,
        })
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    /// Undiscounted price.
    pub fn price(&self, strike: f64, is_call: bool) -> f64 {
        let k = (self.forward / strike).ln();
        let integral: f64 = self
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&u, v)| {
                let (s, c) = (u * k).sin_cos();
                c * v.re - s * v.im
            })
            .sum();
        let call = self.forward - (self.forward * strike).sqrt() / std::f64::consts::PI * integral;
        if is_call {
            call
        } else {
            call - (self.forward - strike)
        }
    }
}

/// Black price `B (F N(d1) - K N(d2))` (or the put).
pub fn black_price(forward: f64, strike: f64, tau: f64, vol: f64, discount: f64, is_call: bool) -> f64 {
    let sd = vol * tau.sqrt();
    if sd <= 0.0 {
        let intrinsic = if is_call { forward - strike } else { strike - forward };
        return discount * intrinsic.max(0.0);
    }
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    let eta = if is_call { 1.0 } else { -1.0 };
    discount * eta * (forward * norm_cdf(eta * d1) - strike * norm_cdf(eta * d2))
}

/// Black vega `B F phi(d1) sqrt(T)`.
pub fn bs_vega(forward: f64, strike: f64, tau: f64, vol: f64, discount: f64) -> f64 {
    let sd = vol * tau.sqrt();
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    discount * forward * norm_pdf(d1) * tau.sqrt()
}

/// Black implied volatility by safeguarded Newton on `[1e-6, 10]`.
pub fn implied_vol(price: f64, forward: f64, strike: f64, tau: f64, discount: f64, is_call: bool) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 10.0);
    let f = |v: f64| black_price(forward, strike, tau, v, discount, is_call) - price;
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoBracket {
            target: price,
            low: flo + price,
            high: fhi + price,
        });
    }
    let mut x = 0.2;
    for _ in 0..100 {
        let fx = f(x);
        if fx.abs() <= 1e-14 * discount * forward {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / bs_vega(forward, strike, tau, x, discount);
        let next = x - step;
        x = if next > lo && next < hi && step.is_finite() {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * x {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        estimate: x,
        error_bound: hi - lo,
        subdivisions: 100,
    })
}
