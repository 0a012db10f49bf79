//! Modified Bessel function of the first kind and the non-central chi-squared law.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Continuous, Normal};
use statrs::function::gamma::{gamma_lr as statrs_gamma_lr, gamma_ur as statrs_gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Below this argument the regularized gamma uses its leading series;
/// the library routine underflows to zero there.
const GAMMA_SMALL_X: f64 = 1e-6;

/// `P(a, x)` by `x^a e^{-x} / Gamma(a + 1) (1 + x / (a + 1) + ...)` for tiny `x`.
fn gamma_lr(a: f64, x: f64) -> f64 {
    if x < GAMMA_SMALL_X {
        let lead = (a * x.ln() - x - ln_gamma(a + 1.0)).exp();
        lead * (1.0 + x / (a + 1.0) * (1.0 + x / (a + 2.0)))
    } else {
        statrs_gamma_lr(a, x)
    }
}

fn gamma_ur(a: f64, x: f64) -> f64 {
    if x < GAMMA_SMALL_X {
        1.0 - gamma_lr(a, x)
    } else {
        statrs_gamma_ur(a, x)
    }
}

/// Above this argument `ln I_nu` switches to the large-argument expansion.
const BESSEL_ASYMPTOTIC_X: f64 = 700.0;

/// `ln I_nu(x)` for `nu > -1`, `x > 0`, given `ln(x / 2)` so that tiny
/// arguments never underflow.
fn ln_bessel_i_from_log_half(nu: f64, ln_half_x: f64) -> f64 {
    let x = 2.0 * ln_half_x.exp();
    if x > BESSEL_ASYMPTOTIC_X && x > 25.0 * nu * nu {
        return ln_bessel_i_asymptotic(nu, x);
    }
    // Power series with positive terms, summed in log space around its peak.
    let ln_term = |k: f64| (2.0 * k + nu) * ln_half_x - ln_gamma(k + 1.0) - ln_gamma(k + nu + 1.0);
    // Peak where (k + 1)(k + nu + 1) ~ x^2 / 4.
    let q = x * x / 4.0;
    let b = nu + 2.0;
    let c = nu + 1.0 - q;
    let k_peak = ((-b + (b * b - 4.0 * c).sqrt()) / 2.0).max(0.0).floor();
    let peak = ln_term(k_peak);
    let mut sum = 1.0;
    let mut k = k_peak + 1.0;
    loop {
        let t = (ln_term(k) - peak).exp();
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    let mut k = k_peak - 1.0;
    while k >= 0.0 {
        let t = (ln_term(k) - peak).exp();
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
        k -= 1.0;
    }
    peak + sum.ln()
}

fn ln_bessel_i_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
}

/// `ln I_nu(x)` for `nu > -1` and `x > 0`.
pub fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    ln_bessel_i_from_log_half(nu, (0.5 * x).ln())
}

/// Exponentially scaled `I_nu(x) e^{-x}`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    (ln_bessel_i(nu, x) - x).exp()
}

fn check_law(d: f64, lambda: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("degrees of freedom {d} must be positive")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("non-centrality {lambda} must be nonnegative")));
    }
    Ok(())
}

/// Above this `d + lambda` the law is replaced by the normal with the same
/// mean and variance; its skewness is then below 0.01 and the series
/// representations need too many terms.
pub const NCX2_NORMAL_LIMIT: f64 = 1e5;

fn normal_limit(d: f64, lambda: f64) -> Option<Normal> {
    if d + lambda > NCX2_NORMAL_LIMIT {
        Normal::new(d + lambda, (2.0 * (d + 2.0 * lambda)).sqrt()).ok()
    } else {
        None
    }
}

fn central_ln_pdf(z: f64, d: f64) -> f64 {
    let h = 0.5 * d;
    (h - 1.0) * z.ln() - 0.5 * z - h * std::f64::consts::LN_2 - ln_gamma(h)
}

/// Density at zero, which is infinite for `d < 2`.
fn pdf_at_zero(d: f64, lambda: f64) -> f64 {
    if d < 2.0 {
        f64::INFINITY
    } else if d == 2.0 {
        0.5 * (-0.5 * lambda).exp()
    } else {
        0.0
    }
}

/// Non-central chi-squared density with `d` degrees of freedom and
/// non-centrality `lambda`, through the Bessel-I representation.
pub fn ncx2_pdf(z: f64, d: f64, lambda: f64) -> Result<f64> {
    check_law(d, lambda)?;
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("argument {z} must be nonnegative")));
    }
    if z == 0.0 {
        return Ok(pdf_at_zero(d, lambda));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if let Some(n) = normal_limit(d, lambda) {
        return Ok(n.pdf(z));
    }
    if lambda == 0.0 {
        return Ok(central_ln_pdf(z, d).exp());
    }
    let nu = 0.5 * d - 1.0;
    let ln_half_x = 0.5 * (lambda.ln() + z.ln()) - std::f64::consts::LN_2;
    let ln_p = -std::f64::consts::LN_2 - 0.5 * (z + lambda)
        + 0.5 * nu * (z.ln() - lambda.ln())
        + ln_bessel_i_from_log_half(nu, ln_half_x);
    let p = ln_p.exp();
    if p.is_finite() {
        Ok(p)
    } else {
        ncx2_pdf_series(z, d, lambda, 2000)
    }
}

/// Poisson mixture of central densities, truncated to `terms` terms.
pub fn ncx2_pdf_series(z: f64, d: f64, lambda: f64, terms: usize) -> Result<f64> {
    check_law(d, lambda)?;
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("argument {z} must be nonnegative")));
    }
    if z == 0.0 {
        return Ok(pdf_at_zero(d, lambda));
    }
    let half = 0.5 * lambda;
    let mut ln_terms = Vec::with_capacity(terms);
    for k in 0..terms {
        let kf = k as f64;
        let ln_w = if half == 0.0 {
            if k == 0 {
                0.0
            } else {
                break;
            }
        } else {
            -half + kf * half.ln() - ln_gamma(kf + 1.0)
        };
        ln_terms.push(ln_w + central_ln_pdf(z, d + 2.0 * kf));
    }
    let m = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let s: f64 = ln_terms.iter().map(|t| (t - m).exp()).sum();
    Ok((m + s.ln()).exp())
}

/// Sum `f(k) * Poisson(k; mean)` over `k`, walking outward from the mode.
fn poisson_mixture(mean: f64, f: impl Fn(f64) -> f64) -> f64 {
    if mean == 0.0 {
        return f(0.0);
    }
    let weight = |k: f64| (-mean + k * mean.ln() - ln_gamma(k + 1.0)).exp();
    let mode = mean.floor();
    let mut sum = weight(mode) * f(mode);
    let mut k = mode + 1.0;
    loop {
        let w = weight(k);
        sum += w * f(k);
        if w < 1e-20 {
            break;
        }
        k += 1.0;
    }
    let mut k = mode - 1.0;
    while k >= 0.0 {
        let w = weight(k);
        sum += w * f(k);
        if w < 1e-20 {
            break;
        }
        k -= 1.0;
    }
    sum
}

/// Distribution function by the Poisson-mixture series.
pub fn ncx2_cdf(z: f64, d: f64, lambda: f64) -> Result<f64> {
    check_law(d, lambda)?;
    if z <= 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    if let Some(n) = normal_limit(d, lambda) {
        return Ok(n.cdf(z));
    }
    Ok(poisson_mixture(0.5 * lambda, |k| gamma_lr(0.5 * d + k, 0.5 * z)).min(1.0))
}

/// Survival function `1 - cdf`, summed directly to keep upper-tail precision.
pub fn ncx2_sf(z: f64, d: f64, lambda: f64) -> Result<f64> {
    check_law(d, lambda)?;
    if z <= 0.0 {
        return Ok(1.0);
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if let Some(n) = normal_limit(d, lambda) {
        return Ok(n.sf(z));
    }
    Ok(poisson_mixture(0.5 * lambda, |k| gamma_ur(0.5 * d + k, 0.5 * z)).min(1.0))
}

const QUANTILE_FLOOR: f64 = 1e-300;

/// Quantile by bisection on the series distribution function. Probabilities
/// above one half are inverted on the survival function.
pub fn ncx2_quantile(p: f64, d: f64, lambda: f64) -> Result<f64> {
    check_law(d, lambda)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} must lie in (0, 1)")));
    }
    if let Some(n) = normal_limit(d, lambda) {
        return Ok(n.inverse_cdf(p).max(0.0));
    }
    let upper = p > 0.5;
    let tail = if upper { 1.0 - p } else { p };
    // F(z) - p is increasing in z; for the upper tail use p_tail - sf(z).
    let g = |z: f64| -> Result<f64> {
        if upper {
            Ok(tail - ncx2_sf(z, d, lambda)?)
        } else {
            Ok(ncx2_cdf(z, d, lambda)? - tail)
        }
    };
    let mut hi = (d + lambda).max(1.0);
    while g(hi)? < 0.0 {
        hi *= 2.0;
    }
    // Left quantiles of Feller-violating laws can be astronomically small;
    // bisect in log space once the bracket spans many decades. Quantiles
    // below 1e-300 are returned as 1e-300.
    let mut lo = hi;
    while g(lo)? > 0.0 {
        if lo <= QUANTILE_FLOOR {
            return Ok(QUANTILE_FLOOR);
        }
        lo = (lo * 1e-4).max(QUANTILE_FLOOR);
    }
    for _ in 0..200 {
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One draw of the non-central chi-squared law.
///
/// For `d > 1` the draw is a central chi-squared with `d - 1` degrees of
/// freedom plus a shifted squared normal; otherwise a central chi-squared with
/// `d + 2N` degrees of freedom, `N` Poisson with mean `lambda / 2`.
pub fn ncx2_sample<R: Rng + ?Sized>(d: f64, lambda: f64, rng: &mut R) -> f64 {
    debug_assert!(d > 0.0 && lambda >= 0.0);
    let central = |dof: f64, rng: &mut R| -> f64 {
        if dof <= 0.0 {
            return 0.0;
        }
        Gamma::new(0.5 * dof, 2.0).expect("positive shape").sample(rng)
    };
    if lambda == 0.0 {
        return central(d, rng);
    }
    if d > 1.0 {
        let z: f64 = StandardNormal.sample(rng);
        let shifted = z + lambda.sqrt();
        central(d - 1.0, rng) + shifted * shifted
    } else {
        let n: f64 = Poisson::new(0.5 * lambda).expect("positive mean").sample(rng);
        central(d + 2.0 * n, rng)
    }
}
