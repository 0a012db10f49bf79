//! VIX futures, VIX options and VVIX estimates that only involve the variance
//! process: single integrals against the CIR transition density, or closed
//! form for the lognormal approximation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    cir_transition, expected_variance, second_moment_approx, vix_squared_affine, CirTransition, HestonParams,
    MarketConvention, SecondMomentVariant,
};
use crate::numerics::{Ncx2Law, QuadratureSpec};

/// An index level in CBOE points (100 times an annualized volatility).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexQuote {
    pub points: f64,
    pub tenor: f64,
}

impl IndexQuote {
    pub fn new(points: f64, tenor: f64) -> Result<Self> {
        if !(points >= 0.0) {
            return Err(Error::Domain(format!("index level {points} must be nonnegative")));
        }
        Ok(Self { points, tenor })
    }

    /// Annualized volatility, `points / 100`.
    pub fn volatility(&self) -> f64 {
        self.points / 100.0
    }
}

/// Call (`+1`) or put (`-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn eta(self) -> f64 {
        match self {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }

    pub fn from_eta(eta: f64) -> Self {
        if eta >= 0.0 {
            OptionKind::Call
        } else {
            OptionKind::Put
        }
    }
}

/// Law of the VIX at `T`: `VIX_T = 100 sqrt(a + b c1 Z)` with `Z` non-central
/// chi-squared.
#[derive(Debug, Clone, Copy)]
pub struct VixDistribution {
    pub transition: CirTransition,
    pub law: Ncx2Law,
    /// Intercept of the VIX-squared map.
    pub a: f64,
    /// Slope of the VIX-squared map in the variance.
    pub b: f64,
    pub maturity: f64,
    spec: QuadratureSpec,
}

impl VixDistribution {
    pub fn new(params: &HestonParams, maturity: f64, conv: &MarketConvention) -> Result<Self> {
        params.validate()?;
        conv.validate()?;
        if !(maturity > 0.0) {
            return Err(Error::Domain(format!("maturity {maturity} must be positive")));
        }
        let transition = cir_transition(params, maturity)?;
        let law = Ncx2Law::new(transition.d, transition.lambda_of(params.v0))?;
        let (a, b) = vix_squared_affine(conv.delta, params);
        Ok(Self {
            transition,
            law,
            a,
            b,
            maturity,
            spec: QuadratureSpec {
                rel_tol: 1e-10,
                abs_tol: 1e-13,
                max_subdivisions: 400,
                left_singularity: None,
            },
        })
    }

    /// VIX in points as a function of the chi-squared variate.
    #[inline]
    pub fn vix_points(&self, z: f64) -> f64 {
        100.0 * (self.a + self.b * self.transition.c1 * z).sqrt()
    }

    /// Variate where the VIX equals `strike` points.
    pub fn kink(&self, strike: f64) -> f64 {
        let s = strike / 100.0;
        (s * s - self.a) / (self.b * self.transition.c1)
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.law.expectation(f, &[], &self.spec)
    }

    /// Undiscounted VIX future in points.
    pub fn future(&self) -> Result<f64> {
        self.expectation(|z| self.vix_points(z))
    }

    /// Undiscounted VIX option in points.
    pub fn option(&self, strike: f64, kind: OptionKind) -> Result<f64> {
        if !(strike >= 0.0) {
            return Err(Error::Domain(format!("strike {strike} must be nonnegative")));
        }
        let z_star = self.kink(strike);
        match kind {
            OptionKind::Call => self.law.expectation_on(
                |z| (self.vix_points(z) - strike).max(0.0),
                z_star.max(0.0),
                f64::INFINITY,
                &[],
                &self.spec,
            ),
            OptionKind::Put => {
                if z_star <= 0.0 {
                    return Ok(0.0);
                }
                self.law
                    .expectation_on(|z| (strike - self.vix_points(z)).max(0.0), 0.0, z_star, &[], &self.spec)
            }
        }
    }

    /// `E[ln(VIX_T / F)]` for a given future level `F` in points.
    pub fn expected_log_return(&self, future: f64) -> Result<f64> {
        let ln_f = future.ln();
        self.expectation(|z| self.vix_points(z).ln() - ln_f)
    }
}

pub fn vix_future(params: &HestonParams, maturity: f64, conv: &MarketConvention) -> Result<IndexQuote> {
    let dist = VixDistribution::new(params, maturity, conv)?;
    IndexQuote::new(dist.future()?, maturity)
}

/// Undiscounted VIX option price in points; `eta = +1` call, `-1` put.
pub fn vix_option(
    params: &HestonParams,
    strike: f64,
    maturity: f64,
    eta: f64,
    conv: &MarketConvention,
) -> Result<f64> {
    VixDistribution::new(params, maturity, conv)?.option(strike, OptionKind::from_eta(eta))
}

/// VVIX from the log contract on the VIX future: `-(2/T) E[ln(F_T / F_0)]`.
pub fn vvix_log_contract(params: &HestonParams, maturity: f64, conv: &MarketConvention) -> Result<IndexQuote> {
    let dist = VixDistribution::new(params, maturity, conv)?;
    let future = dist.future()?;
    log_contract_from(&dist, future)
}

pub(crate) fn log_contract_from(dist: &VixDistribution, future: f64) -> Result<IndexQuote> {
    let variance = -2.0 / dist.maturity * dist.expected_log_return(future)?;
    if variance < 0.0 {
        // Jensen forces a nonnegative value up to quadrature noise.
        if variance > -1e-12 {
            return IndexQuote::new(0.0, dist.maturity);
        }
        return Err(Error::NegativeVariance {
            value: variance,
            context: "log-contract VVIX".into(),
        });
    }
    IndexQuote::new(100.0 * variance.sqrt(), dist.maturity)
}

/// Moments behind the closed-form VVIX approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleVvixMoments {
    pub mean_vix2: f64,
    pub mean_vix4: f64,
    pub var_vix2: f64,
    /// Taylor estimate of the variance of the VIX itself.
    pub var_vix: f64,
    pub vvix: f64,
}

pub fn vvix_simple_moments(
    params: &HestonParams,
    maturity: f64,
    conv: &MarketConvention,
    variant: SecondMomentVariant,
) -> Result<SimpleVvixMoments> {
    if !(maturity > 0.0) {
        return Err(Error::Domain(format!("maturity {maturity} must be positive")));
    }
    let (a, b) = vix_squared_affine(conv.delta, params);
    let ev = expected_variance(params, params.v0, maturity)?;
    let ev2 = second_moment_approx(params, maturity, variant)?;
    let mean_vix2 = a + b * ev;
    let mean_vix4 = a * a + 2.0 * a * b * ev + b * b * ev2;
    let var_vix2 = mean_vix4 - mean_vix2 * mean_vix2;
    let var_vix = var_vix2 / (4.0 * mean_vix2);
    if var_vix < 0.0 {
        // Cancellation noise when the variance is deterministic.
        if var_vix2.abs() <= 1e-14 * mean_vix4 {
            return Ok(SimpleVvixMoments {
                mean_vix2,
                mean_vix4,
                var_vix2,
                var_vix: 0.0,
                vvix: 0.0,
            });
        }
        return Err(Error::NegativeVariance {
            value: var_vix,
            context: format!("Taylor variance: E[VIX^4] = {mean_vix4}, E[VIX^2] = {mean_vix2}"),
        });
    }
    let vvix = (var_vix / mean_vix2).ln_1p().sqrt() / conv.delta.sqrt();
    Ok(SimpleVvixMoments {
        mean_vix2,
        mean_vix4,
        var_vix2,
        var_vix,
        vvix,
    })
}

/// Closed-form lognormal approximation of the VVIX.
pub fn vvix_simple(params: &HestonParams, maturity: f64, conv: &MarketConvention) -> Result<IndexQuote> {
    vvix_simple_with(params, maturity, conv, SecondMomentVariant::FlippedTransient)
}

pub fn vvix_simple_with(
    params: &HestonParams,
    maturity: f64,
    conv: &MarketConvention,
    variant: SecondMomentVariant,
) -> Result<IndexQuote> {
    let m = vvix_simple_moments(params, maturity, conv, variant)?;
    IndexQuote::new(100.0 * m.vvix, maturity)
}

pub const SIGMA_SOLVE_LOW: f64 = 1e-4;
pub const SIGMA_SOLVE_HIGH: f64 = 20.0;
const MONOTONE_PROBES: usize = 200;

/// Vol-of-vol reproducing a target simple VVIX, all other parameters fixed.
/// The `sigma` field of `others` is ignored.
pub fn solve_sigma_for_vvix(
    target: IndexQuote,
    others: &HestonParams,
    maturity: f64,
    conv: &MarketConvention,
) -> Result<f64> {
    if !(target.points > 0.0) {
        return Err(Error::Domain(format!("target {} must be positive", target.points)));
    }
    let f = |sigma: f64| -> Result<f64> { Ok(vvix_simple(&others.with_sigma(sigma), maturity, conv)?.points) };
    let (lo, hi) = (SIGMA_SOLVE_LOW, SIGMA_SOLVE_HIGH);
    // Monotonicity on a log-spaced probe ladder.
    let mut prev = f(lo)?;
    let f_lo = prev;
    for i in 1..=MONOTONE_PROBES {
        let s = lo * (hi / lo).powf(i as f64 / MONOTONE_PROBES as f64);
        let v = f(s)?;
        if !(v > prev) {
            return Err(Error::NonMonotone(format!(
                "simple VVIX does not increase between sigma {} and {s}",
                lo * (hi / lo).powf((i - 1) as f64 / MONOTONE_PROBES as f64)
            )));
        }
        prev = v;
    }
    let f_hi = prev;
    let t = target.points;
    if t < f_lo || t > f_hi {
        return Err(Error::NoBracket {
            target: t,
            low: f_lo,
            high: f_hi,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = (lo * hi).sqrt();
    for _ in 0..200 {
        let fx = f(x)? - t;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let h = 1e-7 * x;
        let slope = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 1e-14 * x || (b - a) <= 1e-14 * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, VIX_TENOR};

    fn set(name: &str) -> HestonParams {
        preset(name).unwrap()
    }

    #[test]
    fn call_at_zero_strike_is_the_future() {
        let p = set("set2");
        let c = MarketConvention::default();
        let f = vix_future(&p, VIX_TENOR, &c).unwrap().points;
        let call = vix_option(&p, 0.0, VIX_TENOR, 1.0, &c).unwrap();
        assert_eq!(f, call);
    }

    #[test]
    fn parity_under_common_density() {
        let p = set("set2");
        let c = MarketConvention::default();
        let dist = VixDistribution::new(&p, VIX_TENOR, &c).unwrap();
        let f = dist.future().unwrap();
        for k in [10.0, 15.0, 20.0, 30.0] {
            let call = dist.option(k, OptionKind::Call).unwrap();
            let put = dist.option(k, OptionKind::Put).unwrap();
            assert!((call - put - (f - k)).abs() < 1e-6, "{k}");
        }
    }

    #[test]
    fn near_deterministic_future() {
        let p = set("set1").with_sigma(1e-6);
        let c = MarketConvention::default();
        let f = vix_future(&p, VIX_TENOR, &c).unwrap().points;
        let ev = expected_variance(&p, p.v0, VIX_TENOR).unwrap();
        let det = 100.0 * crate::model::vix_squared_heston(ev, VIX_TENOR, &p).unwrap().sqrt();
        assert!((f - det).abs() < 1e-4, "{f} {det}");
    }

    #[test]
    fn simple_vanishes_without_vol_of_vol() {
        let p = set("set1").with_sigma(1e-9);
        let v = vvix_simple(&p, VIX_TENOR, &MarketConvention::default()).unwrap();
        assert!(v.points < 1e-3, "{}", v.points);
    }

    #[test]
    fn printed_second_moment_overshoots() {
        // The printed transient sign inflates the second moment; the simple
        // VVIX lands far above the published column.
        let p = set("set1");
        let c = MarketConvention::default();
        let printed = vvix_simple_with(&p, VIX_TENOR, &c, SecondMomentVariant::Printed).unwrap();
        assert!(printed.points > 500.0);
    }

    #[test]
    fn sigma_round_trip() {
        let p = set("set5");
        let c = MarketConvention::default();
        let target = vvix_simple(&p.with_sigma(0.75), VIX_TENOR, &c).unwrap();
        let s = solve_sigma_for_vvix(target, &p, VIX_TENOR, &c).unwrap();
        assert!((s - 0.75).abs() < 1e-8, "{s}");
    }

    #[test]
    fn sigma_solve_bracket_errors() {
        let p = set("set1");
        let c = MarketConvention::default();
        let r = solve_sigma_for_vvix(IndexQuote { points: 1e6, tenor: VIX_TENOR }, &p, VIX_TENOR, &c);
        assert!(matches!(r, Err(Error::NoBracket { .. })));
        let r = solve_sigma_for_vvix(IndexQuote { points: 1e-9, tenor: VIX_TENOR }, &p, VIX_TENOR, &c);
        assert!(matches!(r, Err(Error::NoBracket { .. })));
    }

    #[test]
    fn option_rejects_negative_strike() {
        let p = set("set1");
        assert!(vix_option(&p, -1.0, VIX_TENOR, 1.0, &MarketConvention::default()).is_err());
        assert!(vix_future(&p, 0.0, &MarketConvention::default()).is_err());
    }
}
