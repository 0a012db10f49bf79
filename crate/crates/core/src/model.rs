//! Heston parameterization, market conventions and the closed-form moments of
//! the CIR variance process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// VIX tenor: 30 calendar days on an ACT/365 basis.
pub const VIX_TENOR: f64 = 30.0 / 365.0;

/// Below this value of `kappa * tau` the averaging factor switches to its series.
const SMALL_KAPPA_TAU: f64 = 1e-8;

/// The five Heston parameters. Variances are annualized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl HestonParams {
    pub fn new(v0: f64, kappa: f64, theta: f64, rho: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            v0,
            kappa,
            theta,
            rho,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v0, self.kappa, self.theta, self.rho, self.sigma]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!("non-finite value in {self:?}")));
        }
        if self.v0 < 0.0 {
            return Err(Error::InvalidParameter(format!("v0 = {} < 0", self.v0)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa = {} <= 0", self.kappa)));
        }
        if self.theta <= 0.0 {
            return Err(Error::InvalidParameter(format!("theta = {} <= 0", self.theta)));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma = {} <= 0", self.sigma)));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("rho = {} outside [-1, 1]", self.rho)));
        }
        Ok(())
    }

    /// Standard Feller condition `2 kappa theta >= sigma^2`.
    pub fn feller_2kt(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// The stricter form `kappa theta >= sigma^2`.
    pub fn feller_strict(&self) -> bool {
        self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// Degrees of freedom `4 kappa theta / sigma^2` of the CIR transition law.
    /// Below 2 the transition density is unbounded at the origin.
    pub fn cir_dof(&self) -> f64 {
        4.0 * self.kappa * self.theta / (self.sigma * self.sigma)
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..*self }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..*self }
    }

    pub fn to_vec(&self) -> [f64; 5] {
        [self.v0, self.kappa, self.theta, self.rho, self.sigma]
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != 5 {
            return Err(Error::LengthMismatch {
                expected: 5,
                got: x.len(),
            });
        }
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }
}

/// Rates and tenor conventions. Rates are flat and continuously compounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConvention {
    /// VIX tenor as a year fraction.
    pub delta: f64,
    /// Growth rate.
    pub r: f64,
    /// Dividend rate.
    pub q: f64,
    /// Discount rate used in the PDE. Zero gives undiscounted values.
    pub r_c: f64,
}

impl Default for MarketConvention {
    fn default() -> Self {
        Self {
            delta: VIX_TENOR,
            r: 0.0,
            q: 0.0,
            r_c: 0.0,
        }
    }
}

impl MarketConvention {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta = {} <= 0", self.delta)));
        }
        if !(self.r.is_finite() && self.q.is_finite() && self.r_c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite rate".into()));
        }
        Ok(())
    }

    pub fn discount_factor(&self, t: f64) -> f64 {
        (-self.r_c * t).exp()
    }

    /// Forward of the asset at `t` for spot `x0`.
    pub fn forward(&self, x0: f64, t: f64) -> f64 {
        x0 * ((self.r - self.q) * t).exp()
    }

    /// Maturity of the VVIX; options on the VIX expire one tenor out.
    pub fn vvix_maturity(&self) -> f64 {
        self.delta
    }
}

/// JSON parameter document: the five model parameters and optional conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub rho: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, rename = "rC", skip_serializing_if = "Option::is_none")]
    pub r_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl ParamsDocument {
    pub fn from_parts(params: &HestonParams, conv: &MarketConvention) -> Self {
        Self {
            v0: params.v0,
            kappa: params.kappa,
            theta: params.theta,
            rho: params.rho,
            sigma: params.sigma,
            r: Some(conv.r),
            q: Some(conv.q),
            r_c: Some(conv.r_c),
            delta: Some(conv.delta),
        }
    }

    pub fn into_parts(self) -> Result<(HestonParams, MarketConvention)> {
        let params = HestonParams::new(self.v0, self.kappa, self.theta, self.rho, self.sigma)?;
        let d = MarketConvention::default();
        let conv = MarketConvention {
            delta: self.delta.unwrap_or(d.delta),
            r: self.r.unwrap_or(d.r),
            q: self.q.unwrap_or(d.q),
            r_c: self.r_c.unwrap_or(d.r_c),
        };
        conv.validate()?;
        Ok((params, conv))
    }

    pub fn from_json(s: &str) -> Result<(HestonParams, MarketConvention)> {
        let doc: ParamsDocument = serde_json::from_str(s)?;
        doc.into_parts()
    }
}

/// The six published parameter sets (three calibrations per trade date).
pub fn preset(name: &str) -> Option<HestonParams> {
    let p = |v0, kappa, theta, rho, sigma| HestonParams {
        v0,
        kappa,
        theta,
        rho,
        sigma,
    };
    match name.to_ascii_lowercase().as_str() {
        "set1" | "i" => Some(p(0.0236, 0.2575, 0.0849, -0.7513, 0.3150)),
        "set2" | "ii" => Some(p(0.0313, 0.75, 0.0678, -0.7663, 0.7593)),
        "set3" | "iii" => Some(p(0.0371, 3.4490, 0.0497, -0.7558, 1.7522)),
        "set4" | "iv" => Some(p(0.0538, 0.6431, 0.0880, -0.7010, 0.6159)),
        "set5" | "v" => Some(p(0.0440, 0.75, 0.0998, -0.7410, 0.7654)),
        "set6" | "vi" => Some(p(0.0397, 4.6705, 0.0696, -0.7149, 2.0640)),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 6] = ["set1", "set2", "set3", "set4", "set5", "set6"];

/// `(1 - e^{-x}) / x`, with a series near zero.
pub(crate) fn averaging_factor(x: f64) -> f64 {
    if x.abs() < SMALL_KAPPA_TAU {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Expected average variance over `[0, tau]` given the current variance `v`,
/// i.e. the model VIX squared for a tenor `tau`.
pub fn vix_squared_heston(v: f64, tau: f64, params: &HestonParams) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau = {tau} must be positive")));
    }
    if v < 0.0 {
        return Err(Error::Domain(format!("variance {v} must be nonnegative")));
    }
    let (a, b) = vix_squared_affine(tau, params);
    Ok(a + b * v)
}

/// Coefficients `(a, b)` of the affine map `v -> a + b v` behind [`vix_squared_heston`].
pub fn vix_squared_affine(tau: f64, params: &HestonParams) -> (f64, f64) {
    let b = averaging_factor(params.kappa * tau);
    ((1.0 - b) * params.theta, b)
}

/// Conditional mean of the variance after `tau`.
pub fn expected_variance(params: &HestonParams, v_t: f64, tau: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::Domain(format!("tau = {tau} must be nonnegative")));
    }
    let x = params.kappa * tau;
    Ok(v_t * (-x).exp() - params.theta * (-x).exp_m1())
}

/// Which transient sign to use in the closed-form second-moment approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecondMomentVariant {
    /// `[m + e^{-k tau} (m - v0)]^2` with `m = sigma^2/(2 kappa) + theta`.
    Printed,
    /// `[m + e^{-k tau} (v0 - m)]^2`, the sign consistent with the mean reversion
    /// of the first moment. This is the variant behind the published "Simple" VVIX.
    FlippedTransient,
}

/// Closed-form approximation of `E[v(tau)^2]` starting from `params.v0`.
pub fn second_moment_approx(
    params: &HestonParams,
    tau: f64,
    variant: SecondMomentVariant,
) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::Domain(format!("tau = {tau} must be nonnegative")));
    }
    let m = params.sigma * params.sigma / (2.0 * params.kappa) + params.theta;
    let e = (-params.kappa * tau).exp();
    let root = match variant {
        SecondMomentVariant::Printed => m + e * (m - params.v0),
        SecondMomentVariant::FlippedTransient => m + e * (params.v0 - m),
    };
    Ok(root * root)
}

/// Conditional variance of the CIR process after `tau`.
pub fn cir_variance(params: &HestonParams, v_t: f64, tau: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::Domain(format!("tau = {tau} must be nonnegative")));
    }
    let s2k = params.sigma * params.sigma / params.kappa;
    let e = (-params.kappa * tau).exp();
    let one_m_e = -(-params.kappa * tau).exp_m1();
    Ok(v_t * s2k * e * one_m_e + params.theta * 0.5 * s2k * one_m_e * one_m_e)
}

/// Exact conditional second moment `E[v(tau)^2]` of the CIR process.
pub fn exact_second_moment_cir(params: &HestonParams, v_t: f64, tau: f64) -> Result<f64> {
    let mean = expected_variance(params, v_t, tau)?;
    Ok(cir_variance(params, v_t, tau)? + mean * mean)
}

/// Scaled non-central chi-squared law of `v(t + tau)` given `v(t)`:
/// `v(t + tau) = c1 * chi'^2_d(lambda_of(v(t)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirTransition {
    pub c1: f64,
    pub d: f64,
    /// `lambda_of(v) = lambda_per_variance * v`.
    pub lambda_per_variance: f64,
}

impl CirTransition {
    pub fn lambda_of(&self, v: f64) -> f64 {
        self.lambda_per_variance * v
    }

    pub fn mean(&self, v: f64) -> f64 {
        self.c1 * (self.d + self.lambda_of(v))
    }

    pub fn variance(&self, v: f64) -> f64 {
        2.0 * self.c1 * self.c1 * (self.d + 2.0 * self.lambda_of(v))
    }
}

pub fn cir_transition(params: &HestonParams, tau: f64) -> Result<CirTransition> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau = {tau} must be positive")));
    }
    let s2 = params.sigma * params.sigma;
    let one_m_e = -(-params.kappa * tau).exp_m1();
    let e = (-params.kappa * tau).exp();
    Ok(CirTransition {
        c1: s2 * one_m_e / (4.0 * params.kappa),
        d: 4.0 * params.kappa * params.theta / s2,
        lambda_per_variance: 4.0 * params.kappa * e / (s2 * one_m_e),
    })
}
