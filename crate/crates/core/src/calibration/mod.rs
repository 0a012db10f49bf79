//! Weighted least-squares Heston calibration to vanilla quotes, optionally
//! anchored on a VVIX level.
//!
//! Residuals are taken on out-of-the-money prices. A VVIX target either
//! enters as an extra penalty residual or removes the vol of vol from the
//! search: every candidate `(v0, kappa, theta, rho)` then gets the `sigma`
//! whose simple VVIX matches the target.

pub mod io;
pub mod optimize;
pub mod pricing;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics::{solve_sigma_for_vvix, vvix_log_contract, vvix_simple, IndexQuote};
use crate::error::{Error, Result};
use crate::model::{HestonParams, MarketConvention};
use crate::replication::{default_vix_option_grid, vvix_by_replication};

pub use optimize::{Bounds, DeSettings, LmSettings, Minimum};
pub use pricing::{black_price, bs_vega, heston_cf, heston_vanilla_price, implied_vol, HestonSlice};

/// One market option quote. `price` is discounted by `discount`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanillaQuote {
    pub maturity: f64,
    pub strike: f64,
    pub is_call: bool,
    pub price: f64,
    pub implied_vol: Option<f64>,
    pub discount: f64,
}

impl VanillaQuote {
    pub fn validate(&self, forward: f64) -> Result<()> {
        if !(self.maturity > 0.0) || !(self.strike > 0.0) || !(self.discount > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quote needs positive maturity, strike and discount: {self:?}"
            )));
        }
        let intrinsic = self.discount * if self.is_call { forward - self.strike } else { self.strike - forward };
        if !(self.price >= intrinsic.max(0.0) - 1e-12 * forward) {
            return Err(Error::InvalidParameter(format!(
                "price {} below intrinsic {intrinsic} for strike {} at {}",
                self.price, self.strike, self.maturity
            )));
        }
        Ok(())
    }

    /// Discounted out-of-the-money price: puts below the forward, calls at
    /// and above, converted through parity when needed.
    pub fn otm_price(&self, forward: f64) -> f64 {
        let want_call = self.strike >= forward;
        let parity = self.discount * (forward - self.strike);
        match (self.is_call, want_call) {
            (true, false) => self.price - parity,
            (false, true) => self.price + parity,
            _ => self.price,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    #[default]
    Uniform,
    InverseDiscount,
    InverseVega,
}

/// How the vega floor enters inverse-vega weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VegaFloorRule {
    /// `1 / max(vega, floor)`: weights are capped at `1 / floor`.
    #[default]
    Floor,
    /// `1 / min(floor, vega)` as printed.
    PrintedMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub kind: WeightKind,
    pub vega_floor: f64,
    pub floor_rule: VegaFloorRule,
}

pub const DEFAULT_VEGA_FLOOR: f64 = 1e-2;

impl Default for WeightScheme {
    fn default() -> Self {
        Self::new(WeightKind::Uniform)
    }
}

impl WeightScheme {
    pub fn new(kind: WeightKind) -> Self {
        Self {
            kind,
            vega_floor: DEFAULT_VEGA_FLOOR,
            floor_rule: VegaFloorRule::Floor,
        }
    }
}

/// Per-quote weights `w_i`; the objective squares them.
pub fn build_weights(
    quotes: &[VanillaQuote],
    scheme: &WeightScheme,
    spot: f64,
    conv: &MarketConvention,
) -> Result<Vec<f64>> {
    if !(scheme.vega_floor > 0.0) {
        return Err(Error::InvalidParameter("vega floor must be positive".into()));
    }
    quotes
        .iter()
        .enumerate()
        .map(|(i, q)| match scheme.kind {
            WeightKind::Uniform => Ok(1.0),
            WeightKind::InverseDiscount => Ok(1.0 / q.discount),
            WeightKind::InverseVega => {
                let vol = q.implied_vol.ok_or(Error::MissingImpliedVol { index: i })?;
                let vega = bs_vega(conv.forward(spot, q.maturity), q.strike, q.maturity, vol, q.discount);
                Ok(match scheme.floor_rule {
                    VegaFloorRule::Floor => 1.0 / vega.max(scheme.vega_floor),
                    VegaFloorRule::PrintedMin => 1.0 / vega.min(scheme.vega_floor),
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VvixMethod {
    #[default]
    LogContract,
    Simple,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum VvixMode {
    #[default]
    None,
    /// Adds the residual `weight * (VVIX_model - target)`.
    Penalty { weight: f64, target: f64, method: VvixMethod },
    /// Solves `sigma` from the simple VVIX at every evaluation.
    Solve { target: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub quotes: Vec<VanillaQuote>,
    pub spot: f64,
    pub conv: MarketConvention,
    pub scheme: WeightScheme,
    pub vvix_mode: VvixMode,
    pub fix_kappa: Option<f64>,
    pub fix_theta: Option<f64>,
    pub de: DeSettings,
    pub lm: LmSettings,
}

impl CalibrationSpec {
    pub fn new(quotes: Vec<VanillaQuote>, spot: f64) -> Self {
        Self {
            quotes,
            spot,
            conv: MarketConvention::default(),
            scheme: WeightScheme::default(),
            vvix_mode: VvixMode::None,
            fix_kappa: None,
            fix_theta: None,
            de: DeSettings::default(),
            lm: LmSettings::default(),
        }
    }
}

/// Search box of `(v0, kappa, theta, rho, sigma)`.
pub const PARAM_BOUNDS: [Bounds; 5] = [
    Bounds { lo: 1e-4, hi: 2.0 },
    Bounds { lo: 1e-3, hi: 20.0 },
    Bounds { lo: 1e-4, hi: 2.0 },
    Bounds { lo: -0.999, hi: 0.999 },
    Bounds { lo: 1e-3, hi: 10.0 },
];

pub const PARAM_NAMES: [&str; 5] = ["v0", "kappa", "theta", "rho", "sigma"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteResidual {
    pub maturity: f64,
    pub strike: f64,
    /// Discounted out-of-the-money market price.
    pub market: f64,
    pub model: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VvixDiagnostics {
    pub simple: Option<f64>,
    pub log_contract: Option<f64>,
    /// Strip replication with the default VIX option grid from 5 points.
    pub replication: Option<f64>,
}

impl VvixDiagnostics {
    pub fn at(params: &HestonParams, conv: &MarketConvention) -> Self {
        let t = conv.vvix_maturity();
        let points = |r: Result<IndexQuote>| r.ok().map(|q| q.points);
        Self {
            simple: points(vvix_simple(params, t, conv)),
            log_contract: points(vvix_log_contract(params, t, conv)),
            replication: points(default_vix_option_grid(5.0).and_then(|g| vvix_by_replication(params, t, conv, &g))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: HestonParams,
    /// Weighted sum of squares, penalty included.
    pub objective: f64,
    /// Root mean square of the unweighted price residuals.
    pub rms: f64,
    pub converged: bool,
    /// Names of the coordinates the optimizer searched over.
    pub free: Vec<String>,
    pub evaluations: usize,
    pub iterations: usize,
    pub residuals: Vec<QuoteResidual>,
    pub vvix: VvixDiagnostics,
}

/// Quotes grouped by maturity, with their weights and market OTM prices.
struct Problem<'a> {
    spec: &'a CalibrationSpec,
    groups: Vec<(f64, Vec<usize>)>,
    weights: Vec<f64>,
    market: Vec<f64>,
    free: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(spec: &'a CalibrationSpec) -> Result<Self> {
        let conv = &spec.conv;
        conv.validate()?;
        if !(spec.spot > 0.0) {
            return Err(Error::InvalidParameter("spot must be positive".into()));
        }
        let mut free: Vec<usize> = vec![0, 3];
        if spec.fix_kappa.is_none() {
            free.push(1);
        }
        if spec.fix_theta.is_none() {
            free.push(2);
        }
        if !matches!(spec.vvix_mode, VvixMode::Solve { .. }) {
            free.push(4);
        }
        free.sort_unstable();
        if spec.quotes.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "need at least 5 quotes, got {}",
                spec.quotes.len()
            )));
        }
        for (name, v) in [("kappa", spec.fix_kappa), ("theta", spec.fix_theta)] {
            let k = if name == "kappa" { 1 } else { 2 };
            if let Some(v) = v {
                if !(v >= PARAM_BOUNDS[k].lo && v <= PARAM_BOUNDS[k].hi) {
                    return Err(Error::InvalidParameter(format!("fixed {name} {v} outside bounds")));
                }
            }
        }
        match spec.vvix_mode {
            VvixMode::Penalty { weight, target, .. } if !(weight >= 0.0 && target > 0.0) => {
                return Err(Error::InvalidParameter("penalty needs weight >= 0 and target > 0".into()));
            }
            VvixMode::Solve { target } if !(target > 0.0) => {
                return Err(Error::InvalidParameter("VVIX target must be positive".into()));
            }
            _ => {}
        }
        let mut by_maturity: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, q) in spec.quotes.iter().enumerate() {
            q.validate(conv.forward(spec.spot, q.maturity))?;
            by_maturity.entry(q.maturity.to_bits()).or_default().push(i);
        }
        let groups = by_maturity.into_iter().map(|(t, idx)| (f64::from_bits(t), idx)).collect();
        let weights = build_weights(&spec.quotes, &spec.scheme, spec.spot, conv)?;
        let market = spec
            .quotes
            .iter()
            .map(|q| q.otm_price(conv.forward(spec.spot, q.maturity)))
            .collect();
        Ok(Self {
            spec,
            groups,
            weights,
            market,
            free,
        })
    }

    fn bounds(&self) -> Vec<Bounds> {
        self.free.iter().map(|&k| PARAM_BOUNDS[k]).collect()
    }

    /// Full parameter set from the free coordinates.
    fn assemble(&self, x: &[f64]) -> Result<HestonParams> {
        let mut full = [0.0, self.spec.fix_kappa.unwrap_or(0.0), self.spec.fix_theta.unwrap_or(0.0), 0.0, 1.0];
        for (&k, &v) in self.free.iter().zip(x) {
            full[k] = v;
        }
        let p = HestonParams::from_slice(&full)?;
        if let VvixMode::Solve { target } = self.spec.vvix_mode {
            let t = self.spec.conv.vvix_maturity();
            let sigma = solve_sigma_for_vvix(IndexQuote::new(target, t)?, &p, t, &self.spec.conv)?;
            return Ok(p.with_sigma(sigma));
        }
        Ok(p)
    }

    fn model_prices(&self, p: &HestonParams) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.spec.quotes.len()];
        for (tau, idx) in &self.groups {
            let slice = HestonSlice::new(p, &self.spec.conv, self.spec.spot, *tau)?;
            let f = slice.forward();
            for &i in idx {
                let q = &self.spec.quotes[i];
                out[i] = q.discount * slice.price(q.strike, q.strike >= f);
            }
        }
        Ok(out)
    }

    fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.assemble(x)?;
        let model = self.model_prices(&p)?;
        let mut r: Vec<f64> = model
            .iter()
            .zip(&self.market)
            .zip(&self.weights)
            .map(|((m, v), w)| w * (m - v))
            .collect();
        if let VvixMode::Penalty { weight, target, method } = self.spec.vvix_mode {
            let t = self.spec.conv.vvix_maturity();
            let level = match method {
                VvixMethod::LogContract => vvix_log_contract(&p, t, &self.spec.conv)?,
                VvixMethod::Simple => vvix_simple(&p, t, &self.spec.conv)?,
            };
            r.push(weight * (level.points - target));
        }
        Ok(r)
    }
}

/// Global search by differential evolution, refined by Levenberg-Marquardt.
pub fn calibrate(spec: &CalibrationSpec) -> Result<CalibrationResult> {
    let problem = Problem::new(spec)?;
    let bounds = problem.bounds();
    let f = |x: &[f64]| problem.residuals(x);
    let global = optimize::differential_evolution(&f, &bounds, &spec.de);
    if !global.objective.is_finite() {
        return Err(Error::NonConvergence {
            estimate: f64::NAN,
            error_bound: f64::INFINITY,
            subdivisions: global.evaluations,
        });
    }
    let local = optimize::levenberg_marquardt(&f, &global.x, &bounds, &spec.lm)?;
    let best = if local.objective <= global.objective { &local } else { &global };
    let params = problem.assemble(&best.x)?;
    let model = problem.model_prices(&params)?;
    let residuals: Vec<QuoteResidual> = spec
        .quotes
        .iter()
        .enumerate()
        .map(|(i, q)| QuoteResidual {
            maturity: q.maturity,
            strike: q.strike,
            market: problem.market[i],
            model: model[i],
            weight: problem.weights[i],
        })
        .collect();
    let rms = (residuals.iter().map(|r| (r.model - r.market).powi(2)).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(CalibrationResult {
        params,
        objective: best.objective,
        rms,
        converged: local.converged,
        free: problem.free.iter().map(|&k| PARAM_NAMES[k].to_string()).collect(),
        evaluations: global.evaluations + local.evaluations,
        iterations: local.iterations,
        residuals,
        vvix: VvixDiagnostics::at(&params, &spec.conv),
    })
}

/// Weighted objective at given parameters, for diagnostics and tests.
pub fn objective_at(spec: &CalibrationSpec, params: &HestonParams) -> Result<f64> {
    let problem = Problem::new(spec)?;
    let x: Vec<f64> = problem.free.iter().map(|&k| params.to_vec()[k]).collect();
    Ok(problem.residuals(&x)?.iter().map(|r| r * r).sum())
}

/// Quotes priced by the adaptive pricer: `strikes_per` strikes spread by
/// forward moneyness at each maturity, with Black implied vols attached.
pub fn synthetic_quotes(
    params: &HestonParams,
    conv: &MarketConvention,
    spot: f64,
    maturities: &[f64],
    strikes_per: usize,
) -> Result<Vec<VanillaQuote>> {
    let mut out = Vec::with_capacity(maturities.len() * strikes_per);
    for &tau in maturities {
        let f = conv.forward(spot, tau);
        let discount = conv.discount_factor(tau);
        let width = 2.0 * (params.theta.max(params.v0) * tau).sqrt();
        for j in 0..strikes_per {
            let z = -1.5 + 3.0 * j as f64 / (strikes_per.max(2) - 1) as f64;
            let strike = f * (z * width).exp();
            let is_call = strike >= f;
            let price = discount * heston_vanilla_price(params, conv, spot, strike, tau, is_call)?;
            let vol = implied_vol(price, f, strike, tau, discount, is_call)?;
            out.push(VanillaQuote {
                maturity: tau,
                strike,
                is_call,
                price,
                implied_vol: Some(vol),
                discount,
            });
        }
    }
    Ok(out)
}
