//! Discrete variance strips: strike grids, `K*` selection and the CBOE-style
//! VIX / VVIX estimators.

use serde::{Deserialize, Serialize};

use crate::analytics::{IndexQuote, OptionKind, VixDistribution};
use crate::error::{Error, Result};
use crate::model::{HestonParams, MarketConvention};

/// Ascending strikes of a replication strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StrikeGrid {
    strikes: Vec<f64>,
}

impl TryFrom<Vec<f64>> for StrikeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        StrikeGrid::new(v)
    }
}

impl From<StrikeGrid> for Vec<f64> {
    fn from(g: StrikeGrid) -> Self {
        g.strikes
    }
}

impl StrikeGrid {
    pub fn new(strikes: Vec<f64>) -> Result<Self> {
        if strikes.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "strike grid needs at least 3 strikes, got {}",
                strikes.len()
            )));
        }
        if !strikes.iter().all(|k| k.is_finite() && *k > 0.0) {
            return Err(Error::InvalidParameter("strikes must be positive and finite".into()));
        }
        if !strikes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("strikes must be strictly ascending".into()));
        }
        Ok(Self { strikes })
    }

    /// `lo, lo + step, ...` up to `hi` inclusive (within rounding).
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!("bad strike range {lo}..{hi} step {step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|i| lo + step * i as f64).collect())
    }

    /// `count` strikes evenly spaced over `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter("linspace needs at least 2 strikes".into()));
        }
        let step = (hi - lo) / (count - 1) as f64;
        Self::new((0..count).map(|i| lo + step * i as f64).collect())
    }

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }

    pub fn len(&self) -> usize {
        self.strikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strikes.is_empty()
    }

    /// Strike spacing: central in the interior, one-sided at the ends.
    pub fn spacing(&self, i: usize) -> f64 {
        let k = &self.strikes;
        let n = k.len();
        if i == 0 {
            k[1] - k[0]
        } else if i == n - 1 {
            k[n - 1] - k[n - 2]
        } else {
            0.5 * (k[i + 1] - k[i - 1])
        }
    }

    /// `dK_i / K_i^2`; the strip variance is twice the weighted OTM sum.
    pub fn strip_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.spacing(i) / (self.strikes[i] * self.strikes[i])).collect()
    }

    /// Forward-difference weights `(K_{i+1} - K_i) / (2 K_i^2)`, with the last
    /// strike using the backward difference.
    pub fn forward_difference_weights(&self) -> Vec<f64> {
        let k = &self.strikes;
        let n = k.len();
        (0..n)
            .map(|i| {
                let dk = if i + 1 < n { k[i + 1] - k[i] } else { k[n - 1] - k[n - 2] };
                dk / (2.0 * k[i] * k[i])
            })
            .collect()
    }

    /// Index of `K*`, the largest strike at or below `forward`.
    pub fn k_star_index(&self, forward: f64) -> Option<usize> {
        let idx = self.strikes.partition_point(|k| *k <= forward);
        idx.checked_sub(1)
    }
}

/// Default VIX option strikes: from `k1` to 150 points every half point.
pub fn default_vix_option_grid(k1: f64) -> Result<StrikeGrid> {
    StrikeGrid::uniform(k1, DEFAULT_VIX_KMAX, DEFAULT_VIX_DK)
}

pub const DEFAULT_VIX_KMAX: f64 = 150.0;
pub const DEFAULT_VIX_DK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationDiagnostics {
    /// Weighted OTM contribution of the lowest strike.
    pub lowest: f64,
    /// Weighted OTM contribution of the highest strike.
    pub highest: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarStripResult {
    /// Annualized variance, floored at zero.
    pub variance: f64,
    /// `100 sqrt(variance)`.
    pub vix_points: f64,
    pub k_star: f64,
    pub k_star_index: usize,
    /// Raw variance before flooring.
    pub raw_variance: f64,
    pub floored: bool,
    pub truncation: TruncationDiagnostics,
}

/// Strip variance from undiscounted OTM prices: puts below `K*`, calls at and
/// above it.
///
/// `variance * tenor = 2 sum_i dK_i / K_i^2 V_i - (F / K* - 1)^2`.
pub fn strip_variance(forward: f64, grid: &StrikeGrid, otm_prices: &[f64], tenor: f64) -> Result<VarStripResult> {
    if otm_prices.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: otm_prices.len(),
        });
    }
    if !(forward > 0.0) {
        return Err(Error::Domain(format!("forward {forward} must be positive")));
    }
    if !(tenor > 0.0) {
        return Err(Error::Domain(format!("tenor {tenor} must be positive")));
    }
    let j = grid.k_star_index(forward).ok_or(Error::NoKStar {
        forward,
        lowest: grid.strikes[0],
    })?;
    let weights = grid.strip_weights();
    let sum: f64 = weights.iter().zip(otm_prices).map(|(w, v)| w * v).sum();
    let k_star = grid.strikes[j];
    let raw = (2.0 * sum - (forward / k_star - 1.0).powi(2)) / tenor;
    let n = grid.len();
    let variance = raw.max(0.0);
    Ok(VarStripResult {
        variance,
        vix_points: 100.0 * variance.sqrt(),
        k_star,
        k_star_index: j,
        raw_variance: raw,
        floored: raw < 0.0,
        truncation: TruncationDiagnostics {
            lowest: 2.0 * weights[0] * otm_prices[0] / tenor,
            highest: 2.0 * weights[n - 1] * otm_prices[n - 1] / tenor,
        },
    })
}

/// Full replication output: the VVIX and the strip details behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub vvix: IndexQuote,
    pub future: f64,
    pub strip: VarStripResult,
}

/// VVIX from a discrete strip of OTM VIX options priced by single integrals.
pub fn vvix_by_replication(
    params: &HestonParams,
    maturity: f64,
    conv: &MarketConvention,
    vix_grid: &StrikeGrid,
) -> Result<IndexQuote> {
    Ok(replication_report(params, maturity, conv, vix_grid)?.vvix)
}

pub fn replication_report(
    params: &HestonParams,
    maturity: f64,
    conv: &MarketConvention,
    vix_grid: &StrikeGrid,
) -> Result<ReplicationReport> {
    let dist = VixDistribution::new(params, maturity, conv)?;
    let future = dist.future()?;
    let j = vix_grid.k_star_index(future).ok_or(Error::NoKStar {
        forward: future,
        lowest: vix_grid.strikes[0],
    })?;
    let otm = vix_grid
        .strikes()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let kind = if i < j { OptionKind::Put } else { OptionKind::Call };
            dist.option(k, kind)
        })
        .collect::<Result<Vec<f64>>>()?;
    let strip = strip_variance(future, vix_grid, &otm, maturity)?;
    Ok(ReplicationReport {
        vvix: IndexQuote::new(strip.vix_points, maturity)?,
        future,
        strip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes() {
        let g = default_vix_option_grid(10.0).unwrap();
        assert_eq!(g.len(), 281);
        assert_eq!(g.strikes()[0], 10.0);
        assert!((g.strikes()[280] - 150.0).abs() < 1e-12);
        assert_eq!(default_vix_option_grid(5.0).unwrap().len(), 291);
    }

    #[test]
    fn grid_validation() {
        assert!(StrikeGrid::new(vec![1.0, 2.0]).is_err());
        assert!(StrikeGrid::new(vec![1.0, 3.0, 2.0]).is_err());
        assert!(StrikeGrid::new(vec![0.0, 1.0, 2.0]).is_err());
        let g: StrikeGrid = serde_json::from_str("[1.0, 2.0, 4.0]").unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), "[1.0,2.0,4.0]");
        assert!(serde_json::from_str::<StrikeGrid>("[2.0, 1.0, 4.0]").is_err());
    }

    #[test]
    fn k_star_selection() {
        let g = StrikeGrid::new(vec![10.0, 12.0, 14.0, 16.0]).unwrap();
        assert_eq!(g.k_star_index(9.9), None);
        assert_eq!(g.k_star_index(10.0), Some(0));
        assert_eq!(g.k_star_index(13.9), Some(1));
        assert_eq!(g.k_star_index(14.0), Some(2));
        assert_eq!(g.k_star_index(99.0), Some(3));
    }

    #[test]
    fn zero_prices_at_the_money() {
        let g = StrikeGrid::uniform(10.0, 20.0, 1.0).unwrap();
        let r = strip_variance(15.0, &g, &vec![0.0; g.len()], 0.1).unwrap();
        assert_eq!(r.variance, 0.0);
        assert!(!r.floored);
        assert_eq!(r.k_star, 15.0);
    }

    #[test]
    fn floors_negative_variance() {
        let g = StrikeGrid::uniform(10.0, 20.0, 1.0).unwrap();
        let r = strip_variance(15.5, &g, &vec![0.0; g.len()], 0.1).unwrap();
        assert!(r.floored && r.variance == 0.0 && r.raw_variance < 0.0);
    }

    #[test]
    fn strip_errors() {
        let g = StrikeGrid::uniform(10.0, 20.0, 1.0).unwrap();
        assert!(matches!(strip_variance(9.0, &g, &vec![0.0; g.len()], 0.1), Err(Error::NoKStar { .. })));
        assert!(matches!(strip_variance(15.0, &g, &[0.0], 0.1), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn weight_schemes() {
        let g = StrikeGrid::new(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.forward_difference_weights(), vec![0.5, 2.0 / 8.0, 2.0 / 32.0]);
        assert_eq!(g.strip_weights(), vec![1.0, 1.5 / 4.0, 2.0 / 16.0]);
    }
}
