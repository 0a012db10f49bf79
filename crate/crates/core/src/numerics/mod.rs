//! Special functions, quadrature, regression and interpolation shared by the
//! pricing layers.

pub mod quadrature;
pub mod regression;
pub mod special;
pub mod spline;

pub use quadrature::{integrate, integrate_detailed, kronrod_rule, LeftSingularity, QuadratureResult, QuadratureSpec};
pub use regression::{solve_parity_regression, ParityRegression};
pub use special::{ncx2_cdf, ncx2_pdf, ncx2_pdf_series, ncx2_quantile, ncx2_sample, ncx2_sf};
pub use spline::{spline2d_eval, spline2d_fit, Spline2D};

use crate::error::Result;

/// Upper truncation of semi-infinite expectations: the `1 - TAIL` quantile.
pub const TAIL_PROBABILITY: f64 = 1e-14;

/// Probability level of the left panel integrated with the singularity
/// substitution when the density is unbounded at zero.
const SINGULAR_PANEL_PROBABILITY: f64 = 0.5;

/// Below this point an unbounded density is integrated as a point mass:
/// closer to zero the density overflows while the substitution Jacobian
/// underflows.
const SINGULAR_FLOOR: f64 = 1e-250;

/// Non-central chi-squared law with precomputed integration limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncx2Law {
    pub d: f64,
    pub lambda: f64,
    lower: f64,
    upper: f64,
    singular_width: Option<f64>,
}

impl Ncx2Law {
    pub fn new(d: f64, lambda: f64) -> Result<Self> {
        let upper = ncx2_quantile(1.0 - TAIL_PROBABILITY, d, lambda)?;
        let (lower, singular_width) = if d < 2.0 {
            // strongly non-Feller laws put visible mass below the floor
            let p = (ncx2_cdf(SINGULAR_FLOOR, d, lambda)? + 0.1).max(SINGULAR_PANEL_PROBABILITY);
            // when nearly all the mass sits within decades of zero, the
            // quantile says little about where the power law stops
            let width = ncx2_quantile(p.min(0.9), d, lambda)?.max((d + lambda).min(1.0));
            (0.0, Some(width))
        } else {
            // the density vanishes at zero, so the left tail can be cut too
            (ncx2_quantile(TAIL_PROBABILITY, d, lambda)?, None)
        };
        Ok(Self {
            d,
            lambda,
            lower,
            upper,
            singular_width,
        })
    }

    /// Right end of the truncated support.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn pdf(&self, z: f64) -> f64 {
        ncx2_pdf(z, self.d, self.lambda).unwrap_or(f64::NAN)
    }

    /// `E[f(Z)]` restricted to `[lo, hi]` (clipped to the truncated support).
    /// `breaks` are interior points where `f` is not smooth.
    pub fn expectation_on<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        let lo = lo.max(self.lower);
        let hi = hi.min(self.upper);
        if !(hi > lo) {
            return Ok(0.0);
        }
        let singular = lo == 0.0 && self.singular_width.is_some();
        let mut head = 0.0;
        let lo = if singular && hi > SINGULAR_FLOOR {
            head = f(SINGULAR_FLOOR) * ncx2_cdf(SINGULAR_FLOOR, self.d, self.lambda)?;
            SINGULAR_FLOOR
        } else {
            lo
        };
        let mut pts = vec![lo];
        // a break at the mean keeps narrow laws from slipping between nodes
        let mean = self.d + self.lambda;
        let mut inner: Vec<f64> = breaks
            .iter()
            .cloned()
            .chain(std::iter::once(mean))
            .filter(|b| *b > lo && *b < hi)
            .collect();
        inner.sort_by(|a, b| a.total_cmp(b));
        pts.extend(inner);
        pts.push(hi);
        let g = |z: f64| {
            let p = self.pdf(z);
            if p == 0.0 {
                0.0
            } else {
                f(z) * p
            }
        };
        let mut total = head;
        for (i, w) in pts.windows(2).enumerate() {
            let mut panel_spec = *spec;
            panel_spec.left_singularity = None;
            if i == 0 && singular {
                if let Some(width) = self.singular_width {
                    panel_spec = panel_spec.with_singularity_at(0.5 * self.d - 1.0, width, 0.0);
                }
            }
            total += integrate(g, w[0], w[1], &panel_spec)?;
        }
        Ok(total)
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
        self.expectation_on(f, 0.0, f64::INFINITY, breaks, spec)
    }
}
