//! Globally adaptive 15-point Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integrable power singularity at or left of the lower limit:
/// `f(z) ~ (z - origin)^exponent` with `exponent > -1`. The panel
/// `[a, a + width]` is integrated after the substitution
/// `z = origin + s^(1 / (1 + exponent))`, which makes it bounded. The origin
/// defaults to `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftSingularity {
    pub exponent: f64,
    pub width: f64,
    pub origin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub left_singularity: Option<LeftSingularity>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 200,
            left_singularity: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_singularity(mut self, exponent: f64, width: f64) -> Self {
        self.left_singularity = Some(LeftSingularity {
            exponent,
            width,
            origin: None,
        });
        self
    }

    /// Singularity at `origin`, which may lie left of the integration range.
    pub fn with_singularity_at(mut self, exponent: f64, width: f64, origin: f64) -> Self {
        self.left_singularity = Some(LeftSingularity {
            exponent,
            width,
            origin: Some(origin),
        });
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) || self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(format!("bad quadrature spec {self:?}")));
        }
        if let Some(s) = self.left_singularity {
            if !(s.exponent > -1.0) || !(s.width > 0.0) {
                return Err(Error::InvalidParameter(format!("bad singularity {s:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

/// Maps the integration variable of a panel back to the original axis and
/// returns the Jacobian alongside.
#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `z = a + s^p`
    Power { a: f64, p: f64 },
    /// `z = a + u / (1 - u)`, `u` in `[0, 1)`
    SemiInfinite { a: f64 },
}

impl Map {
    #[inline]
    fn apply(&self, s: f64) -> (f64, f64) {
        match *self {
            Map::Identity => (s, 1.0),
            Map::Power { a, p } => {
                if s <= 0.0 {
                    (a, 0.0)
                } else {
                    let sp = s.powf(p - 1.0);
                    (a + sp * s, p * sp)
                }
            }
            Map::SemiInfinite { a } => {
                let w = 1.0 - s;
                (a + s / w, 1.0 / (w * w))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    panel: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.panel.cmp(&self.panel))
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, map: Map, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |s: f64| -> Result<f64> {
        let (z, jac) = map.apply(s);
        if jac == 0.0 {
            return Ok(0.0);
        }
        let y = f(z) * jac;
        if y.is_nan() {
            return Err(Error::NanIntegrand { at: z });
        }
        Ok(y)
    };
    let fc = eval(center)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    if !result.is_finite() {
        return Err(Error::NanIntegrand { at: center });
    }
    Ok((result, err))
}

/// The 15 Kronrod abscissae on `[-1, 1]` with their weights, for callers
/// that reuse a fixed composite rule.
pub fn kronrod_rule() -> [(f64, f64); 15] {
    let mut rule = [(0.0, WGK[7]); 15];
    for j in 0..7 {
        rule[2 * j] = (-XGK[j], WGK[j]);
        rule[2 * j + 1] = (XGK[j], WGK[j]);
    }
    rule
}

/// Integrate `f` over `[a, b]`; `b` may be `+inf`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_detailed(f, a, b, spec).map(|r| r.value)
}

pub fn integrate_detailed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    if a.is_nan() || b.is_nan() || a.is_infinite() {
        return Err(Error::Domain(format!("bad integration range [{a}, {b}]")));
    }
    if b < a {
        return Err(Error::Domain(format!("reversed integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
            evaluations: 0,
        });
    }
    let mut panels: Vec<(Map, f64, f64)> = Vec::new();
    let mut start = a;
    if let Some(sing) = spec.left_singularity {
        let end = if b.is_finite() { (a + sing.width).min(b) } else { a + sing.width };
        let p = 1.0 / (1.0 + sing.exponent);
        let origin = sing.origin.unwrap_or(a);
        if !(origin <= a) {
            return Err(Error::Domain(format!("singularity at {origin} right of the range start {a}")));
        }
        panels.push((Map::Power { a: origin, p }, (a - origin).powf(1.0 / p), (end - origin).powf(1.0 / p)));
        start = end;
    }
    if start < b {
        if b.is_infinite() {
            panels.push((Map::SemiInfinite { a: start }, 0.0, 1.0));
        } else {
            panels.push((Map::Identity, start, b));
        }
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (i, &(map, lo, hi)) in panels.iter().enumerate() {
        let (value, error) = kronrod(&f, map, lo, hi)?;
        evaluations += 15;
        heap.push(Segment {
            panel: i,
            lo,
            hi,
            value,
            error,
        });
    }
    let mut subdivisions = heap.len();
    loop {
        let total: f64 = ordered_sum(&heap, |s| s.value);
        let err: f64 = heap.iter().map(|s| s.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadratureResult {
                value: total,
                error: err,
                subdivisions,
                evaluations,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                estimate: total,
                error_bound: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            let err: f64 = heap.iter().map(|s| s.error).sum();
            if err <= tol {
                continue;
            }
            return Err(Error::NonConvergence {
                estimate: total,
                error_bound: err + worst.error,
                subdivisions,
            });
        }
        let map = panels[worst.panel].0;
        let (v1, e1) = kronrod(&f, map, worst.lo, mid)?;
        let (v2, e2) = kronrod(&f, map, mid, worst.hi)?;
        evaluations += 30;
        subdivisions += 1;
        heap.push(Segment {
            panel: worst.panel,
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            panel: worst.panel,
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }
}

/// Sum in a fixed (panel, position) order so the result does not depend on
/// the heap layout.
fn ordered_sum(heap: &BinaryHeap<Segment>, key: impl Fn(&Segment) -> f64) -> f64 {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.panel.cmp(&y.panel).then(x.lo.total_cmp(&y.lo)));
    segs.into_iter().map(key).sum()
}
