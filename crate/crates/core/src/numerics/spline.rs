//! Natural bicubic spline on a rectangular grid.

use crate::error::{Error, Result};

/// Knot derivatives of the natural cubic spline through `(x_i, y_i)`.
fn natural_knot_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    // Second derivatives m_i with m_0 = m_{n-1} = 0, tridiagonal system on the interior.
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut sub = vec![0.0; n];
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Thomas elimination; the super-diagonal entry of row i is h[i].
    for i in 2..n - 1 {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * h[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    for i in (1..n - 1).rev() {
        let upper = if i + 1 < n - 1 { h[i] * m[i + 1] } else { 0.0 };
        m[i] = (rhs[i] - upper) / diag[i];
    }
    let mut slopes = vec![0.0; n];
    for i in 0..n - 1 {
        slopes[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    }
    slopes[n - 1] = (y[n - 1] - y[n - 2]) / h[n - 2] + h[n - 2] * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
    slopes
}

/// Tensor-product natural cubic spline stored as per-cell bicubic coefficients.
#[derive(Debug, Clone)]
pub struct Spline2D {
    x_knots: Vec<f64>,
    y_knots: Vec<f64>,
    /// `coefficients[i * (ny - 1) + j][p][q]` multiplies `t^p u^q` on cell `(i, j)`,
    /// with `t, u` the local coordinates in `[0, 1]`.
    coefficients: Vec<[[f64; 4]; 4]>,
}

fn check_knots(k: &[f64], name: &str) -> Result<()> {
    if k.len() < 2 {
        return Err(Error::InvalidParameter(format!("{name} needs at least 2 knots")));
    }
    if !k.windows(2).all(|w| w[1] > w[0]) || !k.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

impl Spline2D {
    /// `values[i][j]` is the value at `(x_knots[i], y_knots[j])`.
    pub fn fit(x_knots: &[f64], y_knots: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        check_knots(x_knots, "x knots")?;
        check_knots(y_knots, "y knots")?;
        let nx = x_knots.len();
        let ny = y_knots.len();
        if values.len() != nx {
            return Err(Error::LengthMismatch {
                expected: nx,
                got: values.len(),
            });
        }
        if let Some(row) = values.iter().find(|r| r.len() != ny) {
            return Err(Error::LengthMismatch {
                expected: ny,
                got: row.len(),
            });
        }
        // Slopes along y for each x row.
        let fy: Vec<Vec<f64>> = values.iter().map(|row| natural_knot_slopes(y_knots, row)).collect();
        // Slopes along x for each y column, and the cross derivative from fy.
        let mut fx = vec![vec![0.0; ny]; nx];
        let mut fxy = vec![vec![0.0; ny]; nx];
        let mut col = vec![0.0; nx];
        for j in 0..ny {
            for i in 0..nx {
                col[i] = values[i][j];
            }
            let s = natural_knot_slopes(x_knots, &col);
            for i in 0..nx {
                fx[i][j] = s[i];
                col[i] = fy[i][j];
            }
            let s = natural_knot_slopes(x_knots, &col);
            for i in 0..nx {
                fxy[i][j] = s[i];
            }
        }
        const HERMITE: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [-3.0, 3.0, -2.0, -1.0],
            [2.0, -2.0, 1.0, 1.0],
        ];
        let mut coefficients = Vec::with_capacity((nx - 1) * (ny - 1));
        for i in 0..nx - 1 {
            let hx = x_knots[i + 1] - x_knots[i];
            for j in 0..ny - 1 {
                let hy = y_knots[j + 1] - y_knots[j];
                let g = [
                    [values[i][j], values[i][j + 1], hy * fy[i][j], hy * fy[i][j + 1]],
                    [values[i + 1][j], values[i + 1][j + 1], hy * fy[i + 1][j], hy * fy[i + 1][j + 1]],
                    [hx * fx[i][j], hx * fx[i][j + 1], hx * hy * fxy[i][j], hx * hy * fxy[i][j + 1]],
                    [
                        hx * fx[i + 1][j],
                        hx * fx[i + 1][j + 1],
                        hx * hy * fxy[i + 1][j],
                        hx * hy * fxy[i + 1][j + 1],
                    ],
                ];
                // A = H G H^T
                let mut hg = [[0.0; 4]; 4];
                for r in 0..4 {
                    for c in 0..4 {
                        hg[r][c] = (0..4).map(|k| HERMITE[r][k] * g[k][c]).sum();
                    }
                }
                let mut a = [[0.0; 4]; 4];
                for r in 0..4 {
                    for c in 0..4 {
                        a[r][c] = (0..4).map(|k| hg[r][k] * HERMITE[c][k]).sum();
                    }
                }
                coefficients.push(a);
            }
        }
        Ok(Self {
            x_knots: x_knots.to_vec(),
            y_knots: y_knots.to_vec(),
            coefficients,
        })
    }

    pub fn x_knots(&self) -> &[f64] {
        &self.x_knots
    }

    pub fn y_knots(&self) -> &[f64] {
        &self.y_knots
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let (i, t) = locate(&self.x_knots, x)
            .ok_or_else(|| Error::Domain(format!("x = {x} outside spline domain")))?;
        let (j, u) = locate(&self.y_knots, y)
            .ok_or_else(|| Error::Domain(format!("y = {y} outside spline domain")))?;
        let a = &self.coefficients[i * (self.y_knots.len() - 1) + j];
        let mut acc = 0.0;
        for p in (0..4).rev() {
            let row = ((a[p][3] * u + a[p][2]) * u + a[p][1]) * u + a[p][0];
            acc = acc * t + row;
        }
        Ok(acc)
    }
}

/// Cell index and local coordinate of `x`, or `None` outside the knot range.
fn locate(knots: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = knots.len();
    if !(x >= knots[0] && x <= knots[n - 1]) {
        return None;
    }
    let i = match knots.binary_search_by(|k| k.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    Some((i, (x - knots[i]) / (knots[i + 1] - knots[i])))
}

pub fn spline2d_fit(x_knots: &[f64], y_knots: &[f64], values: &[Vec<f64>]) -> Result<Spline2D> {
    Spline2D::fit(x_knots, y_knots, values)
}

pub fn spline2d_eval(s: &Spline2D, x: f64, y: f64) -> Result<f64> {
    s.eval(x, y)
}
