use crate::error::{Error, Result};

/// Least-squares fit `g_i ~ beta1 * K_i + beta2` over a fixed strike set.
///
/// The normal equations depend only on the strikes, so they are reduced once
/// (in centered form) and reused for every right-hand side.
#[derive(Debug, Clone)]
pub struct ParityRegression {
    centered: Vec<f64>,
    mean_strike: f64,
    sxx: f64,
}

impl ParityRegression {
    pub fn new(strikes: &[f64]) -> Result<Self> {
        if strikes.len() < 2 {
            return Err(Error::Singular(format!("{} strikes, need at least 2", strikes.len())));
        }
        let n = strikes.len() as f64;
        let mean_strike = strikes.iter().sum::<f64>() / n;
        let centered: Vec<f64> = strikes.iter().map(|k| k - mean_strike).collect();
        let sxx: f64 = centered.iter().map(|c| c * c).sum();
        let scale = strikes.iter().map(|k| k.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if !(sxx > 1e-24 * scale * scale * n) {
            return Err(Error::Singular("all strikes are equal".into()));
        }
        Ok(Self {
            centered,
            mean_strike,
            sxx,
        })
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    /// Returns `(beta1, beta2)`: slope and intercept.
    pub fn solve(&self, g: &[f64]) -> Result<(f64, f64)> {
        if g.len() != self.centered.len() {
            return Err(Error::LengthMismatch {
                expected: self.centered.len(),
                got: g.len(),
            });
        }
        Ok(self.solve_unchecked(g))
    }

    #[inline]
    pub(crate) fn solve_unchecked(&self, g: &[f64]) -> (f64, f64) {
        let n = self.centered.len() as f64;
        let mut sxg = 0.0;
        let mut sg = 0.0;
        for (c, gi) in self.centered.iter().zip(g) {
            sxg += c * gi;
            sg += gi;
        }
        let beta1 = sxg / self.sxx;
        let beta2 = sg / n - beta1 * self.mean_strike;
        (beta1, beta2)
    }
}

pub fn solve_parity_regression(strikes: &[f64], g: &[f64]) -> Result<(f64, f64)> {
    ParityRegression::new(strikes)?.solve(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_parity_line() {
        let k: Vec<f64> = (1..=20).map(|i| i as f64 * 0.7).collect();
        let g: Vec<f64> = k.iter().map(|k| -k + 7.0).collect();
        let (b1, b2) = solve_parity_regression(&k, &g).unwrap();
        assert!((b1 + 1.0).abs() < 1e-13);
        assert!((b2 - 7.0).abs() < 1e-12);
    }

    #[test]
    fn two_points_interpolate() {
        let (b1, b2) = solve_parity_regression(&[2.0, 5.0], &[1.0, 10.0]).unwrap();
        assert!((b1 - 3.0).abs() < 1e-14);
        assert!((b2 + 5.0).abs() < 1e-14);
    }

    #[test]
    fn singular_and_mismatch() {
        assert!(matches!(ParityRegression::new(&[3.0, 3.0, 3.0]), Err(Error::Singular(_))));
        assert!(ParityRegression::new(&[3.0]).is_err());
        let r = ParityRegression::new(&[1.0, 2.0]).unwrap();
        assert!(matches!(r.solve(&[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let k: Vec<f64> = (0..50).map(|i| 40.0 + 2.0 * i as f64).collect();
        let g: Vec<f64> = k.iter().map(|k| (k * 0.37).sin() * 5.0 + 100.0 - k).collect();
        let (b1, b2) = solve_parity_regression(&k, &g).unwrap();
        let (mut h1, mut h2) = (0.0, 0.0);
        for (ki, gi) in k.iter().zip(&g) {
            let r = b1 * ki + b2 - gi;
            h1 += ki * r;
            h2 += r;
        }
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(h1.abs() < 1e-9 * gn && h2.abs() < 1e-9 * gn, "{h1} {h2}");
    }
}
