//! Second-order Runge-Kutta-Gegenbauer super-time-stepping.
//!
//! The `s`-stage scheme has stability polynomial
//! `R_s(z) = a_s + b_s C_s(1 + w1 z)` with `C_s` the Gegenbauer polynomial of
//! index 3/2, which stays bounded on `z in [-(s + 4)(s - 1) / 3, 0]`.

use serde::Serialize;

use crate::error::{Error, Result};

use super::operator::HestonOperator;

#[derive(Debug, Clone)]
pub struct RkgCoefficients {
    pub stages: usize,
    /// `mu_tilde_1`
    pub first: f64,
    /// Per stage `j >= 2`: `(mu, nu, mu_tilde, gamma_tilde)`.
    pub recurrence: Vec<(f64, f64, f64, f64)>,
}

fn gegenbauer_b(j: usize) -> f64 {
    let j = j.max(2) as f64;
    4.0 * (j - 1.0) * (j + 4.0) / (3.0 * j * (j + 1.0) * (j + 2.0) * (j + 3.0))
}

fn gegenbauer_at_one(j: usize) -> f64 {
    let j = j as f64;
    0.5 * (j + 1.0) * (j + 2.0)
}

impl RkgCoefficients {
    pub fn new(stages: usize) -> Self {
        let s = stages.max(2);
        let w1 = 6.0 / ((s as f64 + 4.0) * (s as f64 - 1.0));
        let b = |j: usize| gegenbauer_b(j);
        let a = |j: usize| 1.0 - b(j) * gegenbauer_at_one(j);
        let first = 3.0 * b(1) * w1;
        let recurrence = (2..=s)
            .map(|j| {
                let jf = j as f64;
                let mu = (2.0 * jf + 1.0) / jf * b(j) / b(j - 1);
                let nu = -(jf + 1.0) / jf * b(j) / b(j - 2);
                let mu_t = mu * w1;
                let gamma_t = -a(j - 1) * mu_t;
                (mu, nu, mu_t, gamma_t)
            })
            .collect();
        Self {
            stages: s,
            first,
            recurrence,
        }
    }

    /// Length of the real stability interval in units of `dt * |lambda|`.
    pub fn stability_limit(stages: usize) -> f64 {
        let s = stages as f64;
        (s + 4.0) * (s - 1.0) / 3.0
    }

    /// Fewest stages whose stability interval covers `dt_rho`.
    pub fn stages_for(dt_rho: f64) -> usize {
        let mut s = 2;
        while Self::stability_limit(s) < dt_rho {
            s += 1;
        }
        s
    }

    /// Stability polynomial evaluated at `z`, by the stage recurrence.
    pub fn amplification(&self, z: f64) -> f64 {
        let y0 = 1.0;
        let mut prev2 = y0;
        let mut prev = y0 + self.first * z * y0;
        for &(mu, nu, mu_t, gamma_t) in &self.recurrence {
            let next = mu * prev + nu * prev2 + (1.0 - mu - nu) * y0 + mu_t * z * prev + gamma_t * z * y0;
            prev2 = prev;
            prev = next;
        }
        prev
    }
}

/// Statistics of one evolution leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveStats {
    pub steps: usize,
    pub stages: usize,
    pub spectral_radius: f64,
    pub dt: f64,
}

/// Advances `f` (`ns` interleaved surfaces) by `duration` in time to maturity
/// over `steps` equal steps. Aborts when any value exceeds ten times the
/// initial maximum magnitude.
pub fn evolve(
    op: &HestonOperator,
    f: &mut [f64],
    ns: usize,
    duration: f64,
    steps: usize,
) -> Result<EvolveStats> {
    if steps == 0 || !(duration > 0.0) {
        return Err(Error::InvalidParameter(format!("bad evolution span {duration} over {steps} steps")));
    }
    let dt = duration / steps as f64;
    let rho = op.spectral_radius_bound();
    let stages = RkgCoefficients::stages_for(dt * rho);
    let coef = RkgCoefficients::new(stages);
    let bound = 10.0 * f.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let len = f.len();
    let mut y0 = vec![0.0; len];
    let mut l0 = vec![0.0; len];
    let mut prev2 = vec![0.0; len];
    let mut prev = vec![0.0; len];
    let mut lprev = vec![0.0; len];
    for step in 0..steps {
        y0.copy_from_slice(f);
        op.apply(&y0, &mut l0, ns);
        for k in 0..len {
            prev[k] = y0[k] + coef.first * dt * l0[k];
        }
        prev2.copy_from_slice(&y0);
        for &(mu, nu, mu_t, gamma_t) in &coef.recurrence {
            op.apply(&prev, &mut lprev, ns);
            let c0 = 1.0 - mu - nu;
            // next overwrites prev2, then rotate.
            for k in 0..len {
                prev2[k] = mu * prev[k] + nu * prev2[k] + c0 * y0[k] + dt * (mu_t * lprev[k] + gamma_t * l0[k]);
            }
            std::mem::swap(&mut prev, &mut prev2);
        }
        f.copy_from_slice(&prev);
        let worst = f.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
        if worst > bound {
            return Err(Error::Instability {
                step,
                time: dt * (step + 1) as f64,
                magnitude: worst,
                bound,
            });
        }
    }
    Ok(EvolveStats {
        steps,
        stages,
        spectral_radius: rho,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_second_order() {
        for s in [2, 3, 5, 10, 31] {
            let c = RkgCoefficients::new(s);
            let z = 1e-3;
            let exact = 1.0 + z + 0.5 * z * z;
            assert!((c.amplification(z) - exact).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn bounded_on_stability_interval() {
        for s in [2, 4, 9, 20, 45] {
            let c = RkgCoefficients::new(s);
            let limit = RkgCoefficients::stability_limit(s);
            for k in 0..=2000 {
                let z = -limit * k as f64 / 2000.0;
                assert!(c.amplification(z).abs() <= 1.0 + 1e-9, "s={s} z={z}");
            }
            assert!(c.amplification(-1.05 * limit).abs() > 1.0);
        }
    }

    #[test]
    fn stage_selection() {
        assert_eq!(RkgCoefficients::stages_for(0.5), 2);
        let s = RkgCoefficients::stages_for(600.0);
        assert!(RkgCoefficients::stability_limit(s) >= 600.0);
        assert!(RkgCoefficients::stability_limit(s - 1) < 600.0);
    }
}
