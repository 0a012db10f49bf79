//! Bounded least squares: differential evolution for a global start, then
//! Levenberg-Marquardt damped Gauss-Newton.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeSettings {
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    /// Differential weight.
    pub weight: f64,
    pub crossover: f64,
}

impl Default for DeSettings {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 200,
            seed: 42,
            weight: 0.7,
            crossover: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop when the relative step norm falls below this.
    pub step_tol: f64,
    /// Stop when the relative objective change falls below this.
    pub objective_tol: f64,
    /// Relative central-difference bump.
    pub bump: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-10,
            objective_tol: 1e-12,
            bump: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Objective value, with failed evaluations mapped to `+inf`.
fn objective<F>(f: &F, x: &[f64], count: &mut usize) -> f64
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    *count += 1;
    match f(x) {
        Ok(r) => {
            let s = sum_sq(&r);
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// DE/rand/1/bin over the box. Deterministic for a given seed.
pub fn differential_evolution<F>(f: &F, bounds: &[Bounds], settings: &DeSettings) -> Minimum
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dim = bounds.len();
    let np = settings.population.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut evaluations = 0;
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|b| rng.gen_range(b.lo..=b.hi)).collect())
        .collect();
    let mut cost: Vec<f64> = pop.iter().map(|x| objective(f, x, &mut evaluations)).collect();
    for _ in 0..settings.generations {
        for i in 0..np {
            let mut pick = || loop {
                let j = rng.gen_range(0..np);
                if j != i {
                    break j;
                }
            };
            let (a, mut b, mut c) = (pick(), pick(), pick());
            while b == a {
                b = pick();
            }
            while c == a || c == b {
                c = pick();
            }
            let forced = rng.gen_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|k| {
                    if k == forced || rng.gen::<f64>() < settings.crossover {
                        let v = pop[a][k] + settings.weight * (pop[b][k] - pop[c][k]);
                        // reflect back into the box
                        let bd = bounds[k];
                        if v < bd.lo {
                            bd.clamp(bd.lo + (bd.lo - v).min(bd.hi - bd.lo) * rng.gen::<f64>())
                        } else if v > bd.hi {
                            bd.clamp(bd.hi - (v - bd.hi).min(bd.hi - bd.lo) * rng.gen::<f64>())
                        } else {
                            v
                        }
                    } else {
                        pop[i][k]
                    }
                })
                .collect();
            let t = objective(f, &trial, &mut evaluations);
            if t <= cost[i] {
                pop[i] = trial;
                cost[i] = t;
            }
        }
    }
    let best = (0..np).min_by(|&a, &b| cost[a].total_cmp(&cost[b])).expect("population");
    Minimum {
        x: pop[best].clone(),
        objective: cost[best],
        evaluations,
        iterations: settings.generations,
        converged: cost[best].is_finite(),
    }
}

fn jacobian<F>(f: &F, x: &[f64], bounds: &[Bounds], bump: f64, count: &mut usize) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let h = bump * x[k].abs().max(1e-3);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[k] = (x[k] + h).min(bounds[k].hi);
        dn[k] = (x[k] - h).max(bounds[k].lo);
        let span = up[k] - dn[k];
        *count += 2;
        let ru = f(&up)?;
        let rd = f(&dn)?;
        cols.push(ru.iter().zip(&rd).map(|(a, b)| (a - b) / span).collect());
    }
    Ok(cols)
}

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Levenberg-Marquardt from `x0`, projected onto the box.
pub fn levenberg_marquardt<F>(f: &F, x0: &[f64], bounds: &[Bounds], settings: &LmSettings) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(bounds).map(|(v, b)| b.clamp(*v)).collect();
    let mut evaluations = 1;
    let mut r = f(&x)?;
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        let Ok(jac) = jacobian(f, &x, bounds, settings.bump, &mut evaluations) else {
            break;
        };
        let jtj: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| jac[a].iter().zip(&jac[b]).map(|(p, q)| p * q).sum()).collect())
            .collect();
        let jtr: Vec<f64> = (0..n).map(|a| jac[a].iter().zip(&r).map(|(p, q)| p * q).sum()).collect();
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for k in 0..n {
                m[k][k] += lambda * jtj[k][k].max(1e-30);
            }
            let Some(step) = solve_dense(m, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(&step).zip(bounds).map(|((v, s), b)| b.clamp(v + s)).collect();
            let moved: f64 = trial.iter().zip(&x).map(|(a, b)| ((a - b) / b.abs().max(1e-3)).powi(2)).sum::<f64>().sqrt();
            evaluations += 1;
            let rt = match f(&trial) {
                Ok(rt) if sum_sq(&rt).is_finite() => rt,
                _ => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let ct = sum_sq(&rt);
            if ct <= cost {
                let rel = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                small_step = moved < settings.step_tol || rel < settings.objective_tol;
                break;
            }
            if moved < settings.step_tol {
                small_step = true;
                break;
            }
            lambda *= 4.0;
        }
        if small_step || cost == 0.0 {
            converged = true;
            break;
        }
        if !accepted {
            break;
        }
    }
    Ok(Minimum {
        x,
        objective: cost,
        evaluations,
        iterations,
        converged,
    })
}
