//! Central finite-difference discretization of the Heston generator on a
//! uniform grid, assembled as a sparse matrix.

use crate::model::{HestonParams, MarketConvention};

use super::grid::PdeGrid;

/// Sparse row-compressed operator: `(L f)_k = sum_e value[e] f[col[e]]`.
#[derive(Debug, Clone)]
pub struct HestonOperator {
    row_start: Vec<usize>,
    col: Vec<u32>,
    value: Vec<f64>,
}

struct RowBuilder<'a> {
    grid: &'a PdeGrid,
    entries: Vec<(usize, f64)>,
}

impl RowBuilder<'_> {
    /// Adds `c * f(i, j)`, resolving ghost nodes beyond `x_max` / `v_max` by
    /// linear extrapolation.
    fn add(&mut self, i: usize, j: usize, c: f64) {
        let m = self.grid.m();
        let l = self.grid.l();
        if i == m + 1 {
            self.add(m, j, 2.0 * c);
            self.add(m - 1, j, -c);
            return;
        }
        if j == l + 1 {
            self.add(i, l, 2.0 * c);
            self.add(i, l - 1, -c);
            return;
        }
        let k = self.grid.index(i, j);
        match self.entries.iter_mut().find(|(col, _)| *col == k) {
            Some(e) => e.1 += c,
            None => self.entries.push((k, c)),
        }
    }
}

impl HestonOperator {
    /// Spatial operator of the backward equation in time to maturity:
    /// `df/dtau = L f`.
    ///
    /// Boundaries: at `x = 0` only the variance terms survive; at `v = 0` the
    /// diffusion vanishes and the drift `kappa theta df/dv` is upwinded with a
    /// second-order forward difference; at `x_max` and `v_max` ghost nodes
    /// extend the solution linearly.
    pub fn new(grid: &PdeGrid, params: &HestonParams, conv: &MarketConvention) -> Self {
        let (m, l) = (grid.m(), grid.l());
        let dx = grid.dx();
        let dv = grid.dv();
        let mu = conv.r - conv.q;
        let mut row_start = Vec::with_capacity(grid.node_count() + 1);
        let mut col = Vec::with_capacity(grid.node_count() * 10);
        let mut value = Vec::with_capacity(grid.node_count() * 10);
        row_start.push(0);
        for i in 0..=m {
            let x = grid.x_nodes[i];
            for j in 0..=l {
                let v = grid.v_nodes[j];
                let mut row = RowBuilder {
                    grid,
                    entries: Vec::with_capacity(12),
                };
                row.add(i, j, -conv.r_c);
                if j == 0 {
                    // kappa theta f_v, forward second-order difference.
                    let e = params.kappa * params.theta / (2.0 * dv);
                    row.add(i, 0, -3.0 * e);
                    row.add(i, 1, 4.0 * e);
                    row.add(i, 2, -e);
                    if i > 0 && mu != 0.0 {
                        let d = mu * x / (2.0 * dx);
                        row.add(i + 1, 0, d);
                        row.add(i - 1, 0, -d);
                    }
                } else {
                    let cv = 0.5 * params.sigma * params.sigma * v / (dv * dv);
                    row.add(i, j + 1, cv);
                    row.add(i, j, -2.0 * cv);
                    row.add(i, j - 1, cv);
                    let e = params.kappa * (params.theta - v) / (2.0 * dv);
                    row.add(i, j + 1, e);
                    row.add(i, j - 1, -e);
                    if i > 0 {
                        let a = 0.5 * v * x * x / (dx * dx);
                        row.add(i + 1, j, a);
                        row.add(i, j, -2.0 * a);
                        row.add(i - 1, j, a);
                        if mu != 0.0 {
                            let d = mu * x / (2.0 * dx);
                            row.add(i + 1, j, d);
                            row.add(i - 1, j, -d);
                        }
                        let b = params.rho * params.sigma * x * v / (4.0 * dx * dv);
                        row.add(i + 1, j + 1, b);
                        row.add(i + 1, j - 1, -b);
                        row.add(i - 1, j + 1, -b);
                        row.add(i - 1, j - 1, b);
                    }
                }
                let mut entries = row.entries;
                entries.retain(|(_, c)| *c != 0.0);
                entries.sort_by_key(|(k, _)| *k);
                for (k, c) in entries {
                    col.push(k as u32);
                    value.push(c);
                }
                row_start.push(col.len());
            }
        }
        Self { row_start, col, value }
    }

    pub fn rows(&self) -> usize {
        self.row_start.len() - 1
    }

    /// Gershgorin bound on the spectral radius: the largest absolute row sum.
    pub fn spectral_radius_bound(&self) -> f64 {
        (0..self.rows())
            .map(|r| self.value[self.row_start[r]..self.row_start[r + 1]].iter().map(|c| c.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out = L f` for `ns` interleaved surfaces (node-major layout).
    pub fn apply(&self, f: &[f64], out: &mut [f64], ns: usize) {
        debug_assert_eq!(f.len(), self.rows() * ns);
        debug_assert_eq!(out.len(), f.len());
        for r in 0..self.rows() {
            let dst = &mut out[r * ns..(r + 1) * ns];
            dst.iter_mut().for_each(|x| *x = 0.0);
            for e in self.row_start[r]..self.row_start[r + 1] {
                let c = self.value[e];
                let k = self.col[e] as usize;
                let src = &f[k * ns..(k + 1) * ns];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }

    /// Row sums; zero when constants are preserved.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|r| self.value[self.row_start[r]..self.row_start[r + 1]].iter().sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset;
    use crate::pde::grid::build_grid;

    fn setup() -> (PdeGrid, HestonOperator) {
        let p = preset("set2").unwrap();
        let c = MarketConvention::default();
        let g = build_grid(&p, &c, 12, 16, 25, 100.0).unwrap();
        let op = HestonOperator::new(&g, &p, &c);
        (g, op)
    }

    #[test]
    fn annihilates_constants_and_linear_in_x() {
        let (g, op) = setup();
        for s in op.row_sums() {
            assert!(s.abs() < 1e-9);
        }
        let ns = 1;
        let f: Vec<f64> = (0..g.node_count()).map(|k| g.x_nodes[k / g.v_nodes.len()]).collect();
        let mut out = vec![0.0; f.len() * ns];
        op.apply(&f, &mut out, ns);
        let scale = g.x_max();
        for v in out {
            assert!(v.abs() < 1e-9 * scale, "{v}");
        }
    }

    #[test]
    fn interleaved_surfaces_match_single() {
        let (g, op) = setup();
        let n = g.node_count();
        let a: Vec<f64> = (0..n).map(|k| ((k * 7) % 13) as f64).collect();
        let b: Vec<f64> = (0..n).map(|k| ((k * 3) % 5) as f64 - 2.0).collect();
        let mut both = vec![0.0; 2 * n];
        for k in 0..n {
            both[2 * k] = a[k];
            both[2 * k + 1] = b[k];
        }
        let mut out2 = vec![0.0; 2 * n];
        op.apply(&both, &mut out2, 2);
        let mut outa = vec![0.0; n];
        op.apply(&a, &mut outa, 1);
        for k in 0..n {
            assert_eq!(out2[2 * k], outa[k]);
        }
    }

    #[test]
    fn spectral_bound_positive() {
        let (_, op) = setup();
        assert!(op.spectral_radius_bound() > 0.0);
    }
}
