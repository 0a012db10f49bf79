use crate::replication::StrikeGrid;

use super::grid::PdeGrid;

/// `2n` option-value surfaces over the grid: calls at `strikes` first, then
/// puts. Stored node-major so one node's values are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffStack {
    strikes: StrikeGrid,
    nodes: usize,
    values: Vec<f64>,
}

impl PayoffStack {
    pub fn zeros(strikes: StrikeGrid, nodes: usize) -> Self {
        let width = 2 * strikes.len();
        Self {
            strikes,
            nodes,
            values: vec![0.0; nodes * width],
        }
    }

    pub fn strikes(&self) -> &StrikeGrid {
        &self.strikes
    }

    /// Number of strikes `n`.
    pub fn n(&self) -> usize {
        self.strikes.len()
    }

    pub fn surface_count(&self) -> usize {
        2 * self.n()
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// The `2n` values at one node: calls then puts.
    pub fn node(&self, k: usize) -> &[f64] {
        let w = self.surface_count();
        &self.values[k * w..(k + 1) * w]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        let w = self.surface_count();
        &mut self.values[k * w..(k + 1) * w]
    }

    pub fn call(&self, k: usize, i: usize) -> f64 {
        self.node(k)[i]
    }

    pub fn put(&self, k: usize, i: usize) -> f64 {
        self.node(k)[self.n() + i]
    }

    /// Surface `s` as a node-indexed vector.
    pub fn surface(&self, s: usize) -> Vec<f64> {
        let w = self.surface_count();
        self.values.iter().skip(s).step_by(w).copied().collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Sets every node to the payoffs of calls and puts struck at `strikes`
    /// on the node's underlying level `levels[k]`.
    pub fn set_intrinsic(&mut self, levels: &[f64]) {
        let n = self.n();
        let strikes = self.strikes.strikes().to_vec();
        for (k, &x) in levels.iter().enumerate() {
            let node = self.node_mut(k);
            for (i, &strike) in strikes.iter().enumerate() {
                node[i] = (x - strike).max(0.0);
                node[n + i] = (strike - x).max(0.0);
            }
        }
    }
}

/// Call and put payoffs on the SPX strikes at every node.
pub fn apply_initial_condition(grid: &PdeGrid, spx_strikes: &StrikeGrid) -> PayoffStack {
    let mut stack = PayoffStack::zeros(spx_strikes.clone(), grid.node_count());
    let levels: Vec<f64> = (0..grid.node_count()).map(|k| grid.x_nodes[k / grid.v_nodes.len()]).collect();
    stack.set_intrinsic(&levels);
    stack
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, MarketConvention};
    use crate::pde::grid::build_grid;

    #[test]
    fn intrinsic_values() {
        let p = preset("set1").unwrap();
        let g = build_grid(&p, &MarketConvention::default(), 8, 8, 4, 100.0).unwrap();
        let strikes = StrikeGrid::new(vec![g.x_nodes[2], g.x_nodes[4], g.x_nodes[5]]).unwrap();
        let s = apply_initial_condition(&g, &strikes);
        // x = 0 row
        for j in 0..g.v_nodes.len() {
            let k = g.index(0, j);
            assert_eq!(s.call(k, 0), 0.0);
            assert_eq!(s.put(k, 1), strikes.strikes()[1]);
        }
        let k = g.index(4, 3);
        assert_eq!(s.call(k, 1), 0.0);
        assert_eq!(s.put(k, 1), 0.0);
        for k in 0..g.node_count() {
            let x = g.x_nodes[k / g.v_nodes.len()];
            for (i, strike) in strikes.strikes().iter().enumerate() {
                assert!((s.call(k, i) - s.put(k, i) - (x - strike)).abs() < 1e-12);
            }
        }
        assert_eq!(s.surface(1).len(), g.node_count());
    }
}
