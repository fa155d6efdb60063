//! Gravity from the Q1 potential: `g = -grad phi`.

use super::{ElementGravityField, PotentialField};
use crate::error::{GravError, Result};
use crate::metrics::DiscreteFieldView;
use crate::model::{EvaluationSet, Vec3};

impl PotentialField {
    /// Nodal values of the 8 corners of cell `(i, j, k)`, local order
    /// `a = ax + 2 ay + 4 az`.
    fn corners(&self, i: usize, j: usize, k: usize) -> [f64; 8] {
        std::array::from_fn(|a| self.phi[self.grid.node_index(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1))])
    }

    /// `-grad` of the trilinear interpolant in cell `(i, j, k)` at local
    /// coordinates `t` in `[0, 1]³`.
    pub fn gravity_in_cell(&self, ijk: [usize; 3], t: Vec3) -> Vec3 {
        let c = self.corners(ijk[0], ijk[1], ijk[2]);
        let h = self.grid.spacing();
        let mut g = [0.0; 3];
        for (a, &phi) in c.iter().enumerate() {
            let bits = [a & 1, (a >> 1) & 1, (a >> 2) & 1];
            let w: [f64; 3] = std::array::from_fn(|d| if bits[d] == 1 { t[d] } else { 1.0 - t[d] });
            let s: [f64; 3] = std::array::from_fn(|d| if bits[d] == 1 { 1.0 } else { -1.0 });
            g[0] -= phi * s[0] * w[1] * w[2] / h[0];
            g[1] -= phi * w[0] * s[1] * w[2] / h[1];
            g[2] -= phi * w[0] * w[1] * s[2] / h[2];
        }
        g
    }

    /// Gravity at arbitrary points inside (or on the boundary of) the grid.
    pub fn gravity_at(&self, evals: &EvaluationSet) -> Result<Vec<Vec3>> {
        let h = self.grid.spacing();
        let o = self.grid.origin();
        evals
            .points()
            .iter()
            .map(|&p| {
                let tol = 1e-9 * h.iter().fold(0.0f64, |a, &b| a.max(b));
                let up = self.grid.upper();
                if (0..3).any(|d| p[d] < o[d] - tol || p[d] > up[d] + tol) {
                    return Err(GravError::InvalidArgument(format!("point {p:?} lies outside the mesh")));
                }
                let ijk = self.grid.locate_cell(p).expect("point checked inside");
                let t: Vec3 =
                    std::array::from_fn(|d| ((p[d] - o[d]) / h[d] - ijk[d] as f64).clamp(0.0, 1.0));
                Ok(self.gravity_in_cell(ijk, t))
            })
            .collect()
    }

    /// Per-cell `g_z` written as `a0 + a1 s + a2 t + a3 s t` over the cell's
    /// horizontal local coordinates (Q1 makes `d phi / dz` bilinear in x, y).
    pub fn gz_bilinear(&self) -> DiscreteFieldView {
        let hz = self.grid.spacing()[2];
        let coeffs = (0..self.grid.cell_count())
            .map(|c| {
                let [i, j, k] = self.grid.cell_ijk(c);
                let v = self.corners(i, j, k);
                let d: [f64; 4] = std::array::from_fn(|a| -(v[a + 4] - v[a]) / hz);
                [d[0], d[1] - d[0], d[2] - d[0], d[3] - d[2] - d[1] + d[0]]
            })
            .collect();
        DiscreteFieldView::BilinearPerCell(coeffs)
    }
}

/// Gradient of the Q1 interpolant at each cell centroid.
pub fn element_gravity(potential: &PotentialField) -> ElementGravityField {
    let grid = potential.grid.clone();
    let g = (0..grid.cell_count())
        .map(|c| potential.gravity_in_cell(grid.cell_ijk(c), [0.5; 3]))
        .collect();
    ElementGravityField { grid, g }
}

impl ElementGravityField {
    pub fn gz(&self) -> Vec<f64> {
        self.g.iter().map(|v| v[2]).collect()
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}
