//! Grids, density scenes, observation sets and unit conventions.

use serde::{Deserialize, Serialize};

use crate::error::{GravError, Result};
use crate::summation::Prism;

pub type Vec3 = [f64; 3];

/// Gravitational constant that reproduces the reference quadrature norms of
/// the synthetic benchmark (CODATA 2006).
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_28e-11;

/// 1 mGal = 1e-5 m/s².
pub const MGAL_PER_SI: f64 = 1.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub g: f64,
}

impl PhysicalConstants {
    pub fn new(g: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(GravError::InvalidArgument(format!(
                "gravitational constant must be positive, got {g}"
            )));
        }
        Ok(Self { g })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: GRAVITATIONAL_CONSTANT,
        }
    }
}

pub fn si_to_mgal(a: f64) -> f64 {
    a * MGAL_PER_SI
}

/// Axis-aligned brick split into `cells[0] x cells[1] x cells[2]` hexahedra.
///
/// Cells and nodes are numbered with `x` varying fastest, then `y`, then `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredGrid {
    origin: Vec3,
    lengths: Vec3,
    cells: [usize; 3],
}

pub fn build_grid(origin: Vec3, lengths: Vec3, counts: [usize; 3]) -> Result<StructuredGrid> {
    StructuredGrid::new(origin, lengths, counts)
}

impl StructuredGrid {
    pub fn new(origin: Vec3, lengths: Vec3, cells: [usize; 3]) -> Result<Self> {
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(GravError::InvalidArgument(format!(
                "grid origin must be finite, got {origin:?}"
            )));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(GravError::InvalidArgument(format!(
                "grid extents must be positive, got {lengths:?}"
            )));
        }
        if cells.contains(&0) {
            return Err(GravError::InvalidArgument(format!(
                "cell counts must be at least 1, got {cells:?}"
            )));
        }
        Ok(Self {
            origin,
            lengths,
            cells,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn lengths(&self) -> Vec3 {
        self.lengths
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn nodes(&self) -> [usize; 3] {
        [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1]
    }

    pub fn spacing(&self) -> Vec3 {
        [
            self.lengths[0] / self.cells[0] as f64,
            self.lengths[1] / self.cells[1] as f64,
            self.lengths[2] / self.cells[2] as f64,
        ]
    }

    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    pub fn node_count(&self) -> usize {
        let n = self.nodes();
        n[0] * n[1] * n[2]
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1] * self.lengths[2]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells[0] * (j + self.cells[1] * k)
    }

    #[inline]
    pub fn cell_ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.cells[0];
        let rest = idx / self.cells[0];
        [i, rest % self.cells[1], rest / self.cells[1]]
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.nodes();
        i + n[0] * (j + n[1] * k)
    }

    #[inline]
    pub fn node_ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.nodes();
        let i = idx % n[0];
        let rest = idx / n[0];
        [i, rest % n[1], rest / n[1]]
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.spacing();
        [
            self.origin[0] + i as f64 * h[0],
            self.origin[1] + j as f64 * h[1],
            self.origin[2] + k as f64 * h[2],
        ]
    }

    pub fn is_boundary_node(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || j == 0
            || k == 0
            || i == self.cells[0]
            || j == self.cells[1]
            || k == self.cells[2]
    }

    /// Lower and upper corner of cell `(i, j, k)`.
    pub fn cell_bounds(&self, i: usize, j: usize, k: usize) -> (Vec3, Vec3) {
        (self.node_position(i, j, k), self.node_position(i + 1, j + 1, k + 1))
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.spacing();
        [
            self.origin[0] + (i as f64 + 0.5) * h[0],
            self.origin[1] + (j as f64 + 0.5) * h[1],
            self.origin[2] + (k as f64 + 0.5) * h[2],
        ]
    }

    /// Centroids of all cells in linear cell order.
    pub fn cell_centers(&self) -> Vec<Vec3> {
        (0..self.cell_count())
            .map(|c| {
                let [i, j, k] = self.cell_ijk(c);
                self.cell_center(i, j, k)
            })
            .collect()
    }

    /// Upper corner of the brick.
    pub fn upper(&self) -> Vec3 {
        [
            self.origin[0] + self.lengths[0],
            self.origin[1] + self.lengths[1],
            self.origin[2] + self.lengths[2],
        ]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let hi = self.upper();
        (0..3).all(|a| p[a] >= self.origin[a] && p[a] <= hi[a])
    }

    /// Cell containing `p`; points on shared faces go to the upper cell,
    /// points on the outer faces to the adjacent boundary cell.
    pub fn locate_cell(&self, p: Vec3) -> Option<[usize; 3]> {
        if !self.contains(p) {
            return None;
        }
        let h = self.spacing();
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let t = ((p[a] - self.origin[a]) / h[a]).floor();
            ijk[a] = (t.max(0.0) as usize).min(self.cells[a] - 1);
        }
        Some(ijk)
    }

    /// Same brick with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            origin: self.origin,
            lengths: self.lengths,
            cells: [
                self.cells[0] * factor,
                self.cells[1] * factor,
                self.cells[2] * factor,
            ],
        }
    }

    /// Same brick with every cell count divided by `factor`, if exact.
    pub fn coarsened(&self, factor: usize) -> Option<Self> {
        if self.cells.iter().any(|&c| c % factor != 0 || c / factor == 0) {
            return None;
        }
        Some(Self {
            origin: self.origin,
            lengths: self.lengths,
            cells: [
                self.cells[0] / factor,
                self.cells[1] / factor,
                self.cells[2] / factor,
            ],
        })
    }
}

/// A structured grid with one constant density per cell (kg/m³).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityScene {
    grid: StructuredGrid,
    density: Vec<f64>,
}

impl DensityScene {
    pub fn new(grid: StructuredGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.cell_count() {
            return Err(GravError::SizeMismatch {
                expected: grid.cell_count(),
                got: density.len(),
            });
        }
        if let Some(bad) = density.iter().position(|d| !d.is_finite()) {
            return Err(GravError::InvalidArgument(format!(
                "density of cell {bad} is not finite"
            )));
        }
        Ok(Self { grid, density })
    }

    pub fn zeros(grid: StructuredGrid) -> Self {
        let n = grid.cell_count();
        Self {
            grid,
            density: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Cells with nonzero density, in linear order.
    pub fn massive_cells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.density
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, rho)| *rho != 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Mass-weighted centroid of the anomaly, `None` when the scene carries no mass.
    pub fn mass_centroid(&self) -> Option<Vec3> {
        let mut acc = [0.0; 3];
        let mut mass = 0.0;
        for (c, rho) in self.massive_cells() {
            let [i, j, k] = self.grid.cell_ijk(c);
            let x = self.grid.cell_center(i, j, k);
            for a in 0..3 {
                acc[a] += rho * x[a];
            }
            mass += rho;
        }
        if mass == 0.0 {
            None
        } else {
            Some([acc[0] / mass, acc[1] / mass, acc[2] / mass])
        }
    }

    /// One uniform prism per nonzero cell.
    pub fn prisms(&self) -> Vec<Prism> {
        self.massive_cells()
            .map(|(c, rho)| {
                let [i, j, k] = self.grid.cell_ijk(c);
                let (lo, hi) = self.grid.cell_bounds(i, j, k);
                Prism::new_unchecked(lo, hi, rho)
            })
            .collect()
    }

    pub fn with_density(&self, density: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), density)
    }
}

/// The cubic benchmark: a dense cube centered in a cubic void domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    /// Center of both the domain and the anomaly.
    pub center: Vec3,
    pub domain_side: f64,
    pub anomaly_side: f64,
    pub density: f64,
}

impl Default for SyntheticScene {
    fn default() -> Self {
        Self {
            center: [300.0, 300.0, -150.0],
            domain_side: 600.0,
            anomaly_side: 100.0,
            density: 2000.0,
        }
    }
}

impl SyntheticScene {
    /// Same anomaly inside a domain of side `ratio * anomaly_side`.
    pub fn with_aspect_ratio(ratio: f64) -> Self {
        let base = Self::default();
        Self {
            domain_side: ratio * base.anomaly_side,
            ..base
        }
    }

    pub fn origin(&self) -> Vec3 {
        let half = 0.5 * self.domain_side;
        [
            self.center[0] - half,
            self.center[1] - half,
            self.center[2] - half,
        ]
    }

    pub fn anomaly(&self) -> Prism {
        let half = 0.5 * self.anomaly_side;
        Prism::new_unchecked(
            [
                self.center[0] - half,
                self.center[1] - half,
                self.center[2] - half,
            ],
            [
                self.center[0] + half,
                self.center[1] + half,
                self.center[2] + half,
            ],
            self.density,
        )
    }

    pub fn grid(&self, cells_per_axis: usize) -> Result<StructuredGrid> {
        StructuredGrid::new(
            self.origin(),
            [self.domain_side; 3],
            [cells_per_axis; 3],
        )
    }

    /// Whether the anomaly faces coincide with cell faces at this resolution.
    pub fn is_exactly_resolved(&self, cells_per_axis: usize) -> bool {
        let h = self.domain_side / cells_per_axis as f64;
        let offset = 0.5 * (self.domain_side - self.anomaly_side) / h;
        let width = self.anomaly_side / h;
        let near_int = |v: f64| (v - v.round()).abs() < 1e-9;
        near_int(offset) && near_int(width)
    }

    /// Voxelizes the anomaly; cell density is `density * overlap / cell volume`,
    /// which is exactly `density` or `0` when the anomaly is resolved.
    pub fn build(&self, cells_per_axis: usize) -> Result<DensityScene> {
        if cells_per_axis == 0 {
            return Err(GravError::InvalidArgument(
                "cells per axis must be positive".into(),
            ));
        }
        let grid = self.grid(cells_per_axis)?;
        let anomaly = self.anomaly();
        let h = grid.spacing();
        let overlap_1d = |a: usize, idx: usize| -> f64 {
            let lo = grid.origin()[a] + idx as f64 * h[a];
            let hi = lo + h[a];
            let o = hi.min(anomaly.upper[a]) - lo.max(anomaly.lower[a]);
            (o.max(0.0) / h[a]).clamp(0.0, 1.0)
        };
        let n = cells_per_axis;
        let fx: Vec<f64> = (0..n).map(|i| overlap_1d(0, i)).collect();
        let fy: Vec<f64> = (0..n).map(|j| overlap_1d(1, j)).collect();
        let fz: Vec<f64> = (0..n).map(|k| overlap_1d(2, k)).collect();
        let mut density = vec![0.0; grid.cell_count()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let frac = fx[i] * fy[j] * fz[k];
                    if frac > 0.0 {
                        density[grid.cell_index(i, j, k)] = self.density * frac;
                    }
                }
            }
        }
        DensityScene::new(grid, density)
    }
}

/// The 600 m benchmark cube discretized with `cells_per_axis` cells per
/// axis; the count must be a multiple of 6.
pub fn build_synthetic_scene(cells_per_axis: usize) -> Result<DensityScene> {
    if cells_per_axis == 0 || !cells_per_axis.is_multiple_of(6) {
        return Err(GravError::InvalidArgument(format!(
            "synthetic scene needs a positive multiple of 6 cells per axis, got {cells_per_axis}"
        )));
    }
    SyntheticScene::default().build(cells_per_axis)
}

/// Ordered observation points (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSet {
    points: Vec<Vec3>,
}

impl EvaluationSet {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(GravError::InvalidArgument(
                "evaluation set must not be empty".into(),
            ));
        }
        if let Some(bad) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(GravError::InvalidArgument(format!(
                "evaluation point {bad} is not finite"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All cell centroids of a grid, in cell order.
    pub fn cell_centroids(grid: &StructuredGrid) -> Self {
        Self {
            points: grid.cell_centers(),
        }
    }
}

/// Regular `nx x ny` stations over the grid's horizontal extent, `x` varying
/// fastest. With a single station on an axis it sits at the axis midpoint.
/// `elevation` defaults to the top of the grid.
pub fn surface_observation_grid(
    grid: &StructuredGrid,
    nx: usize,
    ny: usize,
    elevation: Option<f64>,
    include_edges: bool,
) -> Result<EvaluationSet> {
    if nx == 0 || ny == 0 {
        return Err(GravError::InvalidArgument(format!(
            "station counts must be positive, got {nx}x{ny}"
        )));
    }
    let z = elevation.unwrap_or(grid.upper()[2]);
    let axis = |a: usize, n: usize| -> Vec<f64> {
        let lo = grid.origin()[a];
        let len = grid.lengths()[a];
        (0..n)
            .map(|i| {
                if n == 1 {
                    lo + 0.5 * len
                } else if include_edges {
                    lo + len * i as f64 / (n - 1) as f64
                } else {
                    lo + len * (i as f64 + 0.5) / n as f64
                }
            })
            .collect()
    };
    let xs = axis(0, nx);
    let ys = axis(1, ny);
    let mut points = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            points.push([x, y, z]);
        }
    }
    EvaluationSet::new(points)
}

/// Which gravity components a result carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentMask {
    All,
    ZOnly,
}

/// Per-point gravity samples (m/s²), aligned with the evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityResult {
    pub values: Vec<Vec3>,
    pub mask: ComponentMask,
}

impl GravityResult {
    pub fn new(values: Vec<Vec3>, mask: ComponentMask) -> Self {
        Self { values, mask }
    }

    pub fn z_only(gz: Vec<f64>) -> Self {
        Self {
            values: gz.into_iter().map(|z| [0.0, 0.0, z]).collect(),
            mask: ComponentMask::ZOnly,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gz(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[2]).collect()
    }

    pub fn gz_mgal(&self) -> Vec<f64> {
        self.values.iter().map(|v| si_to_mgal(v[2])).collect()
    }
}
