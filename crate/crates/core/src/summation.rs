//! Direct summation forward models.
//!
//! `sum-an` adds the closed-form vertical attraction of every dense cell
//! treated as a uniform prism. `sum-g1` / `sum-g2` approximate each cell's
//! volume integral with a 1- or 2-point (per axis) Gauss rule, either on
//! general hexahedra through the reference-cell Jacobian or, for the `z`
//! component only, on the axis-aligned fast path.
//!
//! Every evaluation point is reduced sequentially over cells in linear cell
//! order, so results are deterministic for any thread count.

use rayon::prelude::*;

use crate::error::{GravError, Result};
use crate::model::{ComponentMask, DensityScene, EvaluationSet, GravityResult, PhysicalConstants, Vec3};
use crate::quadrature::gauss_legendre;

/// Uniform rectangular prism `[lower, upper]` with density `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prism {
    pub lower: Vec3,
    pub upper: Vec3,
    pub rho: f64,
}

impl Prism {
    pub fn new(lower: Vec3, upper: Vec3, rho: f64) -> Result<Self> {
        if (0..3).any(|a| !(lower[a] < upper[a])) {
            return Err(GravError::InvalidArgument(format!(
                "prism bounds must satisfy lower < upper, got {lower:?} .. {upper:?}"
            )));
        }
        if !rho.is_finite() {
            return Err(GravError::InvalidArgument("prism density must be finite".into()));
        }
        Ok(Self { lower, upper, rho })
    }

    pub(crate) fn new_unchecked(lower: Vec3, upper: Vec3, rho: f64) -> Self {
        Self { lower, upper, rho }
    }

    pub fn center(&self) -> Vec3 {
        [
            0.5 * (self.lower[0] + self.upper[0]),
            0.5 * (self.lower[1] + self.upper[1]),
            0.5 * (self.lower[2] + self.upper[2]),
        ]
    }

    pub fn volume(&self) -> f64 {
        (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1]) * (self.upper[2] - self.lower[2])
    }

    pub fn mass(&self) -> f64 {
        self.rho * self.volume()
    }

    fn min_side(&self) -> f64 {
        (0..3)
            .map(|a| self.upper[a] - self.lower[a])
            .fold(f64::INFINITY, f64::min)
    }
}

/// `a * ln(b + r)` with the `a = 0` limit and without cancellation for `b < 0`.
#[inline]
fn x_log(a: f64, b: f64, c: f64, r: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b >= 0.0 {
        a * (b + r).ln()
    } else {
        // b + r = (a² + c²) / (r - b)
        a * ((a * a + c * c) / (r - b)).ln()
    }
}

#[inline]
fn corner_term(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    let atan = if z == 0.0 { 0.0 } else { z * (x * y / (z * r)).atan() };
    x_log(x, y, z, r) + x_log(y, x, z, r) - atan
}

fn prism_sum(prism: &Prism, p: Vec3) -> Option<f64> {
    let xs = [prism.lower[0] - p[0], prism.upper[0] - p[0]];
    let ys = [prism.lower[1] - p[1], prism.upper[1] - p[1]];
    let zs = [prism.lower[2] - p[2], prism.upper[2] - p[2]];
    let mut total = 0.0;
    for (k, &z) in zs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                if x == 0.0 && y == 0.0 && z == 0.0 {
                    return None;
                }
                let t = corner_term(x, y, z);
                if (i + j + k) % 2 == 0 {
                    total += t;
                } else {
                    total -= t;
                }
            }
        }
    }
    Some(total)
}

/// Vertical attraction of a uniform prism (m/s², downward positive), plus
/// whether the station had to be nudged off a prism corner.
pub fn prism_gz_diagnosed(prism: &Prism, point: Vec3, constants: &PhysicalConstants) -> Result<(f64, bool)> {
    if prism.rho == 0.0 {
        return Ok((0.0, false));
    }
    let (sum, nudged) = match prism_sum(prism, point) {
        Some(s) => (s, false),
        None => {
            let d = 1e-9 * prism.min_side();
            let moved = [point[0] + d, point[1] + d, point[2] + d];
            log::debug!("station {point:?} sits on a prism corner; nudged by {d:e} m");
            let s = prism_sum(prism, moved).ok_or(GravError::SingularConfiguration { point, cell: None })?;
            (s, true)
        }
    };
    let gz = -constants.g * prism.rho * sum;
    if !gz.is_finite() {
        return Err(GravError::SingularConfiguration { point, cell: None });
    }
    Ok((gz, nudged))
}

/// Closed-form vertical attraction of a uniform prism (m/s², downward positive).
pub fn prism_gz(prism: &Prism, point: Vec3, constants: &PhysicalConstants) -> Result<f64> {
    prism_gz_diagnosed(prism, point, constants).map(|(gz, _)| gz)
}

/// `sum-an`: closed-form prism sum over all dense cells; `z` only.
pub fn sum_analytic(scene: &DensityScene, evals: &EvaluationSet, constants: &PhysicalConstants) -> Result<GravityResult> {
    sum_analytic_diagnosed(scene, evals, constants).map(|(r, _)| r)
}

/// Like [`sum_analytic`], also returning how many station/cell pairs were nudged.
pub fn sum_analytic_diagnosed(
    scene: &DensityScene,
    evals: &EvaluationSet,
    constants: &PhysicalConstants,
) -> Result<(GravityResult, usize)> {
    let cells: Vec<(usize, Prism)> = scene
        .massive_cells()
        .map(|(c, rho)| {
            let [i, j, k] = scene.grid().cell_ijk(c);
            let (lo, hi) = scene.grid().cell_bounds(i, j, k);
            (c, Prism::new_unchecked(lo, hi, rho))
        })
        .collect();
    sum_prisms(&cells, evals, constants)
}

/// Closed-form sum over an explicit prism list.
pub fn sum_prisms_gz(prisms: &[Prism], evals: &EvaluationSet, constants: &PhysicalConstants) -> Result<Vec<f64>> {
    let cells: Vec<(usize, Prism)> = prisms.iter().copied().enumerate().collect();
    sum_prisms(&cells, evals, constants).map(|(r, _)| r.gz())
}

fn sum_prisms(
    cells: &[(usize, Prism)],
    evals: &EvaluationSet,
    constants: &PhysicalConstants,
) -> Result<(GravityResult, usize)> {
    let per_point: Vec<Result<(f64, usize)>> = evals
        .points()
        .par_iter()
        .map(|&p| {
            let mut gz = 0.0;
            let mut nudged = 0;
            for (c, prism) in cells {
                let (v, n) = prism_gz_diagnosed(prism, p, constants).map_err(|e| match e {
                    GravError::SingularConfiguration { point, .. } => {
                        GravError::SingularConfiguration { point, cell: Some(*c) }
                    }
                    other => other,
                })?;
                gz += v;
                nudged += n as usize;
            }
            Ok((gz, nudged))
        })
        .collect();
    let mut gz = Vec::with_capacity(per_point.len());
    let mut nudged = 0;
    for r in per_point {
        let (g, n) = r?;
        gz.push(g);
        nudged += n;
    }
    Ok((GravityResult::z_only(gz), nudged))
}

/// Tensor Gauss rule on the reference hexahedron `[-1, 1]³`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(GravError::InvalidArgument(format!(
                "summation quadrature order must be 1 or 2, got {order}"
            )));
        }
        let (x, w) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * order * order);
        let mut weights = Vec::with_capacity(order * order * order);
        for (k, (z, wz)) in x.iter().zip(&w).enumerate() {
            let _ = k;
            for (y, wy) in x.iter().zip(&w) {
                for (xx, wx) in x.iter().zip(&w) {
                    points.push([*xx, *y, *z]);
                    weights.push(wx * wy * wz);
                }
            }
        }
        Ok(Self { order, points, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// How a source cell or source point treats a station sitting exactly on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfInteraction {
    /// Report a near-singularity error.
    #[default]
    Reject,
    /// Drop the contribution. For a centrally symmetric cell evaluated at its
    /// centroid the exact contribution is zero, so this is exact for cells.
    Exclude,
}

/// Hexahedral cell given by its 8 vertices, vertex `a = ax + 2 ay + 4 az`
/// sitting at reference corner `(2ax - 1, 2ay - 1, 2az - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexCell {
    pub vertices: [Vec3; 8],
}

impl HexCell {
    pub fn axis_aligned(lower: Vec3, upper: Vec3) -> Self {
        let mut vertices = [[0.0; 3]; 8];
        for (a, v) in vertices.iter_mut().enumerate() {
            for d in 0..3 {
                v[d] = if (a >> d) & 1 == 1 { upper[d] } else { lower[d] };
            }
        }
        Self { vertices }
    }

    /// Image of the cell under `x -> matrix * x + shift`.
    pub fn mapped(&self, matrix: [[f64; 3]; 3], shift: Vec3) -> Self {
        let mut vertices = self.vertices;
        for v in vertices.iter_mut() {
            let x = *v;
            for r in 0..3 {
                v[r] = matrix[r][0] * x[0] + matrix[r][1] * x[1] + matrix[r][2] * x[2] + shift[r];
            }
        }
        Self { vertices }
    }

    fn shape(xi: Vec3) -> [f64; 8] {
        let mut n = [0.0; 8];
        for (a, v) in n.iter_mut().enumerate() {
            let mut s = 0.125;
            for d in 0..3 {
                let sign = if (a >> d) & 1 == 1 { 1.0 } else { -1.0 };
                s *= 1.0 + sign * xi[d];
            }
            *v = s;
        }
        n
    }

    pub fn map(&self, xi: Vec3) -> Vec3 {
        let n = Self::shape(xi);
        let mut x = [0.0; 3];
        for (a, na) in n.iter().enumerate() {
            for d in 0..3 {
                x[d] += na * self.vertices[a][d];
            }
        }
        x
    }

    /// `J[r][c] = d x_r / d xi_c`.
    pub fn jacobian(&self, xi: Vec3) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        for a in 0..8 {
            let signs = [
                if a & 1 == 1 { 1.0 } else { -1.0 },
                if a & 2 == 2 { 1.0 } else { -1.0 },
                if a & 4 == 4 { 1.0 } else { -1.0 },
            ];
            for c in 0..3 {
                let mut d = 0.125 * signs[c];
                for o in 0..3 {
                    if o != c {
                        d *= 1.0 + signs[o] * xi[o];
                    }
                }
                for r in 0..3 {
                    j[r][c] += d * self.vertices[a][r];
                }
            }
        }
        j
    }

    pub fn centroid(&self) -> Vec3 {
        self.map([0.0; 3])
    }

    fn size(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max)
    }

    fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// True when the trilinear map is affine (the cell is a parallelepiped).
    pub fn is_affine(&self) -> bool {
        let o = self.vertices[0];
        let e = [
            sub(self.vertices[1], o),
            sub(self.vertices[2], o),
            sub(self.vertices[4], o),
        ];
        let tol = 1e-12 * self.size();
        (0..8).all(|a| {
            let mut x = o;
            for d in 0..3 {
                if (a >> d) & 1 == 1 {
                    x = add(x, e[d]);
                }
            }
            (0..3).all(|c| (x[c] - self.vertices[a][c]).abs() <= tol)
        })
    }

    /// Reference coordinates of `p` by Newton iteration on the trilinear map.
    fn inverse_map(&self, p: Vec3) -> Option<Vec3> {
        let mut xi = [0.0; 3];
        for _ in 0..30 {
            let x = self.map(xi);
            let r = sub(p, x);
            let j = self.jacobian(xi);
            let step = solve3(j, r)?;
            for d in 0..3 {
                xi[d] += step[d];
            }
            if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-14 {
                break;
            }
        }
        Some(xi)
    }

    /// Strictly interior points (faces excluded).
    pub fn contains_strictly(&self, p: Vec3) -> bool {
        let (lo, hi) = self.bbox();
        if (0..3).any(|d| p[d] <= lo[d] || p[d] >= hi[d]) {
            return false;
        }
        match self.inverse_map(p) {
            Some(xi) => xi.iter().all(|t| t.abs() < 1.0 - 1e-12),
            None => false,
        }
    }
}

#[inline]
fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], b: Vec3) -> Option<Vec3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        out[c] = det3(mc) / d;
    }
    Some(out)
}

/// Newtonian kernel contribution `coef * (p - x) / |p - x|³`.
#[inline]
pub(crate) fn point_kernel(coef: f64, p: Vec3, x: Vec3) -> Vec3 {
    let d = sub(p, x);
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let s = coef / (r2 * r2.sqrt());
    [s * d[0], s * d[1], s * d[2]]
}

#[inline]
pub(crate) fn point_kernel_z(coef: f64, p: Vec3, x: Vec3) -> f64 {
    let dx = p[0] - x[0];
    let dy = p[1] - x[1];
    let dz = p[2] - x[2];
    let r2 = dx * dx + dy * dy + dz * dz;
    coef / (r2 * r2.sqrt()) * dz
}

/// Quadrature approximation of one cell's gravity at `point` (m/s²).
pub fn cell_g_quadrature(
    cell: &HexCell,
    rho: f64,
    point: Vec3,
    rule: &QuadratureRule,
    constants: &PhysicalConstants,
    self_interaction: SelfInteraction,
) -> Result<Vec3> {
    cell_g_checked(cell, rho, point, rule, constants, self_interaction, 0)
}

fn cell_g_checked(
    cell: &HexCell,
    rho: f64,
    point: Vec3,
    rule: &QuadratureRule,
    constants: &PhysicalConstants,
    self_interaction: SelfInteraction,
    cell_index: usize,
) -> Result<Vec3> {
    if cell.contains_strictly(point) {
        let c = cell.centroid();
        let at_centroid = (0..3).all(|d| (point[d] - c[d]).abs() <= 1e-12 * cell.size());
        if self_interaction == SelfInteraction::Exclude && at_centroid && cell.is_affine() {
            return Ok([0.0; 3]);
        }
        return Err(GravError::NearSingularity { point, cell: cell_index });
    }
    let mut g = [0.0; 3];
    for (xi, w) in rule.points().iter().zip(rule.weights()) {
        let x = cell.map(*xi);
        let detj = det3(cell.jacobian(*xi)).abs();
        let k = point_kernel(constants.g * rho * w * detj, point, x);
        for d in 0..3 {
            g[d] += k[d];
        }
    }
    Ok(g)
}

/// `sum-g1` / `sum-g2` on an explicit list of (possibly deformed) cells.
pub fn sum_quadrature_cells(
    cells: &[(HexCell, f64)],
    evals: &EvaluationSet,
    rule: &QuadratureRule,
    constants: &PhysicalConstants,
    self_interaction: SelfInteraction,
) -> Result<GravityResult> {
    let out: Result<Vec<Vec3>> = evals
        .points()
        .par_iter()
        .map(|&p| {
            let mut g = [0.0; 3];
            for (c, (cell, rho)) in cells.iter().enumerate() {
                if *rho == 0.0 {
                    continue;
                }
                let v = cell_g_checked(cell, *rho, p, rule, constants, self_interaction, c)?;
                for d in 0..3 {
                    g[d] += v[d];
                }
            }
            Ok(g)
        })
        .collect();
    Ok(GravityResult::new(out?, ComponentMask::All))
}

/// Physical quadrature points of every dense axis-aligned cell as point
/// sources `(position, G * mass)`, grouped by cell.
pub(crate) struct QuadratureSources {
    pub cells: Vec<CellSources>,
}

pub(crate) struct CellSources {
    pub index: usize,
    pub lower: Vec3,
    pub upper: Vec3,
    pub centroid: Vec3,
    pub points: Vec<(Vec3, f64)>,
}

impl QuadratureSources {
    pub fn new(scene: &DensityScene, rule: &QuadratureRule, constants: &PhysicalConstants) -> Self {
        let grid = scene.grid();
        let h = grid.spacing();
        let volume = grid.cell_volume();
        let cells = scene
            .massive_cells()
            .map(|(c, rho)| {
                let [i, j, k] = grid.cell_ijk(c);
                let (lower, upper) = grid.cell_bounds(i, j, k);
                let centroid = grid.cell_center(i, j, k);
                let mass = rho * volume;
                let points = rule
                    .points()
                    .iter()
                    .zip(rule.weights())
                    .map(|(xi, w)| {
                        let x = [
                            centroid[0] + 0.5 * h[0] * xi[0],
                            centroid[1] + 0.5 * h[1] * xi[1],
                            centroid[2] + 0.5 * h[2] * xi[2],
                        ];
                        (x, constants.g * (mass * (w / 8.0)))
                    })
                    .collect();
                CellSources {
                    index: c,
                    lower,
                    upper,
                    centroid,
                    points,
                }
            })
            .collect();
        Self { cells }
    }
}

impl CellSources {
    /// `Ok(true)` when the cell must be skipped for station `p`.
    #[inline]
    fn check(&self, p: Vec3, self_interaction: SelfInteraction) -> Result<bool> {
        let inside = (0..3).all(|d| p[d] > self.lower[d] && p[d] < self.upper[d]);
        if !inside {
            return Ok(false);
        }
        if self_interaction == SelfInteraction::Exclude && p == self.centroid {
            return Ok(true);
        }
        Err(GravError::NearSingularity { point: p, cell: self.index })
    }
}

/// `sum-g1` / `sum-g2` on a structured scene.
///
/// With `z_only` the axis-aligned fast path computes `gz` only; otherwise
/// every cell goes through the general hexahedron path with its Jacobian.
pub fn sum_quadrature(
    scene: &DensityScene,
    evals: &EvaluationSet,
    rule: &QuadratureRule,
    z_only: bool,
    constants: &PhysicalConstants,
    self_interaction: SelfInteraction,
) -> Result<GravityResult> {
    if !z_only {
        let grid = scene.grid();
        let cells: Vec<(HexCell, f64)> = scene
            .massive_cells()
            .map(|(c, rho)| {
                let [i, j, k] = grid.cell_ijk(c);
                let (lo, hi) = grid.cell_bounds(i, j, k);
                (HexCell::axis_aligned(lo, hi), rho)
            })
            .collect();
        return sum_quadrature_cells(&cells, evals, rule, constants, self_interaction).map_err(|e| match e {
            GravError::NearSingularity { point, cell } => {
                let idx = scene.massive_cells().nth(cell).map(|(c, _)| c).unwrap_or(cell);
                GravError::NearSingularity { point, cell: idx }
            }
            other => other,
        });
    }
    let sources = QuadratureSources::new(scene, rule, constants);
    let out: Result<Vec<f64>> = evals
        .points()
        .par_iter()
        .map(|&p| {
            let mut gz = 0.0;
            for cell in &sources.cells {
                if cell.check(p, self_interaction)? {
                    continue;
                }
                for &(x, coef) in &cell.points {
                    gz += point_kernel_z(coef, p, x);
                }
            }
            Ok(gz)
        })
        .collect();
    Ok(GravityResult::z_only(out?))
}
