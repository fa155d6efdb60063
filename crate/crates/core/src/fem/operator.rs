//! Matrix-free Q1 operator `A = L + F` on one structured level.

use nalgebra::DMatrix;

use super::BoundaryCondition;
use crate::error::{GravError, Result};
use crate::model::{DensityScene, PhysicalConstants, StructuredGrid, Vec3};

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Local node `a = ax + 2 ay + 4 az` of an element or `a = au + 2 av` of a face.
#[inline]
fn bit(a: usize, d: usize) -> usize {
    (a >> d) & 1
}

#[inline]
fn hat(side: usize, t: f64) -> f64 {
    if side == 1 {
        t
    } else {
        1.0 - t
    }
}

#[inline]
fn hat_slope(side: usize) -> f64 {
    if side == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Q1 element stiffness `int grad N_a . grad N_b` on an `hx x hy x hz` box
/// with the 2x2x2 Gauss rule.
pub fn element_stiffness(h: Vec3) -> [[f64; 8]; 8] {
    let mut k = [[0.0; 8]; 8];
    let w = 0.125 * h[0] * h[1] * h[2];
    for &tz in &GAUSS2 {
        for &ty in &GAUSS2 {
            for &tx in &GAUSS2 {
                let t = [tx, ty, tz];
                let mut grad = [[0.0; 3]; 8];
                for (a, g) in grad.iter_mut().enumerate() {
                    for d in 0..3 {
                        let mut v = hat_slope(bit(a, d)) / h[d];
                        for o in 0..3 {
                            if o != d {
                                v *= hat(bit(a, o), t[o]);
                            }
                        }
                        g[d] = v;
                    }
                }
                for a in 0..8 {
                    for b in 0..8 {
                        k[a][b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1] + grad[a][2] * grad[b][2]);
                    }
                }
            }
        }
    }
    k
}

/// Robin surface block on one boundary face.
#[derive(Debug, Clone)]
pub struct FaceBlock {
    pub nodes: [usize; 4],
    pub matrix: [[f64; 4]; 4],
}

/// Boundary faces of the brick with the surface term
/// `int N_a N_b (r_s . n) / |r_s|² dS`, `r_s = x - r0`, on a 2x2 Gauss rule.
fn robin_faces(grid: &StructuredGrid, r0: Vec3) -> Vec<FaceBlock> {
    let n = grid.cells();
    let h = grid.spacing();
    let mut faces = Vec::new();
    for axis in 0..3 {
        // Tangential axes u, v in increasing order.
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for (side, normal) in [(0usize, -1.0f64), (n[axis], 1.0)] {
            for jv in 0..n[v] {
                for ju in 0..n[u] {
                    let mut nodes = [0usize; 4];
                    let mut corner = [[0usize; 3]; 4];
                    for (a, node) in nodes.iter_mut().enumerate() {
                        let mut ijk = [0usize; 3];
                        ijk[axis] = side;
                        ijk[u] = ju + bit(a, 0);
                        ijk[v] = jv + bit(a, 1);
                        corner[a] = ijk;
                        *node = grid.node_index(ijk[0], ijk[1], ijk[2]);
                    }
                    let base = grid.node_position(corner[0][0], corner[0][1], corner[0][2]);
                    let area_w = 0.25 * h[u] * h[v];
                    let mut m = [[0.0; 4]; 4];
                    for &tv in &GAUSS2 {
                        for &tu in &GAUSS2 {
                            let mut x = base;
                            x[u] += tu * h[u];
                            x[v] += tv * h[v];
                            let rs = [x[0] - r0[0], x[1] - r0[1], x[2] - r0[2]];
                            let r2 = rs[0] * rs[0] + rs[1] * rs[1] + rs[2] * rs[2];
                            let weight = area_w * normal * rs[axis] / r2;
                            let shape: [f64; 4] = std::array::from_fn(|a| hat(bit(a, 0), tu) * hat(bit(a, 1), tv));
                            for a in 0..4 {
                                for b in 0..4 {
                                    m[a][b] += weight * shape[a] * shape[b];
                                }
                            }
                        }
                    }
                    faces.push(FaceBlock { nodes, matrix: m });
                }
            }
        }
    }
    faces
}

/// The discrete operator of one level, applied element by element.
#[derive(Debug, Clone)]
pub struct LevelOperator {
    grid: StructuredGrid,
    bc: BoundaryCondition,
    stiffness: [[f64; 8]; 8],
    faces: Vec<FaceBlock>,
    boundary: Vec<bool>,
    diag: Vec<f64>,
    offsets: [usize; 8],
}

impl LevelOperator {
    pub fn new(grid: &StructuredGrid, bc: BoundaryCondition) -> Result<Self> {
        if let BoundaryCondition::RobinFarField { r0 } = bc {
            let lo = grid.origin();
            let hi = grid.upper();
            if (0..3).any(|d| !(r0[d] > lo[d] && r0[d] < hi[d])) {
                return Err(GravError::InvalidArgument(format!(
                    "Robin reference point {r0:?} must lie strictly inside the domain"
                )));
            }
        }
        let nn = grid.nodes();
        let offsets = std::array::from_fn(|a| bit(a, 0) + nn[0] * (bit(a, 1) + nn[1] * bit(a, 2)));
        let boundary: Vec<bool> = (0..grid.node_count())
            .map(|n| {
                let [i, j, k] = grid.node_ijk(n);
                grid.is_boundary_node(i, j, k)
            })
            .collect();
        let faces = match bc {
            BoundaryCondition::Dirichlet0 => Vec::new(),
            BoundaryCondition::RobinFarField { r0 } => robin_faces(grid, r0),
        };
        let mut op = Self {
            grid: grid.clone(),
            bc,
            stiffness: element_stiffness(grid.spacing()),
            faces,
            boundary,
            diag: Vec::new(),
            offsets,
        };
        op.diag = op.compute_diagonal();
        Ok(op)
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.grid.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.bc, BoundaryCondition::Dirichlet0)
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn stiffness(&self) -> &[[f64; 8]; 8] {
        &self.stiffness
    }

    pub fn faces(&self) -> &[FaceBlock] {
        &self.faces
    }

    #[inline]
    fn for_each_element(&self, mut f: impl FnMut(usize)) {
        let c = self.grid.cells();
        for k in 0..c[2] {
            for j in 0..c[1] {
                for i in 0..c[0] {
                    f(self.grid.node_index(i, j, k));
                }
            }
        }
    }

    /// `out = A y`.
    pub fn apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if y.len() != n {
            return Err(GravError::SizeMismatch { expected: n, got: y.len() });
        }
        if out.len() != n {
            return Err(GravError::SizeMismatch { expected: n, got: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        let ke = &self.stiffness;
        let dirichlet = self.is_dirichlet();
        let boundary = &self.boundary;
        self.for_each_element(|base| {
            let mut ye = [0.0; 8];
            let mut idx = [0usize; 8];
            for a in 0..8 {
                let node = base + self.offsets[a];
                idx[a] = node;
                ye[a] = if dirichlet && boundary[node] { 0.0 } else { y[node] };
            }
            for a in 0..8 {
                if dirichlet && boundary[idx[a]] {
                    continue;
                }
                let row = &ke[a];
                let mut s = 0.0;
                for b in 0..8 {
                    s += row[b] * ye[b];
                }
                out[idx[a]] += s;
            }
        });
        for face in &self.faces {
            for a in 0..4 {
                let mut s = 0.0;
                for b in 0..4 {
                    s += face.matrix[a][b] * y[face.nodes[b]];
                }
                out[face.nodes[a]] += s;
            }
        }
        if dirichlet {
            for (node, &on) in boundary.iter().enumerate() {
                if on {
                    out[node] = y[node];
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(y, &mut out)?;
        Ok(out)
    }

    /// `r = b - A y`.
    pub fn residual_into(&self, b: &[f64], y: &[f64], r: &mut [f64]) -> Result<()> {
        self.apply_into(y, r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        Ok(())
    }

    fn compute_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        let dirichlet = self.is_dirichlet();
        self.for_each_element(|base| {
            for a in 0..8 {
                d[base + self.offsets[a]] += self.stiffness[a][a];
            }
        });
        for face in &self.faces {
            for a in 0..4 {
                d[face.nodes[a]] += face.matrix[a][a];
            }
        }
        if dirichlet {
            for (node, &on) in self.boundary.iter().enumerate() {
                if on {
                    d[node] = 1.0;
                }
            }
        }
        d
    }

    /// `diag(A)`, accumulated element by element.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Explicit dense assembly, for the coarse factorization.
    pub fn assemble_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let dirichlet = self.is_dirichlet();
        self.for_each_element(|base| {
            for a in 0..8 {
                let ia = base + self.offsets[a];
                if dirichlet && self.boundary[ia] {
                    continue;
                }
                for b in 0..8 {
                    let ib = base + self.offsets[b];
                    if dirichlet && self.boundary[ib] {
                        continue;
                    }
                    m[(ia, ib)] += self.stiffness[a][b];
                }
            }
        });
        for face in &self.faces {
            for a in 0..4 {
                for b in 0..4 {
                    m[(face.nodes[a], face.nodes[b])] += face.matrix[a][b];
                }
            }
        }
        if dirichlet {
            for (node, &on) in self.boundary.iter().enumerate() {
                if on {
                    m[(node, node)] = 1.0;
                }
            }
        }
        m
    }

    /// Force vector `4 pi G int N_a rho dV` (2x2x2 Gauss, constant density
    /// per element); Dirichlet boundary entries are zero.
    pub fn load_vector(&self, scene: &DensityScene, constants: &PhysicalConstants) -> Result<Vec<f64>> {
        if scene.grid() != &self.grid {
            return Err(GravError::LevelMismatch(
                "scene grid differs from the operator grid".into(),
            ));
        }
        let h = self.grid.spacing();
        let w = 0.125 * h[0] * h[1] * h[2];
        let mut nodal = [0.0; 8];
        for &tz in &GAUSS2 {
            for &ty in &GAUSS2 {
                for &tx in &GAUSS2 {
                    let t = [tx, ty, tz];
                    for (a, v) in nodal.iter_mut().enumerate() {
                        *v += w * (0..3).map(|d| hat(bit(a, d), t[d])).product::<f64>();
                    }
                }
            }
        }
        let scale = 4.0 * std::f64::consts::PI * constants.g;
        let mut b = vec![0.0; self.len()];
        for (c, rho) in scene.massive_cells() {
            let [i, j, k] = self.grid.cell_ijk(c);
            let base = self.grid.node_index(i, j, k);
            for a in 0..8 {
                b[base + self.offsets[a]] += scale * rho * nodal[a];
            }
        }
        if self.is_dirichlet() {
            for (node, &on) in self.boundary.iter().enumerate() {
                if on {
                    b[node] = 0.0;
                }
            }
        }
        Ok(b)
    }
}
