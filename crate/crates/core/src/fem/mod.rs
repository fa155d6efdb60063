//! Q1 finite-element solution of the potential equation
//! `-lap phi = 4 pi G rho` on the model brick.
//!
//! The operator is applied element by element, and FGMRES is preconditioned
//! with one geometric-multigrid V-cycle. Boundary conditions are either
//! homogeneous Dirichlet or a Robin condition that mimics the `1/|r - r0|`
//! decay of a point mass at `r0`.

mod fgmres;
mod gravity;
mod multigrid;
mod operator;
mod transfer;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use fgmres::{fgmres, KrylovOptions};
pub use gravity::element_gravity;
pub use multigrid::{smooth, CoarseSolver, LinearOperator, Multigrid};
pub use operator::{element_stiffness, FaceBlock, LevelOperator};
pub use transfer::{prolong, restrict};

use crate::error::{GravError, Result};
use crate::model::{DensityScene, PhysicalConstants, StructuredGrid, Vec3};

/// Cells per axis of the default coarsest level.
pub const DEFAULT_COARSE_CELLS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// `phi = 0` on the boundary.
    Dirichlet0,
    /// `d phi / dn = -phi (r_s . n) / |r_s|²`, `r_s = x - r0`.
    RobinFarField { r0: Vec3 },
}

impl BoundaryCondition {
    /// Robin condition centred on the scene's mass centroid.
    pub fn far_field_for(scene: &DensityScene) -> Result<Self> {
        let r0 = scene
            .mass_centroid()
            .ok_or_else(|| GravError::InvalidArgument("scene has no mass to centre the far field on".into()))?;
        Ok(Self::RobinFarField { r0 })
    }
}

/// Nested grids, coarsest first, each a 2x refinement of the previous.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHierarchy {
    levels: Vec<StructuredGrid>,
}

impl GridHierarchy {
    pub fn new(fine: &StructuredGrid, n_levels: usize) -> Result<Self> {
        if n_levels == 0 {
            return Err(GravError::InvalidArgument("a hierarchy needs at least one level".into()));
        }
        let factor = 1usize << (n_levels - 1);
        let coarsest = fine.coarsened(factor).ok_or_else(|| {
            GravError::InvalidArgument(format!(
                "cell counts {:?} are not divisible by 2^{}",
                fine.cells(),
                n_levels - 1
            ))
        })?;
        let mut levels = vec![coarsest];
        for _ in 1..n_levels {
            let next = levels.last().unwrap().refined(2);
            levels.push(next);
        }
        Ok(Self { levels })
    }

    /// Hierarchy whose coarsest level has `coarse` cells along the first axis.
    pub fn with_coarse_cells(fine: &StructuredGrid, coarse: usize) -> Result<Self> {
        Self::new(fine, levels_for(fine.cells()[0], coarse)?)
    }

    pub fn levels(&self) -> &[StructuredGrid] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> &StructuredGrid {
        self.levels.last().unwrap()
    }

    pub fn coarsest(&self) -> &StructuredGrid {
        &self.levels[0]
    }
}

/// Level count taking `fine` cells down to `coarse` by halving.
pub fn levels_for(fine: usize, coarse: usize) -> Result<usize> {
    let mut n = 1;
    let mut c = fine;
    while c > coarse && c.is_multiple_of(2) {
        c /= 2;
        n += 1;
    }
    if c != coarse {
        return Err(GravError::InvalidArgument(format!(
            "{fine} cells do not coarsen to {coarse} by repeated halving"
        )));
    }
    Ok(n)
}

/// Nodal potential (m²/s²).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub(crate) grid: StructuredGrid,
    pub(crate) phi: Vec<f64>,
}

impl PotentialField {
    pub fn new(grid: StructuredGrid, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.node_count() {
            return Err(GravError::SizeMismatch { expected: grid.node_count(), got: phi.len() });
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(GravError::InvalidArgument("potential must be finite".into()));
        }
        Ok(Self { grid, phi })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

/// Krylov solve statistics; timings in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

/// Cell-centroid gravity (m/s²).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGravityField {
    pub grid: StructuredGrid,
    pub g: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemOptions {
    /// Multigrid levels; `None` coarsens down to [`DEFAULT_COARSE_CELLS`].
    pub levels: Option<usize>,
    pub krylov: KrylovOptions,
    pub smoothing_steps: usize,
    pub constants: PhysicalConstants,
}

impl Default for FemOptions {
    fn default() -> Self {
        Self {
            levels: None,
            krylov: KrylovOptions::default(),
            smoothing_steps: 2,
            constants: PhysicalConstants::default(),
        }
    }
}

/// Solves for the nodal potential with `n_levels` multigrid levels.
pub fn solve_potential(
    scene: &DensityScene,
    bc: BoundaryCondition,
    n_levels: usize,
    rtol: f64,
) -> Result<(PotentialField, SolveStats)> {
    let opts = FemOptions {
        levels: Some(n_levels),
        krylov: KrylovOptions { rtol, ..KrylovOptions::default() },
        ..FemOptions::default()
    };
    solve_potential_with(scene, bc, &opts)
}

pub fn solve_potential_with(
    scene: &DensityScene,
    bc: BoundaryCondition,
    opts: &FemOptions,
) -> Result<(PotentialField, SolveStats)> {
    let setup = Instant::now();
    let grid = scene.grid();
    let hierarchy = match opts.levels {
        Some(n) => GridHierarchy::new(grid, n)?,
        None => GridHierarchy::with_coarse_cells(grid, DEFAULT_COARSE_CELLS)?,
    };
    let mg = Multigrid::new(&hierarchy, bc, opts.smoothing_steps)?;
    let b = mg.finest().load_vector(scene, &opts.constants)?;
    let setup_seconds = setup.elapsed().as_secs_f64();
    let start = Instant::now();
    let (phi, mut stats) = fgmres(mg.finest(), |v: &[f64]| mg.v_cycle(v), &b, vec![0.0; b.len()], &opts.krylov)?;
    stats.setup_seconds = setup_seconds;
    stats.solve_seconds = start.elapsed().as_secs_f64();
    log::info!(
        "FEM {:?} on {:?} cells: {} iterations, {:.2}s",
        bc,
        grid.cells(),
        stats.iterations,
        stats.solve_seconds
    );
    Ok((PotentialField::new(grid.clone(), phi)?, stats))
}
