//! Forward gravity modeling of voxelized density anomalies.
//!
//! Three independent families compute the gravity of a [`DensityScene`]:
//!
//! * [`summation`]: closed-form prism sums and 1/2-point Gauss quadrature of
//!   the Newtonian volume integral,
//! * [`fem`]: a trilinear finite-element Poisson solver for the potential,
//!   preconditioned by a matrix-free geometric multigrid V-cycle inside FGMRES,
//! * [`fmm`]: a uniform-octree fast multipole method on point masses.
//!
//! [`metrics`] measures errors against the analytic prism field and fits
//! convergence rates.
//!
//! Sign convention used everywhere: the gravity vector is `g = -grad(phi)`
//! with `phi = G * int rho / |r - x| dV`, so its `z` component is positive at
//! stations above a positive density anomaly (downward attraction).

// Index loops mirror the component formulas; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod fmm;
pub mod io;
pub mod metrics;
pub mod model;
pub mod quadrature;
pub mod summation;

pub use error::{GravError, Result};
pub use model::{
    build_grid, build_synthetic_scene, si_to_mgal, surface_observation_grid, ComponentMask,
    DensityScene, EvaluationSet, GravityResult, PhysicalConstants, StructuredGrid,
    SyntheticScene, Vec3,
};
