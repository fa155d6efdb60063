//! Dispatch from a [`Method`] to the library solvers.

use gravfield::fem::{solve_potential_with, BoundaryCondition, FemOptions, KrylovOptions, PotentialField, SolveStats};
use gravfield::fmm::{fmm_gravity, FmmOptions};
use gravfield::metrics::{choose_m_for_spacing, DiscreteFieldView, NormRule};
use gravfield::summation::{sum_analytic, sum_quadrature, QuadratureRule, SelfInteraction};
use gravfield::{ComponentMask, DensityScene, EvaluationSet, GravityResult, PhysicalConstants};

use crate::config::{robin_for, Method, MethodParams};
use crate::error::Result;

/// Sub-box edge (m) for the Gauss norm rule on FEM fields; 96 cells on the
/// 600 m benchmark cube need no subdivision.
pub const NORM_SUBBOX: f64 = 6.25;

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub result: GravityResult,
    pub solve: Option<SolveStats>,
}

fn fem_options(params: &MethodParams, constants: PhysicalConstants) -> FemOptions {
    FemOptions {
        levels: params.levels,
        krylov: KrylovOptions { rtol: params.rtol, ..KrylovOptions::default() },
        constants,
        ..FemOptions::default()
    }
}

pub fn boundary_condition(method: Method, scene: &DensityScene) -> BoundaryCondition {
    match method {
        Method::FemGt => robin_for(scene),
        _ => BoundaryCondition::Dirichlet0,
    }
}

pub fn solve_fem(
    method: Method,
    scene: &DensityScene,
    params: &MethodParams,
    constants: PhysicalConstants,
) -> Result<(PotentialField, SolveStats)> {
    let bc = boundary_condition(method, scene);
    Ok(solve_potential_with(scene, bc, &fem_options(params, constants))?)
}

fn quadrature(
    scene: &DensityScene,
    evals: &EvaluationSet,
    order: usize,
    z_only: bool,
    policy: SelfInteraction,
    constants: &PhysicalConstants,
) -> Result<GravityResult> {
    let rule = QuadratureRule::new(order)?;
    Ok(sum_quadrature(scene, evals, &rule, z_only, constants, policy)?)
}

/// Gravity at arbitrary stations. Summation and FMM reject stations inside
/// dense cells; FEM needs stations inside the mesh.
pub fn evaluate(
    method: Method,
    scene: &DensityScene,
    evals: &EvaluationSet,
    params: &MethodParams,
    constants: PhysicalConstants,
) -> Result<MethodOutput> {
    let reject = SelfInteraction::Reject;
    let (result, solve) = match method {
        Method::SumAn => (sum_analytic(scene, evals, &constants)?, None),
        Method::SumG1 => (quadrature(scene, evals, 1, false, reject, &constants)?, None),
        Method::SumG1z => (quadrature(scene, evals, 1, true, reject, &constants)?, None),
        Method::SumG2 => (quadrature(scene, evals, 2, false, reject, &constants)?, None),
        Method::FemD | Method::FemGt => {
            let (phi, stats) = solve_fem(method, scene, params, constants)?;
            (GravityResult::new(phi.gravity_at(evals)?, ComponentMask::All), Some(stats))
        }
        Method::Fmm => {
            let cells = scene.grid().cells();
            let opts = FmmOptions {
                levels: params.fmm_levels(cells[0].max(cells[1]).max(cells[2])),
                order: params.order_p,
                self_interaction: reject,
            };
            (fmm_gravity(scene, evals, &opts, &constants)?, None)
        }
    };
    Ok(MethodOutput { result, solve })
}

/// A method's `gz` over the whole model, with the norm rule it is measured
/// by: centroid samples for summation and FMM, the bilinear per-cell field
/// of the Q1 potential with subdivided Gauss norms for FEM.
#[derive(Debug, Clone)]
pub struct ModelField {
    pub view: DiscreteFieldView,
    pub rule: NormRule,
    pub solve: Option<SolveStats>,
}

/// `norm_subbox` is the largest sub-box edge (m) of the FEM norm rule.
pub fn model_field(
    method: Method,
    scene: &DensityScene,
    params: &MethodParams,
    constants: PhysicalConstants,
    norm_subbox: f64,
) -> Result<ModelField> {
    let grid = scene.grid();
    if method.is_fem() {
        let (phi, stats) = solve_fem(method, scene, params, constants)?;
        let h = grid.spacing().iter().fold(0.0f64, |a, &b| a.max(b));
        return Ok(ModelField {
            view: phi.gz_bilinear(),
            rule: NormRule::Subdivided { m: choose_m_for_spacing(h, norm_subbox) },
            solve: Some(stats),
        });
    }
    let evals = EvaluationSet::cell_centroids(grid);
    let exclude = SelfInteraction::Exclude;
    // Only gz enters the norms, so the quadrature variants take the z-only path.
    let gz = match method {
        Method::SumAn => sum_analytic(scene, &evals, &constants)?,
        Method::SumG1 | Method::SumG1z => quadrature(scene, &evals, 1, true, exclude, &constants)?,
        Method::SumG2 => quadrature(scene, &evals, 2, true, exclude, &constants)?,
        Method::Fmm => {
            let c = grid.cells();
            let opts = FmmOptions {
                levels: params.fmm_levels(c[0].max(c[1]).max(c[2])),
                order: params.order_p,
                self_interaction: exclude,
            };
            fmm_gravity(scene, &evals, &opts, &constants)?
        }
        Method::FemD | Method::FemGt => unreachable!(),
    }
    .gz();
    Ok(ModelField { view: DiscreteFieldView::PiecewiseConstant(gz), rule: NormRule::Centroid, solve: None })
}
