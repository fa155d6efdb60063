//! Error norms against the analytic prism field and convergence-rate fits.
//!
//! The L1/L2/L∞ norms of `gz - gz_h` over the model domain are integrated
//! either with a 4-point-per-axis Gauss rule on an `m x m x m` subdivision of
//! every cell, or with the 1-point (centroid) rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GravError, Result};
use crate::model::{DensityScene, PhysicalConstants, StructuredGrid, Vec3};
use crate::quadrature::gauss_legendre;
use crate::summation::{prism_gz, Prism};

/// Gauss points per axis inside each sub-box.
pub const NORM_POINTS_PER_AXIS: usize = 4;

/// A discrete `gz` field in the representation natural to its method.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteFieldView {
    /// One value per cell.
    PiecewiseConstant(Vec<f64>),
    /// Per cell `a0 + a1 s + a2 t + a3 s t`, with `(s, t)` in `[0, 1]²` the
    /// cell-local `x` and `y` coordinates.
    BilinearPerCell(Vec<[f64; 4]>),
}

impl DiscreteFieldView {
    pub fn len(&self) -> usize {
        match self {
            Self::PiecewiseConstant(v) => v.len(),
            Self::BilinearPerCell(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn value(&self, cell: usize, s: f64, t: f64) -> f64 {
        match self {
            Self::PiecewiseConstant(v) => v[cell],
            Self::BilinearPerCell(v) => {
                let a = v[cell];
                a[0] + a[1] * s + a[2] * t + a[3] * s * t
            }
        }
    }
}

/// Analytic `gz` of a set of uniform prisms.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReference {
    prisms: Vec<Prism>,
    constants: PhysicalConstants,
}

impl AnalyticReference {
    pub fn new(prisms: Vec<Prism>, constants: PhysicalConstants) -> Self {
        Self { prisms, constants }
    }

    /// One prism per dense cell of the scene.
    pub fn from_scene(scene: &DensityScene, constants: PhysicalConstants) -> Self {
        Self::new(scene.prisms(), constants)
    }

    pub fn gz(&self, p: Vec3) -> f64 {
        self.prisms
            .iter()
            .map(|prism| prism_gz(prism, p, &self.constants).unwrap_or(f64::NAN))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub e1: f64,
    pub e2: f64,
    pub einf: f64,
    /// Subdivision per axis; `None` for the centroid rule.
    pub m: Option<usize>,
    pub cells_per_axis: usize,
}

/// Norm quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormRule {
    Centroid,
    Subdivided { m: usize },
}

/// Subdivision used for a benchmark grid with `cells_per_axis` cells on the
/// 600 m domain: 8, 4, 2, 1 for 12, 24, 48, 96 cells, and 1 beyond.
pub fn choose_m(cells_per_axis: usize) -> usize {
    assert!(cells_per_axis > 0);
    96usize.div_ceil(cells_per_axis).max(1)
}

/// Smallest subdivision keeping sub-boxes no larger than `target` (m).
pub fn choose_m_for_spacing(h: f64, target: f64) -> usize {
    ((h / target) - 1e-9).ceil().max(1.0) as usize
}

pub fn error_norms(
    field: &DiscreteFieldView,
    grid: &StructuredGrid,
    reference: &AnalyticReference,
    m: usize,
) -> Result<NormReport> {
    error_norms_multi(&[field], grid, reference, NormRule::Subdivided { m }).map(|mut v| v.remove(0))
}

/// Norms with the 1-point centroid rule.
pub fn centroid_error_norms(
    field: &DiscreteFieldView,
    grid: &StructuredGrid,
    reference: &AnalyticReference,
) -> Result<NormReport> {
    error_norms_multi(&[field], grid, reference, NormRule::Centroid).map(|mut v| v.remove(0))
}

/// Norms of several fields on one grid sharing each analytic evaluation.
pub fn error_norms_multi(
    fields: &[&DiscreteFieldView],
    grid: &StructuredGrid,
    reference: &AnalyticReference,
    rule: NormRule,
) -> Result<Vec<NormReport>> {
    let ncell = grid.cell_count();
    for f in fields {
        if f.len() != ncell {
            return Err(GravError::SizeMismatch {
                expected: ncell,
                got: f.len(),
            });
        }
    }
    if let NormRule::Subdivided { m } = rule {
        if m == 0 {
            return Err(GravError::InvalidArgument("norm subdivision m must be at least 1".into()));
        }
    }
    let h = grid.spacing();
    let nf = fields.len();

    // Sub-box-local Gauss abscissae as fractions of the cell, with weights
    // as fractions of the cell width.
    let (frac, wfrac): (Vec<f64>, Vec<f64>) = match rule {
        NormRule::Centroid => (vec![0.5], vec![1.0]),
        NormRule::Subdivided { m } => {
            let (x, w) = gauss_legendre(NORM_POINTS_PER_AXIS);
            let mut f = Vec::with_capacity(m * x.len());
            let mut fw = Vec::with_capacity(m * x.len());
            for s in 0..m {
                for (xi, wi) in x.iter().zip(&w) {
                    f.push((s as f64 + 0.5 * (1.0 + xi)) / m as f64);
                    fw.push(0.5 * wi / m as f64);
                }
            }
            (f, fw)
        }
    };
    let cell_volume = grid.cell_volume();

    let partial: Vec<Vec<[f64; 3]>> = (0..ncell)
        .into_par_iter()
        .map(|c| {
            let [i, j, k] = grid.cell_ijk(c);
            let (lo, _) = grid.cell_bounds(i, j, k);
            let mut acc = vec![[0.0f64; 3]; nf];
            for (fz, wz) in frac.iter().zip(&wfrac) {
                let z = lo[2] + fz * h[2];
                for (fy, wy) in frac.iter().zip(&wfrac) {
                    let y = lo[1] + fy * h[1];
                    for (fx, wx) in frac.iter().zip(&wfrac) {
                        let x = lo[0] + fx * h[0];
                        let exact = reference.gz([x, y, z]);
                        let w = wx * wy * wz * cell_volume;
                        for (a, f) in acc.iter_mut().zip(fields) {
                            let e = (exact - f.value(c, *fx, *fy)).abs();
                            a[0] += w * e;
                            a[1] += w * e * e;
                            a[2] = a[2].max(e);
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut totals = vec![[0.0f64; 3]; nf];
    for cell in &partial {
        for (t, a) in totals.iter_mut().zip(cell) {
            t[0] += a[0];
            t[1] += a[1];
            t[2] = t[2].max(a[2]);
        }
    }
    let m = match rule {
        NormRule::Centroid => None,
        NormRule::Subdivided { m } => Some(m),
    };
    Ok(totals
        .into_iter()
        .map(|t| NormReport {
            e1: t[0],
            e2: t[1].sqrt(),
            einf: t[2],
            m,
            cells_per_axis: grid.cells()[0],
        })
        .collect())
}

/// Least-squares slope of `ln(error)` against `ln(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_convergence_rate(errors: &[f64], spacings: &[f64]) -> Result<RateFit> {
    if errors.len() != spacings.len() {
        return Err(GravError::SizeMismatch {
            expected: spacings.len(),
            got: errors.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = errors
        .iter()
        .zip(spacings)
        .filter_map(|(&e, &h)| {
            if e > 0.0 && e.is_finite() && h > 0.0 {
                Some((h.ln(), e.ln()))
            } else {
                log::warn!("dropping nonpositive error {e:e} at h = {h}");
                None
            }
        })
        .collect();
    if pairs.len() < 3 {
        return Err(GravError::InvalidArgument(format!(
            "a convergence fit needs at least 3 positive errors, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GravError::InvalidArgument("grid spacings must not all be equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pairs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
        points: pairs.len(),
    })
}

/// Rates for all three norms over a grid sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRates {
    pub e1: RateFit,
    pub e2: RateFit,
    pub einf: RateFit,
}

pub fn fit_norm_rates(reports: &[NormReport], spacings: &[f64]) -> Result<NormRates> {
    let col = |f: fn(&NormReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    Ok(NormRates {
        e1: fit_convergence_rate(&col(|r| r.e1), spacings)?,
        e2: fit_convergence_rate(&col(|r| r.e2), spacings)?,
        einf: fit_convergence_rate(&col(|r| r.einf), spacings)?,
    })
}
