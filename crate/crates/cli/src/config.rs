//! Run configuration shared by every subcommand.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gravfield::fem::{BoundaryCondition, GridHierarchy, DEFAULT_COARSE_CELLS};
use gravfield::fmm::default_levels;
use gravfield::{build_synthetic_scene, DensityScene};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SumAn,
    SumG1,
    SumG1z,
    SumG2,
    FemD,
    FemGt,
    Fmm,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Self::SumAn, Self::SumG1, Self::SumG1z, Self::SumG2, Self::FemD, Self::FemGt, Self::Fmm];

    pub fn name(self) -> &'static str {
        match self {
            Self::SumAn => "sum-an",
            Self::SumG1 => "sum-g1",
            Self::SumG1z => "sum-g1z",
            Self::SumG2 => "sum-g2",
            Self::FemD => "fem-d",
            Self::FemGt => "fem-gt",
            Self::Fmm => "fmm",
        }
    }

    pub fn is_summation(self) -> bool {
        matches!(self, Self::SumAn | Self::SumG1 | Self::SumG1z | Self::SumG2)
    }

    pub fn is_fem(self) -> bool {
        matches!(self, Self::FemD | Self::FemGt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown method '{s}'")))
    }
}

/// `NXxNY` station layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationSpec {
    pub nx: usize,
    pub ny: usize,
}

impl StationSpec {
    pub fn count(&self) -> usize {
        self.nx * self.ny
    }
}

impl Default for StationSpec {
    fn default() -> Self {
        Self { nx: 150, ny: 150 }
    }
}

impl FromStr for StationSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HarnessError::Usage(format!("stations must look like 150x150, got '{s}'"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let nx: usize = a.trim().parse().map_err(|_| bad())?;
        let ny: usize = b.trim().parse().map_err(|_| bad())?;
        if nx == 0 || ny == 0 {
            return Err(bad());
        }
        Ok(Self { nx, ny })
    }
}

impl fmt::Display for StationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}

/// Solver parameters; fields that do not apply to a method are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    /// Multigrid levels (FEM) or octree depth (FMM); `None` picks the default.
    pub levels: Option<usize>,
    /// FMM expansion degree.
    pub order_p: usize,
    /// FGMRES relative tolerance.
    pub rtol: f64,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self { levels: None, order_p: 8, rtol: 1e-10 }
    }
}

impl MethodParams {
    pub fn validate(&self, method: Method) -> Result<()> {
        if method.is_fem() {
            if !(self.rtol > 0.0 && self.rtol < 1.0) {
                return Err(HarnessError::Usage(format!("rtol must lie in (0, 1), got {}", self.rtol)));
            }
            if self.levels == Some(0) {
                return Err(HarnessError::Usage("multigrid needs at least one level".into()));
            }
        }
        if method == Method::Fmm {
            if let Some(l) = self.levels {
                if !(2..=10).contains(&l) {
                    return Err(HarnessError::Usage(format!("octree depth must lie in 2..=10, got {l}")));
                }
            }
        }
        Ok(())
    }

    /// Octree depth for a grid with `cells` cells per axis.
    pub fn fmm_levels(&self, cells: usize) -> usize {
        self.levels.unwrap_or_else(|| default_levels(cells))
    }
}

/// One forward run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    /// Cells per axis of the synthetic scene; ignored with `scene`.
    pub cells: Option<usize>,
    pub params: MethodParams,
    pub stations: StationSpec,
    /// Whether the station grid reaches the domain edges.
    pub include_edges: bool,
    pub threads: usize,
    /// JSON scene to use in place of the synthetic cube.
    pub scene: Option<PathBuf>,
}

impl RunConfig {
    pub fn synthetic(method: Method, cells: usize) -> Self {
        Self {
            method,
            cells: Some(cells),
            params: MethodParams::default(),
            stations: StationSpec::default(),
            include_edges: true,
            threads: 1,
            scene: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(HarnessError::Usage("threads must be at least 1".into()));
        }
        if self.scene.is_none() {
            match self.cells {
                None => return Err(HarnessError::Usage("either --cells or --scene is required".into())),
                Some(c) if c == 0 || c % 6 != 0 => {
                    return Err(HarnessError::Usage(format!(
                        "the synthetic scene needs a positive multiple of 6 cells per axis, got {c}"
                    )))
                }
                _ => {}
            }
        }
        self.params.validate(self.method)
    }

    pub fn load_scene(&self) -> Result<DensityScene> {
        let scene = match &self.scene {
            Some(path) => gravfield::io::read_scene(path)
                .map_err(|e| HarnessError::Usage(format!("cannot read scene {}: {e}", path.display())))?,
            None => build_synthetic_scene(self.cells.unwrap_or(0))?,
        };
        check_scene(self.method, &self.params, &scene)?;
        Ok(scene)
    }
}

/// Rejects grids the chosen method cannot handle before any work is done.
pub fn check_scene(method: Method, params: &MethodParams, scene: &DensityScene) -> Result<()> {
    let grid = scene.grid();
    if method.is_fem() {
        let h = match params.levels {
            Some(n) => GridHierarchy::new(grid, n),
            None => GridHierarchy::with_coarse_cells(grid, DEFAULT_COARSE_CELLS),
        };
        h.map_err(|e| HarnessError::Usage(format!("no multigrid hierarchy for {:?} cells: {e}", grid.cells())))?;
    }
    Ok(())
}

/// Far-field condition centred on the mass centroid, or on the domain
/// centre for an empty scene.
pub fn robin_for(scene: &DensityScene) -> BoundaryCondition {
    BoundaryCondition::far_field_for(scene).unwrap_or_else(|_| {
        let g = scene.grid();
        let (o, l) = (g.origin(), g.lengths());
        BoundaryCondition::RobinFarField { r0: [o[0] + 0.5 * l[0], o[1] + 0.5 * l[1], o[2] + 0.5 * l[2]] }
    })
}
