//! Single forward runs on a station grid.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gravfield::fem::SolveStats;
use gravfield::{surface_observation_grid, EvaluationSet, GravityResult, PhysicalConstants, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::methods::evaluate;
use crate::report::{csv, ensure_dir, read_text, sci, write_json, write_text};

pub const CSV_NAME: &str = "gz.csv";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub origin: Vec3,
    pub lengths: Vec3,
    pub cells: [usize; 3],
    pub total_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Scene and station construction.
    pub setup_seconds: f64,
    /// The method itself, solve included.
    pub compute_seconds: f64,
    pub per_station_seconds: f64,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub scene: SceneSummary,
    pub station_count: usize,
    pub csv: String,
    pub timings: Timings,
    pub solve: Option<SolveStats>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_text(path)?)?)
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutcome {
    pub stations: EvaluationSet,
    pub result: GravityResult,
    pub manifest: RunManifest,
}

impl ForwardOutcome {
    /// `x,y,gz_mGal` rows in station order.
    pub fn csv_text(&self) -> String {
        let rows = self
            .stations
            .points()
            .iter()
            .zip(self.result.gz_mgal())
            .map(|(p, g)| vec![sci(p[0]), sci(p[1]), sci(g)]);
        csv(&["x", "y", "gz_mGal"], rows)
    }

    /// Writes the CSV and the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        ensure_dir(dir)?;
        let csv_path = write_text(&dir.join(&self.manifest.csv), &self.csv_text())?;
        let manifest_path = write_json(&dir.join(MANIFEST_NAME), &self.manifest)?;
        Ok((csv_path, manifest_path))
    }
}

pub fn run_forward(config: &RunConfig) -> Result<ForwardOutcome> {
    config.validate()?;
    let constants = PhysicalConstants::default();
    let setup = Instant::now();
    let scene = config.load_scene()?;
    let stations = surface_observation_grid(
        scene.grid(),
        config.stations.nx,
        config.stations.ny,
        None,
        config.include_edges,
    )?;
    let setup_seconds = setup.elapsed().as_secs_f64();
    let start = Instant::now();
    let out = evaluate(config.method, &scene, &stations, &config.params, constants)?;
    let compute_seconds = start.elapsed().as_secs_f64();
    log::info!("{} on {:?} cells: {compute_seconds:.3}s", config.method, scene.grid().cells());
    let grid = scene.grid();
    let manifest = RunManifest {
        tool: "gravfield".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        scene: SceneSummary {
            origin: grid.origin(),
            lengths: grid.lengths(),
            cells: grid.cells(),
            total_mass: scene.total_mass(),
        },
        station_count: stations.len(),
        csv: CSV_NAME.into(),
        timings: Timings {
            setup_seconds,
            compute_seconds,
            per_station_seconds: compute_seconds / stations.len() as f64,
        },
        solve: out.solve,
    };
    Ok(ForwardOutcome { stations, result: out.result, manifest })
}
