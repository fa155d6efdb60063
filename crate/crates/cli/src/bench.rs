//! Wall-clock benchmarks and the summation crossover table.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gravfield::{build_synthetic_scene, surface_observation_grid, PhysicalConstants};
use serde::{Deserialize, Serialize};

use crate::config::{check_scene, Method, MethodParams, StationSpec};
use crate::error::{HarnessError, Result};
use crate::methods::evaluate;
use crate::report::{csv, ensure_dir, peak_rss_bytes, sci, sci_opt, write_json, write_text};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: Method,
    pub cells: usize,
    pub stations: usize,
    pub wall_seconds: f64,
    /// Summation methods only.
    pub per_station_seconds: Option<f64>,
    pub iterations: Option<usize>,
    /// Process high-water mark after the run (Linux only).
    pub peak_rss_bytes: Option<u64>,
}

pub fn run_bench(
    methods: &[Method],
    grids: &[usize],
    stations: StationSpec,
    params: &MethodParams,
    constants: PhysicalConstants,
) -> Result<Vec<BenchRecord>> {
    if methods.is_empty() || grids.is_empty() {
        return Err(HarnessError::Usage("bench needs at least one method and one grid".into()));
    }
    for &m in methods {
        params.validate(m)?;
    }
    let mut out = Vec::new();
    for &n in grids {
        let scene = build_synthetic_scene(n).map_err(|e| HarnessError::Usage(e.to_string()))?;
        let evals = surface_observation_grid(scene.grid(), stations.nx, stations.ny, None, true)?;
        for &m in methods {
            check_scene(m, params, &scene)?;
            let t = Instant::now();
            let run = evaluate(m, &scene, &evals, params, constants)?;
            let wall = t.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
            log::info!("bench {m} M={n}: {wall:.4}s");
            out.push(BenchRecord {
                method: m,
                cells: n,
                stations: evals.len(),
                wall_seconds: wall,
                per_station_seconds: m.is_summation().then(|| wall / evals.len() as f64),
                iterations: run.solve.map(|s| s.iterations),
                peak_rss_bytes: peak_rss_bytes(),
            });
        }
    }
    Ok(out)
}

pub fn bench_csv(records: &[BenchRecord]) -> String {
    let rows = records.iter().map(|r| {
        vec![
            r.method.to_string(),
            r.cells.to_string(),
            r.stations.to_string(),
            sci(r.wall_seconds),
            sci_opt(r.per_station_seconds),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.peak_rss_bytes.map(|b| b.to_string()).unwrap_or_default(),
        ]
    });
    csv(&["method", "cells", "stations", "wall_seconds", "per_station_seconds", "iterations", "peak_rss_bytes"], rows)
}

/// Stations below which a summation method beats a whole-grid method:
/// `t_pde / t_sum_per_station`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub cells: usize,
    pub sum_g1z_per_station: Option<f64>,
    pub sum_an_per_station: Option<f64>,
    pub fem_gt_vs_sum_g1z: Option<f64>,
    pub fem_gt_vs_sum_an: Option<f64>,
    pub fmm_vs_sum_g1z: Option<f64>,
    pub fmm_vs_sum_an: Option<f64>,
}

pub fn crossover(t_pde: f64, t_sum_per_station: f64) -> f64 {
    t_pde / t_sum_per_station
}

pub fn crossover_table(records: &[BenchRecord]) -> Vec<CrossoverRow> {
    let mut grids: Vec<usize> = records.iter().map(|r| r.cells).collect();
    grids.sort_unstable();
    grids.dedup();
    let find = |m: Method, n: usize| records.iter().find(|r| r.method == m && r.cells == n);
    grids
        .into_iter()
        .map(|n| {
            let g1z = find(Method::SumG1z, n).and_then(|r| r.per_station_seconds);
            let an = find(Method::SumAn, n).and_then(|r| r.per_station_seconds);
            let fem = find(Method::FemGt, n).map(|r| r.wall_seconds);
            let fmm = find(Method::Fmm, n).map(|r| r.wall_seconds);
            let pair = |a: Option<f64>, b: Option<f64>| Some(crossover(a?, b?));
            CrossoverRow {
                cells: n,
                sum_g1z_per_station: g1z,
                sum_an_per_station: an,
                fem_gt_vs_sum_g1z: pair(fem, g1z),
                fem_gt_vs_sum_an: pair(fem, an),
                fmm_vs_sum_g1z: pair(fmm, g1z),
                fmm_vs_sum_an: pair(fmm, an),
            }
        })
        .collect()
}

pub fn crossover_csv(rows: &[CrossoverRow]) -> String {
    let body = rows.iter().map(|r| {
        vec![
            r.cells.to_string(),
            sci_opt(r.sum_g1z_per_station),
            sci_opt(r.sum_an_per_station),
            sci_opt(r.fem_gt_vs_sum_g1z),
            sci_opt(r.fem_gt_vs_sum_an),
            sci_opt(r.fmm_vs_sum_g1z),
            sci_opt(r.fmm_vs_sum_an),
        ]
    });
    csv(
        &[
            "cells",
            "sum_g1z_per_station",
            "sum_an_per_station",
            "fem_gt_vs_sum_g1z",
            "fem_gt_vs_sum_an",
            "fmm_vs_sum_g1z",
            "fmm_vs_sum_an",
        ],
        body,
    )
}

pub fn write_bench(dir: &Path, records: &[BenchRecord]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![write_text(&dir.join("bench.csv"), &bench_csv(records))?, write_json(&dir.join("bench.json"), &records)?])
}

pub fn write_crossover(dir: &Path, records: &[BenchRecord], rows: &[CrossoverRow]) -> Result<Vec<PathBuf>> {
    let mut files = write_bench(dir, records)?;
    files.push(write_text(&dir.join("crossover.csv"), &crossover_csv(rows))?);
    files.push(write_json(&dir.join("crossover.json"), &rows)?);
    Ok(files)
}
