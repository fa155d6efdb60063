//! Error norms and fitted rates over a sequence of grids.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gravfield::metrics::{error_norms_multi, fit_norm_rates, AnalyticReference, NormRates, NormReport, NormRule};
use gravfield::{PhysicalConstants, SyntheticScene};
use serde::{Deserialize, Serialize};

use crate::config::{check_scene, Method, MethodParams};
use crate::error::{HarnessError, Result};
use crate::methods::{model_field, NORM_SUBBOX};
use crate::report::{csv, ensure_dir, sci, write_json, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub cells: usize,
    /// Cell size (m).
    pub h: f64,
    pub norms: NormReport,
    /// Time to produce the field, norms excluded.
    pub seconds: f64,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: Method,
    pub params: MethodParams,
    pub rows: Vec<GridRow>,
    pub rates: NormRates,
}

impl ConvergenceReport {
    pub fn rates_triple(&self) -> [f64; 3] {
        [self.rates.e1.slope, self.rates.e2.slope, self.rates.einf.slope]
    }
}

fn check_grids(scene: &SyntheticScene, grids: &[usize]) -> Result<()> {
    let mut sorted = grids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 3 {
        return Err(HarnessError::Usage(format!("a convergence study needs at least 3 distinct grids, got {grids:?}")));
    }
    for &n in grids {
        if n == 0 || (*scene == SyntheticScene::default() && n % 6 != 0) {
            return Err(HarnessError::Usage(format!("unsupported grid of {n} cells per axis")));
        }
    }
    Ok(())
}

/// Runs every method on every grid. Methods measured by the same norm rule
/// share one pass over the analytic reference per grid.
pub fn run_convergence(
    methods: &[Method],
    grids: &[usize],
    params: &MethodParams,
    scene: &SyntheticScene,
    constants: PhysicalConstants,
) -> Result<Vec<ConvergenceReport>> {
    run_convergence_with(methods, grids, params, scene, constants, NORM_SUBBOX)
}

/// [`run_convergence`] with FEM norm sub-boxes of edge at most `norm_subbox` (m).
pub fn run_convergence_with(
    methods: &[Method],
    grids: &[usize],
    params: &MethodParams,
    scene: &SyntheticScene,
    constants: PhysicalConstants,
    norm_subbox: f64,
) -> Result<Vec<ConvergenceReport>> {
    if !(norm_subbox > 0.0) {
        return Err(HarnessError::Usage(format!("norm sub-box must be positive, got {norm_subbox}")));
    }
    if methods.is_empty() {
        return Err(HarnessError::Usage("no methods given".into()));
    }
    check_grids(scene, grids)?;
    for &m in methods {
        params.validate(m)?;
    }
    // The anomaly alone: its field equals the sum over its voxels exactly.
    let reference = AnalyticReference::new(vec![scene.anomaly()], constants);
    let mut rows: Vec<Vec<GridRow>> = vec![Vec::new(); methods.len()];
    for &n in grids {
        let model = scene.build(n)?;
        let mut fields = Vec::with_capacity(methods.len());
        let mut seconds = Vec::with_capacity(methods.len());
        for &m in methods {
            check_scene(m, params, &model)?;
            let t = Instant::now();
            fields.push(model_field(m, &model, params, constants, norm_subbox)?);
            seconds.push(t.elapsed().as_secs_f64());
        }
        let mut groups: BTreeMap<String, (NormRule, Vec<usize>)> = BTreeMap::new();
        for (i, f) in fields.iter().enumerate() {
            groups.entry(format!("{:?}", f.rule)).or_insert_with(|| (f.rule, Vec::new())).1.push(i);
        }
        for (rule, members) in groups.into_values() {
            let views: Vec<_> = members.iter().map(|&i| &fields[i].view).collect();
            let reports = error_norms_multi(&views, model.grid(), &reference, rule)?;
            for (&i, norms) in members.iter().zip(reports) {
                log::info!("{} M={n}: E1={:.4e} E2={:.4e} Einf={:.4e}", methods[i], norms.e1, norms.e2, norms.einf);
                rows[i].push(GridRow {
                    cells: n,
                    h: scene.domain_side / n as f64,
                    norms,
                    seconds: seconds[i],
                    iterations: fields[i].solve.as_ref().map(|s| s.iterations),
                });
            }
        }
    }
    methods
        .iter()
        .zip(rows)
        .map(|(&method, rows)| {
            let norms: Vec<NormReport> = rows.iter().map(|r| r.norms).collect();
            let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
            let rates = fit_norm_rates(&norms, &h)?;
            Ok(ConvergenceReport { method, params: *params, rows, rates })
        })
        .collect()
}

pub fn norms_csv(reports: &[ConvergenceReport]) -> String {
    let rows = reports.iter().flat_map(|r| {
        r.rows.iter().map(move |g| {
            vec![
                r.method.to_string(),
                g.cells.to_string(),
                sci(g.h),
                g.norms.m.map(|m| m.to_string()).unwrap_or_else(|| "centroid".into()),
                sci(g.norms.e1),
                sci(g.norms.e2),
                sci(g.norms.einf),
                sci(g.seconds),
                g.iterations.map(|i| i.to_string()).unwrap_or_default(),
            ]
        })
    });
    csv(&["method", "cells", "h", "m", "e1", "e2", "einf", "seconds", "iterations"], rows)
}

pub fn rates_csv(reports: &[ConvergenceReport]) -> String {
    let rows = reports.iter().flat_map(|r| {
        [("e1", r.rates.e1), ("e2", r.rates.e2), ("einf", r.rates.einf)].map(|(name, fit)| {
            vec![r.method.to_string(), name.to_string(), sci(fit.slope), sci(fit.intercept), sci(fit.residual)]
        })
    });
    csv(&["method", "norm", "rate", "intercept", "residual"], rows)
}

pub fn write_convergence(dir: &Path, reports: &[ConvergenceReport]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    Ok(vec![
        write_text(&dir.join("convergence.csv"), &norms_csv(reports))?,
        write_text(&dir.join("rates.csv"), &rates_csv(reports))?,
        write_json(&dir.join("convergence.json"), &reports)?,
    ])
}
