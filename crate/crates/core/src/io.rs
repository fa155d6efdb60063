//! JSON documents for scenes and evaluation sets.
//!
//! Scene schema: `{"origin": [x, y, z], "lengths": [lx, ly, lz],
//! "cells": [mx, my, mz], "density": [...]}` with the density list in cell
//! order (`x` fastest, then `y`, then `z`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DensityScene, EvaluationSet, StructuredGrid, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub origin: Vec3,
    pub lengths: Vec3,
    pub cells: [usize; 3],
    pub density: Vec<f64>,
}

impl SceneDocument {
    pub fn from_scene(scene: &DensityScene) -> Self {
        let g = scene.grid();
        Self {
            origin: g.origin(),
            lengths: g.lengths(),
            cells: g.cells(),
            density: scene.density().to_vec(),
        }
    }

    pub fn into_scene(self) -> Result<DensityScene> {
        let grid = StructuredGrid::new(self.origin, self.lengths, self.cells)?;
        DensityScene::new(grid, self.density)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDocument {
    pub points: Vec<Vec3>,
}

pub fn scene_from_json(text: &str) -> Result<DensityScene> {
    let doc: SceneDocument = serde_json::from_str(text)?;
    doc.into_scene()
}

pub fn scene_to_json(scene: &DensityScene) -> Result<String> {
    Ok(serde_json::to_string(&SceneDocument::from_scene(scene))?)
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<DensityScene> {
    scene_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_scene(path: impl AsRef<Path>, scene: &DensityScene) -> Result<()> {
    std::fs::write(path, scene_to_json(scene)?)?;
    Ok(())
}

pub fn evaluation_set_from_json(text: &str) -> Result<EvaluationSet> {
    let doc: EvaluationDocument = serde_json::from_str(text)?;
    EvaluationSet::new(doc.points)
}

pub fn evaluation_set_to_json(evals: &EvaluationSet) -> Result<String> {
    Ok(serde_json::to_string(&EvaluationDocument {
        points: evals.points().to_vec(),
    })?)
}
