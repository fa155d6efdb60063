//! Uniform octree over a cubic root box.

use num_complex::Complex64;

use crate::error::{GravError, Result};
use crate::model::{DensityScene, Vec3};

/// A point mass (kg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub position: Vec3,
    pub mass: f64,
}

/// One point source per dense cell, at its centroid, in scan order.
pub fn point_sources(scene: &DensityScene) -> Vec<Source> {
    let grid = scene.grid();
    let volume = grid.cell_volume();
    scene
        .massive_cells()
        .map(|(c, rho)| {
            let [i, j, k] = grid.cell_ijk(c);
            Source { position: grid.cell_center(i, j, k), mass: rho * volume }
        })
        .collect()
}

pub(crate) type Coeffs = Option<Box<[Complex64]>>;

#[derive(Debug, Clone)]
pub struct Octree {
    pub(crate) levels: usize,
    pub(crate) lower: Vec3,
    pub(crate) width: f64,
    /// Sources grouped by leaf.
    pub(crate) sources: Vec<Source>,
    /// Input position of each entry of `sources`.
    pub(crate) original: Vec<usize>,
    pub(crate) leaf_start: Vec<usize>,
    pub(crate) order: Option<usize>,
    pub(crate) me: Vec<Vec<Coeffs>>,
    pub(crate) le: Vec<Vec<Coeffs>>,
    pub(crate) downward_done: bool,
}

impl Octree {
    /// Depth-`levels` tree over the scene's bounding cube.
    pub fn build(scene: &DensityScene, levels: usize) -> Result<Self> {
        let grid = scene.grid();
        let l = grid.lengths();
        let width = l[0].max(l[1]).max(l[2]);
        Self::from_sources(point_sources(scene), grid.origin(), width, levels)
    }

    /// Tree over the cube `[lower, lower + width]³`.
    pub fn from_sources(sources: Vec<Source>, lower: Vec3, width: f64, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(GravError::InvalidArgument(format!("octree needs at least 2 levels, got {levels}")));
        }
        if levels > 10 {
            return Err(GravError::InvalidArgument(format!("octree depth {levels} is too large")));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(GravError::InvalidArgument("root box width must be positive".into()));
        }
        let n = 1usize << levels;
        let mut tree = Self {
            levels,
            lower,
            width,
            sources: Vec::new(),
            original: Vec::new(),
            leaf_start: Vec::new(),
            order: None,
            me: Vec::new(),
            le: Vec::new(),
            downward_done: false,
        };
        let mut leaf_of = Vec::with_capacity(sources.len());
        for s in &sources {
            if !tree.inside(s.position) {
                return Err(GravError::OutsideTree { point: s.position });
            }
            leaf_of.push(tree.leaf_containing(s.position));
        }
        let leaves = n * n * n;
        let mut counts = vec![0usize; leaves + 1];
        for &b in &leaf_of {
            counts[b + 1] += 1;
        }
        for b in 0..leaves {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut sorted = vec![Source { position: [0.0; 3], mass: 0.0 }; sources.len()];
        let mut original = vec![0usize; sources.len()];
        for (i, (s, &b)) in sources.iter().zip(&leaf_of).enumerate() {
            sorted[fill[b]] = *s;
            original[fill[b]] = i;
            fill[b] += 1;
        }
        tree.sources = sorted;
        tree.original = original;
        tree.leaf_start = counts;
        Ok(tree)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn lower(&self) -> Vec3 {
        self.lower
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn boxes_per_axis(&self, level: usize) -> usize {
        1 << level
    }

    pub fn box_count(&self, level: usize) -> usize {
        let n = self.boxes_per_axis(level);
        n * n * n
    }

    pub fn box_index(&self, level: usize, ijk: [usize; 3]) -> usize {
        let n = self.boxes_per_axis(level);
        ijk[0] + n * (ijk[1] + n * ijk[2])
    }

    pub fn box_coords(&self, level: usize, b: usize) -> [usize; 3] {
        let n = self.boxes_per_axis(level);
        [b % n, (b / n) % n, b / (n * n)]
    }

    /// Box centre in root-scaled coordinates (root box is `[0, 1]³`).
    pub(crate) fn scaled_center(&self, level: usize, b: usize) -> Vec3 {
        let n = self.boxes_per_axis(level) as f64;
        let c = self.box_coords(level, b);
        [(c[0] as f64 + 0.5) / n, (c[1] as f64 + 0.5) / n, (c[2] as f64 + 0.5) / n]
    }

    pub fn box_center(&self, level: usize, b: usize) -> Vec3 {
        let u = self.scaled_center(level, b);
        [
            self.lower[0] + u[0] * self.width,
            self.lower[1] + u[1] * self.width,
            self.lower[2] + u[2] * self.width,
        ]
    }

    pub fn box_half_width(&self, level: usize) -> f64 {
        0.5 * self.width / self.boxes_per_axis(level) as f64
    }

    pub(crate) fn scaled(&self, x: Vec3) -> Vec3 {
        [
            (x[0] - self.lower[0]) / self.width,
            (x[1] - self.lower[1]) / self.width,
            (x[2] - self.lower[2]) / self.width,
        ]
    }

    /// Inside the root box, up to a relative tolerance on its faces.
    pub fn inside(&self, x: Vec3) -> bool {
        let u = self.scaled(x);
        u.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v))
    }

    /// Leaf holding `x`; points on the upper faces go to the last box.
    pub fn leaf_containing(&self, x: Vec3) -> usize {
        let n = self.boxes_per_axis(self.levels);
        let u = self.scaled(x);
        let ijk = u.map(|v| ((v * n as f64).floor().max(0.0) as usize).min(n - 1));
        self.box_index(self.levels, ijk)
    }

    pub fn leaf_sources(&self, leaf: usize) -> &[Source] {
        &self.sources[self.leaf_start[leaf]..self.leaf_start[leaf + 1]]
    }

    /// Input indices of a leaf's sources.
    pub fn leaf_source_indices(&self, leaf: usize) -> &[usize] {
        &self.original[self.leaf_start[leaf]..self.leaf_start[leaf + 1]]
    }

    pub fn parent(&self, level: usize, b: usize) -> usize {
        let c = self.box_coords(level, b);
        self.box_index(level - 1, [c[0] / 2, c[1] / 2, c[2] / 2])
    }

    pub fn children(&self, level: usize, b: usize) -> [usize; 8] {
        let c = self.box_coords(level, b);
        std::array::from_fn(|o| {
            self.box_index(level + 1, [2 * c[0] + (o & 1), 2 * c[1] + ((o >> 1) & 1), 2 * c[2] + ((o >> 2) & 1)])
        })
    }

    /// Same-level boxes touching `b`, including `b` (at most 27).
    pub fn neighbors(&self, level: usize, b: usize) -> Vec<usize> {
        let n = self.boxes_per_axis(level) as i64;
        let c = self.box_coords(level, b);
        let mut out = Vec::with_capacity(27);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let q = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if q.iter().all(|&v| (0..n).contains(&v)) {
                        out.push(self.box_index(level, [q[0] as usize, q[1] as usize, q[2] as usize]));
                    }
                }
            }
        }
        out
    }

    /// Children of the parent's neighbours that are not neighbours of `b`
    /// (at most 189). Empty at levels 0 and 1.
    pub fn interaction_list(&self, level: usize, b: usize) -> Vec<usize> {
        if level < 2 {
            return Vec::new();
        }
        let c = self.box_coords(level, b);
        let mut out = Vec::with_capacity(189);
        for pn in self.neighbors(level - 1, self.parent(level, b)) {
            for child in self.children(level - 1, pn) {
                let q = self.box_coords(level, child);
                let near = (0..3).all(|d| (q[d] as i64 - c[d] as i64).abs() <= 1);
                if !near {
                    out.push(child);
                }
            }
        }
        out
    }

    /// Near list of a leaf.
    pub fn near_list(&self, leaf: usize) -> Vec<usize> {
        self.neighbors(self.levels, leaf)
    }
}
