//! Fast multipole evaluation of the gravity of cell-centred point masses.
//!
//! Expansions are solid-harmonic series of the `1/r` potential of degrees
//! `0..=p` about box centres, in coordinates scaled to the unit root box.
//! Gravity is the analytic gradient of the local expansion plus a direct sum
//! over the 27 neighbouring leaves.

mod harmonics;
mod tree;

use num_complex::Complex64;
use rayon::prelude::*;

pub use harmonics::{coeff_count, idx, irregular, local_gradient, local_potential, multipole_potential, regular, sigma};
pub use tree::{point_sources, Octree, Source};

use crate::error::{GravError, Result};
use crate::model::{ComponentMask, DensityScene, EvaluationSet, GravityResult, PhysicalConstants, Vec3};
use crate::summation::{point_kernel, SelfInteraction};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Translate a multipole expansion by `d = new_center - old_center`.
pub fn m2m(m: &[Complex64], p: usize, d: Vec3, out: &mut [Complex64]) {
    let r = regular(d, p);
    for n in 0..=p {
        for mm in -(n as i64)..=n as i64 {
            let mut s = ZERO;
            for j in 0..=n {
                let l = n - j;
                for k in -(j as i64)..=j as i64 {
                    let q = mm - k;
                    if q.unsigned_abs() as usize <= l {
                        s += m[idx(j, k)] * r[idx(l, q)] * sigma(k, q);
                    }
                }
            }
            out[idx(n, mm)] += s;
        }
    }
}

/// Convert a multipole expansion into a local one; `irr` holds the irregular
/// harmonics of `local_center - multipole_center` up to degree `2p`.
pub fn m2l(m: &[Complex64], p: usize, irr: &[Complex64], out: &mut [Complex64]) {
    for n in 0..=p {
        for mm in -(n as i64)..=n as i64 {
            let mv = m[idx(n, mm)];
            if mv == ZERO {
                continue;
            }
            for j in 0..=p {
                for k in 0..=j as i64 {
                    let t = mm + k;
                    if t.unsigned_abs() as usize > n + j {
                        continue;
                    }
                    out[idx(j, k)] += mv * irr[idx(n + j, t)] * sigma(k, mm);
                }
            }
        }
    }
}

/// Fills the negative orders of a conjugate-symmetric expansion.
fn conj_fill(v: &mut [Complex64], p: usize) {
    for j in 1..=p {
        for k in 1..=j as i64 {
            v[idx(j, -k)] = v[idx(j, k)].conj();
        }
    }
}

/// Translate a local expansion by `d = new_center - old_center`.
pub fn l2l(l: &[Complex64], p: usize, d: Vec3, out: &mut [Complex64]) {
    let r = regular(d, p);
    for lo in 0..=p {
        for q in -(lo as i64)..=lo as i64 {
            let mut s = ZERO;
            for j in lo..=p {
                let dj = j - lo;
                for k in -(j as i64)..=j as i64 {
                    let t = k - q;
                    if t.unsigned_abs() as usize <= dj {
                        s += l[idx(j, k)] * r[idx(dj, t)] * sigma(q, t);
                    }
                }
            }
            out[idx(lo, q)] += s;
        }
    }
}

impl Octree {
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    /// Multipole expansion of a box, if it holds mass.
    pub fn multipole(&self, level: usize, b: usize) -> Option<&[Complex64]> {
        self.me.get(level)?.get(b)?.as_deref()
    }

    /// Local expansion of a box, if it receives far-field contributions.
    pub fn local(&self, level: usize, b: usize) -> Option<&[Complex64]> {
        self.le.get(level)?.get(b)?.as_deref()
    }

    /// P2M at the leaves and M2M up to the root, for degrees `0..=p`.
    pub fn upward_sweep(&mut self, p: usize) {
        let depth = self.levels;
        let nc = coeff_count(p);
        let mut me: Vec<Vec<tree::Coeffs>> = (0..=depth).map(|l| vec![None; self.box_count(l)]).collect();
        me[depth] = (0..self.box_count(depth))
            .into_par_iter()
            .map(|b| {
                let src = self.leaf_sources(b);
                if src.is_empty() {
                    return None;
                }
                let c = self.scaled_center(depth, b);
                let mut acc = vec![ZERO; nc];
                for s in src {
                    let r = regular(sub(c, self.scaled(s.position)), p);
                    for (a, v) in acc.iter_mut().zip(&r) {
                        *a += v * s.mass;
                    }
                }
                Some(acc.into_boxed_slice())
            })
            .collect();
        for level in (0..depth).rev() {
            let (upper, lower) = me.split_at_mut(level + 1);
            let children = &lower[0];
            upper[level] = (0..self.box_count(level))
                .into_par_iter()
                .map(|b| {
                    let pc = self.scaled_center(level, b);
                    let mut acc: Option<Vec<Complex64>> = None;
                    for child in self.children(level, b) {
                        if let Some(m) = &children[child] {
                            let buf = acc.get_or_insert_with(|| vec![ZERO; nc]);
                            m2m(m, p, sub(pc, self.scaled_center(level + 1, child)), buf);
                        }
                    }
                    acc.map(Vec::into_boxed_slice)
                })
                .collect();
        }
        self.me = me;
        self.le.clear();
        self.order = Some(p);
        self.downward_done = false;
    }

    /// M2L from every interaction list and L2L from parents, level by level.
    pub fn downward_sweep(&mut self) -> Result<()> {
        let p = self
            .order
            .ok_or_else(|| GravError::InvalidArgument("downward sweep needs the upward sweep first".into()))?;
        let depth = self.levels;
        let nc = coeff_count(p);
        let mut le: Vec<Vec<tree::Coeffs>> = (0..=depth).map(|l| vec![None; self.box_count(l)]).collect();
        for level in 2..=depth {
            let n = self.boxes_per_axis(level) as f64;
            // Irregular harmonics per integer offset in [-3, 3]³.
            let cache: Vec<Vec<Complex64>> = (0..343)
                .map(|o| {
                    let d = [(o % 7) as f64 - 3.0, ((o / 7) % 7) as f64 - 3.0, (o / 49) as f64 - 3.0];
                    if d == [0.0; 3] {
                        Vec::new()
                    } else {
                        irregular([d[0] / n, d[1] / n, d[2] / n], 2 * p)
                    }
                })
                .collect();
            let me = &self.me[level];
            let parent_le = &le[level - 1];
            let this: Vec<tree::Coeffs> = (0..self.box_count(level))
                .into_par_iter()
                .map(|b| {
                    let mut acc: Option<Vec<Complex64>> = None;
                    let c = self.box_coords(level, b);
                    for s in self.interaction_list(level, b) {
                        if let Some(m) = &me[s] {
                            let q = self.box_coords(level, s);
                            let o = (c[0] + 3 - q[0]) + 7 * ((c[1] + 3 - q[1]) + 7 * (c[2] + 3 - q[2]));
                            m2l(m, p, &cache[o], acc.get_or_insert_with(|| vec![ZERO; nc]));
                        }
                    }
                    if let Some(acc) = acc.as_mut() {
                        conj_fill(acc, p);
                    }
                    let parent = self.parent(level, b);
                    if let Some(pl) = &parent_le[parent] {
                        let d = sub(self.scaled_center(level, b), self.scaled_center(level - 1, parent));
                        l2l(pl, p, d, acc.get_or_insert_with(|| vec![ZERO; nc]));
                    }
                    acc.map(Vec::into_boxed_slice)
                })
                .collect();
            le[level] = this;
        }
        self.le = le;
        self.downward_done = true;
        Ok(())
    }

    /// Far field (local expansion gradient) plus near-field direct sum.
    pub fn evaluate(
        &self,
        evals: &EvaluationSet,
        policy: SelfInteraction,
        constants: &PhysicalConstants,
    ) -> Result<GravityResult> {
        if !self.downward_done {
            return Err(GravError::InvalidArgument("evaluate needs both sweeps first".into()));
        }
        let p = self.order.expect("sweeps done");
        let depth = self.levels;
        let far_scale = -constants.g / (self.width * self.width);
        let values = evals
            .points()
            .par_iter()
            .map(|&x| {
                if !self.inside(x) {
                    return Err(GravError::OutsideTree { point: x });
                }
                let leaf = self.leaf_containing(x);
                let mut g = [0.0; 3];
                if let Some(l) = self.local(depth, leaf) {
                    let grad = local_gradient(l, p, sub(self.scaled(x), self.scaled_center(depth, leaf)));
                    for d in 0..3 {
                        g[d] = far_scale * grad[d];
                    }
                }
                for nb in self.near_list(leaf) {
                    for (s, &orig) in self.leaf_sources(nb).iter().zip(self.leaf_source_indices(nb)) {
                        if s.position == x {
                            match policy {
                                SelfInteraction::Exclude => continue,
                                SelfInteraction::Reject => {
                                    return Err(GravError::CoincidentSource { point: x, source_index: orig })
                                }
                            }
                        }
                        let k = point_kernel(constants.g * s.mass, x, s.position);
                        for d in 0..3 {
                            g[d] += k[d];
                        }
                    }
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GravityResult::new(values, ComponentMask::All))
    }
}

/// Tree depth and expansion degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmmOptions {
    pub levels: usize,
    pub order: usize,
    pub self_interaction: SelfInteraction,
}

/// Smallest depth `L >= 2` leaving at most 3 cells per leaf along an axis.
pub fn default_levels(cells_per_axis: usize) -> usize {
    let mut l = 2;
    while cells_per_axis > 3 << l {
        l += 1;
    }
    l
}

/// Build, sweep and evaluate in one call.
pub fn fmm_gravity(
    scene: &DensityScene,
    evals: &EvaluationSet,
    opts: &FmmOptions,
    constants: &PhysicalConstants,
) -> Result<GravityResult> {
    let mut tree = Octree::build(scene, opts.levels)?;
    tree.upward_sweep(opts.order);
    tree.downward_sweep()?;
    tree.evaluate(evals, opts.self_interaction, constants)
}

/// Exact pairwise sum over point sources.
pub fn direct_sum(
    sources: &[Source],
    evals: &EvaluationSet,
    policy: SelfInteraction,
    constants: &PhysicalConstants,
) -> Result<GravityResult> {
    let values = evals
        .points()
        .par_iter()
        .map(|&x| {
            let mut g = [0.0; 3];
            for (i, s) in sources.iter().enumerate() {
                if s.position == x {
                    match policy {
                        SelfInteraction::Exclude => continue,
                        SelfInteraction::Reject => return Err(GravError::CoincidentSource { point: x, source_index: i }),
                    }
                }
                let k = point_kernel(constants.g * s.mass, x, s.position);
                for d in 0..3 {
                    g[d] += k[d];
                }
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GravityResult::new(values, ComponentMask::All))
}

/// Neighbour census of a `k³` block of boxes: `(count, neighbours)` for
/// corner, edge, face and interior boxes.
pub fn neighbor_census(k: usize) -> [(usize, usize); 4] {
    let e = k.saturating_sub(2);
    [(8, 7), (12 * e, 11), (6 * e * e, 17), (e * e * e, 26)]
}

/// Direct-interaction work of `k³` boxes holding `b` particles each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkModel {
    pub k: usize,
    pub particles_per_box: usize,
}

impl WorkModel {
    /// `sum over boxes of B(B-1)/2 + N_B B²`.
    pub fn direct_work(&self) -> f64 {
        let b = self.particles_per_box as f64;
        neighbor_census(self.k)
            .iter()
            .map(|&(count, nb)| count as f64 * (b * (b - 1.0) / 2.0 + nb as f64 * b * b))
            .sum()
    }

    /// Large-`B` work, `sum over boxes of (N_B + 1/2) B²`.
    pub fn asymptotic_work(&self) -> f64 {
        let b = self.particles_per_box as f64;
        neighbor_census(self.k)
            .iter()
            .map(|&(count, nb)| count as f64 * (nb as f64 + 0.5) * b * b)
            .sum()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(GravError::InvalidArgument(format!("work ratio needs k >= 2, got {k}")));
    }
    Ok(())
}

/// Near-field work ratio between `2k` and `k` boxes per axis.
pub fn work_ratio(k: usize) -> Result<f64> {
    check_k(k)?;
    let w = |k: usize| WorkModel { k, particles_per_box: 1 }.asymptotic_work();
    Ok(w(2 * k) / w(k))
}

/// The rounded cubic fit `(8k³ - 8.16k² + 2.74k - 0.32)/(k³ - 2.04k² + 1.37k - 0.32)`.
pub fn work_ratio_polynomial(k: f64) -> Result<f64> {
    if !(k >= 2.0) {
        return Err(GravError::InvalidArgument(format!("work ratio needs k >= 2, got {k}")));
    }
    Ok((8.0 * k.powi(3) - 8.16 * k * k + 2.74 * k - 0.32) / (k.powi(3) - 2.04 * k * k + 1.37 * k - 0.32))
}
