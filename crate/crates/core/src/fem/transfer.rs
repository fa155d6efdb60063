//! Trilinear prolongation between nested levels and its transpose.
//!
//! `restrict` is the exact adjoint of `prolong` (no scaling), so on a
//! constant field `restrict(prolong(1))` is 2 per axis at interior coarse
//! nodes and 1.5 per axis on the boundary: 8 in the interior of a 3D grid.

use crate::error::{GravError, Result};
use crate::model::StructuredGrid;

/// Coarse parents of one fine index along an axis, with weights.
#[inline]
fn parents(fine: usize) -> ([(usize, f64); 2], usize) {
    if fine.is_multiple_of(2) {
        ([(fine / 2, 1.0), (0, 0.0)], 1)
    } else {
        ([((fine - 1) / 2, 0.5), (fine.div_ceil(2), 0.5)], 2)
    }
}

fn check_pair(coarse: &StructuredGrid, fine: &StructuredGrid) -> Result<()> {
    let c = coarse.cells();
    let f = fine.cells();
    let same_box = (0..3).all(|d| {
        let scale = coarse.lengths()[d].abs().max(1.0);
        (coarse.origin()[d] - fine.origin()[d]).abs() <= 1e-12 * scale
            && (coarse.lengths()[d] - fine.lengths()[d]).abs() <= 1e-12 * scale
    });
    if !same_box || (0..3).any(|d| f[d] != 2 * c[d]) {
        return Err(GravError::LevelMismatch(format!(
            "fine grid {f:?} is not a 2x refinement of coarse grid {c:?} on the same box"
        )));
    }
    Ok(())
}

fn for_each_fine(fine: &StructuredGrid, coarse: &StructuredGrid, mut f: impl FnMut(usize, usize, f64)) {
    let nf = fine.nodes();
    let nc = coarse.nodes();
    for k in 0..nf[2] {
        let (pk, ck) = parents(k);
        for j in 0..nf[1] {
            let (pj, cj) = parents(j);
            for i in 0..nf[0] {
                let (pi, ci) = parents(i);
                let fi = i + nf[0] * (j + nf[1] * k);
                for &(kk, wk) in &pk[..ck] {
                    for &(jj, wj) in &pj[..cj] {
                        for &(ii, wi) in &pi[..ci] {
                            f(fi, ii + nc[0] * (jj + nc[1] * kk), wi * wj * wk);
                        }
                    }
                }
            }
        }
    }
}

/// Trilinear interpolation of coarse nodal values onto the fine nodes.
pub fn prolong(coarse: &StructuredGrid, fine: &StructuredGrid, v: &[f64]) -> Result<Vec<f64>> {
    check_pair(coarse, fine)?;
    if v.len() != coarse.node_count() {
        return Err(GravError::SizeMismatch { expected: coarse.node_count(), got: v.len() });
    }
    let mut out = vec![0.0; fine.node_count()];
    for_each_fine(fine, coarse, |fi, ci, w| out[fi] += w * v[ci]);
    Ok(out)
}

/// Transpose of [`prolong`].
pub fn restrict(fine: &StructuredGrid, coarse: &StructuredGrid, u: &[f64]) -> Result<Vec<f64>> {
    check_pair(coarse, fine)?;
    if u.len() != fine.node_count() {
        return Err(GravError::SizeMismatch { expected: fine.node_count(), got: u.len() });
    }
    let mut out = vec![0.0; coarse.node_count()];
    for_each_fine(fine, coarse, |fi, ci, w| out[ci] += w * u[fi]);
    Ok(out)
}
