//! Jacobi-Richardson smoothing, coarse LU and the geometric V-cycle.

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, DVector, Dyn};

use super::operator::LevelOperator;
use super::transfer::{prolong, restrict};
use super::{BoundaryCondition, GridHierarchy};
use crate::error::{GravError, Result};

/// Square operator with an accessible diagonal.
pub trait LinearOperator {
    fn len(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
    fn diagonal(&self) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl LinearOperator for LevelOperator {
    fn len(&self) -> usize {
        LevelOperator::len(self)
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        LevelOperator::apply_into(self, x, y)
    }
    fn diagonal(&self) -> &[f64] {
        LevelOperator::diagonal(self)
    }
}

/// `nk` sweeps of `y <- y + diag(A)^-1 (b - A y)`, in place.
pub fn smooth<A: LinearOperator + ?Sized>(op: &A, b: &[f64], y: &mut [f64], nk: usize) -> Result<()> {
    let n = op.len();
    if b.len() != n || y.len() != n {
        return Err(GravError::SizeMismatch { expected: n, got: b.len().min(y.len()) });
    }
    let mut ay = vec![0.0; n];
    let d = op.diagonal();
    for _ in 0..nk {
        op.apply_into(y, &mut ay)?;
        for i in 0..n {
            y[i] += (b[i] - ay[i]) / d[i];
        }
    }
    Ok(())
}

/// Dense LU of the assembled coarsest operator.
pub struct CoarseSolver {
    lu: LU<f64, Dyn, Dyn>,
    n: usize,
}

impl CoarseSolver {
    pub fn new(op: &LevelOperator) -> Result<Self> {
        Self::from_matrix(op.assemble_dense())
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(GravError::SingularOperator);
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(GravError::SizeMismatch { expected: self.n, got: b.len() });
        }
        let x = self
            .lu
            .solve(&DVector::from_column_slice(b))
            .ok_or(GravError::SingularOperator)?;
        Ok(x.as_slice().to_vec())
    }
}

/// Operators on every level plus the coarse factorization.
pub struct Multigrid {
    levels: Vec<LevelOperator>,
    coarse: CoarseSolver,
    nk: usize,
}

impl Multigrid {
    pub fn new(hierarchy: &GridHierarchy, bc: BoundaryCondition, nk: usize) -> Result<Self> {
        if nk == 0 {
            return Err(GravError::InvalidArgument("smoothing steps must be at least 1".into()));
        }
        let levels = hierarchy
            .levels()
            .iter()
            .map(|g| LevelOperator::new(g, bc))
            .collect::<Result<Vec<_>>>()?;
        let coarse = CoarseSolver::new(&levels[0])?;
        Ok(Self { levels, coarse, nk })
    }

    pub fn finest(&self) -> &LevelOperator {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn levels(&self) -> &[LevelOperator] {
        &self.levels
    }

    /// One V(nk, nk) cycle from a zero initial guess.
    pub fn v_cycle(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.cycle(self.levels.len() - 1, b)
    }

    fn cycle(&self, level: usize, b: &[f64]) -> Result<Vec<f64>> {
        if level == 0 {
            return self.coarse.solve(b);
        }
        let op = &self.levels[level];
        let coarse_op = &self.levels[level - 1];
        let mut y = vec![0.0; op.len()];
        smooth(op, b, &mut y, self.nk)?;
        let mut r = vec![0.0; op.len()];
        op.residual_into(b, &y, &mut r)?;
        let mut rc = restrict(op.grid(), coarse_op.grid(), &r)?;
        if coarse_op.is_dirichlet() {
            for (v, &on) in rc.iter_mut().zip(coarse_op.boundary_mask()) {
                if on {
                    *v = 0.0;
                }
            }
        }
        let ec = self.cycle(level - 1, &rc)?;
        let e = prolong(coarse_op.grid(), op.grid(), &ec)?;
        for (yi, ei) in y.iter_mut().zip(&e) {
            *yi += ei;
        }
        smooth(op, b, &mut y, self.nk)?;
        Ok(y)
    }
}
