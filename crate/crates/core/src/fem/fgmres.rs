//! Right-preconditioned flexible GMRES with restarts.

use super::multigrid::LinearOperator;
use super::SolveStats;
use crate::error::{GravError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub rtol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, restart: 30, max_iterations: 200 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x0`, stopping once `|r_i| < rtol |r_0|`.
///
/// Non-convergence within `max_iterations` is an error carrying the residual
/// history.
pub fn fgmres<A, P>(
    op: &A,
    mut precond: P,
    b: &[f64],
    x0: Vec<f64>,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, SolveStats)>
where
    A: LinearOperator + ?Sized,
    P: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = op.len();
    if b.len() != n || x0.len() != n {
        return Err(GravError::SizeMismatch { expected: n, got: b.len().min(x0.len()) });
    }
    if !(opts.rtol > 0.0) || opts.restart == 0 {
        return Err(GravError::InvalidArgument("rtol must be positive and restart at least 1".into()));
    }
    let mut x = x0;
    let mut r = vec![0.0; n];
    op.apply_into(&x, &mut r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r0 = norm(&r);
    let mut history = vec![r0];
    let mut stats = SolveStats {
        iterations: 0,
        residual_history: Vec::new(),
        converged: false,
        initial_residual: r0,
        final_residual: r0,
        setup_seconds: 0.0,
        solve_seconds: 0.0,
    };
    if r0 == 0.0 {
        stats.converged = true;
        stats.residual_history = history;
        return Ok((x, stats));
    }
    let target = opts.rtol * r0;
    let m = opts.restart;
    let mut beta = r0;
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    'outer: loop {
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut cols = 0;
        let mut done = false;
        for j in 0..m {
            let zj = precond(&v[j])?;
            op.apply_into(&zj, &mut w)?;
            z.push(zj);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let rho = h[j][j].hypot(h[j + 1][j]);
            if rho == 0.0 {
                done = true;
                break;
            }
            cs[j] = h[j][j] / rho;
            sn[j] = h[j + 1][j] / rho;
            h[j][j] = rho;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            iterations += 1;
            let res = g[j + 1].abs();
            history.push(res);
            if res < target || hn == 0.0 || iterations >= opts.max_iterations {
                done = res < target || hn == 0.0;
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        // Back substitution on the triangular Hessenberg factor.
        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for k in i + 1..cols {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xk, zk) in x.iter_mut().zip(zi) {
                *xk += yi * zk;
            }
        }
        op.apply_into(&x, &mut r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        beta = norm(&r);
        if done || iterations >= opts.max_iterations {
            stats.converged = done;
            break 'outer;
        }
        if beta < target {
            stats.converged = true;
            break 'outer;
        }
    }
    stats.iterations = iterations;
    stats.final_residual = beta;
    stats.residual_history = history;
    if !stats.converged {
        log::warn!("FGMRES stopped after {iterations} iterations, relative residual {:.3e}", beta / r0);
        return Err(GravError::NotConverged {
            iterations,
            relative_residual: beta / r0,
            residual_history: stats.residual_history,
        });
    }
    Ok((x, stats))
}
