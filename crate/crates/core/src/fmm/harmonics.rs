//! Solid harmonics for the Laplace kernel.
//!
//! With `d± = dx ± i dy`, let `D_n^m = d+^m dz^(n-m)` for `m >= 0` and
//! `d-^|m| dz^(n-|m|)` for `m < 0`. For harmonic `f`,
//! `f(x + y) = sum_{n,m} R_n^m(y) D_n^m f(x)`, which defines the regular
//! harmonics `R`, and the irregular harmonics are `I_n^m = D_n^m (1/r)`.
//! Operator products obey `D_j^k D_l^q = sigma(k, q) D_{j+l}^{k+q}`.

use num_complex::Complex64;

use crate::model::Vec3;

/// Position of `(n, m)` in a flat coefficient array.
#[inline]
pub fn idx(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m) as usize
}

/// Coefficients of degrees `0..=p`.
#[inline]
pub fn coeff_count(p: usize) -> usize {
    (p + 1) * (p + 1)
}

/// Sign picked up by `D_j^k D_l^q`.
#[inline]
pub fn sigma(k: i64, q: i64) -> f64 {
    if k * q < 0 && k.abs().min(q.abs()) % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Regular harmonics `R_n^m(y)` for `n <= p`.
pub fn regular(y: Vec3, p: usize) -> Vec<Complex64> {
    let mut r = vec![Complex64::new(0.0, 0.0); coeff_count(p)];
    let (x, yv, z) = (y[0], y[1], y[2]);
    let r2 = x * x + yv * yv + z * z;
    let ybar = Complex64::new(x, -yv);
    r[0] = Complex64::new(1.0, 0.0);
    for m in 0..=p {
        if m > 0 {
            r[idx(m, m as i64)] = r[idx(m - 1, m as i64 - 1)] * ybar / (2.0 * m as f64);
        }
        let mi = m as i64;
        for n in m..p {
            let prev = if n > m { r[idx(n - 1, mi)] } else { Complex64::new(0.0, 0.0) };
            let denom = ((n - m + 1) * (n + m + 1)) as f64;
            r[idx(n + 1, mi)] = (r[idx(n, mi)] * ((2 * n + 1) as f64 * z) - prev * r2) / denom;
        }
    }
    fill_negative(&mut r, p);
    r
}

/// Irregular harmonics `I_n^m(x) = D_n^m (1/|x|)` for `n <= p`.
pub fn irregular(x: Vec3, p: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); coeff_count(p)];
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let inv_r2 = 1.0 / r2;
    let zeta = Complex64::new(x[0], x[1]);
    let z = x[2];
    v[0] = Complex64::new(1.0 / r2.sqrt(), 0.0);
    for m in 0..=p {
        if m > 0 {
            v[idx(m, m as i64)] = -v[idx(m - 1, m as i64 - 1)] * zeta * ((2 * m - 1) as f64 * inv_r2);
        }
        let mi = m as i64;
        for n in m..p {
            let prev = if n > m { v[idx(n - 1, mi)] } else { Complex64::new(0.0, 0.0) };
            let c = (n * n) as f64 - (m * m) as f64;
            v[idx(n + 1, mi)] = -(v[idx(n, mi)] * ((2 * n + 1) as f64 * z) + prev * c) * inv_r2;
        }
    }
    fill_negative(&mut v, p);
    v
}

fn fill_negative(v: &mut [Complex64], p: usize) {
    for n in 1..=p {
        for m in 1..=n as i64 {
            v[idx(n, -m)] = v[idx(n, m)].conj();
        }
    }
}

/// `sum L_j^k R_j^k(y)` (real for conjugate-symmetric `L`).
pub fn local_potential(l: &[Complex64], p: usize, y: Vec3) -> f64 {
    let r = regular(y, p);
    l.iter().zip(&r).map(|(a, b)| (a * b).re).sum()
}

/// Gradient of `sum L_j^k R_j^k(y)` using `dz R_n^m = R_{n-1}^m` and
/// `d+ R_n^m = sigma(m-1, 1) R_{n-1}^{m-1}`.
pub fn local_gradient(l: &[Complex64], p: usize, y: Vec3) -> Vec3 {
    if p == 0 {
        return [0.0; 3];
    }
    let r = regular(y, p - 1);
    let mut dz = 0.0;
    let mut dplus = Complex64::new(0.0, 0.0);
    for j in 1..=p {
        let jm = j as i64 - 1;
        for k in -(j as i64)..=j as i64 {
            let c = l[idx(j, k)];
            if k.abs() <= jm {
                dz += (c * r[idx(j - 1, k)]).re;
            }
            if (k - 1).abs() <= jm {
                dplus += c * r[idx(j - 1, k - 1)] * sigma(k - 1, 1);
            }
        }
    }
    [dplus.re, dplus.im, dz]
}

/// `sum M_n^m I_n^m(x)`.
pub fn multipole_potential(m: &[Complex64], p: usize, x: Vec3) -> f64 {
    let i = irregular(x, p);
    m.iter().zip(&i).map(|(a, b)| (a * b).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: Vec3) -> f64 {
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    #[test]
    fn low_order_closed_forms() {
        let y = [0.3, -0.7, 0.4];
        let r = regular(y, 2);
        assert!((r[idx(1, 0)].re - 0.4).abs() < 1e-15);
        assert!((r[idx(1, 1)] - Complex64::new(0.15, 0.35)).norm() < 1e-15);
        let r2 = 0.09 + 0.49 + 0.16;
        assert!((r[idx(2, 0)].re - (3.0 * 0.16 - r2) / 4.0).abs() < 1e-15);

        let x = [0.5, 0.2, -1.1];
        let rr = norm(x);
        let i = irregular(x, 2);
        assert!((i[0].re - 1.0 / rr).abs() < 1e-15);
        assert!((i[idx(1, 0)].re + x[2] / rr.powi(3)).abs() < 1e-15);
        let d2z = (3.0 * x[2] * x[2] - rr * rr) / rr.powi(5);
        assert!((i[idx(2, 0)].re - d2z).abs() < 1e-14);
        // d+ (1/r) = -(x + i y) / r³
        assert!((i[idx(1, 1)] - Complex64::new(-x[0], -x[1]) / rr.powi(3)).norm() < 1e-15);
    }

    #[test]
    fn irregular_derivatives_match_finite_differences() {
        let x = [0.4, -0.3, 0.9];
        let p = 6;
        let i = irregular(x, p + 1);
        let h = 1e-5;
        for n in 0..=p {
            for m in -(n as i64)..=n as i64 {
                let mut xp = x;
                xp[2] += h;
                let mut xm = x;
                xm[2] -= h;
                let fd = (irregular(xp, p)[idx(n, m)] - irregular(xm, p)[idx(n, m)]) / (2.0 * h);
                let exact = i[idx(n + 1, m)];
                assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn addition_theorem_reproduces_inverse_distance() {
        let x = [1.3, -0.8, 2.1];
        let y = [0.2, 0.25, -0.3];
        let exact = 1.0 / norm([x[0] + y[0], x[1] + y[1], x[2] + y[2]]);
        let p = 30;
        let r = regular(y, p);
        let i = irregular(x, p);
        let s: f64 = r.iter().zip(&i).map(|(a, b)| (a * b).re).sum();
        assert!((s - exact).abs() < 1e-15 * exact.max(1.0) * 10.0);
    }

    #[test]
    fn regular_addition_rule() {
        let a = [0.3, -0.2, 0.5];
        let b = [-0.1, 0.4, 0.2];
        let p = 8;
        let ra = regular(a, p);
        let rb = regular(b, p);
        let rab = regular([a[0] + b[0], a[1] + b[1], a[2] + b[2]], p);
        for n in 0..=p {
            for m in -(n as i64)..=n as i64 {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..=n {
                    for k in -(j as i64)..=j as i64 {
                        let q = m - k;
                        let l = n - j;
                        if q.unsigned_abs() as usize <= l {
                            s += rb[idx(j, k)] * ra[idx(l, q)] * sigma(k, q);
                        }
                    }
                }
                assert!((s - rab[idx(n, m)]).norm() < 1e-14, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn local_gradient_matches_finite_differences() {
        let p = 7;
        let n = coeff_count(p);
        // A conjugate-symmetric coefficient set.
        let mut l = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..=p {
            for k in 0..=j as i64 {
                let v = Complex64::new((j as f64 + 0.3 * k as f64).sin(), if k == 0 { 0.0 } else { 0.1 * k as f64 });
                l[idx(j, k)] = v;
                l[idx(j, -k)] = v.conj();
            }
        }
        let y = [0.11, -0.07, 0.05];
        let g = local_gradient(&l, p, y);
        let h = 1e-6;
        for d in 0..3 {
            let mut yp = y;
            yp[d] += h;
            let mut ym = y;
            ym[d] -= h;
            let fd = (local_potential(&l, p, yp) - local_potential(&l, p, ym)) / (2.0 * h);
            assert!((fd - g[d]).abs() < 1e-7, "axis {d}: {fd} vs {}", g[d]);
        }
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(2, 3), 1.0);
        assert_eq!(sigma(-1, 3), -1.0);
        assert_eq!(sigma(2, -3), 1.0);
        assert_eq!(sigma(0, -3), 1.0);
        assert_eq!(sigma(-3, 5), -1.0);
    }
}
