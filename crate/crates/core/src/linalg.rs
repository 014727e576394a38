//! Small dense and Krylov solvers used by the boundary-value solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`, recomputed from the iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

fn true_residual<F: Fn(&[f64]) -> Vec<f64>>(op: &F, b: &[f64], x: &[f64]) -> f64 {
    let ax = op(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Conjugate gradients from a zero start for symmetric positive definite `op`.
///
/// Stops when the recursive residual drops below `tol * ||b||`.
pub fn conjugate_gradient<F>(op: F, b: &[f64], tol: f64, max_iter: usize) -> KrylovOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return KrylovOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let ap = op(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let step = rs / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;
        let rs_new = dot(&r, &r);
        if libm::sqrt(rs_new) <= tol * b_norm {
            converged = true;
            break;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    let relative_residual = true_residual(&op, b, &x);
    KrylovOutcome { x, iterations, relative_residual, converged }
}

/// MINRES (Paige-Saunders) from a zero start for symmetric, possibly indefinite `op`.
pub fn minres<F>(op: F, b: &[f64], tol: f64, max_iter: usize) -> KrylovOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = norm2(b);
    if beta1 == 0.0 {
        return KrylovOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = op(&v);
        if iterations >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(yi, ri)| *yi -= c * ri);
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(yi, ri)| *yi -= c * ri);
        core::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm2(&r2);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = libm::hypot(gbar, beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        core::mem::swap(&mut w1, &mut w2);
        core::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 {
            converged = true;
            break;
        }
        if beta == 0.0 {
            break;
        }
    }
    let relative_residual = true_residual(&op, b, &x);
    KrylovOutcome { x, iterations, relative_residual, converged }
}

/// Row-major dense matrix factored in place as `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    /// `max |u_ii| / min |u_ii|`, a crude conditioning indicator.
    pub pivot_ratio: f64,
}

impl DenseLu {
    /// Gaussian elimination with partial pivoting.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let (mut piv, mut best) = (k, a[k * n + k].abs());
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);

            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = 1.0 / pivot_row[k];
            let eliminate = |row: &mut [f64]| {
                let l = row[k] * inv;
                row[k] = l;
                if l != 0.0 {
                    for (rc, pc) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *rc -= l * pc;
                    }
                }
            };
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                tail.par_chunks_mut(n).for_each(eliminate);
            }
            #[cfg(not(feature = "parallel"))]
            tail.chunks_mut(n).for_each(eliminate);
        }
        Ok(DenseLu { n, lu: a, perm, pivot_ratio: if n == 0 { 1.0 } else { pmax / pmin } })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = dot(row, &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matvec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
    }

    fn laplacian(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i > 0 {
                a[i * n + i - 1] = -1.0;
            }
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
            }
        }
        a
    }

    #[test]
    fn cg_diagonal_and_laplacian() {
        let d = [2.0, 3.0, 4.0];
        let out = conjugate_gradient(|v| v.iter().zip(&d).map(|(a, b)| a * b).collect(), &[2.0, 6.0, 12.0], 1e-12, 10);
        assert!(out.converged);
        for (x, e) in out.x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-12);
        }

        let n = 50;
        let a = laplacian(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let out = conjugate_gradient(|v| matvec(&a, n, v), &b, 1e-12, 200);
        assert!(out.converged && out.relative_residual < 1e-11);
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let out = conjugate_gradient(|v| v.to_vec(), &[0.0; 4], 1e-10, 10);
        assert_eq!((out.iterations, out.x), (0, vec![0.0; 4]));
        let out = minres(|v| v.to_vec(), &[0.0; 4], 1e-10, 10);
        assert_eq!((out.iterations, out.x), (0, vec![0.0; 4]));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let n = 100;
        let a = laplacian(n);
        let b = vec![1.0; n];
        let out = conjugate_gradient(|v| matvec(&a, n, v), &b, 1e-14, 3);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn minres_on_indefinite_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 60;
        // symmetric indefinite: Laplacian shifted into the middle of its spectrum
        let mut a = laplacian(n);
        for i in 0..n {
            a[i * n + i] -= 1.3;
        }
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = matvec(&a, n, &x_true);
        let out = minres(|v| matvec(&a, n, v), &b, 1e-12, 1000);
        assert!(out.converged, "{out:?}");
        assert!(out.relative_residual < 1e-10);
        for (x, e) in out.x.iter().zip(&x_true) {
            assert!((x - e).abs() < 1e-8);
        }
    }

    #[test]
    fn lu_solves_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 40;
        let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = matvec(&a, n, &x_true);
        let lu = DenseLu::factor(n, a).unwrap();
        let x = lu.solve(&b);
        for (xi, ei) in x.iter().zip(&x_true) {
            assert!((xi - ei).abs() < 1e-10);
        }
        assert!(lu.pivot_ratio >= 1.0);
    }

    #[test]
    fn lu_detects_singularity() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(DenseLu::factor(2, a), Err(Error::SingularMatrix { column: 1 })));
    }
}
