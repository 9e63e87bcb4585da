//! Krylov solvers on flat vectors. Inner products are unweighted; the grid
//! quadrature weight is uniform so it cancels.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − Ax‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for a symmetric positive definite `a`.
pub fn pcg<A, M>(a: A, precond: M, b: &[f64], tol: f64, max_iter: usize) -> Result<KrylovOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    // the preconditioned right-hand side is a good first guess
    let mut x = precond(b);
    let ax = a(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rel = norm(&r) / bnorm;
    if rel <= tol {
        return Ok(KrylovOutcome {
            solution: x,
            iterations: 0,
            relative_residual: rel,
        });
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Indefinite { curvature: pap });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(KrylovOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        what: "conjugate gradients",
        iterations: max_iter,
        residual: rel,
    })
}

/// Restarted GMRES with right preconditioning; works for indefinite systems.
pub fn gmres<A, M>(
    a: A,
    precond: M,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let out = gmres_partial(a, precond, b, tol, restart, max_iter);
    if out.relative_residual <= tol {
        Ok(out)
    } else {
        Err(Error::NoConvergence {
            what: "GMRES",
            iterations: out.iterations,
            residual: out.relative_residual,
        })
    }
}

/// Like [`gmres`], but returns the last iterate when the tolerance is not
/// reached, for callers that can use an inexact solution.
pub fn gmres_partial<A, M>(
    a: A,
    precond: M,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> KrylovOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return KrylovOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let m = restart.max(1);
    let mut total = 0usize;
    let mut rel;
    while total < max_iter {
        let ax = a(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return KrylovOutcome {
                solution: x,
                iterations: total,
                relative_residual: rel,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut precond_basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            total += 1;
            let z = precond(&basis[j]);
            let mut w = a(&z);
            precond_basis.push(z);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm(&w);
            h[j + 1][j] = wn;
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= tol || wn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the triangular least-squares system
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&precond_basis) {
            for (xk, zk) in x.iter_mut().zip(z) {
                *xk += yi * zk;
            }
        }
        if used == 0 {
            break;
        }
    }
    let ax = a(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    KrylovOutcome {
        solution: x,
        iterations: total,
        relative_residual: norm(&r) / bnorm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(shift: f64) -> impl Fn(&[f64]) -> Vec<f64> {
        move |x: &[f64]| {
            let n = x.len();
            (0..n)
                .map(|i| {
                    let l = if i > 0 { x[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                    (2.0 + shift) * x[i] - l - r
                })
                .collect()
        }
    }

    #[test]
    fn pcg_solves_spd_tridiagonal() {
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let a = tridiag(0.1);
        let out = pcg(&a, |r: &[f64]| r.to_vec(), &b, 1e-12, 500).unwrap();
        let ax = a(&out.solution);
        let err: f64 = ax.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn pcg_reports_indefinite() {
        let b: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
        let r = pcg(tridiag(-3.5), |r: &[f64]| r.to_vec(), &b, 1e-12, 500);
        assert!(matches!(r, Err(Error::Indefinite { .. }) | Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn gmres_solves_indefinite_tridiagonal() {
        let b: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).cos()).collect();
        let a = tridiag(-1.3);
        let out = gmres(&a, |r: &[f64]| r.to_vec(), &b, 1e-12, 40, 4000).unwrap();
        let ax = a(&out.solution);
        let err: f64 = ax.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
