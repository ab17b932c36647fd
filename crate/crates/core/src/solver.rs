//! Linear solvers for the nonsymmetric implicit-Euler systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Largest system the direct path will factor.
pub const DIRECT_MAX_DOFS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Restarted GMRES with Jacobi preconditioning; falls back to the
    /// direct path on stagnation when the system is small enough.
    Gmres,
    /// Dense LU with partial pivoting, limited to `DIRECT_MAX_DOFS` unknowns.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Gmres,
            rel_tol: 1e-10,
            max_iter: 2000,
            restart: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidParameter(
                "solver max_iter and restart must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn solve_linear(a: &SparseMatrix, rhs: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    solve_linear_with_guess(a, rhs, None, cfg)
}

/// Solves `A x = rhs` to `||A x - rhs|| <= rel_tol ||rhs||`.
pub fn solve_linear_with_guess(
    a: &SparseMatrix,
    rhs: &[f64],
    guess: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims("square system", n, a.ncols()));
    }
    if rhs.len() != n {
        return Err(Error::dims("right-hand side", n, rhs.len()));
    }
    if let Some(g) = guess {
        if g.len() != n {
            return Err(Error::dims("initial guess", n, g.len()));
        }
    }
    let rhs_norm = norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    match cfg.method {
        SolverMethod::Direct => direct(a, rhs, cfg.rel_tol),
        SolverMethod::Gmres => match gmres(a, rhs, guess, cfg) {
            Err(Error::NotConverged { .. }) if n <= DIRECT_MAX_DOFS => direct(a, rhs, cfg.rel_tol),
            other => other,
        },
    }
}

fn direct(a: &SparseMatrix, rhs: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n > DIRECT_MAX_DOFS {
        return Err(Error::InvalidParameter(format!(
            "direct solver limited to {DIRECT_MAX_DOFS} unknowns, system has {n}"
        )));
    }
    let lu = a.to_dense().lu();
    let x = lu
        .solve(&DVector::from_column_slice(rhs))
        .ok_or(Error::NotConverged {
            iterations: 0,
            residual: f64::INFINITY,
        })?;
    let x: Vec<f64> = x.iter().copied().collect();
    let res = relative_residual(a, &x, rhs);
    if !(res <= rel_tol) {
        return Err(Error::NotConverged {
            iterations: 0,
            residual: res,
        });
    }
    Ok(x)
}

/// Restarted right-preconditioned GMRES; the Arnoldi residual estimate is
/// confirmed against the true residual at the end of every cycle.
fn gmres(a: &SparseMatrix, rhs: &[f64], guess: Option<&[f64]>, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = a.nrows();
    let rhs_norm = norm(rhs);
    let target = cfg.rel_tol * rhs_norm;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let restart = cfg.restart.min(n).max(1);

    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut hess = vec![vec![0.0; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    let mut iterations = 0;

    loop {
        a.mul_vec_into(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta <= target {
            return Ok(x);
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: beta / rhs_norm,
            });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut used = 0;
        while used < restart && iterations < cfg.max_iter {
            let j = used;
            for ((zi, vi), di) in z.iter_mut().zip(&basis[j]).zip(&inv_diag) {
                *zi = vi * di;
            }
            a.mul_vec_into(&z, &mut w);
            // modified Gram-Schmidt
            for (i, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[i][j] = h;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= h * vk;
                }
            }
            let h_next = norm(&w);
            hess[j + 1][j] = h_next;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (c, s) = givens(hess[j][j], hess[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            hess[j][j] = c * hess[j][j] + s * hess[j + 1][j];
            hess[j + 1][j] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            used += 1;
            iterations += 1;
            if g[j + 1].abs() <= target || h_next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // back substitution on the triangularized Hessenberg system
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= hess[i][k] * y[k];
            }
            y[i] = acc / hess[i][i];
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            for (zk, vk) in z.iter_mut().zip(v) {
                *zk += yi * vk;
            }
        }
        for ((xi, zi), di) in x.iter_mut().zip(&z).zip(&inv_diag) {
            *xi += zi * di;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotConverged {
                iterations,
                residual: f64::NAN,
            });
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn relative_residual(a: &SparseMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(rhs).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    r / norm(rhs)
}

/// Dense LU solve of a small system; `None` if singular.
pub(crate) fn dense_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().lu().solve(rhs)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}
