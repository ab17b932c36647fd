use nalgebra::{DMatrix, DVector};

use super::PodBasis;
use crate::error::{Error, Result};
use crate::integrator::{FullOrderModel, StepOperators};
use crate::solver::dense_solve;
use crate::sparse::SparseMatrix;

/// Galerkin-projected step system `A_r u^k = b_r + C_r u^{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
}

/// `R^T S R` computed as `R^T (S R)`.
fn project(op: &SparseMatrix, modes: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(modes.tr_mul(&op.mul_dense(modes)?))
}

pub fn reduce_system(a: &SparseMatrix, b: &[f64], c: &SparseMatrix, basis: &PodBasis) -> Result<ReducedSystem> {
    let n = basis.full_dim();
    for (what, m) in [("system matrix", a), ("mass matrix", c)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dims(what, n, m.nrows()));
        }
    }
    if b.len() != n {
        return Err(Error::dims("load vector", n, b.len()));
    }
    Ok(ReducedSystem {
        a: project(a, basis.modes())?,
        b: basis.modes().tr_mul(&DVector::from_column_slice(b)),
        c: project(c, basis.modes())?,
    })
}

/// Solves one reduced implicit-Euler step from the previous reduced coefficients.
pub fn pod_step(prev: &DVector<f64>, sys: &ReducedSystem) -> Result<DVector<f64>> {
    let m = sys.a.nrows();
    if m == 0 {
        return Err(Error::InvalidParameter("reduced system has no modes".into()));
    }
    if prev.len() != m {
        return Err(Error::dims("reduced state", m, prev.len()));
    }
    let rhs = &sys.b + &sys.c * prev;
    dense_solve(&sys.a, &rhs).ok_or(Error::SingularReducedSystem(m))
}

/// Reduced coefficients `R^T u`.
pub fn restrict(basis: &PodBasis, u: &[f64]) -> Result<DVector<f64>> {
    if u.len() != basis.full_dim() {
        return Err(Error::dims("restrict", basis.full_dim(), u.len()));
    }
    Ok(basis.modes().tr_mul(&DVector::from_column_slice(u)))
}

/// Full coefficients `R u_r`.
pub fn lift(basis: &PodBasis, reduced: &DVector<f64>) -> Result<Vec<f64>> {
    if reduced.len() != basis.num_modes() {
        return Err(Error::dims("lift", basis.num_modes(), reduced.len()));
    }
    Ok((basis.modes() * reduced).iter().copied().collect())
}

/// Reduced model of a [`FullOrderModel`] on a fixed basis. The projected
/// mass and stiffness are cached; the time-dependent advection and
/// reaction are projected each step.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    basis: PodBasis,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    eps: f64,
    dt: f64,
}

impl ReducedModel {
    pub fn new(fom: &FullOrderModel, basis: PodBasis) -> Result<Self> {
        if basis.full_dim() != fom.num_dofs() {
            return Err(Error::dims("basis length", fom.num_dofs(), basis.full_dim()));
        }
        Ok(ReducedModel {
            mass: project(fom.mass(), basis.modes())?,
            stiffness: project(fom.stiffness(), basis.modes())?,
            basis,
            eps: fom.problem().eps,
            dt: fom.dt(),
        })
    }

    pub fn basis(&self) -> &PodBasis {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes()
    }

    pub fn system(&self, ops: &StepOperators) -> Result<ReducedSystem> {
        let modes = self.basis.modes();
        let mut a = &self.stiffness * (self.dt * self.eps);
        a += project(&ops.advection, modes)? * self.dt;
        if let Some(r) = &ops.reaction {
            a += project(r, modes)? * self.dt;
        }
        a += &self.mass;
        Ok(ReducedSystem {
            a,
            b: modes.tr_mul(&DVector::from_column_slice(&ops.load)),
            c: self.mass.clone(),
        })
    }

    pub fn restrict(&self, u: &[f64]) -> Result<DVector<f64>> {
        restrict(&self.basis, u)
    }

    pub fn lift(&self, reduced: &DVector<f64>) -> Result<Vec<f64>> {
        lift(&self.basis, reduced)
    }
}
