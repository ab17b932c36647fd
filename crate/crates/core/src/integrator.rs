//! Implicit-Euler time stepping of the full finite element system
//! `A^k u^k = b^k + M u^{k-1}` with `A^k = M + dt a(t_k)` and
//! `b^k = dt (f(t_k), phi)`.
//!
//! Time is tracked as an integer step index; `t_k = k * dt` is only formed
//! when coefficients are evaluated.

use crate::assembly::{compose_system, Assembler};
use crate::error::{Error, Result};
use crate::mesh::PeriodicMesh;
use crate::pod::SnapshotMatrix;
use crate::problems::ProblemSpec;
use crate::solver::{solve_linear_with_guess, SolverConfig};
use crate::sparse::SparseMatrix;

/// Coefficient vector at step `step` of a grid with spacing `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: Vec<f64>,
    pub step: usize,
    pub dt: f64,
}

impl StateVector {
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

/// Time-dependent pieces of the system at one step.
#[derive(Debug, Clone)]
pub struct StepOperators {
    pub step: usize,
    pub advection: SparseMatrix,
    pub reaction: Option<SparseMatrix>,
    /// `dt * (f(t_k), phi_i)`.
    pub load: Vec<f64>,
}

/// Full-order model: a mesh, a problem and a time step, with the
/// time-invariant mass and stiffness matrices assembled once.
#[derive(Debug, Clone)]
pub struct FullOrderModel {
    assembler: Assembler,
    problem: ProblemSpec,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    dt: f64,
    solver: SolverConfig,
}

impl FullOrderModel {
    pub fn new(mesh: PeriodicMesh, problem: ProblemSpec, dt: f64, solver: SolverConfig) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(problem.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be non-negative, got {}",
                problem.eps
            )));
        }
        solver.validate()?;
        let assembler = Assembler::new(mesh);
        let mass = assembler.mass();
        let stiffness = assembler.stiffness();
        Ok(FullOrderModel {
            assembler,
            problem,
            mass,
            stiffness,
            dt,
            solver,
        })
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        self.assembler.mesh()
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_dofs(&self) -> usize {
        self.assembler.num_dofs()
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Nodal interpolant of the initial condition at step 0.
    pub fn initial_state(&self) -> StateVector {
        self.interpolate(&self.problem.initial, 0)
    }

    pub fn interpolate(&self, f: &crate::field::ScalarField, step: usize) -> StateVector {
        let t = self.time_of(step);
        StateVector {
            coeffs: self.mesh().vertices().iter().map(|&p| f.eval(p, t)).collect(),
            step,
            dt: self.dt,
        }
    }

    pub fn operators(&self, step: usize) -> StepOperators {
        let t = self.time_of(step);
        let mut load = self.assembler.load(&self.problem.forcing, t);
        load.iter_mut().for_each(|v| *v *= self.dt);
        StepOperators {
            step,
            advection: self.assembler.advection(&self.problem.velocity, t),
            reaction: self.problem.reaction.as_ref().map(|c| self.assembler.reaction(c, t)),
            load,
        }
    }

    pub fn system_matrix(&self, ops: &StepOperators) -> Result<SparseMatrix> {
        compose_system(
            &self.mass,
            &self.stiffness,
            &ops.advection,
            ops.reaction.as_ref(),
            self.problem.eps,
            self.dt,
        )
    }

    /// One implicit-Euler step from `prev`.
    pub fn step(&self, prev: &StateVector) -> Result<StateVector> {
        let n = self.num_dofs();
        if prev.coeffs.len() != n {
            return Err(Error::dims("fem state", n, prev.coeffs.len()));
        }
        let ops = self.operators(prev.step + 1);
        let a = self.system_matrix(&ops)?;
        let mut rhs = self.mass.mul_vec(&prev.coeffs);
        for (r, b) in rhs.iter_mut().zip(&ops.load) {
            *r += b;
        }
        let coeffs = solve_linear_with_guess(&a, &rhs, Some(&prev.coeffs), &self.solver)?;
        Ok(StateVector {
            coeffs,
            step: prev.step + 1,
            dt: self.dt,
        })
    }

    /// Advances `steps` steps from `init`, collecting a snapshot every
    /// `stride` steps starting with `init` itself, and handing every new
    /// state to `observer`.
    pub fn run(
        &self,
        init: &StateVector,
        steps: usize,
        stride: usize,
        mut observer: impl FnMut(&StateVector),
    ) -> Result<(StateVector, SnapshotMatrix)> {
        if stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be at least 1".into()));
        }
        let mut snapshots = SnapshotMatrix::default();
        snapshots.push(init.coeffs.clone(), init.time());
        let mut state = init.clone();
        for offset in 1..=steps {
            state = self.step(&state)?;
            observer(&state);
            if offset % stride == 0 {
                snapshots.push(state.coeffs.clone(), state.time());
            }
        }
        Ok((state, snapshots))
    }

    /// Runs over `[t_a, t_b]`, which must be a whole number of steps
    /// starting from `init`'s time.
    pub fn run_interval(
        &self,
        init: &StateVector,
        t_a: f64,
        t_b: f64,
        stride: usize,
    ) -> Result<(StateVector, SnapshotMatrix)> {
        let steps = whole_steps(t_b - t_a, self.dt)?;
        let offset = whole_steps(t_a, self.dt)?;
        if offset != init.step {
            return Err(Error::Alignment(format!(
                "interval start {t_a} does not match the initial state time {}",
                init.time()
            )));
        }
        self.run(init, steps, stride, |_| {})
    }
}

/// Number of steps of size `dt` in `length`, rejecting non-integral ratios
/// (relative tolerance 1e-9).
pub fn whole_steps(length: f64, dt: f64) -> Result<usize> {
    if length < 0.0 {
        return Err(Error::Alignment(format!("negative interval length {length}")));
    }
    let ratio = length / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Alignment(format!(
            "{length} is not an integer multiple of {dt}"
        )));
    }
    Ok(rounded as usize)
}

/// One step of the full model built from scratch; convenient for one-off use.
pub fn fem_step(
    prev: &StateVector,
    problem: &ProblemSpec,
    mesh: &PeriodicMesh,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<StateVector> {
    let horizon_steps = problem.horizon / dt;
    if prev.step as f64 + 1.0 > horizon_steps * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "step to t = {} exceeds the horizon {}",
            (prev.step + 1) as f64 * dt,
            problem.horizon
        )));
    }
    let prev = StateVector { dt, ..prev.clone() };
    FullOrderModel::new(mesh.clone(), problem.clone(), dt, *cfg)?.step(&prev)
}
