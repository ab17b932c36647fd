//! Error indicators, marking and the fixed, residual-adaptive and two-grid
//! adaptive POD drivers.

mod drivers;
mod trace;

pub use drivers::{
    run_apod_residual, run_fem_reference, run_pod, run_tg_apod, run_tg_coarse_phase, CoarseRun,
    IndicatorSample, Method, MethodRun, Sink, StepRecord, TwoGridRun,
};
pub use trace::{relative_error, relative_error_trace, ErrorSeries, ErrorTrace, TraceRow};

use crate::error::{Error, Result};
use crate::integrator::whole_steps;
use crate::pod::{lift, PodBasis};
use crate::solver::norm;
use crate::sparse::SparseMatrix;
use nalgebra::DVector;

/// Parameters shared by every POD driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    /// Energy fraction for the initial basis.
    pub gamma1: f64,
    /// Energy fraction applied to update snapshots.
    pub gamma2: f64,
    /// Energy fraction applied when merging new and old modes.
    pub gamma3: f64,
    /// Marking threshold.
    pub eta0: f64,
    /// Length of the initial full-order warm-up `[0, T0]`.
    pub warmup: f64,
    /// Length of each full-order update window.
    pub window: f64,
    /// Snapshot stride in fine steps.
    pub stride: usize,
    /// Fine time step.
    pub dt: f64,
    /// Final time.
    pub horizon: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            gamma1: 0.999,
            gamma2: 0.999,
            gamma3: 1.0 - 1e-8,
            eta0: 0.005,
            warmup: 1.5,
            window: 1.0,
            stride: 5,
            dt: 0.005,
            horizon: 100.0,
        }
    }
}

/// Step counts derived from [`AdaptiveParams`] on one time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepPlan {
    pub warmup: usize,
    pub window: usize,
    pub total: usize,
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {g}")));
            }
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::InvalidParameter(format!("eta0 must be positive, got {}", self.eta0)));
        }
        for (name, v) in [("dt", self.dt), ("warmup", self.warmup), ("window", self.window)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be at least 1".into()));
        }
        if !(self.warmup < self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "warm-up {} must end before the horizon {}",
                self.warmup, self.horizon
            )));
        }
        self.plan(self.dt).map(|_| ())
    }

    /// Step counts on a grid of spacing `dt`; every length must be a whole
    /// number of steps.
    pub fn plan(&self, dt: f64) -> Result<StepPlan> {
        let count = |what: &str, len: f64| {
            whole_steps(len, dt).map_err(|_| {
                Error::Alignment(format!("{what} = {len} is not a multiple of the time step {dt}"))
            })
        };
        Ok(StepPlan {
            warmup: count("warm-up", self.warmup)?,
            window: count("update window", self.window)?,
            total: count("horizon", self.horizon)?,
        })
    }
}

/// Coarse space-time grid of the two-grid method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGridParams {
    pub coarse_n: usize,
    pub coarse_dt: f64,
}

impl TwoGridParams {
    /// Checks the coarse grid against the fine one and returns `(M1, M2)`
    /// with `coarse_dt = M1 * dt` and `H = M2 * h`.
    pub fn validate(&self, fine_n: usize, params: &AdaptiveParams) -> Result<(usize, usize)> {
        let m1 = whole_steps(self.coarse_dt, params.dt).map_err(|_| {
            Error::Alignment(format!(
                "coarse dt {} is not a multiple of fine dt {}",
                self.coarse_dt, params.dt
            ))
        })?;
        if m1 == 0 {
            return Err(Error::Alignment(format!(
                "coarse dt {} is smaller than fine dt {}",
                self.coarse_dt, params.dt
            )));
        }
        if self.coarse_n < 2 || self.coarse_n >= fine_n || !fine_n.is_multiple_of(self.coarse_n) {
            return Err(Error::Alignment(format!(
                "coarse mesh n = {} must be a proper divisor of fine n = {fine_n}",
                self.coarse_n
            )));
        }
        params.plan(self.coarse_dt)?;
        Ok((m1, fine_n / self.coarse_n))
    }
}

/// Marked instants, stored as step indices on a grid of spacing `dt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkedSet {
    pub dt: f64,
    steps: Vec<usize>,
}

impl MarkedSet {
    pub fn new(dt: f64) -> Self {
        MarkedSet { dt, steps: Vec::new() }
    }

    /// Appends a step; steps must strictly increase.
    pub fn insert(&mut self, step: usize) {
        assert!(
            self.steps.last().is_none_or(|&last| step > last),
            "marked steps must strictly increase"
        );
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * self.dt).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn contains(&self, step: usize) -> bool {
        self.steps.binary_search(&step).is_ok()
    }

    pub fn is_subset_of(&self, other: &MarkedSet) -> bool {
        self.steps.iter().all(|&s| other.contains(s))
    }

    /// Marks from a stored indicator trace of `(step, eta)` pairs: every
    /// step whose indicator exceeds `eta0` marks the step before it.
    pub fn from_indicator_trace(dt: f64, trace: &[(usize, f64)], eta0: f64) -> Self {
        let mut set = MarkedSet::new(dt);
        for &(step, eta) in trace {
            if mark(eta, eta0) {
                set.insert(step - 1);
            }
        }
        set
    }

    /// One time per line.
    pub fn write<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for t in self.times() {
            writeln!(out, "{}", trace::format_time(t))?;
        }
        Ok(())
    }
}

/// Relative residual of the lifted reduced step in the full system:
/// `||A R u_k - b - C R u_{k-1}|| / ||b + C R u_{k-1}||`.
pub fn residual_indicator(
    a: &SparseMatrix,
    b: &[f64],
    c: &SparseMatrix,
    basis: &PodBasis,
    current: &DVector<f64>,
    previous: &DVector<f64>,
) -> Result<f64> {
    let n = basis.full_dim();
    if a.nrows() != n || c.nrows() != n || b.len() != n {
        return Err(Error::dims("residual indicator operands", n, b.len()));
    }
    let u_now = lift(basis, current)?;
    let u_prev = lift(basis, previous)?;
    let au = a.mul_vec(&u_now);
    let mut rhs = c.mul_vec(&u_prev);
    for (r, bi) in rhs.iter_mut().zip(b) {
        *r += bi;
    }
    let den = norm(&rhs);
    if den == 0.0 {
        return Err(Error::ZeroNorm("residual indicator"));
    }
    let num: f64 = au.iter().zip(&rhs).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// Relative error of the lifted coarse POD state against the coarse FEM state.
pub fn coarse_indicator(fem: &[f64], pod_lifted: &[f64]) -> Result<f64> {
    if fem.len() != pod_lifted.len() {
        return Err(Error::dims("coarse indicator", fem.len(), pod_lifted.len()));
    }
    let den = norm(fem);
    if den == 0.0 {
        return Err(Error::ZeroNorm("coarse indicator"));
    }
    let num: f64 = fem.iter().zip(pod_lifted).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// `eta > eta0`, strictly.
pub fn mark(eta: f64, eta0: f64) -> bool {
    eta > eta0
}
