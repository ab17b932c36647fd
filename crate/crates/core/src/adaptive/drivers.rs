use std::collections::HashMap;

use nalgebra::DVector;

use super::{coarse_indicator, mark, residual_indicator, AdaptiveParams, MarkedSet, StepPlan, TwoGridParams};
use crate::error::{Error, Result};
use crate::integrator::{FullOrderModel, StateVector, StepOperators};
use crate::pod::{pod_mode, pod_step, update_pod_mode, PodBasis, ReducedModel, SnapshotMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fem,
    Pod,
    ApodResidual,
    TgApod,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fem => "fem",
            Method::Pod => "pod",
            Method::ApodResidual => "apod-residual",
            Method::TgApod => "tg-apod",
        }
    }
}

/// Per-step bookkeeping of a driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// NaN when no indicator was evaluated for this step.
    pub indicator: f64,
    /// Set on the first step of each full-order update window.
    pub marked: bool,
    /// Dimension of the space the state was computed in.
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub dt: f64,
    pub full_dofs: usize,
    /// Rows for steps `1..=N`.
    pub records: Vec<StepRecord>,
    /// Start steps of the update windows.
    pub marked: MarkedSet,
    pub updates: usize,
    /// Basis in use at the end of the run (none for the full model).
    pub basis: Option<PodBasis>,
}

impl MethodRun {
    pub fn final_dim(&self) -> usize {
        self.basis.as_ref().map_or(self.full_dofs, PodBasis::num_modes)
    }
}

/// A coarse indicator evaluation with the two states it compared.
#[derive(Debug, Clone)]
pub struct IndicatorSample {
    pub step: usize,
    pub eta: f64,
    pub fem: Vec<f64>,
    pub pod: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoarseRun {
    pub dt: f64,
    pub records: Vec<StepRecord>,
    pub samples: Vec<IndicatorSample>,
    /// Marked coarse steps.
    pub marked: MarkedSet,
    pub updates: usize,
}

impl CoarseRun {
    /// `(step, eta)` for every evaluated indicator.
    pub fn indicator_trace(&self) -> Vec<(usize, f64)> {
        self.samples.iter().map(|s| (s.step, s.eta)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TwoGridRun {
    pub fine: MethodRun,
    pub coarse: CoarseRun,
}

/// Receives every trajectory state `(step, coefficients)`, step 0 included.
pub type Sink<'a> = dyn FnMut(usize, &[f64]) + 'a;

fn check_dt(fom: &FullOrderModel, dt: f64, what: &str) -> Result<()> {
    if (fom.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::InvalidParameter(format!(
            "{what} model time step {} does not match {dt}",
            fom.dt()
        )));
    }
    Ok(())
}

/// Full-order steps recorded as trajectory rows.
fn fem_phase(
    fom: &FullOrderModel,
    init: &StateVector,
    steps: usize,
    stride: usize,
    records: &mut Vec<StepRecord>,
    sink: &mut Sink,
) -> Result<(StateVector, SnapshotMatrix)> {
    let n = fom.num_dofs();
    fom.run(init, steps, stride, |s| {
        records.push(StepRecord {
            step: s.step,
            indicator: f64::NAN,
            marked: false,
            dim: n,
        });
        sink(s.step, &s.coeffs);
    })
}

/// Reduced coefficients on the current basis. Every driver steps through
/// this type so that runs that never update agree bit for bit.
struct ReducedTrack<'a> {
    fom: &'a FullOrderModel,
    model: ReducedModel,
    coeffs: DVector<f64>,
}

impl<'a> ReducedTrack<'a> {
    fn new(fom: &'a FullOrderModel, basis: PodBasis, state: &[f64]) -> Result<Self> {
        let model = ReducedModel::new(fom, basis)?;
        let coeffs = model.restrict(state)?;
        Ok(ReducedTrack { fom, model, coeffs })
    }

    fn propose(&self, step: usize) -> Result<(StepOperators, DVector<f64>)> {
        let ops = self.fom.operators(step);
        let next = pod_step(&self.coeffs, &self.model.system(&ops)?)?;
        Ok((ops, next))
    }

    fn rebase(&mut self, basis: PodBasis, state: &[f64]) -> Result<()> {
        *self = ReducedTrack::new(self.fom, basis, state)?;
        Ok(())
    }

    fn dim(&self) -> usize {
        self.model.num_modes()
    }
}

/// Warm-up on `[0, T0]` and the initial basis; returns the last state.
fn warm_up<'a>(
    fom: &'a FullOrderModel,
    params: &AdaptiveParams,
    plan: &StepPlan,
    records: &mut Vec<StepRecord>,
    sink: &mut Sink,
) -> Result<(StateVector, ReducedTrack<'a>)> {
    let init = fom.initial_state();
    sink(0, &init.coeffs);
    let (last, snaps) = fem_phase(fom, &init, plan.warmup, params.stride, records, sink)?;
    let basis = pod_mode(&snaps, params.gamma1)?;
    let track = ReducedTrack::new(fom, basis, &last.coeffs)?;
    Ok((last, track))
}

/// Full-order reference trajectory over `steps` steps.
pub fn run_fem_reference(fom: &FullOrderModel, steps: usize, sink: &mut Sink) -> Result<MethodRun> {
    let init = fom.initial_state();
    sink(0, &init.coeffs);
    let mut records = Vec::with_capacity(steps);
    fem_phase(fom, &init, steps, steps + 1, &mut records, sink)?;
    Ok(MethodRun {
        method: Method::Fem,
        dt: fom.dt(),
        full_dofs: fom.num_dofs(),
        records,
        marked: MarkedSet::new(fom.dt()),
        updates: 0,
        basis: None,
    })
}

/// Fixed POD: full-order warm-up, one basis, reduced steps to the horizon.
pub fn run_pod(fom: &FullOrderModel, params: &AdaptiveParams, sink: &mut Sink) -> Result<MethodRun> {
    params.validate()?;
    check_dt(fom, params.dt, "fine")?;
    let plan = params.plan(fom.dt())?;
    let mut records = Vec::with_capacity(plan.total);
    let (_, mut track) = warm_up(fom, params, &plan, &mut records, sink)?;
    for k in plan.warmup..plan.total {
        let (_, next) = track.propose(k + 1)?;
        track.coeffs = next;
        sink(k + 1, &track.model.lift(&track.coeffs)?);
        records.push(StepRecord {
            step: k + 1,
            indicator: f64::NAN,
            marked: false,
            dim: track.dim(),
        });
    }
    Ok(MethodRun {
        method: Method::Pod,
        dt: fom.dt(),
        full_dofs: fom.num_dofs(),
        records,
        marked: MarkedSet::new(fom.dt()),
        updates: 0,
        basis: Some(track.model.basis().clone()),
    })
}

/// Adaptive POD driven by the full-system residual of each reduced step.
///
/// A step whose indicator exceeds `eta0` is discarded; the full model then
/// runs one update window from the current state, the window states become
/// the trajectory, and the basis is updated from the window snapshots.
pub fn run_apod_residual(fom: &FullOrderModel, params: &AdaptiveParams, sink: &mut Sink) -> Result<MethodRun> {
    params.validate()?;
    check_dt(fom, params.dt, "fine")?;
    let plan = params.plan(fom.dt())?;
    let mut records = Vec::with_capacity(plan.total);
    let (last, mut track) = warm_up(fom, params, &plan, &mut records, sink)?;
    let mut marked = MarkedSet::new(fom.dt());
    let mut current = last.coeffs;
    let mut k = plan.warmup;
    while k < plan.total {
        let (ops, next) = track.propose(k + 1)?;
        let a = fom.system_matrix(&ops)?;
        let eta = residual_indicator(&a, &ops.load, fom.mass(), track.model.basis(), &next, &track.coeffs)?;
        if mark(eta, params.eta0) {
            marked.insert(k);
            let steps = plan.window.min(plan.total - k);
            let start = StateVector {
                coeffs: current,
                step: k,
                dt: fom.dt(),
            };
            let first_row = records.len();
            let (end, snaps) = fem_phase(fom, &start, steps, params.stride, &mut records, sink)?;
            records[first_row].indicator = eta;
            records[first_row].marked = true;
            let basis = update_pod_mode(&snaps, params.gamma2, params.gamma3, track.model.basis())?;
            track.rebase(basis, &end.coeffs)?;
            current = end.coeffs;
            k = end.step;
        } else {
            track.coeffs = next;
            current = track.model.lift(&track.coeffs)?;
            sink(k + 1, &current);
            records.push(StepRecord {
                step: k + 1,
                indicator: eta,
                marked: false,
                dim: track.dim(),
            });
            k += 1;
        }
    }
    Ok(MethodRun {
        method: Method::ApodResidual,
        dt: fom.dt(),
        full_dofs: fom.num_dofs(),
        records,
        updates: marked.len(),
        marked,
        basis: Some(track.model.basis().clone()),
    })
}

/// Coarse phase of the two-grid method: a coarse full-order trajectory and
/// a coarse adaptive POD trajectory side by side. The indicator compares
/// them; marked coarse steps are returned.
pub fn run_tg_coarse_phase(coarse: &FullOrderModel, params: &AdaptiveParams, m1: usize) -> Result<CoarseRun> {
    params.validate()?;
    let dt = coarse.dt();
    let plan = params.plan(dt)?;
    let stride = (params.stride / m1).max(1);
    let mut records = Vec::with_capacity(plan.total);
    let mut ignore = |_: usize, _: &[f64]| {};
    let (mut fem, mut track) = warm_up(coarse, params, &plan, &mut records, &mut ignore)?;
    let mut marked = MarkedSet::new(dt);
    let mut samples = Vec::new();
    let mut k = plan.warmup;
    while k < plan.total {
        let fem_next = coarse.step(&fem)?;
        let (_, next) = track.propose(k + 1)?;
        let lifted = track.model.lift(&next)?;
        let eta = coarse_indicator(&fem_next.coeffs, &lifted)?;
        samples.push(IndicatorSample {
            step: k + 1,
            eta,
            fem: fem_next.coeffs.clone(),
            pod: lifted,
        });
        if mark(eta, params.eta0) {
            marked.insert(k);
            let steps = plan.window.min(plan.total - k);
            let first_row = records.len();
            let (end, snaps) = fem_phase(coarse, &fem, steps, stride, &mut records, &mut ignore)?;
            records[first_row].indicator = eta;
            records[first_row].marked = true;
            let basis = update_pod_mode(&snaps, params.gamma2, params.gamma3, track.model.basis())?;
            track.rebase(basis, &end.coeffs)?;
            k = end.step;
            fem = end;
        } else {
            track.coeffs = next;
            fem = fem_next;
            records.push(StepRecord {
                step: k + 1,
                indicator: eta,
                marked: false,
                dim: track.dim(),
            });
            k += 1;
        }
    }
    Ok(CoarseRun {
        dt,
        records,
        samples,
        updates: marked.len(),
        marked,
    })
}

/// Two-grid adaptive POD. The coarse phase decides the update instants;
/// the fine phase runs fixed-basis reduced steps and, at every marked
/// instant, a fine full-order window followed by a basis update.
pub fn run_tg_apod(
    fine: &FullOrderModel,
    coarse: &FullOrderModel,
    params: &AdaptiveParams,
    tg: &TwoGridParams,
    sink: &mut Sink,
) -> Result<TwoGridRun> {
    params.validate()?;
    check_dt(fine, params.dt, "fine")?;
    check_dt(coarse, tg.coarse_dt, "coarse")?;
    let (m1, _) = tg.validate(fine.mesh().cells_per_axis(), params)?;
    if (coarse.mesh().length() - fine.mesh().length()).abs() > 1e-12 * fine.mesh().length() {
        return Err(Error::InvalidParameter("coarse and fine domains differ".into()));
    }
    if coarse.mesh().cells_per_axis() != tg.coarse_n {
        return Err(Error::InvalidParameter(format!(
            "coarse model has n = {}, expected {}",
            coarse.mesh().cells_per_axis(),
            tg.coarse_n
        )));
    }
    let coarse_run = run_tg_coarse_phase(coarse, params, m1)?;
    let coarse_eta: HashMap<usize, f64> = coarse_run
        .samples
        .iter()
        .map(|s| (s.step * m1, s.eta))
        .collect();
    let eta_at = |step: usize| coarse_eta.get(&step).copied().unwrap_or(f64::NAN);

    let plan = params.plan(fine.dt())?;
    let mut records = Vec::with_capacity(plan.total);
    let (last, mut track) = warm_up(fine, params, &plan, &mut records, sink)?;
    let mut pending = coarse_run.marked.steps().iter().map(|&s| s * m1).peekable();
    let mut marked = MarkedSet::new(fine.dt());
    let mut current = last.coeffs;
    let mut k = plan.warmup;
    loop {
        // marks that fell inside a window already taken are dropped
        while pending.next_if(|&s| s < k).is_some() {}
        if k >= plan.total {
            break;
        }
        if pending.next_if_eq(&k).is_some() {
            marked.insert(k);
            let steps = plan.window.min(plan.total - k);
            let start = StateVector {
                coeffs: current,
                step: k,
                dt: fine.dt(),
            };
            let first_row = records.len();
            let (end, snaps) = fem_phase(fine, &start, steps, params.stride, &mut records, sink)?;
            records[first_row].marked = true;
            let basis = update_pod_mode(&snaps, params.gamma2, params.gamma3, track.model.basis())?;
            track.rebase(basis, &end.coeffs)?;
            current = end.coeffs;
            k = end.step;
            continue;
        }
        let (_, next) = track.propose(k + 1)?;
        track.coeffs = next;
        current = track.model.lift(&track.coeffs)?;
        sink(k + 1, &current);
        records.push(StepRecord {
            step: k + 1,
            indicator: f64::NAN,
            marked: false,
            dim: track.dim(),
        });
        k += 1;
    }
    for r in &mut records {
        if r.indicator.is_nan() {
            r.indicator = eta_at(r.step);
        }
    }
    Ok(TwoGridRun {
        fine: MethodRun {
            method: Method::TgApod,
            dt: fine.dt(),
            full_dofs: fine.num_dofs(),
            records,
            updates: marked.len(),
            marked,
            basis: Some(track.model.basis().clone()),
        },
        coarse: coarse_run,
    })
}
