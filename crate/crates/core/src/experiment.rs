//! Experiment orchestration behind the command line: reference runs,
//! method runs, convergence studies and parameter sweeps, and the files
//! they write.

use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::adaptive::{
    relative_error, run_apod_residual, run_fem_reference, run_pod, run_tg_apod, ErrorTrace, Method, MethodRun,
};
use crate::assembly::l2_error;
use crate::config::{RunConfig, SweepAxis, TimeReference};
use crate::error::{Error, Result};
use crate::integrator::{whole_steps, FullOrderModel};
use crate::mesh::PeriodicMesh;
use crate::quadrature::TetRule;

pub const SUMMARY_HEADER: &str = "method,dofs_full,dofs_reduced,avg_error,updates,wall_seconds";

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub method: String,
    pub dofs_full: usize,
    pub dofs_reduced: usize,
    pub avg_error: f64,
    pub updates: usize,
    pub wall_seconds: f64,
}

impl SummaryRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{},{:.3}",
            self.method, self.dofs_full, self.dofs_reduced, self.avg_error, self.updates, self.wall_seconds
        )
    }
}

/// Appends rows to `dir/summary.csv`, writing the header for a new file.
pub fn append_summary(dir: &Path, rows: &[SummaryRecord]) -> Result<()> {
    let path = dir.join("summary.csv");
    let fresh = !path.exists();
    let mut out = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(out, "{SUMMARY_HEADER}")?;
    }
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn fine_model(cfg: &RunConfig) -> Result<FullOrderModel> {
    let mesh = PeriodicMesh::new(cfg.problem_spec().length, cfg.n)?;
    FullOrderModel::new(mesh, cfg.problem_spec(), cfg.adaptive.dt, cfg.solver)
}

/// Full-order reference states for steps `0..=N`.
pub fn reference_trajectory(cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    let fom = fine_model(cfg)?;
    let steps = whole_steps(cfg.adaptive.horizon, cfg.adaptive.dt)?;
    let mut states = Vec::with_capacity(steps + 1);
    run_fem_reference(&fom, steps, &mut |_, u: &[f64]| states.push(u.to_vec()))?;
    Ok(states)
}

/// Result of one configured method run against a reference.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub run: MethodRun,
    pub trace: ErrorTrace,
    pub summary: SummaryRecord,
    /// Coarse indicator trace of the two-grid method.
    pub coarse_trace: Option<ErrorTrace>,
}

/// Runs `cfg.method`, measuring the error of every step against `reference`.
pub fn run_method(cfg: &RunConfig, reference: &[Vec<f64>]) -> Result<MethodOutcome> {
    let fom = fine_model(cfg)?;
    let steps = whole_steps(cfg.adaptive.horizon, cfg.adaptive.dt)?;
    if reference.len() != steps + 1 {
        return Err(Error::dims("reference trajectory", steps + 1, reference.len()));
    }
    let mut errors = vec![0.0; steps];
    let mut sink = |k: usize, u: &[f64]| {
        if k > 0 {
            errors[k - 1] = relative_error(&reference[k], u);
        }
    };
    let start = Instant::now();
    let mut coarse_trace = None;
    let run = match cfg.method {
        Method::Fem => run_fem_reference(&fom, steps, &mut sink)?,
        Method::Pod => run_pod(&fom, &cfg.adaptive, &mut sink)?,
        Method::ApodResidual => run_apod_residual(&fom, &cfg.adaptive, &mut sink)?,
        Method::TgApod => {
            let coarse_mesh = PeriodicMesh::new(fom.mesh().length(), cfg.two_grid.coarse_n)?;
            let coarse = FullOrderModel::new(coarse_mesh, cfg.problem_spec(), cfg.two_grid.coarse_dt, cfg.solver)?;
            let tg = run_tg_apod(&fom, &coarse, &cfg.adaptive, &cfg.two_grid, &mut sink)?;
            let coarse_run = MethodRun {
                method: Method::TgApod,
                dt: tg.coarse.dt,
                full_dofs: coarse.num_dofs(),
                records: tg.coarse.records.clone(),
                marked: tg.coarse.marked.clone(),
                updates: tg.coarse.updates,
                basis: None,
            };
            coarse_trace = Some(ErrorTrace::new(&coarse_run, &vec![f64::NAN; coarse_run.records.len()])?);
            tg.fine
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let trace = ErrorTrace::new(&run, &errors)?;
    let summary = SummaryRecord {
        method: cfg.method.name().to_string(),
        dofs_full: run.full_dofs,
        dofs_reduced: run.final_dim(),
        avg_error: trace.average,
        updates: run.updates,
        wall_seconds,
    };
    Ok(MethodOutcome {
        run,
        trace,
        summary,
        coarse_trace,
    })
}

/// Writes `trace.csv`, `marked.txt` (two-grid only) and `coarse_trace.csv`
/// (two-grid only) into `dir`.
pub fn write_outcome(dir: &Path, outcome: &MethodOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    outcome
        .trace
        .write_csv(BufWriter::new(fs::File::create(dir.join("trace.csv"))?))?;
    if outcome.run.method == Method::TgApod {
        outcome
            .run
            .marked
            .write(BufWriter::new(fs::File::create(dir.join("marked.txt"))?))?;
    }
    if let Some(coarse) = &outcome.coarse_trace {
        coarse.write_csv(BufWriter::new(fs::File::create(dir.join("coarse_trace.csv"))?))?;
    }
    Ok(())
}

/// Reference run, configured method, output files and a summary row.
pub fn run_experiment(cfg: &RunConfig) -> Result<SummaryRecord> {
    cfg.check_method()?;
    let reference = reference_trajectory(cfg)?;
    let outcome = run_method(cfg, &reference)?;
    write_outcome(&cfg.out_dir, &outcome)?;
    append_summary(&cfg.out_dir, std::slice::from_ref(&outcome.summary))?;
    Ok(outcome.summary)
}

/// Runs every point of `cfg.sweep` against one shared reference. Each point
/// writes its trace into its own subdirectory; the summary rows, labelled
/// `method[axis=value]`, go to the top-level `summary.csv`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SummaryRecord>> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::config("sweep.axis", "required for a sweep"))?;
    cfg.check_method()?;
    let reference = reference_trajectory(cfg)?;
    let mut rows = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        let mut point = cfg.clone();
        match sweep.axis {
            SweepAxis::Gamma3 => {
                point.adaptive.gamma1 = 1.0 - 1e-8;
                point.adaptive.gamma2 = 1.0 - 1e-8;
                point.adaptive.gamma3 = v;
            }
            SweepAxis::Gamma12 => {
                point.adaptive.gamma1 = v;
                point.adaptive.gamma2 = v;
                point.adaptive.gamma3 = 1.0 - 1e-8;
            }
            SweepAxis::CoarseN => point.two_grid.coarse_n = v as usize,
        }
        let label = format!("{}={v}", sweep.axis.name());
        point.out_dir = cfg.out_dir.join(&label);
        let mut outcome = run_method(&point, &reference)?;
        write_outcome(&point.out_dir, &outcome)?;
        outcome.summary.method = format!("{}[{label}]", point.method.name());
        rows.push(outcome.summary);
    }
    fs::create_dir_all(&cfg.out_dir)?;
    append_summary(&cfg.out_dir, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub study: &'static str,
    pub n: usize,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log h`.
    pub spatial_order: f64,
    /// Least-squares slope of `log error` against `log dt`.
    pub temporal_order: f64,
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "study,n,dt,l2_error")?;
        for r in &self.rows {
            writeln!(out, "{},{},{:e},{:e}", r.study, r.n, r.dt, r.error)?;
        }
        writeln!(out, "# spatial_order={:.4}", self.spatial_order)?;
        writeln!(out, "# temporal_order={:.4}", self.temporal_order)?;
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Final full-order state of the manufactured problem on an `n` mesh.
fn manufactured_final(cfg: &RunConfig, n: usize, dt: f64, t_end: f64) -> Result<(FullOrderModel, Vec<f64>)> {
    let (problem, _) = cfg.manufactured();
    let problem = problem.with_horizon(t_end);
    let mesh = PeriodicMesh::new(problem.length, n)?;
    let fom = FullOrderModel::new(mesh, problem, dt, cfg.solver)?;
    let steps = whole_steps(t_end, dt)?;
    let (last, _) = fom.run(&fom.initial_state(), steps, steps + 1, |_| {})?;
    Ok((fom, last.coeffs))
}

/// Manufactured-solution convergence: L2 errors at the final time over
/// the spatial and temporal refinement sequences, with fitted orders.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let c = &cfg.converge;
    let (_, exact) = cfg.manufactured();
    let rule = TetRule::collapsed_gauss(c.quad_order);
    let mut rows = Vec::new();

    let mut hs = Vec::new();
    let mut space_err = Vec::new();
    for &n in &c.space_n {
        let (fom, u) = manufactured_final(cfg, n, c.space_dt, c.space_t_end)?;
        let err = l2_error(fom.mesh(), &u, &exact, c.space_t_end, &rule)?;
        hs.push(fom.mesh().h());
        space_err.push(err);
        rows.push(ConvergenceRow {
            study: "space",
            n,
            dt: c.space_dt,
            error: err,
        });
    }

    let reference = match c.reference {
        TimeReference::Exact => None,
        TimeReference::Fine => {
            let finest = c.time_dt.iter().copied().fold(f64::INFINITY, f64::min);
            Some(manufactured_final(cfg, c.time_n, finest / 10.0, c.time_t_end)?.1)
        }
    };
    let mut time_err = Vec::new();
    for &dt in &c.time_dt {
        let (fom, u) = manufactured_final(cfg, c.time_n, dt, c.time_t_end)?;
        let err = match &reference {
            None => l2_error(fom.mesh(), &u, &exact, c.time_t_end, &rule)?,
            Some(r) => {
                let diff: Vec<f64> = u.iter().zip(r).map(|(a, b)| a - b).collect();
                let md = fom.mass().mul_vec(&diff);
                diff.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>().sqrt()
            }
        };
        time_err.push(err);
        rows.push(ConvergenceRow {
            study: "time",
            n: c.time_n,
            dt,
            error: err,
        });
    }

    Ok(ConvergenceTable {
        rows,
        spatial_order: fitted_order(&hs, &space_err),
        temporal_order: fitted_order(&c.time_dt, &time_err),
    })
}
