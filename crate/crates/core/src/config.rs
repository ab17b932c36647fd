//! Run configuration: flat `section.key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! known; a misspelled key is an error rather than a silently ignored line.
//! List values are comma separated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::adaptive::{AdaptiveParams, Method, TwoGridParams};
use crate::error::{Error, Result};
use crate::integrator::whole_steps;
use crate::problems::{abc_problem, kolmogorov_problem, kolmogorov_velocity, manufactured_problem, ProblemSpec};
use crate::field::{ScalarField, VectorField};
use crate::solver::{SolverConfig, SolverMethod};

const KEYS: &[&str] = &[
    "problem.name",
    "problem.eps",
    "problem.w",
    "problem.horizon",
    "mesh.n",
    "time.dt",
    "coarse.n",
    "coarse.dt",
    "pod.gamma1",
    "pod.gamma2",
    "pod.gamma3",
    "pod.eta0",
    "pod.warmup",
    "pod.window",
    "pod.stride",
    "solver.method",
    "solver.tol",
    "solver.max_iter",
    "solver.restart",
    "run.method",
    "run.seed",
    "output.dir",
    "converge.space_n",
    "converge.space_dt",
    "converge.time_n",
    "converge.time_dt",
    "converge.space_t_end",
    "converge.time_t_end",
    "converge.reference",
    "converge.quad_order",
    "sweep.axis",
    "sweep.values",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Kolmogorov,
    Abc,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `gamma1 = gamma2 = 1 - 1e-8`, `gamma3` varies.
    Gamma3,
    /// `gamma3 = 1 - 1e-8`, `gamma1 = gamma2` varies.
    Gamma12,
    /// Coarse cells per axis.
    CoarseN,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma3 => "gamma3",
            SweepAxis::Gamma12 => "gamma12",
            SweepAxis::CoarseN => "coarse-n",
        }
    }
}

/// How the temporal convergence study measures its error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeReference {
    /// Against the exact solution.
    Exact,
    /// Against a same-mesh run with a much smaller step, which removes the
    /// spatial error from the comparison.
    Fine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub space_n: Vec<usize>,
    pub space_dt: f64,
    pub time_n: usize,
    pub time_dt: Vec<f64>,
    /// Final time of the spatial study.
    pub space_t_end: f64,
    /// Final time of the temporal study.
    pub time_t_end: f64,
    pub reference: TimeReference,
    pub quad_order: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            space_n: vec![8, 16, 32],
            space_dt: 1e-3,
            time_n: 16,
            time_dt: vec![0.04, 0.02, 0.01],
            space_t_end: 0.1,
            time_t_end: 0.4,
            reference: TimeReference::Fine,
            quad_order: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub eps: f64,
    pub w: f64,
    pub n: usize,
    pub adaptive: AdaptiveParams,
    pub two_grid: TwoGridParams,
    pub solver: SolverConfig,
    pub method: Method,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub converge: ConvergeConfig,
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn problem_spec(&self) -> ProblemSpec {
        let spec = match self.problem {
            ProblemKind::Kolmogorov => kolmogorov_problem(self.eps),
            ProblemKind::Abc => abc_problem(self.eps, self.w),
            ProblemKind::Manufactured => self.manufactured().0,
        };
        spec.with_horizon(self.adaptive.horizon)
    }

    /// Checks the constraints specific to `self.method`; call again after
    /// changing the method.
    pub fn check_method(&self) -> Result<()> {
        if self.method == Method::TgApod {
            check_two_grid(self.n, &self.two_grid, &self.adaptive, self.sweep.as_ref())?;
        }
        Ok(())
    }

    /// Manufactured problem advected by the Kolmogorov field, and its exact solution.
    pub fn manufactured(&self) -> (ProblemSpec, ScalarField) {
        manufactured_problem(self.eps, VectorField::new(kolmogorov_velocity))
    }
}

/// Warm-up, window and stride defaults: the longer set for the most
/// advection-dominated case.
pub fn default_schedule(eps: f64) -> (f64, f64, usize) {
    if eps <= 0.01 {
        (5.0, 3.0, 20)
    } else {
        (1.5, 1.0, 5)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::config(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::config(key, format!("cannot parse list item `{}`", s.trim())))
                })
                .collect(),
        }
    }

    fn str(&self, key: &str, default: &str) -> String {
        self.0.get(key).cloned().unwrap_or_else(|| default.to_string())
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, "duplicate key"));
        }
    }
    build(&Entries(map))
}

fn build(e: &Entries) -> Result<RunConfig> {
    let problem = match e.str("problem.name", "kolmogorov").as_str() {
        "kolmogorov" => ProblemKind::Kolmogorov,
        "abc" => ProblemKind::Abc,
        "manufactured" => ProblemKind::Manufactured,
        other => return Err(Error::config("problem.name", format!("unknown problem `{other}`"))),
    };
    let eps: f64 = e.get("problem.eps", 0.1)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::config("problem.eps", format!("must be positive, got {eps}")));
    }
    let w: f64 = e.get("problem.w", 1.0)?;
    let horizon: f64 = e.get("problem.horizon", 10.0)?;
    positive("problem.horizon", horizon)?;

    let n: usize = e.get("mesh.n", 8)?;
    if n < 2 {
        return Err(Error::config("mesh.n", format!("need at least 2 cells per axis, got {n}")));
    }
    let dt: f64 = e.get("time.dt", 0.01)?;
    positive("time.dt", dt)?;

    let (warmup_default, window_default, stride_default) = default_schedule(eps);
    let defaults = AdaptiveParams::default();
    let adaptive = AdaptiveParams {
        gamma1: e.get("pod.gamma1", defaults.gamma1)?,
        gamma2: e.get("pod.gamma2", defaults.gamma2)?,
        gamma3: e.get("pod.gamma3", defaults.gamma3)?,
        eta0: e.get("pod.eta0", defaults.eta0)?,
        warmup: e.get("pod.warmup", warmup_default)?,
        window: e.get("pod.window", window_default)?,
        stride: e.get("pod.stride", stride_default)?,
        dt,
        horizon,
    };
    for (key, g) in [
        ("pod.gamma1", adaptive.gamma1),
        ("pod.gamma2", adaptive.gamma2),
        ("pod.gamma3", adaptive.gamma3),
    ] {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::config(key, format!("must lie in (0, 1), got {g}")));
        }
    }
    if !(adaptive.eta0 > 0.0) {
        return Err(Error::config("pod.eta0", format!("must be positive, got {}", adaptive.eta0)));
    }
    positive("pod.warmup", adaptive.warmup)?;
    positive("pod.window", adaptive.window)?;
    if adaptive.stride == 0 {
        return Err(Error::config("pod.stride", "must be at least 1"));
    }
    if adaptive.warmup >= horizon {
        return Err(Error::config(
            "pod.warmup",
            format!("warm-up {} must end before problem.horizon {horizon}", adaptive.warmup),
        ));
    }
    aligned("pod.warmup", adaptive.warmup, "time.dt", dt)?;
    aligned("pod.window", adaptive.window, "time.dt", dt)?;
    aligned("problem.horizon", horizon, "time.dt", dt)?;

    let method = match e.str("run.method", "tg-apod").as_str() {
        "fem" => Method::Fem,
        "pod" => Method::Pod,
        "apod-residual" => Method::ApodResidual,
        "tg-apod" => Method::TgApod,
        other => return Err(Error::config("run.method", format!("unknown method `{other}`"))),
    };

    let coarse_n_default = if n.is_multiple_of(4) && n >= 8 { n / 4 } else { n / 2 };
    let two_grid = TwoGridParams {
        coarse_n: e.get("coarse.n", coarse_n_default)?,
        coarse_dt: e.get("coarse.dt", 0.05)?,
    };

    let sweep = match e.opt::<String>("sweep.axis")? {
        None => None,
        Some(axis) => {
            let axis = match axis.as_str() {
                "gamma3" => SweepAxis::Gamma3,
                "gamma12" => SweepAxis::Gamma12,
                "coarse-n" => SweepAxis::CoarseN,
                other => return Err(Error::config("sweep.axis", format!("unknown axis `{other}`"))),
            };
            let default_values = match axis {
                SweepAxis::CoarseN => (2..n).filter(|d| n.is_multiple_of(*d)).map(|d| d as f64).collect(),
                _ => vec![0.9, 0.99, 0.999, 0.9999],
            };
            let values: Vec<f64> = e.list("sweep.values", default_values)?;
            if values.is_empty() {
                return Err(Error::config("sweep.values", "empty list"));
            }
            for &v in &values {
                let ok = match axis {
                    SweepAxis::CoarseN => v.fract() == 0.0 && v >= 2.0 && (v as usize) < n && n.is_multiple_of(v as usize),
                    _ => v > 0.0 && v < 1.0,
                };
                if !ok {
                    return Err(Error::config("sweep.values", format!("invalid value {v} for axis {}", axis.name())));
                }
            }
            Some(SweepConfig { axis, values })
        }
    };


    let solver = SolverConfig {
        method: match e.str("solver.method", "gmres").as_str() {
            "gmres" => SolverMethod::Gmres,
            "direct" => SolverMethod::Direct,
            other => return Err(Error::config("solver.method", format!("unknown solver `{other}`"))),
        },
        rel_tol: e.get("solver.tol", 1e-10)?,
        max_iter: e.get("solver.max_iter", 2000)?,
        restart: e.get("solver.restart", 60)?,
    };
    if !(solver.rel_tol > 0.0 && solver.rel_tol < 1.0) {
        return Err(Error::config("solver.tol", format!("must lie in (0, 1), got {}", solver.rel_tol)));
    }
    if solver.max_iter == 0 {
        return Err(Error::config("solver.max_iter", "must be at least 1"));
    }
    if solver.restart == 0 {
        return Err(Error::config("solver.restart", "must be at least 1"));
    }

    let cd = ConvergeConfig::default();
    let converge = ConvergeConfig {
        space_n: e.list("converge.space_n", cd.space_n)?,
        space_dt: e.get("converge.space_dt", cd.space_dt)?,
        time_n: e.get("converge.time_n", cd.time_n)?,
        time_dt: e.list("converge.time_dt", cd.time_dt)?,
        space_t_end: e.get("converge.space_t_end", cd.space_t_end)?,
        time_t_end: e.get("converge.time_t_end", cd.time_t_end)?,
        reference: match e.str("converge.reference", "fine").as_str() {
            "fine" => TimeReference::Fine,
            "exact" => TimeReference::Exact,
            other => return Err(Error::config("converge.reference", format!("unknown reference `{other}`"))),
        },
        quad_order: e.get("converge.quad_order", cd.quad_order)?,
    };
    if converge.space_n.len() < 2 || converge.space_n.iter().any(|&m| m < 2) {
        return Err(Error::config("converge.space_n", "need at least two meshes with n >= 2"));
    }
    if converge.time_dt.len() < 2 {
        return Err(Error::config("converge.time_dt", "need at least two time steps"));
    }
    positive("converge.space_t_end", converge.space_t_end)?;
    positive("converge.time_t_end", converge.time_t_end)?;
    positive("converge.space_dt", converge.space_dt)?;
    aligned("converge.space_t_end", converge.space_t_end, "converge.space_dt", converge.space_dt)?;
    for &d in &converge.time_dt {
        positive("converge.time_dt", d)?;
        aligned("converge.time_t_end", converge.time_t_end, "converge.time_dt", d)?;
    }
    if converge.quad_order == 0 {
        return Err(Error::config("converge.quad_order", "must be at least 1"));
    }

    let cfg = RunConfig {
        problem,
        eps,
        w,
        n,
        adaptive,
        two_grid,
        solver,
        method,
        seed: e.get("run.seed", 0)?,
        out_dir: PathBuf::from(e.str("output.dir", "out")),
        converge,
        sweep,
    };
    // defaulted coarse settings are only checked once a method asks for them
    if ["run.method", "coarse.n", "coarse.dt"].iter().any(|k| e.0.contains_key(*k)) {
        cfg.check_method()?;
    }
    Ok(cfg)
}

fn check_two_grid(n: usize, tg: &TwoGridParams, p: &AdaptiveParams, sweep: Option<&SweepConfig>) -> Result<()> {
    positive("coarse.dt", tg.coarse_dt)?;
    if sweep.is_none_or(|s| s.axis != SweepAxis::CoarseN)
        && (tg.coarse_n < 2 || tg.coarse_n >= n || !n.is_multiple_of(tg.coarse_n))
    {
        return Err(Error::config(
            "coarse.n",
            format!("{} must be a proper divisor of mesh.n = {n}", tg.coarse_n),
        ));
    }
    aligned("coarse.dt", tg.coarse_dt, "time.dt", p.dt)?;
    aligned("pod.warmup", p.warmup, "coarse.dt", tg.coarse_dt)?;
    aligned("pod.window", p.window, "coarse.dt", tg.coarse_dt)?;
    aligned("problem.horizon", p.horizon, "coarse.dt", tg.coarse_dt)?;
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn aligned(key: &str, value: f64, unit_key: &str, unit: f64) -> Result<()> {
    match whole_steps(value, unit) {
        Ok(k) if k > 0 => Ok(()),
        _ => Err(Error::config(
            key,
            format!("{key} = {value} is not a positive multiple of {unit_key} = {unit}"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_pod_config_gets_defaults() {
        let cfg = parse_config_str("run.method = pod\n").unwrap();
        assert_eq!(cfg.method, Method::Pod);
        assert_eq!(cfg.adaptive.gamma1, 0.999);
        assert_eq!(cfg.adaptive.gamma2, 0.999);
        assert_eq!(cfg.adaptive.gamma3, 1.0 - 1e-8);
        assert_eq!(cfg.adaptive.eta0, 0.005);
        assert_eq!((cfg.adaptive.warmup, cfg.adaptive.window, cfg.adaptive.stride), (1.5, 1.0, 5));
    }

    #[test]
    fn small_eps_uses_long_schedule() {
        let cfg = parse_config_str("problem.eps = 0.01\nrun.method = pod\n").unwrap();
        assert_eq!((cfg.adaptive.warmup, cfg.adaptive.window, cfg.adaptive.stride), (5.0, 3.0, 20));
    }

    #[test]
    fn misaligned_coarse_step_names_both_values() {
        let err = parse_config_str("time.dt = 0.01\ncoarse.dt = 0.025\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("coarse.dt") && msg.contains("0.025") && msg.contains("0.01"), "{msg}");
    }

    #[test]
    fn negative_threshold_rejected() {
        let err = parse_config_str("pod.eta0 = -1\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "pod.eta0"));
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        let err = parse_config_str("pod.gama1 = 0.9\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "pod.gama1"));
        assert!(parse_config_str("mesh.n = 8\nmesh.n = 4\n").is_err());
        assert!(parse_config_str("mesh.n 8\n").is_err());
    }

    #[test]
    fn comments_and_lists() {
        let cfg = parse_config_str("# desk run\n\nsweep.axis = gamma3\nsweep.values = 0.9, 0.99\n").unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.axis, SweepAxis::Gamma3);
        assert_eq!(sweep.values, vec![0.9, 0.99]);
    }

    #[test]
    fn coarse_mesh_must_divide_fine_mesh() {
        assert!(parse_config_str("mesh.n = 8\ncoarse.n = 3\n").is_err());
        assert!(parse_config_str("mesh.n = 8\ncoarse.n = 8\n").is_err());
        assert!(parse_config_str("mesh.n = 8\ncoarse.n = 3\nrun.method = pod\n").is_ok());
        let cfg = parse_config_str("mesh.n = 8\nsweep.axis = coarse-n\n").unwrap();
        assert_eq!(cfg.sweep.unwrap().values, vec![2.0, 4.0]);
    }
}
