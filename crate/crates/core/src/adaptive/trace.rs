use std::io::Write;

use super::drivers::MethodRun;
use crate::error::{Error, Result};
use crate::solver::norm;

/// Relative Euclidean errors of a trajectory against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub errors: Vec<f64>,
    pub average: f64,
}

/// `||u - v|| / ||u||`; falls back to the absolute error when `u = 0`.
pub fn relative_error(reference: &[f64], approx: &[f64]) -> f64 {
    let diff: f64 = reference
        .iter()
        .zip(approx)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = norm(reference);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Step-by-step relative errors and their mean over all given states.
pub fn relative_error_trace(reference: &[Vec<f64>], approx: &[Vec<f64>]) -> Result<ErrorSeries> {
    if reference.len() != approx.len() {
        return Err(Error::dims("trajectory length", reference.len(), approx.len()));
    }
    if reference.is_empty() {
        return Err(Error::InvalidParameter("empty trajectories".into()));
    }
    let mut errors = Vec::with_capacity(reference.len());
    for (u, v) in reference.iter().zip(approx) {
        if u.len() != v.len() {
            return Err(Error::dims("trajectory state", u.len(), v.len()));
        }
        errors.push(relative_error(u, v));
    }
    let average = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(ErrorSeries { errors, average })
}

/// Times are multiples of a step size; print them without the
/// representation noise of `k * dt`.
pub(crate) fn format_time(t: f64) -> String {
    let s = format!("{t:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub indicator: f64,
    pub error: f64,
    pub marked: bool,
    pub m: usize,
}

/// Per-step table written as `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub rows: Vec<TraceRow>,
    pub average: f64,
}

impl ErrorTrace {
    /// Combines a run's records with errors for the same steps `1..=N`.
    pub fn new(run: &MethodRun, errors: &[f64]) -> Result<Self> {
        if errors.len() != run.records.len() {
            return Err(Error::dims("error trace", run.records.len(), errors.len()));
        }
        let rows: Vec<TraceRow> = run
            .records
            .iter()
            .zip(errors)
            .map(|(r, &error)| TraceRow {
                step: r.step,
                time: r.step as f64 * run.dt,
                indicator: r.indicator,
                error,
                marked: r.marked,
                m: r.dim,
            })
            .collect();
        let average = if errors.is_empty() {
            0.0
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        };
        Ok(ErrorTrace { rows, average })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,time,indicator,error,marked,m")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:e},{:e},{},{}",
                r.step,
                format_time(r.time),
                r.indicator,
                r.error,
                u8::from(r.marked),
                r.m
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_errors() {
        let u = vec![vec![3.0, 4.0], vec![1.0, 0.0]];
        let v = vec![vec![3.0, 4.0], vec![0.0, 0.0]];
        let s = relative_error_trace(&u, &v).unwrap();
        assert_eq!(s.errors, vec![0.0, 1.0]);
        assert_eq!(s.average, 0.5);
        assert!(relative_error_trace(&u, &v[..1]).is_err());
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 2.0]), 2.0);
    }

    #[test]
    fn times_print_cleanly() {
        assert_eq!(format_time(165.0 * 0.01), "1.65");
        assert_eq!(format_time(0.0), "0");
        assert_eq!(format_time(100.0), "100");
        assert_eq!(format_time(3.0 * 0.1), "0.3");
    }
}
