//! POD bases from solution snapshots and the Galerkin-reduced systems built
//! on them.

mod reduced;
mod svd;

pub use reduced::{lift, pod_step, reduce_system, restrict, ReducedModel, ReducedSystem};
pub use svd::{select_mode_count, thin_svd, ThinSvd, RANK_CUTOFF};

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ordered snapshot columns with their capture times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotMatrix {
    columns: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if columns.len() != times.len() {
            return Err(Error::dims("snapshot times", columns.len(), times.len()));
        }
        let mut s = SnapshotMatrix::default();
        for (c, t) in columns.into_iter().zip(times) {
            s.try_push(c, t)?;
        }
        Ok(s)
    }

    fn try_push(&mut self, column: Vec<f64>, time: f64) -> Result<()> {
        if let Some(first) = self.columns.first() {
            if first.len() != column.len() {
                return Err(Error::dims("snapshot column", first.len(), column.len()));
            }
        }
        self.columns.push(column);
        self.times.push(time);
        Ok(())
    }

    pub(crate) fn push(&mut self, column: Vec<f64>, time: f64) {
        self.try_push(column, time).expect("snapshot columns share one length");
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.rows();
        let mut m = DMatrix::zeros(n, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            m.column_mut(j).copy_from_slice(c);
        }
        m
    }
}

/// Orthonormal POD modes (columns of an `n x m` matrix) plus the singular
/// values of the factorization that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    modes: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl PodBasis {
    /// Wraps externally computed modes; columns must be orthonormal.
    pub fn from_modes(modes: DMatrix<f64>, singular_values: Vec<f64>) -> Result<Self> {
        let m = modes.ncols();
        if singular_values.len() < m {
            return Err(Error::dims("singular values", m, singular_values.len()));
        }
        let gram = modes.tr_mul(&modes);
        let dev = (gram - DMatrix::<f64>::identity(m, m)).amax();
        if dev > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "modes are not orthonormal (deviation {dev:e})"
            )));
        }
        Ok(PodBasis {
            modes,
            singular_values,
        })
    }

    /// The full coefficient space: `m = n` unit vectors.
    pub fn identity(n: usize) -> Self {
        PodBasis {
            modes: DMatrix::identity(n, n),
            singular_values: vec![1.0; n],
        }
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn num_modes(&self) -> usize {
        self.modes.ncols()
    }

    pub fn full_dim(&self) -> usize {
        self.modes.nrows()
    }

    /// Orthogonal projector `R R^T` onto the span of the modes (dense).
    pub fn projector(&self) -> DMatrix<f64> {
        &self.modes * self.modes.transpose()
    }

    /// Text dump: `n m` header line, then the modes column-major, one value per line.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.full_dim(), self.num_modes())?;
        for v in self.modes.iter() {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    /// Reads a dump written by [`PodBasis::write_dump`]; singular values are not stored
    /// and come back as ones.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidParameter("empty basis dump".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::InvalidParameter(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [n, m] = dims[..] else {
            return Err(Error::InvalidParameter(format!("bad header `{header}`")));
        };
        let mut values = Vec::with_capacity(n * m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad value `{line}`")))?,
            );
        }
        if values.len() != n * m {
            return Err(Error::dims("basis dump values", n * m, values.len()));
        }
        PodBasis::from_modes(DMatrix::from_vec(n, m, values), vec![1.0; m])
    }
}

/// Leading left singular vectors of the snapshots, the count chosen by
/// [`select_mode_count`] with fraction `gamma`.
pub fn pod_mode(snapshots: &SnapshotMatrix, gamma: f64) -> Result<PodBasis> {
    check_fraction(gamma)?;
    basis_from_matrix(&snapshots.to_matrix(), gamma)
}

fn basis_from_matrix(u: &DMatrix<f64>, gamma: f64) -> Result<PodBasis> {
    let svd = thin_svd(u);
    if svd.rank() == 0 {
        return Err(Error::EmptySnapshots);
    }
    let m = select_mode_count(&svd.singular_values, gamma);
    Ok(PodBasis {
        modes: svd.left.columns(0, m).into_owned(),
        singular_values: svd.singular_values,
    })
}

/// Basis update: the leading `m1` modes of the new snapshots `w1`
/// (fraction `gamma2`) are concatenated with the old modes, and the
/// concatenation is compressed again with fraction `gamma3`.
pub fn update_pod_mode(w1: &SnapshotMatrix, gamma2: f64, gamma3: f64, old: &PodBasis) -> Result<PodBasis> {
    check_fraction(gamma2)?;
    check_fraction(gamma3)?;
    if w1.rows() != old.full_dim() {
        return Err(Error::dims("update snapshots", old.full_dim(), w1.rows()));
    }
    let first = thin_svd(&w1.to_matrix());
    if first.rank() == 0 {
        return Err(Error::EmptySnapshots);
    }
    let m1 = select_mode_count(&first.singular_values, gamma2);
    let n = old.full_dim();
    let mut combined = DMatrix::zeros(n, m1 + old.num_modes());
    combined.columns_mut(0, m1).copy_from(&first.left.columns(0, m1));
    combined.columns_mut(m1, old.num_modes()).copy_from(&old.modes);
    basis_from_matrix(&combined, gamma3)
}

fn check_fraction(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "energy fraction must lie in (0, 1), got {gamma}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize, scale: f64) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = scale;
        v
    }

    #[test]
    fn scaled_orthogonal_columns() {
        let s = SnapshotMatrix::from_columns(
            vec![unit(4, 0, 3.0), unit(4, 1, 2.0), unit(4, 2, 1.0)],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let b = pod_mode(&s, 0.8).unwrap();
        assert_eq!(b.num_modes(), 2);
        assert!((b.modes()[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((b.modes()[(1, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_in_time_snapshots_give_one_mode() {
        let col: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin() + 0.1).collect();
        let s = SnapshotMatrix::from_columns(vec![col; 61], (0..61).map(|i| i as f64).collect()).unwrap();
        assert_eq!(pod_mode(&s, 0.999).unwrap().num_modes(), 1);
    }

    #[test]
    fn zero_snapshots_rejected() {
        let s = SnapshotMatrix::from_columns(vec![vec![0.0; 5]; 3], vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(pod_mode(&s, 0.9), Err(Error::EmptySnapshots)));
        assert!(pod_mode(&s, 1.0).is_err());
    }

    #[test]
    fn update_adds_new_direction() {
        let old = PodBasis::from_modes(DMatrix::from_column_slice(3, 1, &unit(3, 0, 1.0)), vec![1.0]).unwrap();
        let w1 = SnapshotMatrix::from_columns(vec![unit(3, 1, 1.0)], vec![0.0]).unwrap();
        let new = update_pod_mode(&w1, 0.999_999, 0.999_999, &old).unwrap();
        assert_eq!(new.num_modes(), 2);
        let p = new.projector();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12 && (p[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(p[(2, 2)].abs() < 1e-12);

        let truncated = update_pod_mode(&w1, 0.999_999, 0.5, &old).unwrap();
        assert_eq!(truncated.num_modes(), 1);
    }

    #[test]
    fn mismatched_columns_rejected() {
        assert!(SnapshotMatrix::from_columns(vec![vec![1.0; 3], vec![1.0; 2]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let b = PodBasis::from_modes(
            DMatrix::from_column_slice(3, 2, &[0.6, 0.8, 0.0, 0.0, 0.0, 1.0]),
            vec![2.0, 1.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        b.write_dump(&mut buf).unwrap();
        assert!(buf.starts_with(b"3 2\n"));
        let back = PodBasis::read_dump(&buf[..]).unwrap();
        assert_eq!(back.modes(), b.modes());
    }
}
