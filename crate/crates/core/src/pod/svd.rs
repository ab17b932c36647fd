//! Thin SVD of tall snapshot matrices by the method of snapshots.
//!
//! The small Gram matrix `U^T U` is eigendecomposed to get the right
//! singular vectors. The left vectors `U V` are then re-orthonormalized
//! once by a QR factorization, and an SVD of the small triangular factor
//! refines the singular values. This keeps the cost at `O(n c^2)` for `c`
//! snapshots while avoiding the precision loss of `sqrt(lambda)` for small
//! singular values.

use nalgebra::{DMatrix, SymmetricEigen};

/// Relative singular value cutoff, scaled by `max(rows, cols) * sigma_1`.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `n x r`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Descending, strictly positive, length `r`.
    pub singular_values: Vec<f64>,
    /// `c x r`, orthonormal columns.
    pub right: DMatrix<f64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.transpose()
    }
}

pub fn thin_svd(u: &DMatrix<f64>) -> ThinSvd {
    let (n, c) = u.shape();
    let empty = || ThinSvd {
        left: DMatrix::zeros(n, 0),
        singular_values: Vec::new(),
        right: DMatrix::zeros(c, 0),
    };
    if n == 0 || c == 0 {
        return empty();
    }

    let gram = u.tr_mul(u);
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return empty();
    }
    let scale = n.max(c) as f64 * RANK_CUTOFF;
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > scale * scale * lambda_max)
        .collect();
    let mut v = DMatrix::zeros(c, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        v.set_column(j, &eig.eigenvectors.column(i));
    }

    let y = u * &v;
    let qr = y.qr();
    let (q, r) = (qr.q(), qr.r());
    let core = r.svd(true, true);
    let (p, wt) = (core.u.expect("requested"), core.v_t.expect("requested"));
    let left_all = q * p;
    let right_all = v * wt.transpose();

    let mut idx: Vec<usize> = (0..core.singular_values.len()).collect();
    idx.sort_by(|&a, &b| core.singular_values[b].total_cmp(&core.singular_values[a]));
    let sigma_max = core.singular_values[idx[0]];
    let kept: Vec<usize> = idx
        .into_iter()
        .filter(|&i| core.singular_values[i] > scale * sigma_max)
        .collect();

    let mut left = DMatrix::zeros(n, kept.len());
    let mut right = DMatrix::zeros(c, kept.len());
    let mut singular_values = Vec::with_capacity(kept.len());
    for (j, &i) in kept.iter().enumerate() {
        left.set_column(j, &left_all.column(i));
        right.set_column(j, &right_all.column(i));
        singular_values.push(core.singular_values[i]);
    }
    ThinSvd {
        left,
        singular_values,
        right,
    }
}

/// Smallest `m` with `sum_{i<=m} sigma_i > gamma * sum_i sigma_i`.
///
/// Sums are of singular values (not their squares) and the comparison is
/// strict. Returns 0 for an empty spectrum.
pub fn select_mode_count(singular_values: &[f64], gamma: f64) -> usize {
    let total: f64 = singular_values.iter().sum();
    let threshold = gamma * total;
    let mut partial = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        partial += s;
        if partial > threshold {
            return i + 1;
        }
    }
    singular_values.len()
}
