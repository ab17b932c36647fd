//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's quadrature, geometry or factorization code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgapod::adaptive::AdaptiveParams;
use tgapod::integrator::FullOrderModel;
use tgapod::mesh::PeriodicMesh;
use tgapod::problems::kolmogorov_problem;
use tgapod::solver::SolverConfig;
use tgapod::sparse::SparseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss-Legendre nodes and weights on `[0, 1]` by the Golub-Welsch
/// eigenvalue method.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(order, order);
    for k in 1..order {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            ((eig.eigenvalues[i] + 1.0) / 2.0, v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Points (reference coordinates) and weights of a conical product rule on
/// the unit tetrahedron; weights sum to 1/6.
pub fn conical_rule(order: usize) -> Vec<([f64; 3], f64)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::new();
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            for (c, wc) in x.iter().zip(&w) {
                let z = *c;
                let y = b * (1.0 - c);
                let xx = a * (1.0 - b) * (1.0 - c);
                let jac = (1.0 - c) * (1.0 - c) * (1.0 - b);
                out.push(([xx, y, z], wa * wb * wc * jac));
            }
        }
    }
    out
}

/// Linear basis on one tetrahedron from the inverse of the vertex matrix.
pub struct P1Cell {
    pub corners: [[f64; 3]; 4],
    coeffs: Matrix4<f64>,
    det: f64,
}

impl P1Cell {
    pub fn new(corners: [[f64; 3]; 4]) -> Self {
        let v = Matrix4::from_fn(|r, c| if c == 0 { 1.0 } else { corners[r][c - 1] });
        let coeffs = v.try_inverse().expect("non-degenerate cell");
        let j = nalgebra::Matrix3::from_fn(|r, c| corners[c + 1][r] - corners[0][r]);
        P1Cell {
            corners,
            coeffs,
            det: j.determinant(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }

    /// Value of basis function `i` at `p`.
    pub fn phi(&self, i: usize, p: [f64; 3]) -> f64 {
        self.coeffs[(0, i)] + self.coeffs[(1, i)] * p[0] + self.coeffs[(2, i)] * p[1] + self.coeffs[(3, i)] * p[2]
    }

    pub fn grad(&self, i: usize) -> [f64; 3] {
        [self.coeffs[(1, i)], self.coeffs[(2, i)], self.coeffs[(3, i)]]
    }

    pub fn map(&self, xi: [f64; 3]) -> [f64; 3] {
        let c = &self.corners;
        std::array::from_fn(|d| c[0][d] + xi[0] * (c[1][d] - c[0][d]) + xi[1] * (c[2][d] - c[0][d]) + xi[2] * (c[3][d] - c[0][d]))
    }

    pub fn integrate(&self, order: usize, f: impl Fn([f64; 3]) -> f64) -> f64 {
        conical_rule(order)
            .into_iter()
            .map(|(xi, w)| w * f(self.map(xi)))
            .sum::<f64>()
            * self.det.abs()
    }

    pub fn mass(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.integrate(4, |p| self.phi(i, p) * self.phi(j, p))))
    }

    pub fn stiffness(&self) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let (a, b) = (self.grad(i), self.grad(j));
                self.integrate(2, |_| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
            })
        })
    }

    /// `int (B . grad phi_j) phi_i`.
    pub fn advection(&self, b: impl Fn([f64; 3]) -> [f64; 3]) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let g = self.grad(j);
                self.integrate(5, |p| {
                    let v = b(p);
                    (v[0] * g[0] + v[1] * g[1] + v[2] * g[2]) * self.phi(i, p)
                })
            })
        })
    }

    pub fn reaction(&self, c: impl Fn([f64; 3]) -> f64) -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.integrate(5, |p| c(p) * self.phi(i, p) * self.phi(j, p))))
    }
}

/// A random, reasonably shaped tetrahedron with positive orientation.
pub fn random_tet(rng: &mut impl Rng) -> [[f64; 3]; 4] {
    loop {
        let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let mut c = [base; 4];
        for corner in c.iter_mut().skip(1) {
            for d in 0..3 {
                corner[d] += rng.random_range(-1.5..1.5);
            }
        }
        let cell = P1Cell::new_checked(c);
        if let Some(cell) = cell {
            if cell.det > 0.2 {
                return c;
            }
            if cell.det < -0.2 {
                c.swap(2, 3);
                return c;
            }
        }
    }
}

impl P1Cell {
    fn new_checked(corners: [[f64; 3]; 4]) -> Option<Self> {
        let v = Matrix4::from_fn(|r, c| if c == 0 { 1.0 } else { corners[r][c - 1] });
        v.try_inverse()?;
        Some(P1Cell::new(corners))
    }
}

pub fn max_rel_diff(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Random sparse matrix with a nonzero diagonal and about `density` fill.
pub fn random_sparse(rng: &mut impl Rng, n: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0 + rng.random_range(0.0..1.0)));
        for j in 0..n {
            if i != j && rng.random_range(0.0..1.0) < density {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

/// Orthonormal `n x m` matrix from the QR factor of a random matrix.
pub fn random_orthonormal(rng: &mut impl Rng, n: usize, m: usize) -> DMatrix<f64> {
    random_matrix(rng, n, m).qr().q()
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
        m.swap_rows(col, piv);
        x.swap_rows(col, piv);
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (x[r] - s) / m[(r, r)];
    }
    x
}

/// Desk-scale Kolmogorov setup: `n = 8`, `dt = 0.01`, `T = 10`.
pub fn desk_kolmogorov(eps: f64) -> (FullOrderModel, AdaptiveParams) {
    let params = AdaptiveParams {
        dt: 0.01,
        horizon: 10.0,
        ..AdaptiveParams::default()
    };
    let mesh = PeriodicMesh::new(2.0 * PI, 8).unwrap();
    let fom = FullOrderModel::new(mesh, kolmogorov_problem(eps).with_horizon(10.0), 0.01, SolverConfig::default()).unwrap();
    (fom, params)
}

pub fn desk_coarse(eps: f64, n: usize, dt: f64) -> FullOrderModel {
    let mesh = PeriodicMesh::new(2.0 * PI, n).unwrap();
    FullOrderModel::new(mesh, kolmogorov_problem(eps).with_horizon(10.0), dt, SolverConfig::default()).unwrap()
}
