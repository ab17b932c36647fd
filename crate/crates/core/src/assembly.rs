//! P1 finite element assembly of the implicit-Euler operators.
//!
//! The bilinear form is
//! `a(t; u, v) = eps (grad u, grad v) + (B . grad u, v) + (c u, v)`.
//! Its boundary flux term `-eps * int_{dOmega} du/dn v` is not assembled:
//! on a periodic cube the contributions of opposite faces cancel exactly.
//!
//! Mass and stiffness use closed-form P1 element matrices; advection,
//! reaction and load use the 4-point degree-2 rule. Global accumulation
//! runs in cell order into a fixed sparsity pattern, so repeated assembly
//! is bitwise reproducible.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::mesh::{dot3, PeriodicMesh, TetGeometry};
use crate::quadrature::TetRule;
use crate::sparse::SparseMatrix;

pub type LocalMatrix = [[f64; 4]; 4];

/// Exact P1 mass matrix: `V/20` times 2 on the diagonal, 1 elsewhere.
pub fn local_mass(g: &TetGeometry) -> LocalMatrix {
    let v = g.volume.abs();
    let mut m = [[v / 20.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = v / 10.0;
    }
    m
}

pub fn local_stiffness(g: &TetGeometry) -> LocalMatrix {
    let v = g.volume.abs();
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] = v * dot3(g.grads[i], g.grads[j]);
        }
    }
    k
}

/// `N_ij = int (B . grad phi_j) phi_i` by quadrature.
pub fn local_advection(g: &TetGeometry, velocity: &VectorField, t: f64, rule: &TetRule) -> LocalMatrix {
    let v = g.volume.abs();
    let mut n = [[0.0; 4]; 4];
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let b = velocity.eval(g.point(*bary), t);
        let wv = w * v;
        for j in 0..4 {
            let transport = dot3(b, g.grads[j]) * wv;
            for i in 0..4 {
                n[i][j] += transport * bary[i];
            }
        }
    }
    n
}

/// `R_ij = int c phi_j phi_i` by quadrature.
pub fn local_reaction(g: &TetGeometry, coeff: &ScalarField, t: f64, rule: &TetRule) -> LocalMatrix {
    let v = g.volume.abs();
    let mut r = [[0.0; 4]; 4];
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let c = coeff.eval(g.point(*bary), t) * w * v;
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] += c * bary[i] * bary[j];
            }
        }
    }
    r
}

pub fn local_load(g: &TetGeometry, f: &ScalarField, t: f64, rule: &TetRule) -> [f64; 4] {
    let v = g.volume.abs();
    let mut b = [0.0; 4];
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let fv = f.eval(g.point(*bary), t) * w * v;
        for i in 0..4 {
            b[i] += fv * bary[i];
        }
    }
    b
}

/// Mesh plus its P1 sparsity pattern and per-cell scatter positions.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: PeriodicMesh,
    template: SparseMatrix,
    // position in the value array of local entry (i, j), row-major per cell
    scatter: Vec<[usize; 16]>,
    rule: TetRule,
}

impl Assembler {
    pub fn new(mesh: PeriodicMesh) -> Self {
        let n = mesh.num_dofs();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in mesh.cells() {
            for &a in &cell.nodes {
                neighbours[a].extend_from_slice(&cell.nodes);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut neighbours {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        let template = SparseMatrix::from_csr(n, n, row_ptr, col_idx, vec![0.0; nnz])
            .expect("pattern built from sorted, deduplicated rows");

        let scatter = mesh
            .cells()
            .iter()
            .map(|cell| {
                let mut pos = [0usize; 16];
                for (a, &ra) in cell.nodes.iter().enumerate() {
                    let start = template.row_ptr()[ra];
                    let cols = &template.col_idx()[start..template.row_ptr()[ra + 1]];
                    for (b, &cb) in cell.nodes.iter().enumerate() {
                        pos[4 * a + b] = start + cols.binary_search(&cb).expect("column in pattern");
                    }
                }
                pos
            })
            .collect();

        Assembler {
            mesh,
            template,
            scatter,
            rule: TetRule::degree2(),
        }
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        &self.mesh
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_dofs()
    }

    fn assemble_matrix(&self, local: impl Fn(&TetGeometry) -> LocalMatrix) -> SparseMatrix {
        let mut out = self.template.clone();
        let values = out.values_mut();
        for (cell, pos) in self.mesh.cells().iter().zip(&self.scatter) {
            let m = local(&cell.geometry);
            for a in 0..4 {
                for b in 0..4 {
                    values[pos[4 * a + b]] += m[a][b];
                }
            }
        }
        out
    }

    pub fn mass(&self) -> SparseMatrix {
        self.assemble_matrix(local_mass)
    }

    pub fn stiffness(&self) -> SparseMatrix {
        self.assemble_matrix(local_stiffness)
    }

    pub fn advection(&self, velocity: &VectorField, t: f64) -> SparseMatrix {
        self.assemble_matrix(|g| local_advection(g, velocity, t, &self.rule))
    }

    pub fn reaction(&self, coeff: &ScalarField, t: f64) -> SparseMatrix {
        self.assemble_matrix(|g| local_reaction(g, coeff, t, &self.rule))
    }

    /// Unscaled load vector `(f, phi_i)`.
    pub fn load(&self, f: &ScalarField, t: f64) -> Vec<f64> {
        let mut b = vec![0.0; self.num_dofs()];
        for cell in self.mesh.cells() {
            let local = local_load(&cell.geometry, f, t, &self.rule);
            for (a, &node) in cell.nodes.iter().enumerate() {
                b[node] += local[a];
            }
        }
        b
    }
}

pub fn assemble_mass(mesh: &PeriodicMesh) -> SparseMatrix {
    Assembler::new(mesh.clone()).mass()
}

pub fn assemble_stiffness(mesh: &PeriodicMesh) -> SparseMatrix {
    Assembler::new(mesh.clone()).stiffness()
}

pub fn assemble_advection(mesh: &PeriodicMesh, velocity: &VectorField, t: f64) -> SparseMatrix {
    Assembler::new(mesh.clone()).advection(velocity, t)
}

pub fn assemble_reaction(mesh: &PeriodicMesh, coeff: &ScalarField, t: f64) -> SparseMatrix {
    Assembler::new(mesh.clone()).reaction(coeff, t)
}

pub fn assemble_load(mesh: &PeriodicMesh, f: &ScalarField, t: f64) -> Vec<f64> {
    Assembler::new(mesh.clone()).load(f, t)
}

/// `||u_h - u(., t)||_{L2}` for the P1 function with nodal values `coeffs`,
/// integrated cell by cell with `rule`.
pub fn l2_error(mesh: &PeriodicMesh, coeffs: &[f64], exact: &ScalarField, t: f64, rule: &TetRule) -> Result<f64> {
    if coeffs.len() != mesh.num_dofs() {
        return Err(Error::dims("l2 error coefficients", mesh.num_dofs(), coeffs.len()));
    }
    let mut total = 0.0;
    for cell in mesh.cells() {
        let g = &cell.geometry;
        let mut local = 0.0;
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let uh: f64 = bary.iter().zip(&cell.nodes).map(|(l, &i)| l * coeffs[i]).sum();
            let d = uh - exact.eval(g.point(*bary), t);
            local += w * d * d;
        }
        total += g.volume.abs() * local;
    }
    Ok(total.sqrt())
}

/// Implicit-Euler system matrix `A = M + dt (eps K + N + R)`.
pub fn compose_system(
    mass: &SparseMatrix,
    stiffness: &SparseMatrix,
    advection: &SparseMatrix,
    reaction: Option<&SparseMatrix>,
    eps: f64,
    dt: f64,
) -> Result<SparseMatrix> {
    let n = mass.nrows();
    for (name, m) in [("stiffness", stiffness), ("advection", advection)]
        .into_iter()
        .chain(reaction.map(|r| ("reaction", r)))
    {
        if m.nrows() != n || m.ncols() != mass.ncols() {
            return Err(Error::DimensionMismatch {
                context: name,
                expected: n,
                found: m.nrows(),
            });
        }
    }
    let mut terms = vec![(1.0, mass), (dt * eps, stiffness), (dt, advection)];
    if let Some(r) = reaction {
        terms.push((dt, r));
    }
    SparseMatrix::linear_combination(&terms)
}
