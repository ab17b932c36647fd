//! Structured periodic tetrahedral meshes of the cube `[0, L)^3`.
//!
//! Every cube of an `n x n x n` grid is split into six tetrahedra that share
//! the cube's main diagonal (Kuhn subdivision). Vertices live in `[0, L)`;
//! periodicity is expressed only through the vertex numbering, so a cell of
//! the last layer references vertex 0 of the next period while keeping its
//! unwrapped corner coordinates for geometry.

use std::io::Write;

use crate::error::{Error, Result};

/// Affine geometry of one linear tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetGeometry {
    pub corners: [[f64; 3]; 4],
    /// Signed volume; positive for a correctly oriented cell.
    pub volume: f64,
    /// Gradients of the four barycentric coordinates (constant on the cell).
    pub grads: [[f64; 3]; 4],
}

impl TetGeometry {
    pub fn from_corners(corners: [[f64; 3]; 4]) -> Result<Self> {
        let [x0, x1, x2, x3] = corners;
        let e = |a: [f64; 3]| [a[0] - x0[0], a[1] - x0[1], a[2] - x0[2]];
        // columns of the Jacobian of the reference-to-physical map
        let (c1, c2, c3) = (e(x1), e(x2), e(x3));
        let det = c1[0] * (c2[1] * c3[2] - c2[2] * c3[1]) - c2[0] * (c1[1] * c3[2] - c1[2] * c3[1])
            + c3[0] * (c1[1] * c2[2] - c1[2] * c2[1]);
        let scale = norm3(c1) * norm3(c2) * norm3(c3);
        if !(det.abs() > 1e-14 * scale) {
            return Err(Error::InvalidMesh(format!(
                "degenerate tetrahedron (jacobian determinant {det:e})"
            )));
        }
        // rows of J^{-1} are the gradients of lambda_1..lambda_3
        let inv_det = 1.0 / det;
        let g1 = scale3(cross(c2, c3), inv_det);
        let g2 = scale3(cross(c3, c1), inv_det);
        let g3 = scale3(cross(c1, c2), inv_det);
        let g0 = [
            -(g1[0] + g2[0] + g3[0]),
            -(g1[1] + g2[1] + g3[1]),
            -(g1[2] + g2[2] + g3[2]),
        ];
        Ok(TetGeometry {
            corners,
            volume: det / 6.0,
            grads: [g0, g1, g2, g3],
        })
    }

    /// Physical point with the given barycentric coordinates.
    pub fn point(&self, bary: [f64; 4]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (w, c) in bary.iter().zip(&self.corners) {
            for d in 0..3 {
                p[d] += w * c[d];
            }
        }
        p
    }

    pub fn barycentric(&self, p: [f64; 3]) -> [f64; 4] {
        let x0 = self.corners[0];
        let d = [p[0] - x0[0], p[1] - x0[1], p[2] - x0[2]];
        let mut l = [0.0; 4];
        for i in 1..4 {
            l[i] = dot3(self.grads[i], d);
        }
        l[0] = 1.0 - l[1] - l[2] - l[3];
        l
    }

    pub fn diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                let (p, q) = (self.corners[a], self.corners[b]);
                h = h.max(norm3([p[0] - q[0], p[1] - q[1], p[2] - q[2]]));
            }
        }
        h
    }
}

/// Tetrahedron of the mesh: global (wrapped) vertex indices plus geometry.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub nodes: [usize; 4],
    pub geometry: TetGeometry,
}

#[derive(Debug, Clone)]
pub struct PeriodicMesh {
    length: f64,
    n: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<Cell>,
    h: f64,
}

// The six monotone lattice paths from corner (0,0,0) to (1,1,1).
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl PeriodicMesh {
    /// Kuhn-subdivided periodic grid with `n` cubes per axis on `[0, length)^3`.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 cells per axis for a periodic mesh, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "domain length must be positive, got {length}"
            )));
        }
        let spacing = length / n as f64;
        let mut vertices = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    vertices.push([i as f64 * spacing, j as f64 * spacing, k as f64 * spacing]);
                }
            }
        }

        let mut cells = Vec::with_capacity(6 * n * n * n);
        let mut h: f64 = 0.0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for path in &KUHN_PATHS {
                        let mut lattice = [[i, j, k]; 4];
                        for step in 0..3 {
                            lattice[step + 1] = lattice[step];
                            lattice[step + 1][path[step]] += 1;
                        }
                        // odd permutations come out negatively oriented
                        if permutation_is_odd(path) {
                            lattice.swap(2, 3);
                        }
                        let mut nodes = [0; 4];
                        let mut corners = [[0.0; 3]; 4];
                        for (v, l) in lattice.iter().enumerate() {
                            nodes[v] = wrap_index(n, l[0] as isize, l[1] as isize, l[2] as isize);
                            corners[v] = [
                                l[0] as f64 * spacing,
                                l[1] as f64 * spacing,
                                l[2] as f64 * spacing,
                            ];
                        }
                        let geometry = TetGeometry::from_corners(corners)?;
                        h = h.max(geometry.diameter());
                        cells.push(Cell { nodes, geometry });
                    }
                }
            }
        }

        Ok(PeriodicMesh {
            length,
            n,
            vertices,
            cells,
            h,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn num_dofs(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Mesh diameter: the longest cell diameter (the cube diagonal).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Global DOF index of lattice point `(i, j, k)`; indices wrap periodically.
    pub fn dof_index(&self, i: isize, j: isize, k: isize) -> usize {
        wrap_index(self.n, i, j, k)
    }

    /// Index of the cell containing `p`, with `p` first wrapped into `[0, L)^3`.
    ///
    /// Points on shared faces go to the cell whose ordering test passes first.
    pub fn locate(&self, p: [f64; 3]) -> usize {
        let spacing = self.length / self.n as f64;
        let mut cube = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let x = p[d].rem_euclid(self.length) / spacing;
            let c = (x.floor() as usize).min(self.n - 1);
            cube[d] = c;
            frac[d] = x - c as f64;
        }
        let mut order = [0usize, 1, 2];
        // stable sort by decreasing fractional coordinate selects the Kuhn path
        order.sort_by(|&a, &b| frac[b].partial_cmp(&frac[a]).unwrap());
        let path = KUHN_PATHS
            .iter()
            .position(|q| *q == order)
            .expect("every axis ordering is a Kuhn path");
        6 * (cube[0] + self.n * (cube[1] + self.n * cube[2])) + path
    }

    /// Debug dump: one `x y z` line per vertex, then one line of 4 indices per cell.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
        }
        for c in &self.cells {
            writeln!(
                out,
                "{} {} {} {}",
                c.nodes[0], c.nodes[1], c.nodes[2], c.nodes[3]
            )?;
        }
        Ok(())
    }
}

fn wrap_index(n: usize, i: isize, j: isize, k: isize) -> usize {
    let n_i = n as isize;
    let w = |a: isize| a.rem_euclid(n_i) as usize;
    w(i) + n * (w(j) + n * w(k))
}

fn permutation_is_odd(p: &[usize; 3]) -> bool {
    let mut inversions = 0;
    for a in 0..3 {
        for b in a + 1..3 {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
