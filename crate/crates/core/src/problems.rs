//! Benchmark advection-diffusion problems on the periodic cube `[0, 2 pi]^3`.

use std::f64::consts::PI;

use crate::field::{ScalarField, VectorField};

/// Coefficients of `u_t - eps Lap u + B . grad u + c u = f` with periodic
/// boundary conditions and `u(., 0) = initial`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub eps: f64,
    pub velocity: VectorField,
    /// `None` means `c == 0`, which both flow benchmarks use.
    pub reaction: Option<ScalarField>,
    pub forcing: ScalarField,
    pub initial: ScalarField,
    pub length: f64,
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}

/// Kolmogorov flow: `B = (cos y, cos z, cos x) + (sin z, sin x, sin y) cos t`.
pub fn kolmogorov_problem(eps: f64) -> ProblemSpec {
    ProblemSpec {
        name: "kolmogorov".into(),
        eps,
        velocity: VectorField::new(kolmogorov_velocity),
        reaction: None,
        forcing: ScalarField::new(|_, y, z, t| -y.cos() - z.sin() * t.cos()),
        initial: ScalarField::constant(0.0),
        length: 2.0 * PI,
        horizon: 100.0,
    }
}

pub fn kolmogorov_velocity(x: f64, y: f64, z: f64, t: f64) -> [f64; 3] {
    let ct = t.cos();
    [y.cos() + z.sin() * ct, z.cos() + x.sin() * ct, x.cos() + y.sin() * ct]
}

/// ABC flow with the time-periodic phase `s = sin(w t)`.
pub fn abc_problem(eps: f64, w: f64) -> ProblemSpec {
    ProblemSpec {
        name: "abc".into(),
        eps,
        velocity: VectorField::new(move |x, y, z, t| abc_velocity(x, y, z, t, w)),
        reaction: None,
        forcing: ScalarField::new(move |_, y, z, t| {
            let s = (w * t).sin();
            -(z + s).sin() - (y + s).cos()
        }),
        initial: ScalarField::constant(0.0),
        length: 2.0 * PI,
        horizon: 100.0,
    }
}

pub fn abc_velocity(x: f64, y: f64, z: f64, t: f64, w: f64) -> [f64; 3] {
    let s = (w * t).sin();
    [
        (z + s).sin() + (y + s).cos(),
        (x + s).sin() + (z + s).cos(),
        (y + s).sin() + (x + s).cos(),
    ]
}

/// Manufactured problem with exact solution `u* = sin(x + y + z - t)`.
///
/// The forcing is `u*_t - eps Lap u* + B . grad u*`, where `Lap u* = -3 u*`
/// and `grad u* = cos(x + y + z - t) (1, 1, 1)`.
pub fn manufactured_problem(eps: f64, velocity: VectorField) -> (ProblemSpec, ScalarField) {
    let exact = ScalarField::new(|x, y, z, t| (x + y + z - t).sin());
    let b = velocity.clone();
    let forcing = ScalarField::new(move |x, y, z, t| {
        let phase = x + y + z - t;
        let v = b.eval([x, y, z], t);
        -phase.cos() + 3.0 * eps * phase.sin() + (v[0] + v[1] + v[2]) * phase.cos()
    });
    let problem = ProblemSpec {
        name: "manufactured".into(),
        eps,
        velocity,
        reaction: None,
        forcing,
        initial: exact.clone(),
        length: 2.0 * PI,
        horizon: 1.0,
    };
    (problem, exact)
}
