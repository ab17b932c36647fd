//! Space-time coefficient functions `(x, y, z, t) -> value`.

use std::fmt;
use std::sync::Arc;

/// Scalar coefficient such as a reaction rate, forcing or initial condition.
#[derive(Clone)]
pub struct ScalarField(Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>);

/// Vector coefficient such as an advecting velocity.
#[derive(Clone)]
pub struct VectorField(Arc<dyn Fn(f64, f64, f64, f64) -> [f64; 3] + Send + Sync>);

impl ScalarField {
    pub fn new(f: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_, _, _, _| c)
    }

    pub fn eval(&self, p: [f64; 3], t: f64) -> f64 {
        (self.0)(p[0], p[1], p[2], t)
    }
}

impl VectorField {
    pub fn new(f: impl Fn(f64, f64, f64, f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        VectorField(Arc::new(f))
    }

    pub fn constant(v: [f64; 3]) -> Self {
        VectorField::new(move |_, _, _, _| v)
    }

    pub fn eval(&self, p: [f64; 3], t: f64) -> [f64; 3] {
        (self.0)(p[0], p[1], p[2], t)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField(..)")
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField(..)")
    }
}
