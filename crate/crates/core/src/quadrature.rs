//! Tetrahedral quadrature rules in barycentric form.
//!
//! Weights sum to one, so a cell integral is `volume * sum(w_q * f(x_q))`.

/// A rule as barycentric points with weights normalized to sum to one.
#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Symmetric 4-point rule, exact for polynomials of degree 2.
    pub fn degree2() -> Self {
        let a = 0.585_410_196_624_968_5;
        let b = 0.138_196_601_125_010_5;
        TetRule {
            points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
            weights: vec![0.25; 4],
        }
    }

    /// Collapsed (Duffy) product of Gauss-Legendre rules with `order` points per
    /// direction; exact for polynomials of degree `2 * order - 3` or better.
    pub fn collapsed_gauss(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre_unit(order);
        let mut points = Vec::with_capacity(order.pow(3));
        let mut w = Vec::with_capacity(order.pow(3));
        for (u, wu) in nodes.iter().zip(&weights) {
            for (v, wv) in nodes.iter().zip(&weights) {
                for (s, ws) in nodes.iter().zip(&weights) {
                    let x = *u;
                    let y = v * (1.0 - u);
                    let z = s * (1.0 - u) * (1.0 - v);
                    let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                    points.push([1.0 - x - y - z, x, y, z]);
                    // reference volume is 1/6
                    w.push(6.0 * wu * wv * ws * jac);
                }
            }
        }
        TetRule { points, weights: w }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
