//! Collapsed Gauss rules on the triangle and Gauss–Legendre rules on edges.

use std::sync::OnceLock;

use super::ElementError;

/// Highest exactness degree served by [`quadrature`] and [`edge_quadrature`].
pub const MAX_DEGREE: usize = 12;

/// Triangle rule in barycentric coordinates; weights sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Rule on the unit interval `[0, 1]`; weights sum to one.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

fn build_triangle_rule(degree: usize) -> QuadratureRule {
    // the collapse adds one degree in the η direction
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let xi = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let eta = 0.5 * (x[j] + 1.0);
            let px = xi * (1.0 - eta);
            let py = eta;
            points.push([1.0 - px - py, px, py]);
            // reference area 1/2 normalized to 1
            weights.push(2.0 * 0.25 * w[i] * w[j] * (1.0 - eta));
        }
    }
    QuadratureRule { points, weights, degree }
}

fn build_edge_rule(degree: usize) -> EdgeRule {
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    EdgeRule {
        points: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
        degree,
    }
}

/// Triangle rule exact for polynomials of total degree `degree`.
pub fn quadrature(degree: usize) -> Result<&'static QuadratureRule, ElementError> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    if degree > MAX_DEGREE {
        return Err(ElementError::QuadratureDegree(degree));
    }
    let rules = RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_triangle_rule).collect());
    Ok(&rules[degree])
}

/// Edge rule exact for polynomials of degree `degree`.
pub fn edge_quadrature(degree: usize) -> Result<&'static EdgeRule, ElementError> {
    static RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();
    if degree > MAX_DEGREE {
        return Err(ElementError::QuadratureDegree(degree));
    }
    let rules = RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_edge_rule).collect());
    Ok(&rules[degree])
}
