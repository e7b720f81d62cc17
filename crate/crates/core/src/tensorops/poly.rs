//! Sparse multivariate polynomials in three variables.
//!
//! Used to state the right inverses of the divergence as exact polynomial
//! tensor fields so that `div` can be taken by symbolic differentiation.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial in `x1, x2, x3` with exponents stored per monomial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    /// The coordinate function `x_{axis+1}`.
    pub fn coord(axis: usize) -> Self {
        let mut e = [0; 3];
        e[axis] = 1;
        Self::monomial(1.0, e)
    }

    pub fn monomial(c: f64, exps: [u32; 3]) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(exps, c);
        }
        Self { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == 0.0)
    }

    /// Largest absolute coefficient.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    /// Exact partial derivative with respect to `x_{axis+1}`.
    pub fn diff(&self, axis: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[axis] -= 1;
            *terms.entry(ne).or_insert(0.0) += c * e[axis] as f64;
        }
        let mut p = Self { terms };
        p.prune();
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= s;
        }
        p.prune();
        p
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            *p.terms.entry(*e).or_insert(0.0) += c;
        }
        p.prune();
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        let mut p = Poly { terms };
        p.prune();
        p
    }
}

/// Vector field with polynomial components.
pub type PolyVec = [Poly; 3];

/// Second-order tensor field with polynomial entries.
pub type PolyMat = [[Poly; 3]; 3];

pub fn poly_dot(a: &PolyVec, b: &PolyVec) -> Poly {
    let mut s = Poly::zero();
    for i in 0..3 {
        s = &s + &(&a[i] * &b[i]);
    }
    s
}

/// The position vector `x` as a polynomial field.
pub fn position() -> PolyVec {
    [Poly::coord(0), Poly::coord(1), Poly::coord(2)]
}

pub fn outer(a: &PolyVec, b: &PolyVec) -> PolyMat {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i] * &b[j]))
}

pub fn mat_add(a: &PolyMat, b: &PolyMat) -> PolyMat {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] + &b[i][j]))
}

pub fn mat_scale(a: &PolyMat, s: f64) -> PolyMat {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].scale(s)))
}

/// `p * I`.
pub fn scalar_identity(p: &Poly) -> PolyMat {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { p.clone() } else { Poly::zero() }))
}

/// Row-wise divergence `(div M)_i = sum_j d_j M_ij`.
pub fn divergence(m: &PolyMat) -> PolyVec {
    std::array::from_fn(|i| {
        let mut s = Poly::zero();
        for j in 0..3 {
            s = &s + &m[i][j].diff(j);
        }
        s
    })
}

pub fn eval_mat(m: &PolyMat, x: [f64; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].eval(x)))
}

pub fn eval_vec(v: &PolyVec, x: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| v[i].eval(x))
}
