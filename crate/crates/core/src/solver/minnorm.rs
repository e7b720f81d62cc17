//! Minimum-norm solutions of symmetric (after row signing) singular systems.
//!
//! The null space of the equilibrated matrix is extracted first, densely for
//! small systems and by shift-invert subspace iteration otherwise. The
//! right-hand side is projected onto the range and the projected system is
//! solved with the null space as bordering constraint, which yields the
//! pseudo-inverse solution.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::sym_eigen;
use super::{equilibration, norm2, Factorization, SolveError, MAX_DENSE_DIM};
use crate::assembly::CsrMatrix;
use crate::tensorops::DEFAULT_SEED;

/// Eigenvalues below this fraction of the largest count as null.
const NULL_REL: f64 = 1e-10;
const DENSE_NULL_DIM: usize = 1500;
const SHIFT: f64 = 1e-8;
const SUBSPACE_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub x: Vec<f64>,
    pub null_dim: usize,
    /// Relative residual against the range-projected right-hand side.
    pub consistent_residual: f64,
    /// `‖Nᵀ J b‖ / ‖b‖`: the part of the data outside the range.
    pub inconsistency: f64,
    pub condition_estimate: f64,
}

/// Minimum-norm least-squares solution of `K x = b`, where `diag(row_signs) K`
/// must be symmetric (omit the signs for symmetric `K`).
pub fn min_norm_solve(k: &CsrMatrix, b: &[f64], row_signs: Option<&[f64]>) -> Result<MinNormResult, SolveError> {
    let n = k.nrows;
    if n > MAX_DENSE_DIM {
        return Err(SolveError::DimensionCap { dim: n, cap: MAX_DENSE_DIM });
    }
    if k.ncols != n || b.len() != n || row_signs.is_some_and(|j| j.len() != n) {
        return Err(SolveError::Shape(format!("{}x{} matrix with rhs {}", k.nrows, k.ncols, b.len())));
    }
    let ones = vec![1.0; n];
    let j = row_signs.unwrap_or(&ones);
    let ksym = k.scaled(j, &ones);
    let defect = ksym.triplets().map(|(r, c, v)| (v - ksym.get(c, r)).abs()).fold(0.0, f64::max);
    if defect > 1e-12 * ksym.max_abs().max(f64::MIN_POSITIVE) {
        return Err(SolveError::NotSymmetric(defect));
    }
    let s = equilibration(&ksym);
    let shat = ksym.scaled(&s, &s);

    let nulls_hat = if n <= DENSE_NULL_DIM { dense_null(&shat)? } else { iterative_null(&shat)? };
    let mut basis: Vec<Vec<f64>> = nulls_hat.iter().map(|y| y.iter().zip(&s).map(|(a, b)| a * b).collect()).collect();
    orthonormalize(&mut basis);
    let null_dim = basis.len();

    let c: Vec<f64> = b.iter().zip(j).map(|(a, b)| a * b).collect();
    let mut bp = c.clone();
    let mut outside = 0.0;
    for v in &basis {
        let d = dot(v, &c);
        outside += d * d;
        axpy(-d, v, &mut bp);
    }
    let nb = norm2(b);
    let inconsistency = if nb > 0.0 { outside.sqrt() / nb } else { 0.0 };

    let (x, condition_estimate) = if null_dim == 0 {
        let mut f = Factorization::new(&ksym)?;
        let (x, steps) = f.solve(&bp);
        (x, f.report(steps).condition_estimate)
    } else {
        let m = n + null_dim;
        let mut trip: Vec<(usize, usize, f64)> = shat.triplets().collect();
        for (q, v) in basis.iter().enumerate() {
            let col: Vec<f64> = v.iter().zip(&s).map(|(a, b)| a * b).collect();
            let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
            for (i, x) in col.iter().enumerate() {
                if *x != 0.0 {
                    trip.push((i, n + q, x / scale));
                    trip.push((n + q, i, x / scale));
                }
            }
        }
        let bordered = CsrMatrix::from_triplets(m, m, &trip);
        let mut rhs: Vec<f64> = bp.iter().zip(&s).map(|(a, b)| a * b).collect();
        rhs.resize(m, 0.0);
        let mut f = Factorization::new(&bordered)?;
        let (y, steps) = f.solve(&rhs);
        let mut x: Vec<f64> = (0..n).map(|i| s[i] * y[i]).collect();
        for v in &basis {
            let d = dot(v, &x);
            axpy(-d, v, &mut x);
        }
        (x, f.report(steps).condition_estimate)
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Decomposition("minimum-norm solve produced non-finite values".into()));
    }
    let kx = ksym.matvec(&x);
    let r: Vec<f64> = kx.iter().zip(&bp).map(|(a, b)| a - b).collect();
    let nbp = norm2(&bp);
    let consistent_residual = if nbp > 0.0 { norm2(&r) / nbp } else { norm2(&r) };
    Ok(MinNormResult { x, null_dim, consistent_residual, inconsistency, condition_estimate })
}

fn dense_null(a: &CsrMatrix) -> Result<Vec<Vec<f64>>, SolveError> {
    let d = a.to_dense();
    let sym = Mat::from_fn(d.nrows(), d.ncols(), |i, j| 0.5 * (d[(i, j)] + d[(j, i)]));
    let (vals, vecs) = sym_eigen(&sym)?;
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((0..vals.len())
        .filter(|&q| vals[q].abs() <= NULL_REL * top)
        .map(|q| (0..d.nrows()).map(|i| vecs[(i, q)]).collect())
        .collect())
}

/// Shift-invert block iteration; the block doubles while every Ritz vector
/// is null.
fn iterative_null(a: &CsrMatrix) -> Result<Vec<Vec<f64>>, SolveError> {
    let n = a.nrows;
    let top = a.max_abs().max(f64::MIN_POSITIVE);
    let mut trip: Vec<(usize, usize, f64)> = a.triplets().collect();
    trip.extend((0..n).map(|i| (i, i, SHIFT * top)));
    let shifted = CsrMatrix::from_triplets(n, n, &trip);
    let mut fact = Factorization::new(&shifted)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut k = 8usize;
    loop {
        let mut block: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        orthonormalize(&mut block);
        for _ in 0..SUBSPACE_STEPS {
            for v in block.iter_mut() {
                *v = fact.solve(v).0;
            }
            orthonormalize(&mut block);
        }
        let av: Vec<Vec<f64>> = block.iter().map(|v| a.matvec(v)).collect();
        let m = block.len();
        let h = Mat::from_fn(m, m, |p, q| 0.5 * (dot(&block[p], &av[q]) + dot(&block[q], &av[p])));
        let (theta, w) = sym_eigen(&h)?;
        let mut nulls = Vec::new();
        for q in 0..m {
            let mut v = vec![0.0; n];
            let mut r = vec![0.0; n];
            for p in 0..m {
                axpy(w[(p, q)], &block[p], &mut v);
                axpy(w[(p, q)], &av[p], &mut r);
            }
            axpy(-theta[q], &v, &mut r);
            if theta[q].abs() <= NULL_REL * top && norm2(&r) <= 1e3 * NULL_REL * top {
                nulls.push(v);
            }
        }
        if nulls.len() < m || 2 * k > n {
            return Ok(nulls);
        }
        k *= 2;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Twice-iterated modified Gram–Schmidt; drops dependent vectors.
fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let n0 = norm2(&v);
        for _ in 0..2 {
            for u in &out {
                let d = dot(u, &v);
                axpy(-d, u, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-10 * n0 && nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    *vs = out;
}
