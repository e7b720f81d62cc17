//! Dense helpers on top of faer.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};

use super::SolveError;

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>), SolveError> {
    let e = a.self_adjoint_eigen(Side::Lower).map_err(|e| SolveError::Decomposition(format!("{e:?}")))?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

/// Orthonormal basis of the null space of `a`: right singular vectors whose
/// singular value is at most `rel_tol` times the largest.
pub fn null_space(a: &Mat<f64>, rel_tol: f64) -> Result<Mat<f64>, SolveError> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = a.svd().map_err(|e| SolveError::Decomposition(format!("{e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|v| **v > rel_tol * smax).count();
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(m: &Mat<f64>, what: &'static str) -> Result<Mat<f64>, SolveError> {
    let llt = m.llt(Side::Lower).map_err(|_| SolveError::GramNotSpd(what))?;
    Ok(llt.L().to_owned())
}

/// `L⁻¹ X` for lower triangular `L`.
pub fn lower_solve(l: &Mat<f64>, x: &Mat<f64>) -> Mat<f64> {
    let mut y = x.clone();
    solve_lower_triangular_in_place(l.as_ref(), y.as_mut(), Par::Seq);
    y
}

/// Eigenvalues (ascending) of the pencil `A w = λ M w` with `M` SPD, and
/// the `M`-orthonormal eigenvectors.
pub fn generalized_sym_eigen(a: &Mat<f64>, m: &Mat<f64>, what: &'static str) -> Result<(Vec<f64>, Mat<f64>), SolveError> {
    let l = cholesky_lower(m, what)?;
    let x = lower_solve(&l, a);
    let c = lower_solve(&l, &x.transpose().to_owned());
    let c = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let (vals, w) = sym_eigen(&c)?;
    let mut v = w;
    solve_upper_triangular_in_place(l.transpose(), v.as_mut(), Par::Seq);
    Ok((vals, v))
}
