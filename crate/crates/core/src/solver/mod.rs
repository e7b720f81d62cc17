//! Direct solution of the assembled saddle-point system, a minimum-norm
//! fallback for singular systems and dense stability diagnostics.

mod dense;
mod factor;
mod infsup;
mod minnorm;

use faer::Par;
use thiserror::Error;

use crate::assembly::{AssemblyError, BlockSystem, CsrMatrix, DofMap, Field, Params, Preset};

pub use dense::{null_space, sym_eigen};
pub use factor::{Backend, Factorization, LDLT_DELTA};
pub use infsup::{coercivity_witness, infsup_constant, CoercivityReport, InfSupPair, InfSupReport, NEAR_NULL_REL};
pub use minnorm::{min_norm_solve, MinNormResult};

/// Relative residual required of a regular solve.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Equilibrated 1-norm condition estimate above which a matrix is treated
/// as numerically singular.
pub const SINGULAR_CONDITION: f64 = 1e13;
/// Largest system handled by the minimum-norm and dense diagnostics.
pub const MAX_DENSE_DIM: usize = 20000;
/// Largest system for which a failed symmetric factorization is retried
/// with sparse LU.
pub const LU_FALLBACK_DIM: usize = 40000;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is numerically singular (dimension {}, condition estimate {:.3e})", .report.dim, .report.condition_estimate)]
    Singular { report: FactorizationReport },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("relative residual {residual:.3e} above tolerance {tol:.1e}")]
    Residual { residual: f64, tol: f64 },
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("Gram matrix of {0} is not positive definite")]
    GramNotSpd(&'static str),
    #[error("row-signed matrix is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("dense decomposition failed: {0}")]
    Decomposition(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Diagnostics of one factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub dim: usize,
    pub nnz: usize,
    /// Estimate of `‖K̂‖₁‖K̂⁻¹‖₁` for the equilibrated matrix `K̂`.
    pub condition_estimate: f64,
    /// A factor solve produced NaN or infinity.
    pub nonfinite: bool,
    pub refinement_steps: usize,
    /// Smallest and largest symmetric equilibration factor.
    pub scaling_range: (f64, f64),
    pub backend: Backend,
}

/// Discrete solution of the five-field system.
#[derive(Debug, Clone)]
pub struct Solution {
    pub dofs: DofMap,
    pub params: Params,
    pub preset: Option<Preset>,
    /// Monolithic coefficient vector including the multiplier.
    pub coefficients: Vec<f64>,
    /// `‖Kx − f‖ / ‖f‖`, or `‖Kx‖` when `f = 0`.
    pub residual: f64,
    pub report: FactorizationReport,
}

impl Solution {
    pub fn field(&self, f: Field) -> &[f64] {
        &self.coefficients[self.dofs.range(f)]
    }

    /// Coefficients of one component of `f`.
    pub fn component(&self, f: Field, comp: usize) -> &[f64] {
        let n = self.dofs.scalar_dims[f.index()];
        let start = self.dofs.global(f, comp, 0);
        &self.coefficients[start..start + n]
    }

    pub fn multiplier(&self) -> f64 {
        self.coefficients[self.dofs.multiplier]
    }

    /// A solution with the given coefficients and no factorization.
    pub fn from_coefficients(system: &BlockSystem, coefficients: Vec<f64>) -> Self {
        let residual = relative_residual(&system.matrix, &coefficients, &system.rhs);
        Self {
            dofs: system.dofs.clone(),
            params: system.params,
            preset: system.preset,
            coefficients,
            residual,
            report: FactorizationReport {
                dim: system.dim(),
                nnz: system.matrix.nnz(),
                condition_estimate: f64::NAN,
                nonfinite: false,
                refinement_steps: 0,
                scaling_range: (1.0, 1.0),
                backend: Backend::Lu,
            },
        }
    }
}

/// Applies `R13_THREADS` to the dense and sparse kernels; sequential when
/// unset or 1.
pub fn configure_parallelism() {
    let n = std::env::var("R13_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(1);
    if n <= 1 {
        faer::set_global_parallelism(Par::Seq);
    } else {
        faer::set_global_parallelism(Par::rayon(n));
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn relative_residual(k: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let kx = k.matvec(x);
    let r: Vec<f64> = kx.iter().zip(b).map(|(a, b)| a - b).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Symmetric equilibration factors `1/√max_j |K_ij|`, 1 on zero rows.
pub fn equilibration(k: &CsrMatrix) -> Vec<f64> {
    (0..k.nrows)
        .map(|i| {
            let m = k.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 {
                1.0 / m.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// Solves `K x = b` for a regular square matrix; returns the solution and
/// its diagnostics or a singularity error.
pub fn solve_csr(k: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64, FactorizationReport), SolveError> {
    let mut fact = Factorization::new(k)?;
    let (x, steps) = fact.solve(b);
    let report = fact.report(steps);
    if report.nonfinite || !(report.condition_estimate < SINGULAR_CONDITION) {
        return Err(SolveError::Singular { report });
    }
    let residual = relative_residual(k, &x, b);
    if !(residual <= RESIDUAL_TOL) {
        return Err(SolveError::Residual { residual, tol: RESIDUAL_TOL });
    }
    Ok((x, residual, report))
}

/// Expected pivot signs of the symmetrized system: positive for `σ`, `p`,
/// `θ`, negative for `s`, `u` and the multiplier.
pub fn pivot_signs(dofs: &DofMap) -> Vec<i8> {
    let mut signs = vec![-1i8; dofs.total];
    for f in [Field::Sigma, Field::P, Field::Theta] {
        for i in dofs.range(f) {
            signs[i] = 1;
        }
    }
    signs
}

fn symmetric_attempt(k: &CsrMatrix, b: &[f64], row_signs: &[f64], pivots: &[i8]) -> Result<(Vec<f64>, f64, FactorizationReport), SolveError> {
    let mut fact = Factorization::symmetric(k, row_signs, pivots)?;
    let (x, steps) = fact.solve(b);
    let report = fact.report(steps);
    if report.nonfinite || fact.stalled() || !(report.condition_estimate < SINGULAR_CONDITION) {
        return Err(SolveError::Singular { report });
    }
    let residual = relative_residual(k, &x, b);
    if !(residual <= RESIDUAL_TOL) {
        return Err(SolveError::Residual { residual, tol: RESIDUAL_TOL });
    }
    Ok((x, residual, report))
}

/// Solves `K x = b` for `K` with `J K` symmetric: regularized `LDLᵀ` first,
/// sparse LU when that fails and the dimension is at most
/// [`LU_FALLBACK_DIM`].
pub fn solve_symmetric(k: &CsrMatrix, b: &[f64], row_signs: &[f64], pivots: &[i8]) -> Result<(Vec<f64>, f64, FactorizationReport), SolveError> {
    match symmetric_attempt(k, b, row_signs, pivots) {
        Ok(r) => Ok(r),
        Err(SolveError::Shape(m)) => Err(SolveError::Shape(m)),
        Err(e) if k.nrows > LU_FALLBACK_DIM => Err(e),
        Err(_) => solve_csr(k, b),
    }
}

/// Direct sparse solve of an assembled system.
pub fn solve(system: &BlockSystem) -> Result<Solution, SolveError> {
    let (coefficients, residual, report) = solve_symmetric(&system.matrix, &system.rhs, &system.symmetrizer(), &pivot_signs(&system.dofs))?;
    Ok(Solution {
        dofs: system.dofs.clone(),
        params: system.params,
        preset: system.preset,
        coefficients,
        residual,
        report,
    })
}

/// Minimum-norm least-squares solution; works for singular systems.
pub fn solve_min_norm(system: &BlockSystem) -> Result<Solution, SolveError> {
    let res = min_norm_solve(&system.matrix, &system.rhs, Some(&system.symmetrizer()))?;
    let mut sol = Solution::from_coefficients(system, res.x);
    sol.residual = res.consistent_residual;
    sol.report.condition_estimate = f64::INFINITY.min(res.condition_estimate);
    Ok(sol)
}

#[cfg(test)]
mod tests;
