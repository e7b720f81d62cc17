//! Dense discrete inf-sup constants and the kernel coercivity witness.

use std::fmt;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::{cholesky_lower, generalized_sym_eigen, lower_solve, null_space};
use super::{SolveError, MAX_DENSE_DIM};
use crate::assembly::{assemble_terms, form_matrix, gram_matrix, CsrMatrix, DofMap, Field, Form, Params, Preset, SYSTEM_TERMS, TENSOR_WEIGHTS};
use crate::mesh::Mesh;

/// Singular values below this fraction of the largest are near-null.
pub const NEAR_NULL_REL: f64 = 1e-10;

/// Trial/test field pairs of the coupling forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfSupPair {
    /// `(∇·σ, u)` with `‖σ‖₁` and `‖u‖₀`.
    SigmaU,
    /// `(θ, ∇·s)` with `‖s‖₁` and `‖θ‖₀`.
    STheta,
    /// `(u, ∇p)` with `‖u‖₁` and `‖p‖₀`.
    UP,
}

impl InfSupPair {
    pub const ALL: [InfSupPair; 3] = [InfSupPair::SigmaU, InfSupPair::STheta, InfSupPair::UP];

    pub fn name(self) -> &'static str {
        match self {
            InfSupPair::SigmaU => "sigma_u",
            InfSupPair::STheta => "s_theta",
            InfSupPair::UP => "u_p",
        }
    }

    /// Null modes present on every mesh: constant pressures for `u_p`,
    /// fixed by the zero-mean constraint.
    pub fn inherent_null(self) -> usize {
        usize::from(self == InfSupPair::UP)
    }

    /// `(trial, test, form)`.
    fn fields(self) -> (Field, Field, Form) {
        match self {
            InfSupPair::SigmaU => (Field::Sigma, Field::U, Form::E),
            InfSupPair::STheta => (Field::S, Field::Theta, Form::B),
            InfSupPair::UP => (Field::U, Field::P, Form::G),
        }
    }
}

impl fmt::Display for InfSupPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InfSupPair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown pair '{s}' (sigma_u, s_theta, u_p)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupReport {
    pub pair: InfSupPair,
    pub preset: Preset,
    pub h: f64,
    /// Smallest singular value above the near-null threshold.
    pub beta: f64,
    pub near_null: usize,
    pub largest: f64,
    pub trial_dim: usize,
    pub test_dim: usize,
}

fn component_weights(f: Field) -> &'static [f64] {
    match f {
        Field::Sigma => &TENSOR_WEIGHTS,
        Field::S | Field::U => &[1.0, 1.0],
        Field::P | Field::Theta => &[1.0],
    }
}

/// Dense Gram matrix of a field: `‖·‖₁` when `h1`, else `‖·‖₀`.
fn field_gram(mesh: &Mesh, dofs: &DofMap, f: Field, h1: bool) -> Result<Mat<f64>, SolveError> {
    let g = gram_matrix(mesh, dofs.spaces.get(f), component_weights(f), 1.0, if h1 { 1.0 } else { 0.0 })?;
    Ok(g.to_dense())
}

fn range_vec(dofs: &DofMap, f: Field) -> Vec<usize> {
    dofs.range(f).collect()
}

/// Smallest nonzero singular value of `M_W^{-1/2} B M_T^{-1/2}`.
pub fn infsup_constant(mesh: &Mesh, pair: InfSupPair, preset: Preset) -> Result<InfSupReport, SolveError> {
    let dofs = DofMap::for_preset(mesh, preset);
    let (trial, test, form) = pair.fields();
    let (nt, nw) = (dofs.field_len(trial), dofs.field_len(test));
    if nt + nw > MAX_DENSE_DIM {
        return Err(SolveError::DimensionCap { dim: nt + nw, cap: MAX_DENSE_DIM });
    }
    // M_form has rows on the trial field and columns on the test field
    let m = form_matrix(mesh, &dofs, Params::new(1.0, 1.0)?, form)?;
    let bt = m.submatrix(&range_vec(&dofs, trial), &range_vec(&dofs, test)).to_dense();
    let lt = cholesky_lower(&field_gram(mesh, &dofs, trial, true)?, "trial field")?;
    let lw = cholesky_lower(&field_gram(mesh, &dofs, test, false)?, "test field")?;
    // C = L_W⁻¹ B L_T⁻ᵀ with B = btᵀ
    let x = lower_solve(&lt, &bt);
    let c = lower_solve(&lw, &x.transpose().to_owned());
    let sv = c.singular_values().map_err(|e| SolveError::Decomposition(format!("{e:?}")))?;
    let largest = sv.first().copied().unwrap_or(0.0);
    let mut near_null = sv.iter().filter(|s| **s <= NEAR_NULL_REL * largest).count() + nw.saturating_sub(nt);
    let beta = sv.iter().copied().filter(|s| *s > NEAR_NULL_REL * largest).fold(f64::INFINITY, f64::min);
    if !beta.is_finite() {
        near_null = nw;
    }
    Ok(InfSupReport { pair, preset, h: mesh.h_max, beta: if beta.is_finite() { beta } else { 0.0 }, near_null, largest, trial_dim: nt, test_dim: nw })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub h: f64,
    pub kernel_dim: usize,
    /// Smallest generalized eigenvalue of `ZᵀAZ` against `ZᵀM_TZ`.
    pub min_rayleigh: f64,
    /// Extremes of the sampled quotients `SᵀAS / ‖S‖_T²`.
    pub sample_min: f64,
    pub sample_max: f64,
    pub samples: usize,
}

/// Extracts the kernel of the `(u, θ, mean)` rows acting on `(σ, s, p)` and
/// measures `Sᵀ A S / ‖S‖_T²` on it.
pub fn coercivity_witness(mesh: &Mesh, preset: Preset, params: Params, samples: usize, seed: u64) -> Result<CoercivityReport, SolveError> {
    let dofs = DofMap::for_preset(mesh, preset);
    let t: Vec<usize> = [Field::Sigma, Field::S, Field::P].iter().flat_map(|f| dofs.range(*f)).collect();
    let w: Vec<usize> = [Field::U, Field::Theta].iter().flat_map(|f| dofs.range(*f)).chain([dofs.multiplier]).collect();
    if t.len() + w.len() > MAX_DENSE_DIM {
        return Err(SolveError::DimensionCap { dim: t.len() + w.len(), cap: MAX_DENSE_DIM });
    }
    let k: CsrMatrix = assemble_terms(mesh, &dofs, params, &SYSTEM_TERMS)?;
    let b = k.submatrix(&w, &t).to_dense();
    let akk = k.submatrix(&t, &t).to_dense();
    let a = Mat::from_fn(t.len(), t.len(), |i, j| 0.5 * (akk[(i, j)] + akk[(j, i)]));
    let mut mt = Mat::<f64>::zeros(t.len(), t.len());
    let mut off = 0;
    for f in [Field::Sigma, Field::S, Field::P] {
        let g = field_gram(mesh, &dofs, f, true)?;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                mt[(off + i, off + j)] = g[(i, j)];
            }
        }
        off += g.nrows();
    }
    let z = null_space(&b, 1e-12)?;
    let kd = z.ncols();
    let za = z.transpose() * &a * &z;
    let zm = z.transpose() * &mt * &z;
    let (vals, _) = generalized_sym_eigen(&za, &zm, "kernel T-norm")?;
    let min_rayleigh = vals.first().copied().unwrap_or(f64::NAN);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let cvec = Mat::<f64>::from_fn(kd, 1, |_, _| StandardNormal.sample(&mut rng));
        let num = (cvec.transpose() * &za * &cvec)[(0, 0)];
        let den = (cvec.transpose() * &zm * &cvec)[(0, 0)];
        let q = num / den;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(CoercivityReport { h: mesh.h_max, kernel_dim: kd, min_rayleigh, sample_min: lo, sample_max: hi, samples })
}
