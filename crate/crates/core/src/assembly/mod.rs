//! Global five-field saddle-point system.
//!
//! Unknowns are ordered `(σ, s, p, u, θ)` followed by one multiplier for the
//! zero-mean pressure constraint. Each bilinear form `f(x, y)` is assembled
//! into a matrix `M_f` with `M_f[y, x] = f(φ_x, φ_y)` (rows index the second
//! argument). The system matrix is then
//!
//! ```text
//! K = M_a + M_d + M_c − M_cᵀ − M_b − M_bᵀ − M_e − M_eᵀ − M_g − M_gᵀ + mean
//! ```
//!
//! and flipping the sign of the `s` and `θ` rows makes it symmetric.

pub mod csr;
mod forms;
mod gram;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::elements::{ElementError, ScalarSpace};
use crate::mesh::Mesh;

pub use csr::CsrMatrix;
pub use forms::{stf_gradient_metric, Form, StfMetric};
pub use gram::{eval_scalar, gram_matrix, TENSOR_WEIGHTS};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("boundary edge {edge} has no label")]
    UnlabeledEdge { edge: usize },
    #[error("no wall data for boundary label {0}")]
    MissingWallData(u32),
    #[error("invalid physical parameters: {0}")]
    Parameters(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The five unknown fields in system order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Sigma,
    S,
    P,
    U,
    Theta,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::Sigma, Field::S, Field::P, Field::U, Field::Theta];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of scalar components.
    pub fn components(self) -> usize {
        match self {
            Field::Sigma => 3,
            Field::S | Field::U => 2,
            Field::P | Field::Theta => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Sigma => "sigma",
            Field::S => "s",
            Field::P => "p",
            Field::U => "u",
            Field::Theta => "theta",
        }
    }
}

/// Element family for the five fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// `ℙ₂ᵇ-ℙ₂-ℙ₁-ℙ₂-ℙ₁` for `(Σ, U, P, S, Θ)`.
    Enriched,
    /// `ℙ₂-ℙ₂-ℙ₁-ℙ₂-ℙ₁`.
    EqualOrder,
    /// `ℙ₂-ℙ₁-ℙ₁-ℙ₂-ℙ₁`.
    TaylorHood,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Enriched, Preset::EqualOrder, Preset::TaylorHood];

    pub fn spaces(self) -> FieldSpaces {
        let sigma = if self == Preset::Enriched { ScalarSpace::P2Bubble } else { ScalarSpace::P2 };
        let u = if self == Preset::TaylorHood { ScalarSpace::P1 } else { ScalarSpace::P2 };
        FieldSpaces { spaces: [sigma, ScalarSpace::P2, ScalarSpace::P1, u, ScalarSpace::P1] }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Enriched => "enriched",
            Preset::EqualOrder => "equal_order",
            Preset::TaylorHood => "taylor_hood",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "enriched" => Ok(Preset::Enriched),
            "equal_order" => Ok(Preset::EqualOrder),
            "taylor_hood" => Ok(Preset::TaylorHood),
            other => Err(format!("unknown preset `{other}` (expected enriched, equal_order or taylor_hood)")),
        }
    }
}

/// Scalar space per field, indexed by [`Field::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpaces {
    pub spaces: [ScalarSpace; 5],
}

impl FieldSpaces {
    pub fn get(&self, f: Field) -> ScalarSpace {
        self.spaces[f.index()]
    }
}

/// Number of global scalar DoFs of `space` on `mesh`.
pub fn scalar_dim(space: ScalarSpace, mesh: &Mesh) -> usize {
    match space {
        ScalarSpace::P1 => mesh.num_vertices(),
        ScalarSpace::P2 => mesh.num_vertices() + mesh.num_edges(),
        ScalarSpace::P2Bubble => mesh.num_vertices() + mesh.num_edges() + 3 * mesh.num_triangles(),
    }
}

/// Global scalar DoFs of triangle `t`, in local basis order.
pub fn element_scalar_dofs(space: ScalarSpace, mesh: &Mesh, t: usize, out: &mut [usize]) -> usize {
    let tri = mesh.triangles[t];
    let te = mesh.tri_edges[t];
    let nv = mesh.num_vertices();
    out[..3].copy_from_slice(&tri);
    if matches!(space, ScalarSpace::P2 | ScalarSpace::P2Bubble) {
        for k in 0..3 {
            out[3 + k] = nv + te[k];
        }
    }
    if space == ScalarSpace::P2Bubble {
        let base = nv + mesh.num_edges() + 3 * t;
        for m in 0..3 {
            out[6 + m] = base + m;
        }
    }
    space.local_dim()
}

/// Global numbering of the monolithic unknown vector. Within a field the
/// numbering is component-blocked: `offset + comp * scalar_dim + scalar`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub spaces: FieldSpaces,
    pub scalar_dims: [usize; 5],
    pub offsets: [usize; 5],
    /// Index of the zero-mean multiplier; equals the sum of field sizes.
    pub multiplier: usize,
    pub total: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, spaces: FieldSpaces) -> Self {
        let mut scalar_dims = [0; 5];
        let mut offsets = [0; 5];
        let mut next = 0;
        for f in Field::ALL {
            scalar_dims[f.index()] = scalar_dim(spaces.get(f), mesh);
            offsets[f.index()] = next;
            next += f.components() * scalar_dims[f.index()];
        }
        Self { spaces, scalar_dims, offsets, multiplier: next, total: next + 1 }
    }

    pub fn for_preset(mesh: &Mesh, preset: Preset) -> Self {
        Self::new(mesh, preset.spaces())
    }

    pub fn field_len(&self, f: Field) -> usize {
        f.components() * self.scalar_dims[f.index()]
    }

    pub fn range(&self, f: Field) -> std::ops::Range<usize> {
        self.offsets[f.index()]..self.offsets[f.index()] + self.field_len(f)
    }

    #[inline]
    pub fn global(&self, f: Field, comp: usize, scalar: usize) -> usize {
        self.offsets[f.index()] + comp * self.scalar_dims[f.index()] + scalar
    }

    /// Which field owns global index `i`; `None` for the multiplier.
    pub fn field_of(&self, i: usize) -> Option<Field> {
        Field::ALL.into_iter().find(|f| self.range(*f).contains(&i))
    }
}

/// Prescribed boundary data, constant or position dependent.
#[derive(Clone)]
pub enum WallValue {
    Constant(f64),
    Field(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl WallValue {
    pub fn at(&self, x: [f64; 2]) -> f64 {
        match self {
            WallValue::Constant(c) => *c,
            WallValue::Field(f) => f(x),
        }
    }
}

impl fmt::Debug for WallValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WallValue::Constant(c) => write!(f, "{c}"),
            WallValue::Field(_) => f.write_str("<field>"),
        }
    }
}

impl From<f64> for WallValue {
    fn from(c: f64) -> Self {
        WallValue::Constant(c)
    }
}

/// Wall tangential velocity and temperature for one boundary label.
#[derive(Debug, Clone)]
pub struct Wall {
    pub u_t: WallValue,
    pub theta: WallValue,
}

#[derive(Debug, Clone, Default)]
pub struct WallData {
    pub walls: HashMap<u32, Wall>,
}

impl WallData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: u32, u_t: impl Into<WallValue>, theta: impl Into<WallValue>) -> Self {
        self.walls.insert(label, Wall { u_t: u_t.into(), theta: theta.into() });
        self
    }

    /// Same data for every label in `labels`.
    pub fn uniform(labels: &[u32], u_t: f64, theta: f64) -> Self {
        labels.iter().fold(Self::new(), |w, l| w.with(*l, u_t, theta))
    }
}

/// Knudsen number and accommodation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub kn: f64,
    pub chi: f64,
}

impl Params {
    pub fn new(kn: f64, chi: f64) -> Result<Self, AssemblyError> {
        if !(kn > 0.0 && kn.is_finite()) {
            return Err(AssemblyError::Parameters(format!("Kn must be positive, got {kn}")));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(AssemblyError::Parameters(format!("accommodation factor must be positive, got {chi}")));
        }
        Ok(Self { kn, chi })
    }
}

/// One contribution to an assembled matrix: `direct · M_f + transpose · M_fᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub form: Form,
    pub direct: f64,
    pub transpose: f64,
}

impl Term {
    pub const fn new(form: Form, direct: f64, transpose: f64) -> Self {
        Self { form, direct, transpose }
    }
}

/// Terms of the Galerkin saddle-point matrix.
pub const SYSTEM_TERMS: [Term; 10] = [
    Term::new(Form::AVolume, 1.0, 0.0),
    Term::new(Form::ABoundary, 1.0, 0.0),
    Term::new(Form::CVolume, 1.0, -1.0),
    Term::new(Form::CBoundary, 1.0, -1.0),
    Term::new(Form::DVolume, 1.0, 0.0),
    Term::new(Form::DBoundary, 1.0, 0.0),
    Term::new(Form::B, -1.0, -1.0),
    Term::new(Form::E, -1.0, -1.0),
    Term::new(Form::G, -1.0, -1.0),
    Term::new(Form::Mean, 1.0, 1.0),
];

/// Assembled monolithic system `K x = f`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    pub params: Params,
    pub preset: Option<Preset>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.dofs.total
    }

    /// Row signs `J` making `J K` symmetric: −1 on the `s` and `θ` rows.
    pub fn symmetrizer(&self) -> Vec<f64> {
        let mut j = vec![1.0; self.dofs.total];
        for f in [Field::S, Field::Theta] {
            for i in self.dofs.range(f) {
                j[i] = -1.0;
            }
        }
        j
    }

    /// Indices of the `(σ, s, p)` and `(u, θ)` groups.
    pub fn groups(&self) -> (Vec<usize>, Vec<usize>) {
        let t: Vec<usize> = [Field::Sigma, Field::S, Field::P].iter().flat_map(|f| self.dofs.range(*f)).collect();
        let w: Vec<usize> = [Field::U, Field::Theta].iter().flat_map(|f| self.dofs.range(*f)).collect();
        (t, w)
    }

    /// Coordinate-format dump `row col value` plus a `.meta` sidecar with
    /// the field offsets.
    pub fn write_matrix(&self, path: &Path) -> Result<(), AssemblyError> {
        use std::fmt::Write as _;
        let io = |p: &Path, source| AssemblyError::Io { path: p.display().to_string(), source };
        let mut s = String::with_capacity(self.matrix.nnz() * 32);
        writeln!(s, "{} {} {}", self.matrix.nrows, self.matrix.ncols, self.matrix.nnz()).unwrap();
        for (i, j, v) in self.matrix.triplets() {
            writeln!(s, "{i} {j} {v:.17e}").unwrap();
        }
        std::fs::write(path, s).map_err(|e| io(path, e))?;
        let mut meta = String::new();
        for f in Field::ALL {
            let r = self.dofs.range(f);
            writeln!(meta, "{} {} {} {}", f.name(), self.dofs.spaces.get(f).name(), r.start, r.end).unwrap();
        }
        writeln!(meta, "multiplier {}", self.dofs.multiplier).unwrap();
        writeln!(meta, "kn {}", self.params.kn).unwrap();
        writeln!(meta, "chi {}", self.params.chi).unwrap();
        let mp = path.with_extension("meta");
        std::fs::write(&mp, meta).map_err(|e| io(&mp, e))
    }
}

/// Assembles `Σ direct·M_f + transpose·M_fᵀ` over the given terms.
pub fn assemble_terms(mesh: &Mesh, dofs: &DofMap, params: Params, terms: &[Term]) -> Result<CsrMatrix, AssemblyError> {
    forms::assemble(mesh, dofs, params, terms)
}

/// Single-form matrix `M_f` with `yᵀ M_f x = f(x, y)`.
pub fn form_matrix(mesh: &Mesh, dofs: &DofMap, params: Params, form: Form) -> Result<CsrMatrix, AssemblyError> {
    assemble_terms(mesh, dofs, params, &[Term::new(form, 1.0, 0.0)])
}

/// Volume parts of all forms, keyed by form.
pub fn assemble_volume_forms(mesh: &Mesh, dofs: &DofMap, params: Params) -> Result<Vec<(Form, CsrMatrix)>, AssemblyError> {
    [Form::AVolume, Form::CVolume, Form::DVolume, Form::B, Form::E, Form::G]
        .into_iter()
        .map(|f| form_matrix(mesh, dofs, params, f).map(|m| (f, m)))
        .collect()
}

/// Boundary parts of the a, c and d forms.
pub fn assemble_boundary_forms(mesh: &Mesh, dofs: &DofMap, params: Params) -> Result<Vec<(Form, CsrMatrix)>, AssemblyError> {
    [Form::ABoundary, Form::CBoundary, Form::DBoundary]
        .into_iter()
        .map(|f| form_matrix(mesh, dofs, params, f).map(|m| (f, m)))
        .collect()
}

/// Load vector `l₁(r) + l₂(τ)` from the wall data.
pub fn assemble_rhs(mesh: &Mesh, dofs: &DofMap, wall: &WallData) -> Result<Vec<f64>, AssemblyError> {
    forms::rhs(mesh, dofs, wall)
}

pub fn build_system(mesh: &Mesh, preset: Preset, params: Params, wall: &WallData) -> Result<BlockSystem, AssemblyError> {
    let mut sys = build_system_with(mesh, DofMap::for_preset(mesh, preset), params, wall)?;
    sys.preset = Some(preset);
    Ok(sys)
}

/// As [`build_system`] for an arbitrary space selection.
pub fn build_system_with(mesh: &Mesh, dofs: DofMap, params: Params, wall: &WallData) -> Result<BlockSystem, AssemblyError> {
    check_labels(mesh, wall)?;
    let matrix = assemble_terms(mesh, &dofs, params, &SYSTEM_TERMS)?;
    let rhs = assemble_rhs(mesh, &dofs, wall)?;
    Ok(BlockSystem { matrix, rhs, dofs, params, preset: None })
}

fn check_labels(mesh: &Mesh, wall: &WallData) -> Result<(), AssemblyError> {
    for b in &mesh.boundary {
        let l = b.label.ok_or(AssemblyError::UnlabeledEdge { edge: b.edge })?;
        if !wall.walls.contains_key(&l) {
            return Err(AssemblyError::MissingWallData(l));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
