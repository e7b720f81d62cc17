//! Experiment drivers, configuration files and the diagnostic suites.
//!
//! A config is plain `key = value` text with `#` comments and
//! comma-separated lists. Keys that are not given take the defaults of the
//! selected case.

pub mod diagnostics;
mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{AssemblyError, Preset, WallData};
use crate::interp::InterpError;
use crate::mesh::{MeshError, GAMMA1, GAMMA2, INNER, OUTER};
use crate::postproc::PostError;
use crate::solver::{InfSupPair, SolveError};
use crate::tensorops::TensorError;

pub use diagnostics::{run_diagnostics, DiagnosticRow, DiagnosticsReport, Status};
pub use experiments::{run_case, CaseOutcome};

pub const DEFAULT_SEED: u64 = 20240601;
/// Default safety cap on the system dimension of a single solve.
pub const DEFAULT_MAX_DOFS: usize = 300_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing `case` key")]
    MissingCase,
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("invalid value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    AnnulusCouette,
    AnnulusFourierMixed,
    CavityFourier,
    EdgeFlow,
    InfsupStudy,
    ElementDiagnostics,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::AnnulusCouette,
        CaseId::AnnulusFourierMixed,
        CaseId::CavityFourier,
        CaseId::EdgeFlow,
        CaseId::InfsupStudy,
        CaseId::ElementDiagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::AnnulusCouette => "annulus_couette",
            CaseId::AnnulusFourierMixed => "annulus_fourier_mixed",
            CaseId::CavityFourier => "cavity_fourier",
            CaseId::EdgeFlow => "edge_flow",
            CaseId::InfsupStudy => "infsup_study",
            CaseId::ElementDiagnostics => "element_diagnostics",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| ConfigError::UnknownCase(s.to_string()))
    }
}

/// Constant wall values on one boundary label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSpec {
    pub label: u32,
    pub u_t: f64,
    pub theta: f64,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: CaseId,
    pub kn: Vec<f64>,
    /// Mesh sizes; unit-square cases use `n = round(1/h)`.
    pub h: Vec<f64>,
    pub chi: f64,
    pub presets: Vec<Preset>,
    pub walls: Vec<WallSpec>,
    pub out: PathBuf,
    pub seed: u64,
    pub max_dofs: usize,
    /// Inf-sup pairs for `infsup_study` and `element_diagnostics`.
    pub pairs: Vec<InfSupPair>,
    /// Random kernel samples of the coercivity witness.
    pub samples: usize,
    /// Write VTK and node CSV files of every solution.
    pub export: bool,
    /// Points per slice line (`edge_flow`).
    pub slice_points: usize,
}

const KEYS: [&str; 13] = ["case", "kn", "h", "chi", "preset", "wall", "out", "seed", "max_dofs", "pairs", "samples", "export", "slice_points"];

impl CaseConfig {
    /// Defaults of `case`.
    pub fn defaults(case: CaseId) -> Self {
        let wall = |l: u32, u_t: f64, theta: f64| WallSpec { label: l, u_t, theta };
        let (kn, h, presets, walls) = match case {
            CaseId::AnnulusCouette => (
                vec![0.05, 0.1, 0.2, 0.4],
                vec![0.2, 0.1, 0.05, 0.025, 0.0125],
                vec![Preset::Enriched],
                vec![wall(INNER, 1.0, 1.0), wall(OUTER, 1.0, 1.0)],
            ),
            CaseId::AnnulusFourierMixed => {
                (vec![0.1], vec![0.1], vec![Preset::Enriched, Preset::EqualOrder], vec![wall(INNER, 1.0, 1.0), wall(OUTER, 1.0, 2.0)])
            }
            CaseId::CavityFourier => (vec![0.01, 0.05, 0.2], vec![0.02], vec![Preset::Enriched], vec![wall(GAMMA1, 0.0, 1.0), wall(GAMMA2, 0.0, 0.0)]),
            CaseId::EdgeFlow => (vec![0.001], vec![0.2], vec![Preset::Enriched, Preset::TaylorHood], vec![wall(INNER, 0.0, 0.0), wall(OUTER, 0.0, 1.0)]),
            CaseId::InfsupStudy => (vec![1.0], vec![0.5, 0.25, 0.125], vec![Preset::Enriched, Preset::EqualOrder], vec![]),
            CaseId::ElementDiagnostics => (vec![1.0], vec![0.5, 0.25, 0.125], vec![Preset::Enriched], vec![]),
        };
        Self {
            case,
            kn,
            h,
            chi: 1.0,
            presets,
            walls,
            out: PathBuf::from("out").join(case.name()),
            seed: DEFAULT_SEED,
            max_dofs: DEFAULT_MAX_DOFS,
            pairs: InfSupPair::ALL.to_vec(),
            samples: 50,
            export: false,
            slice_points: 161,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut walls: Vec<(usize, u32, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax { line, msg: "expected `key = value`".into() })?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(label) = k.strip_prefix("wall.") {
                let label: u32 = label.parse().map_err(|_| ConfigError::Syntax { line, msg: format!("bad wall label `{label}`") })?;
                if walls.iter().any(|w| w.1 == label) {
                    return Err(ConfigError::DuplicateKey { line, key: k.to_string() });
                }
                walls.push((line, label, v.to_string()));
                continue;
            }
            if !KEYS.contains(&k) || k == "wall" {
                return Err(ConfigError::UnknownKey { line, key: k.to_string() });
            }
            if entries.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: k.to_string() });
            }
        }
        let case: CaseId = entries.get("case").ok_or(ConfigError::MissingCase)?.1.parse()?;
        let mut c = Self::defaults(case);
        for (k, (_, v)) in &entries {
            match k.as_str() {
                "case" => {}
                "kn" => c.kn = list(k, v)?,
                "h" => c.h = list(k, v)?,
                "chi" => c.chi = scalar(k, v)?,
                "preset" => c.presets = list(k, v)?,
                "out" => c.out = PathBuf::from(v),
                "seed" => c.seed = scalar(k, v)?,
                "max_dofs" => c.max_dofs = scalar(k, v)?,
                "pairs" => c.pairs = list(k, v)?,
                "samples" => c.samples = scalar(k, v)?,
                "export" => c.export = scalar(k, v)?,
                "slice_points" => c.slice_points = scalar(k, v)?,
                _ => unreachable!("key list checked above"),
            }
        }
        if !walls.is_empty() {
            c.walls = walls
                .iter()
                .map(|(_, label, v)| {
                    let key = format!("wall.{label}");
                    let vals: Vec<f64> = list(&key, v)?;
                    match vals[..] {
                        [u_t, theta] => Ok(WallSpec { label: *label, u_t, theta }),
                        _ => Err(ConfigError::Value { key, msg: "expected `u_t, theta`".into() }),
                    }
                })
                .collect::<Result<_, _>>()?;
            c.walls.sort_by_key(|w| w.label);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| Err(ConfigError::Value { key: key.into(), msg: msg.into() });
        if self.kn.is_empty() {
            return bad("kn", "list is empty");
        }
        if self.h.is_empty() {
            return bad("h", "list is empty");
        }
        if self.presets.is_empty() {
            return bad("preset", "list is empty");
        }
        if self.kn.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return bad("kn", "values must be positive");
        }
        if self.h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("h", "values must be positive");
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return bad("chi", "must be positive");
        }
        if self.max_dofs == 0 {
            return bad("max_dofs", "must be positive");
        }
        if self.slice_points < 2 {
            return bad("slice_points", "need at least 2");
        }
        if matches!(self.case, CaseId::InfsupStudy | CaseId::ElementDiagnostics) && self.pairs.is_empty() {
            return bad("pairs", "list is empty");
        }
        if self.walls.iter().any(|w| !(w.u_t.is_finite() && w.theta.is_finite())) {
            return bad("wall", "values must be finite");
        }
        Ok(())
    }

    pub fn wall_data(&self) -> WallData {
        self.walls.iter().fold(WallData::new(), |w, s| w.with(s.label, s.u_t, s.theta))
    }

    /// Unit-square resolutions `round(1/h)` for the `h` list.
    pub fn square_resolutions(&self) -> Vec<usize> {
        self.h.iter().map(|h| ((1.0 / h).round() as usize).max(1)).collect()
    }

    /// Parseable text of the resolved config.
    pub fn to_config_string(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("case", self.case.to_string());
        put("kn", join(self.kn.iter().map(|v| v.to_string()).collect()));
        put("h", join(self.h.iter().map(|v| v.to_string()).collect()));
        put("chi", self.chi.to_string());
        put("preset", join(self.presets.iter().map(|p| p.to_string()).collect()));
        for w in &self.walls {
            put(&format!("wall.{}", w.label), format!("{}, {}", w.u_t, w.theta));
        }
        put("out", self.out.display().to_string());
        put("seed", self.seed.to_string());
        put("max_dofs", self.max_dofs.to_string());
        put("pairs", join(self.pairs.iter().map(|p| p.name().to_string()).collect()));
        put("samples", self.samples.to_string());
        put("export", self.export.to_string());
        put("slice_points", self.slice_points.to_string());
        s
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| ConfigError::Value { key: key.to_string(), msg: format!("`{v}`: {e}") })
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::Value { key: key.to_string(), msg: format!("empty item in `{v}`") });
    }
    items.into_iter().map(|s| scalar(key, s)).collect()
}
