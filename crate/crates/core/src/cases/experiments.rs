//! Drivers of the benchmark problems.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{run_diagnostics, CaseConfig, CaseError, CaseId};
use crate::assembly::{build_system, DofMap, Field, Params, Preset};
use crate::mesh::{build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh, build_unit_square_mesh_with, Mesh, SquareSplit};
use crate::postproc::{
    eoc, error_between, export_fields, field_norms, pressure_mean, sample_slice, symmetry_defect, velocity_oscillation, FieldErrors, NormKind, Reference, SliceLine,
};
use crate::solver::{coercivity_witness, infsup_constant, solve, solve_min_norm, Solution, SolveError, MAX_DENSE_DIM};

pub const ANNULUS_R1: f64 = 0.5;
pub const ANNULUS_R2: f64 = 2.0;
/// Heights of the edge-flow profile lines.
pub const EDGE_SLICES: [f64; 2] = [0.5, 4.5];

/// Files written by one case and its overall status.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub case: CaseId,
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
    pub success: bool,
    pub text: String,
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CaseError> {
        std::fs::create_dir_all(dir).map_err(|e| CaseError::Io { path: dir.display().to_string(), source: e })?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CaseError> {
        let p = self.dir.join(name);
        std::fs::write(&p, contents).map_err(|e| CaseError::Io { path: p.display().to_string(), source: e })?;
        self.files.push(p.clone());
        Ok(p)
    }

    fn export(&mut self, enabled: bool, mesh: &Mesh, sol: &Solution, stem: &str) -> Result<(), CaseError> {
        if enabled {
            self.files.extend(export_fields(mesh, sol, &self.dir, stem)?);
        }
        Ok(())
    }
}

/// Result of one attempted solve.
enum Run {
    Solved(Solution),
    /// Singular or unconverged, with the min-norm solution when it was
    /// affordable.
    Singular { reason: String, condition: f64, min_norm: Option<Result<Solution, String>> },
    Skipped { dofs: usize },
}

impl Run {
    /// The solution used for post-processing: the direct one, else the
    /// min-norm one.
    fn solution(&self) -> Option<&Solution> {
        match self {
            Run::Solved(s) => Some(s),
            Run::Singular { min_norm: Some(Ok(s)), .. } => Some(s),
            _ => None,
        }
    }
}

fn attempt(mesh: &Mesh, preset: Preset, params: Params, cfg: &CaseConfig, min_norm: bool) -> Result<Run, CaseError> {
    let dofs = DofMap::for_preset(mesh, preset).total;
    if dofs > cfg.max_dofs {
        return Ok(Run::Skipped { dofs });
    }
    let system = build_system(mesh, preset, params, &cfg.wall_data())?;
    match solve(&system) {
        Ok(s) => Ok(Run::Solved(s)),
        Err(e @ (SolveError::Singular { .. } | SolveError::Residual { .. })) => {
            let condition = match &e {
                SolveError::Singular { report } => report.condition_estimate,
                _ => f64::NAN,
            };
            let mn = (min_norm && system.dim() <= MAX_DENSE_DIM).then(|| solve_min_norm(&system).map_err(|e| e.to_string()));
            Ok(Run::Singular { reason: e.to_string(), condition, min_norm: mn })
        }
        Err(e) => Err(e.into()),
    }
}

fn annulus(h: f64) -> Result<Mesh, CaseError> {
    Ok(build_annulus_mesh(ANNULUS_R1, ANNULUS_R2, h)?)
}

/// Mirror-symmetric unit square with `n = round(1/h)` rounded up to even.
fn cavity_mesh(h: f64) -> Result<Mesh, CaseError> {
    let n = ((1.0 / h).round() as usize).max(2);
    Ok(build_unit_square_mesh_with(n + n % 2, SquareSplit::Mirrored)?)
}

const SOLVE_HEADER: &str = "kn,h,preset,dofs,status,residual,condition_estimate,backend";

fn solve_row(kn: f64, h: f64, preset: Preset, run: &Run) -> String {
    match run {
        Run::Solved(s) => format!("{kn},{h},{preset},{},solved,{:.6e},{:.6e},{}", s.dofs.total, s.residual, s.report.condition_estimate, s.report.backend.name()),
        Run::Singular { condition, min_norm, .. } => {
            let res = match min_norm {
                Some(Ok(s)) => format!("{:.6e}", s.residual),
                _ => String::new(),
            };
            format!("{kn},{h},{preset},,singular,{res},{condition:.6e},")
        }
        Run::Skipped { dofs } => format!("{kn},{h},{preset},{dofs},skipped,,,"),
    }
}

fn describe(run: &Run) -> String {
    match run {
        Run::Solved(s) => format!("solved, {} dofs, residual {:.3e}, condition {:.3e} ({})", s.dofs.total, s.residual, s.report.condition_estimate, s.report.backend.name()),
        Run::Singular { reason, min_norm, .. } => {
            let mn = match min_norm {
                None => "min-norm solve not attempted".to_string(),
                Some(Ok(s)) => format!("min-norm solution residual {:.3e}", s.residual),
                Some(Err(e)) => format!("min-norm solve failed: {e}"),
            };
            format!("SINGULAR: {reason}; {mn}")
        }
        Run::Skipped { dofs } => format!("skipped: {dofs} dofs above max_dofs"),
    }
}

/// Runs the case selected by `cfg` and writes its tables and report into
/// `cfg.out`.
pub fn run_case(cfg: &CaseConfig) -> Result<CaseOutcome, CaseError> {
    cfg.validate()?;
    let mut out = Output::new(&cfg.out)?;
    let mut text = String::new();
    writeln!(text, "case: {}", cfg.case).unwrap();
    let success = match cfg.case {
        CaseId::AnnulusCouette => couette(cfg, &mut out, &mut text)?,
        CaseId::AnnulusFourierMixed => fourier_mixed(cfg, &mut out, &mut text)?,
        CaseId::CavityFourier => cavity(cfg, &mut out, &mut text)?,
        CaseId::EdgeFlow => edge_flow(cfg, &mut out, &mut text)?,
        CaseId::InfsupStudy => infsup_study(cfg, &mut out, &mut text)?,
        CaseId::ElementDiagnostics => {
            let rep = run_diagnostics(cfg)?;
            out.write("diagnostics.csv", &rep.to_csv())?;
            text.push_str(&rep.to_table());
            rep.success()
        }
    };
    writeln!(text, "\nstatus: {}", if success { "ok" } else { "FAILED" }).unwrap();
    writeln!(text, "\n# resolved config\n{}", cfg.to_config_string()).unwrap();
    let report = out.write("report.txt", &text)?;
    Ok(CaseOutcome { case: cfg.case, report, files: out.files, success, text })
}

fn couette(cfg: &CaseConfig, out: &mut Output, text: &mut String) -> Result<bool, CaseError> {
    writeln!(
        text,
        "NOTE: errors are measured against the solution on the finest mesh that was solved (self-convergence); the finest row is the reference and has no error entry."
    )
    .unwrap();
    let mut hs = cfg.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    let mut ok = true;
    let mut solves = vec![SOLVE_HEADER.to_string()];
    for &kn in &cfg.kn {
        let params = Params::new(kn, cfg.chi)?;
        for &preset in &cfg.presets {
            writeln!(text, "\nKn = {kn}, preset = {preset}").unwrap();
            let mut solved: Vec<(f64, Mesh, Solution)> = Vec::new();
            for &h in &hs {
                let mesh = annulus(h)?;
                let run = attempt(&mesh, preset, params, cfg, false)?;
                writeln!(text, "  h = {h}: {}", describe(&run)).unwrap();
                solves.push(solve_row(kn, h, preset, &run));
                match run {
                    Run::Solved(s) => {
                        out.export(cfg.export, &mesh, &s, &format!("couette_{preset}_kn{kn}_h{h}"))?;
                        solved.push((h, mesh, s));
                    }
                    Run::Singular { .. } => ok = false,
                    Run::Skipped { .. } => {}
                }
            }
            let Some((href, rmesh, rsol)) = solved.pop() else {
                writeln!(text, "  no solution available").unwrap();
                continue;
            };
            writeln!(text, "  reference: h = {href}").unwrap();
            let mut rows: Vec<(f64, FieldErrors)> = Vec::new();
            for (h, mesh, sol) in &solved {
                rows.push((*h, error_between(mesh, sol, Reference::Discrete { mesh: &rmesh, solution: &rsol })?));
            }
            if rows.len() < 2 {
                writeln!(text, "  fewer than two rows below the reference; no orders computed").unwrap();
                continue;
            }
            let table = eoc(&rows)?;
            out.write(&format!("convergence_{preset}_kn{kn}.csv"), &table.to_csv())?;
            for r in &table.rows {
                write!(text, "  h = {:<8}", r.h).unwrap();
                for f in [Field::Sigma, Field::S, Field::U, Field::Theta, Field::P] {
                    write!(text, "  |e_{}| = {:.3e}", f.name(), r.errors.l2[f.index()]).unwrap();
                    if let Some(o) = r.eoc_l2 {
                        write!(text, " ({:.2})", o[f.index()]).unwrap();
                    }
                }
                text.push('\n');
            }
        }
    }
    out.write("solves.csv", &(solves.join("\n") + "\n"))?;
    Ok(ok)
}

/// Enriched vs unenriched presets on the annulus with unequal wall
/// temperatures.
fn fourier_mixed(cfg: &CaseConfig, out: &mut Output, text: &mut String) -> Result<bool, CaseError> {
    let mut ok = true;
    let mut csv = vec![format!("{SOLVE_HEADER},velocity_oscillation")];
    for &kn in &cfg.kn {
        let params = Params::new(kn, cfg.chi)?;
        for &h in &cfg.h {
            let mesh = annulus(h)?;
            writeln!(text, "\nKn = {kn}, h = {h}").unwrap();
            let mut osc: Vec<(Preset, f64)> = Vec::new();
            for &preset in &cfg.presets {
                let run = attempt(&mesh, preset, params, cfg, true)?;
                let o = run.solution().map(|s| velocity_oscillation(&mesh, s));
                writeln!(text, "  {preset}: {}", describe(&run)).unwrap();
                if let Some(o) = o {
                    writeln!(text, "    velocity oscillation indicator {o:.6e}").unwrap();
                    osc.push((preset, o));
                }
                if let Some(s) = run.solution() {
                    out.export(cfg.export, &mesh, s, &format!("fourier_{preset}_kn{kn}_h{h}"))?;
                }
                if preset == Preset::Enriched && !matches!(run, Run::Solved(_)) {
                    ok = false;
                }
                csv.push(format!("{},{}", solve_row(kn, h, preset, &run), o.map(|v| format!("{v:.6e}")).unwrap_or_default()));
            }
            if let Some(&(_, base)) = osc.iter().find(|(p, _)| *p == Preset::Enriched) {
                for (p, o) in osc.iter().filter(|(p, _)| *p != Preset::Enriched) {
                    writeln!(text, "  oscillation ratio {p}/enriched = {:.3e}", o / base).unwrap();
                }
            }
        }
    }
    out.write("comparison.csv", &(csv.join("\n") + "\n"))?;
    Ok(ok)
}

/// Tolerances of the cavity symmetry report.
pub const SYMMETRY_TOL: f64 = 1e-8;
pub const PRESSURE_MEAN_TOL: f64 = 1e-10;

fn cavity(cfg: &CaseConfig, out: &mut Output, text: &mut String) -> Result<bool, CaseError> {
    let mut ok = true;
    let mut csv = vec![format!("{SOLVE_HEADER},theta_symmetry_defect,pressure_mean_ratio")];
    for &h in &cfg.h {
        let mesh = cavity_mesh(h)?;
        for &kn in &cfg.kn {
            let params = Params::new(kn, cfg.chi)?;
            for &preset in &cfg.presets {
                let run = attempt(&mesh, preset, params, cfg, false)?;
                writeln!(text, "\nKn = {kn}, h = {h}, {preset}: {}", describe(&run)).unwrap();
                let mut extra = ",".to_string();
                match &run {
                    Run::Solved(s) => {
                        let sym = symmetry_defect(&mesh, s, Field::Theta, 0, |x| [1.0 - x[0], x[1]])?;
                        let pn = field_norms(&mesh, s, NormKind::L2)[Field::P.index()];
                        let pm = pressure_mean(&mesh, s).abs() / if pn > 0.0 { pn } else { 1.0 };
                        let pass = sym <= SYMMETRY_TOL && pm <= PRESSURE_MEAN_TOL;
                        ok &= pass;
                        writeln!(
                            text,
                            "  |theta(x,y) - theta(1-x,y)| / |theta| = {sym:.3e} (tol {SYMMETRY_TOL:.0e})\n  |int p| / |p| = {pm:.3e} (tol {PRESSURE_MEAN_TOL:.0e})\n  {}",
                            if pass { "symmetric" } else { "NOT symmetric" }
                        )
                        .unwrap();
                        extra = format!("{sym:.6e},{pm:.6e}");
                        out.export(cfg.export, &mesh, s, &format!("cavity_{preset}_kn{kn}_h{h}"))?;
                    }
                    Run::Singular { .. } => ok = false,
                    Run::Skipped { .. } => {}
                }
                csv.push(format!("{},{extra}", solve_row(kn, h, preset, &run)));
            }
        }
    }
    out.write("cavity.csv", &(csv.join("\n") + "\n"))?;
    Ok(ok)
}

fn edge_flow(cfg: &CaseConfig, out: &mut Output, text: &mut String) -> Result<bool, CaseError> {
    let mut ok = true;
    let mut csv = vec![format!("{SOLVE_HEADER},velocity_oscillation")];
    for &h in &cfg.h {
        let mesh = build_square_with_hole_mesh(h)?;
        for &kn in &cfg.kn {
            let params = Params::new(kn, cfg.chi)?;
            writeln!(text, "\nKn = {kn}, h = {h}").unwrap();
            let mut osc: Vec<(Preset, f64)> = Vec::new();
            for &preset in &cfg.presets {
                let run = attempt(&mesh, preset, params, cfg, false)?;
                writeln!(text, "  {preset}: {}", describe(&run)).unwrap();
                let mut o = None;
                if let Some(s) = run.solution() {
                    let v = velocity_oscillation(&mesh, s);
                    writeln!(text, "    velocity oscillation indicator {v:.6e}").unwrap();
                    osc.push((preset, v));
                    o = Some(v);
                    for y in EDGE_SLICES {
                        let prof = sample_slice(&mesh, s, SliceLine::Horizontal { at: y, from: 0.0, to: 8.0 }, cfg.slice_points);
                        out.write(&format!("slice_{preset}_kn{kn}_h{h}_y{y}.csv"), &prof.to_csv())?;
                    }
                    out.export(cfg.export, &mesh, s, &format!("edge_{preset}_kn{kn}_h{h}"))?;
                }
                if preset == Preset::Enriched && !matches!(run, Run::Solved(_)) {
                    ok = false;
                }
                csv.push(format!("{},{}", solve_row(kn, h, preset, &run), o.map(|v| format!("{v:.6e}")).unwrap_or_default()));
            }
            if let Some(&(_, base)) = osc.iter().find(|(p, _)| *p == Preset::Enriched) {
                for (p, o) in osc.iter().filter(|(p, _)| *p != Preset::Enriched) {
                    writeln!(text, "  oscillation ratio enriched/{p} = {:.3e}", base / o).unwrap();
                }
            }
        }
    }
    out.write("edge_flow.csv", &(csv.join("\n") + "\n"))?;
    Ok(ok)
}

/// Inf-sup constants per pair and preset and the coercivity witness on
/// unit squares.
fn infsup_study(cfg: &CaseConfig, out: &mut Output, text: &mut String) -> Result<bool, CaseError> {
    let ns = cfg.square_resolutions();
    let mut csv = vec!["n,h,pair,preset,beta,near_null,largest,trial_dim,test_dim".to_string()];
    for &pair in &cfg.pairs {
        for &preset in &cfg.presets {
            let mut betas = Vec::new();
            for &n in &ns {
                let mesh = build_unit_square_mesh(n)?;
                match infsup_constant(&mesh, pair, preset) {
                    Ok(r) => {
                        csv.push(format!("{n},{:.6e},{pair},{preset},{:.6e},{},{:.6e},{},{}", r.h, r.beta, r.near_null, r.largest, r.trial_dim, r.test_dim));
                        writeln!(text, "{pair} {preset} n = {n}: beta = {:.6e}, near-null = {}", r.beta, r.near_null).unwrap();
                        betas.push(r.beta);
                    }
                    Err(SolveError::DimensionCap { dim, cap }) => writeln!(text, "{pair} {preset} n = {n}: skipped ({dim} > {cap})").unwrap(),
                    Err(e) => return Err(e.into()),
                }
            }
            if let (Some(lo), Some(hi)) = (betas.iter().copied().reduce(f64::min), betas.iter().copied().reduce(f64::max)) {
                writeln!(text, "{pair} {preset}: min/max = {:.4}", if hi > 0.0 { lo / hi } else { 0.0 }).unwrap();
            }
        }
    }
    out.write("infsup.csv", &(csv.join("\n") + "\n"))?;
    let mut co = vec!["n,h,kn,preset,kernel_dim,min_rayleigh,sample_min,sample_max,samples".to_string()];
    for &kn in &cfg.kn {
        let params = Params::new(kn, cfg.chi)?;
        for &n in &ns {
            let mesh = build_unit_square_mesh(n)?;
            match coercivity_witness(&mesh, Preset::Enriched, params, cfg.samples, cfg.seed) {
                Ok(r) => {
                    co.push(format!("{n},{:.6e},{kn},enriched,{},{:.6e},{:.6e},{:.6e},{}", r.h, r.kernel_dim, r.min_rayleigh, r.sample_min, r.sample_max, r.samples));
                    writeln!(text, "coercivity Kn = {kn} n = {n}: kernel {} min eig {:.6e}, samples in [{:.6e}, {:.6e}]", r.kernel_dim, r.min_rayleigh, r.sample_min, r.sample_max).unwrap();
                }
                Err(SolveError::DimensionCap { dim, cap }) => writeln!(text, "coercivity Kn = {kn} n = {n}: skipped ({dim} > {cap})").unwrap(),
                Err(e) => return Err(e.into()),
            }
        }
    }
    out.write("coercivity.csv", &(co.join("\n") + "\n"))?;
    Ok(true)
}
