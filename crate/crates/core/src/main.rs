use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use r13fem::assembly::Preset;
use r13fem::cases::{run_case, run_diagnostics, CaseConfig, CaseId};
use r13fem::mesh::{build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh_with, validate_mesh, write_mesh, Mesh, SquareSplit};
use r13fem::solver::{configure_parallelism, infsup_constant, InfSupPair};

/// Mixed finite element solver for the linearized R13 equations.
#[derive(Parser)]
#[command(name = "r13", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Config file (alternative to the positional argument).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Element preset: enriched, equal_order or taylor_hood.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest system dimension that is solved.
    #[arg(long = "max-dofs", global = true)]
    max_dofs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the case described by a config file.
    Run { config: Option<PathBuf> },
    /// Run the diagnostic suites (defaults when no config is given).
    Diagnose { config: Option<PathBuf> },
    /// Generate a mesh and write it to a file.
    Mesh {
        #[command(subcommand)]
        geometry: Geometry,
        #[arg(short, long, default_value = "mesh.txt")]
        output: PathBuf,
    },
    /// Discrete inf-sup constant of one pair on one mesh.
    Infsup {
        pair: InfSupPair,
        preset: Preset,
        #[command(subcommand)]
        geometry: Geometry,
    },
}

#[derive(Subcommand, Clone)]
enum Geometry {
    /// Unit square with n × n cells.
    Square {
        #[arg(long)]
        n: usize,
        /// Mirror the diagonals in the right half (needs even n).
        #[arg(long)]
        mirrored: bool,
    },
    /// Annulus between radii r1 and r2.
    Annulus {
        #[arg(long, default_value_t = 0.5)]
        r1: f64,
        #[arg(long, default_value_t = 2.0)]
        r2: f64,
        #[arg(long)]
        h: f64,
    },
    /// Square (0,8)² with the obstacle [1,3]² removed.
    Hole {
        #[arg(long)]
        h: f64,
    },
}

impl Geometry {
    fn build(&self) -> Result<Mesh, r13fem::mesh::MeshError> {
        match *self {
            Geometry::Square { n, mirrored } => build_unit_square_mesh_with(n, if mirrored { SquareSplit::Mirrored } else { SquareSplit::Diagonal }),
            Geometry::Annulus { r1, r2, h } => build_annulus_mesh(r1, r2, h),
            Geometry::Hole { h } => build_square_with_hole_mesh(h),
        }
    }
}

fn load(path: Option<PathBuf>, over: &Overrides, fallback: Option<CaseId>) -> Result<CaseConfig, String> {
    let mut cfg = match (path.or_else(|| over.config.clone()), fallback) {
        (Some(p), _) => CaseConfig::from_file(&p).map_err(|e| format!("{}: {e}", p.display()))?,
        (None, Some(case)) => CaseConfig::defaults(case),
        (None, None) => return Err("no config given".into()),
    };
    if let Some(o) = &over.out {
        cfg.out = o.clone();
    }
    if let Some(p) = over.preset {
        cfg.presets = vec![p];
    }
    if let Some(s) = over.seed {
        cfg.seed = s;
    }
    if let Some(m) = over.max_dofs {
        cfg.max_dofs = m;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(config, &cli.over, None)?;
            let outcome = run_case(&cfg).map_err(|e| e.to_string())?;
            print!("{}", outcome.text);
            println!("report: {}", outcome.report.display());
            Ok(outcome.success)
        }
        Command::Diagnose { config } => {
            let mut cfg = load(config, &cli.over, Some(CaseId::ElementDiagnostics))?;
            cfg.case = CaseId::ElementDiagnostics;
            let rep = run_diagnostics(&cfg).map_err(|e| e.to_string())?;
            print!("{}", rep.to_table());
            Ok(rep.success())
        }
        Command::Mesh { geometry, output } => {
            let mesh = geometry.build().map_err(|e| e.to_string())?;
            let rep = validate_mesh(&mesh);
            write_mesh(&mesh, &output).map_err(|e| e.to_string())?;
            println!("{rep}");
            println!("wrote {}", output.display());
            Ok(rep.within_quality_bound && rep.orientation_violations + rep.conformity_violations + rep.frame_violations + rep.unlabeled_boundary_edges == 0)
        }
        Command::Infsup { pair, preset, geometry } => {
            let mesh = geometry.build().map_err(|e| e.to_string())?;
            let r = infsup_constant(&mesh, pair, preset).map_err(|e| e.to_string())?;
            println!("pair {pair} preset {preset} h {:.6e}", r.h);
            println!("beta {:.6e}\nnear_null {}\nlargest {:.6e}\ntrial_dim {}\ntest_dim {}", r.beta, r.near_null, r.largest, r.trial_dim, r.test_dim);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    configure_parallelism();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
