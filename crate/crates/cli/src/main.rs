use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vem3d::config::{Experiment, RunOptions, Study};
use vem3d::{plot, report, study};
use vem3d_core::mesh::{build_collapsing_mesh, build_cube_mesh, load_mesh, save_mesh, PolyMesh};

#[derive(Parser)]
#[command(name = "vem3d", version, about = "High-order virtual element experiments on polyhedral meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study described by a TOML file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Accept degrees 7 to 10.
        #[arg(long)]
        allow_extreme_p: bool,
    },
    /// Generate or validate mesh files.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a generated mesh.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Load a mesh file, validate it and print a summary.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum GenKind {
    /// N×N×N cubes on the unit cube.
    Cube {
        #[arg(long)]
        n: usize,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Collapsing-octahedron mesh at a given level.
    Collapse {
        #[arg(long)]
        level: u32,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

fn run_study(config: PathBuf, opts: RunOptions) -> Result<bool> {
    let exp = Experiment::load(&config, &opts)?;
    if !exp.extreme_degrees.is_empty() {
        eprintln!(
            "warning: degrees {:?} are beyond desk scale; expect severe ill-conditioning",
            exp.extreme_degrees
        );
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build()?;
    let rep = pool.install(|| study::run(&exp));
    std::fs::create_dir_all(&exp.output).with_context(|| format!("creating {}", exp.output.display()))?;
    report::write_report(&exp.output.join("report.csv"), &rep.rows)?;
    if exp.study == Study::HStudy {
        report::write_rates(&exp.output.join("rates.csv"), &rep.rows)?;
    }
    for (name, svg) in plot::study_plots(exp.study, &rep.rows) {
        let path = exp.output.join(name);
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = rep.failures();
    eprintln!(
        "{} cells, {} failed; results in {}",
        rep.rows.len(),
        failed,
        exp.output.display()
    );
    Ok(failed == 0)
}

fn summarize(mesh: &PolyMesh) -> Result<()> {
    let mut vol = 0.0;
    let mut vmin = f64::MAX;
    for c in 0..mesh.num_cells() {
        let v = mesh.cell_geometry(c)?.volume;
        vol += v;
        vmin = vmin.min(v);
    }
    let amin = (0..mesh.num_faces()).map(|f| mesh.face_geometry(f).area).fold(f64::MAX, f64::min);
    let emin = mesh
        .edges()
        .iter()
        .map(|[a, b]| {
            let (p, q) = (mesh.vertices()[*a], mesh.vertices()[*b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
        })
        .fold(f64::MAX, f64::min);
    let boundary = (0..mesh.num_faces()).filter(|&f| mesh.is_boundary_face(f)).count();
    println!("vertices        {}", mesh.num_vertices());
    println!("edges           {}", mesh.num_edges());
    println!("faces           {} ({boundary} on the boundary)", mesh.num_faces());
    println!("cells           {}", mesh.num_cells());
    println!("total volume    {vol:.16e}");
    println!("min cell volume {vmin:.6e}");
    println!("min face area   {amin:.6e}");
    println!("min edge length {emin:.6e}");
    println!("mesh size h     {:.6e}", mesh.mesh_size());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            allow_extreme_p,
        } => run_study(
            config,
            RunOptions {
                out,
                jobs,
                allow_extreme_p,
            },
        ),
        Command::Mesh { command } => match command {
            MeshCommand::Gen { kind } => {
                let (mesh, output) = match kind {
                    GenKind::Cube { n, output } => (build_cube_mesh(n)?, output),
                    GenKind::Collapse { level, output } => (build_collapsing_mesh(level)?, output),
                };
                save_mesh(&mesh, &output)?;
                eprintln!("wrote {}", output.display());
                Ok(true)
            }
            MeshCommand::Check { file } => {
                let mesh = load_mesh(&file)?;
                summarize(&mesh)?;
                println!("ok");
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
