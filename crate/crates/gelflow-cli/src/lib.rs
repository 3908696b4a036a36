//! The `gelflow` command line.
//!
//! Exit codes: 0 success, 1 configuration or usage, 2 mesh, 3 solver,
//! 4 I/O.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gelflow::io::{execute_run, execute_study, load_config};
use gelflow::mesh::{mesh_size, read_mesh};
use gelflow::{ConfigError, RunError, SchemeError};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_MESH: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gelflow", version, about = "Swelling dynamics of polymer gels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation, writing VTK snapshots and diagnostics.csv.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot stride (overrides `stride`).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run the manufactured-solution convergence study, writing rates.csv.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a mesh file and print its statistics.
    MeshInfo { mesh: PathBuf },
}

pub fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(ConfigError::Io { .. }) => EXIT_IO,
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Mesh(_) => EXIT_MESH,
        RunError::Scheme(s) => scheme_code(s),
        RunError::Io { .. } => EXIT_IO,
    }
}

fn scheme_code(e: &SchemeError) -> i32 {
    match e {
        SchemeError::Param(_) => EXIT_CONFIG,
        SchemeError::Mesh(_) => EXIT_MESH,
        SchemeError::Step { source, .. } => scheme_code(source),
        _ => EXIT_SOLVER,
    }
}

/// Runs the CLI with `argv` (program name first), printing to `out` and
/// `err`. Returns the exit code.
pub fn run_cli_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run_cli_with`] on the process's standard streams.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), RunError> {
    let io_err = |e: std::io::Error| RunError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match cmd {
        Command::Run { config, out: dir, stride } => {
            let cfg = load_config(&config)?;
            let dir = dir.unwrap_or_else(|| cfg.output_dir.clone());
            let summary = execute_run(&cfg, &dir, stride.unwrap_or(cfg.stride))?;
            let d = &summary.diagnostics;
            writeln!(
                out,
                "{} steps to t = {}, {} snapshots, diagnostics in {}",
                d.records.len(),
                d.grid.t_final,
                summary.snapshots.len(),
                summary.diagnostics_path.display()
            )
            .map_err(io_err)?;
            if let Some(last) = d.records.last() {
                writeln!(
                    out,
                    "C_q = {:.6e}  C_u = {:.6e}  C_ptilde = {:.6e}  C_p = {:.6e}  theta = {:.3}",
                    last.c_q, last.c_u, last.c_ptilde, last.c_p, last.theta
                )
                .map_err(io_err)?;
            }
        }
        Command::Convergence { config, out: dir } => {
            let cfg = load_config(&config)?;
            let dir = dir.unwrap_or_else(|| cfg.output_dir.clone());
            let (table, path) = execute_study(&cfg, &dir)?;
            write!(out, "{}", table.to_csv()).map_err(io_err)?;
            writeln!(out, "rates written to {}", path.display()).map_err(io_err)?;
        }
        Command::MeshInfo { mesh } => {
            let text = std::fs::read_to_string(&mesh).map_err(|e| RunError::Io {
                path: mesh.display().to_string(),
                source: e,
            })?;
            let m = read_mesh(&text)?;
            let mut tags: Vec<_> = m.boundary().iter().map(|e| e.tag).collect();
            tags.sort_unstable();
            tags.dedup();
            writeln!(
                out,
                "vertices {}\ntriangles {}\nedges {}\nboundary edges {}\nboundary tags {:?}\narea {:.12}\nh {:.6}",
                m.num_vertices(),
                m.num_triangles(),
                m.num_edges(),
                m.boundary().len(),
                tags,
                m.total_area(),
                mesh_size(&m)
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
