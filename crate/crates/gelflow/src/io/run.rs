use std::path::{Path, PathBuf};

use crate::error::{ConfigError, RunError};
use crate::mesh::mesh_size;
use crate::scheme::{run_with, Diagnostics, Problem, SourceHooks};
use crate::verify::{convergence_study, manufactured_problem, RateTable, SineSolution, StudyConfig};

use super::config::{DomainSpec, LoadSpec, RunConfig};
use super::output::{diagnostics_csv, write_snapshot};

/// What a finished run wrote.
#[derive(Debug)]
pub struct RunSummary {
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<PathBuf>,
    pub diagnostics_path: PathBuf,
}

/// Builds the discrete problem a config describes.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem, RunError> {
    let mesh = cfg.build_mesh()?;
    let params = cfg.params()?;
    let algorithm = cfg.algorithm.into();
    if let LoadSpec::Mms { amplitude } = cfg.load {
        let exact = SineSolution { amplitude, params };
        return Ok(manufactured_problem(&exact, mesh, params, cfg.dt, cfg.t_final, algorithm));
    }
    let load = cfg.boundary_load()?.expect("physical load");
    log::info!(
        "mesh: {} vertices, {} triangles, h = {:.4}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh_size(&mesh)
    );
    Ok(Problem {
        mesh,
        params,
        load,
        initial: cfg.initial_data()?,
        hooks: SourceHooks::default(),
        dt: cfg.dt,
        t_final: cfg.t_final,
        algorithm,
        theta_threshold: cfg.theta_threshold,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::io(path, e))
}

/// Runs the scheme, writing `snap_<n>.vtk` every `stride` levels (and at
/// level 0) and `diagnostics.csv` into `out_dir`.
pub fn execute_run(cfg: &RunConfig, out_dir: &Path, stride: usize) -> Result<RunSummary, RunError> {
    if stride == 0 {
        return Err(ConfigError::invalid("stride", "must be at least 1").into());
    }
    let problem = build_problem(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let mut snapshots = Vec::new();
    let mut write_err = None;
    let diagnostics = run_with(&problem, |_, state| {
        if write_err.is_some() || state.step % stride != 0 {
            return;
        }
        let path = out_dir.join(format!("snap_{}.vtk", state.step));
        match write_file(&path, &write_snapshot(state, &problem.mesh, cfg.magnification)) {
            Ok(()) => snapshots.push(path),
            Err(e) => write_err = Some(e),
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let diagnostics_path = out_dir.join("diagnostics.csv");
    write_file(&diagnostics_path, &diagnostics_csv(&diagnostics))?;
    Ok(RunSummary {
        diagnostics,
        snapshots,
        diagnostics_path,
    })
}

/// The study a config describes: the coarsest mesh is its unit-square
/// `rect` domain, the coarsest step its `dt`.
pub fn study_config(cfg: &RunConfig) -> Result<StudyConfig, ConfigError> {
    let study = cfg
        .study
        .ok_or_else(|| ConfigError::invalid("study", "the convergence command needs a `study` section"))?;
    let base_cells = match cfg.domain {
        DomainSpec::Rect { nx, ny, lower, upper } if nx == ny && lower == [0.0, 0.0] && upper == [1.0, 1.0] => nx,
        _ => {
            return Err(ConfigError::invalid(
                "domain",
                "a convergence study needs a rect domain on the unit square with nx == ny",
            ))
        }
    };
    let amplitude = match cfg.load {
        LoadSpec::Mms { amplitude } => amplitude,
        _ => return Err(ConfigError::invalid("load", "a convergence study needs the `mms` load")),
    };
    Ok(StudyConfig {
        base_cells,
        levels: study.levels,
        coupling: study.coupling.into(),
        dt0: cfg.dt,
        t_final: cfg.t_final,
        params: cfg.params()?,
        amplitude,
        algorithm: cfg.algorithm.into(),
    })
}

/// Runs the study and writes `rates.csv` into `out_dir`.
pub fn execute_study(cfg: &RunConfig, out_dir: &Path) -> Result<(RateTable, PathBuf), RunError> {
    let sc = study_config(cfg)?;
    let table = convergence_study(&sc)?;
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let path = out_dir.join("rates.csv");
    write_file(&path, &table.to_csv())?;
    Ok((table, path))
}
