//! The `mesh`, `run`, `eoc` and `validate` commands.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use moverfv::mesh::snapshot;
use moverfv::solver::Simulation;
use moverfv::validate::eoc_study;
use moverfv::{EocRecord, RunReport};

use crate::checks::{validation_suite, Check};
use crate::config::RunConfiguration;
use crate::error::{CliError, CliResult};
use crate::report::render_report;
use crate::table::write_eoc_csv;
use crate::vtk::{write_mesh_vtk, write_vtk};

pub const THREADS_VAR: &str = "MOVERFV_THREADS";

/// Sizes the global rayon pool from `MOVERFV_THREADS`; unset leaves the
/// hardware default.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(value) = value else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR}: expected a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_VAR}: {e}")))
}

/// Parses `A..B` (inclusive) as a level range.
pub fn parse_levels(s: &str) -> CliResult<RangeInclusive<u32>> {
    let bad = || CliError::Config(format!("--levels: expected A..B with A < B, got '{s}'"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes the moved mesh of the configured problem at `t = 0` to
/// `dir/mesh.vtk`.
pub fn mesh_command(config: &RunConfiguration, dir: &Path) -> CliResult<PathBuf> {
    let problem = config.build_problem()?;
    let mesh = problem.mesh(config.level)?;
    let s = snapshot(&mesh, &problem.motion, 0.0)?;
    create_dir(dir)?;
    let path = dir.join("mesh.vtk");
    write_mesh_vtk(&s, &path)?;
    Ok(path)
}

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub report: RunReport,
    pub cells: usize,
    /// Range of the initial cell averages.
    pub initial_range: (f64, f64),
    pub report_path: PathBuf,
    pub vtk_files: Vec<PathBuf>,
}

fn frame_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("u_{step:06}.vtk"))
}

/// Integrates the configured problem. With `output.vtk_every = k > 0` every
/// k-th frame (including the initial one) goes to `dir/u_NNNNNN.vtk`; the
/// final frame is always written, and the report goes to `dir/report.txt`.
pub fn run_command(config: &RunConfiguration, dir: &Path) -> CliResult<RunSummary> {
    let problem = config.build_problem()?;
    let mesh = problem.mesh(config.level)?;
    let cells = mesh.num_triangles();
    create_dir(dir)?;

    let every = config.output.vtk_every;
    let mut vtk_files = Vec::new();
    let mut initial_range = (0.0, 0.0);
    let mut write_error: Option<CliError> = None;
    let mut last_written = None;
    let out = Simulation {
        mesh,
        motion: &problem.motion,
        flux: &problem.flux,
        initial: &*problem.initial,
        config: &config.solver,
    }
    .run_with(|snap, st| {
        if st.step_index == 0 {
            initial_range = (st.min_value(), st.max_value());
        }
        let last = st.time >= config.solver.t_end;
        if (every > 0 && st.step_index % every == 0) || last {
            let path = frame_path(dir, st.step_index);
            if let Err(e) = write_vtk(snap, st, &path) {
                let msg = e.to_string();
                write_error = Some(e);
                return Err(moverfv::Error::Domain(msg));
            }
            last_written = Some(st.step_index);
            vtk_files.push(path);
        }
        Ok(())
    });
    let out = match (out, write_error) {
        (_, Some(e)) => return Err(e),
        (Ok(out), None) => out,
        (Err(f), None) => return Err(f.error.into()),
    };
    debug_assert_eq!(last_written, Some(out.report.steps));

    let report_path = dir.join("report.txt");
    fs::write(&report_path, render_report(config, cells, &out.report)).map_err(|e| CliError::io(&report_path, e))?;
    Ok(RunSummary {
        report: out.report,
        cells,
        initial_range,
        report_path,
        vtk_files,
    })
}

/// Refinement study of the configured problem over `levels`; the table goes
/// to `dir/eoc.csv`.
pub fn eoc_command(
    config: &RunConfiguration,
    levels: RangeInclusive<u32>,
    dir: &Path,
) -> CliResult<(Vec<EocRecord>, PathBuf)> {
    let problem = config.build_problem()?;
    if problem.exact.is_none() {
        return Err(CliError::Config(format!(
            "problem: {} has no exact solution; eoc needs tp1",
            config.problem.name()
        )));
    }
    let levels: Vec<u32> = levels.collect();
    let records = eoc_study(&problem, &levels, &config.solver)?;
    create_dir(dir)?;
    let path = dir.join("eoc.csv");
    write_eoc_csv(&records, &path)?;
    Ok((records, path))
}

/// Runs the invariant suite; fails with a validation error naming the
/// failed checks.
pub fn validate_command(mut print: impl FnMut(&Check)) -> CliResult<Vec<Check>> {
    let checks = validation_suite()?;
    for c in &checks {
        print(c);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}
