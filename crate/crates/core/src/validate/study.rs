//! Refinement studies against an exact solution.

use crate::error::{Error, Result};
use crate::mesh::{mean_diameter, snapshot};
use crate::num::Real;
use crate::problems::Problem;
use crate::solver::{Simulation, SolverConfig};
use crate::validate::eoc::{eoc_table, l1_error, EocRecord};

/// Runs `problem` on icospheres of the given levels and tabulates the L1
/// error at `config.t_end`. `h̄` is measured on the reference mesh. Levels
/// run one after another; each run is parallel internally.
pub fn eoc_study<T: Real>(problem: &Problem<T>, levels: &[u32], config: &SolverConfig<T>) -> Result<Vec<EocRecord<T>>> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Config(format!("problem {} has no exact solution", problem.name)))?;
    let motion = &problem.motion;
    if motion.radial_lift(crate::num::Vec3::axis(0), T::zero()).is_none() {
        return Err(Error::Config(format!(
            "motion {} has no lift onto the analytic surface",
            motion.name()
        )));
    }
    let lift = |y, t| motion.radial_lift(y, t).expect("checked above");
    let mut pairs = Vec::with_capacity(levels.len());
    let mut elements = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = problem.mesh(level)?;
        let h_bar = mean_diameter(&snapshot(&mesh, motion, T::zero())?);
        let out = Simulation {
            mesh: mesh.clone(),
            motion,
            flux: &problem.flux,
            initial: &*problem.initial,
            config,
        }
        .run()
        .map_err(|f| f.error)?;
        let (snap, state) = out.last();
        pairs.push((h_bar, l1_error(state, snap, &**exact, &lift)));
        elements.push(mesh.num_triangles());
    }
    eoc_table(&pairs, &elements)
}
