//! Explicit finite volume scheme in mass form on a moving triangulation.
//!
//! One step advances cell masses `m_j = V_j u_j` by
//! `m_j^{k+1} = m_j^k - τ Σ_{e ⊂ ∂T_j} g_e(u_j^k, u_{l(j,e)}^k)` and recovers
//! values with the cell measures of the moved mesh. The numerical flux of each
//! global edge is computed once, from its owner side, and enters the two
//! adjacent cells with opposite signs.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::mesh::{snapshot, MeshSnapshot, ReferenceMesh};
use crate::motion::MotionMap;
use crate::num::{Real, Vec3};
use crate::numflux::{numerical_flux, EdgeFlux, EdgeStencil, NumericalFlux, Quadrature, ScalarFlux};

/// Cell values and masses at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState<T> {
    pub step_index: usize,
    pub time: T,
    pub values: Vec<T>,
    pub masses: Vec<T>,
}

impl<T: Real> CellState<T> {
    /// State with `masses = V ⊙ values` on `snapshot`.
    pub fn from_values(values: Vec<T>, snapshot: &MeshSnapshot<T>, step_index: usize) -> Self {
        let masses = values
            .iter()
            .zip(&snapshot.cell_measure)
            .map(|(&u, &v)| u * v)
            .collect();
        CellState {
            step_index,
            time: snapshot.time,
            values,
            masses,
        }
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.masses).all(|x| x.is_finite())
    }
}

/// Run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub t_end: T,
    pub cfl_number: T,
    pub numerical_flux: NumericalFlux,
    pub quadrature: Quadrature,
    /// Upper bound on the step size; also the step used when all wave
    /// speeds vanish.
    pub tau_max: T,
    /// Keep every n-th state in the returned trajectory (0: first and last
    /// only).
    pub record_every: usize,
}

impl<T: Real> SolverConfig<T> {
    /// CFL 0.45, Engquist-Osher flux, midpoint rule, `τ_max = t_end / 100`.
    pub fn new(t_end: T) -> Self {
        SolverConfig {
            t_end,
            cfl_number: T::lit(0.45),
            numerical_flux: NumericalFlux::EngquistOsher,
            quadrature: Quadrature::Midpoint,
            tau_max: t_end / T::lit(100.0),
            record_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("solver.t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.cfl_number > T::zero() && self.cfl_number <= T::one()) {
            return Err(Error::Config(format!(
                "solver.cfl must lie in (0, 1], got {}",
                self.cfl_number
            )));
        }
        if self.t_end > T::zero() && !(self.tau_max > T::zero()) {
            return Err(Error::Config(format!(
                "solver.tau_max must be positive, got {}",
                self.tau_max
            )));
        }
        Ok(())
    }
}

/// Cell averages of `u0` by the three-point edge-midpoint rule on each flat
/// triangle of `snapshot`.
pub fn init_cell_averages<T: Real>(u0: &(dyn Fn(Vec3<T>) -> T + Sync), snapshot: &MeshSnapshot<T>) -> CellState<T> {
    let third = T::one() / T::lit(3.0);
    let values = snapshot
        .edge_midpoint
        .par_iter()
        .map(|mids| (u0(mids[0]) + u0(mids[1]) + u0(mids[2])) * third)
        .collect();
    CellState::from_values(values, snapshot, 0)
}

/// Edge flux functions of every global edge at one time level, oriented out
/// of the owner triangle.
pub struct EdgeFluxes<'a, T> {
    pub time: T,
    pub edges: Vec<EdgeFlux<'a, T>>,
}

impl<'a, T: Real> EdgeFluxes<'a, T> {
    pub fn build(model: &'a FluxModel<T>, snap: &MeshSnapshot<T>, rule: Quadrature) -> Result<Self> {
        let mesh = snap.mesh();
        let edges = mesh
            .edges()
            .par_iter()
            .zip(&snap.shared_conormal)
            .map(|(edge, &nu)| {
                let stencil = EdgeStencil::new(
                    snap.vertices[edge.vertices[0]],
                    snap.vertices[edge.vertices[1]],
                    nu,
                    rule,
                );
                EdgeFlux::new(model, stencil, snap.time)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeFluxes { time: snap.time, edges })
    }
}

fn require_closed<T: Real>(mesh: &ReferenceMesh<T>) -> Result<()> {
    if mesh.is_closed() {
        Ok(())
    } else {
        Err(Error::InvalidMesh(format!(
            "the scheme needs a closed oriented surface: {}",
            crate::mesh::check_manifold(mesh)
        )))
    }
}

/// Sum over the three edges of each cell of a per-edge quantity, signed by
/// edge ownership. Local edges are visited in order 0, 1, 2.
fn gather<T: Real>(mesh: &ReferenceMesh<T>, per_edge: &[T], signed: bool) -> Vec<T> {
    let edges = mesh.edges();
    mesh.cell_edges()
        .par_iter()
        .enumerate()
        .map(|(j, ids)| {
            let mut acc = T::zero();
            for (e, &id) in ids.iter().enumerate() {
                let x = per_edge[id];
                let owner = edges[id].owner;
                if !signed || (owner.triangle == j && owner.local as usize == e) {
                    acc += x;
                } else {
                    acc -= x;
                }
            }
            acc
        })
        .collect()
}

/// Step size from the CFL condition
/// `τ = cfl · min_j V_j / Σ_{e ⊂ ∂T_j} max |c_e'|`, the maximum taken over
/// the current value range widened by 10 %. Capped by `τ_max` and by the
/// remaining time to `t_end`.
pub fn cfl_dt<T: Real>(
    state: &CellState<T>,
    snap: &MeshSnapshot<T>,
    model: &FluxModel<T>,
    config: &SolverConfig<T>,
) -> Result<T> {
    let fluxes = EdgeFluxes::build(model, snap, config.quadrature)?;
    cfl_dt_with(state, snap, &fluxes, config)
}

pub(crate) fn cfl_dt_with<T: Real>(
    state: &CellState<T>,
    snap: &MeshSnapshot<T>,
    fluxes: &EdgeFluxes<'_, T>,
    config: &SolverConfig<T>,
) -> Result<T> {
    if !state.is_finite() {
        return Err(Error::Numerical("CFL requested for a non-finite state".into()));
    }
    let (lo, hi) = (state.min_value(), state.max_value());
    let delta = (hi - lo) * T::lit(0.1);
    let (lo, hi) = (lo - delta, hi + delta);
    let speeds = fluxes
        .edges
        .par_iter()
        .map(|c| c.max_abs_derivative(lo, hi))
        .collect::<Result<Vec<T>>>()?;
    let sums = gather(snap.mesh(), &speeds, false);
    let mut ratio = T::infinity();
    for (&v, &s) in snap.cell_measure.iter().zip(&sums) {
        if s > T::zero() {
            ratio = ratio.min(v / s);
        }
    }
    let mut tau = if ratio.is_finite() {
        config.cfl_number * ratio
    } else {
        config.tau_max
    };
    tau = tau.min(config.tau_max);
    let remaining = config.t_end - state.time;
    if remaining > T::zero() {
        tau = tau.min(remaining);
    }
    Ok(tau)
}

/// Numerical flux of every global edge, owner side inside.
fn edge_numerical_fluxes<T: Real>(
    mesh: &ReferenceMesh<T>,
    fluxes: &EdgeFluxes<'_, T>,
    values: &[T],
    kind: NumericalFlux,
) -> Result<Vec<T>> {
    mesh.edges()
        .par_iter()
        .zip(&fluxes.edges)
        .map(|(edge, c)| {
            let twin = edge.twin.ok_or_else(|| Error::InvalidMesh("boundary edge in step".into()))?;
            numerical_flux(kind, c, values[edge.owner.triangle], values[twin.triangle])
        })
        .collect()
}

/// Advances `state` from `snap_k` to `snap_k1` with step `tau`.
pub fn step<T: Real>(
    state: &CellState<T>,
    snap_k: &MeshSnapshot<T>,
    snap_k1: &MeshSnapshot<T>,
    model: &FluxModel<T>,
    tau: T,
    kind: NumericalFlux,
    rule: Quadrature,
) -> Result<CellState<T>> {
    let fluxes = EdgeFluxes::build(model, snap_k, rule)?;
    step_with(state, snap_k, snap_k1, &fluxes, tau, kind)
}

pub(crate) fn step_with<T: Real>(
    state: &CellState<T>,
    snap_k: &MeshSnapshot<T>,
    snap_k1: &MeshSnapshot<T>,
    fluxes: &EdgeFluxes<'_, T>,
    tau: T,
    kind: NumericalFlux,
) -> Result<CellState<T>> {
    let mesh = snap_k.mesh();
    require_closed(mesh)?;
    if !Arc::ptr_eq(mesh, snap_k1.mesh()) && mesh.num_triangles() != snap_k1.num_cells() {
        return Err(Error::InvalidMesh("snapshots do not share a topology".into()));
    }
    let scale = T::one().max(snap_k1.time.abs());
    if !((snap_k.time + tau - snap_k1.time).abs() <= T::lit(1e-12) * scale) {
        return Err(Error::Domain(format!(
            "t_k + tau = {} does not match t_(k+1) = {}",
            snap_k.time + tau,
            snap_k1.time
        )));
    }
    if state.values.len() != snap_k.num_cells() {
        return Err(Error::Domain("state does not match the snapshot".into()));
    }

    let g = edge_numerical_fluxes(mesh, fluxes, &state.values, kind)?;
    let net = gather(mesh, &g, true);
    let masses: Vec<T> = state
        .masses
        .iter()
        .zip(&net)
        .map(|(&m, &phi)| m - tau * phi)
        .collect();
    let values: Vec<T> = masses
        .iter()
        .zip(&snap_k1.cell_measure)
        .map(|(&m, &v)| m / v)
        .collect();
    let step_index = state.step_index + 1;
    if let Some(cell) = values.iter().position(|u| !u.is_finite()) {
        return Err(Error::BlowUp { step: step_index, cell });
    }
    Ok(CellState {
        step_index,
        time: snap_k1.time,
        values,
        masses,
    })
}

/// Value-form update `u_j^{k+1} = (V_j^k u_j^k - τ Σ g) / V_j^{k+1}`,
/// algebraically identical to [`step`]; kept for cross-checks.
pub fn step_value_form<T: Real>(
    state: &CellState<T>,
    snap_k: &MeshSnapshot<T>,
    snap_k1: &MeshSnapshot<T>,
    model: &FluxModel<T>,
    tau: T,
    kind: NumericalFlux,
    rule: Quadrature,
) -> Result<Vec<T>> {
    let fluxes = EdgeFluxes::build(model, snap_k, rule)?;
    let mesh = snap_k.mesh();
    let g = edge_numerical_fluxes(mesh, &fluxes, &state.values, kind)?;
    let net = gather(mesh, &g, true);
    Ok((0..state.values.len())
        .map(|j| (snap_k.cell_measure[j] * state.values[j] - tau * net[j]) / snap_k1.cell_measure[j])
        .collect())
}

/// Largest amount by which `next` leaves the range of `prev` over each
/// cell's edge neighborhood (zero when the local maximum principle holds).
pub fn local_extrema_violation<T: Real>(mesh: &ReferenceMesh<T>, prev: &[T], next: &[T]) -> T {
    (0..mesh.num_triangles())
        .map(|j| {
            let mut lo = prev[j];
            let mut hi = prev[j];
            for e in 0..3 {
                if let Some(n) = mesh.neighbor(j, e) {
                    lo = lo.min(prev[n.triangle]);
                    hi = hi.max(prev[n.triangle]);
                }
            }
            (lo - next[j]).max(next[j] - hi).max(T::zero())
        })
        .fold(T::zero(), T::max)
}

/// Compensated sum of cell masses in cell order.
pub fn mass_total<T: Real>(state: &CellState<T>) -> T {
    neumaier_sum(state.masses.iter().copied())
}

pub(crate) fn neumaier_sum<T: Real>(xs: impl Iterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Summary of a completed (or aborted) run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport<T> {
    pub steps: usize,
    pub final_time: T,
    pub min_value: T,
    pub max_value: T,
    pub initial_mass: T,
    pub final_mass: T,
    pub tau_min: T,
    pub tau_max: T,
}

impl<T: Real> RunReport<T> {
    /// `|Σm(t_end) - Σm(0)| / |Σm(0)|`, or the absolute drift for zero mass.
    pub fn relative_mass_drift(&self) -> T {
        let d = (self.final_mass - self.initial_mass).abs();
        if self.initial_mass != T::zero() {
            d / self.initial_mass.abs()
        } else {
            d
        }
    }
}

/// A recorded `(snapshot, state)` pair.
pub type Frame<T> = (MeshSnapshot<T>, CellState<T>);

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    /// Initial frame, every `record_every`-th frame, and the final frame.
    pub trajectory: Vec<Frame<T>>,
    pub report: RunReport<T>,
}

impl<T> RunOutput<T> {
    pub fn last(&self) -> &Frame<T> {
        self.trajectory.last().expect("trajectory holds the initial frame")
    }
}

/// A failed run with whatever was recorded before the failure, including the
/// last good frame.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure<T: std::fmt::Debug> {
    pub error: Error,
    pub partial: Vec<Frame<T>>,
}

/// Everything needed to integrate one problem.
pub struct Simulation<'a, T> {
    pub mesh: Arc<ReferenceMesh<T>>,
    pub motion: &'a MotionMap<T>,
    pub flux: &'a FluxModel<T>,
    pub initial: &'a (dyn Fn(Vec3<T>) -> T + Sync),
    pub config: &'a SolverConfig<T>,
}

impl<'a, T: Real> Simulation<'a, T> {
    /// Integrates from `t = 0` to `t_end`, calling `observer` on the initial
    /// frame and after every step.
    pub fn run_with(
        &self,
        mut observer: impl FnMut(&MeshSnapshot<T>, &CellState<T>) -> Result<()>,
    ) -> std::result::Result<RunOutput<T>, RunFailure<T>> {
        let mut kept = Vec::new();
        let fail = |error: Error, kept: Vec<Frame<T>>| RunFailure { error, partial: kept };

        if let Err(e) = self.config.validate().and_then(|_| require_closed(&self.mesh)) {
            return Err(fail(e, kept));
        }
        let mut snap = match snapshot(&self.mesh, self.motion, T::zero()) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, kept)),
        };
        let mut state = init_cell_averages(self.initial, &snap);
        if let Err(e) = observer(&snap, &state) {
            return Err(fail(e, kept));
        }
        kept.push((snap.clone(), state.clone()));

        let initial_mass = mass_total(&state);
        let mut report = RunReport {
            steps: 0,
            final_time: T::zero(),
            min_value: state.min_value(),
            max_value: state.max_value(),
            initial_mass,
            final_mass: initial_mass,
            tau_min: T::infinity(),
            tau_max: T::zero(),
        };
        let t_end = self.config.t_end;
        let snap_tol = t_end * T::lit(1e-12);

        while state.time < t_end {
            let advanced = (|| -> Result<(MeshSnapshot<T>, CellState<T>, T)> {
                let fluxes = EdgeFluxes::build(self.flux, &snap, self.config.quadrature)?;
                let mut tau = cfl_dt_with(&state, &snap, &fluxes, self.config)?;
                let mut t_next = state.time + tau;
                if t_end - t_next <= snap_tol {
                    t_next = t_end;
                    tau = t_end - state.time;
                }
                let next_snap = snapshot(&self.mesh, self.motion, t_next)?;
                let next = step_with(&state, &snap, &next_snap, &fluxes, tau, self.config.numerical_flux)?;
                Ok((next_snap, next, tau))
            })();
            let (next_snap, next, tau) = match advanced {
                Ok(x) => x,
                Err(e) => {
                    if kept.last().map(|f| f.1.step_index) != Some(state.step_index) {
                        kept.push((snap, state));
                    }
                    return Err(fail(e, kept));
                }
            };
            snap = next_snap;
            state = next;
            report.steps += 1;
            report.tau_min = report.tau_min.min(tau);
            report.tau_max = report.tau_max.max(tau);
            report.min_value = report.min_value.min(state.min_value());
            report.max_value = report.max_value.max(state.max_value());
            if let Err(e) = observer(&snap, &state) {
                kept.push((snap, state));
                return Err(fail(e, kept));
            }
            let every = self.config.record_every;
            if every > 0 && state.step_index % every == 0 && state.time < t_end {
                kept.push((snap.clone(), state.clone()));
            }
        }

        report.final_time = state.time;
        report.final_mass = mass_total(&state);
        if report.steps == 0 {
            report.tau_min = T::zero();
        } else {
            kept.push((snap, state));
        }
        Ok(RunOutput { trajectory: kept, report })
    }

    pub fn run(&self) -> std::result::Result<RunOutput<T>, RunFailure<T>> {
        self.run_with(|_, _| Ok(()))
    }
}

/// Convenience wrapper around [`Simulation::run`].
pub fn run<T: Real>(
    mesh: &Arc<ReferenceMesh<T>>,
    motion: &MotionMap<T>,
    flux: &FluxModel<T>,
    initial: &(dyn Fn(Vec3<T>) -> T + Sync),
    config: &SolverConfig<T>,
) -> std::result::Result<RunOutput<T>, RunFailure<T>> {
    Simulation {
        mesh: Arc::clone(mesh),
        motion,
        flux,
        initial,
        config,
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_icosphere;
    use crate::motion::NormalField;

    fn sphere(level: u32) -> Arc<ReferenceMesh<f64>> {
        Arc::new(build_icosphere(level).unwrap())
    }

    #[test]
    fn init_constant_and_linear() {
        let mesh = sphere(2);
        let snap = snapshot(&mesh, &MotionMap::identity(), 0.0).unwrap();
        let s = init_cell_averages(&|_| 3.0, &snap);
        assert!(s.values.iter().all(|&u| u == 3.0));
        assert!((mass_total(&s) - 3.0 * snap.total_area()).abs() < 1e-13);

        let lin = |x: Vec3<f64>| 0.5 + 2.0 * x.x() - x.y() + 0.25 * x.z();
        let s = init_cell_averages(&lin, &snap);
        for (u, b) in s.values.iter().zip(&snap.barycenter) {
            assert!((u - lin(*b)).abs() < 1e-14);
        }
    }

    #[test]
    fn init_hemisphere_indicator() {
        let mesh = sphere(3);
        let snap = snapshot(&mesh, &MotionMap::identity(), 0.0).unwrap();
        let ind = |x: Vec3<f64>| if x.z() > 0.0 { 1.0 } else { 0.0 };
        let s = init_cell_averages(&ind, &snap);
        for (j, tri) in mesh.triangles().iter().enumerate() {
            let zs = tri.map(|v| snap.vertices[v].z());
            if zs.iter().all(|&z| z > 0.0) {
                assert_eq!(s.values[j], 1.0);
            } else if zs.iter().all(|&z| z < 0.0) {
                assert_eq!(s.values[j], 0.0);
            }
        }
    }

    #[test]
    fn zero_flux_identity_motion_keeps_state() {
        let mesh = sphere(1);
        let motion = MotionMap::identity();
        let model = FluxModel::zero(NormalField::Radial);
        let s0 = snapshot(&mesh, &motion, 0.0).unwrap();
        let s1 = snapshot(&mesh, &motion, 0.1).unwrap();
        let st = init_cell_averages(&|x: Vec3<f64>| x.x() + 2.0, &s0);
        let next = step(&st, &s0, &s1, &model, 0.1, NumericalFlux::EngquistOsher, Quadrature::Midpoint).unwrap();
        for (a, b) in next.values.iter().zip(&st.values) {
            assert!((a - b).abs() <= 2.0 * f64::EPSILON * b.abs());
        }
        assert_eq!(next.masses, st.masses);
    }

    #[test]
    fn cfl_without_waves_uses_tau_max() {
        let mesh = sphere(1);
        let snap = snapshot(&mesh, &MotionMap::identity(), 0.0).unwrap();
        let st = init_cell_averages(&|_| 1.0, &snap);
        let mut cfg = SolverConfig::new(1.0);
        cfg.tau_max = 0.03;
        let tau = cfl_dt(&st, &snap, &FluxModel::zero(NormalField::Radial), &cfg).unwrap();
        assert_eq!(tau, 0.03);
    }

    #[test]
    fn mismatched_times_are_rejected() {
        let mesh = sphere(0);
        let motion = MotionMap::identity();
        let s0 = snapshot(&mesh, &motion, 0.0).unwrap();
        let s1 = snapshot(&mesh, &motion, 0.2).unwrap();
        let st = init_cell_averages(&|_| 1.0, &s0);
        let model = FluxModel::rotation_linear();
        assert!(matches!(
            step(&st, &s0, &s1, &model, 0.1, NumericalFlux::EngquistOsher, Quadrature::Midpoint),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_end_time_returns_initial_frame_only() {
        let mesh = sphere(1);
        let cfg = SolverConfig::new(0.0);
        let out = run(&mesh, &MotionMap::identity(), &FluxModel::rotation_linear(), &|_| 1.0, &cfg).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.report.steps, 0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::<f64>::new(1.0);
        cfg.cfl_number = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("solver.cfl")));
        cfg.cfl_number = 0.0;
        assert!(cfg.validate().is_err());
        assert!(SolverConfig::<f64>::new(-1.0).validate().is_err());
    }

    #[test]
    fn open_mesh_is_rejected() {
        let full = build_icosphere::<f64>(1).unwrap();
        let mut tris = full.triangles().to_vec();
        tris.pop();
        let open = Arc::new(ReferenceMesh::new(full.vertices().to_vec(), tris).unwrap());
        let cfg = SolverConfig::new(0.1);
        let err = run(&open, &MotionMap::identity(), &FluxModel::rotation_linear(), &|_| 1.0, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::InvalidMesh(_)));
    }

    #[test]
    fn blow_up_keeps_last_good_frame() {
        let mesh = sphere(1);
        let model = FluxModel::rotation_linear();
        let mut cfg = SolverConfig::new(0.5);
        cfg.record_every = 1;
        let mut calls = 0;
        let sim = Simulation {
            mesh: Arc::clone(&mesh),
            motion: &MotionMap::identity(),
            flux: &model,
            initial: &|x: Vec3<f64>| x.z(),
            config: &cfg,
        };
        let err = sim
            .run_with(|_, _| {
                calls += 1;
                if calls == 4 {
                    Err(Error::Numerical("stop".into()))
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
        assert!(!err.partial.is_empty());
        assert_eq!(err.partial.last().unwrap().1.step_index, 3);
    }
}
