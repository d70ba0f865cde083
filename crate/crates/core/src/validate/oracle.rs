//! Studies on the reduced 1D problem: convergence for smooth transport,
//! exactness for constant states, entropy residuals and vanishing viscosity.

use crate::error::Result;
use crate::num::Real;
use crate::numflux::QuadraticFlux;
use crate::validate::reduced1d::{
    cell_averages, entropy_residual_1d, kruzkov_constants, l1_distance, reduced_1d_evolve, reduced_1d_run,
    reduced_1d_trajectory, Reduced1DConfig,
};

/// Courant number used by the studies; the first-order upwind error shrinks
/// as it approaches 1.
pub const ORACLE_CFL: f64 = 0.9;

/// Number of Kruzkov constants sampled over the value range of a run.
pub const KRUZKOV_SAMPLES: usize = 9;

/// Smooth initial profile `sin^2(φ)`.
pub fn smooth_profile<T: Real>(phi: T) -> T {
    phi.sin().powi(2)
}

/// Step-down data `1` on `[0, π)`, `0.2` elsewhere: a shock at `φ = π` and
/// a rarefaction at `φ = 0` under Burgers.
pub fn step_down_profile<T: Real>(phi: T) -> T {
    if phi < T::PI() {
        T::one()
    } else {
        T::lit(0.2)
    }
}

/// L1 errors of linear transport `f(u) = 2πu` against the exact solution
/// `exp(2t) u0(φ - 2π(exp(t) - 1))` at `t = ln 2`, one per grid size.
pub fn linear_transport_errors<T: Real>(sizes: &[usize], cfl: T) -> Result<Vec<T>> {
    let flux = QuadraticFlux::linear(T::zero(), T::TAU());
    let t_end = T::lit(2f64.ln());
    sizes
        .iter()
        .map(|&n| {
            let config = Reduced1DConfig {
                n_cells: n,
                t_end,
                viscosity: T::zero(),
                cfl,
            };
            let state = reduced_1d_run(&config, &flux, &smooth_profile)?;
            let shift = T::TAU() * (t_end.exp() - T::one());
            let grow = (T::lit(2.0) * t_end).exp();
            let exact: Vec<T> = cell_averages(n, &|phi: T| grow * smooth_profile(phi - shift));
            Ok(l1_distance(&state, &exact))
        })
        .collect()
}

/// Largest relative deviation of a constant state `c` from `exp(2t) c` over
/// every step of a run with linear flux.
pub fn constant_state_defect<T: Real>(n_cells: usize, c: T, t_end: T) -> Result<T> {
    let flux = QuadraticFlux::linear(T::zero(), T::TAU());
    let config = Reduced1DConfig {
        n_cells,
        t_end,
        viscosity: T::zero(),
        cfl: T::lit(0.9),
    };
    let mut worst = T::zero();
    reduced_1d_evolve(&config, &flux, &|_| c, |s| {
        let target = (T::lit(2.0) * s.time).exp() * c;
        for &u in &s.values {
            worst = worst.max((u - target).abs() / target.abs());
        }
    })?;
    Ok(worst)
}

fn burgers<T: Real>() -> QuadraticFlux<T> {
    QuadraticFlux {
        c0: T::zero(),
        c1: T::zero(),
        c2: T::lit(0.5),
    }
}

/// Entropy residual of inviscid Burgers with step-down data, per grid size.
pub fn burgers_entropy_residuals<T: Real>(sizes: &[usize], t_end: T, cfl: T) -> Result<Vec<T>> {
    let flux = burgers();
    sizes
        .iter()
        .map(|&n| {
            let config = Reduced1DConfig {
                n_cells: n,
                t_end,
                viscosity: T::zero(),
                cfl,
            };
            let traj = reduced_1d_trajectory(&config, &flux, &step_down_profile)?;
            let ks = kruzkov_constants(&traj, KRUZKOV_SAMPLES);
            entropy_residual_1d(&traj, &flux, &ks)
        })
        .collect()
}

/// L1 distances between viscous and inviscid Burgers solutions with smooth
/// data at a fixed grid size, one per viscosity.
pub fn vanishing_viscosity_distances<T: Real>(n_cells: usize, viscosities: &[T], t_end: T, cfl: T) -> Result<Vec<T>> {
    let flux = burgers();
    let run = |eps: T| {
        reduced_1d_run(
            &Reduced1DConfig {
                n_cells,
                t_end,
                viscosity: eps,
                cfl,
            },
            &flux,
            &smooth_profile,
        )
    };
    let inviscid = run(T::zero())?;
    viscosities
        .iter()
        .map(|&eps| Ok(l1_distance(&run(eps)?, &inviscid.values)))
        .collect()
}
