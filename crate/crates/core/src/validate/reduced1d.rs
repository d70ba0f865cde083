//! Reduced one-dimensional form of the rotating transport problem on the
//! periodic circle,
//!
//! `∂_t u - 2u + exp(t) ∂_φ f(u) - ε ∂_φφ u = 0`, `φ ∈ [0, 2π)`,
//!
//! solved with an Engquist-Osher flux and an integrating factor for the
//! `-2u` term. The scheme evolves `w = exp(-2t) u`, which it conserves, so
//! spatially constant states grow exactly like `exp(2t)`.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::numflux::{numerical_flux_eo, ScalarFlux};
use crate::solver::neumaier_sum;

/// Periodic cell averages at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduced1DState<T> {
    pub n_cells: usize,
    pub values: Vec<T>,
    pub time: T,
    pub viscosity: T,
}

impl<T: Real> Reduced1DState<T> {
    pub fn cell_width(&self) -> T {
        T::TAU() / T::from_usize(self.n_cells).unwrap()
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> T {
        self.cell_width() * (T::from_usize(i).unwrap() + T::lit(0.5))
    }

    /// `Σ_i u_i exp(-2t) Δφ`, invariant under the inviscid and viscous scheme.
    pub fn weighted_mass(&self) -> T {
        let w = (T::lit(-2.0) * self.time).exp() * self.cell_width();
        neumaier_sum(self.values.iter().map(|&u| u * w))
    }
}

/// Run parameters of the reduced problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduced1DConfig<T> {
    pub n_cells: usize,
    pub t_end: T,
    pub viscosity: T,
    pub cfl: T,
}

impl<T: Real> Reduced1DConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.n_cells < 8 {
            return Err(Error::Config(format!("n_cells must be >= 8, got {}", self.n_cells)));
        }
        if !(self.viscosity >= T::zero()) {
            return Err(Error::Config(format!("viscosity must be >= 0, got {}", self.viscosity)));
        }
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(Error::Config(format!(
                "cfl {} exceeds the combined convective and diffusive limit",
                self.cfl
            )));
        }
        if !(self.t_end >= T::zero()) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// Cell averages of `u0` by 4-point Gauss-Legendre on each cell.
pub fn cell_averages<T: Real>(n_cells: usize, u0: &dyn Fn(T) -> T) -> Vec<T> {
    const GL4: [(f64, f64); 4] = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
        (-0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
        (0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    ];
    let dx = T::TAU() / T::from_usize(n_cells).unwrap();
    let half = T::lit(0.5);
    (0..n_cells)
        .map(|i| {
            let mid = dx * (T::from_usize(i).unwrap() + half);
            GL4.iter()
                .map(|&(x, w)| T::lit(w) * u0(mid + dx * half * T::lit(x)))
                .sum::<T>()
                * half
        })
        .collect()
}

fn eo_interfaces<T: Real>(flux: &dyn ScalarFlux<T>, u: &[T]) -> Result<Vec<T>> {
    let n = u.len();
    (0..n)
        .map(|i| numerical_flux_eo(flux, u[i], u[(i + 1) % n]))
        .collect()
}

/// Integrates from `initial` to `t_end`, calling `observer` with every state
/// including the initial one.
pub fn reduced_1d_evolve<T: Real>(
    config: &Reduced1DConfig<T>,
    flux: &dyn ScalarFlux<T>,
    initial: &dyn Fn(T) -> T,
    mut observer: impl FnMut(&Reduced1DState<T>),
) -> Result<Reduced1DState<T>> {
    config.validate()?;
    let n = config.n_cells;
    let dx = T::TAU() / T::from_usize(n).unwrap();
    let eps = config.viscosity;
    let two = T::lit(2.0);

    let mut state = Reduced1DState {
        n_cells: n,
        values: cell_averages(n, initial),
        time: T::zero(),
        viscosity: eps,
    };
    // w = exp(-2t) u is what the scheme updates
    let mut w = state.values.clone();
    observer(&state);

    while state.time < config.t_end {
        let t = state.time;
        let u = &state.values;
        let (lo, hi) = u.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
        let speed = flux.max_abs_derivative(lo, hi)?;
        let rate = t.exp() * speed / dx + two * eps / (dx * dx);
        let remaining = config.t_end - t;
        let mut tau = if rate > T::zero() { config.cfl / rate } else { remaining };
        if tau >= remaining * (T::one() - T::lit(1e-12)) {
            tau = remaining;
        }
        let lambda = tau * t.exp() / dx;
        let mu = tau * eps / (dx * dx);
        let g = eo_interfaces(flux, u)?;
        let damp = (-two * t).exp();
        for i in 0..n {
            let (l, r) = ((i + n - 1) % n, (i + 1) % n);
            let conv = lambda * (g[i] - g[l]);
            let diff = mu * (u[r] - two * u[i] + u[l]);
            w[i] -= damp * (conv - diff);
        }
        let t_next = if tau == remaining { config.t_end } else { t + tau };
        let grow = (two * t_next).exp();
        state.values = w.iter().map(|&x| x * grow).collect();
        state.time = t_next;
        if let Some(i) = state.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("1D oracle blew up in cell {i} at t={t_next}")));
        }
        observer(&state);
    }
    Ok(state)
}

/// Final state of [`reduced_1d_evolve`].
pub fn reduced_1d_run<T: Real>(
    config: &Reduced1DConfig<T>,
    flux: &dyn ScalarFlux<T>,
    initial: &dyn Fn(T) -> T,
) -> Result<Reduced1DState<T>> {
    reduced_1d_evolve(config, flux, initial, |_| {})
}

/// Every state of an inviscid run.
pub fn reduced_1d_trajectory<T: Real>(
    config: &Reduced1DConfig<T>,
    flux: &dyn ScalarFlux<T>,
    initial: &dyn Fn(T) -> T,
) -> Result<Vec<Reduced1DState<T>>> {
    let mut out = Vec::new();
    reduced_1d_evolve(config, flux, initial, |s| out.push(s.clone()))?;
    Ok(out)
}

/// Maximum positive violation of the discrete Kruzkov inequality over all
/// cells, steps and constants `k`.
///
/// Per cell and step, with `H_i = u_i - λ (g_{i+½} - g_{i-½})` the transport
/// part of the update and `Q` the Engquist-Osher flux applied to the entropy
/// pair `(|u - k|, sign(u - k)(f(u) - f(k)))`,
///
/// `R_i = |u_i^{k+1} - k| - |u_i - k| + λ (Q_{i+½} - Q_{i-½}) - sign(H_i - k)(u_i^{k+1} - H_i)`,
///
/// where the last term is the growth `-u ∇_Γ·v = 2u` integrated over the
/// step. The reported value is `max Δφ · R_i`, clipped at zero.
pub fn entropy_residual_1d<T: Real>(
    trajectory: &[Reduced1DState<T>],
    flux: &dyn ScalarFlux<T>,
    k_values: &[T],
) -> Result<T> {
    if let Some(s) = trajectory.iter().find(|s| s.viscosity != T::zero()) {
        return Err(Error::Domain(format!(
            "entropy residual needs an inviscid run, got viscosity {}",
            s.viscosity
        )));
    }
    let mut worst = T::zero();
    for pair in trajectory.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let n = a.n_cells;
        let dx = a.cell_width();
        let tau = b.time - a.time;
        let lambda = tau * a.time.exp() / dx;
        let u = &a.values;
        let g = eo_interfaces(flux, u)?;
        for &k in k_values {
            let q: Vec<T> = (0..n)
                .map(|i| {
                    let (p, r) = (u[i], u[(i + 1) % n]);
                    Ok(numerical_flux_eo(flux, p.max(k), r.max(k))? - numerical_flux_eo(flux, p.min(k), r.min(k))?)
                })
                .collect::<Result<_>>()?;
            for i in 0..n {
                let l = (i + n - 1) % n;
                let h = u[i] - lambda * (g[i] - g[l]);
                let next = b.values[i];
                let source = sign(h - k) * (next - h);
                let r = (next - k).abs() - (u[i] - k).abs() + lambda * (q[i] - q[l]) - source;
                worst = worst.max(dx * r);
            }
        }
    }
    Ok(worst)
}

fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `k` values equispaced over `[min u, max u]` of the whole trajectory.
pub fn kruzkov_constants<T: Real>(trajectory: &[Reduced1DState<T>], count: usize) -> Vec<T> {
    let (lo, hi) = trajectory
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold((T::infinity(), T::neg_infinity()), |(a, b), x| (a.min(x), b.max(x)));
    if count <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::from_usize(count - 1).unwrap();
    (0..count).map(|i| lo + step * T::from_usize(i).unwrap()).collect()
}

/// `Σ_i Δφ |a_i - b_i|`.
pub fn l1_distance<T: Real>(a: &Reduced1DState<T>, b: &[T]) -> T {
    let dx = a.cell_width();
    neumaier_sum(a.values.iter().zip(b).map(|(&x, &y)| dx * (x - y).abs()))
}
