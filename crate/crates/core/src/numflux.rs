//! Edge flux functions `c(u) = ∫_e f(·, t, u) · ν` and the numerical fluxes
//! built from them.
//!
//! The Engquist-Osher splitting is evaluated in closed form when `c` is a
//! polynomial of degree at most two in `u`, which covers all built-in flux
//! fields, and by composite Gauss quadrature otherwise.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::flux::{FluxModel, UDependence};
use crate::num::{Real, Vec3};

/// Edge quadrature rule on the straight edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Quadrature {
    #[default]
    Midpoint,
    Gauss2,
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrature::Midpoint => "midpoint",
            Quadrature::Gauss2 => "gauss2",
        })
    }
}

impl FromStr for Quadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Quadrature::Midpoint),
            "gauss2" => Ok(Quadrature::Gauss2),
            other => Err(Error::Config(format!("unknown quadrature '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NumericalFlux {
    #[default]
    EngquistOsher,
    LocalLaxFriedrichs,
}

impl fmt::Display for NumericalFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericalFlux::EngquistOsher => "engquist_osher",
            NumericalFlux::LocalLaxFriedrichs => "local_lax_friedrichs",
        })
    }
}

impl FromStr for NumericalFlux {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "engquist_osher" => Ok(NumericalFlux::EngquistOsher),
            "local_lax_friedrichs" => Ok(NumericalFlux::LocalLaxFriedrichs),
            other => Err(Error::Config(format!("unknown numerical flux '{other}'"))),
        }
    }
}

/// A scalar flux function `c(u)` with derivative and Engquist-Osher parts.
pub trait ScalarFlux<T: Real> {
    fn value(&self, u: T) -> Result<T>;
    fn derivative(&self, u: T) -> Result<T>;

    /// `c(0)`.
    fn offset(&self) -> Result<T> {
        self.value(T::zero())
    }

    /// `∫_0^u max(c'(s), 0) ds`.
    fn rising(&self, u: T) -> Result<T>;

    /// `∫_0^u min(c'(s), 0) ds`.
    fn falling(&self, u: T) -> Result<T>;

    /// `max |c'|` over the interval spanned by `a` and `b`.
    fn max_abs_derivative(&self, a: T, b: T) -> Result<T>;
}

/// `(c⁺(u), c⁻(u))` with `c⁺(u) = c(0) + ∫_0^u max(c', 0)` and
/// `c⁻(u) = ∫_0^u min(c', 0)`.
pub fn eo_split<T: Real, C: ScalarFlux<T> + ?Sized>(c: &C, u: T) -> Result<(T, T)> {
    Ok((c.offset()? + c.rising(u)?, c.falling(u)?))
}

/// Engquist-Osher flux `g(u, v) = c⁺(u) + c⁻(v)`.
///
/// Evaluated as `c(0) + (∫⁺(u) + ∫⁻(v))`; with this grouping the flux of the
/// negated function satisfies `g̃(v, u) = -g(u, v)` bit for bit.
pub fn numerical_flux_eo<T: Real, C: ScalarFlux<T> + ?Sized>(c: &C, u_inside: T, u_outside: T) -> Result<T> {
    Ok(c.offset()? + (c.rising(u_inside)? + c.falling(u_outside)?))
}

/// Local Lax-Friedrichs flux `½(c(u) + c(v)) - ½ λ (v - u)`.
pub fn numerical_flux_llf<T: Real, C: ScalarFlux<T> + ?Sized>(
    c: &C,
    u_inside: T,
    u_outside: T,
    local_bound: T,
) -> Result<T> {
    if !(local_bound >= T::zero()) {
        return Err(Error::Domain(format!("negative dissipation bound {local_bound}")));
    }
    let half = T::lit(0.5);
    Ok(half * (c.value(u_inside)? + c.value(u_outside)?) - half * local_bound * (u_outside - u_inside))
}

/// Dispatches on [`NumericalFlux`], using the local derivative bound for LLF.
pub fn numerical_flux<T: Real, C: ScalarFlux<T> + ?Sized>(
    kind: NumericalFlux,
    c: &C,
    u_inside: T,
    u_outside: T,
) -> Result<T> {
    match kind {
        NumericalFlux::EngquistOsher => numerical_flux_eo(c, u_inside, u_outside),
        NumericalFlux::LocalLaxFriedrichs => {
            let lambda = c.max_abs_derivative(u_inside, u_outside)?;
            numerical_flux_llf(c, u_inside, u_outside, lambda)
        }
    }
}

/// `c(u) = c0 + c1 u + c2 u^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFlux<T> {
    pub c0: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Real> QuadraticFlux<T> {
    pub fn linear(c0: T, slope: T) -> Self {
        QuadraticFlux { c0, c1: slope, c2: T::zero() }
    }

    pub fn negated(self) -> Self {
        QuadraticFlux {
            c0: -self.c0,
            c1: -self.c1,
            c2: -self.c2,
        }
    }

    #[inline]
    fn slope(&self, s: T) -> T {
        self.c1 + (self.c2 + self.c2) * s
    }

    /// `c(b) - c(a)` without the constant term.
    #[inline]
    fn increment(&self, a: T, b: T) -> T {
        (b - a) * (self.c1 + self.c2 * (a + b))
    }

    /// Sum of increments over the pieces of `[0, u]` where `keep(c')` holds,
    /// oriented like `∫_0^u`.
    fn sign_split(&self, u: T, keep: impl Fn(T) -> bool) -> T {
        let (lo, hi) = if u >= T::zero() { (T::zero(), u) } else { (u, T::zero()) };
        let mut cuts = [lo, hi, hi];
        let mut n = 2;
        if self.c2 != T::zero() {
            let root = -self.c1 / (self.c2 + self.c2);
            if root > lo && root < hi {
                cuts = [lo, root, hi];
                n = 3;
            }
        }
        let half = T::lit(0.5);
        let mut total = T::zero();
        for w in cuts[..n].windows(2) {
            let (a, b) = (w[0], w[1]);
            if keep(self.slope((a + b) * half)) {
                total += self.increment(a, b);
            }
        }
        if u >= T::zero() {
            total
        } else {
            -total
        }
    }
}

impl<T: Real> ScalarFlux<T> for QuadraticFlux<T> {
    #[inline]
    fn value(&self, u: T) -> Result<T> {
        Ok(self.c0 + u * (self.c1 + self.c2 * u))
    }

    #[inline]
    fn derivative(&self, u: T) -> Result<T> {
        Ok(self.slope(u))
    }

    #[inline]
    fn offset(&self) -> Result<T> {
        Ok(self.c0)
    }

    fn rising(&self, u: T) -> Result<T> {
        Ok(self.sign_split(u, |d| d > T::zero()))
    }

    fn falling(&self, u: T) -> Result<T> {
        Ok(self.sign_split(u, |d| d < T::zero()))
    }

    fn max_abs_derivative(&self, a: T, b: T) -> Result<T> {
        Ok(self.slope(a).abs().max(self.slope(b).abs()))
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], four points.
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_2),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

const GAUSS_PANELS: usize = 8;

/// `∫_0^u g(c'(s)) ds` by 8 panels of 4-point Gauss-Legendre (32 nodes).
fn composite_gauss<T: Real>(u: T, mut integrand: impl FnMut(T) -> Result<T>) -> Result<T> {
    if u == T::zero() {
        return Ok(T::zero());
    }
    let h = u / T::from_usize(GAUSS_PANELS).unwrap();
    let half = h * T::lit(0.5);
    let mut sum = T::zero();
    for p in 0..GAUSS_PANELS {
        let mid = h * (T::from_usize(p).unwrap() + T::lit(0.5));
        for &(x, w) in &GL4 {
            sum += T::lit(w) * integrand(mid + half * T::lit(x))?;
        }
    }
    let out = sum * half;
    if !out.is_finite() {
        return Err(Error::Numerical(format!("splitting integral to u={u} is not finite")));
    }
    Ok(out)
}

/// A general flux function given by closures, split by quadrature.
pub struct GeneralFlux<V, D> {
    pub value: V,
    pub derivative: D,
}

impl<T, V, D> ScalarFlux<T> for GeneralFlux<V, D>
where
    T: Real,
    V: Fn(T) -> Result<T>,
    D: Fn(T) -> Result<T>,
{
    fn value(&self, u: T) -> Result<T> {
        (self.value)(u)
    }

    fn derivative(&self, u: T) -> Result<T> {
        (self.derivative)(u)
    }

    fn rising(&self, u: T) -> Result<T> {
        composite_gauss(u, |s| Ok(finite((self.derivative)(s)?, s)?.max(T::zero())))
    }

    fn falling(&self, u: T) -> Result<T> {
        composite_gauss(u, |s| Ok(finite((self.derivative)(s)?, s)?.min(T::zero())))
    }

    fn max_abs_derivative(&self, a: T, b: T) -> Result<T> {
        sampled_max_abs(a, b, |s| (self.derivative)(s))
    }
}

fn finite<T: Real>(d: T, s: T) -> Result<T> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Numerical(format!("flux derivative is {d} at u={s}")))
    }
}

fn sampled_max_abs<T: Real>(a: T, b: T, d: impl Fn(T) -> Result<T>) -> Result<T> {
    const SAMPLES: usize = 33;
    let (lo, hi) = (a.min(b), a.max(b));
    let step = (hi - lo) / T::from_usize(SAMPLES - 1).unwrap();
    let mut m = T::zero();
    for i in 0..SAMPLES {
        m = m.max(d(lo + step * T::from_usize(i).unwrap())?.abs());
    }
    Ok(m)
}

/// Straight edge prepared for flux integration: quadrature points and weights
/// (weights already include the edge length) and the conormal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeStencil<T> {
    pub points: [Vec3<T>; 2],
    pub weights: [T; 2],
    pub n_points: usize,
    pub conormal: Vec3<T>,
}

impl<T: Real> EdgeStencil<T> {
    pub fn new(p_a: Vec3<T>, p_b: Vec3<T>, conormal: Vec3<T>, rule: Quadrature) -> Self {
        let length = (p_b - p_a).norm();
        let mid = p_a.midpoint(p_b);
        match rule {
            Quadrature::Midpoint => EdgeStencil {
                points: [mid, mid],
                weights: [length, T::zero()],
                n_points: 1,
                conormal,
            },
            Quadrature::Gauss2 => {
                let off = (p_b - p_a) * (T::lit(0.5) / T::lit(3.0).sqrt());
                let half = length * T::lit(0.5);
                EdgeStencil {
                    points: [mid - off, mid + off],
                    weights: [half, half],
                    n_points: 2,
                    conormal,
                }
            }
        }
    }

    fn integrate(&self, mut g: impl FnMut(Vec3<T>) -> Result<Vec3<T>>) -> Result<T> {
        let mut sum = T::zero();
        for q in 0..self.n_points {
            sum += self.weights[q] * g(self.points[q])?.dot(self.conormal);
        }
        Ok(sum)
    }
}

/// `c(u)` for one edge and time level.
pub enum EdgeFlux<'a, T> {
    Polynomial(QuadraticFlux<T>),
    General {
        model: &'a FluxModel<T>,
        stencil: EdgeStencil<T>,
        time: T,
    },
}

impl<'a, T: Real> EdgeFlux<'a, T> {
    /// Builds `c(u) = Σ_q w_q f(x_q, t, u) · ν_e`. Linear and quadratic flux
    /// models are reduced to polynomial coefficients.
    pub fn new(model: &'a FluxModel<T>, stencil: EdgeStencil<T>, time: T) -> Result<Self> {
        let c = |u: T| stencil.integrate(|x| model.eval(x, time, u));
        let dc = |u: T| stencil.integrate(|x| model.eval_du(x, time, u));
        Ok(match model.dependence() {
            UDependence::Linear => EdgeFlux::Polynomial(QuadraticFlux::linear(c(T::zero())?, dc(T::zero())?)),
            UDependence::Quadratic => {
                let d0 = dc(T::zero())?;
                let d1 = dc(T::one())?;
                EdgeFlux::Polynomial(QuadraticFlux {
                    c0: c(T::zero())?,
                    c1: d0,
                    c2: (d1 - d0) * T::lit(0.5),
                })
            }
            UDependence::General => EdgeFlux::General { model, stencil, time },
        })
    }

    fn general(&self) -> Option<(&FluxModel<T>, &EdgeStencil<T>, T)> {
        match self {
            EdgeFlux::General { model, stencil, time } => Some((model, stencil, *time)),
            EdgeFlux::Polynomial(_) => None,
        }
    }
}

impl<'a, T: Real> ScalarFlux<T> for EdgeFlux<'a, T> {
    fn value(&self, u: T) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => p.value(u),
            EdgeFlux::General { model, stencil, time } => stencil.integrate(|x| model.eval(x, *time, u)),
        }
    }

    fn derivative(&self, u: T) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => p.derivative(u),
            EdgeFlux::General { model, stencil, time } => stencil.integrate(|x| model.eval_du(x, *time, u)),
        }
    }

    fn offset(&self) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => Ok(p.c0),
            EdgeFlux::General { .. } => self.value(T::zero()),
        }
    }

    fn rising(&self, u: T) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => p.rising(u),
            EdgeFlux::General { .. } => {
                let (m, s, t) = self.general().unwrap();
                composite_gauss(u, |v| Ok(finite(s.integrate(|x| m.eval_du(x, t, v))?, v)?.max(T::zero())))
            }
        }
    }

    fn falling(&self, u: T) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => p.falling(u),
            EdgeFlux::General { .. } => {
                let (m, s, t) = self.general().unwrap();
                composite_gauss(u, |v| Ok(finite(s.integrate(|x| m.eval_du(x, t, v))?, v)?.min(T::zero())))
            }
        }
    }

    fn max_abs_derivative(&self, a: T, b: T) -> Result<T> {
        match self {
            EdgeFlux::Polynomial(p) => p.max_abs_derivative(a, b),
            EdgeFlux::General { .. } => sampled_max_abs(a, b, |s| self.derivative(s)),
        }
    }
}

/// Edge flux function for the straight edge `p_a p_b` with conormal `ν_e`.
pub fn edge_flux_function<'a, T: Real>(
    model: &'a FluxModel<T>,
    p_a: Vec3<T>,
    p_b: Vec3<T>,
    conormal: Vec3<T>,
    t: T,
    rule: Quadrature,
) -> Result<EdgeFlux<'a, T>> {
    EdgeFlux::new(model, EdgeStencil::new(p_a, p_b, conormal, rule), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::NormalField;

    fn quad(c0: f64, c1: f64, c2: f64) -> QuadraticFlux<f64> {
        QuadraticFlux { c0, c1, c2 }
    }

    #[test]
    fn positive_linear_is_upwind() {
        let c = quad(0.0, 2.0, 0.0);
        for &u in &[-1.5, 0.0, 0.3, 4.0] {
            let (p, m) = eo_split(&c, u).unwrap();
            assert_eq!((p, m), (2.0 * u, 0.0));
            assert_eq!(numerical_flux_eo(&c, u, 17.0).unwrap(), 2.0 * u);
        }
    }

    #[test]
    fn negative_linear_is_downwind() {
        let c = quad(0.0, -1.5, 0.0);
        assert_eq!(numerical_flux_eo(&c, 0.7, -2.0).unwrap(), 3.0);
    }

    #[test]
    fn convex_quadratic_example() {
        let c = quad(0.0, 0.0, 1.0);
        assert_eq!(numerical_flux_eo(&c, 1.0, -1.0).unwrap(), 2.0);
        let (p, m) = eo_split(&c, -3.0).unwrap();
        assert_eq!((p, m), (0.0, 9.0));
    }

    #[test]
    fn split_sums_to_value_at_zero() {
        let c = quad(0.3, -1.1, 0.7);
        let (p, m) = eo_split(&c, 0.0).unwrap();
        assert_eq!(p + m, c.value(0.0).unwrap());
    }

    #[test]
    fn split_with_interior_root() {
        // c' = -1 + 2u vanishes at 0.5
        let c = quad(0.0, -1.0, 1.0);
        let (p, m) = eo_split(&c, 2.0).unwrap();
        assert!((p - 2.25).abs() < 1e-15);
        assert!((m + 0.25).abs() < 1e-15);
    }

    #[test]
    fn llf_examples() {
        let zero = quad(0.0, 0.0, 0.0);
        assert_eq!(numerical_flux_llf(&zero, 3.0, 1.0, 1.0).unwrap(), 1.0);
        let c = quad(0.0, -2.5, 0.0);
        for &(u, v) in &[(1.0, 2.0), (-0.3, 0.8), (4.0, -1.0)] {
            let llf = numerical_flux_llf(&c, u, v, 2.5).unwrap();
            let eo = numerical_flux_eo(&c, u, v).unwrap();
            assert!((llf - eo).abs() < 1e-14);
        }
        assert!(numerical_flux_llf(&c, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn general_path_matches_polynomial() {
        let p = quad(0.2, -0.4, 0.9);
        let g = GeneralFlux {
            value: |u: f64| p.value(u),
            derivative: |u: f64| p.derivative(u),
        };
        for &(u, v) in &[(1.3, -0.7), (-2.0, 0.4), (0.1, 0.1)] {
            let a = numerical_flux_eo(&p, u, v).unwrap();
            let b = numerical_flux_eo(&g, u, v).unwrap();
            // the kink of max(c', 0) limits the quadrature to a few digits
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn general_path_is_exact_without_sign_change() {
        // c' = 1 + 2u > 0 on [0, 0.4]
        let p = quad(0.0, 1.0, 1.0);
        let g = GeneralFlux {
            value: |u: f64| p.value(u),
            derivative: |u: f64| p.derivative(u),
        };
        assert!((g.rising(0.4).unwrap() - p.rising(0.4).unwrap()).abs() < 1e-15);
        assert_eq!(g.falling(0.4).unwrap(), 0.0);
    }

    #[test]
    fn general_path_reports_non_finite() {
        let g = GeneralFlux {
            value: |u: f64| Ok(u.sqrt()),
            derivative: |u: f64| Ok(0.5 / u.sqrt()),
        };
        assert!(matches!(g.rising(-1.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn edge_flux_of_constant_field_is_exact() {
        let a: Vec3<f64> = Vec3::new(0.3, -1.2, 0.5);
        let model = FluxModel::custom(
            crate::flux::CustomFlux {
                eval: std::sync::Arc::new(move |_, _, u| a * u),
                eval_du: std::sync::Arc::new(move |_, _, _| a),
                dependence: UDependence::Linear,
                lipschitz: None,
            },
            NormalField::Radial,
        );
        let (pa, pb) = (Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0));
        let nu = Vec3::new(1.0, 0.0, 0.0);
        for rule in [Quadrature::Midpoint, Quadrature::Gauss2] {
            let c = edge_flux_function(&model, pa, pb, nu, 0.0, rule).unwrap();
            assert!((c.value(2.0).unwrap() - 2.0 * a.dot(nu)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_field_gives_zero_edge_flux() {
        let model = FluxModel::<f64>::zero(NormalField::Radial);
        let c = edge_flux_function(&model, Vec3::axis(0), Vec3::axis(1), Vec3::axis(2), 0.0, Quadrature::Gauss2).unwrap();
        assert_eq!(c.value(5.0).unwrap(), 0.0);
        assert_eq!(numerical_flux_eo(&c, 1.0, -3.0).unwrap(), 0.0);
    }

    #[test]
    fn parse_round_trip() {
        for q in [Quadrature::Midpoint, Quadrature::Gauss2] {
            assert_eq!(q.to_string().parse::<Quadrature>().unwrap(), q);
        }
        for n in [NumericalFlux::EngquistOsher, NumericalFlux::LocalLaxFriedrichs] {
            assert_eq!(n.to_string().parse::<NumericalFlux>().unwrap(), n);
        }
    }
}
