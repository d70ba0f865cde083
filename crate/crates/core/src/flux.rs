//! Tangential flux fields `f((x, t), u)` and their `u`-derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::MeshSnapshot;
use crate::motion::NormalField;
use crate::num::{Real, Vec3};

/// Vector field evaluator `(x, t, u) -> R^3`.
pub type FieldFn<T> = Arc<dyn Fn(Vec3<T>, T, T) -> Vec3<T> + Send + Sync>;

/// How a flux depends on `u` at a fixed point. Polynomial dependence lets the
/// Engquist-Osher splitting be done in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UDependence {
    /// `f(x, t, u) = a(x, t) + u b(x, t)`
    Linear,
    /// `f(x, t, u) = a + u b + u^2 c`
    Quadratic,
    General,
}

/// Scalar potential `h(x, t, u)` given through its spatial gradient.
#[derive(Clone)]
pub struct Potential<T> {
    pub grad: FieldFn<T>,
    /// `∂/∂u ∇h`
    pub grad_du: FieldFn<T>,
    pub dependence: UDependence,
    /// Bound on `|∂/∂u ∇h|` over `|u| <= r`, as a function of `r`.
    pub grad_du_bound: Option<Arc<dyn Fn(T) -> T + Send + Sync>>,
}

impl<T: Real> Potential<T> {
    /// `h = coefficient * x3 * u^2`, so `∇h = (0, 0, coefficient u^2)`.
    pub fn vertical_quadratic(coefficient: T) -> Self {
        let two = T::lit(2.0);
        Potential {
            grad: Arc::new(move |_x, _t, u| Vec3::new(T::zero(), T::zero(), coefficient * u * u)),
            grad_du: Arc::new(move |_x, _t, u| Vec3::new(T::zero(), T::zero(), two * coefficient * u)),
            dependence: UDependence::Quadratic,
            grad_du_bound: Some(Arc::new(move |r| two * coefficient.abs() * r)),
        }
    }

    /// The default potential `h(x, t, u) = -20 x3 u^2`.
    pub fn default_vertical() -> Self {
        Self::vertical_quadratic(T::lit(-20.0))
    }
}

/// A flux supplied by the user.
#[derive(Clone)]
pub struct CustomFlux<T> {
    pub eval: FieldFn<T>,
    pub eval_du: FieldFn<T>,
    pub dependence: UDependence,
    pub lipschitz: Option<Arc<dyn Fn(T, T) -> T + Send + Sync>>,
}

#[derive(Clone)]
pub enum FluxKind<T> {
    /// `2π u (-x̂2, x̂1, 0)` with `x̂ = x / |x|`.
    RotationLinear,
    /// `α (u^2 / 2) P(x, t) a` with `P = I - ν νᵀ`.
    ProjectedBurgers { direction: Vec3<T>, strength: T },
    /// `ν(x, t) × ∇h(x, t, u)`.
    PotentialDivFree(Potential<T>),
    Custom(CustomFlux<T>),
}

/// A tangential flux field together with the analytic surface normal it is
/// tangent to.
#[derive(Clone)]
pub struct FluxModel<T> {
    kind: FluxKind<T>,
    normal: NormalField<T>,
}

impl<T> fmt::Debug for FluxModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FluxModel({}, {:?})", self.name(), self.normal)
    }
}

impl<T> FluxModel<T> {
    pub fn name(&self) -> &'static str {
        match self.kind {
            FluxKind::RotationLinear => "rotation_linear",
            FluxKind::ProjectedBurgers { .. } => "projected_burgers",
            FluxKind::PotentialDivFree(_) => "potential_divfree",
            FluxKind::Custom(_) => "custom",
        }
    }

    pub fn kind(&self) -> &FluxKind<T> {
        &self.kind
    }
}

impl<T: Real> FluxModel<T> {
    /// Rotation about the x3 axis with unit angular speed 2π; tangent to
    /// every sphere centered at the origin.
    pub fn rotation_linear() -> Self {
        FluxModel {
            kind: FluxKind::RotationLinear,
            normal: NormalField::Radial,
        }
    }

    pub fn projected_burgers(direction: Vec3<T>, strength: T, normal: NormalField<T>) -> Result<Self> {
        let n = direction.norm();
        if !((n - T::one()).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(4.0))) {
            return Err(Error::Config(format!(
                "flux.direction must be a unit vector, |a| = {n}"
            )));
        }
        Ok(FluxModel {
            kind: FluxKind::ProjectedBurgers { direction, strength },
            normal,
        })
    }

    pub fn potential_divfree(potential: Potential<T>, normal: NormalField<T>) -> Self {
        FluxModel {
            kind: FluxKind::PotentialDivFree(potential),
            normal,
        }
    }

    pub fn custom(flux: CustomFlux<T>, normal: NormalField<T>) -> Self {
        FluxModel {
            kind: FluxKind::Custom(flux),
            normal,
        }
    }

    /// `f ≡ 0`.
    pub fn zero(normal: NormalField<T>) -> Self {
        let zero: FieldFn<T> = Arc::new(|_, _, _| Vec3::zero());
        Self::custom(
            CustomFlux {
                eval: zero.clone(),
                eval_du: zero,
                dependence: UDependence::Linear,
                lipschitz: Some(Arc::new(|_, _| T::zero())),
            },
            normal,
        )
    }

    pub fn normal_field(&self) -> &NormalField<T> {
        &self.normal
    }

    #[inline]
    pub fn normal(&self, x: Vec3<T>, t: T) -> Vec3<T> {
        self.normal.at(x, t)
    }

    pub fn dependence(&self) -> UDependence {
        match &self.kind {
            FluxKind::RotationLinear => UDependence::Linear,
            FluxKind::ProjectedBurgers { .. } => UDependence::Quadratic,
            FluxKind::PotentialDivFree(p) => p.dependence,
            FluxKind::Custom(c) => c.dependence,
        }
    }

    /// `f(x, t, u)`.
    pub fn eval(&self, x: Vec3<T>, t: T, u: T) -> Result<Vec3<T>> {
        match &self.kind {
            FluxKind::RotationLinear => Ok(rotation_field(x)? * (T::lit(2.0 * PI) * u)),
            FluxKind::ProjectedBurgers { direction, strength } => {
                let pa = project(self.normal(x, t), *direction);
                Ok(pa * (*strength * u * u * T::lit(0.5)))
            }
            FluxKind::PotentialDivFree(p) => Ok(self.normal(x, t).cross((p.grad)(x, t, u))),
            FluxKind::Custom(c) => Ok((c.eval)(x, t, u)),
        }
    }

    /// `∂f/∂u (x, t, u)`.
    pub fn eval_du(&self, x: Vec3<T>, t: T, u: T) -> Result<Vec3<T>> {
        match &self.kind {
            FluxKind::RotationLinear => Ok(rotation_field(x)? * T::lit(2.0 * PI)),
            FluxKind::ProjectedBurgers { direction, strength } => {
                let pa = project(self.normal(x, t), *direction);
                Ok(pa * (*strength * u))
            }
            FluxKind::PotentialDivFree(p) => Ok(self.normal(x, t).cross((p.grad_du)(x, t, u))),
            FluxKind::Custom(c) => Ok((c.eval_du)(x, t, u)),
        }
    }

    /// Upper bound for `|∂f/∂u|` over `u ∈ [u_min, u_max]` and all points,
    /// when one is known in closed form.
    pub fn lipschitz_bound(&self, u_min: T, u_max: T) -> Option<T> {
        let r = u_min.abs().max(u_max.abs());
        match &self.kind {
            FluxKind::RotationLinear => Some(T::lit(2.0 * PI)),
            FluxKind::ProjectedBurgers { strength, .. } => Some(strength.abs() * r),
            FluxKind::PotentialDivFree(p) => p.grad_du_bound.as_ref().map(|b| b(r)),
            FluxKind::Custom(c) => c.lipschitz.as_ref().map(|l| l(u_min, u_max)),
        }
    }
}

/// `(-x̂2, x̂1, 0)`.
fn rotation_field<T: Real>(x: Vec3<T>) -> Result<Vec3<T>> {
    let n = x.norm();
    if !(n > T::zero()) {
        return Err(Error::Domain("rotation flux evaluated at the origin".into()));
    }
    Ok(Vec3::new(-x.y() / n, x.x() / n, T::zero()))
}

/// `(I - ν νᵀ) a`.
#[inline]
pub fn project<T: Real>(normal: Vec3<T>, a: Vec3<T>) -> Vec3<T> {
    a - normal * normal.dot(a)
}

/// Per-cell residual `Σ_e |e| f(m_e, t, u) · ν_e` over the flat-triangle
/// edges of `snapshot`, with `u` frozen.
pub fn discrete_divergence_check<T: Real>(
    model: &FluxModel<T>,
    snapshot: &MeshSnapshot<T>,
    u: T,
    t: T,
) -> Result<Vec<T>> {
    (0..snapshot.num_cells())
        .map(|j| {
            let mut sum = T::zero();
            for e in 0..3 {
                let f = model.eval(snapshot.edge_midpoint[j][e], t, u)?;
                sum += snapshot.edge_length[j][e] * f.dot(snapshot.edge_conormal[j][e]);
            }
            Ok(sum)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_icosphere, MeshSnapshot, ReferenceMesh};

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn rotation_examples() {
        let f = FluxModel::<f64>::rotation_linear();
        let t: f64 = 0.4;
        let x = v((-t).exp(), 0.0, 0.0);
        let val = f.eval(x, t, 1.0).unwrap();
        assert!((val - v(0.0, 2.0 * PI, 0.0)).norm() < 1e-15);
        assert_eq!(f.eval(x, t, 0.0).unwrap(), Vec3::zero());
        let p = v(0.3, -0.5, 0.2);
        assert!(f.eval(p, t, 3.0).unwrap().dot(p).abs() < 1e-15);
        assert!(matches!(f.eval(Vec3::zero(), t, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rotation_is_linear_in_u() {
        let f = FluxModel::<f64>::rotation_linear();
        let p = v(0.3, -0.5, 0.2);
        let base = f.eval(p, 0.0, 1.25).unwrap();
        assert_eq!(f.eval(p, 0.0, 2.5).unwrap(), base * 2.0);
    }

    #[test]
    fn projected_burgers_examples() {
        let a = Vec3::axis(0);
        let f = FluxModel::<f64>::projected_burgers(a, 1.0, NormalField::Radial).unwrap();
        // ν = a at (1, 0, 0)
        assert!(f.eval(v(1.0, 0.0, 0.0), 0.0, 3.0).unwrap().norm() < 1e-15);
        // ν ⟂ a at (0, 1, 0)
        assert_eq!(f.eval(v(0.0, 1.0, 0.0), 0.0, 2.0).unwrap(), a * 2.0);
        assert!(FluxModel::<f64>::projected_burgers(v(1.0, 1.0, 0.0), 1.0, NormalField::Radial).is_err());
    }

    #[test]
    fn potential_examples() {
        let f = FluxModel::<f64>::potential_divfree(Potential::default_vertical(), NormalField::Radial);
        assert_eq!(f.eval(v(0.0, 0.0, 1.0), 0.0, 1.7).unwrap(), Vec3::zero());
        assert_eq!(f.eval(v(1.0, 0.0, 0.0), 0.0, 1.0).unwrap(), v(0.0, 20.0, 0.0));
    }

    #[test]
    fn u_independent_potential_has_zero_derivative() {
        let p = Potential {
            grad: Arc::new(|x: Vec3<f64>, _t, _u| v(x.y(), 0.0, 1.0)),
            grad_du: Arc::new(|_, _, _| Vec3::zero()),
            dependence: UDependence::Linear,
            grad_du_bound: None,
        };
        let f = FluxModel::potential_divfree(p, NormalField::Radial);
        assert_eq!(f.eval_du(v(0.6, 0.0, 0.8), 0.3, 5.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn zero_flux_has_zero_residual() {
        let mesh = std::sync::Arc::new(build_icosphere::<f64>(1).unwrap());
        let snap = MeshSnapshot::from_vertices(&mesh, mesh.vertices().to_vec(), 0.0).unwrap();
        let r = discrete_divergence_check(&FluxModel::zero(NormalField::Radial), &snap, 1.0, 0.0).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_in_plane_flux_on_flat_triangle_has_zero_residual() {
        let verts = vec![v(0.1, 0.0, 0.0), v(1.0, 0.2, 0.0), v(0.3, 0.9, 0.0)];
        let mesh = std::sync::Arc::new(ReferenceMesh::new(verts.clone(), vec![[0, 1, 2]]).unwrap());
        let snap = MeshSnapshot::from_vertices(&mesh, verts, 0.0).unwrap();
        let a = v(0.7, -0.3, 0.0);
        let flux = FluxModel::custom(
            CustomFlux {
                eval: Arc::new(move |_, _, u| a * u),
                eval_du: Arc::new(move |_, _, _| a),
                dependence: UDependence::Linear,
                lipschitz: None,
            },
            NormalField::Custom(Arc::new(|_, _| Vec3::axis(2))),
        );
        let r = discrete_divergence_check(&flux, &snap, 2.0, 0.0).unwrap();
        assert!(r[0].abs() < 1e-15);
    }
}
