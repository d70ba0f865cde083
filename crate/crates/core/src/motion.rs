//! Prescribed surface motions `Φ(·, t)` with `Φ(·, 0) = Id`.
//!
//! Every motion acts on points of its reference surface `Γ0`. The built-in
//! reference surfaces are images of the unit sphere under
//! [`MotionMap::place_on_reference`]: the sphere itself, or the unpinched
//! ellipsoid. Each motion also knows the unit normal of the analytic moved
//! surface, used by the flux models.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::ReferenceMesh;
use crate::num::{Real, Vec3};

/// Pointwise evaluator `(x0, t) -> Φ(x0, t)`.
pub type PointMap<T> = Arc<dyn Fn(Vec3<T>, T) -> Vec3<T> + Send + Sync>;

/// Parameters of the pinching ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinchParams<T> {
    pub semi_axes: [T; 3],
    /// Relative waist contraction reached at `end_time`, in `[0, 1)`.
    pub pinch_amplitude: T,
    pub pinch_width: T,
    pub end_time: T,
}

impl<T: Real> PinchParams<T> {
    /// Axes (2, 1, 1), amplitude 0.6, width 0.5.
    pub fn with_end_time(end_time: T) -> Self {
        PinchParams {
            semi_axes: [T::lit(2.0), T::one(), T::one()],
            pinch_amplitude: T::lit(0.6),
            pinch_width: T::lit(0.5),
            end_time,
        }
    }

    /// Waist factor at ambient abscissa `y1`.
    #[inline]
    pub fn waist(&self, y1: T, t: T) -> T {
        let r = y1 / self.pinch_width;
        T::one() - self.pinch_amplitude * (t / self.end_time) * (-r * r).exp()
    }

    #[inline]
    fn waist_dy1(&self, y1: T, t: T) -> T {
        let w2 = self.pinch_width * self.pinch_width;
        self.pinch_amplitude * (t / self.end_time) * (-(y1 * y1) / w2).exp() * (T::lit(2.0) * y1 / w2)
    }

    fn validate(&self) -> Result<()> {
        let a = self.pinch_amplitude;
        if !(a >= T::zero() && a < T::one()) {
            return Err(Error::Config(format!(
                "motion.pinch_amplitude must lie in [0, 1), got {a}"
            )));
        }
        if !(self.pinch_width > T::zero()) {
            return Err(Error::Config(format!(
                "motion.pinch_width must be positive, got {}",
                self.pinch_width
            )));
        }
        if self.semi_axes.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::Config("motion.semi_axes must be positive".into()));
        }
        if !(self.end_time > T::zero()) {
            return Err(Error::Config("motion end time must be positive".into()));
        }
        Ok(())
    }
}

/// Unit normal field of the analytic surface `Γ(t)`, extended to a
/// neighborhood of it.
#[derive(Clone)]
pub enum NormalField<T> {
    /// `x / |x|`, for spheres centered at the origin.
    Radial,
    PinchingEllipsoid(PinchParams<T>),
    Custom(Arc<dyn Fn(Vec3<T>, T) -> Vec3<T> + Send + Sync>),
}

impl<T: Real> NormalField<T> {
    pub fn at(&self, y: Vec3<T>, t: T) -> Vec3<T> {
        match self {
            NormalField::Radial => y / y.norm(),
            NormalField::PinchingEllipsoid(p) => {
                // gradient of (y1/a1)^2 + ((y2/a2)^2 + (y3/a3)^2) / s(y1,t)^2 - 1
                let [a1, a2, a3] = p.semi_axes;
                let s = p.waist(y.x(), t);
                let q = (y.y() / a2).powi(2) + (y.z() / a3).powi(2);
                let two = T::lit(2.0);
                let g1 = two * y.x() / (a1 * a1) - two * q * p.waist_dy1(y.x(), t) / (s * s * s);
                let g2 = two * y.y() / (a2 * a2 * s * s);
                let g3 = two * y.z() / (a3 * a3 * s * s);
                let g = Vec3::new(g1, g2, g3);
                g / g.norm()
            }
            NormalField::Custom(f) => f(y, t),
        }
    }
}

impl<T> fmt::Debug for NormalField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalField::Radial => write!(f, "Radial"),
            NormalField::PinchingEllipsoid(_) => write!(f, "PinchingEllipsoid"),
            NormalField::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone)]
pub enum MotionKind<T> {
    Identity,
    ShrinkingSphere,
    PinchingEllipsoid(PinchParams<T>),
    Custom { map: PointMap<T>, normal: NormalField<T> },
}

/// A family of diffeomorphisms `Φ(·, t)` defined for `t ∈ [0, t_max]`.
#[derive(Clone)]
pub struct MotionMap<T> {
    kind: MotionKind<T>,
    t_max: T,
}

impl<T> fmt::Debug for MotionMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl<T> MotionMap<T> {
    pub fn name(&self) -> &'static str {
        match self.kind {
            MotionKind::Identity => "identity",
            MotionKind::ShrinkingSphere => "shrinking_sphere",
            MotionKind::PinchingEllipsoid(_) => "pinching_ellipsoid",
            MotionKind::Custom { .. } => "custom",
        }
    }

    pub fn kind(&self) -> &MotionKind<T> {
        &self.kind
    }
}

impl<T: Real> MotionMap<T> {
    pub fn identity() -> Self {
        MotionMap {
            kind: MotionKind::Identity,
            t_max: T::infinity(),
        }
    }

    /// `Φ(x, t) = exp(-t) x`.
    pub fn shrinking_sphere() -> Self {
        MotionMap {
            kind: MotionKind::ShrinkingSphere,
            t_max: T::infinity(),
        }
    }

    /// Ellipsoid with semi-axes `a` whose waist around `x1 = 0` contracts
    /// linearly in time. For `x` on the unit sphere the moved point is
    /// `(a1 x1, s a2 x2, s a3 x3)` with `s = 1 - β (t / T) exp(-(a1 x1)^2 / w^2)`;
    /// as a map on the ellipsoid `Γ0` this is `Φ(y, t) = (y1, s y2, s y3)`.
    pub fn pinching_ellipsoid(params: PinchParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(MotionMap {
            kind: MotionKind::PinchingEllipsoid(params),
            t_max: params.end_time,
        })
    }

    /// A user motion. The caller guarantees `map(x, 0) == x`.
    pub fn custom(map: PointMap<T>, normal: NormalField<T>, t_max: T) -> Self {
        MotionMap {
            kind: MotionKind::Custom { map, normal },
            t_max,
        }
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn evaluate(&self, x0: Vec3<T>, t: T) -> Result<Vec3<T>> {
        if !(t >= T::zero() && t <= self.t_max) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}] for motion {}",
                self.t_max,
                self.name()
            )));
        }
        if t == T::zero() {
            return Ok(x0);
        }
        Ok(match &self.kind {
            MotionKind::Identity => x0,
            MotionKind::ShrinkingSphere => x0 * (-t).exp(),
            MotionKind::PinchingEllipsoid(p) => {
                let s = p.waist(x0.x(), t);
                Vec3::new(x0.x(), s * x0.y(), s * x0.z())
            }
            MotionKind::Custom { map, .. } => map(x0, t),
        })
    }

    /// Maps a point of the unit sphere to the reference surface `Γ0` of this
    /// motion: the semi-axis scaling for the pinching ellipsoid, the identity
    /// otherwise.
    pub fn place_on_reference(&self, x: Vec3<T>) -> Vec3<T> {
        match &self.kind {
            MotionKind::PinchingEllipsoid(p) => {
                let [a1, a2, a3] = p.semi_axes;
                Vec3::new(a1 * x.x(), a2 * x.y(), a3 * x.z())
            }
            _ => x,
        }
    }

    /// `sphere` with every vertex moved by [`Self::place_on_reference`].
    pub fn reference_mesh(&self, sphere: &ReferenceMesh<T>) -> Result<ReferenceMesh<T>> {
        if let MotionKind::PinchingEllipsoid(_) = self.kind {
            let moved = sphere.vertices().iter().map(|&x| self.place_on_reference(x)).collect();
            sphere.with_vertices(moved)
        } else {
            Ok(sphere.clone())
        }
    }

    /// Normal field of the moved analytic surface.
    pub fn normal_field(&self) -> NormalField<T> {
        match &self.kind {
            MotionKind::Identity | MotionKind::ShrinkingSphere => NormalField::Radial,
            MotionKind::PinchingEllipsoid(p) => NormalField::PinchingEllipsoid(*p),
            MotionKind::Custom { normal, .. } => normal.clone(),
        }
    }

    /// Radial projection of `y` onto the moved surface, available for the
    /// sphere motions.
    pub fn radial_lift(&self, y: Vec3<T>, t: T) -> Option<Vec3<T>> {
        match self.kind {
            MotionKind::Identity => Some(y / y.norm()),
            MotionKind::ShrinkingSphere => Some(y * ((-t).exp() / y.norm())),
            MotionKind::PinchingEllipsoid(_) | MotionKind::Custom { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn identity_and_time_zero() {
        let p = v(0.3, -0.2, 0.9);
        assert_eq!(MotionMap::identity().evaluate(p, 7.0).unwrap(), p);
        let pinch = MotionMap::pinching_ellipsoid(PinchParams::with_end_time(2.0)).unwrap();
        for m in [MotionMap::identity(), MotionMap::shrinking_sphere(), pinch] {
            assert_eq!(m.evaluate(p, 0.0).unwrap(), p);
        }
    }

    #[test]
    fn shrinking_sphere_halves_at_ln2() {
        let y = MotionMap::shrinking_sphere()
            .evaluate(v(0.0, 1.0, 0.0), 2f64.ln())
            .unwrap();
        assert!((y - v(0.0, 0.5, 0.0)).norm() < 1e-16);
        let y1 = MotionMap::shrinking_sphere().evaluate(v(1.0, 0.0, 0.0), 1.0).unwrap();
        assert!((y1.x() - 0.36787944117144233).abs() < 1e-16);
    }

    #[test]
    fn pinch_examples() {
        let params = PinchParams::with_end_time(1.5);
        let m = MotionMap::pinching_ellipsoid(params).unwrap();
        assert_eq!(m.place_on_reference(v(1.0, 0.0, 0.0)), v(2.0, 0.0, 0.0));
        assert_eq!(m.evaluate(v(0.0, 1.0, 0.0), 0.0).unwrap(), v(0.0, 1.0, 0.0));
        let waist = m.evaluate(v(0.0, 1.0, 0.0), 1.5).unwrap();
        assert!((waist - v(0.0, 0.4, 0.0)).norm() < 1e-15);
        // a1 / w = 4 with the default width; use a narrower waist for the tip example
        let narrow = MotionMap::pinching_ellipsoid(PinchParams {
            pinch_width: 2.0 / 6.0,
            ..params
        })
        .unwrap();
        let tip = narrow.evaluate(narrow.place_on_reference(v(1.0, 0.0, 0.0)), 1.5).unwrap();
        assert_eq!(tip, v(2.0, 0.0, 0.0));
    }

    #[test]
    fn pinch_keeps_abscissa_and_starts_on_ellipsoid() {
        let m = MotionMap::pinching_ellipsoid(PinchParams::with_end_time(1.0)).unwrap();
        let y = m.place_on_reference(v(0.6, 0.0, 0.8));
        assert!(((y.x() / 2.0).powi(2) + y.z().powi(2) - 1.0).abs() < 1e-15);
        for t in [0.0, 0.25, 1.0] {
            assert_eq!(m.evaluate(y, t).unwrap().x(), y.x());
        }
    }

    #[test]
    fn pinch_rejects_collapse_amplitude() {
        let bad = PinchParams {
            pinch_amplitude: 1.0,
            ..PinchParams::<f64>::with_end_time(1.0)
        };
        assert!(matches!(MotionMap::pinching_ellipsoid(bad), Err(Error::Config(_))));
    }

    #[test]
    fn evaluation_outside_interval_is_domain_error() {
        let m = MotionMap::pinching_ellipsoid(PinchParams::<f64>::with_end_time(1.0)).unwrap();
        assert!(matches!(m.evaluate(v(1.0, 0.0, 0.0), 1.5), Err(Error::Domain(_))));
        assert!(matches!(
            MotionMap::<f64>::identity().evaluate(v(1.0, 0.0, 0.0), -0.1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pinch_normal_matches_finite_difference_of_surface() {
        // tangent vectors of the parametrization must be orthogonal to the normal
        let params = PinchParams::with_end_time(1.0);
        let m = MotionMap::pinching_ellipsoid(params).unwrap();
        let nf = m.normal_field();
        let t = 0.7;
        for &(th, ph) in &[(0.4, 0.3), (1.2, 2.0), (2.0, 4.0), (1.57, 1.0)] {
            let x = |th: f64, ph: f64| m.place_on_reference(v(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
            let y = m.evaluate(x(th, ph), t).unwrap();
            let n = nf.at(y, t);
            let h = 1e-6;
            let dth = (m.evaluate(x(th + h, ph), t).unwrap() - m.evaluate(x(th - h, ph), t).unwrap()) / (2.0 * h);
            let dph = (m.evaluate(x(th, ph + h), t).unwrap() - m.evaluate(x(th, ph - h), t).unwrap()) / (2.0 * h);
            assert!(n.dot(dth).abs() < 1e-8 * dth.norm().max(1.0));
            assert!(n.dot(dph).abs() < 1e-8 * dph.norm().max(1.0));
            assert!(n.dot(y) > 0.0);
        }
    }
}
