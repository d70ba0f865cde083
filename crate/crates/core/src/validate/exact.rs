//! Closed-form solutions and initial data of the built-in test problems.

use crate::num::{Real, Vec3};

/// Angular profile `sin^2(3θ)` on the band `|θ - π/2| < π/6`, zero elsewhere.
pub fn band_profile<T: Real>(theta: T) -> T {
    if (theta - T::FRAC_PI_2()).abs() < T::PI() / T::lit(6.0) {
        (T::lit(3.0) * theta).sin().powi(2)
    } else {
        T::zero()
    }
}

/// Indicator of the half circle `φ < π`, for `φ` already reduced to `[0, 2π)`.
pub fn half_circle<T: Real>(phi: T) -> T {
    if phi < T::PI() {
        T::one()
    } else {
        T::zero()
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle<T: Real>(phi: T) -> T {
    let two_pi = T::TAU();
    let r = phi % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    // r + 2π can round up to exactly 2π
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}

/// Exact solution of the rotating transport problem on the shrinking
/// sphere, `exp(2t) ũ0(φ - 2π(exp(t) - 1)) û(θ)`.
pub fn exact_tp1<T: Real>(phi: T, theta: T, t: T) -> T {
    let shift = T::TAU() * (t.exp() - T::one());
    (T::lit(2.0) * t).exp() * half_circle(wrap_angle(phi - shift)) * band_profile(theta)
}

/// Azimuth in `[0, 2π)` and polar angle in `[0, π]` of `x`.
pub fn spherical_angles<T: Real>(x: Vec3<T>) -> (T, T) {
    let phi = wrap_angle(x.y().atan2(x.x()));
    let c = (x.z() / x.norm()).max(-T::one()).min(T::one());
    (phi, c.acos())
}

/// [`exact_tp1`] at an ambient point, using its spherical angles.
pub fn exact_tp1_at<T: Real>(x: Vec3<T>, t: T) -> T {
    let (phi, theta) = spherical_angles(x);
    exact_tp1(phi, theta, t)
}

/// Initial data of the rotating transport problem.
pub fn tp1_initial<T: Real>(x: Vec3<T>) -> T {
    exact_tp1_at(x, T::zero())
}

/// `cos^2(π (x1 + 2))` for `x1 < -3/2`, zero otherwise.
pub fn tp2_initial<T: Real>(x: Vec3<T>) -> T {
    if x.x() < T::lit(-1.5) {
        (T::PI() * (x.x() + T::lit(2.0))).cos().powi(2)
    } else {
        T::zero()
    }
}
