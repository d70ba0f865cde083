//! Built-in test problems: motion, flux, initial data and, where known, the
//! exact solution.

use std::sync::Arc;

use crate::error::Result;
use crate::flux::{FluxModel, Potential};
use crate::mesh::{build_icosphere, ReferenceMesh};
use crate::motion::{MotionMap, PinchParams};
use crate::num::{Real, Vec3};
use crate::validate::exact::{exact_tp1_at, tp1_initial, tp2_initial};

pub type ScalarField<T> = Arc<dyn Fn(Vec3<T>) -> T + Send + Sync>;
pub type ExactSolution<T> = Arc<dyn Fn(Vec3<T>, T) -> T + Send + Sync>;

/// A complete problem description.
#[derive(Clone)]
pub struct Problem<T> {
    pub name: &'static str,
    pub motion: MotionMap<T>,
    pub flux: FluxModel<T>,
    pub initial: ScalarField<T>,
    pub t_end: T,
    pub exact: Option<ExactSolution<T>>,
}

/// Parameters shared by the two pinching-ellipsoid problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinchSetup<T> {
    pub pinch: PinchParams<T>,
    /// Burgers strength `α` of the projected flux.
    pub strength: T,
    pub direction: Vec3<T>,
}

impl<T: Real> PinchSetup<T> {
    /// Default end time of the pinching experiments.
    pub const DEFAULT_END_TIME: f64 = 1.5;

    pub fn new(t_end: T) -> Self {
        PinchSetup {
            pinch: PinchParams::with_end_time(t_end),
            strength: T::one(),
            direction: Vec3::axis(0),
        }
    }

    pub fn t_end(&self) -> T {
        self.pinch.end_time
    }
}

impl<T: Real> Default for PinchSetup<T> {
    fn default() -> Self {
        Self::new(T::lit(Self::DEFAULT_END_TIME))
    }
}

impl<T: Real> Problem<T> {
    /// Icosphere of the given level placed on the reference surface of the
    /// problem's motion.
    pub fn mesh(&self, level: u32) -> Result<Arc<ReferenceMesh<T>>> {
        let sphere = build_icosphere(level)?;
        Ok(Arc::new(self.motion.reference_mesh(&sphere)?))
    }

    /// Rotating transport on the sphere of radius `exp(-t)`, end time `ln 2`.
    pub fn tp1() -> Self {
        Problem {
            name: "tp1",
            motion: MotionMap::shrinking_sphere(),
            flux: FluxModel::rotation_linear(),
            initial: Arc::new(tp1_initial),
            t_end: T::lit(2f64.ln()),
            exact: Some(Arc::new(exact_tp1_at)),
        }
    }

    /// Projected Burgers flux on the pinching ellipsoid.
    pub fn tp2_projected(setup: PinchSetup<T>) -> Result<Self> {
        let motion = MotionMap::pinching_ellipsoid(setup.pinch)?;
        let flux = FluxModel::projected_burgers(setup.direction, setup.strength, motion.normal_field())?;
        Ok(Problem {
            name: "tp2_projected",
            motion,
            flux,
            initial: Arc::new(tp2_initial),
            t_end: setup.t_end(),
            exact: None,
        })
    }

    /// Divergence-free flux `ν × ∇h`, `h = -20 x3 u^2`, on the pinching
    /// ellipsoid.
    pub fn tp2_divfree(setup: PinchSetup<T>) -> Result<Self> {
        let motion = MotionMap::pinching_ellipsoid(setup.pinch)?;
        let flux = FluxModel::potential_divfree(Potential::default_vertical(), motion.normal_field());
        Ok(Problem {
            name: "tp2_divfree",
            motion,
            flux,
            initial: Arc::new(tp2_initial),
            t_end: setup.t_end(),
            exact: None,
        })
    }
}
