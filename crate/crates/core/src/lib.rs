//! Finite volume scheme for scalar conservation laws
//!
//! `u̇ + u ∇_Γ·v + ∇_Γ·f(·, t, u) = 0`
//!
//! on closed triangulated surfaces whose vertices move along prescribed
//! trajectories. The numerics are generic over [`Real`] (`f32`, `f64`);
//! the aliases below fix the scalar to `f64`.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flux;
pub mod mesh;
pub mod motion;
pub mod num;
pub mod numflux;
pub mod problems;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use num::{Real, Vec3};

pub type Point = num::Vec3<f64>;
pub type ReferenceMesh = mesh::ReferenceMesh<f64>;
pub type MeshSnapshot = mesh::MeshSnapshot<f64>;
pub type MotionMap = motion::MotionMap<f64>;
pub type FluxModel = flux::FluxModel<f64>;
pub type CellState = solver::CellState<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type RunOutput = solver::RunOutput<f64>;
pub type RunReport = solver::RunReport<f64>;
pub type Problem = problems::Problem<f64>;
pub type EocRecord = validate::EocRecord<f64>;
pub type Reduced1DState = validate::Reduced1DState<f64>;

pub type ReferenceMeshF32 = mesh::ReferenceMesh<f32>;
pub type MeshSnapshotF32 = mesh::MeshSnapshot<f32>;
pub type CellStateF32 = solver::CellState<f32>;
