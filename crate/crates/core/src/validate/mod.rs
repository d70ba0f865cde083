//! Exact solutions, the reduced 1D oracle, L1 errors and convergence tables.

pub mod eoc;
pub mod exact;
pub mod oracle;
pub mod reduced1d;
pub mod study;

pub use crate::solver::mass_total;
pub use eoc::{eoc_table, l1_error, EocRecord};
pub use exact::{exact_tp1, tp2_initial};
pub use reduced1d::{entropy_residual_1d, reduced_1d_run, Reduced1DConfig, Reduced1DState};
pub use study::eoc_study;
