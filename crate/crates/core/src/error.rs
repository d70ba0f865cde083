use thiserror::Error;

/// Errors raised by the mesh, motion, flux and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate cell: {0}")]
    DegenerateCell(String),

    #[error("geometry collapse at t={time}: triangle {triangle} has area {area:e} (mean {mean_area:e})")]
    GeometryCollapse {
        triangle: usize,
        time: f64,
        area: f64,
        mean_area: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("blow-up at step {step}: cell {cell} became non-finite")]
    BlowUp { step: usize, cell: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
