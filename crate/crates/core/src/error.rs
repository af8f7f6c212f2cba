use thiserror::Error;

/// Errors produced by geometry construction, discretization and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("nonpositive radius {radius:.3e} at z = {z:.6}")]
    NonpositiveRadius { z: f64, radius: f64 },

    #[error("infeasible family member: {0}")]
    Infeasible(String),

    #[error("mesh generation failed: {0}")]
    Mesher(String),

    #[error("element {element} is inverted (signed area {area:.3e})")]
    InvertedElement { element: usize, area: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("fields are defined on different meshes")]
    MeshMismatch,

    #[error("operation is not supported in {0} mode")]
    UnsupportedMode(&'static str),

    #[error("degenerate projection: reference bump has zero volume derivative")]
    DegenerateProjection,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
