//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polyhedron: {0}")]
    DegeneratePolyhedron(String),

    #[error("invalid polyhedron: {0}")]
    InvalidPolyhedron(String),

    #[error("facet-like vertex: aperture reaches pi/2 (max sample {max_alpha} rad)")]
    FacetLikeVertex { max_alpha: f64 },

    #[error("vertex cone precondition violated: {0}")]
    ConePrecondition(String),

    #[error("no admissible cell ordering: blocking cells {0:?}")]
    NoAdmissibleOrdering(Vec<usize>),

    #[error("kernel evaluated at its singular point (|x| = {dist:e} < 1e-14)")]
    KernelSingularity { dist: f64 },

    #[error("evaluation point lies inside a source cell (cell {cell})")]
    PointInsideCell { cell: usize },

    #[error("probe point must lie strictly outside the measurement sphere")]
    ProbeNotExterior,

    #[error("probe radius {r} outside admissible range (0, {max})")]
    ProbeRadiusRange { r: f64, max: f64 },

    #[error("aperture ordering violated: need 0 < alpha1 < alpha2 < pi/2")]
    ApertureOrdering,

    #[error("quadrature budget exhausted before tolerance (achieved {achieved:e}, estimate {estimate:e})")]
    QuadratureBudget { achieved: f64, estimate: f64 },

    #[error("band limit mismatch: grid supports L={grid}, requested {requested}")]
    BandLimitMismatch { grid: usize, requested: usize },

    #[error("spherical Hankel argument must be positive (z = {z})")]
    NonPositiveArgument { z: f64 },

    #[error("corner not resolving: {0}")]
    CornerNotResolving(String),

    #[error("shell system ill-conditioned: {0}")]
    ShellIllConditioned(String),

    #[error("scene validation failed:\n{0}")]
    SceneValidation(String),

    #[error("scene file: {0}")]
    SceneFile(String),

    #[error("data file: {0}")]
    DataFile(String),

    #[error("header mismatch between scene and data file: {0}")]
    HeaderMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
