//! Simulation and recovery toolkit for time-harmonic wave sources that are
//! piecewise constant on convex polyhedral cells.
//!
//! The forward path evaluates the radiating volume potential of such a
//! source and samples Dirichlet/Neumann traces on a measurement sphere. The
//! inverse path recovers the per-cell complex amplitudes from single-
//! frequency Dirichlet data: an exterior Dirichlet-to-Neumann map supplies
//! the Neumann trace, boundary integrals against a singular probe kernel
//! turn the data into per-cell moment equations, and the cells are stripped
//! sequentially in an admissible order. Corner moments of the probe kernel
//! blow up like 1/r at strictly convex vertices, which is what makes the
//! amplitudes identifiable; the toolkit ships scans and checks for exactly
//! that behaviour.
//!
//! Numeric kernels are generic over the scalar type through [`num::Real`];
//! the crate root exports `f64` aliases, which the file formats and the CLI
//! use exclusively.

pub mod dtn;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod num;
pub mod probe;
pub mod quadrature;
pub mod recon;

pub mod cli;

pub use error::{Error, Result};

/// Working scalar of the concrete aliases below.
pub type Scalar = f64;
/// Complex value over [`Scalar`].
pub type Complex = num_complex::Complex<f64>;

pub type Point = geometry::Point3<Scalar>;
pub type Scene = geometry::Scene<Scalar>;
pub type Cell = geometry::Cell<Scalar>;
pub type ConvexPolyhedron = geometry::ConvexPolyhedron<Scalar>;
pub type VertexCone = geometry::VertexCone<Scalar>;
pub type ProbeFrame = geometry::ProbeFrame<Scalar>;
pub type Wavenumber = kernels::Wavenumber<Scalar>;
pub type SphereGrid = forward::SphereGrid<Scalar>;
pub type BoundaryField = forward::BoundaryField<Scalar>;
pub type QuadratureSpec = quadrature::QuadratureSpec<Scalar>;
pub type HarmonicCoefficients = dtn::HarmonicCoefficients<Scalar>;
pub type ProbeSchedule = recon::ProbeSchedule<Scalar>;
pub type ReconstructionReport = recon::ReconstructionReport<Scalar>;
