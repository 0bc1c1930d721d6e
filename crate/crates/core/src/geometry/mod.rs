//! Scene geometry: points, convex polyhedral cells, vertex cones, probe
//! frames, and the admissibility checks.

mod cone;
mod frame;
mod polyhedron;
mod scene;
mod vec3;

pub use cone::{vertex_cone, vertex_cone_with_axis, VertexCone, APERTURE_SAMPLES};
pub use frame::{probe_frame, ProbeFrame};
pub use polyhedron::{
    point_triangle_distance, segment_segment_distance, ConvexPolyhedron, Face, Tetrahedron,
    CONTAIN_TOL, GEOM_TOL,
};
pub use scene::{order_cells, validate_assumptions, Cell, CheckOutcome, Scene, ValidationReport};
pub use vec3::{Mat3, Point3, UnitVector3};
