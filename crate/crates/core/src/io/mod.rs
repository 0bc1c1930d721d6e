//! File formats: the TOML scene description, the binary boundary-data
//! container with its CSV mirror, and report/CSV writers.

mod boundary_file;
mod scene_file;

pub use boundary_file::{boundary_field_csv, load_boundary_field, save_boundary_field};
pub use scene_file::{load_scene, parse_scene, save_scene, scene_to_string};

/// Version line prepended to every CSV the tool writes.
pub fn csv_version_line() -> String {
    format!("# corner-probe v{}", env!("CARGO_PKG_VERSION"))
}
