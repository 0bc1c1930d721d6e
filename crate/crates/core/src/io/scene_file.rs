//! Scene file: a TOML document describing the measurement geometry and the
//! source cells. Unknown keys are rejected.
//!
//! ```toml
//! kappa = 2.0
//! R = 1.0
//! r0 = 0.1
//! A = 1.0
//! E = 2.0
//!
//! [[cells]]
//! vertices = [[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.3]]
//! faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
//! amplitude = { re = 1.0, im = 0.5 }
//! probe_vertex = 0          # optional; computed by the ordering pass if absent
//! ```

use crate::error::{Error, Result};
use crate::geometry::{Cell, ConvexPolyhedron, Point3, Scene};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    kappa: f64,
    #[serde(rename = "R")]
    radius: f64,
    r0: f64,
    #[serde(rename = "A")]
    bound_a: f64,
    #[serde(rename = "E")]
    bound_e: f64,
    #[serde(default)]
    cells: Vec<CellDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    amplitude: AmplitudeDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_vertex: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeDoc {
    re: f64,
    im: f64,
}

pub fn parse_scene(text: &str) -> Result<Scene<f64>> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| Error::SceneFile(e.to_string()))?;
    if doc.kappa <= 0.0 {
        return Err(Error::SceneFile("kappa must be positive".into()));
    }
    if doc.radius <= 0.0 || doc.r0 <= 0.0 || doc.r0 >= doc.radius {
        return Err(Error::SceneFile("need 0 < r0 < R".into()));
    }
    let mut cells = Vec::with_capacity(doc.cells.len());
    for (i, c) in doc.cells.iter().enumerate() {
        let vertices: Vec<Point3<f64>> = c
            .vertices
            .iter()
            .map(|v| Point3::new(v[0], v[1], v[2]))
            .collect();
        let poly = ConvexPolyhedron::new(vertices, c.faces.clone())
            .map_err(|e| Error::SceneFile(format!("cell {i}: {e}")))?;
        cells.push(Cell {
            polyhedron: poly,
            amplitude: Complex::new(c.amplitude.re, c.amplitude.im),
            probe_vertex: c.probe_vertex,
        });
    }
    Ok(Scene {
        kappa: doc.kappa,
        radius: doc.radius,
        r0: doc.r0,
        bound_a: doc.bound_a,
        bound_e: doc.bound_e,
        cells,
    })
}

pub fn load_scene(path: &Path) -> Result<Scene<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::SceneFile(format!("{}: {e}", path.display())))?;
    parse_scene(&text)
}

pub fn scene_to_string(scene: &Scene<f64>) -> String {
    let doc = SceneDoc {
        kappa: scene.kappa,
        radius: scene.radius,
        r0: scene.r0,
        bound_a: scene.bound_a,
        bound_e: scene.bound_e,
        cells: scene
            .cells
            .iter()
            .map(|c| CellDoc {
                vertices: c
                    .polyhedron
                    .vertices()
                    .iter()
                    .map(|v| [v.x(), v.y(), v.z()])
                    .collect(),
                faces: c
                    .polyhedron
                    .faces()
                    .iter()
                    .map(|f| f.cycle.clone())
                    .collect(),
                amplitude: AmplitudeDoc {
                    re: c.amplitude.re,
                    im: c.amplitude.im,
                },
                probe_vertex: c.probe_vertex,
            })
            .collect(),
    };
    toml::to_string_pretty(&doc).expect("scene serializes")
}

pub fn save_scene(scene: &Scene<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, scene_to_string(scene))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
kappa = 2.0
R = 1.0
r0 = 0.1
A = 1.0
E = 2.0

[[cells]]
vertices = [[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.3]]
faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
amplitude = { re = 1.0, im = 0.5 }
probe_vertex = 0
"#;

    #[test]
    fn parses_and_round_trips() {
        let scene = parse_scene(SAMPLE).unwrap();
        assert_eq!(scene.cells.len(), 1);
        assert_eq!(scene.cells[0].probe_vertex, Some(0));
        assert!((scene.kappa - 2.0).abs() < 1e-15);
        let text = scene_to_string(&scene);
        let again = parse_scene(&text).unwrap();
        assert_eq!(again.cells.len(), 1);
        assert!(
            (again.cells[0].polyhedron.volume() - scene.cells[0].polyhedron.volume()).abs() < 1e-15
        );
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = SAMPLE.replace("probe_vertex = 0", "probe_vertex = 0\nwavelength = 3.0");
        assert!(matches!(parse_scene(&bad), Err(Error::SceneFile(_))));
        let bad2 = format!("{SAMPLE}\nextra_top_level = 1\n");
        assert!(parse_scene(&bad2).is_err());
    }

    #[test]
    fn rejects_bad_geometry_parameters() {
        let bad = SAMPLE.replace("r0 = 0.1", "r0 = 2.0");
        assert!(parse_scene(&bad).is_err());
        let bad = SAMPLE.replace("kappa = 2.0", "kappa = -1.0");
        assert!(parse_scene(&bad).is_err());
    }
}
