//! Boundary-data container: a self-describing little-endian binary file
//! (magic "CPBF") with a CSV mirror for inspection.
//!
//! Layout: magic [4], version u32, flags u32 (bit 0: Neumann trace is
//! simulated rather than derived through the exterior map), kappa f64,
//! R f64, band limit u32, node count u32, then f64 arrays: theta, phi
//! per node (interleaved), weights, u (re/im interleaved), dnu (re/im
//! interleaved).

use crate::error::{Error, Result};
use crate::forward::{BoundaryField, NeumannKind, SphereGrid};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CPBF";
const VERSION: u32 = 1;

pub fn save_boundary_field(field: &BoundaryField<f64>, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let flags = match field.neumann_kind {
        NeumannKind::Simulated => 1u32,
        NeumannKind::DtnDerived => 0u32,
    };
    w.write_u32::<LittleEndian>(flags)?;
    w.write_f64::<LittleEndian>(field.kappa)?;
    w.write_f64::<LittleEndian>(field.grid.radius)?;
    w.write_u32::<LittleEndian>(field.grid.band_limit as u32)?;
    w.write_u32::<LittleEndian>(field.grid.node_count() as u32)?;
    for i in 0..field.grid.n_theta {
        for j in 0..field.grid.n_phi {
            w.write_f64::<LittleEndian>(field.grid.thetas[i])?;
            w.write_f64::<LittleEndian>(field.grid.phis[j])?;
        }
    }
    for k in 0..field.grid.node_count() {
        w.write_f64::<LittleEndian>(field.grid.weight_by_index(k))?;
    }
    for v in &field.u {
        w.write_f64::<LittleEndian>(v.re)?;
        w.write_f64::<LittleEndian>(v.im)?;
    }
    for v in &field.dnu {
        w.write_f64::<LittleEndian>(v.re)?;
        w.write_f64::<LittleEndian>(v.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_boundary_field(path: &Path) -> Result<BoundaryField<f64>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::DataFile(format!("{}: {e}", path.display())))?;
    let mut r = BufReader::new(f);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::DataFile(
            "bad magic (not a boundary-data file)".into(),
        ));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::DataFile(format!("unsupported version {version}")));
    }
    let flags = r.read_u32::<LittleEndian>()?;
    let kappa = r.read_f64::<LittleEndian>()?;
    let radius = r.read_f64::<LittleEndian>()?;
    let band_limit = r.read_u32::<LittleEndian>()? as usize;
    let node_count = r.read_u32::<LittleEndian>()? as usize;

    let grid = SphereGrid::new(radius, band_limit);
    if grid.node_count() != node_count {
        return Err(Error::DataFile(format!(
            "node count {node_count} does not match band limit {band_limit}"
        )));
    }
    // verify the stored nodes against the reconstructed grid
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let theta = r.read_f64::<LittleEndian>()?;
            let phi = r.read_f64::<LittleEndian>()?;
            if (theta - grid.thetas[i]).abs() > 1e-12 || (phi - grid.phis[j]).abs() > 1e-12 {
                return Err(Error::DataFile("stored nodes disagree with header".into()));
            }
        }
    }
    for k in 0..node_count {
        let w = r.read_f64::<LittleEndian>()?;
        if (w - grid.weight_by_index(k)).abs() > 1e-12 * w.abs().max(1.0) {
            return Err(Error::DataFile(
                "stored weights disagree with header".into(),
            ));
        }
    }
    let mut read_complex = |n: usize| -> Result<Vec<Complex<f64>>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            out.push(Complex::new(re, im));
        }
        Ok(out)
    };
    let u = read_complex(node_count)?;
    let dnu = read_complex(node_count)?;
    Ok(BoundaryField {
        grid,
        kappa,
        u,
        dnu,
        neumann_kind: if flags & 1 == 1 {
            NeumannKind::Simulated
        } else {
            NeumannKind::DtnDerived
        },
    })
}

/// CSV mirror: one row per node.
pub fn boundary_field_csv(field: &BoundaryField<f64>, version_line: &str) -> String {
    let mut s = String::new();
    s.push_str(version_line);
    s.push('\n');
    s.push_str("theta,phi,weight,u_re,u_im,dnu_re,dnu_im\n");
    for i in 0..field.grid.n_theta {
        for j in 0..field.grid.n_phi {
            let k = i * field.grid.n_phi + j;
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                field.grid.thetas[i],
                field.grid.phis[j],
                field.grid.weight_by_index(k),
                field.u[k].re,
                field.u[k].im,
                field.dnu[k].re,
                field.dnu[k].im,
            ));
        }
    }
    s
}
