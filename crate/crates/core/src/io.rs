//! Legacy ASCII VTK for P1 fields and plain CSV tables.
//!
//! Values are written with 17 significant digits so fields read back
//! bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::FemFunction;
use crate::mesh::Mesh;

/// Unstructured grid with one scalar point field.
pub fn vtk_string(mesh: &Mesh, name: &str, u: &FemFunction) -> Result<String> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values, mesh has {} vertices",
            u.len(),
            mesh.num_vertices()
        )));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{name}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", v[0], v[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
    let _ = writeln!(s, "SCALARS {name} double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in u.coeffs() {
        let _ = writeln!(s, "{v:.17e}");
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, mesh: &Mesh, name: &str, u: &FemFunction) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, name, u)?)?;
    Ok(())
}

/// Reads a file written by [`write_vtk`]: the mesh and the scalar field.
pub fn read_vtk(path: &Path) -> Result<(Mesh, FemFunction)> {
    let text = std::fs::read_to_string(path)?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&str> = text.lines().collect();
    let find = |tag: &str| -> Result<usize> {
        lines
            .iter()
            .position(|l| l.starts_with(tag))
            .ok_or_else(|| err(0, format!("missing `{tag}` section")))
    };
    let count = |i: usize| -> Result<usize> {
        lines[i]
            .split_whitespace()
            .nth(1)
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| err(i + 1, "bad section count".into()))
    };
    let nums = |i: usize| -> Result<Vec<f64>> {
        lines
            .get(i)
            .ok_or_else(|| err(i + 1, "unexpected end of file".into()))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(i + 1, format!("bad number `{t}`"))))
            .collect()
    };

    let ip = find("POINTS")?;
    let np = count(ip)?;
    let mut vertices = Vec::with_capacity(np);
    for k in 0..np {
        let v = nums(ip + 1 + k)?;
        if v.len() < 2 {
            return Err(err(ip + 2 + k, "point needs coordinates".into()));
        }
        vertices.push([v[0], v[1]]);
    }
    let ic = find("CELLS")?;
    let nc = count(ic)?;
    let mut triangles = Vec::with_capacity(nc);
    for k in 0..nc {
        let v = nums(ic + 1 + k)?;
        if v.len() != 4 || v[0] != 3.0 {
            return Err(err(ic + 2 + k, "only triangles are supported".into()));
        }
        triangles.push([v[1] as usize, v[2] as usize, v[3] as usize]);
    }
    let is = find("LOOKUP_TABLE")?;
    let mut values = Vec::with_capacity(np);
    for k in 0..np {
        let v = nums(is + 1 + k)?;
        values.push(*v.first().ok_or_else(|| err(is + 2 + k, "missing value".into()))?);
    }
    Ok((Mesh::new(vertices, triangles)?, FemFunction::new(values)?))
}

/// Writes a header row and data rows.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtk_round_trip_is_exact() {
        let mesh = Mesh::unit_square(5).unwrap();
        let u = FemFunction::interpolate(&mesh, |x| (x[0] * 7.1).sin() / 3.0 + x[1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.vtk");
        write_vtk(&path, &mesh, "u", &u).unwrap();
        let (m2, u2) = read_vtk(&path).unwrap();
        assert_eq!(u2, u);
        assert_eq!(m2.vertices(), mesh.vertices());
        assert_eq!(m2.triangles(), mesh.triangles());
    }

    #[test]
    fn mismatched_field_rejected() {
        let mesh = Mesh::unit_square(2).unwrap();
        assert!(vtk_string(&mesh, "u", &FemFunction::zeros(3)).is_err());
    }
}
