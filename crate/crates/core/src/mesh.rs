//! Triangular meshes of planar domains with boundary edges and outward normals.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub length: f64,
    /// The triangle owning this edge.
    pub triangle: usize,
}

/// Per-triangle geometry of the P1 basis.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub area: f64,
    /// Constant gradients of the three barycentric basis functions.
    pub basis_gradients: [[f64; 2]; 3],
}

type EdgeOwner = (usize, [usize; 2]);

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    geometry: Vec<TriangleGeometry>,
}

impl Mesh {
    /// Builds a mesh from vertices and triangles.
    ///
    /// Triangles with negative orientation are rejected; the boundary is
    /// recovered as the set of edges owned by exactly one triangle.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let g = triangle_geometry(&vertices, tri);
            if !(g.area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {}",
                    g.area
                )));
            }
            geometry.push(g);
        }

        // Sorted edge -> (triangle, oriented endpoints).
        let mut owners: HashMap<(usize, usize), Vec<EdgeOwner>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                owners
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((t, [a, b]));
            }
        }
        let mut boundary_edges = Vec::new();
        for (key, list) in &owners {
            match list.len() {
                1 => {
                    let (t, [a, b]) = list[0];
                    boundary_edges.push(boundary_edge(&vertices, &triangles[t], t, a, b));
                }
                2 => {}
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} shared by {n} triangles"
                    )))
                }
            }
        }
        if boundary_edges.is_empty() {
            return Err(Error::InvalidMesh("mesh has no boundary".into()));
        }
        boundary_edges.sort_by_key(|e| (e.triangle, e.vertices));

        // Every boundary vertex must close a loop: exactly two incident boundary edges.
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for e in &boundary_edges {
            for &v in &e.vertices {
                *degree.entry(v).or_default() += 1;
            }
        }
        if let Some((v, d)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::InvalidMesh(format!(
                "boundary vertex {v} has {d} incident boundary edges; boundary is not a set of closed loops"
            )));
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            geometry,
        })
    }

    /// Structured mesh of the unit square with `n` subdivisions per side.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "unit square mesh needs n >= 1 subdivisions".into(),
            ));
        }
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = idx(i, j);
                let v10 = idx(i + 1, j);
                let v01 = idx(i, j + 1);
                let v11 = idx(i + 1, j + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn geometry(&self) -> &[TriangleGeometry] {
        &self.geometry
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// Vertices touched by a boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    /// Plain-text form: `v x y`, `t i j k`, `b i j` lines with 0-based indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(out, "b {} {}", e.vertices[0], e.vertices[1]);
        }
        out
    }

    /// Parses the plain-text form. `b` lines are optional, but when present
    /// they must describe exactly the recovered boundary.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut boundary = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let rest: Vec<&str> = it.collect();
            let bad = |msg: &str| Error::InvalidMesh(format!("line {}: {msg}", lineno + 1));
            match (tag, rest.len()) {
                ("v", 2) => {
                    let x: f64 = rest[0].parse().map_err(|_| bad("bad coordinate"))?;
                    let y: f64 = rest[1].parse().map_err(|_| bad("bad coordinate"))?;
                    vertices.push([x, y]);
                }
                ("t", 3) => {
                    let mut t = [0usize; 3];
                    for (k, s) in rest.iter().enumerate() {
                        t[k] = s.parse().map_err(|_| bad("bad triangle index"))?;
                    }
                    triangles.push(t);
                }
                ("b", 2) => {
                    let a: usize = rest[0].parse().map_err(|_| bad("bad boundary index"))?;
                    let b: usize = rest[1].parse().map_err(|_| bad("bad boundary index"))?;
                    boundary.push((a.min(b), a.max(b)));
                }
                _ => return Err(bad("unrecognized record")),
            }
        }
        let mesh = Self::new(vertices, triangles)?;
        if !boundary.is_empty() {
            let mut given = boundary;
            given.sort_unstable();
            let mut found: Vec<(usize, usize)> = mesh
                .boundary_edges
                .iter()
                .map(|e| {
                    let [a, b] = e.vertices;
                    (a.min(b), a.max(b))
                })
                .collect();
            found.sort_unstable();
            if given != found {
                return Err(Error::InvalidMesh(
                    "declared boundary edges do not match the mesh boundary".into(),
                ));
            }
        }
        Ok(mesh)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn triangle_geometry(vertices: &[[f64; 2]], tri: &[usize; 3]) -> TriangleGeometry {
    let [a, b, c] = tri.map(|i| vertices[i]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let area = 0.5 * det;
    // grad λ_i = rot90(opposite edge) / (2 area)
    let g = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
    TriangleGeometry {
        area,
        basis_gradients: [g(b, c), g(c, a), g(a, b)],
    }
}

fn boundary_edge(
    vertices: &[[f64; 2]],
    tri: &[usize; 3],
    triangle: usize,
    a: usize,
    b: usize,
) -> BoundaryEdge {
    let pa = vertices[a];
    let pb = vertices[b];
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let length = d[0].hypot(d[1]);
    let mut normal = [d[1] / length, -d[0] / length];
    let opposite = tri.iter().copied().find(|&v| v != a && v != b).unwrap();
    let po = vertices[opposite];
    let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
    let inward = [po[0] - mid[0], po[1] - mid[1]];
    if normal[0] * inward[0] + normal[1] * inward[1] > 0.0 {
        normal = [-normal[0], -normal[1]];
    }
    BoundaryEdge {
        vertices: [a, b],
        normal,
        length,
        triangle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(
            (m.num_triangles(), m.num_vertices(), m.boundary_edges().len()),
            (2, 4, 4)
        );
        let m = Mesh::unit_square(2).unwrap();
        assert_eq!(
            (m.num_triangles(), m.num_vertices(), m.boundary_edges().len()),
            (8, 9, 8)
        );
    }

    #[test]
    fn unit_square_area_and_perimeter() {
        let m = Mesh::unit_square(16).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert!((m.perimeter() - 4.0).abs() < 1e-12);
        assert_eq!(m.num_triangles(), 2 * 16 * 16);
        assert_eq!(m.num_vertices(), 17 * 17);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(
            Mesh::unit_square(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn normals_point_outward_and_are_unit() {
        let m = Mesh::unit_square(5).unwrap();
        for e in m.boundary_edges() {
            let n = e.normal;
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            let v = m.vertices();
            let mid = [
                0.5 * (v[e.vertices[0]][0] + v[e.vertices[1]][0]),
                0.5 * (v[e.vertices[0]][1] + v[e.vertices[1]][1]),
            ];
            // On the unit square outward means away from the center.
            let out = [mid[0] - 0.5, mid[1] - 0.5];
            assert!(n[0] * out[0] + n[1] * out[1] > 0.0);
            // inward median test
            let tri = m.triangles()[e.triangle];
            let o = tri.iter().find(|&&x| !e.vertices.contains(&x)).unwrap();
            let inward = [v[*o][0] - mid[0], v[*o][1] - mid[1]];
            assert!(n[0] * inward[0] + n[1] * inward[1] < 0.0);
        }
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = Mesh::unit_square(3).unwrap();
        for g in m.geometry() {
            let sx: f64 = g.basis_gradients.iter().map(|v| v[0]).sum();
            let sy: f64 = g.basis_gradients.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }

    #[test]
    fn text_roundtrip() {
        let m = Mesh::unit_square(3).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::new(v.clone(), vec![[0, 1, 2]]).is_ok());
        assert!(matches!(
            Mesh::new(v, vec![[0, 2, 1]]),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn mismatched_boundary_records_rejected() {
        let text = "v 0 0\nv 1 0\nv 0 1\nt 0 1 2\nb 0 1\nb 1 2\n";
        assert!(Mesh::from_text(text).is_err());
        let text = "v 0 0\nv 1 0\nv 0 1\nt 0 1 2\nb 0 1\nb 1 2\nb 2 0\n";
        assert!(Mesh::from_text(text).is_ok());
    }
}
