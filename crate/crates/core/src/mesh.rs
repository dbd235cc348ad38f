//! Conforming triangular meshes of polygonal domains and their face topology.
//!
//! Triangles are stored counterclockwise. Faces (edges) are derived on demand
//! by [`build_face_topology`]; interior faces are oriented from the element
//! with the lower id to the one with the higher id.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    material: Vec<u32>,
    h: Vec<f64>,
}

/// Affine map from the reference triangle (0,0), (1,0), (0,1) onto an element.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are the edge vectors `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub inv_jac: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn to_physical(&self, xi: Point) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let dx = x[0] - self.origin[0];
        let dy = x[1] - self.origin[1];
        [
            self.inv_jac[0][0] * dx + self.inv_jac[0][1] * dy,
            self.inv_jac[1][0] * dx + self.inv_jac[1][1] * dy,
        ]
    }

    /// Maps a reference gradient to physical coordinates (`J^{-T} g`).
    pub fn gradient(&self, g: Point) -> Point {
        [
            self.inv_jac[0][0] * g[0] + self.inv_jac[1][0] * g[1],
            self.inv_jac[0][1] * g[0] + self.inv_jac[1][1] * g[1],
        ]
    }
}

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh, checking vertex references and orientation.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        material: Vec<u32>,
    ) -> Result<Self> {
        Error::check_len(triangles.len(), material.len())?;
        let mut h = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Topology(format!(
                    "triangle {k} references vertex {v} of {}",
                    vertices.len()
                )));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            if !(signed_area(a, b, c) > 0.0) {
                return Err(Error::Topology(format!(
                    "triangle {k} has non-positive signed area"
                )));
            }
            h.push(distance(a, b).max(distance(b, c)).max(distance(c, a)));
        }
        Ok(Self {
            vertices,
            triangles,
            material,
            h,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn materials(&self) -> &[u32] {
        &self.material
    }

    pub fn material(&self, k: usize) -> u32 {
        self.material[k]
    }

    /// Element diameters `h_K`.
    pub fn diameters(&self) -> &[f64] {
        &self.h
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, k: usize) -> [Point; 3] {
        self.triangles[k].map(|v| self.vertices[v])
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.corners(k);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.corners(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn element_map(&self, k: usize) -> ElementMap {
        let [a, b, c] = self.corners(k);
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        ElementMap {
            origin: a,
            jac,
            inv_jac,
            det,
        }
    }

    /// Reassigns material ids from a function of the element centroid.
    pub fn with_materials(mut self, f: impl Fn(Point) -> u32) -> Self {
        self.material = (0..self.n_elements())
            .map(|k| f(self.centroid(k)))
            .collect();
        self
    }

    /// Number of distinct edges.
    pub fn n_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| local_edges(t).map(|(a, b)| (a.min(b), a.max(b))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Edge-neighbors of every element, sorted by element id.
    pub fn element_neighbors(&self) -> Vec<Vec<usize>> {
        let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (k, t) in self.triangles.iter().enumerate() {
            for (a, b) in local_edges(t) {
                owners.entry((a.min(b), a.max(b))).or_default().push(k);
            }
        }
        let mut nbrs = vec![Vec::new(); self.n_elements()];
        for ks in owners.values() {
            for &i in ks {
                for &j in ks {
                    if i != j {
                        nbrs[i].push(j);
                    }
                }
            }
        }
        for n in &mut nbrs {
            n.sort_unstable();
            n.dedup();
        }
        nbrs
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the `ndgdm` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(48 * (self.vertices.len() + self.triangles.len()) + 32);
        let _ = writeln!(s, "ndgdm {} {}", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
        }
        for (t, m) in self.triangles.iter().zip(&self.material) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], m);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty mesh file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "ndgdm" {
            return Err(Error::parse(ln, "expected header `ndgdm <nv> <nt>`"));
        }
        let nv: usize = parse_field(ln, fields[1])?;
        let nt: usize = parse_field(ln, fields[2])?;

        let mut vertices = Vec::with_capacity(nv.min(1 << 20));
        for _ in 0..nv {
            let (ln, line) = lines.next().ok_or_else(|| {
                Error::parse(
                    ln + vertices.len() + 1,
                    "unexpected end of file in vertex block",
                )
            })?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::parse(ln, "expected vertex line `x y`"));
            }
            let x: f64 = parse_field(ln, f[0])?;
            let y: f64 = parse_field(ln, f[1])?;
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::parse(ln, "non-finite vertex coordinate"));
            }
            vertices.push([x, y]);
        }

        let mut triangles = Vec::with_capacity(nt.min(1 << 20));
        let mut material = Vec::with_capacity(nt.min(1 << 20));
        let mut last = ln + nv;
        for _ in 0..nt {
            let (ln, line) = lines.next().ok_or_else(|| {
                Error::parse(last + 1, "unexpected end of file in triangle block")
            })?;
            last = ln;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(
                    ln,
                    "expected triangle line `v0 v1 v2 material`",
                ));
            }
            let mut t = [0usize; 3];
            for (slot, s) in t.iter_mut().zip(&f[..3]) {
                *slot = parse_field(ln, s)?;
                if *slot >= nv {
                    return Err(Error::parse(
                        ln,
                        format!("triangle references vertex {} of {}", slot, nv),
                    ));
                }
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            if !(signed_area(a, b, c) > 0.0) {
                return Err(Error::parse(
                    ln,
                    "triangle is not counterclockwise or is degenerate",
                ));
            }
            triangles.push(t);
            material.push(parse_field(ln, f[3])?);
        }
        if let Some((ln, line)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::parse(ln, format!("trailing content `{line}`")));
        }
        Self::new(vertices, triangles, material)
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("invalid number `{s}`")))
}

fn local_edges(t: &[usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

/// Unit square split into an `n x n` grid, each cell cut along its
/// lower-left to upper-right diagonal.
pub fn build_uniform_square_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "grid size must be positive");
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * step, j as f64 * step]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let material = vec![0; triangles.len()];
    Mesh::new(vertices, triangles, material).expect("uniform mesh is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub kind: FaceKind,
    pub left: usize,
    pub right: Option<usize>,
    /// Unit normal, pointing from `left` into `right` (outward on the boundary).
    pub normal: Point,
    pub length: f64,
    /// `max(h_K, h_K')` on interior faces, `h_K` on boundary faces.
    pub h: f64,
    pub endpoints: [Point; 2],
}

impl Face {
    pub fn midpoint(&self) -> Point {
        let [a, b] = self.endpoints;
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    pub fn point_at(&self, t: f64) -> Point {
        let [a, b] = self.endpoints;
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Whether the face carries penalty and flux terms (interior or Dirichlet).
    pub fn is_penalized(&self) -> bool {
        self.kind != FaceKind::Neumann
    }
}

/// Enumerates every edge once. Boundary faces are Dirichlet where
/// `is_dirichlet(midpoint)` holds and Neumann otherwise.
pub fn build_face_topology(mesh: &Mesh, is_dirichlet: impl Fn(Point) -> bool) -> Result<Vec<Face>> {
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pending: Vec<((usize, usize), usize, Option<usize>)> = Vec::new();
    for (k, t) in mesh.triangles.iter().enumerate() {
        for (a, b) in local_edges(t) {
            let key = (a.min(b), a.max(b));
            match slot.get(&key) {
                None => {
                    slot.insert(key, pending.len());
                    pending.push(((a, b), k, None));
                }
                Some(&f) => {
                    let entry = &mut pending[f];
                    if entry.2.is_some() {
                        return Err(Error::Topology(format!(
                            "edge ({}, {}) is shared by more than two triangles",
                            key.0, key.1
                        )));
                    }
                    if entry.1 == k {
                        return Err(Error::Topology(format!("triangle {k} repeats an edge")));
                    }
                    entry.2 = Some(k);
                }
            }
        }
    }

    let faces = pending
        .into_iter()
        .map(|((a, b), first, second)| {
            let (left, right) = match second {
                Some(s) => (first.min(s), Some(first.max(s))),
                None => (first, None),
            };
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let length = distance(pa, pb);
            let mut normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
            let c = mesh.centroid(left);
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            if normal[0] * (mid[0] - c[0]) + normal[1] * (mid[1] - c[1]) < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            let (kind, h) = match right {
                Some(r) => (FaceKind::Interior, mesh.h[left].max(mesh.h[r])),
                None if is_dirichlet(mid) => (FaceKind::Dirichlet, mesh.h[left]),
                None => (FaceKind::Neumann, mesh.h[left]),
            };
            Face {
                kind,
                left,
                right,
                normal,
                length,
                h,
                endpoints: [pa, pb],
            }
        })
        .collect();
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(faces: &[Face], kind: FaceKind) -> usize {
        faces.iter().filter(|f| f.kind == kind).count()
    }

    #[test]
    fn uniform_mesh_sizes() {
        let m = build_uniform_square_mesh(24);
        assert_eq!(m.n_elements(), 1152);
        let h = 2f64.sqrt() / 24.0;
        assert!(m.diameters().iter().all(|&x| (x - h).abs() < 1e-15));
        assert!(m.materials().iter().all(|&x| x == 0));
    }

    #[test]
    fn euler_relation() {
        for n in 1..6 {
            let m = build_uniform_square_mesh(n);
            let v = m.vertices().len() as i64;
            let e = m.n_edges() as i64;
            let t = m.n_elements() as i64;
            assert_eq!(v - e + t, 1);
        }
        assert_eq!(build_uniform_square_mesh(2).n_edges(), 16);
    }

    #[test]
    fn single_cell_faces() {
        let m = build_uniform_square_mesh(1);
        assert_eq!(m.n_elements(), 2);
        let faces = build_face_topology(&m, |_| true).unwrap();
        assert_eq!(faces.len(), 5);
        assert_eq!(count(&faces, FaceKind::Interior), 1);
        assert_eq!(count(&faces, FaceKind::Dirichlet), 4);
    }

    #[test]
    fn neumann_classification_on_two_by_two() {
        let m = build_uniform_square_mesh(2);
        let faces = build_face_topology(&m, |x| x[0] > 1e-12 && x[1] > 1e-12).unwrap();
        assert_eq!(count(&faces, FaceKind::Neumann), 4);
        assert_eq!(count(&faces, FaceKind::Dirichlet), 4);
        assert_eq!(count(&faces, FaceKind::Interior), 8);
    }

    #[test]
    fn normals_and_face_diameters() {
        let m = build_uniform_square_mesh(5);
        let faces = build_face_topology(&m, |_| true).unwrap();
        let mut incidences = 0;
        for f in &faces {
            assert!(((f.normal[0].powi(2) + f.normal[1].powi(2)).sqrt() - 1.0).abs() < 1e-12);
            match f.right {
                Some(r) => {
                    incidences += 2;
                    assert!(f.left < r);
                    let (cl, cr) = (m.centroid(f.left), m.centroid(r));
                    assert!(f.normal[0] * (cr[0] - cl[0]) + f.normal[1] * (cr[1] - cl[1]) > 0.0);
                    assert_eq!(f.h, m.diameters()[f.left].max(m.diameters()[r]));
                }
                None => {
                    incidences += 1;
                    let c = m.centroid(f.left);
                    let mid = f.midpoint();
                    assert!(f.normal[0] * (mid[0] - c[0]) + f.normal[1] * (mid[1] - c[1]) > 0.0);
                    assert_eq!(f.h, m.diameters()[f.left]);
                }
            }
        }
        assert_eq!(incidences, 3 * m.n_elements());
    }

    #[test]
    fn areas_sum_to_one() {
        let m = build_uniform_square_mesh(7);
        let total: f64 = (0..m.n_elements()).map(|k| m.area(k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonconforming_edge_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 0.5]];
        let t = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let m = Mesh::new(v, t, vec![0; 3]).unwrap();
        assert!(matches!(
            build_face_topology(&m, |_| true),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let m = build_uniform_square_mesh(1);
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);

        let m = build_uniform_square_mesh(24);
        let text = m.to_text();
        assert_eq!(text.lines().count(), 1 + 625 + 1152);
        assert_eq!(Mesh::from_text(&text).unwrap(), m);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ndgdm");
        let m = build_uniform_square_mesh(3).with_materials(|c| (c[1] > 0.5) as u32);
        m.save(&path).unwrap();
        assert_eq!(Mesh::load(&path).unwrap(), m);
    }

    #[test]
    fn bad_vertex_reference_reports_line() {
        let text = "ndgdm 4 1\n0 0\n1 0\n1 1\n0 1\n0 1 99 0\n";
        match Mesh::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            Mesh::from_text("mesh 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(Mesh::from_text(""), Err(Error::Parse { .. })));
    }
}
