//! Conforming simplicial meshes of intervals and polygons.
//!
//! Faces are derived from the element list; the outward normal of a face is
//! stored with respect to its `left` element, so the right element sees the
//! negated vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::FlowProblem;
use crate::quadrature::gauss_legendre_unit;

/// Physical or reference coordinates. 1D meshes leave the second entry at 0.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    XLow,
    XHigh,
    YLow,
    YHigh,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceNeighbor {
    Interior(usize),
    Boundary(BoundaryTag),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Vertex indices, ordered as in the left element.
    pub vertices: Vec<usize>,
    pub left: usize,
    pub neighbor: FaceNeighbor,
    /// Unit outward normal with respect to `left`.
    pub normal: Point,
    /// Length of an edge in 2D; 1 for the point faces of 1D meshes.
    pub measure: f64,
}

impl Face {
    pub fn right(&self) -> Option<usize> {
        match self.neighbor {
            FaceNeighbor::Interior(k) => Some(k),
            FaceNeighbor::Boundary(_) => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.neighbor, FaceNeighbor::Boundary(_))
    }
}

/// Inflow/outflow status of a face point. Ties (`a·n = 0`) count as outflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSide {
    Inflow,
    Outflow,
}

impl FaceSide {
    pub fn classify(a_dot_n: f64) -> Self {
        if a_dot_n < 0.0 {
            FaceSide::Inflow
        } else {
            FaceSide::Outflow
        }
    }
}

/// Affine map `x = origin + J xi` of an element from its reference simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub origin: Point,
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
    pub diameter: f64,
    pub inradius: f64,
}

impl ElementGeometry {
    pub fn to_physical(&self, xi: &Point) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: &Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let g = &self.inverse;
        [
            g[0][0] * d[0] + g[0][1] * d[1],
            g[1][0] * d[0] + g[1][1] * d[1],
        ]
    }

    /// Maps a reference gradient to the physical one: `J^{-T} g`.
    pub fn physical_gradient(&self, g: &Point) -> Point {
        let inv = &self.inverse;
        [
            inv[0][0] * g[0] + inv[1][0] * g[1],
            inv[0][1] * g[0] + inv[1][1] * g[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Each element is `ratio` times longer than its left neighbour.
    Geometric(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrianglePattern {
    Diagonal,
    Crisscross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    elements: Vec<Vec<usize>>,
    faces: Vec<Face>,
    element_faces: Vec<Vec<usize>>,
    geometry: Vec<ElementGeometry>,
    bbox: [f64; 4],
}

impl Mesh {
    /// Builds a mesh from vertices and elements, deriving faces, normals and
    /// element geometry. Elements must be positively oriented.
    pub fn from_parts(dim: usize, vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self> {
        Self::from_parts_with_lines(dim, vertices, elements, None)
    }

    fn from_parts_with_lines(
        dim: usize,
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        element_lines: Option<&[usize]>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(dim));
        }
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let line_of = |k: usize| element_lines.map_or(0, |l| l[k]);
        let mut geometry = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter().enumerate() {
            if el.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!(
                    "element {k} has {} vertices, expected {}",
                    el.len(),
                    dim + 1
                )));
            }
            for &v in el {
                if v >= vertices.len() {
                    return Err(Error::DanglingIndex {
                        element: k,
                        vertex: v,
                        n_vertices: vertices.len(),
                        line: line_of(k),
                    });
                }
            }
            let g = element_geometry(dim, &vertices, el);
            if !(g.det > 0.0) {
                return Err(Error::Orientation {
                    element: k,
                    volume: g.det * reference_measure(dim),
                    line: line_of(k),
                });
            }
            geometry.push(g);
        }

        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for el in &elements {
            for &v in el {
                let p = vertices[v];
                bbox[0] = bbox[0].min(p[0]);
                bbox[1] = bbox[1].min(p[1]);
                bbox[2] = bbox[2].max(p[0]);
                bbox[3] = bbox[3].max(p[1]);
            }
        }

        let (faces, element_faces) = build_faces(dim, &vertices, &elements, &bbox)?;
        Ok(Mesh {
            dim,
            vertices,
            elements,
            faces,
            element_faces,
            geometry,
            bbox,
        })
    }

    /// `n` elements tiling `[x_lo, x_hi]`.
    pub fn interval(x_lo: f64, x_hi: f64, n: usize, grading: Grading) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("element count must be positive".into()));
        }
        if !(x_lo < x_hi) {
            return Err(Error::InvalidArgument(format!("degenerate interval [{x_lo}, {x_hi}]")));
        }
        let len = x_hi - x_lo;
        let lengths: Vec<f64> = match grading {
            Grading::Uniform => vec![len / n as f64; n],
            Grading::Geometric(r) => {
                if !(r > 0.0) {
                    return Err(Error::InvalidArgument(format!("grading ratio {r} must be positive")));
                }
                if (r - 1.0).abs() < 1e-14 {
                    vec![len / n as f64; n]
                } else {
                    let first = len * (r - 1.0) / (r.powi(n as i32) - 1.0);
                    (0..n).map(|i| first * r.powi(i as i32)).collect()
                }
            }
        };
        let mut vertices = Vec::with_capacity(n + 1);
        let mut x = x_lo;
        vertices.push([x_lo, 0.0]);
        for l in &lengths[..n - 1] {
            x += l;
            vertices.push([x, 0.0]);
        }
        vertices.push([x_hi, 0.0]);
        let elements = (0..n).map(|i| vec![i, i + 1]).collect();
        Self::from_parts(1, vertices, elements)
    }

    /// Structured triangulation of the box `[x_lo, x_hi] x [y_lo, y_hi]`.
    pub fn rectangle(
        x_lo: f64,
        y_lo: f64,
        x_hi: f64,
        y_hi: f64,
        nx: usize,
        ny: usize,
        pattern: TrianglePattern,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("subdivision counts must be positive".into()));
        }
        if !(x_lo < x_hi && y_lo < y_hi) {
            return Err(Error::InvalidArgument("degenerate box".into()));
        }
        let coord = |lo: f64, hi: f64, i: usize, n: usize| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        };
        let mut vertices = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([coord(x_lo, x_hi, i, nx), coord(y_lo, y_hi, j, ny)]);
            }
        }
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                match pattern {
                    TrianglePattern::Diagonal => {
                        elements.push(vec![v00, v10, v11]);
                        elements.push(vec![v00, v11, v01]);
                    }
                    TrianglePattern::Crisscross => {
                        let c = vertices.len();
                        let (a, b) = (vertices[v00], vertices[v11]);
                        vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                        elements.push(vec![v00, v10, c]);
                        elements.push(vec![v10, v11, c]);
                        elements.push(vec![v11, v01, c]);
                        elements.push(vec![v01, v00, c]);
                    }
                }
            }
        }
        Self::from_parts(2, vertices, elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face ids bounding element `k`, in local face order.
    pub fn element_faces(&self, k: usize) -> &[usize] {
        &self.element_faces[k]
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    pub fn geometries(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn volume(&self, k: usize) -> f64 {
        self.geometry[k].det * reference_measure(self.dim)
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(f64::INFINITY, f64::min)
    }

    /// `max_K h_K / rho_K`.
    pub fn shape_ratio(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter / g.inradius).fold(0.0, f64::max)
    }

    /// `[x_min, y_min, x_max, y_max]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        let dx = self.bbox[2] - self.bbox[0];
        let dy = self.bbox[3] - self.bbox[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Physical point of face `f` at parameter `s in [0, 1]`.
    pub fn face_point(&self, f: usize, s: f64) -> Point {
        let face = &self.faces[f];
        let a = self.vertices[face.vertices[0]];
        if self.dim == 1 {
            return a;
        }
        let b = self.vertices[face.vertices[1]];
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.dim, self.vertices.len(), self.elements.len());
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|c| format!("{c:.16e}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
        for el in &self.elements {
            let idx: Vec<String> = el.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{}", idx.join(" "));
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::read_from(file, path)
    }

    /// Parses the text mesh format; `origin` is used in error messages.
    pub fn read_from<R: Read>(reader: R, origin: impl AsRef<Path>) -> Result<Self> {
        let origin: PathBuf = origin.as_ref().to_path_buf();
        let perr = |line: usize, message: String| Error::Parse {
            path: origin.clone(),
            line,
            message,
        };
        let mut lines = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            lines.push((i + 1, trimmed.to_string()));
        }
        let mut it = lines.into_iter();
        let (hline, header) = it.next().ok_or_else(|| perr(1, "empty mesh file".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(hline, format!("bad header: {e}")))?;
        let [dim, nv, ne] = head[..] else {
            return Err(perr(hline, "header must be `dim n_vertices n_elements`".into()));
        };
        if dim != 1 && dim != 2 {
            return Err(perr(hline, format!("unsupported dimension {dim}")));
        }
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, text) = it.next().ok_or_else(|| perr(hline, "missing vertex lines".into()))?;
            let c: Vec<f64> = text
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad coordinate: {e}")))?;
            if c.len() != dim {
                return Err(perr(ln, format!("expected {dim} coordinates, found {}", c.len())));
            }
            vertices.push([c[0], if dim == 2 { c[1] } else { 0.0 }]);
        }
        let mut elements = Vec::with_capacity(ne);
        let mut element_lines = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, text) = it.next().ok_or_else(|| perr(hline, "missing element lines".into()))?;
            let idx: Vec<usize> = text
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad vertex index: {e}")))?;
            if idx.len() != dim + 1 {
                return Err(perr(ln, format!("expected {} vertex indices, found {}", dim + 1, idx.len())));
            }
            elements.push(idx);
            element_lines.push(ln);
        }
        if let Some((ln, _)) = it.next() {
            return Err(perr(ln, "trailing content after element list".into()));
        }
        Self::from_parts_with_lines(dim, vertices, elements, Some(&element_lines))
    }
}

/// Measure of the reference simplex: 1 for `[0,1]`, 1/2 for the unit triangle.
pub fn reference_measure(dim: usize) -> f64 {
    if dim == 1 {
        1.0
    } else {
        0.5
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn element_geometry(dim: usize, vertices: &[Point], el: &[usize]) -> ElementGeometry {
    let p0 = vertices[el[0]];
    if dim == 1 {
        let len = vertices[el[1]][0] - p0[0];
        return ElementGeometry {
            origin: p0,
            jacobian: [[len, 0.0], [0.0, 1.0]],
            inverse: [[1.0 / len, 0.0], [0.0, 1.0]],
            det: len,
            diameter: len.abs(),
            inradius: 0.5 * len.abs(),
        };
    }
    let p1 = vertices[el[1]];
    let p2 = vertices[el[2]];
    let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inverse = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let (e0, e1, e2) = (dist(&p1, &p2), dist(&p2, &p0), dist(&p0, &p1));
    ElementGeometry {
        origin: p0,
        jacobian: j,
        inverse,
        det,
        diameter: e0.max(e1).max(e2),
        inradius: det.abs() / (e0 + e1 + e2),
    }
}

/// Local faces of an element; face `i` of a triangle is opposite vertex `i`.
fn local_faces(dim: usize, el: &[usize]) -> Vec<Vec<usize>> {
    if dim == 1 {
        vec![vec![el[0]], vec![el[1]]]
    } else {
        vec![vec![el[1], el[2]], vec![el[2], el[0]], vec![el[0], el[1]]]
    }
}

fn build_faces(
    dim: usize,
    vertices: &[Point],
    elements: &[Vec<usize>],
    bbox: &[f64; 4],
) -> Result<(Vec<Face>, Vec<Vec<usize>>)> {
    let mut faces: Vec<Face> = Vec::new();
    let mut lookup: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut element_faces = vec![Vec::new(); elements.len()];
    for (k, el) in elements.iter().enumerate() {
        for (local, fv) in local_faces(dim, el).into_iter().enumerate() {
            let mut key = fv.clone();
            key.sort_unstable();
            if let Some(&f) = lookup.get(&key) {
                let face = &mut faces[f];
                if face.right().is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "face {key:?} shared by more than two elements"
                    )));
                }
                face.neighbor = FaceNeighbor::Interior(k);
                element_faces[k].push(f);
            } else {
                let (normal, measure) = if dim == 1 {
                    (if local == 0 { [-1.0, 0.0] } else { [1.0, 0.0] }, 1.0)
                } else {
                    let (a, b) = (vertices[fv[0]], vertices[fv[1]]);
                    let len = dist(&a, &b);
                    ([(b[1] - a[1]) / len, -(b[0] - a[0]) / len], len)
                };
                lookup.insert(key, faces.len());
                element_faces[k].push(faces.len());
                faces.push(Face {
                    vertices: fv,
                    left: k,
                    neighbor: FaceNeighbor::Boundary(BoundaryTag::Other),
                    normal,
                    measure,
                });
            }
        }
    }
    let scale = ((bbox[2] - bbox[0]).powi(2) + (bbox[3] - bbox[1]).powi(2)).sqrt();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for face in faces.iter_mut() {
        if face.right().is_none() {
            let on = |axis: usize, value: f64| {
                face.vertices
                    .iter()
                    .all(|&v| (vertices[v][axis] - value).abs() <= tol)
            };
            let tag = if on(0, bbox[0]) {
                BoundaryTag::XLow
            } else if on(0, bbox[2]) {
                BoundaryTag::XHigh
            } else if dim == 2 && on(1, bbox[1]) {
                BoundaryTag::YLow
            } else if dim == 2 && on(1, bbox[3]) {
                BoundaryTag::YHigh
            } else {
                BoundaryTag::Other
            };
            face.neighbor = FaceNeighbor::Boundary(tag);
        }
    }
    Ok((faces, element_faces))
}

/// Result of sampling the sign of `a·n` on boundary faces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InflowClassification {
    /// Boundary faces with `a·n < 0` at every face quadrature point and sampled time.
    pub inflow: BTreeSet<usize>,
    /// Boundary faces whose inflow status differs between sampled times.
    pub sign_changes: BTreeSet<usize>,
}

/// Classifies boundary faces as inflow by sampling `a·n` at three Gauss points
/// per face for every time in `t_samples`.
pub fn classify_inflow_boundary(
    mesh: &Mesh,
    flow: &FlowProblem,
    t_samples: &[f64],
) -> InflowClassification {
    let (s_points, _) = gauss_legendre_unit(3);
    let mut out = InflowClassification::default();
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.is_boundary() {
            continue;
        }
        let mut statuses = t_samples.iter().map(|&t| {
            let pts: Vec<Point> = if mesh.dim() == 1 {
                vec![mesh.face_point(f, 0.0)]
            } else {
                s_points.iter().map(|&s| mesh.face_point(f, s)).collect()
            };
            pts.iter().all(|x| {
                let a = flow.velocity(x, t);
                FaceSide::classify(a[0] * face.normal[0] + a[1] * face.normal[1]) == FaceSide::Inflow
            })
        });
        let Some(first) = statuses.next() else {
            continue;
        };
        let mut all_inflow = first;
        let mut changed = false;
        for s in statuses {
            changed |= s != first;
            all_inflow &= s;
        }
        if changed {
            log::warn!("boundary face {f} changes inflow status across sampled times");
            out.sign_changes.insert(f);
        }
        if all_inflow {
            out.inflow.insert(f);
        }
    }
    out
}
