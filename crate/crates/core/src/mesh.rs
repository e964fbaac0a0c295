//! Conforming triangular meshes of polygonal domains.
//!
//! Meshes are immutable once built. Uniform red refinement splits every
//! triangle into four similar children through its edge midpoints and records
//! a [`ParentMap`] so that finite element spaces on consecutive levels nest.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid target mesh size {0}: must be positive and finite")]
    BadMeshSize(f64),
    #[error("polygon rejected: {0}")]
    BadPolygon(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("mesh I/O failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh failed validation: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn midpoint(&self, other: &Point2) -> Point2 {
        Point2::new(0.5 * (self.x1 + other.x1), 0.5 * (self.x2 + other.x2))
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
pub fn signed_area2(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2)
}

/// Where a vertex of a refined mesh came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    Vertex(usize),
    EdgeMidpoint(usize, usize),
}

/// Links a red-refined mesh back to the mesh it was refined from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentMap {
    /// For every fine triangle: (coarse triangle, child slot 0..3).
    pub triangle_parent: Vec<(usize, u8)>,
    pub vertex_origin: Vec<VertexOrigin>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    level: usize,
    parent: Option<ParentMap>,
}

/// Local edge `l` of triangle `[v0, v1, v2]` is the edge opposite `v_l`.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn build_edges(triangles: &[[usize; 3]]) -> (Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<usize>) {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + 4);
    let mut counts = Vec::with_capacity(edges.capacity());
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut te = [0usize; 3];
        for (l, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            let key = edge_key(tri[*i], tri[*j]);
            let id = *lookup.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                counts.push(0);
                edges.len() - 1
            });
            counts[id] += 1;
            te[l] = id;
        }
        triangle_edges.push(te);
    }
    (edges, triangle_edges, counts)
}

/// Boundary edges (edges owned by exactly one triangle) oriented along the owning triangle.
fn derive_boundary(triangles: &[[usize; 3]], triangle_edges: &[[usize; 3]], counts: &[usize]) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for (tri, te) in triangles.iter().zip(triangle_edges) {
        for (l, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            if counts[te[l]] == 1 {
                out.push([tri[*i], tri[*j]]);
            }
        }
    }
    out
}

impl Mesh {
    /// Builds a mesh from vertices and triangles, deriving the boundary edges from the topology.
    pub fn from_triangles(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Mesh {
        let (edges, triangle_edges, counts) = build_edges(&triangles);
        let boundary_edges = derive_boundary(&triangles, &triangle_edges, &counts);
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            level: 0,
            parent: None,
        }
    }

    /// Builds a mesh with an explicitly given boundary edge list. No checks are performed;
    /// call [`Mesh::validate`] to inspect the result.
    pub fn from_parts(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>, boundary_edges: Vec<[usize; 2]>) -> Mesh {
        let (edges, triangle_edges, _) = build_edges(&triangles);
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            level: 0,
            parent: None,
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Unique edges, each stored with ascending vertex indices.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge ids of each triangle, indexed by [`LOCAL_EDGES`].
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> Option<&ParentMap> {
        self.parent.as_ref()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area2(&a, &b, &c)
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|[a, b]| self.vertices[*a].dist(&self.vertices[*b]))
            .fold(0.0, f64::max)
    }

    /// Flags per vertex: true when the vertex lies on a boundary edge.
    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for [a, b] in &self.boundary_edges {
            flags[*a] = true;
            flags[*b] = true;
        }
        flags
    }

    /// Flags per edge id: true for boundary edges.
    pub fn boundary_edge_flags(&self) -> Vec<bool> {
        let mut count = vec![0u8; self.edges.len()];
        for te in &self.triangle_edges {
            for e in te {
                count[*e] = count[*e].saturating_add(1);
            }
        }
        count.into_iter().map(|c| c == 1).collect()
    }

    /// Uniform red refinement: every triangle is split into four similar children.
    ///
    /// Coarse vertices keep their indices; edge midpoints follow in edge order.
    /// Children of triangle `[v0, v1, v2]` with midpoints `m_l` of the edge opposite `v_l` are
    /// `[v0, m2, m1]`, `[m2, v1, m0]`, `[m1, m0, v2]` and `[m0, m1, m2]`.
    pub fn refine_red(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.edges.len());
        let mut vertex_origin: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Vertex).collect();
        for [a, b] in &self.edges {
            vertices.push(self.vertices[*a].midpoint(&self.vertices[*b]));
            vertex_origin.push(VertexOrigin::EdgeMidpoint(*a, *b));
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut triangle_parent = Vec::with_capacity(4 * self.triangles.len());
        for (t, (tri, te)) in self.triangles.iter().zip(&self.triangle_edges).enumerate() {
            let [v0, v1, v2] = *tri;
            let [m0, m1, m2] = [nv + te[0], nv + te[1], nv + te[2]];
            let children = [[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]];
            for (slot, child) in children.into_iter().enumerate() {
                triangles.push(child);
                triangle_parent.push((t, slot as u8));
            }
        }
        let mut mid_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.boundary_edges.len());
        for (e, [a, b]) in self.edges.iter().enumerate() {
            mid_of.insert((*a, *b), nv + e);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for [a, b] in &self.boundary_edges {
            let m = mid_of[&edge_key(*a, *b)];
            boundary_edges.push([*a, m]);
            boundary_edges.push([m, *b]);
        }
        let (edges, triangle_edges, _) = build_edges(&triangles);
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            level: self.level + 1,
            parent: Some(ParentMap {
                triangle_parent,
                vertex_origin,
            }),
        }
    }

    /// Checks every mesh invariant and returns the list of violations (empty when valid).
    pub fn validate(&self) -> Vec<MeshIssue> {
        let mut issues = Vec::new();
        let nv = self.vertices.len();
        for (i, p) in self.vertices.iter().enumerate() {
            if !p.x1.is_finite() || !p.x2.is_finite() {
                issues.push(MeshIssue::NonFiniteVertex(i));
            }
        }
        let mut indices_ok = true;
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                issues.push(MeshIssue::BadTriangleIndices(t));
                indices_ok = false;
                continue;
            }
            let area2 = {
                let [a, b, c] = self.triangle_points(t);
                signed_area2(&a, &b, &c)
            };
            if !(area2 > 0.0) {
                issues.push(MeshIssue::NonPositiveArea(t));
            }
        }
        if !indices_ok {
            return issues;
        }

        let mut owners = vec![0usize; self.edges.len()];
        for te in &self.triangle_edges {
            for e in te {
                owners[*e] += 1;
            }
        }
        for (e, &count) in owners.iter().enumerate() {
            if count > 2 {
                issues.push(MeshIssue::OvershareEdge(self.edges[e]));
            }
        }
        let mut derived: Vec<(usize, usize)> = self
            .edges
            .iter()
            .zip(&owners)
            .filter(|(_, c)| **c == 1)
            .map(|(e, _)| (e[0], e[1]))
            .collect();
        derived.sort_unstable();
        let mut declared: Vec<(usize, usize)> = self.boundary_edges.iter().map(|[a, b]| edge_key(*a, *b)).collect();
        declared.sort_unstable();
        if derived != declared {
            issues.push(MeshIssue::BoundaryMismatch {
                declared: declared.len(),
                derived: derived.len(),
            });
        }

        for (a, b) in duplicate_vertices(&self.vertices) {
            issues.push(MeshIssue::DuplicateVertex(a, b));
        }
        for (v, e) in hanging_nodes(&self.vertices, &self.edges) {
            issues.push(MeshIssue::HangingNode { vertex: v, edge: e });
        }

        let mut used = vec![false; nv];
        for tri in &self.triangles {
            for v in tri {
                used[*v] = true;
            }
        }
        for (v, u) in used.iter().enumerate() {
            if !u {
                issues.push(MeshIssue::UnusedVertex(v));
            }
        }

        let euler = nv as i64 - self.edges.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            issues.push(MeshIssue::EulerCharacteristic(euler));
        }
        issues
    }

    /// Locates the triangle containing `p` and returns it with barycentric coordinates.
    pub fn locate(&self, p: &Point2) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in 0..self.triangles.len() {
            let bary = barycentric(&self.triangle_points(t), p);
            let worst = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some((t, bary));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((t, bary, worst));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }

    /// Writes the mesh in the ASCII node/element format (1-based indices).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        let path = path.as_ref();
        let io_err = |source| MeshError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
        self.write_to(&mut f).map_err(io_err)?;
        f.flush().map_err(io_err)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# teig mesh: vertices, triangles (CCW, 1-based), boundary edges")?;
        writeln!(w, "{} {} {}", self.vertices.len(), self.triangles.len(), self.boundary_edges.len())?;
        for p in &self.vertices {
            writeln!(w, "{:?} {:?}", p.x1, p.x2)?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(w, "{} {} {}", a + 1, b + 1, c + 1)?;
        }
        for [a, b] in &self.boundary_edges {
            writeln!(w, "{} {}", a + 1, b + 1)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Mesh::parse(&text, &path.display().to_string())
    }

    /// Parses the ASCII mesh format; `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Mesh, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('#')
            })
            .map(|(i, l)| (i + 1, l));
        let err = |line: usize, column: usize, message: String| MeshError::Parse {
            path: origin.to_string(),
            line,
            column,
            message,
        };
        let mut next_fields = |expected: usize, what: &str| -> Result<(usize, Vec<(usize, &str)>), MeshError> {
            let (ln, raw) = lines
                .next()
                .ok_or_else(|| err(text.lines().count() + 1, 1, format!("unexpected end of file, expected {what}")))?;
            let fields = split_fields(raw);
            if fields.len() != expected {
                let col = fields.get(expected).map_or(raw.len() + 1, |f| f.0);
                return Err(err(ln, col, format!("expected {expected} fields for {what}, found {}", fields.len())));
            }
            Ok((ln, fields))
        };
        let (ln, header) = next_fields(3, "header `NV NT NB`")?;
        let mut counts = [0usize; 3];
        for (k, (col, f)) in header.iter().enumerate() {
            counts[k] = f
                .parse()
                .map_err(|_| err(ln, *col, format!("invalid count `{f}`")))?;
        }
        let [nv, nt, nb] = counts;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, fields) = next_fields(2, "vertex `x1 x2`")?;
            let mut xy = [0.0; 2];
            for (k, (col, f)) in fields.iter().enumerate() {
                xy[k] = f
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(ln, *col, format!("invalid coordinate `{f}`")))?;
            }
            vertices.push(Point2::new(xy[0], xy[1]));
        }
        let parse_index = |ln: usize, col: usize, f: &str| -> Result<usize, MeshError> {
            let v: usize = f.parse().map_err(|_| err(ln, col, format!("invalid vertex index `{f}`")))?;
            if v == 0 || v > nv {
                return Err(err(ln, col, format!("vertex index {v} out of range 1..={nv}")));
            }
            Ok(v - 1)
        };
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, fields) = next_fields(3, "triangle `i j k`")?;
            let mut tri = [0usize; 3];
            for (k, (col, f)) in fields.iter().enumerate() {
                tri[k] = parse_index(ln, *col, f)?;
            }
            triangles.push(tri);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, fields) = next_fields(2, "boundary edge `i j`")?;
            let mut e = [0usize; 2];
            for (k, (col, f)) in fields.iter().enumerate() {
                e[k] = parse_index(ln, *col, f)?;
            }
            boundary.push(e);
        }
        if let Some((ln, raw)) = lines.next() {
            return Err(err(ln, 1, format!("trailing content `{}`", raw.trim())));
        }
        Ok(Mesh::from_parts(vertices, triangles, boundary))
    }

    /// Resets the level counter and drops refinement history, making this the root of a new hierarchy.
    pub(crate) fn into_root(mut self) -> Mesh {
        self.level = 0;
        self.parent = None;
        self
    }
}

fn split_fields(raw: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in raw.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &raw[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &raw[s..]));
    }
    out
}

pub fn barycentric(tri: &[Point2; 3], p: &Point2) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = signed_area2(a, b, c);
    let l1 = signed_area2(a, p, c) / det;
    let l2 = signed_area2(a, b, p) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshIssue {
    NonFiniteVertex(usize),
    BadTriangleIndices(usize),
    NonPositiveArea(usize),
    OvershareEdge([usize; 2]),
    BoundaryMismatch { declared: usize, derived: usize },
    DuplicateVertex(usize, usize),
    HangingNode { vertex: usize, edge: [usize; 2] },
    UnusedVertex(usize),
    EulerCharacteristic(i64),
}

impl fmt::Display for MeshIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshIssue::NonFiniteVertex(v) => write!(f, "vertex {v} has a non-finite coordinate"),
            MeshIssue::BadTriangleIndices(t) => write!(f, "triangle {t} has invalid or repeated vertex indices"),
            MeshIssue::NonPositiveArea(t) => write!(f, "triangle {t} is not counter-clockwise (signed area <= 0)"),
            MeshIssue::OvershareEdge(e) => write!(f, "edge {:?} is shared by more than two triangles", e),
            MeshIssue::BoundaryMismatch { declared, derived } => write!(
                f,
                "boundary edge list ({declared} edges) differs from the single-owner edge set ({derived} edges)"
            ),
            MeshIssue::DuplicateVertex(a, b) => write!(f, "vertices {a} and {b} coincide"),
            MeshIssue::HangingNode { vertex, edge } => {
                write!(f, "vertex {vertex} lies inside edge {:?} (hanging node)", edge)
            }
            MeshIssue::UnusedVertex(v) => write!(f, "vertex {v} belongs to no triangle"),
            MeshIssue::EulerCharacteristic(chi) => write!(f, "V - E + T = {chi}, expected 1 for a simply connected domain"),
        }
    }
}

/// Spatial hash on a square grid with cells of size `cell`.
fn bucket_of(p: &Point2, cell: f64) -> (i64, i64) {
    ((p.x1 / cell).floor() as i64, (p.x2 / cell).floor() as i64)
}

fn bucket_size(vertices: &[Point2], edges: &[[usize; 2]]) -> f64 {
    let mean = edges
        .iter()
        .map(|[a, b]| vertices[*a].dist(&vertices[*b]))
        .sum::<f64>()
        / edges.len().max(1) as f64;
    if mean > 0.0 && mean.is_finite() {
        mean
    } else {
        1.0
    }
}

fn duplicate_vertices(vertices: &[Point2]) -> Vec<(usize, usize)> {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, p) in vertices.iter().enumerate() {
        if !p.x1.is_finite() || !p.x2.is_finite() {
            continue;
        }
        let key = ((p.x1 + 0.0).to_bits(), (p.x2 + 0.0).to_bits());
        if let Some(&j) = seen.get(&key) {
            out.push((j, i));
        } else {
            seen.insert(key, i);
        }
    }
    out
}

fn hanging_nodes(vertices: &[Point2], edges: &[[usize; 2]]) -> Vec<(usize, [usize; 2])> {
    let cell = bucket_size(vertices, edges);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in vertices.iter().enumerate() {
        if p.x1.is_finite() && p.x2.is_finite() {
            grid.entry(bucket_of(p, cell)).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    for [a, b] in edges {
        let (pa, pb) = (vertices[*a], vertices[*b]);
        let len = pa.dist(&pb);
        if !(len > 0.0) {
            continue;
        }
        let lo = bucket_of(&Point2::new(pa.x1.min(pb.x1), pa.x2.min(pb.x2)), cell);
        let hi = bucket_of(&Point2::new(pa.x1.max(pb.x1), pa.x2.max(pb.x2)), cell);
        for bx in lo.0..=hi.0 {
            for by in lo.1..=hi.1 {
                let Some(cands) = grid.get(&(bx, by)) else { continue };
                for &v in cands {
                    if v == *a || v == *b {
                        continue;
                    }
                    let p = vertices[v];
                    let cross = signed_area2(&pa, &pb, &p) / len;
                    let t = ((p.x1 - pa.x1) * (pb.x1 - pa.x1) + (p.x2 - pa.x2) * (pb.x2 - pa.x2)) / (len * len);
                    if cross.abs() <= 1e-12 * len && t > 1e-12 && t < 1.0 - 1e-12 {
                        out.push((v, [*a, *b]));
                    }
                }
            }
        }
    }
    out
}

/// Built-in domains.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `[0,1]^2`
    UnitSquare,
    /// Right triangle with unit legs along the axes.
    RightTriangle,
    /// `[0,2]^2 \ [1,2]^2`
    LShape,
    /// Simple polygon given by its vertices (either orientation).
    Polygon(Vec<Point2>),
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::RightTriangle => "right_triangle",
            Domain::LShape => "l_shape",
            Domain::Polygon(_) => "polygon",
        }
    }

    pub fn from_name(name: &str) -> Option<Domain> {
        match name {
            "unit_square" => Some(Domain::UnitSquare),
            "right_triangle" => Some(Domain::RightTriangle),
            "l_shape" => Some(Domain::LShape),
            _ => None,
        }
    }
}

/// Meshes a built-in domain so that the longest edge is at most `1.5 * target_h`.
pub fn build_builtin_domain(domain: &Domain, target_h: f64) -> Result<Mesh, MeshError> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(MeshError::BadMeshSize(target_h));
    }
    let cells = |len: f64| ((len / target_h) - 1e-9).ceil().max(1.0) as usize;
    let mesh = match domain {
        Domain::UnitSquare => {
            let mut b = LatticeBuilder::new(cells(1.0));
            b.union_jack_block(0, 0);
            b.finish()
        }
        Domain::LShape => {
            let mut b = LatticeBuilder::new(cells(1.0));
            b.union_jack_block(0, 0);
            b.union_jack_block(1, 0);
            b.union_jack_block(0, 1);
            b.finish()
        }
        Domain::RightTriangle => right_triangle(cells(1.0)),
        Domain::Polygon(pts) => polygon_mesh(pts, target_h)?,
    };
    Ok(mesh)
}

/// Structured mesher on the lattice `(i, j) / n` with vertex deduplication.
struct LatticeBuilder {
    n: usize,
    index: HashMap<(usize, usize), usize>,
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
}

impl LatticeBuilder {
    fn new(n: usize) -> Self {
        Self {
            n,
            index: HashMap::new(),
            vertices: Vec::new(),
            triangles: Vec::new(),
        }
    }

    fn vertex(&mut self, i: usize, j: usize) -> usize {
        let n = self.n as f64;
        let vertices = &mut self.vertices;
        *self.index.entry((i, j)).or_insert_with(|| {
            vertices.push(Point2::new(i as f64 / n, j as f64 / n));
            vertices.len() - 1
        })
    }

    /// Unit block `[bx, bx+1] x [by, by+1]` with every cell diagonal pointing at the block
    /// centre, so no triangle touching a block corner has all three vertices on the block boundary.
    fn union_jack_block(&mut self, bx: usize, by: usize) {
        let n = self.n;
        for j in 0..n {
            for i in 0..n {
                let (gi, gj) = (bx * n + i, by * n + j);
                let v00 = self.vertex(gi, gj);
                let v10 = self.vertex(gi + 1, gj);
                let v11 = self.vertex(gi + 1, gj + 1);
                let v01 = self.vertex(gi, gj + 1);
                let cx = 2 * i + 1;
                let cy = 2 * j + 1;
                let sw_ne = (cx > n) == (cy > n);
                if sw_ne {
                    self.triangles.push([v00, v10, v11]);
                    self.triangles.push([v00, v11, v01]);
                } else {
                    self.triangles.push([v00, v10, v01]);
                    self.triangles.push([v10, v11, v01]);
                }
            }
        }
    }

    fn finish(self) -> Mesh {
        Mesh::from_triangles(self.vertices, self.triangles)
    }
}

fn right_triangle(n: usize) -> Mesh {
    let mut b = LatticeBuilder::new(n);
    for j in 0..n {
        for i in 0..(n - j) {
            let v00 = b.vertex(i, j);
            let v10 = b.vertex(i + 1, j);
            let v01 = b.vertex(i, j + 1);
            b.triangles.push([v00, v10, v01]);
            if i + j + 2 <= n {
                let v11 = b.vertex(i + 1, j + 1);
                b.triangles.push([v10, v11, v01]);
            }
        }
    }
    b.finish()
}

fn segments_cross(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let o1 = signed_area2(a, b, c);
    let o2 = signed_area2(a, b, d);
    let o3 = signed_area2(c, d, a);
    let o4 = signed_area2(c, d, b);
    let on = |o: f64, p: &Point2, q: &Point2, r: &Point2| {
        o == 0.0
            && r.x1 >= p.x1.min(q.x1)
            && r.x1 <= p.x1.max(q.x1)
            && r.x2 >= p.x2.min(q.x2)
            && r.x2 <= p.x2.max(q.x2)
    };
    ((o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) && o1 != 0.0 && o2 != 0.0 && o3 != 0.0 && o4 != 0.0)
        || on(o1, a, b, c)
        || on(o2, a, b, d)
        || on(o3, c, d, a)
        || on(o4, c, d, b)
}

/// Rejects polygons that are not simple and returns the vertices in counter-clockwise order.
pub fn check_simple_polygon(pts: &[Point2]) -> Result<Vec<Point2>, MeshError> {
    let n = pts.len();
    if n < 3 {
        return Err(MeshError::BadPolygon(format!("need at least 3 vertices, got {n}")));
    }
    if let Some(i) = pts.iter().position(|p| !p.x1.is_finite() || !p.x2.is_finite()) {
        return Err(MeshError::BadPolygon(format!("vertex {i} is not finite")));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if pts[i] == pts[j] {
                return Err(MeshError::BadPolygon(format!("vertices {i} and {j} coincide")));
            }
        }
    }
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_cross(&a, &b, &c, &d) {
                return Err(MeshError::BadPolygon(format!(
                    "edges {i}-{} and {j}-{} intersect; the polygon is not simple",
                    (i + 1) % n,
                    (j + 1) % n
                )));
            }
        }
    }
    let area2: f64 = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x1 * b.x2 - b.x1 * a.x2
        })
        .sum();
    if area2 == 0.0 {
        return Err(MeshError::BadPolygon("polygon has zero area".into()));
    }
    let mut out = pts.to_vec();
    if area2 < 0.0 {
        out.reverse();
    }
    Ok(out)
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
fn ear_clip(pts: &[Point2]) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut ring: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let (ia, ib, ic) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if signed_area2(&a, &b, &c) <= 0.0 {
                continue;
            }
            let blocked = ring.iter().any(|&q| {
                if q == ia || q == ib || q == ic {
                    return false;
                }
                let l = barycentric(&[a, b, c], &pts[q]);
                l.iter().all(|v| *v >= -1e-14)
            });
            if blocked {
                continue;
            }
            // prefer the ear whose smallest angle is largest
            let quality = min_angle(&a, &b, &c);
            if best.map_or(true, |(_, q)| quality > q) {
                best = Some((k, quality));
            }
        }
        let (k, _) = best.ok_or_else(|| MeshError::BadPolygon("ear clipping found no ear".into()))?;
        tris.push([ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]]);
        ring.remove(k);
    }
    tris.push([ring[0], ring[1], ring[2]]);
    Ok(tris)
}

fn min_angle(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    let angle = |p: &Point2, q: &Point2, r: &Point2| {
        let (ux, uy) = (q.x1 - p.x1, q.x2 - p.x2);
        let (vx, vy) = (r.x1 - p.x1, r.x2 - p.x2);
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

fn polygon_mesh(pts: &[Point2], target_h: f64) -> Result<Mesh, MeshError> {
    let ccw = check_simple_polygon(pts)?;
    let tris = ear_clip(&ccw)?;
    let mut mesh = Mesh::from_triangles(ccw, tris);
    while mesh.mesh_size() > 1.5 * target_h {
        mesh = mesh.refine_red();
    }
    Ok(mesh.into_root())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(h: f64) -> Mesh {
        build_builtin_domain(&Domain::UnitSquare, h).unwrap()
    }

    #[test]
    fn unit_square_counts() {
        let m = unit_square(0.5);
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.num_vertices(), 9);
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        assert!((m.mesh_size() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_single_cell() {
        let m = build_builtin_domain(&Domain::RightTriangle, 1.0).unwrap();
        assert_eq!(m.num_triangles(), 1);
        assert_eq!(m.num_vertices(), 3);
        assert!(m.validate().is_empty());
        let m4 = build_builtin_domain(&Domain::RightTriangle, 0.25).unwrap();
        assert_eq!(m4.num_triangles(), 16);
        assert!(m4.validate().is_empty());
    }

    #[test]
    fn l_shape_counts() {
        let m = build_builtin_domain(&Domain::LShape, 0.5).unwrap();
        assert_eq!(m.num_triangles(), 24);
        assert_eq!(m.num_vertices(), 21);
        // V - E + T = 1 gives E = 44
        assert_eq!(m.num_edges(), 44);
        assert!(m.validate().is_empty(), "{:?}", m.validate());
    }

    #[test]
    fn no_corner_triangle_has_only_boundary_vertices() {
        for domain in [Domain::UnitSquare, Domain::LShape] {
            let m = build_builtin_domain(&domain, 0.25).unwrap();
            let on_bd = m.boundary_vertex_flags();
            for tri in m.triangles() {
                assert!(tri.iter().any(|v| !on_bd[*v]), "{domain:?} {tri:?}");
            }
        }
    }

    #[test]
    fn red_refinement_counts_and_size() {
        let tri = build_builtin_domain(&Domain::RightTriangle, 1.0).unwrap();
        let f = tri.refine_red();
        assert_eq!((f.num_triangles(), f.num_vertices()), (4, 6));
        let sq = unit_square(0.5).refine_red();
        assert_eq!((sq.num_triangles(), sq.num_vertices()), (32, 25));
        assert_eq!(sq.level(), 1);
        let coarse = unit_square(0.5);
        assert!((sq.mesh_size() - coarse.mesh_size() / 2.0).abs() < 1e-14);
        assert!(sq.validate().is_empty());
    }

    #[test]
    fn parent_map_is_consistent() {
        let coarse = build_builtin_domain(&Domain::LShape, 0.5).unwrap();
        let fine = coarse.refine_red();
        let pm = fine.parent().unwrap();
        let mut per_parent = vec![0; coarse.num_triangles()];
        for (t, (p, slot)) in pm.triangle_parent.iter().enumerate() {
            per_parent[*p] += 1;
            assert!(*slot < 4);
            let parent = coarse.triangle_points(*p);
            for v in fine.triangles()[t] {
                let l = barycentric(&parent, &fine.vertices()[v]);
                assert!(l.iter().all(|x| *x > -1e-14));
            }
        }
        assert!(per_parent.iter().all(|c| *c == 4));
        for (v, origin) in pm.vertex_origin.iter().enumerate() {
            match origin {
                VertexOrigin::Vertex(c) => assert_eq!(fine.vertices()[v], coarse.vertices()[*c]),
                VertexOrigin::EdgeMidpoint(a, b) => {
                    let mid = coarse.vertices()[*a].midpoint(&coarse.vertices()[*b]);
                    assert_eq!(fine.vertices()[v], mid);
                }
            }
        }
    }

    #[test]
    fn flipped_triangle_reported() {
        let m = unit_square(0.5);
        let mut tris = m.triangles().to_vec();
        tris[3].swap(0, 1);
        let bad = Mesh::from_parts(m.vertices().to_vec(), tris, m.boundary_edges().to_vec());
        assert!(bad.validate().iter().any(|i| matches!(i, MeshIssue::NonPositiveArea(3))));
    }

    #[test]
    fn duplicated_vertex_hanging_node_reported() {
        // two triangles share the diagonal geometrically, but the upper one uses a copy of a
        // vertex and an extra midpoint vertex, leaving a T-junction on the diagonal
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(1.0, 1.0),
        ];
        let tris = vec![[0, 1, 2], [0, 4, 3], [4, 5, 3]];
        let m = Mesh::from_triangles(vertices, tris);
        let issues = m.validate();
        assert!(issues.iter().any(|i| matches!(i, MeshIssue::DuplicateVertex(2, 5))), "{issues:?}");
        assert!(issues.iter().any(|i| matches!(i, MeshIssue::HangingNode { vertex: 4, .. })), "{issues:?}");
    }

    #[test]
    fn polygon_meshing() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        let m = build_builtin_domain(&Domain::Polygon(pts.clone()), 0.3).unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        assert!(m.mesh_size() <= 0.45);
        let area: f64 = (0..m.num_triangles()).map(|t| m.triangle_area(t)).sum();
        assert!((area - 3.0).abs() < 1e-12);
        // clockwise input is accepted
        let mut cw = pts;
        cw.reverse();
        assert!(build_builtin_domain(&Domain::Polygon(cw), 1.0).is_ok());
    }

    #[test]
    fn bowtie_rejected() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let err = build_builtin_domain(&Domain::Polygon(pts), 0.5).unwrap_err();
        assert!(matches!(err, MeshError::BadPolygon(_)));
        assert!(err.to_string().contains("not simple"));
    }

    #[test]
    fn parse_errors_are_positioned() {
        let text = "# c\n3 1 3\n0 0\n1 0\n0 1\n1 2 x\n1 2\n2 3\n3 1\n";
        match Mesh::parse(text, "m.txt") {
            Err(MeshError::Parse { line, column, .. }) => assert_eq!((line, column), (6, 5)),
            other => panic!("{other:?}"),
        }
        let short = "3 1 3\n0 0\n";
        assert!(matches!(Mesh::parse(short, "s"), Err(MeshError::Parse { .. })));
        let out_of_range = "3 1 0\n0 0\n1 0\n0 1\n1 2 4\n";
        match Mesh::parse(out_of_range, "r") {
            Err(MeshError::Parse { line, column, message, .. }) => {
                assert_eq!((line, column), (5, 5));
                assert!(message.contains("out of range"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let m = build_builtin_domain(&Domain::LShape, 0.5).unwrap().refine_red();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.mesh");
        m.save(&path).unwrap();
        let back = Mesh::load(&path).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }

    #[test]
    fn locate_points() {
        let m = unit_square(0.25);
        let (t, l) = m.locate(&Point2::new(0.3, 0.7)).unwrap();
        assert!(l.iter().all(|x| *x >= -1e-12));
        let pts = m.triangle_points(t);
        let x = l[0] * pts[0].x1 + l[1] * pts[1].x1 + l[2] * pts[2].x1;
        assert!((x - 0.3).abs() < 1e-14);
        assert!(m.locate(&Point2::new(1.5, 0.5)).is_none());
    }
}
