//! Triangulations of the unit square and barycenter (Alfeld) refinement.
//!
//! Vertices of the structured mesh are numbered lexicographically by `(y, x)`
//! grid position; refinement appends one barycenter per parent triangle after
//! the parent vertices. Triangles are stored counterclockwise. Edges get a
//! global index in order of first appearance while sweeping triangles and
//! their local edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{NseError, Result};

/// Side of the unit square a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Bottom,
    Right,
    Top,
    Left,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Bottom,
        BoundaryTag::Right,
        BoundaryTag::Top,
        BoundaryTag::Left,
    ];

    pub fn index(self) -> usize {
        match self {
            BoundaryTag::Bottom => 0,
            BoundaryTag::Right => 1,
            BoundaryTag::Top => 2,
            BoundaryTag::Left => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Unique undirected edge with its incident triangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    pub triangles: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    barycenter_refined: bool,
}

/// Local edge `i` of a triangle joins local vertices `LOCAL_EDGES[i]`.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Mesh {
    /// Builds a mesh from raw parts and derives the edge table. No validity
    /// checks are made here; see [`validate_mesh`].
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(NseError::InvalidArgument(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
        }
        for be in &boundary_edges {
            if be.vertices.iter().any(|&v| v >= nv) {
                return Err(NseError::InvalidArgument(
                    "boundary edge references a vertex out of range".into(),
                ));
            }
        }
        let (edges, triangle_edges) = build_edge_table(&triangles);
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            barycenter_refined: false,
        })
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

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge indices of each triangle's local edges.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
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

    /// True when the mesh came out of [`barycenter_refine`], which is what
    /// Scott-Vogelius inf-sup stability requires.
    pub fn is_barycenter_refined(&self) -> bool {
        self.barycenter_refined
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Longest edge length.
    pub fn max_diameter(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let [a, b] = e.vertices;
                let d = [
                    self.vertices[a][0] - self.vertices[b][0],
                    self.vertices[a][1] - self.vertices[b][1],
                ];
                d[0].hypot(d[1])
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: `vertices <V> triangles <T>`, then `x y` lines, then
    /// 0-based `i j k` lines.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "vertices {} triangles {}",
            self.num_vertices(),
            self.num_triangles()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_ascii().as_bytes())?;
        Ok(())
    }
}

fn build_edge_table(triangles: &[[usize; 3]]) -> (Vec<Edge>, Vec<[usize; 3]>) {
    let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges: Vec<Edge> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut te = [0usize; 3];
        for (le, [i, j]) in LOCAL_EDGES.iter().enumerate() {
            let key = edge_key(tri[*i], tri[*j]);
            let idx = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: key,
                    triangles: Vec::with_capacity(2),
                });
                edges.len() - 1
            });
            edges[idx].triangles.push(t);
            te[le] = idx;
        }
        triangle_edges.push(te);
    }
    (edges, triangle_edges)
}

/// Uniform `n x n` grid of the unit square, each cell cut along its
/// lower-left to upper-right diagonal.
pub fn uniform_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(NseError::InvalidArgument(
            "mesh resolution n must be at least 1".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let np = n + 1;
    let id = |i: usize, j: usize| j * np + i;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            // exact endpoints rather than accumulated i*h
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = id(i, j);
            let v10 = id(i + 1, j);
            let v01 = id(i, j + 1);
            let v11 = id(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push(BoundaryEdge {
            vertices: [id(i, 0), id(i + 1, 0)],
            tag: BoundaryTag::Bottom,
        });
    }
    for j in 0..n {
        boundary_edges.push(BoundaryEdge {
            vertices: [id(n, j), id(n, j + 1)],
            tag: BoundaryTag::Right,
        });
    }
    for i in 0..n {
        boundary_edges.push(BoundaryEdge {
            vertices: [id(i + 1, n), id(i, n)],
            tag: BoundaryTag::Top,
        });
    }
    for j in 0..n {
        boundary_edges.push(BoundaryEdge {
            vertices: [id(0, j + 1), id(0, j)],
            tag: BoundaryTag::Left,
        });
    }
    Mesh::from_parts(vertices, triangles, boundary_edges)
}

/// Splits every triangle into three by joining its barycenter to its
/// vertices. Child `i` of parent `t` is `3t + i` and holds parent edge `i`.
pub fn barycenter_refine(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.num_triangles());
    let mut triangles = Vec::with_capacity(3 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [p0, p1, p2] = mesh.triangle_coords(t);
        vertices.push([
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]);
        let g = nv + t;
        let [a, b, c] = *tri;
        triangles.push([a, b, g]);
        triangles.push([b, c, g]);
        triangles.push([c, a, g]);
    }
    let mut refined = Mesh::from_parts(vertices, triangles, mesh.boundary_edges.clone())?;
    refined.barycenter_refined = true;
    Ok(refined)
}

/// Structured mesh followed by one barycenter refinement.
pub fn refined_square_mesh(n: usize) -> Result<Mesh> {
    barycenter_refine(&uniform_square_mesh(n)?)
}

/// Outcome of one mesh check, with the indices of offending entities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshCheck {
    pub name: &'static str,
    pub passed: bool,
    pub offenders: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub checks: Vec<MeshCheck>,
}

impl MeshReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&MeshCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_ORIENTATION: &str = "orientation";
pub const CHECK_MANIFOLD: &str = "manifold";
pub const CHECK_BOUNDARY_TAGS: &str = "boundary_tags";
pub const CHECK_AREA: &str = "area";
pub const CHECK_EULER: &str = "euler";

/// Checks the structural invariants of a unit-square triangulation.
pub fn validate_mesh(mesh: &Mesh) -> MeshReport {
    let mut checks = Vec::new();

    let flipped: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| mesh.signed_area(t) <= 0.0)
        .collect();
    checks.push(MeshCheck {
        name: CHECK_ORIENTATION,
        passed: flipped.is_empty(),
        detail: format!("{} non-positive triangles", flipped.len()),
        offenders: flipped,
    });

    // Interior edges need 2 triangles; edges listed as boundary need exactly 1.
    let mut boundary_keys: HashMap<[usize; 2], usize> = HashMap::new();
    let mut duplicate_boundary = Vec::new();
    for (i, be) in mesh.boundary_edges.iter().enumerate() {
        let key = edge_key(be.vertices[0], be.vertices[1]);
        if boundary_keys.insert(key, i).is_some() {
            duplicate_boundary.push(i);
        }
    }
    let mut bad_edges = Vec::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let expected = if boundary_keys.contains_key(&edge.vertices) {
            1
        } else {
            2
        };
        if edge.triangles.len() != expected {
            bad_edges.push(e);
        }
    }
    let edge_lookup: HashMap<[usize; 2], usize> = mesh
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (e.vertices, i))
        .collect();
    let orphan_boundary: Vec<usize> = mesh
        .boundary_edges
        .iter()
        .enumerate()
        .filter(|(_, be)| !edge_lookup.contains_key(&edge_key(be.vertices[0], be.vertices[1])))
        .map(|(i, _)| i)
        .collect();
    checks.push(MeshCheck {
        name: CHECK_MANIFOLD,
        passed: bad_edges.is_empty() && orphan_boundary.is_empty(),
        detail: format!(
            "{} edges with wrong incidence, {} boundary edges without a triangle",
            bad_edges.len(),
            orphan_boundary.len()
        ),
        offenders: bad_edges,
    });

    // Each boundary edge must lie on the side its tag names.
    let on_side = |tag: BoundaryTag, p: [f64; 2]| -> bool {
        let tol = 1e-12;
        match tag {
            BoundaryTag::Bottom => p[1].abs() < tol,
            BoundaryTag::Right => (p[0] - 1.0).abs() < tol,
            BoundaryTag::Top => (p[1] - 1.0).abs() < tol,
            BoundaryTag::Left => p[0].abs() < tol,
        }
    };
    let mut mistagged: Vec<usize> = mesh
        .boundary_edges
        .iter()
        .enumerate()
        .filter(|(_, be)| {
            !be.vertices
                .iter()
                .all(|&v| on_side(be.tag, mesh.vertices[v]))
        })
        .map(|(i, _)| i)
        .collect();
    mistagged.extend(duplicate_boundary);
    checks.push(MeshCheck {
        name: CHECK_BOUNDARY_TAGS,
        passed: mistagged.is_empty(),
        detail: format!("{} mistagged or duplicated boundary edges", mistagged.len()),
        offenders: mistagged,
    });

    let area = mesh.total_area();
    checks.push(MeshCheck {
        name: CHECK_AREA,
        passed: (area - 1.0).abs() <= 1e-12,
        detail: format!("total area {area:.17}"),
        offenders: Vec::new(),
    });

    let euler =
        mesh.num_vertices() as i64 - mesh.num_edges() as i64 + mesh.num_triangles() as i64;
    checks.push(MeshCheck {
        name: CHECK_EULER,
        passed: euler == 1,
        detail: format!("V - E + T = {euler}"),
        offenders: Vec::new(),
    });

    MeshReport { checks }
}
