//! Scott-Vogelius degree-of-freedom maps: continuous P2 velocity, discontinuous
//! P1 pressure.
//!
//! Scalar P2 nodes are the mesh vertices followed by the edge midpoints in
//! global edge order. Velocity dofs are blocked by component: dof `c * ns + s`
//! is component `c` at scalar node `s`. Pressure dof `3t + i` is the value of
//! the pressure at local vertex `i` of triangle `t`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::mesh::{BoundaryTag, Mesh, LOCAL_EDGES};

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

/// Affine element data: area and the constant barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = p;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        let grad_lambda = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Self {
            vertices: p,
            area,
            grad_lambda,
        }
    }

    pub fn point(&self, l: &[f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let v0 = self.vertices[0];
        let d = [x[0] - v0[0], x[1] - v0[1]];
        let g = &self.grad_lambda;
        let l1 = g[1][0] * d[0] + g[1][1] * d[1];
        let l2 = g[2][0] * d[0] + g[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

/// P2 shape function values at barycentric point `l`. Nodes 0..3 are the
/// vertices, node `3 + e` is the midpoint of local edge `e`.
#[inline]
pub fn p2_values(l: &[f64; 3]) -> [f64; 6] {
    let mut v = [0.0; 6];
    for i in 0..3 {
        v[i] = l[i] * (2.0 * l[i] - 1.0);
    }
    for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        v[3 + e] = 4.0 * l[*a] * l[*b];
    }
    v
}

/// P2 shape function gradients at barycentric point `l`.
#[inline]
pub fn p2_gradients(l: &[f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        g[i] = [s * gl[i][0], s * gl[i][1]];
    }
    for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        g[3 + e] = [
            4.0 * (l[*a] * gl[*b][0] + l[*b] * gl[*a][0]),
            4.0 * (l[*a] * gl[*b][1] + l[*b] * gl[*a][1]),
        ];
    }
    g
}

#[derive(Debug)]
pub struct MixedSpace {
    id: u64,
    mesh: Arc<Mesh>,
    geometry: Vec<ElementGeometry>,
    element_nodes: Vec<[usize; 6]>,
    node_coords: Vec<[f64; 2]>,
    boundary_nodes_by_tag: [Vec<usize>; 4],
    boundary_node_mask: Vec<bool>,
    n_scalar: usize,
}

impl MixedSpace {
    pub fn new(mesh: Arc<Mesh>) -> Arc<Self> {
        if !mesh.is_barycenter_refined() {
            log::warn!(
                "building Scott-Vogelius space on a mesh without barycenter refinement; \
                 inf-sup stability is not guaranteed"
            );
        }
        let nv = mesh.num_vertices();
        let n_scalar = nv + mesh.num_edges();
        let geometry: Vec<_> = (0..mesh.num_triangles())
            .map(|t| ElementGeometry::new(mesh.triangle_coords(t)))
            .collect();
        let element_nodes: Vec<[usize; 6]> = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(tri, te)| [tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]])
            .collect();
        let mut node_coords = mesh.vertices().to_vec();
        node_coords.extend(mesh.edges().iter().map(|e| {
            let a = mesh.vertices()[e.vertices[0]];
            let b = mesh.vertices()[e.vertices[1]];
            [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
        }));

        let edge_index: std::collections::HashMap<[usize; 2], usize> = mesh
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.vertices, i))
            .collect();
        let mut by_tag: [Vec<usize>; 4] = Default::default();
        for be in mesh.boundary_edges() {
            let [a, b] = be.vertices;
            let key = if a < b { [a, b] } else { [b, a] };
            let list = &mut by_tag[be.tag.index()];
            list.push(a);
            list.push(b);
            if let Some(&e) = edge_index.get(&key) {
                list.push(nv + e);
            }
        }
        let mut mask = vec![false; n_scalar];
        for list in by_tag.iter_mut() {
            list.sort_unstable();
            list.dedup();
            for &s in list.iter() {
                mask[s] = true;
            }
        }
        Arc::new(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            mesh,
            geometry,
            element_nodes,
            node_coords,
            boundary_nodes_by_tag: by_tag,
            boundary_node_mask: mask,
            n_scalar,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Whether the mesh is barycenter refined; without it the pair is not
    /// known to be inf-sup stable.
    pub fn is_inf_sup_safe(&self) -> bool {
        self.mesh.is_barycenter_refined()
    }

    pub fn num_elements(&self) -> usize {
        self.geometry.len()
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    /// Global scalar P2 node indices of triangle `t`.
    pub fn element_nodes(&self, t: usize) -> &[usize; 6] {
        &self.element_nodes[t]
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_scalar
    }

    pub fn n_pressure(&self) -> usize {
        3 * self.num_elements()
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// Scalar nodes on edges carrying `tag`, sorted.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary_nodes_by_tag[tag.index()]
    }

    pub fn is_boundary_node(&self, s: usize) -> bool {
        self.boundary_node_mask[s]
    }

    /// Velocity dofs on edges carrying `tag` (both components), sorted.
    pub fn boundary_velocity_dofs(&self, tag: BoundaryTag) -> Vec<usize> {
        let nodes = self.boundary_nodes(tag);
        let mut dofs: Vec<usize> = nodes.to_vec();
        dofs.extend(nodes.iter().map(|s| s + self.n_scalar));
        dofs
    }

    /// All constrained velocity dofs, sorted.
    pub fn constrained_velocity_dofs(&self) -> Vec<usize> {
        (0..self.n_velocity())
            .filter(|&d| self.boundary_node_mask[d % self.n_scalar])
            .collect()
    }

    /// All free velocity dofs, sorted.
    pub fn interior_velocity_dofs(&self) -> Vec<usize> {
        (0..self.n_velocity())
            .filter(|&d| !self.boundary_node_mask[d % self.n_scalar])
            .collect()
    }

    /// Triangle containing `x` and the barycentric coordinates there.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12;
        self.geometry.iter().enumerate().find_map(|(t, g)| {
            let l = g.barycentric(x);
            l.iter().all(|&c| c >= -tol).then_some((t, l))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Velocity,
    Pressure,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Velocity => "velocity",
            FieldKind::Pressure => "pressure",
        }
    }
}

/// Coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct FEField {
    space: Arc<MixedSpace>,
    kind: FieldKind,
    coeffs: Vec<f64>,
}

impl FEField {
    pub fn zeros(space: &Arc<MixedSpace>, kind: FieldKind) -> Self {
        let n = match kind {
            FieldKind::Velocity => space.n_velocity(),
            FieldKind::Pressure => space.n_pressure(),
        };
        Self {
            space: Arc::clone(space),
            kind,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(
        space: &Arc<MixedSpace>,
        kind: FieldKind,
        coeffs: Vec<f64>,
    ) -> crate::Result<Self> {
        let expected = match kind {
            FieldKind::Velocity => space.n_velocity(),
            FieldKind::Pressure => space.n_pressure(),
        };
        if coeffs.len() != expected {
            return Err(crate::NseError::Dimension(format!(
                "{} field needs {expected} coefficients, got {}",
                kind.name(),
                coeffs.len()
            )));
        }
        Ok(Self {
            space: Arc::clone(space),
            kind,
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn same_space(&self, other: &MixedSpace) -> bool {
        self.space.id() == other.id()
    }

    pub fn expect(&self, space: &MixedSpace, kind: FieldKind) -> crate::Result<()> {
        if !self.same_space(space) {
            return Err(crate::NseError::SpaceMismatch);
        }
        if self.kind != kind {
            return Err(crate::NseError::FieldKind {
                expected: kind.name(),
                got: self.kind.name(),
            });
        }
        Ok(())
    }

    /// `self + s * other`, coefficientwise.
    pub fn axpy(&self, s: f64, other: &FEField) -> FEField {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> FEField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Local velocity coefficients `[component][node]` on triangle `t`.
    pub fn local_velocity(&self, t: usize) -> [[f64; 6]; 2] {
        let nodes = self.space.element_nodes(t);
        let ns = self.space.n_scalar();
        let mut out = [[0.0; 6]; 2];
        for (k, &s) in nodes.iter().enumerate() {
            out[0][k] = self.coeffs[s];
            out[1][k] = self.coeffs[ns + s];
        }
        out
    }

    /// Velocity value at barycentric point `l` of triangle `t`.
    pub fn velocity_at(&self, t: usize, l: &[f64; 3]) -> [f64; 2] {
        let loc = self.local_velocity(t);
        let phi = p2_values(l);
        let mut u = [0.0; 2];
        for k in 0..6 {
            u[0] += loc[0][k] * phi[k];
            u[1] += loc[1][k] * phi[k];
        }
        u
    }

    /// Velocity gradient `[component][direction]` at barycentric point `l` of
    /// triangle `t`.
    pub fn velocity_gradient_at(&self, t: usize, l: &[f64; 3]) -> [[f64; 2]; 2] {
        let loc = self.local_velocity(t);
        let dphi = p2_gradients(l, &self.space.geometry(t).grad_lambda);
        let mut g = [[0.0; 2]; 2];
        for k in 0..6 {
            for c in 0..2 {
                g[c][0] += loc[c][k] * dphi[k][0];
                g[c][1] += loc[c][k] * dphi[k][1];
            }
        }
        g
    }

    pub fn pressure_at(&self, t: usize, l: &[f64; 3]) -> f64 {
        (0..3).map(|i| self.coeffs[3 * t + i] * l[i]).sum()
    }

    /// Point evaluation of a velocity field anywhere in the closed domain.
    pub fn eval_velocity(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let (t, l) = self.space.locate(x)?;
        Some(self.velocity_at(t, &l))
    }
}

/// Nodal interpolation of a vector function into the velocity space.
pub fn interpolate_velocity(
    space: &Arc<MixedSpace>,
    f: impl Fn(f64, f64) -> [f64; 2],
) -> FEField {
    let ns = space.n_scalar();
    let mut coeffs = vec![0.0; 2 * ns];
    for (s, p) in space.node_coords().iter().enumerate() {
        let v = f(p[0], p[1]);
        coeffs[s] = v[0];
        coeffs[ns + s] = v[1];
    }
    FEField {
        space: Arc::clone(space),
        kind: FieldKind::Velocity,
        coeffs,
    }
}

/// Elementwise vertex interpolation into the discontinuous P1 pressure space.
pub fn interpolate_pressure(space: &Arc<MixedSpace>, f: impl Fn(f64, f64) -> f64) -> FEField {
    let mut coeffs = Vec::with_capacity(space.n_pressure());
    for t in 0..space.num_elements() {
        for p in space.geometry(t).vertices {
            coeffs.push(f(p[0], p[1]));
        }
    }
    FEField {
        space: Arc::clone(space),
        kind: FieldKind::Pressure,
        coeffs,
    }
}
