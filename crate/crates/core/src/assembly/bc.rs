//! Dirichlet data by elimination and lifting.

use std::sync::Arc;

use crate::error::{NseError, Result};
use crate::fem::space::{FEField, FieldKind, MixedSpace};
use crate::linsolve::SaddleSystem;
use crate::mesh::BoundaryTag;

use super::sparse::SparseMatrix;

pub type VelocityFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Boundary velocity per side. Nodes shared by two sides (the corners) take
/// the value of the side applied last, in the order Bottom, Right, Left, Top,
/// so a moving lid owns its corners.
#[derive(Clone)]
pub struct BoundaryData {
    per_tag: [VelocityFn; 4],
}

impl BoundaryData {
    pub fn uniform(f: VelocityFn) -> Self {
        Self {
            per_tag: [f.clone(), f.clone(), f.clone(), f],
        }
    }

    pub fn homogeneous() -> Self {
        Self::uniform(Arc::new(|_, _| [0.0, 0.0]))
    }

    /// Cavity lid: `velocity` on Top, no-slip elsewhere.
    pub fn lid(velocity: [f64; 2]) -> Self {
        let mut data = Self::homogeneous();
        data.per_tag[BoundaryTag::Top.index()] = Arc::new(move |_, _| velocity);
        data
    }

    pub fn with_tag(mut self, tag: BoundaryTag, f: VelocityFn) -> Self {
        self.per_tag[tag.index()] = f;
        self
    }

    pub fn value(&self, tag: BoundaryTag, x: f64, y: f64) -> [f64; 2] {
        (self.per_tag[tag.index()])(x, y)
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryData { .. }")
    }
}

const APPLY_ORDER: [BoundaryTag; 4] = [
    BoundaryTag::Bottom,
    BoundaryTag::Right,
    BoundaryTag::Left,
    BoundaryTag::Top,
];

/// Interpolated boundary data on a space.
#[derive(Debug, Clone)]
pub struct BCData {
    lifting: FEField,
    constrained: Vec<usize>,
    interior: Vec<usize>,
    /// velocity dof -> interior index, `usize::MAX` for constrained dofs
    interior_map: Vec<usize>,
    /// velocity dof -> constrained index, `usize::MAX` for interior dofs
    constrained_map: Vec<usize>,
}

impl BCData {
    pub fn new(space: &Arc<MixedSpace>, data: &BoundaryData) -> Self {
        let ns = space.n_scalar();
        let mut lifting = FEField::zeros(space, FieldKind::Velocity);
        for tag in APPLY_ORDER {
            for &s in space.boundary_nodes(tag) {
                let p = space.node_coords()[s];
                let v = data.value(tag, p[0], p[1]);
                lifting.coeffs_mut()[s] = v[0];
                lifting.coeffs_mut()[ns + s] = v[1];
            }
        }
        let constrained = space.constrained_velocity_dofs();
        let interior = space.interior_velocity_dofs();
        let mut interior_map = vec![usize::MAX; space.n_velocity()];
        for (i, &d) in interior.iter().enumerate() {
            interior_map[d] = i;
        }
        let mut constrained_map = vec![usize::MAX; space.n_velocity()];
        for (i, &d) in constrained.iter().enumerate() {
            constrained_map[d] = i;
        }
        Self {
            lifting,
            constrained,
            interior,
            interior_map,
            constrained_map,
        }
    }

    pub fn homogeneous(space: &Arc<MixedSpace>) -> Self {
        Self::new(space, &BoundaryData::homogeneous())
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        self.lifting.space()
    }

    /// Boundary values at constrained dofs, zero elsewhere.
    pub fn lifting(&self) -> &FEField {
        &self.lifting
    }

    pub fn constrained_dofs(&self) -> &[usize] {
        &self.constrained
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_map(&self) -> &[usize] {
        &self.interior_map
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.lifting.coeffs().iter().all(|&v| v == 0.0)
    }

    /// Net discrete boundary flux `(div g_h, 1)` of the lifting.
    pub fn net_flux(&self, divergence: &SparseMatrix) -> f64 {
        divergence.mul_vec(self.lifting.coeffs()).iter().sum()
    }

    /// Interior coefficients of a velocity field.
    pub fn restrict(&self, field: &FEField) -> Vec<f64> {
        self.interior.iter().map(|&d| field.coeffs()[d]).collect()
    }

    /// Full field from interior values plus the lifting.
    pub fn expand(&self, interior_values: &[f64]) -> FEField {
        let mut out = self.lifting.clone();
        for (&d, &v) in self.interior.iter().zip(interior_values) {
            out.coeffs_mut()[d] = v;
        }
        out
    }

    /// Overwrites the boundary dofs of `field` with the boundary data.
    pub fn impose(&self, field: &mut FEField) {
        for &d in &self.constrained {
            field.coeffs_mut()[d] = self.lifting.coeffs()[d];
        }
    }

    /// Largest deviation of `field` from the data at constrained dofs.
    pub fn boundary_deviation(&self, field: &FEField) -> f64 {
        self.constrained
            .iter()
            .map(|&d| (field.coeffs()[d] - self.lifting.coeffs()[d]).abs())
            .fold(0.0, f64::max)
    }
}

/// Eliminates the constrained velocity dofs from `[[A, B^T], [B, 0]] (u, p) =
/// (f, 0)`, moving the lifting terms to the right-hand side.
pub fn apply_dirichlet(
    velocity_block: &SparseMatrix,
    divergence: &SparseMatrix,
    load: &[f64],
    bc: &BCData,
) -> Result<SaddleSystem> {
    let nu = bc.interior_map.len();
    if velocity_block.nrows() != nu || velocity_block.ncols() != nu {
        return Err(NseError::Dimension(format!(
            "velocity block is {}x{}, boundary data expects {nu}",
            velocity_block.nrows(),
            velocity_block.ncols()
        )));
    }
    if divergence.ncols() != nu || load.len() != nu {
        return Err(NseError::Dimension(
            "divergence block or load vector does not match boundary data".into(),
        ));
    }
    let ni = bc.n_interior();
    let a = velocity_block.extract(&bc.interior, &bc.interior_map, ni);
    let all_p: Vec<usize> = (0..divergence.nrows()).collect();
    let b = divergence.extract(&all_p, &bc.interior_map, ni);

    let g = bc.lifting.coeffs();
    let mut rhs_u: Vec<f64> = bc.interior.iter().map(|&d| load[d]).collect();
    let mut rhs_p = vec![0.0; divergence.nrows()];
    if !bc.is_homogeneous() {
        for (i, &r) in bc.interior.iter().enumerate() {
            let lift: f64 = velocity_block
                .row(r)
                .filter(|(c, _)| bc.constrained_map[*c] != usize::MAX)
                .map(|(c, v)| v * g[c])
                .sum();
            rhs_u[i] -= lift;
        }
        for (k, rp) in rhs_p.iter_mut().enumerate() {
            let lift: f64 = divergence
                .row(k)
                .filter(|(c, _)| bc.constrained_map[*c] != usize::MAX)
                .map(|(c, v)| v * g[c])
                .sum();
            *rp = -lift;
        }
    }
    SaddleSystem::new(a, b, rhs_u, rhs_p)
}
