//! A discrete steady Navier-Stokes problem: space, viscosity, load and
//! Dirichlet data, with the mesh-only operators assembled once.

use std::sync::Arc;

use crate::assembly::{
    apply_dirichlet, assemble_convection, assemble_divergence, assemble_newton_reaction,
    assemble_scalar_mass, assemble_scalar_stiffness, assemble_source, assemble_viscous,
    operators::block_diagonal, BCData, BoundaryData, SparseMatrix, VelocityFn,
};
use crate::error::{NseError, Result};
use crate::fem::{discrete_hminus1_norm, FEField, FieldKind, LoadData, MixedSpace};
use crate::linsolve::{solve_saddle, SaddleSystem};

/// Output of one linear solve.
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub velocity: FEField,
    pub pressure: FEField,
    /// Relative algebraic residual of the saddle system.
    pub residual: f64,
}

pub struct Problem {
    space: Arc<MixedSpace>,
    nu: f64,
    bc: BCData,
    load: Vec<f64>,
    viscous: SparseMatrix,
    divergence: SparseMatrix,
    h1_gram: SparseMatrix,
    l2_gram: SparseMatrix,
    pressure_weights: Vec<f64>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("nu", &self.nu)
            .field("n_velocity", &self.space.n_velocity())
            .field("n_pressure", &self.space.n_pressure())
            .finish()
    }
}

impl Problem {
    pub fn new(
        space: &Arc<MixedSpace>,
        nu: f64,
        forcing: &VelocityFn,
        boundary: &BoundaryData,
    ) -> Result<Self> {
        let load = assemble_source(space, forcing.as_ref());
        Self::with_load(space, nu, load, boundary)
    }

    /// Uses a pre-assembled velocity load vector.
    pub fn with_load(
        space: &Arc<MixedSpace>,
        nu: f64,
        load: Vec<f64>,
        boundary: &BoundaryData,
    ) -> Result<Self> {
        if load.len() != space.n_velocity() {
            return Err(NseError::Dimension("load vector length".into()));
        }
        let viscous = assemble_viscous(space, nu)?;
        let divergence = assemble_divergence(space);
        let ns = space.n_scalar();
        let h1_gram = block_diagonal(&assemble_scalar_stiffness(space), ns);
        let l2_gram = block_diagonal(&assemble_scalar_mass(space), ns);
        let pressure_weights = (0..space.num_elements())
            .flat_map(|t| [space.geometry(t).area / 3.0; 3])
            .collect();
        let bc = BCData::new(space, boundary);
        let flux = bc.net_flux(&divergence);
        if flux.abs() > 1e-12 {
            log::warn!("boundary data has net discrete flux {flux:e}");
        }
        Ok(Self {
            space: Arc::clone(space),
            nu,
            bc,
            load,
            viscous,
            divergence,
            h1_gram,
            l2_gram,
            pressure_weights,
        })
    }

    pub fn space(&self) -> &Arc<MixedSpace> {
        &self.space
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn bc(&self) -> &BCData {
        &self.bc
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn viscous(&self) -> &SparseMatrix {
        &self.viscous
    }

    pub fn divergence(&self) -> &SparseMatrix {
        &self.divergence
    }

    pub fn pressure_weights(&self) -> &[f64] {
        &self.pressure_weights
    }

    /// `(grad a, grad b)` over velocity coefficient vectors.
    pub fn h1_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h1_gram.bilinear(a, b)
    }

    pub fn h1_norm(&self, a: &[f64]) -> f64 {
        self.h1_inner(a, a).max(0.0).sqrt()
    }

    pub fn l2_norm(&self, a: &[f64]) -> f64 {
        self.l2_gram.bilinear(a, a).max(0.0).sqrt()
    }

    /// `nu^-1 ||f||_-1` with the discrete dual norm of this problem's load.
    pub fn picard_stability_bound(&self) -> Result<f64> {
        Ok(discrete_hminus1_norm(&self.space, LoadData::VelocityLoad(&self.load))? / self.nu)
    }

    fn check(&self, u: &FEField) -> Result<()> {
        u.expect(&self.space, FieldKind::Velocity)
    }

    fn solve(&self, block: &SparseMatrix, load: &[f64]) -> Result<LinearSolve> {
        let system = apply_dirichlet(block, &self.divergence, load, &self.bc)?
            .with_pressure_weights(self.pressure_weights.clone())?;
        let sol = solve_saddle(&system)?;
        let velocity = self.bc.expand(&sol.velocity);
        let pressure = FEField::from_coeffs(&self.space, FieldKind::Pressure, sol.pressure)?;
        Ok(LinearSolve {
            velocity,
            pressure,
            residual: sol.residual,
        })
    }

    /// Saddle system of the Picard linearization about `u_k`.
    pub fn picard_system(&self, u_k: &FEField) -> Result<SaddleSystem> {
        self.check(u_k)?;
        let n = assemble_convection(&self.space, u_k)?;
        let block = SparseMatrix::sum(&[&self.viscous, &n])?;
        apply_dirichlet(&block, &self.divergence, &self.load, &self.bc)?
            .with_pressure_weights(self.pressure_weights.clone())
    }

    /// `nu (grad u, grad v) + b*(u_k, u, v) = (f, v)`.
    pub fn solve_picard(&self, u_k: &FEField) -> Result<LinearSolve> {
        self.check(u_k)?;
        let n = assemble_convection(&self.space, u_k)?;
        let block = SparseMatrix::sum(&[&self.viscous, &n])?;
        self.solve(&block, &self.load)
    }

    /// Saddle system of the Newton linearization about `u_hat`.
    pub fn newton_system(&self, u_hat: &FEField) -> Result<SaddleSystem> {
        let (block, load) = self.newton_operator(u_hat)?;
        apply_dirichlet(&block, &self.divergence, &load, &self.bc)?
            .with_pressure_weights(self.pressure_weights.clone())
    }

    fn newton_operator(&self, u_hat: &FEField) -> Result<(SparseMatrix, Vec<f64>)> {
        self.check(u_hat)?;
        let n = assemble_convection(&self.space, u_hat)?;
        let r = assemble_newton_reaction(&self.space, u_hat)?;
        let block = SparseMatrix::sum(&[&self.viscous, &n, &r])?;
        // b*(u_hat, u_hat, v) = (N(u_hat) u_hat)_v
        let nu_hat = n.mul_vec(u_hat.coeffs());
        let load: Vec<f64> = self.load.iter().zip(&nu_hat).map(|(f, c)| f + c).collect();
        Ok((block, load))
    }

    /// `nu (grad u, grad v) + b*(u_hat, u, v) + b*(u, u_hat, v)
    ///  = (f, v) + b*(u_hat, u_hat, v)`.
    pub fn solve_newton(&self, u_hat: &FEField) -> Result<LinearSolve> {
        let (block, load) = self.newton_operator(u_hat)?;
        self.solve(&block, &load).map_err(|e| match e {
            NseError::SingularSystem(msg) => {
                NseError::SingularSystem(format!("Newton linearization: {msg}"))
            }
            other => other,
        })
    }

    /// Nonlinear residual of the discrete equations at `(u, p)`: momentum
    /// rows at interior velocity dofs followed by the continuity rows.
    pub fn nonlinear_residual(&self, u: &FEField, p: &FEField) -> Result<Vec<f64>> {
        self.check(u)?;
        p.expect(&self.space, FieldKind::Pressure)?;
        let n = assemble_convection(&self.space, u)?;
        let mut r = self.load.clone();
        let au = self.viscous.mul_vec(u.coeffs());
        let nu_u = n.mul_vec(u.coeffs());
        let mut btp = vec![0.0; self.space.n_velocity()];
        self.divergence.mul_transpose_add(p.coeffs(), &mut btp);
        for i in 0..r.len() {
            r[i] += btp[i] - au[i] - nu_u[i];
        }
        let mut out: Vec<f64> = self.bc.interior_dofs().iter().map(|&d| r[d]).collect();
        out.extend(self.divergence.mul_vec(u.coeffs()).iter().map(|v| -v));
        Ok(out)
    }

    /// Initial velocity: interior values from the descriptor, boundary values
    /// from the Dirichlet data.
    pub fn initial_velocity(&self, guess: &super::InitialGuess) -> Result<FEField> {
        let mut u = match guess {
            super::InitialGuess::Zero => FEField::zeros(&self.space, FieldKind::Velocity),
            super::InitialGuess::Constant(c) => {
                let c = *c;
                crate::fem::interpolate_velocity(&self.space, move |_, _| c)
            }
            super::InitialGuess::Field(f) => {
                self.check(f)?;
                f.clone()
            }
        };
        self.bc.impose(&mut u);
        Ok(u)
    }
}
