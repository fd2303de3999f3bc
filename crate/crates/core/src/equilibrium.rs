//! Orthogonal projection onto the discrete equilibrium set
//! `E_h = {(q, grad u) : -div q = f (tested with P0), u in U_h}`.
//!
//! For `y = (r, w)` the flux part solves the saddle system
//! `[M B^T; B 0] [q; lambda] = [R(r); -F]` and the gradient part solves
//! `K u = W(w)`. Both matrices are factorized once per projector.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::law::Law;
use crate::linalg::{CsrMatrix, DirectSolver};
use crate::mesh::{dot, sub, Mesh, Point};
use crate::quadrature::DEGREE4;
use crate::spaces::{
    barycentric_gradients, P0Field, P0VectorField, P1Field, PhaseField, Rt0Field, SystemMatrices,
    ZField,
};

/// Relative algebraic residual accepted from the direct solves.
pub const SOLVE_TOL: f64 = 1e-10;

/// Right-hand side of the divergence constraint.
#[derive(Clone)]
pub enum Source {
    Zero,
    /// Manufactured source of a constitutive law for `u = sin(pi x) sin(pi y)`.
    Manufactured(Law),
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => f.write_str("Zero"),
            Source::Manufactured(law) => write!(f, "Manufactured({law})"),
            Source::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Source {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Manufactured(law) => law.source(x),
            Source::Custom(f) => f(x),
        }
    }
}

/// A member of `E_h` with its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    pub q: Rt0Field,
    pub u: P1Field,
    pub lambda: P0Field,
    pub grad_u: P0VectorField,
}

impl EquilibriumState {
    pub fn to_z(&self, mesh: &Mesh) -> ZField {
        ZField::from_rt0(mesh, &self.q, self.grad_u.clone())
    }
}

pub struct EquilibriumProjector {
    mesh: Mesh,
    sys: SystemMatrices,
    saddle: DirectSolver,
    poisson: Option<DirectSolver>,
    source: Source,
    /// `int_T f dx` per element.
    source_integrals: Vec<f64>,
}

impl fmt::Debug for EquilibriumProjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquilibriumProjector")
            .field("n", &self.mesh.resolution())
            .field("edges", &self.mesh.num_edges())
            .field("interior_vertices", &self.sys.num_interior())
            .finish()
    }
}

impl EquilibriumProjector {
    pub fn new(mesh: Mesh, source: &Source) -> Result<Self> {
        let sys = SystemMatrices::assemble(&mesh);
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();

        let mut trip: Vec<_> = sys.mass.triplets().collect();
        for (t, e, v) in sys.divergence.triplets() {
            trip.push((ne + t, e, v));
            trip.push((e, ne + t, v));
        }
        let saddle = DirectSolver::lu(CsrMatrix::from_triplets(ne + nt, ne + nt, trip))?;
        let poisson = if sys.num_interior() > 0 {
            Some(DirectSolver::cholesky(sys.stiffness.clone())?)
        } else {
            None
        };

        let source_integrals = (0..nt)
            .map(|t| match source {
                Source::Zero => 0.0,
                _ => DEGREE4.integrate(&mesh.triangle_points(t), mesh.areas()[t], |x| source.eval(x)),
            })
            .collect();

        Ok(EquilibriumProjector {
            mesh,
            sys,
            saddle,
            poisson,
            source: source.clone(),
            source_integrals,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn system(&self) -> &SystemMatrices {
        &self.sys
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    /// `int_T f dx` per element.
    pub fn source_integrals(&self) -> &[f64] {
        &self.source_integrals
    }

    /// Element means of `f`.
    pub fn source_means(&self) -> Vec<f64> {
        self.source_integrals
            .iter()
            .zip(self.mesh.areas())
            .map(|(f, a)| f / a)
            .collect()
    }

    /// `R_e = int r . psi_e` for the flux component of `z`.
    pub fn flux_load(&self, z: &ZField) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut load = vec![0.0; mesh.num_edges()];
        for t in 0..mesh.num_triangles() {
            let pts = mesh.triangle_points(t);
            let c = mesh.centroids()[t];
            let area = mesh.areas()[t];
            let mean = z.flux_mean[t];
            let slope_term = z.flux_slope[t] * mesh.polar_moments()[t] / (2.0 * area);
            for k in 0..3 {
                let s = mesh.tri_edge_signs()[t][k];
                let v = 0.5 * dot(mean, sub(c, pts[k])) + slope_term;
                load[mesh.tri_edges()[t][k]] += s * v;
            }
        }
        load
    }

    /// `W_i = int w . grad phi_i` over interior vertices.
    pub fn gradient_load(&self, z: &ZField) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut load = vec![0.0; self.sys.num_interior()];
        for t in 0..mesh.num_triangles() {
            let area = mesh.areas()[t];
            let g = barycentric_gradients(&mesh.triangle_points(t), area);
            let w = z.grad[t];
            for (k, &v) in mesh.triangles()[t].iter().enumerate() {
                if let Some(i) = self.sys.vertex_dof[v] {
                    load[i] += area * dot(w, g[k]);
                }
            }
        }
        load
    }

    fn check(&self, nt: usize) -> Result<()> {
        if nt != self.mesh.num_triangles() {
            return Err(Error::DimensionMismatch(format!(
                "field has {nt} elements, mesh has {}",
                self.mesh.num_triangles()
            )));
        }
        Ok(())
    }

    /// Solves the flux problem for a given load; returns `(q, lambda)`.
    pub fn solve_flux(&self, load: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let ne = self.mesh.num_edges();
        let mut rhs = load.to_vec();
        rhs.extend(self.source_integrals.iter().map(|f| -f));
        let (mut x, rel) = self.saddle.solve(&rhs);
        if !(rel <= SOLVE_TOL) {
            return Err(Error::Factorization(format!("saddle residual {rel:e}")));
        }
        let lambda = x.split_off(ne);
        Ok((x, lambda))
    }

    /// Solves `K u = load` on interior DOFs.
    pub fn solve_potential(&self, load: &[f64]) -> Result<Vec<f64>> {
        match &self.poisson {
            None => Ok(Vec::new()),
            Some(k) => {
                let (u, rel) = k.solve(load);
                if !(rel <= SOLVE_TOL) {
                    return Err(Error::Factorization(format!("Poisson residual {rel:e}")));
                }
                Ok(u)
            }
        }
    }

    pub fn project_z(&self, z: &ZField) -> Result<EquilibriumState> {
        self.check(z.len())?;
        let (q, lambda) = self.solve_flux(&self.flux_load(z))?;
        let u = self.solve_potential(&self.gradient_load(z))?;
        let u = self.sys.expand_interior(&u);
        let grad_u = u.gradients(&self.mesh);
        Ok(EquilibriumState {
            q: Rt0Field(q),
            u,
            lambda,
            grad_u,
        })
    }

    pub fn project(&self, y: &PhaseField) -> Result<EquilibriumState> {
        self.check(y.len())?;
        self.project_z(&ZField::from(y))
    }

    /// `pi_E` as a map on `Z`.
    pub fn apply(&self, z: &ZField) -> Result<ZField> {
        Ok(self.project_z(z)?.to_z(&self.mesh))
    }

    /// `max_T |int_T div q + int_T f|`.
    pub fn divergence_residual(&self, state: &EquilibriumState) -> f64 {
        self.flux_divergence_residual(&state.q.0)
    }

    pub fn flux_divergence_residual(&self, q: &[f64]) -> f64 {
        self.sys
            .divergence
            .mul_vec(q)
            .iter()
            .zip(&self.source_integrals)
            .fold(0.0f64, |m, (d, f)| m.max((d + f).abs()))
    }
}
