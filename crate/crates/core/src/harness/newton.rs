//! Classical conforming P1 discretization of `-div kappa(grad u) = f`,
//! `u = 0` on the boundary, solved with a damped Newton method.

use crate::equilibrium::Source;
use crate::error::{Error, Result};
use crate::law::Law;
use crate::linalg::{CsrMatrix, DirectSolver};
use crate::mesh::{dot, Mesh};
use crate::quadrature::DEGREE4;
use crate::spaces::{barycentric_gradients, P1Field, SystemMatrices};

/// Discretization of the load functional `v -> int f v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadRule {
    /// `int I_h f v` with the nodal interpolant of `f` (consistent mass).
    Interpolated,
    /// `int f v` with the six-point degree-4 rule.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Bound on the residual in the dual norm `sqrt(R^T K^{-1} R)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub load: LoadRule,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 25,
            max_halvings: 10,
            load: LoadRule::Interpolated,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub u: P1Field,
    pub iterations: usize,
    /// Dual-norm residual before the first step and after every step.
    pub residuals: Vec<f64>,
    /// Damping factor of every step.
    pub steps: Vec<f64>,
}

struct Problem<'a> {
    mesh: &'a Mesh,
    sys: SystemMatrices,
    law: Law,
    load: Vec<f64>,
    /// Gradients of the barycentric coordinates, per element.
    grads: Vec<[[f64; 2]; 3]>,
    riesz: DirectSolver,
}

impl Problem<'_> {
    fn gradient(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let tri = self.mesh.triangles()[t];
        let mut g = [0.0; 2];
        for k in 0..3 {
            if let Some(i) = self.sys.vertex_dof[tri[k]] {
                g[0] += u[i] * self.grads[t][k][0];
                g[1] += u[i] * self.grads[t][k][1];
            }
        }
        g
    }

    /// `R_i = int kappa(grad u) . grad phi_i - int f phi_i`
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.load.iter().map(|f| -f).collect();
        for t in 0..self.mesh.num_triangles() {
            let flux = self.law.kappa(self.gradient(t, u));
            let area = self.mesh.areas()[t];
            for (k, &v) in self.mesh.triangles()[t].iter().enumerate() {
                if let Some(i) = self.sys.vertex_dof[v] {
                    r[i] += area * dot(flux, self.grads[t][k]);
                }
            }
        }
        r
    }

    fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        let n = self.sys.num_interior();
        let mut trip = Vec::with_capacity(9 * self.mesh.num_triangles());
        for t in 0..self.mesh.num_triangles() {
            let d = self.law.dkappa(self.gradient(t, u));
            let area = self.mesh.areas()[t];
            let tri = self.mesh.triangles()[t];
            for k in 0..3 {
                let Some(i) = self.sys.vertex_dof[tri[k]] else { continue };
                let gk = self.grads[t][k];
                for l in 0..3 {
                    let Some(j) = self.sys.vertex_dof[tri[l]] else { continue };
                    let dg = [
                        d[0][0] * self.grads[t][l][0] + d[0][1] * self.grads[t][l][1],
                        d[1][0] * self.grads[t][l][0] + d[1][1] * self.grads[t][l][1],
                    ];
                    trip.push((i, j, area * dot(gk, dg)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    fn dual_norm(&self, r: &[f64]) -> f64 {
        let (x, _) = self.riesz.solve(r);
        r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}

/// Newton's method from `u = 0`. A step is halved until the dual-norm
/// residual decreases; the iteration fails after `max_iter` steps or when
/// `max_halvings` halvings do not produce a decrease.
pub fn solve_newton(mesh: &Mesh, law: Law, source: &Source, config: &NewtonConfig) -> Result<NewtonReport> {
    let sys = SystemMatrices::assemble(mesh);
    let n = sys.num_interior();
    if n == 0 {
        return Ok(NewtonReport {
            u: P1Field(vec![0.0; mesh.num_vertices()]),
            iterations: 0,
            residuals: vec![0.0],
            steps: Vec::new(),
        });
    }
    let grads: Vec<[[f64; 2]; 3]> = (0..mesh.num_triangles())
        .map(|t| barycentric_gradients(&mesh.triangle_points(t), mesh.areas()[t]))
        .collect();
    let mut load = vec![0.0; n];
    for t in 0..mesh.num_triangles() {
        let pts = mesh.triangle_points(t);
        let area = mesh.areas()[t];
        for (k, &v) in mesh.triangles()[t].iter().enumerate() {
            let Some(i) = sys.vertex_dof[v] else { continue };
            load[i] += match config.load {
                LoadRule::Interpolated => (0..3)
                    .map(|l| {
                        let m = if l == k { area / 6.0 } else { area / 12.0 };
                        m * source.eval(pts[l])
                    })
                    .sum::<f64>(),
                LoadRule::Quadrature => DEGREE4
                    .map(&pts, area)
                    .zip(DEGREE4.points)
                    .map(|((x, w), b)| w * source.eval(x) * b[k])
                    .sum::<f64>(),
            };
        }
    }
    let riesz = DirectSolver::cholesky(sys.stiffness.clone())?;
    let problem = Problem {
        mesh,
        sys,
        law,
        load,
        grads,
        riesz,
    };

    let mut u = vec![0.0; n];
    let mut r = problem.residual(&u);
    let mut res = problem.dual_norm(&r);
    let mut residuals = vec![res];
    let mut steps = Vec::new();
    while res > config.tol {
        if steps.len() == config.max_iter {
            return Err(Error::NewtonDivergence(format!(
                "residual {res:e} after {} iterations",
                config.max_iter
            )));
        }
        let jac = DirectSolver::cholesky(problem.jacobian(&u))
            .or_else(|_| DirectSolver::lu(problem.jacobian(&u)))?;
        let (du, _) = jac.solve(&r);
        let mut theta = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a - theta * d).collect();
            let r_trial = problem.residual(&trial);
            let res_trial = problem.dual_norm(&r_trial);
            if res_trial < res || res_trial <= config.tol {
                u = trial;
                r = r_trial;
                res = res_trial;
                break;
            }
            if halvings == config.max_halvings {
                return Err(Error::NewtonDivergence(format!(
                    "no decrease of the residual {res:e} after {halvings} step halvings"
                )));
            }
            halvings += 1;
            theta *= 0.5;
        }
        residuals.push(res);
        steps.push(theta);
    }
    Ok(NewtonReport {
        u: problem.sys.expand_interior(&u),
        iterations: steps.len(),
        residuals,
        steps,
    })
}
