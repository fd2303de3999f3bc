//! Reduced model of `pi_E` from snapshots of exact projections.
//!
//! With `z0 = pi_E(0)` and a `Z`-orthonormal basis `Phi` of the span of the
//! snapshot differences `z_e - z0`, the reduced projection is
//! `z_a = z0 + sum_i <y - z0, Phi_i>_Z Phi_i`. Since every `Phi_i` lies in the
//! direction space of the affine set `E_h`, `z_a` is feasible.

use std::collections::VecDeque;

use crate::equilibrium::{EquilibriumProjector, EquilibriumState};
use crate::error::Result;
use crate::mesh::{dot, Point};
use crate::spaces::{PhaseField, Rt0Field, ZField};

#[derive(Debug, Clone, PartialEq)]
pub struct PodConfig {
    pub snapshot_cap: usize,
    pub basis_cap: usize,
    /// Fraction of the snapshot energy the basis must capture.
    pub energy: f64,
}

impl Default for PodConfig {
    fn default() -> Self {
        PodConfig {
            snapshot_cap: 200,
            basis_cap: 40,
            energy: 1.0 - 1e-8,
        }
    }
}

/// Coefficients of a member of `E_h` (or of its direction space): RT0
/// fluxes and interior P1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    pub q: Vec<f64>,
    pub u: Vec<f64>,
}

impl DofVector {
    pub fn from_state(projector: &EquilibriumProjector, s: &EquilibriumState) -> Self {
        DofVector {
            q: s.q.0.clone(),
            u: projector.system().restrict_interior(&s.u),
        }
    }

    fn axpy(&mut self, a: f64, x: &DofVector) {
        for (v, w) in self.q.iter_mut().zip(&x.q) {
            *v += a * w;
        }
        for (v, w) in self.u.iter_mut().zip(&x.u) {
            *v += a * w;
        }
    }

    fn scale(&mut self, a: f64) {
        self.q.iter_mut().chain(self.u.iter_mut()).for_each(|v| *v *= a);
    }

    fn sub(a: &DofVector, b: &DofVector) -> DofVector {
        DofVector {
            q: a.q.iter().zip(&b.q).map(|(x, y)| x - y).collect(),
            u: a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
        }
    }

    /// The field `(q, grad u)` in `Z`.
    pub fn to_z(&self, projector: &EquilibriumProjector) -> ZField {
        let mesh = projector.mesh();
        let u = projector.system().expand_interior(&self.u);
        ZField::from_rt0(mesh, &Rt0Field(self.q.clone()), u.gradients(mesh))
    }
}

/// `Z` inner product of two DOF vectors: `q^T M q' + u^T K u'`.
pub fn dof_inner(projector: &EquilibriumProjector, a: &DofVector, b: &DofVector) -> f64 {
    let sys = projector.system();
    sys.mass.bilinear(&a.q, &b.q) + sys.stiffness.bilinear(&a.u, &b.u)
}

#[derive(Debug, Clone)]
struct BasisVector {
    dofs: DofVector,
    /// Per element: flux mean and constant gradient.
    flux_mean: Vec<Point>,
    grad: Vec<Point>,
    /// `<z0, Phi_i>_Z`
    z0_dot: f64,
}

#[derive(Debug, Clone)]
pub struct PodModel {
    config: PodConfig,
    z0: DofVector,
    z0_field: ZField,
    snapshots: VecDeque<DofVector>,
    /// Pairwise `Z` inner products of the stored snapshots.
    gram: VecDeque<VecDeque<f64>>,
    basis: Vec<BasisVector>,
    rebuilds: usize,
}

impl PodModel {
    pub fn new(projector: &EquilibriumProjector, config: PodConfig) -> Result<Self> {
        let nt = projector.mesh().num_triangles();
        let s0 = projector.project(&PhaseField::zeros(nt))?;
        Ok(PodModel {
            config,
            z0: DofVector::from_state(projector, &s0),
            z0_field: s0.to_z(projector.mesh()),
            snapshots: VecDeque::new(),
            gram: VecDeque::new(),
            basis: Vec::new(),
            rebuilds: 0,
        })
    }

    pub fn config(&self) -> &PodConfig {
        &self.config
    }

    pub fn reference(&self) -> &DofVector {
        &self.z0
    }

    pub fn basis_size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_snapshots(&self) -> usize {
        self.snapshots.len()
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn basis(&self) -> impl Iterator<Item = &DofVector> {
        self.basis.iter().map(|b| &b.dofs)
    }

    /// Stores `z_e - z0` and recomputes the basis.
    pub fn add_snapshot(&mut self, projector: &EquilibriumProjector, z_e: &EquilibriumState) {
        self.push(projector, z_e);
        self.rebuild(projector);
    }

    /// Stores several snapshots and recomputes the basis once.
    pub fn add_snapshots<'s>(
        &mut self,
        projector: &EquilibriumProjector,
        states: impl IntoIterator<Item = &'s EquilibriumState>,
    ) {
        for s in states {
            self.push(projector, s);
        }
        self.rebuild(projector);
    }

    fn push(&mut self, projector: &EquilibriumProjector, z_e: &EquilibriumState) {
        let d = DofVector::sub(&DofVector::from_state(projector, z_e), &self.z0);
        if self.config.snapshot_cap == 0 {
            return;
        }
        if self.snapshots.len() == self.config.snapshot_cap {
            self.snapshots.pop_front();
            self.gram.pop_front();
            self.gram.iter_mut().for_each(|row| {
                row.pop_front();
            });
        }
        let sys = projector.system();
        let gq = sys.mass.mul_vec(&d.q);
        let gu = sys.stiffness.mul_vec(&d.u);
        let row: VecDeque<f64> = self
            .snapshots
            .iter()
            .map(|s| dot_slices(&s.q, &gq) + dot_slices(&s.u, &gu))
            .collect();
        let diag = dot_slices(&d.q, &gq) + dot_slices(&d.u, &gu);
        for (r, v) in self.gram.iter_mut().zip(&row) {
            r.push_back(*v);
        }
        let mut row = row;
        row.push_back(diag);
        self.gram.push_back(row);
        self.snapshots.push_back(d);
    }

    /// Method of snapshots on the `Z`-Gram matrix, followed by a
    /// Gram-Schmidt pass so that `Phi^T G Phi = I` to working precision.
    fn rebuild(&mut self, projector: &EquilibriumProjector) {
        self.rebuilds += 1;
        self.basis.clear();
        let ns = self.snapshots.len();
        if ns == 0 {
            return;
        }
        let corr = faer::Mat::from_fn(ns, ns, |i, j| self.gram[i][j]);
        let Ok(evd) = corr.self_adjoint_eigen(faer::Side::Lower) else {
            return;
        };
        let s = evd.S().column_vector();
        let v = evd.U();
        // eigenvalues come in ascending order
        let mut order: Vec<usize> = (0..ns).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let total: f64 = (0..ns).map(|i| s[i].max(0.0)).sum();
        if !(total > 0.0) {
            return;
        }
        let lmax = s[order[0]];
        let mut captured = 0.0;
        let mut dirs: Vec<DofVector> = Vec::new();
        for &k in &order {
            if dirs.len() >= self.config.basis_cap || captured >= self.config.energy * total {
                break;
            }
            let lam = s[k];
            if !(lam > 1e-13 * lmax) {
                break;
            }
            captured += lam;
            let mut phi = DofVector {
                q: vec![0.0; self.z0.q.len()],
                u: vec![0.0; self.z0.u.len()],
            };
            for (i, snap) in self.snapshots.iter().enumerate() {
                phi.axpy(v[(i, k)], snap);
            }
            phi.scale(1.0 / lam.sqrt());
            dirs.push(phi);
        }

        // re-orthonormalize (two passes of modified Gram-Schmidt)
        let mut ortho: Vec<DofVector> = Vec::with_capacity(dirs.len());
        for mut phi in dirs {
            let n0 = dof_inner(projector, &phi, &phi).sqrt();
            for _ in 0..2 {
                for b in &ortho {
                    let c = dof_inner(projector, &phi, b);
                    phi.axpy(-c, b);
                }
            }
            let n = dof_inner(projector, &phi, &phi).sqrt();
            if !(n > 1e-8 * n0) {
                continue;
            }
            phi.scale(1.0 / n);
            ortho.push(phi);
        }

        let mesh = projector.mesh();
        self.basis = ortho
            .into_iter()
            .map(|dofs| {
                let q = Rt0Field(dofs.q.clone());
                let flux_mean = (0..mesh.num_triangles()).map(|t| q.local(mesh, t).0).collect();
                let grad = projector.system().expand_interior(&dofs.u).gradients(mesh);
                let z0_dot = dof_inner(projector, &self.z0, &dofs);
                BasisVector {
                    dofs,
                    flux_mean,
                    grad,
                    z0_dot,
                }
            })
            .collect();
    }

    /// `<y, Phi_i>_Z` for a piecewise constant `y`.
    fn phase_dot(&self, projector: &EquilibriumProjector, y: &PhaseField, b: &BasisVector) -> f64 {
        let areas = projector.mesh().areas();
        (0..y.len())
            .map(|t| areas[t] * (dot(y.r[t], b.flux_mean[t]) + dot(y.w[t], b.grad[t])))
            .sum()
    }

    /// Reduced coefficients `<y - z0, Phi_i>_Z`.
    pub fn coefficients(&self, projector: &EquilibriumProjector, y: &PhaseField) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| self.phase_dot(projector, y, b) - b.z0_dot)
            .collect()
    }

    /// `z_a` as DOFs.
    pub fn reduced_dofs(&self, coefficients: &[f64]) -> DofVector {
        let mut z = self.z0.clone();
        for (c, b) in coefficients.iter().zip(&self.basis) {
            z.axpy(*c, &b.dofs);
        }
        z
    }

    /// Reduced projection `z_a` of `y`.
    pub fn project(&self, projector: &EquilibriumProjector, y: &PhaseField) -> DofVector {
        self.reduced_dofs(&self.coefficients(projector, y))
    }

    /// Per-element contributions to `|y - z0|_Z^2`.
    fn element_distance(&self, projector: &EquilibriumProjector, t: usize, value: &[f64; 4]) -> f64 {
        let mesh = projector.mesh();
        let m = self.z0_field.flux_mean[t];
        let g = self.z0_field.grad[t];
        let d = [value[0] - m[0], value[1] - m[1], value[2] - g[0], value[3] - g[1]];
        let beta = self.z0_field.flux_slope[t];
        mesh.areas()[t] * d.iter().map(|x| x * x).sum::<f64>() + beta * beta * mesh.polar_moments()[t]
    }

    /// Reduced objective `1/2 |y - z_a|_Z^2`.
    pub fn objective(&self, projector: &EquilibriumProjector, y: &PhaseField) -> f64 {
        let s: f64 = (0..y.len())
            .map(|t| self.element_distance(projector, t, &y.value(t)))
            .sum();
        let c = self.coefficients(projector, y);
        0.5 * (s - c.iter().map(|x| x * x).sum::<f64>())
    }

    /// Evaluator for single-element changes of `y`, valid until the basis
    /// changes.
    pub fn evaluator(&self, projector: &EquilibriumProjector, y: &PhaseField) -> ReducedEvaluator {
        let elem: Vec<f64> = (0..y.len())
            .map(|t| self.element_distance(projector, t, &y.value(t)))
            .collect();
        ReducedEvaluator {
            generation: self.rebuilds,
            total: elem.iter().sum(),
            elem,
            coeffs: self.coefficients(projector, y),
            values: (0..y.len()).map(|t| y.value(t)).collect(),
        }
    }

    /// Largest `|int_T div Phi_i|` over elements and basis vectors; zero up
    /// to rounding.
    pub fn basis_divergence(&self, projector: &EquilibriumProjector) -> f64 {
        let div = &projector.system().divergence;
        self.basis
            .iter()
            .flat_map(|b| div.mul_vec(&b.dofs.q))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reduced objectives of `y` with one element value replaced, in `O(r)`.
#[derive(Debug, Clone)]
pub struct ReducedEvaluator {
    generation: usize,
    total: f64,
    elem: Vec<f64>,
    coeffs: Vec<f64>,
    values: Vec<[f64; 4]>,
}

impl ReducedEvaluator {
    /// Whether the evaluator was built from the current basis of `model`.
    pub fn is_current(&self, model: &PodModel) -> bool {
        self.generation == model.rebuilds
    }

    fn candidate_coeffs(
        &self,
        model: &PodModel,
        projector: &EquilibriumProjector,
        t: usize,
        value: &[f64; 4],
    ) -> Vec<f64> {
        debug_assert!(self.is_current(model));
        let area = projector.mesh().areas()[t];
        let old = self.values[t];
        let dr = [value[0] - old[0], value[1] - old[1]];
        let dw = [value[2] - old[2], value[3] - old[3]];
        self.coeffs
            .iter()
            .zip(&model.basis)
            .map(|(c, b)| c + area * (dot(dr, b.flux_mean[t]) + dot(dw, b.grad[t])))
            .collect()
    }

    /// `v_a` for `y` with element `t` set to `value`.
    pub fn objective_with(
        &self,
        model: &PodModel,
        projector: &EquilibriumProjector,
        t: usize,
        value: &[f64; 4],
    ) -> f64 {
        let s = self.total - self.elem[t] + model.element_distance(projector, t, value);
        let c = self.candidate_coeffs(model, projector, t, value);
        0.5 * (s - c.iter().map(|x| x * x).sum::<f64>())
    }

    /// `z_a` for `y` with element `t` set to `value`.
    pub fn reduced_dofs_with(
        &self,
        model: &PodModel,
        projector: &EquilibriumProjector,
        t: usize,
        value: &[f64; 4],
    ) -> DofVector {
        model.reduced_dofs(&self.candidate_coeffs(model, projector, t, value))
    }
}
