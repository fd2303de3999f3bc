//! Experiment support: error metrics against the manufactured solution, a
//! classical Newton finite element reference, convergence orders and
//! parameter studies written as CSV.

pub mod config;
pub mod newton;
pub mod study;

use std::f64::consts::{PI, SQRT_2};

use crate::equilibrium::EquilibriumState;
use crate::error::{Error, Result};
use crate::law::{exact_grad_u, exact_u};
use crate::mesh::{Mesh, Point};
use crate::quadrature::DEGREE4;
use crate::spaces::P1Field;

pub use config::{load_config, parse_config, ConfigMap};
pub use newton::{solve_newton, LoadRule, NewtonConfig, NewtonReport};
pub use study::{
    build_dataset, eoc_table, read_csv, run_experiment, write_csv, write_eoc_csv, EocRow, ExperimentSpec, Method, StudyRow,
};

/// `|u|_{L^2}` of `sin(pi x) sin(pi y)` on the unit square.
pub const EXACT_L2_NORM: f64 = 0.5;
/// `|grad u|_{L^2}` of `sin(pi x) sin(pi y)` on the unit square.
pub const EXACT_H1_SEMINORM: f64 = PI / SQRT_2;

/// Relative errors of a discrete potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub err_l2: f64,
    pub err_h1: f64,
}

/// Relative `L^2` and `H^1_0` errors of `u_h` against `u`, `grad u`, with
/// the six-point degree-4 rule on every element.
pub fn relative_errors(
    mesh: &Mesh,
    u_h: &P1Field,
    u: impl Fn(Point) -> f64,
    grad_u: impl Fn(Point) -> Point,
    norm_u: f64,
    norm_grad_u: f64,
) -> Result<ErrorReport> {
    if u_h.0.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "potential has {} values, mesh has {} vertices",
            u_h.0.len(),
            mesh.num_vertices()
        )));
    }
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for t in 0..mesh.num_triangles() {
        let pts = mesh.triangle_points(t);
        let area = mesh.areas()[t];
        let g = u_h.gradient_unchecked(mesh, t);
        for ((x, w), bary) in DEGREE4.map(&pts, area).zip(DEGREE4.points) {
            let du = u(x) - u_h.eval_bary(mesh, t, *bary);
            let dg = grad_u(x);
            l2 += w * du * du;
            h1 += w * ((dg[0] - g[0]).powi(2) + (dg[1] - g[1]).powi(2));
        }
    }
    Ok(ErrorReport {
        err_l2: l2.sqrt() / norm_u,
        err_h1: h1.sqrt() / norm_grad_u,
    })
}

/// Errors of `u_h` against `u = sin(pi x) sin(pi y)`.
pub fn potential_errors(mesh: &Mesh, u_h: &P1Field) -> Result<ErrorReport> {
    relative_errors(mesh, u_h, exact_u, exact_grad_u, EXACT_L2_NORM, EXACT_H1_SEMINORM)
}

/// Errors of the potential of an equilibrium state (the projection
/// `pi_E(y)` of a solver result).
pub fn compute_errors(mesh: &Mesh, state: &EquilibriumState) -> Result<ErrorReport> {
    potential_errors(mesh, &state.u)
}

/// `(log e1 - log e2) / (log h1 - log h2)`.
pub fn compute_eoc(e1: f64, h1: f64, e2: f64, h2: f64) -> Result<f64> {
    if !(e1 > 0.0 && e2 > 0.0) {
        return Err(Error::InvalidArgument(format!("errors must be positive, got {e1} and {e2}")));
    }
    if !(h1 > 0.0 && h2 > 0.0) || h1 == h2 {
        return Err(Error::InvalidArgument(format!("mesh sizes must be positive and distinct, got {h1} and {h2}")));
    }
    Ok((e1.ln() - e2.ln()) / (h1.ln() - h2.ln()))
}
