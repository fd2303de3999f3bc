//! RT0, P0 and P1 spaces on a [`Mesh`], their system matrices, and the
//! `Z = L^2 x L^2` inner product.
//!
//! An RT0 degree of freedom is the integrated normal flux through an edge,
//! measured along the edge's global normal. On triangle `T` with vertices
//! `p_k` the basis function of local edge `k` is
//! `s_k (x - p_k) / (2|T|)`, with `s_k` the orientation sign from the mesh.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{dot, sub, Mesh, Point};
use crate::quadrature::{EDGE_MIDPOINTS, GAUSS5_NODES, GAUSS5_WEIGHTS};

pub type P0Field = Vec<f64>;
pub type P0VectorField = Vec<Point>;

/// RT0 field, one signed normal flux per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Rt0Field(pub Vec<f64>);

/// Continuous piecewise linear field, one value per vertex. Fields in `U_h`
/// vanish on boundary vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Field(pub Vec<f64>);

/// A piecewise constant pair `y = (r, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub r: P0VectorField,
    pub w: P0VectorField,
}

/// A general member of the discrete `Z` space.
///
/// On each triangle the first component is `mean + slope * (x - centroid)`,
/// which covers both P0 vector fields and RT0 fields, and the second
/// component is constant (P0 data or P1 gradients). The set is closed under
/// the linear combinations used by the splitting solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ZField {
    pub flux_mean: Vec<Point>,
    pub flux_slope: Vec<f64>,
    pub grad: Vec<Point>,
}

impl PhaseField {
    pub fn zeros(num_triangles: usize) -> Self {
        PhaseField {
            r: vec![[0.0; 2]; num_triangles],
            w: vec![[0.0; 2]; num_triangles],
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Element value packed as `(r1, r2, w1, w2)`.
    pub fn value(&self, t: usize) -> [f64; 4] {
        [self.r[t][0], self.r[t][1], self.w[t][0], self.w[t][1]]
    }

    pub fn from_values(values: &[[f64; 4]]) -> Self {
        PhaseField {
            r: values.iter().map(|v| [v[0], v[1]]).collect(),
            w: values.iter().map(|v| [v[2], v[3]]).collect(),
        }
    }
}

impl From<&PhaseField> for ZField {
    fn from(y: &PhaseField) -> Self {
        ZField {
            flux_mean: y.r.clone(),
            flux_slope: vec![0.0; y.len()],
            grad: y.w.clone(),
        }
    }
}

impl ZField {
    pub fn zeros(num_triangles: usize) -> Self {
        ZField {
            flux_mean: vec![[0.0; 2]; num_triangles],
            flux_slope: vec![0.0; num_triangles],
            grad: vec![[0.0; 2]; num_triangles],
        }
    }

    /// Builds `(q, grad)` from an RT0 flux and element-wise gradients.
    pub fn from_rt0(mesh: &Mesh, q: &Rt0Field, grad: P0VectorField) -> Self {
        let nt = mesh.num_triangles();
        let mut flux_mean = Vec::with_capacity(nt);
        let mut flux_slope = Vec::with_capacity(nt);
        for t in 0..nt {
            let (m, s) = q.local(mesh, t);
            flux_mean.push(m);
            flux_slope.push(s);
        }
        ZField {
            flux_mean,
            flux_slope,
            grad,
        }
    }

    pub fn len(&self) -> usize {
        self.flux_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flux_mean.is_empty()
    }

    /// `a * x + b * y`
    pub fn lincomb(a: f64, x: &ZField, b: f64, y: &ZField) -> ZField {
        assert_eq!(x.len(), y.len());
        ZField {
            flux_mean: x
                .flux_mean
                .iter()
                .zip(&y.flux_mean)
                .map(|(p, q)| [a * p[0] + b * q[0], a * p[1] + b * q[1]])
                .collect(),
            flux_slope: x
                .flux_slope
                .iter()
                .zip(&y.flux_slope)
                .map(|(p, q)| a * p + b * q)
                .collect(),
            grad: x
                .grad
                .iter()
                .zip(&y.grad)
                .map(|(p, q)| [a * p[0] + b * q[0], a * p[1] + b * q[1]])
                .collect(),
        }
    }

    /// Element means `(r1, r2, w1, w2)`.
    pub fn mean(&self, t: usize) -> [f64; 4] {
        let m = self.flux_mean[t];
        let g = self.grad[t];
        [m[0], m[1], g[0], g[1]]
    }

    /// Element-wise P0 projection.
    pub fn to_phase(&self) -> PhaseField {
        PhaseField {
            r: self.flux_mean.clone(),
            w: self.grad.clone(),
        }
    }

    /// Pointwise value `(r, w)` at `x` inside triangle `t`.
    pub fn eval(&self, mesh: &Mesh, t: usize, x: Point) -> (Point, Point) {
        let d = sub(x, mesh.centroids()[t]);
        let m = self.flux_mean[t];
        let s = self.flux_slope[t];
        ([m[0] + s * d[0], m[1] + s * d[1]], self.grad[t])
    }
}

fn check_len(mesh: &Mesh, z: &ZField) -> Result<()> {
    let nt = mesh.num_triangles();
    if z.flux_mean.len() != nt || z.flux_slope.len() != nt || z.grad.len() != nt {
        return Err(Error::DimensionMismatch(format!(
            "field has {} elements, mesh has {nt}",
            z.len()
        )));
    }
    Ok(())
}

/// `(a, b)_Z`, integrated exactly.
pub fn z_inner(mesh: &Mesh, a: &ZField, b: &ZField) -> Result<f64> {
    check_len(mesh, a)?;
    check_len(mesh, b)?;
    let areas = mesh.areas();
    let moments = mesh.polar_moments();
    Ok((0..a.len())
        .map(|t| {
            areas[t] * (dot(a.flux_mean[t], b.flux_mean[t]) + dot(a.grad[t], b.grad[t]))
                + a.flux_slope[t] * b.flux_slope[t] * moments[t]
        })
        .sum())
}

pub fn z_norm(mesh: &Mesh, a: &ZField) -> Result<f64> {
    Ok(z_inner(mesh, a, a)?.max(0.0).sqrt())
}

pub fn z_dist(mesh: &Mesh, a: &ZField, b: &ZField) -> Result<f64> {
    check_len(mesh, a)?;
    check_len(mesh, b)?;
    z_norm(mesh, &ZField::lincomb(1.0, a, -1.0, b))
}

impl Rt0Field {
    pub fn zeros(mesh: &Mesh) -> Self {
        Rt0Field(vec![0.0; mesh.num_edges()])
    }

    /// Canonical interpolant: each DOF is `int_e tau . n ds`, by 5-point
    /// Gauss-Legendre quadrature along the edge.
    pub fn interpolate(mesh: &Mesh, tau: impl Fn(Point) -> Point) -> Self {
        let v = mesh.vertices();
        let dofs = mesh
            .edges()
            .iter()
            .zip(mesh.edge_normals())
            .zip(mesh.edge_lengths())
            .map(|((&[lo, hi], &n), &len)| {
                let a = v[lo];
                let d = sub(v[hi], a);
                let s: f64 = GAUSS5_NODES
                    .iter()
                    .zip(GAUSS5_WEIGHTS)
                    .map(|(&s, w)| w * dot(tau([a[0] + s * d[0], a[1] + s * d[1]]), n))
                    .sum();
                s * len
            })
            .collect();
        Rt0Field(dofs)
    }

    /// Element mean and slope: on `t` the field is `mean + slope (x - c)`.
    pub fn local(&self, mesh: &Mesh, t: usize) -> (Point, f64) {
        let pts = mesh.triangle_points(t);
        let c = mesh.centroids()[t];
        let two_area = 2.0 * mesh.areas()[t];
        let edges = mesh.tri_edges()[t];
        let signs = mesh.tri_edge_signs()[t];
        let mut mean = [0.0; 2];
        let mut slope = 0.0;
        for k in 0..3 {
            let coef = signs[k] * self.0[edges[k]] / two_area;
            let d = sub(c, pts[k]);
            mean[0] += coef * d[0];
            mean[1] += coef * d[1];
            slope += coef;
        }
        (mean, slope)
    }

    /// Value at the centroid, which equals the element mean.
    pub fn centroid_value(&self, mesh: &Mesh, t: usize) -> Result<Point> {
        mesh.check_triangle(t)?;
        Ok(self.local(mesh, t).0)
    }

    pub fn eval(&self, mesh: &Mesh, t: usize, x: Point) -> Point {
        let (m, s) = self.local(mesh, t);
        let d = sub(x, mesh.centroids()[t]);
        [m[0] + s * d[0], m[1] + s * d[1]]
    }

    /// `int_T div q dx` for every triangle.
    pub fn integrated_divergence(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.tri_edges()
            .iter()
            .zip(mesh.tri_edge_signs())
            .map(|(e, s)| (0..3).map(|k| s[k] * self.0[e[k]]).sum())
            .collect()
    }
}

/// Gradients of the three barycentric coordinates of a counterclockwise
/// triangle.
pub fn barycentric_gradients(pts: &[Point; 3], area: f64) -> [Point; 3] {
    let two_area = 2.0 * area;
    let mut g = [[0.0; 2]; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let a = pts[(k + 1) % 3];
        let b = pts[(k + 2) % 3];
        *gk = [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area];
    }
    g
}

impl P1Field {
    /// Nodal interpolant (boundary values are kept as given).
    pub fn interpolate(mesh: &Mesh, u: impl Fn(Point) -> f64) -> Self {
        P1Field(mesh.vertices().iter().map(|&p| u(p)).collect())
    }

    pub fn gradient(&self, mesh: &Mesh, t: usize) -> Result<Point> {
        mesh.check_triangle(t)?;
        Ok(self.gradient_unchecked(mesh, t))
    }

    pub(crate) fn gradient_unchecked(&self, mesh: &Mesh, t: usize) -> Point {
        let tri = mesh.triangles()[t];
        let g = barycentric_gradients(&mesh.triangle_points(t), mesh.areas()[t]);
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += self.0[tri[k]] * g[k][0];
            out[1] += self.0[tri[k]] * g[k][1];
        }
        out
    }

    pub fn gradients(&self, mesh: &Mesh) -> P0VectorField {
        (0..mesh.num_triangles())
            .map(|t| self.gradient_unchecked(mesh, t))
            .collect()
    }

    /// Value at barycentric coordinates `bary` of triangle `t`.
    pub fn eval_bary(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> f64 {
        let tri = mesh.triangles()[t];
        (0..3).map(|k| bary[k] * self.0[tri[k]]).sum()
    }
}

/// Assembled matrices of the mixed and primal problems.
///
/// * `mass`: RT0 mass matrix `int psi_i . psi_j` (edges x edges)
/// * `divergence`: `B[t][e] = int_T div psi_e` (triangles x edges)
/// * `stiffness`: P1 stiffness over interior vertices
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub mass: CsrMatrix,
    pub divergence: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// Interior DOF index of every vertex (`None` on the boundary).
    pub vertex_dof: Vec<Option<usize>>,
    /// Vertex of every interior DOF.
    pub dof_vertex: Vec<usize>,
}

impl SystemMatrices {
    pub fn assemble(mesh: &Mesh) -> Self {
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();

        let mut vertex_dof = vec![None; mesh.num_vertices()];
        let mut dof_vertex = Vec::new();
        for v in 0..mesh.num_vertices() {
            if !mesh.is_boundary_vertex(v) {
                vertex_dof[v] = Some(dof_vertex.len());
                dof_vertex.push(v);
            }
        }
        let ni = dof_vertex.len();

        let mut m_trip = Vec::with_capacity(9 * nt);
        let mut b_trip = Vec::with_capacity(3 * nt);
        let mut k_trip = Vec::with_capacity(9 * nt);
        for t in 0..nt {
            let pts = mesh.triangle_points(t);
            let area = mesh.areas()[t];
            let edges = mesh.tri_edges()[t];
            let signs = mesh.tri_edge_signs()[t];
            let scale = 1.0 / (4.0 * area * area);
            for k in 0..3 {
                b_trip.push((t, edges[k], signs[k]));
                for l in 0..3 {
                    let integral = EDGE_MIDPOINTS
                        .integrate(&pts, area, |x| dot(sub(x, pts[k]), sub(x, pts[l])));
                    m_trip.push((edges[k], edges[l], signs[k] * signs[l] * scale * integral));
                }
            }

            let grads = barycentric_gradients(&pts, area);
            let tri = mesh.triangles()[t];
            for k in 0..3 {
                let Some(i) = vertex_dof[tri[k]] else { continue };
                for l in 0..3 {
                    let Some(j) = vertex_dof[tri[l]] else { continue };
                    k_trip.push((i, j, area * dot(grads[k], grads[l])));
                }
            }
        }

        SystemMatrices {
            mass: CsrMatrix::from_triplets(ne, ne, m_trip),
            divergence: CsrMatrix::from_triplets(nt, ne, b_trip),
            stiffness: CsrMatrix::from_triplets(ni, ni, k_trip),
            vertex_dof,
            dof_vertex,
        }
    }

    pub fn num_interior(&self) -> usize {
        self.dof_vertex.len()
    }

    /// Expands interior DOF values to a vertex field with zero boundary values.
    pub fn expand_interior(&self, values: &[f64]) -> P1Field {
        let mut u = vec![0.0; self.vertex_dof.len()];
        for (&v, &x) in self.dof_vertex.iter().zip(values) {
            u[v] = x;
        }
        P1Field(u)
    }

    /// Restricts a vertex field to interior DOFs.
    pub fn restrict_interior(&self, u: &P1Field) -> Vec<f64> {
        self.dof_vertex.iter().map(|&v| u.0[v]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DirectSolver;
    use crate::quadrature::DEGREE4;
    use std::f64::consts::PI;

    fn min_eigenvalue(a: &CsrMatrix) -> f64 {
        let n = a.nrows();
        let dense = a.to_dense();
        let m = faer::Mat::from_fn(n, n, |i, j| dense[i][j]);
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let s = evd.S().column_vector();
        (0..n).map(|i| s[i]).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn smallest_mass_matrix_is_spd() {
        let mesh = Mesh::new(1).unwrap();
        let sys = SystemMatrices::assemble(&mesh);
        assert_eq!((sys.mass.nrows(), sys.mass.ncols()), (5, 5));
        let d = sys.mass.to_dense();
        for i in 0..5 {
            for j in 0..5 {
                assert!((d[i][j] - d[j][i]).abs() < 1e-15);
            }
        }
        assert!(min_eigenvalue(&sys.mass) > 0.0);
    }

    #[test]
    fn mass_and_stiffness_factorize() {
        for n in [1usize, 2, 5, 20] {
            let mesh = Mesh::new(n).unwrap();
            let sys = SystemMatrices::assemble(&mesh);
            assert!(DirectSolver::cholesky(sys.mass.clone()).is_ok(), "mass n={n}");
            if sys.num_interior() > 0 {
                assert!(DirectSolver::cholesky(sys.stiffness.clone()).is_ok(), "stiffness n={n}");
            }
        }
    }

    #[test]
    fn constant_field_has_unit_mass_norm() {
        for n in [1usize, 4, 13] {
            let mesh = Mesh::new(n).unwrap();
            let sys = SystemMatrices::assemble(&mesh);
            let q = Rt0Field::interpolate(&mesh, |_| [1.0, 0.0]);
            assert!((sys.mass.bilinear(&q.0, &q.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_matrix_reproduces_linear_field() {
        let mesh = Mesh::new(7).unwrap();
        let sys = SystemMatrices::assemble(&mesh);
        let q = Rt0Field::interpolate(&mesh, |x| x);
        let bq = sys.divergence.mul_vec(&q.0);
        for (t, v) in bq.iter().enumerate() {
            assert!((v - 2.0 * mesh.areas()[t]).abs() < 1e-12);
        }
        for (a, b) in bq.iter().zip(q.integrated_divergence(&mesh)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn commuting_diagram_for_affine_fields() {
        let mesh = Mesh::new(5).unwrap();
        // div of (a + B x) is trace(B)
        let b = [[0.3, -1.2], [2.0, 0.7]];
        let q = Rt0Field::interpolate(&mesh, |x| {
            [0.5 + b[0][0] * x[0] + b[0][1] * x[1], -1.0 + b[1][0] * x[0] + b[1][1] * x[1]]
        });
        for (t, v) in q.integrated_divergence(&mesh).iter().enumerate() {
            assert!((v - (b[0][0] + b[1][1]) * mesh.areas()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_diagram_for_smooth_solenoidal_field() {
        // rotated gradient of sin(pi x) sin(pi y) is divergence free
        let mesh = Mesh::new(20).unwrap();
        let q = Rt0Field::interpolate(&mesh, |x| {
            let gx = PI * (PI * x[0]).cos() * (PI * x[1]).sin();
            let gy = PI * (PI * x[0]).sin() * (PI * x[1]).cos();
            [-gy, gx]
        });
        let worst = q
            .integrated_divergence(&mesh)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn rt0_reproduces_constants() {
        let mesh = Mesh::new(3).unwrap();
        let q = Rt0Field::interpolate(&mesh, |_| [0.25, -1.5]);
        for t in 0..mesh.num_triangles() {
            let c = q.centroid_value(&mesh, t).unwrap();
            assert!((c[0] - 0.25).abs() < 1e-13 && (c[1] + 1.5).abs() < 1e-13);
            let (_, slope) = q.local(&mesh, t);
            assert!(slope.abs() < 1e-12);
        }
        for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
            let v = mesh.vertices();
            if v[lo][1] == v[hi][1] {
                // horizontal edge: flux = int (0.25, -1.5) . (0, +-1)
                assert!((q.0[e].abs() - 1.5 * mesh.edge_length(e).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rt0_interpolant_of_linear_field_on_single_square() {
        // Hand computation on the lower triangle (0,0),(1,0),(1,1): fluxes
        // 0 (bottom), 1 (right), -1/2 (diagonal, outward) give the RT0 field
        // (1/2 + x/2, y/2), whose centroid value is (5/6, 1/6). The RT0
        // interpolant preserves the element mean only for fields whose
        // normal trace is constant on each edge, so this is not (2/3, 0).
        let mesh = Mesh::new(1).unwrap();
        let q = Rt0Field::interpolate(&mesh, |x| [x[0], 0.0]);
        let c = q.centroid_value(&mesh, 0).unwrap();
        assert!((c[0] - 5.0 / 6.0).abs() < 1e-12 && (c[1] - 1.0 / 6.0).abs() < 1e-12);
        // mean of the interpolant from the edge fluxes: sum_e flux_e (m_e - c)
        for t in 0..2 {
            let pts = mesh.triangle_points(t);
            let cen = mesh.centroids()[t];
            let mut acc = [0.0; 2];
            for k in 0..3 {
                let e = mesh.tri_edges()[t][k];
                let flux = mesh.tri_edge_signs()[t][k] * q.0[e];
                let a = pts[(k + 1) % 3];
                let b = pts[(k + 2) % 3];
                let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                acc[0] += flux * (m[0] - cen[0]);
                acc[1] += flux * (m[1] - cen[1]);
            }
            let got = q.centroid_value(&mesh, t).unwrap();
            let area = mesh.areas()[t];
            assert!((got[0] - acc[0] / area).abs() < 1e-12);
            assert!((got[1] - acc[1] / area).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_gradient_of_linear_function() {
        let mesh = Mesh::new(4).unwrap();
        let u = P1Field::interpolate(&mesh, |x| x[0]);
        for t in 0..mesh.num_triangles() {
            let g = u.gradient(&mesh, t).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-13 && g[1].abs() < 1e-13);
        }
        assert!(u.gradient(&mesh, 32).is_err());
        assert!(Rt0Field::zeros(&mesh).centroid_value(&mesh, 32).is_err());
    }

    #[test]
    fn z_norm_of_constant_pair() {
        let mesh = Mesh::new(3).unwrap();
        let mut y = PhaseField::zeros(mesh.num_triangles());
        for r in &mut y.r {
            *r = [1.0, 0.0];
        }
        let z = ZField::from(&y);
        assert!((z_inner(&mesh, &z, &z).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(z_dist(&mesh, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn z_dist_to_centroid_average_is_fluctuation_norm() {
        let mesh = Mesh::new(1).unwrap();
        let q = Rt0Field::interpolate(&mesh, |x| [x[0], 0.0]);
        let zq = ZField::from_rt0(&mesh, &q, vec![[0.0; 2]; 2]);
        let avg = ZField::from(&zq.to_phase());
        let d = z_dist(&mesh, &zq, &avg).unwrap();
        // slope 1/2 on both triangles, polar moment 1/18 each
        assert!((d - 1.0 / 6.0).abs() < 1e-12);
        // independent quadrature of |q(x) - mean|^2
        let mut acc = 0.0;
        for t in 0..2 {
            let mean = q.centroid_value(&mesh, t).unwrap();
            acc += DEGREE4.integrate(&mesh.triangle_points(t), mesh.areas()[t], |x| {
                let v = q.eval(&mesh, t, x);
                (v[0] - mean[0]).powi(2) + (v[1] - mean[1]).powi(2)
            });
        }
        assert!((d - acc.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn z_inner_rejects_mismatched_fields() {
        let mesh = Mesh::new(2).unwrap();
        let a = ZField::zeros(8);
        let b = ZField::zeros(2);
        assert!(matches!(z_inner(&mesh, &a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn stiffness_matches_five_point_stencil() {
        let mesh = Mesh::new(4).unwrap();
        let sys = SystemMatrices::assemble(&mesh);
        // On a Friedrichs-Keller mesh P1 stiffness reduces to the 5-point Laplacian.
        for i in 0..sys.num_interior() {
            assert!((sys.stiffness.get(i, i) - 4.0).abs() < 1e-13);
            let off: f64 = sys.stiffness.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
            assert!(off >= -4.0 - 1e-13 && off <= 0.0);
        }
    }
}
