//! The discrete problem as a quadratic semi-assignment problem: choose one
//! data point per element so that `1/2 |pi_E(y) - y|_Z^2` is minimal.

pub mod local_search;
pub mod pod;

use crate::equilibrium::EquilibriumProjector;
use crate::error::{Error, Result};
use crate::material::{Assignment, LocalDataSet};
use crate::solvers::{check_assignment, objective};
use crate::spaces::{z_inner, PhaseField, ZField};

pub use local_search::{
    initialize, local_search, run_local_search, InitStrategy, Initialization, LocalSearchConfig, LocalSearchReport,
    TraceRecord, Trigger,
};
pub use pod::{PodConfig, PodModel};

/// Largest `l * m` accepted by [`QsapInstance::materialize`].
pub const MATERIALIZE_LIMIT: usize = 4096;
/// Largest `m^l` accepted by [`QsapInstance::brute_force`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Clone, Copy)]
pub struct QsapInstance<'a> {
    pub projector: &'a EquilibriumProjector,
    pub data: &'a LocalDataSet,
}

/// `x^T A x + b^T x + c` over binary `x` with one nonzero per element;
/// variable `(i, j)` has index `i * m + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub l: usize,
    pub m: usize,
    /// Row-major `lm x lm`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.l * self.m + col]
    }

    pub fn value(&self, assignment: &[usize]) -> Result<f64> {
        if assignment.len() != self.l {
            return Err(Error::DimensionMismatch(format!(
                "assignment has {} entries, expected {}",
                assignment.len(),
                self.l
            )));
        }
        if let Some(&j) = assignment.iter().find(|&&j| j >= self.m) {
            return Err(Error::OutOfRange {
                what: "data point",
                index: j,
                len: self.m,
            });
        }
        let idx: Vec<usize> = assignment.iter().enumerate().map(|(i, &j)| i * self.m + j).collect();
        let quad: f64 = idx
            .iter()
            .map(|&r| idx.iter().map(|&s| self.entry(r, s)).sum::<f64>())
            .sum();
        Ok(quad + idx.iter().map(|&r| self.b[r]).sum::<f64>() + self.c)
    }

    /// Smallest eigenvalue of `A`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let n = self.l * self.m;
        let mat = faer::Mat::from_fn(n, n, |i, j| self.entry(i, j));
        let evd = mat
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        Ok((0..n).map(|i| s[i]).fold(f64::INFINITY, f64::min))
    }
}

impl<'a> QsapInstance<'a> {
    pub fn new(projector: &'a EquilibriumProjector, data: &'a LocalDataSet) -> Self {
        QsapInstance { projector, data }
    }

    /// Number of elements `l`.
    pub fn l(&self) -> usize {
        self.projector.mesh().num_triangles()
    }

    /// Number of data points `m`.
    pub fn m(&self) -> usize {
        self.data.len()
    }

    pub fn field(&self, assignment: &[usize]) -> Result<PhaseField> {
        check_assignment(self.projector, assignment)?;
        self.data.field(assignment)
    }

    pub fn objective(&self, assignment: &[usize]) -> Result<f64> {
        objective(self.projector, &self.field(assignment)?)
    }

    /// Residual `pi_E(y) - y`.
    fn residual(&self, y: &PhaseField) -> Result<ZField> {
        let yz = ZField::from(y);
        Ok(ZField::lincomb(1.0, &self.projector.apply(&yz)?, -1.0, &yz))
    }

    /// Explicit `(A, b, c)`, built by probing the affine map
    /// `y -> pi_E(y) - y` with the zero field and with fields that are
    /// nonzero on a single element.
    pub fn materialize(&self) -> Result<QuadraticForm> {
        let (l, m) = (self.l(), self.m());
        if l.saturating_mul(m) > MATERIALIZE_LIMIT {
            return Err(Error::SizeGuard(format!(
                "materialization needs l*m <= {MATERIALIZE_LIMIT}, got {l}*{m}"
            )));
        }
        let mesh = self.projector.mesh();
        let rho0 = self.residual(&PhaseField::zeros(l))?;
        let mut columns = Vec::with_capacity(l * m);
        for i in 0..l {
            for j in 0..m {
                let mut y = PhaseField::zeros(l);
                let p = self.data.point(j)?;
                y.r[i] = [p[0], p[1]];
                y.w[i] = [p[2], p[3]];
                columns.push(ZField::lincomb(1.0, &self.residual(&y)?, -1.0, &rho0));
            }
        }
        let n = l * m;
        let mut a = vec![0.0; n * n];
        for r in 0..n {
            for s in r..n {
                let v = 0.5 * z_inner(mesh, &columns[r], &columns[s])?;
                a[r * n + s] = v;
                a[s * n + r] = v;
            }
        }
        let b = columns.iter().map(|v| z_inner(mesh, &rho0, v)).collect::<Result<Vec<_>>>()?;
        let c = 0.5 * z_inner(mesh, &rho0, &rho0)?;
        Ok(QuadraticForm { l, m, a, b, c })
    }

    /// Global minimum by exhaustive enumeration. Among equal values the
    /// lexicographically smallest assignment wins; the returned objective is
    /// recomputed with the exact projection.
    pub fn brute_force(&self) -> Result<(Assignment, f64)> {
        let (l, m) = (self.l(), self.m());
        if (m as f64).powi(l as i32) > ENUMERATION_LIMIT {
            return Err(Error::SizeGuard(format!(
                "enumeration needs m^l <= {ENUMERATION_LIMIT:e}, got {m}^{l}"
            )));
        }
        let form = self.materialize()?;
        let mut search = Enumeration {
            form: &form,
            current: vec![0; l],
            best: Vec::new(),
            best_value: f64::INFINITY,
        };
        search.descend(0, form.c);
        let best = search.best;
        let value = self.objective(&best)?;
        Ok((best, value))
    }
}

struct Enumeration<'f> {
    form: &'f QuadraticForm,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
}

impl Enumeration<'_> {
    fn descend(&mut self, depth: usize, partial: f64) {
        let f = self.form;
        if depth == f.l {
            if partial < self.best_value {
                self.best_value = partial;
                self.best = self.current.clone();
            }
            return;
        }
        for j in 0..f.m {
            let r = depth * f.m + j;
            let cross: f64 = (0..depth).map(|i| f.entry(i * f.m + self.current[i], r)).sum();
            let value = partial + f.b[r] + f.entry(r, r) + 2.0 * cross;
            self.current[depth] = j;
            self.descend(depth + 1, value);
        }
    }
}
