//! Local search over assignments with a POD surrogate for `pi_E`.
//!
//! Elements are swept in order; for every element the `K` data points
//! nearest to its current value are tried. A candidate is first scored with
//! the reduced model; exact projections are computed only when the reduced
//! value is far from the incumbent (`eps1`) or looks promising (`eps3`), and
//! the basis is enriched whenever the reduced value was off by more than
//! `eps2` or a move is accepted.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::pod::{dof_inner, DofVector, PodConfig, PodModel, ReducedEvaluator};
use super::QsapInstance;
use crate::equilibrium::{EquilibriumProjector, EquilibriumState};
use crate::error::{Error, Result};
use crate::material::kdtree::{dist2, Point4};
use crate::material::{Assignment, LocalDataSet, Metadata};
use crate::mesh::Mesh;
use crate::solvers::{evaluate, run_ps, Evaluated, InitialPoint, SolveReport, SolverConfig, Termination, Algorithm};

/// How the starting assignment (and the initial basis) is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Best of `starts` PS runs from random fields; the remaining runs
    /// provide the initial snapshots.
    PsMultistart { starts: usize, seed: u64 },
    /// Exact solution on a coarse mesh with a subsample of the data,
    /// prolonged to the fine mesh.
    CoarseExact { coarse_n: usize, points: usize },
    /// Assignment read from a file.
    File(PathBuf),
    Given(Assignment),
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::PsMultistart { .. } => "ps-multistart",
            InitStrategy::CoarseExact { .. } => "coarse-exact",
            InitStrategy::File(_) => "file",
            InitStrategy::Given(_) => "given",
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitStrategy {
    type Err = Error;

    /// `ps-multistart` and `coarse-exact` with default parameters, or
    /// `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ps-multistart" => Ok(InitStrategy::PsMultistart { starts: 10, seed: 0 }),
            "coarse-exact" => Ok(InitStrategy::CoarseExact { coarse_n: 2, points: 7 }),
            other => match other.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(InitStrategy::File(PathBuf::from(p))),
                _ => Err(Error::InvalidArgument(format!("unknown initialization '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Number of nearest data points tried per element (the current one
    /// included).
    pub k: usize,
    pub max_sweeps: usize,
    pub pod: PodConfig,
    pub init: InitStrategy,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            eps1: 0.002,
            eps2: 0.001,
            eps3: 0.01,
            k: 20,
            max_sweeps: 100,
            pod: PodConfig::default(),
            init: InitStrategy::PsMultistart { starts: 10, seed: 0 },
        }
    }
}

impl LocalSearchConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k > m {
            return Err(Error::InvalidArgument(format!("K = {} exceeds the data size {m}", self.k)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// Which test of the search caused an exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// `|v_a - v| / |v| > eps1`.
    Deviation,
    /// `v_a < (1 + eps3) v`.
    Promising,
}

/// One exact evaluation made during the search.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub trigger: Trigger,
    pub sweep: usize,
    pub element: usize,
    pub candidate: usize,
    /// Incumbent objective before the test.
    pub v: f64,
    pub v_a: f64,
    pub v_e: f64,
    pub basis_size: usize,
    /// `|v_a - v_e| / |v_e| > eps2`, which enriches the basis; only tested
    /// for [`Trigger::Deviation`].
    pub mismatch: bool,
    pub accepted: bool,
    /// `max_T |int_T div q_a + int_T f|` of the reduced projection.
    pub reduced_divergence: f64,
}

#[derive(Debug, Clone)]
pub struct LocalSearchReport {
    /// `history` holds the objective after every sweep.
    pub report: SolveReport,
    /// Objectives of accepted moves, starting with the initial value.
    pub accepted: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub initial_assignment: Assignment,
    pub initial_objective: f64,
    pub exact_solves: usize,
    pub reduced_evaluations: usize,
    pub snapshots_added: usize,
    pub final_basis_size: usize,
}

impl LocalSearchReport {
    pub fn moves(&self) -> usize {
        self.accepted.len().saturating_sub(1)
    }
}

/// Starting point of a local search.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub assignment: Assignment,
    /// Exact projections used to build the initial basis.
    pub snapshots: Vec<EquilibriumState>,
}

pub fn initialize(instance: &QsapInstance<'_>, strategy: &InitStrategy) -> Result<Initialization> {
    match strategy {
        InitStrategy::PsMultistart { starts, seed } => ps_multistart(instance, *starts, *seed),
        InitStrategy::CoarseExact { coarse_n, points } => Ok(Initialization {
            assignment: coarse_exact(instance, *coarse_n, *points)?,
            snapshots: Vec::new(),
        }),
        InitStrategy::File(path) => Ok(Initialization {
            assignment: load_assignment(path)?,
            snapshots: Vec::new(),
        }),
        InitStrategy::Given(a) => Ok(Initialization {
            assignment: a.clone(),
            snapshots: Vec::new(),
        }),
    }
}

fn ps_multistart(instance: &QsapInstance<'_>, starts: usize, seed: u64) -> Result<Initialization> {
    if starts == 0 {
        return Err(Error::InvalidArgument("ps-multistart needs at least one start".into()));
    }
    let runs: Vec<SolveReport> = (0..starts as u64)
        .into_par_iter()
        .map(|i| {
            let config = SolverConfig {
                init: InitialPoint::RandomBox { seed: seed.wrapping_add(i) },
                ..SolverConfig::new(Algorithm::Ps)
            };
            run_ps(instance.projector, instance.data, &config)
        })
        .collect::<Result<_>>()?;
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].objective.total_cmp(&runs[b].objective).then(a.cmp(&b)))
        .expect("at least one run");
    let mut assignment = Vec::new();
    let mut snapshots = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        if i == best {
            assignment = r.assignment;
        } else {
            snapshots.push(r.state);
        }
    }
    Ok(Initialization { assignment, snapshots })
}

/// Farthest-point subsample: start from the point nearest the mean, then
/// repeatedly add the point farthest from the selection (lowest index on
/// ties).
pub fn farthest_point_selection(points: &[Point4], count: usize) -> Vec<usize> {
    if points.is_empty() || count == 0 {
        return Vec::new();
    }
    let n = points.len() as f64;
    let mut mean = [0.0; 4];
    for p in points {
        for k in 0..4 {
            mean[k] += p[k] / n;
        }
    }
    let first = argmin_by(points.len(), |i| dist2(&points[i], &mean));
    let mut selected = vec![first];
    let mut gap: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while selected.len() < count.min(points.len()) {
        let next = argmin_by(points.len(), |i| -gap[i]);
        if gap[next] == 0.0 {
            break;
        }
        selected.push(next);
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(dist2(p, &points[next]));
        }
    }
    selected
}

fn argmin_by(n: usize, key: impl Fn(usize) -> f64) -> usize {
    (0..n).fold(0, |best, i| if key(i) < key(best) { i } else { best })
}

fn coarse_exact(instance: &QsapInstance<'_>, coarse_n: usize, count: usize) -> Result<Assignment> {
    let coarse = EquilibriumProjector::new(Mesh::new(coarse_n)?, instance.projector.source())?;
    let picked = farthest_point_selection(instance.data.points(), count);
    let subset: Vec<Point4> = picked.iter().map(|&j| instance.data.points()[j]).collect();
    let sub = LocalDataSet::new(subset, Metadata::default())?;
    let (coarse_a, _) = QsapInstance::new(&coarse, &sub).brute_force()?;
    let fine = instance.projector.mesh();
    Ok(fine
        .centroids()
        .iter()
        .map(|&c| picked[coarse_a[coarse.mesh().locate(c)]])
        .collect())
}

/// One data index per line; blank lines and `#` comments are ignored.
pub fn load_assignment(path: impl AsRef<Path>) -> Result<Assignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        out.push(s.parse().map_err(|_| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("invalid data index '{s}'"),
        })?);
    }
    Ok(out)
}

pub fn save_assignment(path: impl AsRef<Path>, a: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(a.len() * 6);
    for j in a {
        text.push_str(&j.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Initializes with `config.init` and runs the search.
pub fn run_local_search(instance: &QsapInstance<'_>, config: &LocalSearchConfig) -> Result<LocalSearchReport> {
    let init = initialize(instance, &config.init)?;
    local_search(instance, &init.assignment, config, &init.snapshots)
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

struct Search<'i, 'a> {
    instance: &'i QsapInstance<'a>,
    config: &'i LocalSearchConfig,
    model: PodModel,
    current: Evaluated,
    evaluator: Option<ReducedEvaluator>,
    trace: Vec<TraceRecord>,
    accepted: Vec<f64>,
    exact_solves: usize,
    reduced_evaluations: usize,
    snapshots_added: usize,
}

impl Search<'_, '_> {
    fn projector(&self) -> &EquilibriumProjector {
        self.instance.projector
    }

    fn evaluator(&mut self) -> &ReducedEvaluator {
        let stale = self.evaluator.as_ref().is_none_or(|e| !e.is_current(&self.model));
        if stale {
            self.evaluator = Some(self.model.evaluator(self.instance.projector, &self.current.y));
        }
        self.evaluator.as_ref().unwrap()
    }

    fn add_snapshot(&mut self, state: &EquilibriumState) {
        self.model.add_snapshot(self.instance.projector, state);
        self.snapshots_added += 1;
    }

    fn exact(&mut self, t: usize, j: usize) -> Result<Evaluated> {
        if self.current.assignment[t] == j {
            return Ok(self.current.clone());
        }
        let mut a = self.current.assignment.clone();
        a[t] = j;
        self.exact_solves += 1;
        evaluate(self.projector(), self.instance.data.field(&a)?, a)
    }

    fn accept(&mut self, cand: Evaluated) {
        self.add_snapshot(&cand.state);
        self.accepted.push(cand.objective);
        self.current = cand;
        self.evaluator = None;
    }

    /// Tests data point `j` on element `t`; returns whether it was accepted.
    fn test(&mut self, sweep: usize, t: usize, j: usize) -> Result<bool> {
        let p = self.instance.data.points()[j];
        let v_a = {
            let ev = self.evaluator().clone();
            self.reduced_evaluations += 1;
            ev.objective_with(&self.model, self.instance.projector, t, &p)
        };
        let mut cached: Option<Evaluated> = None;
        let mut moved = false;

        if relative(v_a, self.current.objective) > self.config.eps1 {
            let divergence = self.reduced_divergence(t, &p);
            let e = self.exact(t, j)?;
            let v = self.current.objective;
            let mismatch = relative(v_a, e.objective) > self.config.eps2;
            let basis_size = self.model.basis_size();
            if mismatch {
                self.add_snapshot(&e.state);
            }
            let accepted = e.objective < v;
            self.trace.push(TraceRecord {
                trigger: Trigger::Deviation,
                sweep,
                element: t,
                candidate: j,
                v,
                v_a,
                v_e: e.objective,
                basis_size,
                mismatch,
                accepted,
                reduced_divergence: divergence,
            });
            if accepted {
                self.accept(e.clone());
                moved = true;
            }
            cached = Some(e);
        }
        if v_a < (1.0 + self.config.eps3) * self.current.objective {
            let divergence = self.reduced_divergence(t, &p);
            let e = match cached {
                Some(e) => e,
                None => self.exact(t, j)?,
            };
            let v = self.current.objective;
            let accepted = e.objective < v;
            self.trace.push(TraceRecord {
                trigger: Trigger::Promising,
                sweep,
                element: t,
                candidate: j,
                v,
                v_a,
                v_e: e.objective,
                basis_size: self.model.basis_size(),
                mismatch: false,
                accepted,
                reduced_divergence: divergence,
            });
            if accepted {
                self.accept(e);
                moved = true;
            }
        }
        Ok(moved)
    }

    fn reduced_divergence(&mut self, t: usize, p: &Point4) -> f64 {
        let ev = self.evaluator().clone();
        let za: DofVector = ev.reduced_dofs_with(&self.model, self.instance.projector, t, p);
        self.projector().flux_divergence_residual(&za.q)
    }
}

/// Local search from `initial`; `snapshots` seed the reduced model.
pub fn local_search(
    instance: &QsapInstance<'_>,
    initial: &[usize],
    config: &LocalSearchConfig,
    snapshots: &[EquilibriumState],
) -> Result<LocalSearchReport> {
    config.validate(instance.m())?;
    let start = Instant::now();
    let projector = instance.projector;
    let y0 = instance.field(initial)?;
    let current = evaluate(projector, y0, initial.to_vec())?;
    let mut model = PodModel::new(projector, config.pod.clone())?;
    if !snapshots.is_empty() {
        model.add_snapshots(projector, snapshots);
    }
    let initial_objective = current.objective;
    let mut search = Search {
        instance,
        config,
        model,
        accepted: vec![initial_objective],
        current,
        evaluator: None,
        trace: Vec::new(),
        exact_solves: 0,
        reduced_evaluations: 0,
        snapshots_added: 0,
    };

    let mut history = Vec::new();
    let mut elapsed_ms = Vec::new();
    let mut termination = Termination::LocalOptimum;
    let l = instance.l();
    if config.k > 0 && search.current.objective > 0.0 {
        let mut sweep = 0;
        'outer: loop {
            if sweep == config.max_sweeps {
                termination = Termination::MaxIter;
                break;
            }
            sweep += 1;
            let before = search.current.objective;
            for t in 0..l {
                let here = instance.data.points()[search.current.assignment[t]];
                let neighbours = instance.data.k_nearest(&here, config.k);
                for j in neighbours {
                    search.test(sweep, t, j)?;
                    if search.current.objective == 0.0 {
                        history.push(0.0);
                        elapsed_ms.push(start.elapsed().as_secs_f64() * 1e3);
                        break 'outer;
                    }
                }
            }
            history.push(search.current.objective);
            elapsed_ms.push(start.elapsed().as_secs_f64() * 1e3);
            if search.current.objective == before {
                break;
            }
        }
    }

    let final_basis_size = search.model.basis_size();
    let best = search.current;
    let iterations = history.len();
    Ok(LocalSearchReport {
        report: SolveReport {
            algorithm: "local-search".into(),
            y: best.y,
            assignment: best.assignment,
            state: best.state,
            objective: best.objective,
            gamma: vec![f64::NAN; iterations],
            history,
            elapsed_ms,
            iterations,
            termination,
            wall_time: start.elapsed(),
        },
        accepted: search.accepted,
        trace: search.trace,
        initial_assignment: initial.to_vec(),
        initial_objective,
        exact_solves: search.exact_solves,
        reduced_evaluations: search.reduced_evaluations,
        snapshots_added: search.snapshots_added,
        final_basis_size,
    })
}

/// `|z_a - z_e|_Z / |z_e|_Z` for the reduced projection of a phase field.
pub fn reduced_projection_error(
    model: &PodModel,
    projector: &EquilibriumProjector,
    y: &crate::spaces::PhaseField,
) -> Result<f64> {
    let exact = DofVector::from_state(projector, &projector.project(y)?);
    let za = model.project(projector, y);
    let diff = DofVector {
        q: za.q.iter().zip(&exact.q).map(|(a, b)| a - b).collect(),
        u: za.u.iter().zip(&exact.u).map(|(a, b)| a - b).collect(),
    };
    Ok(dof_inner(projector, &diff, &diff).sqrt() / dof_inner(projector, &exact, &exact).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Source;
    use crate::law::Law;

    fn tiny(n: usize, m: usize, seed: u64) -> (EquilibriumProjector, LocalDataSet) {
        let p = EquilibriumProjector::new(Mesh::new(n).unwrap(), &Source::Manufactured(Law::Fourier)).unwrap();
        let d = LocalDataSet::uniform(Law::Fourier, m, 0.2, seed).unwrap();
        (p, d)
    }

    fn config(k: usize) -> LocalSearchConfig {
        LocalSearchConfig {
            k,
            init: InitStrategy::Given(Vec::new()),
            ..LocalSearchConfig::default()
        }
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let (p, d) = tiny(1, 4, 3);
        let q = QsapInstance::new(&p, &d);
        let (opt, v) = q.brute_force().unwrap();
        let r = local_search(&q, &opt, &config(4), &[]).unwrap();
        assert_eq!(r.moves(), 0);
        assert_eq!(r.report.iterations, 1);
        assert_eq!(r.report.assignment, opt);
        assert_eq!(r.report.objective, v);
        assert_eq!(r.report.termination, Termination::LocalOptimum);
    }

    #[test]
    fn k_zero_returns_initial() {
        let (p, d) = tiny(2, 5, 1);
        let q = QsapInstance::new(&p, &d);
        let a0 = vec![1; 8];
        let r = local_search(&q, &a0, &config(0), &[]).unwrap();
        assert_eq!(r.report.assignment, a0);
        assert_eq!(r.report.iterations, 0);
        assert!(local_search(&q, &a0, &config(6), &[]).is_err());
    }

    #[test]
    fn accepted_values_decrease_and_exit_is_locally_optimal() {
        let (p, d) = tiny(2, 5, 8);
        let q = QsapInstance::new(&p, &d);
        let r = local_search(&q, &[0; 8], &config(5), &[]).unwrap();
        assert!(r.accepted.windows(2).all(|w| w[1] < w[0]));
        let v = r.report.objective;
        for t in 0..8 {
            for j in 0..5 {
                let mut a = r.report.assignment.clone();
                a[t] = j;
                assert!(q.objective(&a).unwrap() >= v);
            }
        }
        assert!(r.trace.iter().all(|t| t.reduced_divergence <= 1e-9));
        assert!(v >= q.brute_force().unwrap().1 - 1e-12);
    }

    #[test]
    fn farthest_points_are_spread() {
        let pts = vec![[0.0; 4], [1.0, 0.0, 0.0, 0.0], [10.0, 0.0, 0.0, 0.0], [0.4, 0.0, 0.0, 0.0]];
        // mean is (2.85, 0, 0, 0); nearest is index 1
        assert_eq!(farthest_point_selection(&pts, 3), vec![1, 2, 0]);
        assert_eq!(farthest_point_selection(&pts, 10).len(), 4);
        let dup = vec![[1.0; 4]; 3];
        assert_eq!(farthest_point_selection(&dup, 3), vec![0]);
    }

    #[test]
    fn coarse_exact_prolongs_to_fine_mesh() {
        let (p, d) = tiny(4, 30, 2);
        let q = QsapInstance::new(&p, &d);
        let init = initialize(&q, &InitStrategy::CoarseExact { coarse_n: 2, points: 4 }).unwrap();
        assert_eq!(init.assignment.len(), 32);
        let picked = farthest_point_selection(d.points(), 4);
        assert!(init.assignment.iter().all(|j| picked.contains(j)));
    }

    #[test]
    fn assignment_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        save_assignment(&path, &[3, 1, 4, 1, 5]).unwrap();
        assert_eq!(load_assignment(&path).unwrap(), vec![3, 1, 4, 1, 5]);
        fs::write(&path, "# start\n1\nx\n").unwrap();
        assert!(matches!(load_assignment(&path), Err(Error::Format { line: 3, .. })));
        let s: InitStrategy = format!("file:{}", path.display()).parse().unwrap();
        assert_eq!(s.name(), "file");
        assert!("nope".parse::<InitStrategy>().is_err());
    }
}
