//! Projection and splitting solvers for
//! `min_{y in D_h} F(y) = 1/2 |pi_E(y) - y|_Z^2`.
//!
//! * PG: `y <- pi_D(pi_E(y))`
//! * PS: `y <- pi_D(y - gamma (y - pi_E(y)))`, shrinking `gamma` on 2-cycles
//! * DR1/DR2: Douglas-Rachford with the roles of `E` and `D` swapped

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{EquilibriumProjector, EquilibriumState};
use crate::error::{Error, Result};
use crate::material::{Assignment, LocalDataSet, BOX};
use crate::spaces::{z_dist, PhaseField, ZField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Pg,
    Ps,
    Dr1,
    Dr2,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::Ps => "ps",
            Algorithm::Dr1 => "dr1",
            Algorithm::Dr2 => "dr2",
        }
    }

    pub fn default_max_iter(self) -> usize {
        match self {
            Algorithm::Pg | Algorithm::Ps => 2000,
            Algorithm::Dr1 | Algorithm::Dr2 => 5000,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pg" => Ok(Algorithm::Pg),
            "ps" => Ok(Algorithm::Ps),
            "dr1" => Ok(Algorithm::Dr1),
            "dr2" => Ok(Algorithm::Dr2),
            other => Err(Error::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoint {
    Zero,
    /// Element values uniform in `[-4, 4]^4`, drawn from a ChaCha8 stream.
    RandomBox { seed: u64 },
    Explicit(PhaseField),
}

impl InitialPoint {
    pub fn field(&self, num_triangles: usize) -> Result<PhaseField> {
        match self {
            InitialPoint::Zero => Ok(PhaseField::zeros(num_triangles)),
            InitialPoint::RandomBox { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut draw = || BOX * (2.0 * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64) - 1.0);
                let values: Vec<[f64; 4]> = (0..num_triangles)
                    .map(|_| [draw(), draw(), draw(), draw()])
                    .collect();
                Ok(PhaseField::from_values(&values))
            }
            InitialPoint::Explicit(y) => {
                if y.len() != num_triangles {
                    return Err(Error::DimensionMismatch(format!(
                        "initial field has {} elements, mesh has {num_triangles}",
                        y.len()
                    )));
                }
                Ok(y.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma0: f64,
    pub gamma_reduction: f64,
    pub gamma_min: f64,
    pub stall_window: usize,
    /// Minimal decrease counted as an improvement by the stall rule.
    pub stall_tol: f64,
    pub max_iter: usize,
    pub init: InitialPoint,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            gamma0: if algorithm == Algorithm::Ps { 1.4 } else { 1.0 },
            gamma_reduction: 0.9,
            gamma_min: 1e-3,
            stall_window: 50,
            stall_tol: 1e-14,
            max_iter: algorithm.default_max_iter(),
            init: InitialPoint::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::Ps && !(self.gamma0 > 0.0 && self.gamma0 < 2.0) {
            return Err(Error::InvalidArgument(format!("gamma0 must lie in (0, 2), got {}", self.gamma0)));
        }
        if !(self.gamma_reduction > 0.0 && self.gamma_reduction < 1.0) {
            return Err(Error::InvalidArgument("step reduction factor must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 || self.stall_window == 0 {
            return Err(Error::InvalidArgument("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    FixedPoint,
    CycleResolved,
    Stall,
    MaxIter,
    LocalOptimum,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::FixedPoint => "fixed_point",
            Termination::CycleResolved => "cycle_resolved",
            Termination::Stall => "stall",
            Termination::MaxIter => "max_iter",
            Termination::LocalOptimum => "local_optimum",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a solver run. `history[i]` is the objective after iteration
/// `i + 1`; `gamma` and `elapsed_ms` are aligned with it.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub algorithm: String,
    /// Best point found; always a member of `D_h`.
    pub y: PhaseField,
    pub assignment: Assignment,
    /// `pi_E(y)`.
    pub state: EquilibriumState,
    pub objective: f64,
    pub history: Vec<f64>,
    pub gamma: Vec<f64>,
    pub elapsed_ms: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Running minimum of the history.
    pub fn best_history(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|&f| {
                best = best.min(f);
                best
            })
            .collect()
    }

    pub fn final_gamma(&self) -> Option<f64> {
        self.gamma.last().copied()
    }
}

/// A point of `D_h` with its projection and objective.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub y: PhaseField,
    pub assignment: Assignment,
    pub state: EquilibriumState,
    pub z: ZField,
    pub objective: f64,
}

pub(crate) fn evaluate(
    projector: &EquilibriumProjector,
    y: PhaseField,
    assignment: Assignment,
) -> Result<Evaluated> {
    let state = projector.project(&y)?;
    let z = state.to_z(projector.mesh());
    let d = z_dist(projector.mesh(), &ZField::from(&y), &z)?;
    Ok(Evaluated {
        y,
        assignment,
        state,
        z,
        objective: 0.5 * d * d,
    })
}

/// `F(y) = 1/2 |y - pi_E(y)|_Z^2`.
pub fn objective(projector: &EquilibriumProjector, y: &PhaseField) -> Result<f64> {
    let z = projector.project(y)?.to_z(projector.mesh());
    let d = z_dist(projector.mesh(), &ZField::from(y), &z)?;
    Ok(0.5 * d * d)
}

/// Objective of the data assignment `a`.
pub fn assignment_objective(
    projector: &EquilibriumProjector,
    data: &LocalDataSet,
    a: &[usize],
) -> Result<f64> {
    check_assignment(projector, a)?;
    objective(projector, &data.field(a)?)
}

pub(crate) fn check_assignment(projector: &EquilibriumProjector, a: &[usize]) -> Result<()> {
    let nt = projector.mesh().num_triangles();
    if a.len() != nt {
        return Err(Error::DimensionMismatch(format!(
            "assignment has {} entries, mesh has {nt} elements",
            a.len()
        )));
    }
    Ok(())
}

struct Recorder {
    start: Instant,
    history: Vec<f64>,
    gamma: Vec<f64>,
    elapsed_ms: Vec<f64>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            start: Instant::now(),
            history: Vec::new(),
            gamma: Vec::new(),
            elapsed_ms: Vec::new(),
        }
    }

    fn push(&mut self, objective: f64, gamma: f64) {
        self.history.push(objective);
        self.gamma.push(gamma);
        self.elapsed_ms.push(self.start.elapsed().as_secs_f64() * 1e3);
    }

    fn finish(self, algorithm: &str, best: Evaluated, termination: Termination) -> SolveReport {
        SolveReport {
            algorithm: algorithm.to_string(),
            y: best.y,
            assignment: best.assignment,
            state: best.state,
            objective: best.objective,
            iterations: self.history.len(),
            history: self.history,
            gamma: self.gamma,
            elapsed_ms: self.elapsed_ms,
            termination,
            wall_time: self.start.elapsed(),
        }
    }
}

fn keep_best(best: &mut Option<Evaluated>, cand: &Evaluated) {
    if best.as_ref().is_none_or(|b| cand.objective < b.objective) {
        *best = Some(cand.clone());
    }
}

pub fn solve(projector: &EquilibriumProjector, data: &LocalDataSet, config: &SolverConfig) -> Result<SolveReport> {
    match config.algorithm {
        Algorithm::Pg => run_pg(projector, data, config),
        Algorithm::Ps => run_ps(projector, data, config),
        Algorithm::Dr1 | Algorithm::Dr2 => run_dr(projector, data, config),
    }
}

pub fn run_pg(projector: &EquilibriumProjector, data: &LocalDataSet, config: &SolverConfig) -> Result<SolveReport> {
    let pg = SolverConfig {
        algorithm: Algorithm::Pg,
        gamma0: 1.0,
        ..config.clone()
    };
    proximal(projector, data, &pg, "pg")
}

pub fn run_ps(projector: &EquilibriumProjector, data: &LocalDataSet, config: &SolverConfig) -> Result<SolveReport> {
    proximal(projector, data, config, "ps")
}

fn proximal(
    projector: &EquilibriumProjector,
    data: &LocalDataSet,
    config: &SolverConfig,
    name: &str,
) -> Result<SolveReport> {
    config.validate()?;
    let nt = projector.mesh().num_triangles();
    let mut rec = Recorder::new();
    let mut gamma = config.gamma0;
    let mut reduced = false;

    // y_n, z_n = pi_E(y_n) and the assignment of y_n (none for y_0)
    let mut cur_y = ZField::from(&config.init.field(nt)?);
    let mut cur_z = projector.apply(&cur_y)?;
    let mut cur_a: Option<Assignment> = None;
    let mut cur_f = f64::INFINITY;
    let mut prev_a: Option<Assignment> = None;
    let mut best: Option<Evaluated> = None;

    for _ in 0..config.max_iter {
        let arg = ZField::lincomb(1.0 - gamma, &cur_y, gamma, &cur_z);
        let (y, a) = data.project(&arg);
        let next = evaluate(projector, y, a)?;
        rec.push(next.objective, gamma);
        keep_best(&mut best, &next);

        if cur_a.as_ref() == Some(&next.assignment) {
            let term = if reduced { Termination::CycleResolved } else { Termination::FixedPoint };
            return Ok(rec.finish(name, best.unwrap(), term));
        }
        if prev_a.as_ref() == Some(&next.assignment) {
            gamma *= config.gamma_reduction;
            reduced = true;
            if gamma < config.gamma_min {
                return Ok(rec.finish(name, best.unwrap(), Termination::FixedPoint));
            }
            prev_a = None;
            if next.objective < cur_f {
                cur_y = ZField::from(&next.y);
                cur_z = next.z;
                cur_a = Some(next.assignment);
                cur_f = next.objective;
            }
            continue;
        }
        prev_a = cur_a.take();
        cur_y = ZField::from(&next.y);
        cur_z = next.z;
        cur_a = Some(next.assignment);
        cur_f = next.objective;
    }
    Ok(rec.finish(name, best.unwrap(), Termination::MaxIter))
}

pub fn run_dr(projector: &EquilibriumProjector, data: &LocalDataSet, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let name = match config.algorithm {
        Algorithm::Dr2 => "dr2",
        _ => "dr1",
    };
    let nt = projector.mesh().num_triangles();
    let mut rec = Recorder::new();
    let mut y = ZField::from(&config.init.field(nt)?);
    let mut best: Option<Evaluated> = None;
    let mut since_improvement = 0;

    for _ in 0..config.max_iter {
        y = dr_step(projector, data, config.algorithm, &y)?;
        let (yd, a) = data.project(&y);
        let eval = evaluate(projector, yd, a)?;
        rec.push(eval.objective, f64::NAN);
        let improved = best
            .as_ref()
            .is_none_or(|b| b.objective - eval.objective > config.stall_tol);
        if improved {
            best = Some(eval);
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= config.stall_window {
                return Ok(rec.finish(name, best.unwrap(), Termination::Stall));
            }
        }
    }
    Ok(rec.finish(name, best.unwrap(), Termination::MaxIter))
}

/// One Douglas-Rachford step `y + pi_B(2 pi_A y - y) - pi_A y`.
pub fn dr_step(
    projector: &EquilibriumProjector,
    data: &LocalDataSet,
    variant: Algorithm,
    y: &ZField,
) -> Result<ZField> {
    let (pa, pb_of_reflection) = match variant {
        Algorithm::Dr2 => {
            let pd = ZField::from(&data.project(y).0);
            let refl = ZField::lincomb(2.0, &pd, -1.0, y);
            let pe = projector.apply(&refl)?;
            (pd, pe)
        }
        _ => {
            let pe = projector.apply(y)?;
            let refl = ZField::lincomb(2.0, &pe, -1.0, y);
            let pd = ZField::from(&data.project(&refl).0);
            (pe, pd)
        }
    };
    Ok(ZField::lincomb(1.0, &ZField::lincomb(1.0, y, 1.0, &pb_of_reflection), -1.0, &pa))
}

/// Reflection `2 pi_E(y) - y`.
pub fn reflect_equilibrium(projector: &EquilibriumProjector, y: &ZField) -> Result<ZField> {
    Ok(ZField::lincomb(2.0, &projector.apply(y)?, -1.0, y))
}
