//! Parameter studies over meshes, data sets and solvers.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{get, get_list, ConfigMap};
use super::newton::{solve_newton, NewtonConfig};
use super::{compute_errors, compute_eoc, potential_errors};
use crate::equilibrium::{EquilibriumProjector, Source};
use crate::error::{Error, Result};
use crate::law::Law;
use crate::material::{LocalDataSet, Sampling};
use crate::mesh::Mesh;
use crate::qsap::{run_local_search, InitStrategy, LocalSearchConfig, QsapInstance};
use crate::solvers::{solve, Algorithm, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Solver(Algorithm),
    /// Local search started from the best of ten PS runs.
    LocalSearch,
    /// Classical finite elements with Newton's method (no data).
    Fem,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Solver(a) => f.write_str(a.name()),
            Method::LocalSearch => f.write_str("local-search"),
            Method::Fem => f.write_str("fem"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "local-search" | "local_search" | "ls" => Ok(Method::LocalSearch),
            "fem" | "newton" => Ok(Method::Fem),
            other => other.parse().map(Method::Solver),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub law: Law,
    pub meshes: Vec<usize>,
    /// Total number of data points per set; grid sets need perfect squares.
    pub sizes: Vec<usize>,
    pub noises: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub sampling: Sampling,
    /// Initial step of PS (default 1.4).
    pub gamma0: Option<f64>,
    pub max_iter: Option<usize>,
    /// Record wall-clock times; without them the CSV is reproducible byte
    /// for byte.
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(law: Law) -> Self {
        ExperimentSpec {
            law,
            meshes: vec![20],
            sizes: vec![11025],
            noises: vec![0.0],
            methods: vec![
                Method::Solver(Algorithm::Pg),
                Method::Solver(Algorithm::Ps),
                Method::Solver(Algorithm::Dr1),
                Method::Solver(Algorithm::Dr2),
            ],
            seeds: vec![0],
            sampling: Sampling::Grid,
            gamma0: None,
            max_iter: None,
            timing: true,
            output: None,
        }
    }

    /// Reads the keys `law`, `meshes`, `sizes`, `noise`, `algorithms`,
    /// `seeds`, `sampling`, `gamma0`, `max_iter`, `timing` and `output`;
    /// missing keys keep the defaults of [`ExperimentSpec::new`].
    pub fn from_config(map: &ConfigMap) -> Result<Self> {
        const KEYS: [&str; 11] = [
            "law", "meshes", "sizes", "noise", "algorithms", "seeds", "sampling", "gamma0", "max_iter", "timing",
            "output",
        ];
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown configuration key '{k}'")));
        }
        let mut spec = ExperimentSpec::new(get(map, "law")?.unwrap_or(Law::Fourier));
        if let Some(v) = get_list(map, "meshes")? {
            spec.meshes = v;
        }
        if let Some(v) = get_list(map, "sizes")? {
            spec.sizes = v;
        }
        if let Some(v) = get_list(map, "noise")? {
            spec.noises = v;
        }
        if let Some(v) = get_list(map, "algorithms")? {
            spec.methods = v;
        }
        if let Some(v) = get_list(map, "seeds")? {
            spec.seeds = v;
        }
        if let Some(v) = get(map, "sampling")? {
            spec.sampling = v;
        }
        spec.gamma0 = get(map, "gamma0")?;
        spec.max_iter = get(map, "max_iter")?;
        if let Some(v) = get(map, "timing")? {
            spec.timing = v;
        }
        spec.output = get::<String>(map, "output")?.map(PathBuf::from);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidArgument(format!("the list of {what} is empty")));
        if self.meshes.is_empty() {
            return empty("meshes");
        }
        if self.methods.is_empty() {
            return empty("algorithms");
        }
        let data_driven = self.methods.iter().any(|m| *m != Method::Fem);
        if data_driven {
            if self.sizes.is_empty() {
                return empty("data sizes");
            }
            if self.noises.is_empty() {
                return empty("noise levels");
            }
            if self.seeds.is_empty() {
                return empty("seeds");
            }
        }
        if self.meshes.contains(&0) {
            return Err(Error::InvalidArgument("mesh resolutions must be positive".into()));
        }
        if self.sampling == Sampling::Grid {
            if let Some(m) = self.sizes.iter().find(|&&m| grid_side(m).is_none()) {
                return Err(Error::InvalidArgument(format!("grid data needs a square size, got {m}")));
            }
        }
        Ok(())
    }
}

fn grid_side(m: usize) -> Option<usize> {
    let s = (m as f64).sqrt().round() as usize;
    (s >= 2 && s * s == m).then_some(s)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub m: usize,
    pub noise: f64,
    pub algorithm: String,
    pub objective: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub seed: u64,
    pub gamma_final: f64,
}

pub const CSV_HEADER: &str = "n,m,noise,algorithm,objective,err_l2,err_h1,iterations,wall_ms,seed,gamma_final";

struct Job {
    n: usize,
    data: Option<usize>,
    method: Method,
    seed: u64,
}

pub fn build_dataset(law: Law, sampling: Sampling, m: usize, noise: f64, seed: u64) -> Result<LocalDataSet> {
    match sampling {
        Sampling::Grid => {
            let side = grid_side(m)
                .ok_or_else(|| Error::InvalidArgument(format!("grid data needs a square size, got {m}")))?;
            LocalDataSet::grid_noisy(law, side, noise, seed)
        }
        Sampling::Uniform => LocalDataSet::uniform(law, m, noise, seed),
    }
}

/// Runs every combination of the spec; rows come out in spec order (mesh,
/// data size, noise, seed, method) whatever the completion order. FEM rows
/// appear once per mesh with `m = 0`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<StudyRow>> {
    spec.validate()?;
    let source = Source::Manufactured(spec.law);
    let projectors: Vec<EquilibriumProjector> = spec
        .meshes
        .par_iter()
        .map(|&n| EquilibriumProjector::new(Mesh::new(n)?, &source).map_err(|e| e.context(format!("mesh n={n}"))))
        .collect::<Result<_>>()?;

    let data_methods: Vec<Method> = spec.methods.iter().copied().filter(|m| *m != Method::Fem).collect();
    let mut keys = Vec::new();
    if !data_methods.is_empty() {
        for &m in &spec.sizes {
            for &noise in &spec.noises {
                for &seed in &spec.seeds {
                    keys.push((m, noise, seed));
                }
            }
        }
    }
    let datasets: Vec<LocalDataSet> = keys
        .par_iter()
        .map(|&(m, noise, seed)| {
            build_dataset(spec.law, spec.sampling, m, noise, seed)
                .map_err(|e| e.context(format!("data m={m} noise={noise} seed={seed}")))
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (mesh_idx, _) in spec.meshes.iter().enumerate() {
        if spec.methods.contains(&Method::Fem) {
            jobs.push(Job {
                n: mesh_idx,
                data: None,
                method: Method::Fem,
                seed: 0,
            });
        }
        for (data_idx, &(_, _, seed)) in keys.iter().enumerate() {
            for &method in &data_methods {
                jobs.push(Job {
                    n: mesh_idx,
                    data: Some(data_idx),
                    method,
                    seed,
                });
            }
        }
    }

    jobs.par_iter()
        .map(|job| {
            let projector = &projectors[job.n];
            let data = job.data.map(|i| (&datasets[i], keys[i]));
            run_job(spec, projector, data, job.method, job.seed).map_err(|e| {
                let (m, noise) = data.map(|(_, k)| (k.0, k.1)).unwrap_or((0, 0.0));
                e.context(format!(
                    "{} on n={} m={m} noise={noise} seed={}",
                    job.method,
                    spec.meshes[job.n],
                    job.seed
                ))
            })
        })
        .collect()
}

fn run_job(
    spec: &ExperimentSpec,
    projector: &EquilibriumProjector,
    data: Option<(&LocalDataSet, (usize, f64, u64))>,
    method: Method,
    seed: u64,
) -> Result<StudyRow> {
    let n = projector.mesh().resolution();
    let start = Instant::now();
    let (m, noise) = data.map(|(_, k)| (k.0, k.1)).unwrap_or((0, 0.0));
    let (objective, errors, iterations, gamma_final) = match (method, data) {
        (Method::Fem, _) => {
            let r = solve_newton(projector.mesh(), spec.law, projector.source(), &NewtonConfig::default())?;
            (f64::NAN, potential_errors(projector.mesh(), &r.u)?, r.iterations, f64::NAN)
        }
        (Method::Solver(alg), Some((d, _))) => {
            let mut config = SolverConfig::new(alg);
            if alg == Algorithm::Ps {
                if let Some(g) = spec.gamma0 {
                    config.gamma0 = g;
                }
            }
            if let Some(it) = spec.max_iter {
                config.max_iter = it;
            }
            let r = solve(projector, d, &config)?;
            let e = compute_errors(projector.mesh(), &r.state)?;
            (r.objective, e, r.iterations, r.final_gamma().unwrap_or(f64::NAN))
        }
        (Method::LocalSearch, Some((d, _))) => {
            let config = LocalSearchConfig {
                init: InitStrategy::PsMultistart { starts: 10, seed },
                k: LocalSearchConfig::default().k.min(d.len()),
                ..LocalSearchConfig::default()
            };
            let r = run_local_search(&QsapInstance::new(projector, d), &config)?;
            let e = compute_errors(projector.mesh(), &r.report.state)?;
            (r.report.objective, e, r.report.iterations, f64::NAN)
        }
        (_, None) => unreachable!("data-driven jobs always carry a data set"),
    };
    Ok(StudyRow {
        n,
        m,
        noise,
        algorithm: method.to_string(),
        objective,
        err_l2: errors.err_l2,
        err_h1: errors.err_h1,
        iterations,
        wall_ms: if spec.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            f64::NAN
        },
        seed,
        gamma_final,
    })
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn write_csv(out: &mut impl Write, rows: &[StudyRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            sci(r.noise),
            r.algorithm,
            sci(r.objective),
            sci(r.err_l2),
            sci(r.err_h1),
            r.iterations,
            sci(r.wall_ms),
            r.seed,
            sci(r.gamma_final)
        )?;
    }
    Ok(())
}

/// Parses a CSV written by [`write_csv`]; columns are located by header.
pub fn read_csv(text: &str, path: &std::path::Path) -> Result<Vec<StudyRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let format = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let (_, header) = lines.next().ok_or_else(|| format(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| format(1, format!("missing column '{name}'")))
    };
    let idx = [
        col("n")?,
        col("m")?,
        col("noise")?,
        col("algorithm")?,
        col("objective")?,
        col("err_l2")?,
        col("err_h1")?,
        col("iterations")?,
        col("wall_ms")?,
        col("seed")?,
        col("gamma_final")?,
    ];
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(format(i + 1, format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let bad = |name: &str, v: &str| format(i + 1, format!("invalid {name} '{v}'"));
        let num = |k: usize, name: &str| f[idx[k]].parse::<f64>().map_err(|_| bad(name, f[idx[k]]));
        let int = |k: usize, name: &str| f[idx[k]].parse::<usize>().map_err(|_| bad(name, f[idx[k]]));
        rows.push(StudyRow {
            n: int(0, "n")?,
            m: int(1, "m")?,
            noise: num(2, "noise")?,
            algorithm: f[idx[3]].to_string(),
            objective: num(4, "objective")?,
            err_l2: num(5, "err_l2")?,
            err_h1: num(6, "err_h1")?,
            iterations: int(7, "iterations")?,
            wall_ms: num(8, "wall_ms")?,
            seed: f[idx[9]].parse().map_err(|_| bad("seed", f[idx[9]]))?,
            gamma_final: num(10, "gamma_final")?,
        });
    }
    Ok(rows)
}

/// Convergence order between consecutive mesh sizes of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub algorithm: String,
    pub m: usize,
    pub noise: f64,
    pub seed: u64,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub eoc_l2: f64,
    pub eoc_h1: f64,
}

pub const EOC_HEADER: &str = "algorithm,m,noise,seed,n_coarse,n_fine,eoc_l2,eoc_h1";

/// Groups rows by (algorithm, m, noise, seed), sorts each group by `n` and
/// computes orders with `h = sqrt(2) / n`.
pub fn eoc_table(rows: &[StudyRow]) -> Result<Vec<EocRow>> {
    let mut groups: Vec<(String, usize, u64, u64, Vec<&StudyRow>)> = Vec::new();
    for r in rows {
        let key = (r.algorithm.clone(), r.m, r.noise.to_bits(), r.seed);
        match groups.iter_mut().find(|g| (g.0.clone(), g.1, g.2, g.3) == key) {
            Some(g) => g.4.push(r),
            None => groups.push((key.0, key.1, key.2, key.3, vec![r])),
        }
    }
    let h = |n: usize| std::f64::consts::SQRT_2 / n as f64;
    let mut out = Vec::new();
    for (algorithm, m, noise, seed, mut members) in groups {
        members.sort_by_key(|r| r.n);
        members.dedup_by_key(|r| r.n);
        for w in members.windows(2) {
            let (a, b) = (w[0], w[1]);
            out.push(EocRow {
                algorithm: algorithm.clone(),
                m,
                noise: f64::from_bits(noise),
                seed,
                n_coarse: a.n,
                n_fine: b.n,
                eoc_l2: compute_eoc(a.err_l2, h(a.n), b.err_l2, h(b.n))?,
                eoc_h1: compute_eoc(a.err_h1, h(a.n), b.err_h1, h(b.n))?,
            });
        }
    }
    Ok(out)
}

pub fn write_eoc_csv(out: &mut impl Write, rows: &[EocRow]) -> std::io::Result<()> {
    writeln!(out, "{EOC_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.m,
            sci(r.noise),
            r.seed,
            r.n_coarse,
            r.n_fine,
            sci(r.eoc_l2),
            sci(r.eoc_h1)
        )?;
    }
    Ok(())
}
