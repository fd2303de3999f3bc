use std::error::Error as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use ddfem::equilibrium::{EquilibriumProjector, Source};
use ddfem::harness::config::{self, get, ConfigMap};
use ddfem::harness::study::write_eoc_csv;
use ddfem::harness::{build_dataset, compute_errors, eoc_table, read_csv, run_experiment, write_csv, ExperimentSpec};
use ddfem::law::Law;
use ddfem::material::{LocalDataSet, Sampling};
use ddfem::mesh::Mesh;
use ddfem::qsap::local_search::save_assignment;
use ddfem::qsap::{run_local_search, InitStrategy, LocalSearchConfig, PodConfig, QsapInstance};
use ddfem::solvers::{solve, Algorithm, InitialPoint, SolveReport, SolverConfig};
use ddfem::{Error, Result};

#[derive(Parser)]
#[command(name = "ddfem", version, about = "Data-driven finite elements for scalar conductivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a material data set and write it to a file.
    GenerateData(GenerateArgs),
    /// Solve one data-driven problem.
    Solve(SolveArgs),
    /// Run a parameter study and write CSV.
    Study(StudyArgs),
    /// Convergence orders from a study CSV.
    Eoc(EocArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "arctan")]
    law: Law,
    /// Number of points (a perfect square for grid sampling).
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "uniform")]
    sampling: Sampling,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh resolution N (2 N^2 triangles).
    #[arg(long)]
    n: Option<usize>,
    /// Material law of the manufactured problem (and of generated data).
    #[arg(long)]
    law: Option<Law>,
    /// Data set file; without it a set is generated from --m, --sampling,
    /// --noise and --seed.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sampling: Option<Sampling>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// pg, ps, dr1, dr2 or local-search.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Start the solvers from a random field with this seed instead of zero.
    #[arg(long)]
    init_seed: Option<u64>,
    /// Local search initialization: ps-multistart, coarse-exact or file.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_file: Option<PathBuf>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    eps3: Option<f64>,
    /// Maximal POD basis size.
    #[arg(long)]
    pod_cap: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Per-iteration CSV (iteration, objective, gamma, wall_ms).
    #[arg(long)]
    history: Option<PathBuf>,
    /// Write the final assignment, one data index per line.
    #[arg(long)]
    assignment_out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    law: Option<String>,
    /// Comma-separated mesh resolutions.
    #[arg(long)]
    meshes: Option<String>,
    /// Comma-separated data sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated noise bounds.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated list of pg, ps, dr1, dr2, local-search, fem.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    gamma0: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Write NaN instead of wall-clock times, for reproducible output.
    #[arg(long)]
    no_timing: bool,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EocArgs {
    /// CSV written by `study`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateData(a) => generate(a),
        Command::Solve(a) => run_solve(a),
        Command::Study(a) => run_study(a),
        Command::Eoc(a) => run_eoc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprint!(": {s}");
                source = s.source();
            }
            eprintln!();
            ExitCode::FAILURE
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let data = build_dataset(a.law, a.sampling, a.m, a.noise, a.seed)?;
    data.save(&a.out)?;
    println!("wrote {} points to {}", data.len(), a.out.display());
    Ok(())
}

/// Command-line value, else the configuration file, else `default`.
fn pick<T: FromStr>(cli: Option<T>, map: &ConfigMap, key: &str, default: T) -> Result<T> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(get(map, key)?.unwrap_or(default)),
    }
}

fn pick_opt<T: FromStr>(cli: Option<T>, map: &ConfigMap, key: &str) -> Result<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => get(map, key),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run_solve(a: SolveArgs) -> Result<()> {
    let map = match &a.config {
        Some(p) => config::load_config(p)?,
        None => ConfigMap::new(),
    };
    let n = pick(a.n, &map, "n", 20)?;
    let data_path = pick_opt(a.data, &map, "data")?;
    let data = match &data_path {
        Some(p) => LocalDataSet::load(p)?,
        None => {
            let law = pick(a.law, &map, "law", Law::Arctan)?;
            let sampling = pick(a.sampling, &map, "sampling", Sampling::Grid)?;
            let m = pick(a.m, &map, "m", 11025)?;
            let noise = pick(a.noise, &map, "noise", 0.0)?;
            let seed = pick(a.seed, &map, "seed", 0)?;
            build_dataset(law, sampling, m, noise, seed)?
        }
    };
    let law = match pick_opt(a.law, &map, "law")? {
        Some(l) => l,
        None => data.metadata().law.ok_or_else(|| {
            Error::InvalidArgument("the data file names no law; pass --law to choose the source".into())
        })?,
    };
    let projector = EquilibriumProjector::new(Mesh::new(n)?, &Source::Manufactured(law))?;
    let algorithm = pick(a.algorithm, &map, "algorithm", "pg".to_string())?;

    let report = if matches!(algorithm.as_str(), "local-search" | "local_search" | "ls") {
        let init_name = pick(a.init, &map, "init", "ps-multistart".to_string())?;
        let seed = pick(a.init_seed, &map, "init_seed", 0)?;
        let init = match init_name.as_str() {
            "file" => InitStrategy::File(pick_opt(a.init_file, &map, "init_file")?.ok_or_else(|| {
                Error::InvalidArgument("--init file needs --init-file".into())
            })?),
            "ps-multistart" => InitStrategy::PsMultistart { starts: 10, seed },
            other => other.parse()?,
        };
        let defaults = LocalSearchConfig::default();
        let config = LocalSearchConfig {
            eps1: pick(a.eps1, &map, "eps1", defaults.eps1)?,
            eps2: pick(a.eps2, &map, "eps2", defaults.eps2)?,
            eps3: pick(a.eps3, &map, "eps3", defaults.eps3)?,
            k: pick(a.k, &map, "k", defaults.k.min(data.len()))?,
            max_sweeps: pick(a.max_sweeps, &map, "max_sweeps", defaults.max_sweeps)?,
            pod: PodConfig {
                basis_cap: pick(a.pod_cap, &map, "pod_cap", defaults.pod.basis_cap)?,
                ..defaults.pod
            },
            init,
        };
        let r = run_local_search(&QsapInstance::new(&projector, &data), &config)?;
        println!("initial_objective={:.9e}", r.initial_objective);
        println!("accepted_moves={}", r.moves());
        println!("exact_solves={}", r.exact_solves);
        println!("basis_size={}", r.final_basis_size);
        r.report
    } else {
        let alg: Algorithm = algorithm.parse()?;
        let mut config = SolverConfig::new(alg);
        if let Some(g) = pick_opt(a.gamma0, &map, "gamma0")? {
            config.gamma0 = g;
        }
        if let Some(it) = pick_opt(a.max_iter, &map, "max_iter")? {
            config.max_iter = it;
        }
        if let Some(seed) = pick_opt(a.init_seed, &map, "init_seed")? {
            config.init = InitialPoint::RandomBox { seed };
        }
        solve(&projector, &data, &config)?
    };
    print_report(&projector, &report)?;

    if let Some(path) = pick_opt(a.history, &map, "history")? {
        write_history(&path, &report)?;
    }
    if let Some(path) = pick_opt(a.assignment_out, &map, "assignment_out")? {
        save_assignment(&path, &report.assignment)?;
    }
    Ok(())
}

fn print_report(projector: &EquilibriumProjector, r: &SolveReport) -> Result<()> {
    let e = compute_errors(projector.mesh(), &r.state)?;
    println!("algorithm={}", r.algorithm);
    println!("objective={:.9e}", r.objective);
    println!("err_l2={:.9e}", e.err_l2);
    println!("err_h1={:.9e}", e.err_h1);
    println!("iterations={}", r.iterations);
    println!("termination={}", r.termination.name());
    if let Some(g) = r.final_gamma().filter(|g| !g.is_nan()) {
        println!("gamma_final={g}");
    }
    println!("wall_ms={:.3}", r.wall_time.as_secs_f64() * 1e3);
    Ok(())
}

fn write_history(path: &Path, r: &SolveReport) -> Result<()> {
    let mut out = output(Some(path))?;
    let mut body = String::from("iteration,objective,gamma,wall_ms\n");
    for (i, f) in r.history.iter().enumerate() {
        body.push_str(&format!(
            "{},{:.9e},{:.9e},{:.9e}\n",
            i + 1,
            f,
            r.gamma.get(i).copied().unwrap_or(f64::NAN),
            r.elapsed_ms.get(i).copied().unwrap_or(f64::NAN)
        ));
    }
    out.write_all(body.as_bytes()).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

fn run_study(a: StudyArgs) -> Result<()> {
    let mut map = match &a.config {
        Some(p) => config::load_config(p)?,
        None => ConfigMap::new(),
    };
    let flags = [
        ("law", a.law),
        ("meshes", a.meshes),
        ("sizes", a.sizes),
        ("noise", a.noise),
        ("algorithms", a.algorithms),
        ("seeds", a.seeds),
        ("sampling", a.sampling),
        ("gamma0", a.gamma0),
        ("max_iter", a.max_iter),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config::set(&mut map, key, v);
        }
    }
    if a.no_timing {
        config::set(&mut map, "timing", false);
    }
    if let Some(out) = &a.out {
        config::set(&mut map, "output", out.display());
    }
    let spec = ExperimentSpec::from_config(&map)?;
    let rows = run_experiment(&spec)?;
    let path = spec.output.as_deref();
    let mut out = output(path)?;
    let stdout = PathBuf::from("<stdout>");
    let p = path.unwrap_or(&stdout);
    write_csv(&mut out, &rows).map_err(|e| io_error(p, e))?;
    out.flush().map_err(|e| io_error(p, e))
}

fn run_eoc(a: EocArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).map_err(|e| io_error(&a.input, e))?;
    let rows = read_csv(&text, &a.input)?;
    let table = eoc_table(&rows)?;
    let mut out = output(a.out.as_deref())?;
    let stdout = PathBuf::from("<stdout>");
    let p = a.out.as_deref().unwrap_or(&stdout);
    write_eoc_csv(&mut out, &table).map_err(|e| io_error(p, e))?;
    out.flush().map_err(|e| io_error(p, e))
}
