//! `osbm`: generate or ingest instances, solve the offline phase, simulate
//! online algorithms and run parameter sweeps.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors
//! (including unreadable input files).

use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use osbm::experiment::{run_experiment, ExperimentPlan, DEFAULT_B_VALUES};
use osbm::instance::{generate_synthetic, ingest_ratings, RatingsParams, Recipe, RecipeKind};
use osbm::io::{read_problem, read_solution, write_problem, write_solution};
use osbm::offline::{solve_offline, GreedyConfig, SolverKind, DEFAULT_GRAD_SAMPLES, DEFAULT_STEPS};
use osbm::online::{
    compute_benchmark, simulate, AlgorithmKind, AlgorithmOptions, BenchmarkKind, SimConfig, CSV_HEADER,
};
use osbm::{ObjectiveKind, Problem};

#[derive(Parser)]
#[command(
    name = "osbm",
    version,
    about = "Online submodular bipartite matching under known i.i.d. arrivals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Build a recommendation instance from a completed ratings file.
    Ingest(IngestArgs),
    /// Solve the offline phase and write x*.
    Offline(OfflineArgs),
    /// Simulate one algorithm on one configuration.
    Simulate(SimulateArgs),
    /// Sweep algorithms over b and eta values.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    kind: RecipeKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Rows `user,movie,rating[,observed]`.
    #[arg(long)]
    ratings: PathBuf,
    /// Rows `movie,genre`.
    #[arg(long)]
    genres: PathBuf,
    #[arg(long, default_value_t = 200)]
    users: usize,
    #[arg(long, default_value_t = 100)]
    movies: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Every user arrives at rate 1 with T = number of users.
    #[arg(long)]
    integral_rates: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Instance selection shared by the solving commands.
#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Expected objective kind; fails if the instance carries another.
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    /// Override every offline capacity.
    #[arg(long)]
    b: Option<u32>,
    /// Override the number of matches allowed per arrival.
    #[arg(long)]
    eta: Option<u32>,
}

#[derive(Args)]
struct SolverArgs {
    /// `cg` (continuous greedy) or `lp` (exact epigraph LP). Defaults to
    /// `lp` for experiments and `cg` elsewhere.
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long, default_value_t = DEFAULT_STEPS, value_parser = positive)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_GRAD_SAMPLES, value_parser = positive)]
    grad_samples: usize,
}

#[derive(Args)]
struct OfflineArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "lp")]
    benchmark: BenchmarkKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    algorithm: AlgorithmKind,
    /// Offline solution from `osbm offline`; solved on the fly when absent.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 1000, value_parser = positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "lp")]
    benchmark: BenchmarkKind,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    allow_fractional_cr: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    #[arg(long, value_delimiter = ',', default_values_t = AlgorithmKind::ALL)]
    algorithm: Vec<AlgorithmKind>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_B_VALUES, value_parser = clap::value_parser!(u32).range(1..))]
    b: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u32], value_parser = clap::value_parser!(u32).range(1..))]
    eta: Vec<u32>,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "lp")]
    benchmark: BenchmarkKind,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    allow_fractional_cr: bool,
    /// CSV report; the coverage histogram goes to `<out>.coverage.csv`.
    #[arg(long)]
    out: PathBuf,
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())).into())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load(args: &InstanceArgs) -> Result<Problem> {
    let mut p = load_problem(&args.instance, args.objective)?;
    if let Some(b) = args.b {
        if b == 0 {
            return Err(UsageError("--b must be positive".into()).into());
        }
        p.instance = p.instance.with_uniform_capacity(b);
    }
    if let Some(eta) = args.eta {
        if eta == 0 {
            return Err(UsageError("--eta must be positive".into()).into());
        }
        p.instance = p.instance.with_eta(eta);
    }
    Ok(p)
}

fn load_problem(path: &Path, expected: Option<ObjectiveKind>) -> Result<Problem> {
    let p = read_problem(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    p.instance
        .ensure_valid()
        .with_context(|| format!("instance {}", path.display()))?;
    if let Some(kind) = expected {
        if kind != p.objective.kind() {
            bail!(UsageError(format!(
                "{} carries a {} objective, not {kind}",
                path.display(),
                p.objective.kind()
            )));
        }
    }
    Ok(p)
}

fn summary(p: &Problem) -> String {
    let i = &p.instance;
    format!(
        "|U|={} |V|={} m={} T={} objective={}",
        i.num_offline(),
        i.num_online(),
        i.num_edges(),
        i.horizon(),
        p.objective.kind()
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let p = generate_synthetic(Recipe {
                kind: a.kind,
                seed: a.seed,
            })?;
            write(&a.out, &write_problem(&p))?;
            println!("{}", summary(&p));
        }
        Command::Ingest(a) => {
            let ratings = open(&a.ratings)?;
            let genres = open(&a.genres)?;
            let p = ingest_ratings(
                ratings,
                genres,
                RatingsParams {
                    num_users: a.users,
                    num_movies: a.movies,
                    seed: a.seed,
                    integral_rates: a.integral_rates,
                },
            )?;
            write(&a.out, &write_problem(&p))?;
            println!("{}", summary(&p));
        }
        Command::Offline(a) => {
            let p = load(&a.instance)?;
            let cfg = GreedyConfig {
                steps: a.solver.steps,
                grad_samples: a.solver.grad_samples,
                seed: a.seed,
            };
            let solver = a.solver.solver.unwrap_or_default();
            let sol = solve_offline(&p.objective, &p.instance, solver, &cfg)?;
            write(&a.out, &write_solution(&p.instance, &sol))?;
            let label = match solver {
                SolverKind::Lp => "LP value",
                SolverKind::ContinuousGreedy => "F(x*)",
            };
            println!("{label} = {}", sol.value);
            match compute_benchmark(a.benchmark, &p.instance, &p.objective, Some(&sol.x), a.seed) {
                Ok(b) => println!("benchmark {} = {}", b.kind, b.value),
                Err(e) => println!("benchmark {} unavailable: {e}", a.benchmark),
            }
        }
        Command::Simulate(a) => {
            let p = load(&a.instance)?;
            let x_star = if !a.algorithm.needs_x_star() && a.benchmark != BenchmarkKind::FStarScaled {
                None
            } else if let Some(path) = &a.solution {
                Some(
                    read_solution(open(path)?, &p.instance)
                        .with_context(|| format!("reading {}", path.display()))?
                        .x,
                )
            } else {
                let cfg = GreedyConfig {
                    steps: a.solver.steps,
                    grad_samples: a.solver.grad_samples,
                    seed: a.seed,
                };
                Some(solve_offline(&p.objective, &p.instance, a.solver.solver.unwrap_or_default(), &cfg)?.x)
            };
            let bench = compute_benchmark(a.benchmark, &p.instance, &p.objective, x_star.as_deref(), a.seed)?;
            let cfg = SimConfig {
                algorithm: a.algorithm,
                trials: a.trials,
                seed: a.seed,
                workers: a.workers,
                options: AlgorithmOptions {
                    allow_fractional_cr: a.allow_fractional_cr,
                },
            };
            let m = simulate(&cfg, &p.instance, &p.objective, x_star.as_deref(), bench)?;
            let csv = format!("{CSV_HEADER}\n{}\n", m.csv_row());
            match &a.out {
                Some(path) => write(path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Experiment(a) => {
            let p = load_problem(&a.instance, a.objective)?;
            let plan = ExperimentPlan {
                algorithms: a.algorithm,
                b_values: a.b,
                etas: a.eta,
                trials: a.trials,
                seed: a.seed,
                benchmark: a.benchmark,
                workers: a.workers,
                solver: a.solver.solver.unwrap_or(SolverKind::Lp),
                greedy: GreedyConfig {
                    steps: a.solver.steps,
                    grad_samples: a.solver.grad_samples,
                    seed: a.seed,
                },
                options: AlgorithmOptions {
                    allow_fractional_cr: a.allow_fractional_cr,
                },
            };
            plan.validate().map_err(|e| UsageError(e.to_string()))?;
            let report = run_experiment(&plan, &p)?;
            write(&a.out, &report.to_csv())?;
            if let Some(hist) = report.histogram_csv() {
                let mut path = a.out.clone().into_os_string();
                path.push(".coverage.csv");
                write(Path::new(&path), &hist)?;
            }
            let failed = report.cells.len() - report.metrics().count();
            println!("{} cells, {failed} failed -> {}", report.cells.len(), a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
