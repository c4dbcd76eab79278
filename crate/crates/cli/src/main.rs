//! `mpc`: command-line front end for the mixed packing/covering solvers.
//!
//! Exit codes: 0 for success or a feasible answer, 2 for an infeasible
//! answer, 1 for any error (including bad flags).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mixpack::instance::{generate_random_feasible, generate_random_tiny, parse_instance, MixedInstance};
use mixpack::mcf::{generate_planted_network, solve_mcf_with_budget, FlowNetwork};
use mixpack::optimizer::optimize;
use mixpack::solvers::{
    original_ratios, solve, verify_point, Algorithm, Selector, SolutionFile, SolveConfig, Status, TraceMode,
    PACKING_FACTOR,
};
use mixpack::tomography::{build_tomo_instance, solve_nonneg_system_with, write_pgm, NonnegOptions, Phantom};
use mixpack::{InstanceError, SolveError};

#[derive(Parser)]
#[command(name = "mpc", version, about = "Approximate solver for mixed packing and covering linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find x >= 0 with Px <= (1+O(eps))p and Cx >= c, or report infeasibility.
    Solve(SolveArgs),
    /// Approximate lambda* = min max_i (Px)_i / p_i subject to Cx >= c.
    Optimize(SolveArgs),
    /// Min-cost concurrent multicommodity flow.
    Flow(FlowArgs),
    /// Reconstruct a density grid from strip projections.
    Tomo(TomoArgs),
    /// Generate an instance, network or phantom.
    Gen(GenArgs),
    /// Check a solution file against an instance.
    Check(CheckArgs),
    /// Sweep (m, eps) on random feasible instances and write a CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Generic,
    Phased,
    Parallel,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Generic => Algorithm::Generic,
            AlgorithmArg::Phased => Algorithm::Phased,
            AlgorithmArg::Parallel => Algorithm::Parallel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    MinRatio,
    MinDifference,
    First,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::MinRatio => Selector::MinRatio,
            SelectorArg::MinDifference => Selector::MinDifference,
            SelectorArg::First => Selector::FirstEligible,
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "phased")]
    algorithm: AlgorithmArg,
    /// Variable choice of the generic solver.
    #[arg(long, value_enum, default_value = "min-ratio")]
    selector: SelectorArg,
    #[arg(long, default_value_t = 1_000_000_000)]
    max_increments: u64,
    /// Worker threads of the parallel solver.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SolverFlags {
    fn config(&self) -> Result<SolveConfig> {
        let mut c = SolveConfig::new(self.epsilon, self.algorithm.into()).with_selector(self.selector.into());
        c.max_increments = self.max_increments;
        c.lanes = self.threads;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Per-increment potential trace as CSV (solve only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Augmentation budget.
    #[arg(long, default_value_t = 1_000_000_000)]
    max_increments: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Random,
    Discs,
}

#[derive(Args)]
struct TomoArgs {
    /// Phantom as a JSON array of rows; generated when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    size: usize,
    #[arg(long, value_enum, default_value = "discs")]
    shape: Shape,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Projection angles in degrees.
    #[arg(long, value_delimiter = ',', default_value = "0,45,90,135")]
    angles: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1_000_000_000)]
    max_increments: u64,
    /// Reconstruction as a PGM image.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Convergence history as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Random instance with a planted feasible point.
    Mixed,
    /// Small integer instance, feasible or not.
    Tiny,
    Flow,
    Phantom,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "mixed")]
    kind: Kind,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    vars: usize,
    #[arg(long, default_value_t = 10)]
    packing: usize,
    #[arg(long, default_value_t = 10)]
    covering: usize,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 4)]
    max_coeff: u32,
    #[arg(long, default_value_t = 6)]
    max_rhs: u32,
    #[arg(long, default_value_t = 6)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    extra_edges: usize,
    #[arg(long, default_value_t = 2)]
    commodities: usize,
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Also write the planted point as a solution file (mixed only).
    #[arg(long)]
    planted: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    /// Constraint counts m; each instance has m/2 packing and m/2 covering rows.
    #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    epsilons: Vec<f64>,
    #[arg(long, value_enum, default_value = "phased")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Answer of a successful command.
enum Answer {
    Done,
    Infeasible,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

fn load_instance(path: &Path) -> Result<MixedInstance> {
    parse_instance(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn answer(status: Status) -> Answer {
    match status {
        Status::Feasible => Answer::Done,
        Status::Infeasible => Answer::Infeasible,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<Answer> {
    let inst = load_instance(&a.input)?;
    let mut config = a.solver.config()?;
    if a.trace.is_some() {
        config.trace = TraceMode::Full;
    }
    let out = solve(&inst, &config)?;
    log::info!(
        "{:?}: {:?} after {} increments in {} phases ({:.3}s)",
        config.algorithm,
        out.status,
        out.stats.increments,
        out.stats.phases,
        out.stats.wall_time_secs
    );
    if let (Some(path), Some(trace)) = (&a.trace, &out.trace) {
        let mut w = create(path)?;
        trace.write_csv(&mut w)?;
        w.flush()?;
    }
    emit(a.output.as_deref(), &out.to_json())?;
    Ok(answer(out.status))
}

fn cmd_optimize(a: &SolveArgs) -> Result<Answer> {
    let inst = load_instance(&a.input)?;
    let config = a.solver.config()?;
    match optimize(&inst, config.epsilon, &config) {
        Ok(out) => {
            log::info!("lambda = {} after {} subproblems", out.lambda, out.subproblem_log.len());
            emit(a.output.as_deref(), &out.to_json())?;
            Ok(Answer::Done)
        }
        Err(SolveError::Instance(InstanceError::TriviallyInfeasible { row })) => {
            let text = json!({ "status": "infeasible", "covering_row": row });
            emit(a.output.as_deref(), &serde_json::to_string_pretty(&text)?)?;
            Ok(Answer::Infeasible)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_flow(a: &FlowArgs) -> Result<Answer> {
    let net = FlowNetwork::from_json(&read(&a.input)?)?;
    let out = solve_mcf_with_budget(&net, a.epsilon, a.max_increments)?;
    log::info!(
        "{:?}: {} augmentations, {} shortest-path calls",
        out.status,
        out.stats.augmentations,
        out.stats.shortest_path_calls
    );
    emit(a.output.as_deref(), &out.to_json())?;
    Ok(answer(out.status))
}

fn cmd_tomo(a: &TomoArgs) -> Result<Answer> {
    let phantom = match &a.input {
        Some(p) => Phantom::from_json(&read(p)?)?,
        None => match a.shape {
            Shape::Random => Phantom::random(a.size, a.seed),
            Shape::Discs => Phantom::discs(a.size),
        },
    };
    let tomo = build_tomo_instance(&phantom, &a.angles)?;
    let opts = NonnegOptions { epsilon: a.epsilon, max_increments: a.max_increments, history: a.trace.is_some() };
    let out = solve_nonneg_system_with(&tomo.a, &opts)?;
    let grid = tomo.to_grid(&out.x);
    let n = phantom.size();
    let max_error = tomo
        .cells
        .iter()
        .map(|&c| (grid[c] - phantom.density()[c]).abs())
        .fold(0.0, f64::max);
    if let Some(path) = &a.image {
        let mut w = create(path)?;
        write_pgm(&mut w, &grid, n)?;
        w.flush()?;
    }
    if let Some(path) = &a.trace {
        let mut w = create(path)?;
        writeln!(w, "increment,phase,min_row,max_row")?;
        for p in &out.history {
            writeln!(w, "{},{},{},{}", p.increment, p.phase, p.min_row, p.max_row)?;
        }
        w.flush()?;
    }
    let rows: Vec<&[f64]> = grid.chunks(n).collect();
    let text = json!({
        "status": if out.feasible { "feasible" } else { "infeasible" },
        "grid": rows,
        "seed": a.seed,
        "rows": tomo.a.rows(),
        "removed_rows": tomo.removed_rows,
        "removed_cells": tomo.removed_cells,
        "increments": out.increments,
        "phases": out.phases,
        "max_abs_error": max_error,
    });
    emit(a.output.as_deref(), &serde_json::to_string_pretty(&text)?)?;
    Ok(if out.feasible { Answer::Done } else { Answer::Infeasible })
}

fn cmd_gen(a: &GenArgs) -> Result<Answer> {
    log::info!("generator seed {}", a.seed);
    let text = match a.kind {
        Kind::Mixed => {
            let planted = generate_random_feasible(a.vars, a.packing, a.covering, a.density, a.seed)?;
            if let Some(path) = &a.planted {
                let file = SolutionFile { status: Status::Feasible, x: planted.planted.clone(), stats: None };
                emit(Some(path), &serde_json::to_string_pretty(&file)?)?;
            }
            planted.instance.to_json()
        }
        Kind::Tiny => generate_random_tiny(a.vars, a.packing, a.covering, a.max_coeff, a.max_rhs, a.seed)?.to_json(),
        Kind::Flow => generate_planted_network(a.nodes, a.extra_edges, a.commodities, a.seed)?.to_json(),
        Kind::Phantom => Phantom::random(a.size, a.seed).to_json(),
    };
    if a.planted.is_some() && !matches!(a.kind, Kind::Mixed) {
        bail!("--planted only applies to --kind mixed");
    }
    emit(a.output.as_deref(), &text)?;
    Ok(Answer::Done)
}

fn cmd_check(a: &CheckArgs) -> Result<Answer> {
    let inst = load_instance(&a.input)?;
    let sol: SolutionFile = serde_json::from_slice(&read(&a.solution)?)
        .with_context(|| format!("parsing {}", a.solution.display()))?;
    if sol.status == Status::Infeasible {
        emit(a.output.as_deref(), &serde_json::to_string_pretty(&json!({ "status": "infeasible" }))?)?;
        return Ok(Answer::Infeasible);
    }
    let verdict = verify_point(&inst, &sol.x, a.epsilon);
    let limit = 1.0 + PACKING_FACTOR * a.epsilon;
    let (max_p, min_c) = if sol.x.len() == inst.num_vars() { original_ratios(&inst, &sol.x) } else { (f64::NAN, f64::NAN) };
    let report = json!({
        "ok": verdict.is_ok(),
        "max_packing_ratio": max_p,
        "packing_limit": limit,
        "packing_slack": limit - max_p,
        "min_covering_ratio": min_c,
        "covering_slack": min_c - 1.0,
    });
    emit(a.output.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    verdict?;
    Ok(Answer::Done)
}

fn cmd_bench(a: &BenchArgs) -> Result<Answer> {
    let mut csv = String::from(
        "algorithm,m,n,epsilon,seed,status,increments,phases,max_in_phase,increment_bound,column_degree,wall_time_secs\n",
    );
    let alg: Algorithm = a.algorithm.into();
    for &m in &a.sizes {
        if m < 2 {
            bail!("bench sizes must be at least 2, got {m}");
        }
        let n = (m / 2).max(1);
        for &eps in &a.epsilons {
            for r in 0..a.repeats {
                let seed = a.seed.wrapping_add(r);
                let planted = generate_random_feasible(n, m / 2, m - m / 2, a.density, seed)?;
                let mut config = SolveConfig::new(eps, alg);
                config.lanes = a.threads;
                let t = Instant::now();
                let out = solve(&planted.instance, &config)?;
                let s = &out.stats;
                csv.push_str(&format!(
                    "{},{m},{n},{eps},{seed},{},{},{},{},{},{},{:.6}\n",
                    serde_json::to_value(alg)?.as_str().unwrap_or_default(),
                    serde_json::to_value(out.status)?.as_str().unwrap_or_default(),
                    s.increments,
                    s.phases,
                    s.max_increments_in_phase,
                    s.increment_bound,
                    s.column_degree,
                    t.elapsed().as_secs_f64()
                ));
            }
        }
    }
    emit(a.output.as_deref(), csv.trim_end())?;
    Ok(Answer::Done)
}

fn run(cli: &Cli) -> Result<Answer> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Tomo(a) => cmd_tomo(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MPC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(Answer::Done) => ExitCode::SUCCESS,
        Ok(Answer::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
