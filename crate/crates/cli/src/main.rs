use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use graphqubo::builders::{
    build_bisection_ising, build_ch_qubo, build_clique_kfixed_qubo, build_kway_qubo,
    build_mis_qubo, CliqueWeights, MIS_LINEAR, MIS_PENALTY,
};
use graphqubo::chimera::{
    chimera_graph, clique_embedding, contract_random_edges, degrade, ChimeraSpec,
};
use graphqubo::experiments::{run_experiment, Experiment, ExperimentConfig};
use graphqubo::graph::random_graph;
use graphqubo::io::{self, GraphFormat};
use graphqubo::maxclique::{
    exact_clique, greedy_clique, sa_clique, split_solve, CliqueResult, DEFAULT_SPLIT_LIMIT,
};
use graphqubo::partition::{ch_cost, edge_cut, multilevel_partition, refine_ch_sa, Partition};
use graphqubo::solvers::{
    anneal_flip, anneal_swap_ising, brute_force_eliminating, default_t0, tabu_decompose,
    AnnealSchedule, SampleSet, SubSolver, TabuParams,
};
use graphqubo::{Error, Graph, QuboModel, Result};

#[derive(Parser, Debug)]
#[command(
    name = "graphqubo",
    version,
    about = "QUBO encodings and classical solvers for clique and partitioning problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
struct Common {
    /// Random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solution attempts: tabu subproblem solves or independent anneals.
    #[arg(long, global = true)]
    reads: Option<u64>,
    /// Stop once this energy is reached.
    #[arg(long, global = true)]
    target: Option<f64>,
    /// Stop after this many seconds.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    /// Variables per tabu subproblem.
    #[arg(long, global = true)]
    subproblem_size: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a graph file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Encode a graph problem as a QUBO file.
    Build {
        problem: Problem,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        /// Part count (k-way, core-halo).
        #[arg(long, default_value_t = 2)]
        parts: usize,
        /// Target clique size (clique-k).
        #[arg(long)]
        size: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve a QUBO file or a graph problem; prints JSON.
    Solve {
        #[command(subcommand)]
        target: SolveTarget,
    },
    /// Run a named experiment and write CSV/JSON reports.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Debug)]
enum GenerateKind {
    /// Erdős-Rényi G(n, p).
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Chimera graph, optionally with missing qubits or contracted edges.
    Chimera {
        #[arg(long, default_value_t = 12)]
        rows: usize,
        #[arg(long, default_value_t = 12)]
        cols: usize,
        #[arg(long, default_value_t = 4)]
        shore: usize,
        /// Random qubits to remove.
        #[arg(long, default_value_t = 0)]
        remove: usize,
        /// Random edges to contract.
        #[arg(long, default_value_t = 0)]
        contract: usize,
        /// Also write an embedding: the contraction chains with --contract,
        /// otherwise the clique embedding of the chimera.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Edgelist,
    Dimacs,
}

impl From<FormatArg> for GraphFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Edgelist => GraphFormat::EdgeList,
            FormatArg::Dimacs => GraphFormat::Dimacs,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Problem {
    /// Maximum independent set.
    Mis,
    /// Maximum clique, as independent set of the complement.
    Clique,
    /// Clique of a fixed size.
    CliqueK,
    /// Balanced two-way edge cut (Ising model written in QUBO form).
    Bisection,
    /// Balanced k-way edge cut.
    Kway,
    /// Core-halo partitioning.
    CoreHalo,
}

#[derive(Subcommand, Debug)]
enum SolveTarget {
    /// Minimize a QUBO file.
    Qubo {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = QuboSolver::Tabu)]
        solver: QuboSolver,
        /// Annealing steps per read.
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
    },
    /// Maximum clique of a graph file.
    Clique {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = CliqueMethod::Exact)]
        method: CliqueMethod,
        #[arg(long, default_value_t = 0.9996)]
        alpha: f64,
        /// Largest subproblem handed to the exact solver (split).
        #[arg(long, default_value_t = DEFAULT_SPLIT_LIMIT)]
        size_limit: usize,
    },
    /// Partition a graph file.
    Partition {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Edgelist)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = PartitionMethod::Multilevel)]
        method: PartitionMethod,
        #[arg(long, default_value_t = 2)]
        parts: usize,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        /// Also write the partition, one `v part` line per vertex.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QuboSolver {
    Exact,
    Tabu,
    Anneal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliqueMethod {
    Exact,
    Greedy,
    Sa,
    Split,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartitionMethod {
    /// Multilevel balanced edge cut.
    Multilevel,
    /// Swap annealing on the bisection Ising model (two parts, even n).
    Anneal,
    /// Multilevel start refined for core-halo cost.
    CoreHalo,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment name; optional when --config names one.
    name: Option<String>,
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Number of seeds, starting at --seed.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long)]
    t_max: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    chain_strength: Vec<f64>,
    #[arg(long)]
    size_limit: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    contractions: Vec<usize>,
    #[arg(long)]
    parts: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for unreadable or malformed input files and write failures, 1 otherwise.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(t) = common.timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("timeout must be positive, got {t}")));
        }
    }
    match cli.command {
        Command::Generate { kind } => generate(kind, common),
        Command::Build {
            problem,
            graph,
            format,
            parts,
            size,
            output,
        } => {
            let g = io::load_graph(&graph, format.into())?;
            let q = build(problem, &g, parts, size)?;
            info!(
                "{} variables, {} couplers",
                q.num_vars(),
                q.quadratic().len()
            );
            io::write_qubo_file(&q, &output)
        }
        Command::Solve { target } => emit(&solve(target, common)?),
        Command::Experiment(args) => experiment(args, common),
    }
}

fn generate(kind: GenerateKind, common: &Common) -> Result<()> {
    match kind {
        GenerateKind::Random {
            n,
            p,
            format,
            output,
        } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "edge probability {p} outside [0, 1]"
                )));
            }
            io::save_graph(&random_graph(n, p, common.seed)?, &output, format.into())
        }
        GenerateKind::Chimera {
            rows,
            cols,
            shore,
            remove,
            contract,
            embedding,
            format,
            output,
        } => {
            let spec =
                ChimeraSpec::new(rows, cols, shore).map_err(|e| Error::Config(e.to_string()))?;
            let spec = degrade(&spec, remove, common.seed)?;
            let (g, e) = if contract > 0 {
                let (g, e) = contract_random_edges(&spec, contract, common.seed)?;
                (g, Some(e))
            } else {
                let e = embedding
                    .is_some()
                    .then(|| clique_embedding(&spec))
                    .transpose()?;
                (chimera_graph(&spec), e)
            };
            info!("{} vertices, {} edges", g.num_vertices(), g.num_edges());
            if let (Some(path), Some(e)) = (&embedding, &e) {
                io::save_embedding(e, path)?;
            }
            io::save_graph(&g, &output, format.into())
        }
    }
}

fn build(problem: Problem, g: &Graph, parts: usize, size: Option<usize>) -> Result<QuboModel> {
    Ok(match problem {
        Problem::Mis => build_mis_qubo(g, MIS_LINEAR, MIS_PENALTY)?,
        Problem::Clique => build_mis_qubo(&g.complement(), MIS_LINEAR, MIS_PENALTY)?,
        Problem::CliqueK => {
            let k = size.ok_or_else(|| Error::Config("clique-k needs --size".into()))?;
            let w = CliqueWeights::for_size(k, 1.0);
            build_clique_kfixed_qubo(g, k, w.a, w.b)?
        }
        Problem::Bisection => build_bisection_ising(g)?.to_qubo(),
        Problem::Kway => build_kway_qubo(g, parts)?.0,
        Problem::CoreHalo => build_ch_qubo(g, parts)?.0,
    })
}

fn samples_json(set: &SampleSet) -> Result<Value> {
    let best = set.best();
    let x: Vec<i8> = best.assignment.values().to_vec();
    Ok(json!({
        "energy": best.energy,
        "assignment": x,
        "stats": serde_json::to_value(&set.stats)?,
    }))
}

fn clique_json(r: &CliqueResult) -> Value {
    json!({
        "size": r.size(),
        "vertices": r.vertices(),
        "solver_calls": r.stats.solver_calls,
        "branch_nodes": r.stats.branch_nodes,
    })
}

fn solve(target: SolveTarget, common: &Common) -> Result<Value> {
    match target {
        SolveTarget::Qubo {
            model,
            solver,
            steps,
        } => {
            let q = io::load_qubo_file(&model)?;
            let set = match solver {
                QuboSolver::Exact => brute_force_eliminating(&q)?,
                QuboSolver::Tabu => {
                    let params = TabuParams {
                        subproblem_size: common.subproblem_size.unwrap_or(20),
                        attempts: common.reads.unwrap_or(1000),
                        target: common.target,
                        timeout: common.timeout.map(Duration::from_secs_f64),
                        seed: common.seed,
                    };
                    tabu_decompose(&q, &params, &SubSolver::BruteForce)?
                }
                QuboSolver::Anneal => {
                    let t0 = default_t0(&q);
                    let schedule = AnnealSchedule::geometric(
                        steps,
                        t0,
                        1e-3f64.powf(1.0 / steps.max(2) as f64),
                    )?;
                    let mut all = SampleSet::default();
                    for r in 0..common.reads.unwrap_or(1).max(1) {
                        all.merge(anneal_flip(&q, &schedule, common.seed.wrapping_add(r))?);
                    }
                    all
                }
            };
            samples_json(&set)
        }
        SolveTarget::Clique {
            graph,
            format,
            method,
            alpha,
            size_limit,
        } => {
            let g = io::load_graph(&graph, format.into())?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config(format!(
                    "cooling factor {alpha} outside (0, 1)"
                )));
            }
            let r = match method {
                CliqueMethod::Exact => exact_clique(&g)?,
                CliqueMethod::Greedy => greedy_clique(&g, common.seed)?,
                CliqueMethod::Sa => sa_clique(&g, alpha, common.seed)?,
                CliqueMethod::Split => split_solve(&g, size_limit, exact_clique)?,
            };
            Ok(clique_json(&r))
        }
        SolveTarget::Partition {
            graph,
            format,
            method,
            parts,
            steps,
            output,
        } => {
            let g = io::load_graph(&graph, format.into())?;
            let p = partition(&g, method, parts, steps, common.seed)?;
            if let Some(path) = output {
                write_partition(&p, &path)?;
            }
            let ch = ch_cost(&g, &p);
            Ok(json!({
                "parts": p.parts(),
                "sizes": p.sizes(),
                "balanced": p.is_balanced(),
                "edge_cut": edge_cut(&g, &p),
                "ch_cost": ch.total,
            }))
        }
    }
}

fn partition(
    g: &Graph,
    method: PartitionMethod,
    parts: usize,
    steps: u64,
    seed: u64,
) -> Result<Partition> {
    match method {
        PartitionMethod::Multilevel => multilevel_partition(g, parts, seed),
        PartitionMethod::Anneal => {
            if parts != 2 {
                return Err(Error::Config(
                    "swap annealing bisects; use --parts 2".into(),
                ));
            }
            let set = anneal_swap_ising(&build_bisection_ising(g)?, steps, seed)?;
            Ok(graphqubo::builders::decode_bisection(
                &set.best().assignment,
            ))
        }
        PartitionMethod::CoreHalo => {
            let p0 = multilevel_partition(g, parts, seed)?;
            let t0 = g.num_vertices().max(1) as f64;
            let schedule =
                AnnealSchedule::geometric(steps, t0, 1e-3f64.powf(1.0 / steps.max(2) as f64))?;
            refine_ch_sa(g, &p0, &schedule, seed)
        }
    }
}

fn write_partition(p: &Partition, path: &Path) -> Result<()> {
    io::write_text(path, &io::format_partition(p))
}

/// Prints pretty JSON; a closed stdout (e.g. piped into `head`) is not an error.
fn emit(v: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

/// Non-empty flag lists replace the config's.
fn set_list<T>(dst: &mut Vec<T>, src: Vec<T>) {
    if !src.is_empty() {
        *dst = src;
    }
}

fn experiment(args: ExperimentArgs, common: &Common) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json(&io::read_text(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = args.name {
        cfg.experiment = name;
    }
    if cfg.experiment.is_empty() {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        return Err(Error::Config(format!(
            "name an experiment: {}",
            names.join(", ")
        )));
    }
    set_list(&mut cfg.n, args.n);
    set_list(&mut cfg.p, args.p);
    set_list(&mut cfg.alpha, args.alpha);
    set_list(&mut cfg.chain_strength, args.chain_strength);
    set_list(&mut cfg.contractions, args.contractions);
    if let Some(count) = args.seeds {
        cfg.seeds = (common.seed..common.seed + count).collect();
    }
    cfg.t_max = args.t_max.or(cfg.t_max);
    cfg.size_limit = args.size_limit.or(cfg.size_limit);
    cfg.parts = args.parts.or(cfg.parts);
    cfg.restarts = args.restarts.or(cfg.restarts);
    cfg.attempts = common.reads.or(cfg.attempts);
    cfg.subproblem_size = common.subproblem_size.or(cfg.subproblem_size);
    cfg.output_dir = args
        .out
        .or(cfg.output_dir)
        .or_else(|| Some(PathBuf::from("results")));
    let report = run_experiment(&cfg)?;
    info!("{} rows written to {:?}", report.rows.len(), cfg.output_dir);
    emit(&report.summary)
}
