//! Seeded experiment drivers with CSV/JSON reports.
//!
//! Every run is determined by the config and its seed. Rows are computed in
//! parallel and assembled in job order, so the results CSV and the JSON
//! summary are byte-identical across re-runs; wall-clock time goes to a
//! separate timing CSV keyed by row number.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::builders::{
    build_bisection_ising, build_kway_qubo, build_mis_qubo, decode_bisection, decode_kway,
    decode_mis, MIS_LINEAR, MIS_PENALTY,
};
use crate::chimera::{
    chimera_graph, contract_random_edges, count_broken_chains, embed_model, unembed, ChimeraSpec,
    UnembedStrategy,
};
use crate::error::{Error, Result};
use crate::graph::{random_graph, Graph};
use crate::maxclique::{
    exact_clique, generation_limits, greedy_clique, sa_clique, scaled_limit, split_solve,
    CliqueResult, DEFAULT_SPLIT_LIMIT,
};
use crate::model::Domain;
use crate::partition::{
    ch_cost, edge_cut, min_balanced_edge_cut, min_ch_cost, multilevel_partition, refine_ch_sa,
    Partition,
};
use crate::rng::derive;
use crate::solvers::{
    anneal_flip, anneal_swap_ising, default_t0, tabu_decompose, AnnealSchedule, SubSolver,
    TabuParams,
};

/// α escalation used when a config gives none.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.99, 0.999, 0.9996, 0.9999, 0.99999];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Table1Clique,
    DensityCalls,
    QubitScaling,
    CmQuality,
    ChainHistogram,
    EcPartition,
    ChPartition,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Table1Clique,
        Experiment::DensityCalls,
        Experiment::QubitScaling,
        Experiment::CmQuality,
        Experiment::ChainHistogram,
        Experiment::EcPartition,
        Experiment::ChPartition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1Clique => "table1-clique",
            Experiment::DensityCalls => "density-calls",
            Experiment::QubitScaling => "qubit-scaling",
            Experiment::CmQuality => "cm-quality",
            Experiment::ChainHistogram => "chain-histogram",
            Experiment::EcPartition => "ec-partition",
            Experiment::ChPartition => "ch-partition",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!(
                    "unknown experiment `{s}` (known: {})",
                    known.join(", ")
                ))
            })
    }
}

/// Experiment parameters. Lists left empty and options left unset take the
/// experiment's defaults where it has one; otherwise validation fails.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Vertex counts of the random graphs.
    pub n: Vec<usize>,
    /// Edge probabilities of the random graphs.
    pub p: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Cooling factors for SA-clique.
    pub alpha: Vec<f64>,
    /// Annealing steps.
    pub t_max: Option<u64>,
    pub subproblem_size: Option<usize>,
    /// Tabu subproblem solves.
    pub attempts: Option<u64>,
    pub chain_strength: Vec<f64>,
    pub size_limit: Option<usize>,
    /// Edge contractions `m` of the chimera minors.
    pub contractions: Vec<usize>,
    /// `[rows, cols, shore]`.
    pub chimera: Option<[usize; 3]>,
    pub parts: Option<usize>,
    pub generations: Option<usize>,
    /// Independent SA-clique runs per instance.
    pub restarts: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment: experiment.name().to_string(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad experiment config: {e}")))
    }

    /// Resolves defaults and checks every parameter the experiment needs.
    pub fn validate(&self) -> Result<Plan> {
        use Experiment::*;
        let exp: Experiment = self.experiment.parse()?;
        let missing = |what: &str| Error::Config(format!("{exp} needs `{what}`"));
        if self.seeds.is_empty() {
            return Err(missing("seeds"));
        }
        let needs_graph = matches!(
            exp,
            Table1Clique | DensityCalls | QubitScaling | EcPartition | ChPartition
        );
        if needs_graph && self.n.is_empty() {
            return Err(missing("n"));
        }
        if needs_graph && self.p.is_empty() {
            return Err(missing("p"));
        }
        if matches!(exp, CmQuality | ChainHistogram) && self.contractions.is_empty() {
            return Err(missing("contractions"));
        }
        if exp == ChainHistogram && self.chain_strength.is_empty() {
            return Err(missing("chain_strength"));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Config(format!("cooling factor {a} outside (0, 1)")));
        }
        if let Some(s) = self
            .chain_strength
            .iter()
            .find(|s| !(**s >= 0.0 && s.is_finite()))
        {
            return Err(Error::Config(format!(
                "chain strength {s} must be a nonnegative magnitude"
            )));
        }
        let alpha = match (self.alpha.is_empty(), exp) {
            (false, _) => self.alpha.clone(),
            (true, CmQuality) => DEFAULT_ALPHAS.to_vec(),
            (true, _) => vec![0.9996],
        };
        let [rows, cols, shore] = self.chimera.unwrap_or([4, 4, 4]);
        let chimera =
            ChimeraSpec::new(rows, cols, shore).map_err(|e| Error::Config(e.to_string()))?;
        let plan = Plan {
            experiment: exp,
            n: self.n.clone(),
            p: self.p.clone(),
            seeds: self.seeds.clone(),
            alpha,
            t_max: self.t_max.unwrap_or(20_000),
            subproblem_size: self.subproblem_size.unwrap_or(8),
            attempts: self.attempts.unwrap_or(200),
            chain_strength: self.chain_strength.clone(),
            size_limit: self.size_limit.unwrap_or(DEFAULT_SPLIT_LIMIT),
            contractions: self.contractions.clone(),
            chimera,
            parts: self.parts.unwrap_or(2),
            generations: self.generations.unwrap_or(7),
            restarts: self.restarts.unwrap_or(10),
        };
        if plan.t_max == 0 || plan.subproblem_size == 0 || plan.attempts == 0 || plan.restarts == 0
        {
            return Err(Error::Config(
                "t_max, subproblem_size, attempts and restarts must be positive".into(),
            ));
        }
        if plan.parts < 2 {
            return Err(Error::Config(format!(
                "parts must be at least 2, got {}",
                plan.parts
            )));
        }
        if plan.size_limit < 5 {
            return Err(Error::Config(format!(
                "size_limit must be at least 5, got {}",
                plan.size_limit
            )));
        }
        if let Some(&n) = plan
            .n
            .iter()
            .find(|&&n| n < plan.parts && matches!(exp, EcPartition | ChPartition))
        {
            return Err(Error::Config(format!(
                "n = {n} is smaller than the part count"
            )));
        }
        let lattice = plan.chimera.lattice_size();
        if let Some(&m) = plan.contractions.iter().find(|&&m| m >= lattice) {
            return Err(Error::Config(format!(
                "cannot contract {m} edges of a {lattice}-qubit chimera"
            )));
        }
        Ok(plan)
    }
}

/// A validated config with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub experiment: Experiment,
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub seeds: Vec<u64>,
    pub alpha: Vec<f64>,
    pub t_max: u64,
    pub subproblem_size: usize,
    pub attempts: u64,
    pub chain_strength: Vec<f64>,
    pub size_limit: usize,
    pub contractions: Vec<usize>,
    pub chimera: ChimeraSpec,
    pub parts: usize,
    pub generations: usize,
    pub restarts: usize,
}

/// Space-separated integers.
fn witness(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a witness column back into integers.
pub fn parse_witness(s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Report(format!("bad witness entry `{t}`")))
        })
        .collect()
}

/// Geometric schedule from `t0` down to `t0 / 1000` over `steps`.
fn cooling(steps: u64, t0: f64) -> Result<AnnealSchedule> {
    let alpha = 1e-3f64.powf(1.0 / steps.max(2) as f64);
    AnnealSchedule::geometric(steps, t0, alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueRow {
    pub n: usize,
    pub p: f64,
    pub graph_seed: u64,
    /// `exact`, `greedy`, `sa` or `split`.
    pub solver: String,
    /// Cooling factor (`sa`) or size limit (`split`).
    pub param: Option<f64>,
    pub size: usize,
    pub solver_calls: Option<u64>,
    pub witness: String,
}

impl CliqueRow {
    fn new(
        n: usize,
        p: f64,
        graph_seed: u64,
        solver: &str,
        param: Option<f64>,
        r: &CliqueResult,
    ) -> Self {
        CliqueRow {
            n,
            p,
            graph_seed,
            solver: solver.to_string(),
            param,
            size: r.size(),
            solver_calls: (solver == "split").then_some(r.stats.solver_calls),
            witness: witness(r.vertices()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub generation: usize,
    pub qubits: usize,
    pub size_limit: usize,
    pub scaled_limit: f64,
    pub n: usize,
    pub p: f64,
    pub graph_seed: u64,
    pub solver_calls: u64,
    pub size: usize,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmRow {
    pub m: usize,
    pub graph_seed: u64,
    pub vertices: usize,
    /// `exact`, `greedy` or `sa`.
    pub solver: String,
    pub alpha: Option<f64>,
    /// Independent-set size found on the minor.
    pub mis_size: usize,
    pub optimum: usize,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub m: usize,
    pub chain_strength: f64,
    pub seed: u64,
    pub chains: usize,
    pub broken_chains: usize,
    pub broken_rate: f64,
    /// Logical energy after majority vote.
    pub logical_energy: f64,
    pub feasible: bool,
    pub mis_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub n: usize,
    pub p: f64,
    pub graph_seed: u64,
    pub parts: usize,
    pub solver: String,
    /// Edge cut or core-halo cost.
    pub objective: Option<u64>,
    pub optimum: u64,
    pub feasible: bool,
    pub witness: String,
}

impl PartitionRow {
    pub fn optimal(&self) -> bool {
        self.feasible && self.objective == Some(self.optimum)
    }
}

/// Results of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Rows {
    Clique(Vec<CliqueRow>),
    Scaling(Vec<ScalingRow>),
    Cm(Vec<CmRow>),
    Chain(Vec<ChainRow>),
    Partition(Vec<PartitionRow>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Clique(r) => r.len(),
            Rows::Scaling(r) => r.len(),
            Rows::Cm(r) => r.len(),
            Rows::Chain(r) => r.len(),
            Rows::Partition(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_csv(&self) -> Result<String> {
        match self {
            Rows::Clique(r) => csv_of(r),
            Rows::Scaling(r) => csv_of(r),
            Rows::Cm(r) => csv_of(r),
            Rows::Chain(r) => csv_of(r),
            Rows::Partition(r) => csv_of(r),
        }
    }
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Reads rows written by [`Rows::to_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub rows: Rows,
    pub summary: Value,
    /// Wall-clock seconds per row, in row order.
    pub elapsed: Vec<f64>,
}

impl Report {
    pub fn timing_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Timing {
            row: usize,
            elapsed_secs: f64,
        }
        let t: Vec<_> = self
            .elapsed
            .iter()
            .enumerate()
            .map(|(row, &elapsed_secs)| Timing { row, elapsed_secs })
            .collect();
        csv_of(&t)
    }

    /// Writes `<name>.csv`, `<name>.timing.csv` and `<name>.summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", dir.display()),
            ))
        })?;
        let name = self.experiment.name();
        let files = [
            (dir.join(format!("{name}.csv")), self.rows.to_csv()?),
            (dir.join(format!("{name}.timing.csv")), self.timing_csv()?),
            (
                dir.join(format!("{name}.summary.json")),
                serde_json::to_string_pretty(&self.summary)? + "\n",
            ),
        ];
        for (path, text) in &files {
            crate::io::write_text(path, text)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    /// Sample standard deviation (0 for a single value).
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Summary {
        count: n,
        median: median(xs),
        std_dev: var.sqrt(),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Runs `f` over `jobs` in parallel, keeping job order, and times each job.
fn run_jobs<J: Sync, R: Send>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<Vec<R>> + Sync,
) -> Result<(Vec<R>, Vec<f64>)> {
    let out: Vec<Result<(Vec<R>, f64)>> = jobs
        .par_iter()
        .map(|j| {
            let t = Instant::now();
            let rows = f(j)?;
            log::debug!("job done: {} rows in {:.2?}", rows.len(), t.elapsed());
            let per_row = t.elapsed().as_secs_f64() / rows.len().max(1) as f64;
            Ok((rows, per_row))
        })
        .collect();
    let mut rows = Vec::new();
    let mut elapsed = Vec::new();
    for r in out {
        let (rs, t) = r?;
        elapsed.extend(std::iter::repeat_n(t, rs.len()));
        rows.extend(rs);
    }
    Ok((rows, elapsed))
}

/// `(n, p, seed)` for every combination, in config order.
fn graph_jobs(plan: &Plan) -> Vec<(usize, f64, u64)> {
    let mut jobs = Vec::new();
    for &n in &plan.n {
        for &p in &plan.p {
            for &s in &plan.seeds {
                jobs.push((n, p, s));
            }
        }
    }
    jobs
}

fn group_key(n: usize, p: f64) -> String {
    format!("n={n},p={p}")
}

/// Validates the config, runs the experiment and writes the report files
/// when `output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let plan = cfg.validate()?;
    log::info!("running {}", plan.experiment);
    let report = run_plan(&plan)?;
    if let Some(dir) = &cfg.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

pub fn run_plan(plan: &Plan) -> Result<Report> {
    match plan.experiment {
        Experiment::Table1Clique => table1_clique(plan),
        Experiment::DensityCalls => density_calls(plan),
        Experiment::QubitScaling => qubit_scaling(plan),
        Experiment::CmQuality => cm_quality(plan),
        Experiment::ChainHistogram => chain_histogram(plan),
        Experiment::EcPartition => ec_partition(plan),
        Experiment::ChPartition => ch_partition(plan),
    }
}

/// Best SA-clique result over `restarts` independent runs.
fn sa_best(g: &Graph, alpha: f64, seed: u64, restarts: usize) -> Result<CliqueResult> {
    let mut best: Option<CliqueResult> = None;
    for r in 0..restarts {
        let c = sa_clique(g, alpha, derive(seed, r as u64))?;
        if best.as_ref().is_none_or(|b| c.size() > b.size()) {
            best = Some(c);
        }
    }
    Ok(best.expect("restarts > 0"))
}

fn table1_clique(plan: &Plan) -> Result<Report> {
    let jobs = graph_jobs(plan);
    let (rows, elapsed) = run_jobs(&jobs, |&(n, p, s)| {
        let g = random_graph(n, p, s)?;
        let mut rows = vec![
            CliqueRow::new(n, p, s, "exact", None, &exact_clique(&g)?),
            CliqueRow::new(n, p, s, "greedy", None, &greedy_clique(&g, s)?),
        ];
        for &a in &plan.alpha {
            rows.push(CliqueRow::new(
                n,
                p,
                s,
                "sa",
                Some(a),
                &sa_best(&g, a, s, plan.restarts)?,
            ));
        }
        Ok(rows)
    })?;
    let mut groups = serde_json::Map::new();
    for &n in &plan.n {
        for &p in &plan.p {
            let of = |solver: &str, a: Option<f64>| -> Vec<&CliqueRow> {
                rows.iter()
                    .filter(|r| r.n == n && r.p == p && r.solver == solver && r.param == a)
                    .collect()
            };
            let exact = of("exact", None);
            let sizes = |rs: &[&CliqueRow]| rs.iter().map(|r| r.size as f64).collect::<Vec<_>>();
            let mut sa = serde_json::Map::new();
            for &a in &plan.alpha {
                let rs = of("sa", Some(a));
                let matched = rs
                    .iter()
                    .zip(&exact)
                    .filter(|(s, e)| s.size == e.size)
                    .count();
                sa.insert(
                    a.to_string(),
                    json!({ "size": summarize(&sizes(&rs)), "match_rate": matched as f64 / rs.len() as f64 }),
                );
            }
            groups.insert(
                group_key(n, p),
                json!({
                    "exact": summarize(&sizes(&exact)),
                    "greedy": summarize(&sizes(&of("greedy", None))),
                    "sa": sa,
                }),
            );
        }
    }
    Ok(Report {
        experiment: plan.experiment,
        rows: Rows::Clique(rows),
        summary: json!({ "experiment": plan.experiment.name(), "restarts": plan.restarts, "groups": groups }),
        elapsed,
    })
}

fn density_calls(plan: &Plan) -> Result<Report> {
    let jobs = graph_jobs(plan);
    let limit = plan.size_limit;
    let (rows, elapsed) = run_jobs(&jobs, |&(n, p, s)| {
        let g = random_graph(n, p, s)?;
        let r = split_solve(&g, limit, exact_clique)?;
        Ok(vec![CliqueRow::new(
            n,
            p,
            s,
            "split",
            Some(limit as f64),
            &r,
        )])
    })?;
    let mut groups = serde_json::Map::new();
    let mut trends = serde_json::Map::new();
    for &n in &plan.n {
        let mut medians = Vec::new();
        for &p in &plan.p {
            let calls: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.p == p)
                .map(|r| r.solver_calls.unwrap_or(0) as f64)
                .collect();
            let s = summarize(&calls);
            medians.push(s.median);
            groups.insert(group_key(n, p), json!({ "solver_calls": s }));
        }
        trends.insert(format!("n={n}"), calls_trend(&plan.p, &medians));
    }
    Ok(Report {
        experiment: plan.experiment,
        rows: Rows::Clique(rows),
        summary: json!({
            "experiment": plan.experiment.name(),
            "size_limit": limit,
            "groups": groups,
            "trend": trends,
        }),
        elapsed,
    })
}

/// Monotonicity of median calls in `p` and the fit of `ln(calls)` against `p`.
pub fn calls_trend(p: &[f64], medians: &[f64]) -> Value {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let strictly_increasing = order.windows(2).all(|w| medians[w[1]] > medians[w[0]]);
    let logs: Vec<f64> = medians.iter().map(|m| m.max(1.0).ln()).collect();
    json!({
        "strictly_increasing": strictly_increasing,
        "log_linear_r_squared": if p.len() > 1 { r_squared(p, &logs) } else { 1.0 },
    })
}

fn qubit_scaling(plan: &Plan) -> Result<Report> {
    let base_m = (plan.size_limit - 1) / 4;
    let table = generation_limits(base_m, plan.generations);
    let mut jobs = Vec::new();
    for (gen, &(qubits, limit)) in table.iter().enumerate() {
        for &(n, p, s) in &graph_jobs(plan) {
            jobs.push((gen, qubits, limit, n, p, s));
        }
    }
    let base = plan.size_limit;
    let (rows, elapsed) = run_jobs(&jobs, |&(gen, qubits, limit, n, p, s)| {
        let g = random_graph(n, p, s)?;
        let r = split_solve(&g, limit, exact_clique)?;
        Ok(vec![ScalingRow {
            generation: gen,
            qubits,
            size_limit: limit,
            scaled_limit: scaled_limit(base, gen as u32),
            n,
            p,
            graph_seed: s,
            solver_calls: r.stats.solver_calls,
            size: r.size(),
            witness: witness(r.vertices()),
        }])
    })?;
    let target = plan.n.iter().copied().max().unwrap_or(0);
    let first = |f: &dyn Fn(usize) -> f64| (0..table.len()).find(|&g| f(g) >= target as f64);
    let generations: Vec<Value> = table
        .iter()
        .enumerate()
        .map(|(gen, &(qubits, limit))| {
            let calls: Vec<f64> = rows
                .iter()
                .filter(|r| r.generation == gen)
                .map(|r| r.solver_calls as f64)
                .collect();
            json!({
                "generation": gen,
                "qubits": qubits,
                "size_limit": limit,
                "scaled_limit": scaled_limit(base, gen as u32),
                "solver_calls": summarize(&calls),
            })
        })
        .collect();
    Ok(Report {
        experiment: plan.experiment,
        rows: Rows::Scaling(rows),
        summary: json!({
            "experiment": plan.experiment.name(),
            "target_size": target,
            "first_generation_reaching_target": first(&|g| table[g].1 as f64),
            "first_scaled_generation_reaching_target": first(&|g| scaled_limit(base, g as u32)),
            "generations": generations,
        }),
        elapsed,
    })
}

/// Fraction of instances whose first α matching the optimum is at most each
/// α of `alphas` (sorted ascending). Non-decreasing by construction.
pub fn escalation_curve(alphas: &[f64], first_match: &[Option<f64>]) -> Vec<(f64, f64)> {
    alphas
        .iter()
        .map(|&a| {
            let hit = first_match
                .iter()
                .filter(|f| f.is_some_and(|f| f <= a))
                .count();
            (a, hit as f64 / first_match.len().max(1) as f64)
        })
        .collect()
}

fn cm_quality(plan: &Plan) -> Result<Report> {
    let mut alphas = plan.alpha.clone();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut jobs = Vec::new();
    for &m in &plan.contractions {
        for &s in &plan.seeds {
            jobs.push((m, s));
        }
    }
    let spec = &plan.chimera;
    let (rows, elapsed) = run_jobs(&jobs, |&(m, s)| {
        let (g, _) = contract_random_edges(spec, m, s)?;
        let h = g.complement();
        let opt = exact_clique(&h)?;
        let row = |solver: &str, alpha, r: &CliqueResult| CmRow {
            m,
            graph_seed: s,
            vertices: g.num_vertices(),
            solver: solver.to_string(),
            alpha,
            mis_size: r.size(),
            optimum: opt.size(),
            witness: witness(r.vertices()),
        };
        let mut rows = vec![
            row("exact", None, &opt),
            row("greedy", None, &greedy_clique(&h, s)?),
        ];
        for &a in &alphas {
            rows.push(row("sa", Some(a), &sa_clique(&h, a, s)?));
        }
        Ok(rows)
    })?;
    let mut per_m = serde_json::Map::new();
    let mut first_all = Vec::new();
    for &m in &plan.contractions {
        let sizes = |solver: &str, a: Option<f64>| -> Vec<f64> {
            rows.iter()
                .filter(|r| r.m == m && r.solver == solver && r.alpha == a)
                .map(|r| r.mis_size as f64)
                .collect()
        };
        let first: Vec<Option<f64>> = plan
            .seeds
            .iter()
            .map(|&s| {
                rows.iter()
                    .filter(|r| {
                        r.m == m && r.graph_seed == s && r.solver == "sa" && r.mis_size == r.optimum
                    })
                    .filter_map(|r| r.alpha)
                    .min_by(f64::total_cmp)
            })
            .collect();
        let sa: serde_json::Map<String, Value> = alphas
            .iter()
            .map(|&a| (a.to_string(), json!(summarize(&sizes("sa", Some(a))))))
            .collect();
        per_m.insert(
            format!("m={m}"),
            json!({
                "exact": summarize(&sizes("exact", None)),
                "greedy": summarize(&sizes("greedy", None)),
                "sa": sa,
                "escalation_curve": escalation_curve(&alphas, &first),
            }),
        );
        first_all.extend(first);
    }
    Ok(Report {
        experiment: plan.experiment,
        rows: Rows::Cm(rows),
        summary: json!({
            "experiment": plan.experiment.name(),
            "chimera": [spec.rows, spec.cols, spec.shore],
            "per_m": per_m,
            "escalation_curve": escalation_curve(&alphas, &first_all),
        }),
        elapsed,
    })
}

/// Anneals the minor's independent-set Ising model on the physical chimera
/// through the contraction embedding and counts broken chains in the best
/// sample.
pub fn chain_run(
    spec: &ChimeraSpec,
    m: usize,
    strength: f64,
    steps: u64,
    seed: u64,
) -> Result<ChainRow> {
    let (g, e) = contract_random_edges(spec, m, seed)?;
    let physical = chimera_graph(spec);
    let logical = build_mis_qubo(&g, MIS_LINEAR, MIS_PENALTY)?.to_ising();
    let pm = embed_model(&logical, &e, &physical, strength)?;
    let schedule = cooling(steps, default_t0(&pm))?;
    let set = anneal_flip(&pm, &schedule, derive(seed, 1))?;
    let broken = count_broken_chains(set.best().assignment.values(), &e);
    let lset = unembed(&set, &e, UnembedStrategy::MajorityVote, &logical)?;
    let best = lset.best();
    let mis = decode_mis(&g, &best.assignment)?;
    Ok(ChainRow {
        m,
        chain_strength: strength,
        seed,
        chains: e.len(),
        broken_chains: broken,
        broken_rate: broken as f64 / e.len().max(1) as f64,
        logical_energy: best.energy,
        feasible: mis.feasible,
        mis_size: mis.vertices.len(),
    })
}

fn chain_histogram(plan: &Plan) -> Result<Report> {
    let mut jobs = Vec::new();
    for &m in &plan.contractions {
        for &c in &plan.chain_strength {
            for &s in &plan.seeds {
                jobs.push((m, c, s));
            }
        }
    }
    let (rows, elapsed) = run_jobs(&jobs, |&(m, c, s)| {
        Ok(vec![chain_run(&plan.chimera, m, c, plan.t_max, s)?])
    })?;
    let mut groups = serde_json::Map::new();
    for &m in &plan.contractions {
        for &c in &plan.chain_strength {
            let rs: Vec<&ChainRow> = rows
                .iter()
                .filter(|r| r.m == m && r.chain_strength == c)
                .collect();
            let rate: Vec<f64> = rs.iter().map(|r| r.broken_rate).collect();
            let feasible = rs.iter().filter(|r| r.feasible).count();
            groups.insert(
                format!("m={m},strength={c}"),
                json!({ "broken_rate": summarize(&rate), "feasible_rate": feasible as f64 / rs.len() as f64 }),
            );
        }
    }
    Ok(Report {
        experiment: plan.experiment,
        rows: Rows::Chain(rows),
        summary: json!({ "experiment": plan.experiment.name(), "t_max": plan.t_max, "groups": groups }),
        elapsed,
    })
}

fn partition_row(
    n: usize,
    p: f64,
    s: u64,
    k: usize,
    solver: &str,
    optimum: u64,
    part: Option<(u64, bool, &Partition)>,
) -> PartitionRow {
    PartitionRow {
        n,
        p,
        graph_seed: s,
        parts: k,
        solver: solver.to_string(),
        objective: part.map(|(o, _, _)| o),
        optimum,
        feasible: part.is_some_and(|(_, f, _)| f),
        witness: part.map(|(_, _, q)| witness(q.parts())).unwrap_or_default(),
    }
}

fn ec_partition(plan: &Plan) -> Result<Report> {
    let jobs = graph_jobs(plan);
    let k = plan.parts;
    let (rows, elapsed) = run_jobs(&jobs, |&(n, p, s)| {
        let g = random_graph(n, p, s)?;
        let (opt, best) = min_balanced_edge_cut(&g, k)?;
        let opt = opt as u64;
        let cut = |q: &Partition| edge_cut(&g, q) as u64;
        let mut rows = vec![partition_row(
            n,
            p,
            s,
            k,
            "exact",
            opt,
            Some((opt, true, &best)),
        )];
        let ml = multilevel_partition(&g, k, s)?;
        rows.push(partition_row(
            n,
            p,
            s,
            k,
            "multilevel",
            opt,
            Some((cut(&ml), ml.is_balanced(), &ml)),
        ));
        if k == 2 {
            let ising = build_bisection_ising(&g)?;
            // the swap annealer keeps the spin sum at 0; odd n gets an
            // isolated dummy vertex, dropped afterwards
            let padded = if n % 2 == 0 {
                ising.clone()
            } else {
                build_bisection_ising(&Graph::from_edges(n + 1, g.edges())?)?
            };
            let set = anneal_swap_ising(&padded, plan.t_max, s)?;
            let full = decode_bisection(&set.best().assignment);
            let q = Partition::new(full.parts()[..n].to_vec(), 2)?;
            rows.push(partition_row(
                n,
                p,
                s,
                k,
                "anneal_swap",
                opt,
                Some((cut(&q), q.is_balanced(), &q)),
            ));
            let params = TabuParams::new(plan.subproblem_size, plan.attempts, s);
            let set = tabu_decompose(&ising.to_qubo(), &params, &SubSolver::BruteForce)?;
            let q = decode_bisection(&set.best().assignment.to_domain(Domain::Spin));
            rows.push(partition_row(
                n,
                p,
                s,
                k,
                "tabu",
                opt,
                Some((cut(&q), q.is_balanced(), &q)),
            ));
        } else {
            let (qubo, idx) = build_kway_qubo(&g, k)?;
            let params = TabuParams::new(plan.subproblem_size, plan.attempts, s);
            let set = tabu_decompose(&qubo, &params, &SubSolver::BruteForce)?;
            let dec = decode_kway(&idx, &set.best().assignment)?;
            let part = dec.partition().map(|q| (cut(q), q.is_balanced(), q));
            rows.push(partition_row(n, p, s, k, "tabu", opt, part));
        }
        Ok(rows)
    })?;
    Ok(partition_report(plan, rows, elapsed))
}

fn ch_partition(plan: &Plan) -> Result<Report> {
    let jobs = graph_jobs(plan);
    let k = plan.parts;
    let (rows, elapsed) = run_jobs(&jobs, |&(n, p, s)| {
        let g = random_graph(n, p, s)?;
        let (opt, best) = min_ch_cost(&g, k)?;
        let p0 = Partition::random(n, k, derive(s, 1))?;
        let schedule = cooling(plan.t_max, n as f64)?;
        let q = refine_ch_sa(&g, &p0, &schedule, s)?;
        Ok(vec![
            partition_row(n, p, s, k, "exact", opt, Some((opt, true, &best))),
            partition_row(
                n,
                p,
                s,
                k,
                "random",
                opt,
                Some((ch_cost(&g, &p0).total, true, &p0)),
            ),
            partition_row(
                n,
                p,
                s,
                k,
                "refine_ch_sa",
                opt,
                Some((ch_cost(&g, &q).total, true, &q)),
            ),
        ])
    })?;
    Ok(partition_report(plan, rows, elapsed))
}

fn partition_report(plan: &Plan, rows: Vec<PartitionRow>, elapsed: Vec<f64>) -> Report {
    let mut solvers: Vec<&str> = rows.iter().map(|r| r.solver.as_str()).collect();
    solvers.sort_unstable();
    solvers.dedup();
    let per_solver: serde_json::Map<String, Value> = solvers
        .iter()
        .map(|&solver| {
            let rs: Vec<&PartitionRow> = rows.iter().filter(|r| r.solver == solver).collect();
            let optimal = rs.iter().filter(|r| r.optimal()).count();
            let feasible = rs.iter().filter(|r| r.feasible).count();
            let gap: Vec<f64> = rs
                .iter()
                .filter_map(|r| r.objective.map(|o| o as f64 - r.optimum as f64))
                .collect();
            (
                solver.to_string(),
                json!({
                    "instances": rs.len(),
                    "optimal_rate": optimal as f64 / rs.len() as f64,
                    "feasible_rate": feasible as f64 / rs.len() as f64,
                    "gap": summarize(&gap),
                }),
            )
        })
        .collect();
    Report {
        experiment: plan.experiment,
        summary: json!({
            "experiment": plan.experiment.name(),
            "parts": plan.parts,
            "solvers": per_solver,
        }),
        rows: Rows::Partition(rows),
        elapsed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_come_first() {
        let mut cfg = ExperimentConfig::new(Experiment::DensityCalls);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.seeds = vec![0];
        cfg.n = vec![20];
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("`p`")));
        cfg.p = vec![1.5];
        assert!(cfg.validate().is_err());
        cfg.p = vec![0.3];
        assert!(cfg.validate().is_ok());
        cfg.experiment = "nope".into();
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json(r#"{"experiment": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let s = summarize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((s.std_dev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((r_squared(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 1.0).abs() < 1e-12);
        assert!(r_squared(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0]) < 0.5);
        let curve = escalation_curve(
            &[0.9, 0.99, 0.999],
            &[Some(0.99), None, Some(0.9), Some(0.999)],
        );
        assert_eq!(curve, vec![(0.9, 0.25), (0.99, 0.5), (0.999, 0.75)]);
    }

    #[test]
    fn table1_small_is_deterministic() {
        let cfg = ExperimentConfig {
            n: vec![20],
            p: vec![0.5],
            seeds: vec![1, 2],
            restarts: Some(2),
            ..ExperimentConfig::new(Experiment::Table1Clique)
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.rows.to_csv().unwrap(), b.rows.to_csv().unwrap());
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.elapsed.len(), 6);
    }
}
