//! The `rrank` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 iteration hit
//! `--max-iters` without converging, 3 graph over the dense oracle cap.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compare::{rank_agreement, top_k, CompareError};
use crate::experiments::{
    default_pairs, generate_evolution, run_update_experiment, write_summary, EvolutionSpec,
    ExperimentConfig, ExperimentError, Method,
};
use crate::graph::{load_graph_with_manifest, GraphError, LinkGraph};
use crate::ranking::{
    pagerank_with_reference, read_node_values, read_scores, reinforcement_rank_with_reference,
    truncated_rank, uniform_distribution, write_scores, write_trace, DenseOracle, Init,
    IterationConfig, NodeValues, Policy, RankError, DEFAULT_DENSE_CAP,
};

/// Environment variable overriding the dense oracle node cap.
pub const DENSE_CAP_ENV: &str = "RRANK_DENSE_CAP";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_OVER_CAP: i32 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Rank(RankError::OverDenseCap { .. }) => EXIT_OVER_CAP,
            _ => EXIT_USAGE,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rrank",
    version,
    about = "Reinforcement ranking and PageRank for link graphs"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute scores iteratively.
    Rank(RankArgs),
    /// Solve exactly with a dense factorization (small graphs only).
    Oracle(OracleArgs),
    /// Compare default and warm-started convergence across graph snapshots.
    UpdateExperiment(UpdateArgs),
    /// Top-k overlap and Kendall tau between two score files.
    Compare(CompareArgs),
    /// Write the top-k rank list of a score file.
    Top(TopArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum RankMethod {
    Pagerank,
    Rr,
    RrTruncated,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OracleMethod {
    Rr,
    Pagerank,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExperimentMethod {
    Rr,
    Pagerank,
    Both,
}

#[derive(Args, Debug)]
struct GraphInput {
    /// Edge list: one "src dst" pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Optional node manifest declaring nodes without links.
    #[arg(long)]
    node_manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelInput {
    /// Discount γ (reinforcement ranking) or damping c (PageRank).
    #[arg(long = "gamma", visible_alias = "damping", default_value_t = 0.85)]
    discount: f64,
    /// Rewards CSV "external_id,value".
    #[arg(long)]
    rewards: Option<PathBuf>,
    /// Reward of nodes absent from --rewards.
    #[arg(long, default_value_t = 1.0)]
    reward_default: f64,
    /// Teleportation weights CSV "external_id,value"; absent nodes get 0,
    /// then the vector is normalized. Uniform when omitted.
    #[arg(long)]
    teleport: Option<PathBuf>,
    /// Dangling-node distribution, same format as --teleport. Defaults to
    /// the teleportation vector.
    #[arg(long)]
    dangling_dist: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, value_enum, default_value_t = RankMethod::Rr)]
    method: RankMethod,
    #[command(flatten)]
    model: ModelInput,
    /// History depth for rr-truncated.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Warm-start scores CSV "external_id,score".
    #[arg(long)]
    init_scores: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Score output CSV.
    #[arg(long, default_value = "scores.csv")]
    out: PathBuf,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Reference scores for the trace's relative-error column.
    #[arg(long)]
    ref_scores: Option<PathBuf>,
    /// Also write the "external_id,internal_index" map.
    #[arg(long)]
    id_map_out: Option<PathBuf>,
    /// Fixed-order sequential reductions; outputs are byte-reproducible.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, value_enum, default_value_t = OracleMethod::Rr)]
    method: OracleMethod,
    #[command(flatten)]
    model: ModelInput,
    #[arg(long, default_value = "scores.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct UpdateArgs {
    /// Edge-list snapshots in chronological order.
    #[arg(long, num_args = 1.., conflicts_with = "synthetic")]
    snapshots: Vec<PathBuf>,
    /// JSON evolution spec for a synthetic snapshot sequence.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExperimentMethod::Both)]
    method: ExperimentMethod,
    #[arg(long = "gamma", visible_alias = "damping", default_value_t = 0.85)]
    discount: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// (initializer:target) snapshot index pairs, e.g. "2:3,1:2". Defaults to
    /// every snapshot against the last plus the second-to-last step.
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<String>,
    #[arg(long, default_value = "experiment")]
    out_dir: PathBuf,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 20)]
    k: usize,
}

#[derive(Args, Debug)]
struct TopArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "ranklist.csv")]
    out: PathBuf,
}

/// Provenance record written next to every output.
#[derive(Serialize)]
struct RunManifest {
    subcommand: &'static str,
    args: Vec<String>,
    inputs: BTreeMap<String, String>,
    tool_version: &'static str,
    seed: Option<u64>,
}

impl RunManifest {
    fn new(subcommand: &'static str, args: &[OsString]) -> Self {
        Self {
            subcommand,
            args: args
                .iter()
                .skip(1)
                .map(|a| a.to_string_lossy().into_owned())
                .collect(),
            inputs: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: None,
        }
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(io_at(path))?;
        self.inputs.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    fn inputs<'a>(&mut self, paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<(), CliError> {
        paths.into_iter().try_for_each(|p| self.input(p))
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(io_at(path))
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(io_at(path))
}

fn load(input: &GraphInput) -> Result<LinkGraph, CliError> {
    Ok(load_graph_with_manifest(
        &input.graph,
        input.node_manifest.as_ref(),
    )?)
}

fn node_values(path: Option<&PathBuf>, default: f64) -> Result<NodeValues, CliError> {
    Ok(match path {
        Some(p) => NodeValues::with_values(default, read_node_values(open(p)?)?),
        None => NodeValues::constant(default),
    })
}

fn distribution(g: &LinkGraph, path: Option<&PathBuf>) -> Result<Option<Vec<f64>>, CliError> {
    path.map(|p| Ok(node_values(Some(p), 0.0)?.distribution(g)?))
        .transpose()
}

/// Scores from a CSV mapped onto `g`'s internal order.
fn scores_for(
    g: &LinkGraph,
    path: &Path,
    fallback: &[f64],
    strict: bool,
) -> Result<Vec<f64>, CliError> {
    let rows: BTreeMap<u64, f64> = read_scores(open(path)?)?.into_iter().collect();
    g.external_ids()
        .iter()
        .zip(fallback)
        .map(|(id, &d)| match rows.get(id) {
            Some(&v) => Ok(v),
            None if strict => Err(CliError::Usage(format!(
                "{}: no score for node {id}",
                path.display()
            ))),
            None => Ok(d),
        })
        .collect()
}

fn dense_cap() -> Result<usize, CliError> {
    match std::env::var(DENSE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{DENSE_CAP_ENV}={v:?} is not a node count"))),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}

fn check_discount(d: f64) -> Result<(), CliError> {
    if d > 0.0 && d < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--gamma/--damping must lie in (0, 1), got {d}"
        )))
    }
}

fn cmd_rank(a: &RankArgs, argv: &[OsString]) -> Result<i32, CliError> {
    check_discount(a.model.discount)?;
    let mut manifest = RunManifest::new("rank", argv);
    manifest.inputs(
        [
            Some(&a.graph.graph),
            a.graph.node_manifest.as_ref(),
            a.model.rewards.as_ref(),
        ]
        .into_iter()
        .chain([a.model.teleport.as_ref(), a.model.dangling_dist.as_ref()])
        .chain([a.init_scores.as_ref(), a.ref_scores.as_ref()])
        .flatten(),
    )?;
    let g = load(&a.graph)?;
    let rewards = node_values(a.model.rewards.as_ref(), a.model.reward_default)?.rewards(&g)?;

    let (scores, trace) = match a.method {
        RankMethod::RrTruncated => {
            if a.trace_out.is_some() {
                eprintln!("rrank: --trace-out ignored for rr-truncated (no iteration)");
            }
            let p = Policy::uniform(&g);
            (
                truncated_rank(&g, &p, &rewards, a.model.discount, a.depth)?,
                None,
            )
        }
        RankMethod::Rr | RankMethod::Pagerank => {
            let teleport = distribution(&g, a.model.teleport.as_ref())?
                .unwrap_or_else(|| uniform_distribution(g.node_count()));
            let fallback = match a.method {
                RankMethod::Rr => rewards.values().to_vec(),
                _ => uniform_distribution(g.node_count()),
            };
            let init = match &a.init_scores {
                Some(p) => Init::FromScores(scores_for(&g, p, &fallback, false)?),
                None => Init::Default,
            };
            let reference = a
                .ref_scores
                .as_ref()
                .map(|p| scores_for(&g, p, &fallback, true))
                .transpose()?;
            let cfg = IterationConfig::new(a.model.discount)
                .tolerance(a.tol)
                .max_iterations(a.max_iters)
                .deterministic(a.deterministic)
                .init(init);
            let (s, t) = if a.method == RankMethod::Rr {
                let p = Policy::uniform(&g);
                reinforcement_rank_with_reference(&g, &p, &rewards, &cfg, reference.as_deref())?
            } else {
                let u = distribution(&g, a.model.dangling_dist.as_ref())?;
                pagerank_with_reference(&g, &cfg, &teleport, u.as_deref(), reference.as_deref())?
            };
            (s, Some(t))
        }
    };

    let mut w = create(&a.out)?;
    write_scores(&g, &scores.values, &mut w)?;
    w.flush().map_err(io_at(&a.out))?;
    if let (Some(path), Some(trace)) = (&a.trace_out, &trace) {
        let mut w = create(path)?;
        write_trace(trace, &mut w)?;
        w.flush().map_err(io_at(path))?;
    }
    if let Some(path) = &a.id_map_out {
        let mut w = create(path)?;
        crate::graph::write_id_map(&g, &mut w)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    manifest.write(&manifest_path(&a.out))?;

    match trace {
        Some(t) if !t.converged => {
            eprintln!(
                "rrank: no convergence within {} iterations (last residual {:e})",
                a.max_iters,
                t.records.last().map_or(f64::NAN, |r| r.l1_residual)
            );
            Ok(EXIT_NOT_CONVERGED)
        }
        Some(t) => {
            eprintln!("rrank: converged in {} iterations", t.iterations_used);
            Ok(EXIT_OK)
        }
        None => Ok(EXIT_OK),
    }
}

fn cmd_oracle(a: &OracleArgs, argv: &[OsString]) -> Result<i32, CliError> {
    let mut manifest = RunManifest::new("oracle", argv);
    manifest.inputs(
        [
            Some(&a.graph.graph),
            a.graph.node_manifest.as_ref(),
            a.model.rewards.as_ref(),
        ]
        .into_iter()
        .chain([a.model.teleport.as_ref(), a.model.dangling_dist.as_ref()])
        .flatten(),
    )?;
    let g = load(&a.graph)?;
    let oracle = DenseOracle::new(dense_cap()?);
    let scores = match a.method {
        OracleMethod::Rr => {
            if !(0.0..1.0).contains(&a.model.discount) {
                return Err(CliError::Usage(format!(
                    "--gamma must lie in [0, 1), got {}",
                    a.model.discount
                )));
            }
            let r = node_values(a.model.rewards.as_ref(), a.model.reward_default)?.rewards(&g)?;
            oracle.solve_rr(&g, &Policy::uniform(&g), &r, a.model.discount)?
        }
        OracleMethod::Pagerank => {
            check_discount(a.model.discount)?;
            let v = distribution(&g, a.model.teleport.as_ref())?
                .unwrap_or_else(|| uniform_distribution(g.node_count()));
            let u = distribution(&g, a.model.dangling_dist.as_ref())?;
            oracle.solve_pagerank(&g, a.model.discount, &v, u.as_deref())?
        }
    };
    let mut w = create(&a.out)?;
    write_scores(&g, &scores.values, &mut w)?;
    w.flush().map_err(io_at(&a.out))?;
    manifest.write(&manifest_path(&a.out))?;
    Ok(EXIT_OK)
}

fn parse_pairs(raw: &[String], n: usize) -> Result<Vec<(usize, usize)>, CliError> {
    if raw.is_empty() {
        return Ok(default_pairs(n));
    }
    raw.iter()
        .map(|p| {
            let parsed = p
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
            match parsed {
                Some((a, b)) if a < n && b < n => Ok((a, b)),
                _ => Err(CliError::Usage(format!(
                    "bad pair {p:?}: expected \"initializer:target\" indices below {n}"
                ))),
            }
        })
        .collect()
}

fn cmd_update_experiment(a: &UpdateArgs, argv: &[OsString]) -> Result<i32, CliError> {
    check_discount(a.discount)?;
    let mut manifest = RunManifest::new("update-experiment", argv);
    let snapshots: Vec<LinkGraph> = match &a.synthetic {
        Some(spec_path) => {
            manifest.input(spec_path)?;
            let text = fs::read_to_string(spec_path).map_err(io_at(spec_path))?;
            let spec: EvolutionSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", spec_path.display())))?;
            manifest.seed = Some(spec.seed);
            generate_evolution(&spec)?.snapshots
        }
        None => {
            manifest.inputs(&a.snapshots)?;
            a.snapshots
                .iter()
                .map(|p| Ok(crate::graph::load_graph(p)?))
                .collect::<Result<_, CliError>>()?
        }
    };
    if snapshots.len() < 2 {
        return Err(CliError::Usage(
            "update-experiment needs at least two snapshots".into(),
        ));
    }
    let pairs = parse_pairs(&a.pairs, snapshots.len())?;
    let cfg = ExperimentConfig {
        discount: a.discount,
        tolerance: a.tol,
        max_iterations: a.max_iters,
        deterministic: a.deterministic,
        ..Default::default()
    };
    let methods: &[Method] = match a.method {
        ExperimentMethod::Rr => &[Method::Reinforcement],
        ExperimentMethod::Pagerank => &[Method::PageRank],
        ExperimentMethod::Both => &[Method::PageRank, Method::Reinforcement],
    };
    let mut results = Vec::new();
    for &m in methods {
        results.extend(run_update_experiment(&snapshots, &pairs, m, &cfg)?);
    }

    let trace_dir = a.out_dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(io_at(&trace_dir))?;
    for r in &results {
        let path = trace_dir.join(format!(
            "trace_{}_{}_{}-{}.csv",
            r.method, r.init_kind, r.pair.0, r.pair.1
        ));
        let mut w = create(&path)?;
        write_trace(&r.trace, &mut w)?;
        w.flush().map_err(io_at(&path))?;
    }
    let summary = a.out_dir.join("summary.csv");
    let mut w = create(&summary)?;
    write_summary(&results, &mut w).map_err(io_at(&summary))?;
    w.flush().map_err(io_at(&summary))?;
    manifest.write(&a.out_dir.join("manifest.json"))?;

    for r in &results {
        if !r.converged {
            eprintln!(
                "rrank: {} {} pair {}-{} did not converge within {} iterations",
                r.method, r.init_kind, r.pair.0, r.pair.1, a.max_iters
            );
        }
    }
    Ok(EXIT_OK)
}

fn cmd_compare(a: &CompareArgs) -> Result<i32, CliError> {
    let sa = read_scores(open(&a.a)?)?;
    let sb = read_scores(open(&a.b)?)?;
    let ag = rank_agreement(&sa, &sb, a.k)?;
    println!("k={}", ag.k);
    println!("overlap={}", ag.overlap);
    match ag.kendall_tau {
        Some(t) => println!("kendall_tau={t}"),
        None => println!("kendall_tau="),
    }
    println!("union_size={}", ag.union_size);
    Ok(EXIT_OK)
}

fn cmd_top(a: &TopArgs) -> Result<i32, CliError> {
    let scores = read_scores(open(&a.scores)?)?;
    let mut w = create(&a.out)?;
    top_k(&scores, a.k)
        .write_csv(&mut w)
        .map_err(io_at(&a.out))?;
    w.flush().map_err(io_at(&a.out))?;
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, argv: &[OsString]) -> Result<i32, CliError> {
    match &cli.command {
        Command::Rank(a) => cmd_rank(a, argv),
        Command::Oracle(a) => cmd_oracle(a, argv),
        Command::UpdateExperiment(a) => cmd_update_experiment(a, argv),
        Command::Compare(a) => cmd_compare(a),
        Command::Top(a) => cmd_top(a),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &argv)),
            Err(e) => Err(CliError::Usage(format!("--threads {n}: {e}"))),
        },
        None => dispatch(&cli, &argv),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rrank: {e}");
            e.exit_code()
        }
    }
}
