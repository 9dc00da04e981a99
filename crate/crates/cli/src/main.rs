use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use sinkrank::chain::{verify_theorems, TheoremInputs, TheoremReport, Verdict, DEFAULT_STATE_CAP, EPSILON_GRID};
use sinkrank::dynamics::{FeasibleFunction, Mode, Sbrd, SbrdConfig};
use sinkrank::equilibrium::{
    cce_with_support_exists_mu, is_cce, support_sensitivity, JointDistribution, SUPPORT_MU,
};
use sinkrank::formats::{parse_document, Document};
use sinkrank::game_model::{MetaGame, DEFAULT_PROFILE_CAP, EXACT_TIE_TOL};
use sinkrank::metrics::{node_weights, rank_graph, MetricKind, WeightVector};
use sinkrank::report::{self, Artifact, RunManifest};
use sinkrank::response_graph::{build_sbr_graph, SbrGraph};

const STATE_CAP_VAR: &str = "SINKRANK_STATE_CAP";

#[derive(Parser, Debug)]
#[command(name = "sinkrank", version, about = "Sink-equilibrium ranking of meta-games")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Strict best response graph, pure equilibria and sink equilibria.
    Analyze {
        #[arg(long)]
        game: PathBuf,
        /// Also write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Rank profiles by the cycle- or memory-based metric.
    Rank {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Simulate the perturbed strict best response dynamics.
    Simulate(SimulateArgs),
    /// Exact history-chain analysis: potentials, stationary mass, theorem checks.
    Chain(TheoremArgs),
    /// Coarse correlated equilibrium checks.
    CceCheck {
        #[arg(long)]
        game: PathBuf,
        /// Joint distribution over all profiles, comma separated in index order.
        #[arg(long, conflicts_with = "support")]
        q: Option<String>,
        /// Profiles allowed positive mass, separated by ';' (e.g. "a1,b2;a2,b2").
        #[arg(long)]
        support: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = SUPPORT_MU)]
        mu: f64,
    },
    /// Verdict of the stability theorems; exit 0 pass, 1 fail, 2 precondition.
    Verify(TheoremArgs),
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, default_value = "cycle")]
    metric: String,
    /// Memory length m for the memory-based metric.
    #[arg(long, default_value_t = 2)]
    memory: usize,
    /// Agent weights summing to 1, comma separated; uniform when absent.
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 2)]
    memory: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 1_000)]
    burn_in: u64,
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 1_000)]
    episodes: usize,
    /// Starting profile label; a seeded uniform draw when absent.
    #[arg(long)]
    initial: Option<String>,
}

#[derive(Args, Debug)]
struct TheoremArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 2)]
    memory: usize,
    /// Strictly decreasing epsilon values, comma separated.
    #[arg(long)]
    epsilon_grid: Option<String>,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    delta_bar: Option<f64>,
    #[arg(long, default_value = "cycle")]
    metric: String,
    #[arg(long)]
    weights: Option<String>,
}

struct Loaded {
    digest: String,
    doc: Document,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| anyhow!("{} is not UTF-8", path.display()))?;
    let doc = parse_document(&text).with_context(|| format!("in {}", path.display()))?;
    Ok(Loaded { digest, doc })
}

fn meta_of(doc: Document) -> Result<MetaGame> {
    match doc {
        Document::Meta(m) => Ok(m),
        Document::Game(g) => Ok(MetaGame::from_stochastic(g.game, g.policies, DEFAULT_PROFILE_CAP)?),
        Document::Graph(_) => bail!("this command needs payoffs; a graph file only supports analyze and rank"),
    }
}

fn graph_of(doc: Document) -> Result<(SbrGraph, Option<MetaGame>)> {
    match doc {
        Document::Graph(g) => Ok((g, None)),
        other => {
            let meta = meta_of(other)?;
            Ok((build_sbr_graph(&meta, EXACT_TIE_TOL)?, Some(meta)))
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{what}: '{x}' is not a number"))
        })
        .collect()
}

fn weights(arg: &Option<String>, agents: usize) -> Result<WeightVector> {
    match arg {
        None => Ok(WeightVector::uniform(agents)),
        Some(s) => {
            let w = parse_list(s, "--weights")?;
            if w.len() != agents {
                bail!("--weights lists {} values but the game has {agents} agents", w.len());
            }
            Ok(WeightVector::new(w)?)
        }
    }
}

fn state_cap() -> Result<usize> {
    match std::env::var(STATE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| anyhow!("{STATE_CAP_VAR}='{v}' is not a positive integer")),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn manifest(cli: &Cli, command: &str, digest: &str, mut flags: BTreeMap<String, String>) -> RunManifest {
    flags.insert("format".into(), format!("{:?}", cli.format).to_lowercase());
    if let Some(o) = &cli.out {
        flags.insert("out".into(), o.display().to_string());
    }
    RunManifest {
        command: command.into(),
        input_digest: digest.into(),
        flags,
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: timestamp(),
    }
}

fn emit<T: Serialize>(cli: &Cli, manifest: RunManifest, result: T, csv: Option<String>) -> Result<()> {
    let text = match (cli.format, csv) {
        (Format::Csv, Some(body)) => format!("# manifest: {}\n{body}", serde_json::to_string(&manifest)?),
        (Format::Csv, None) => bail!("this command has no CSV output; use --format json"),
        (Format::Json, _) => serde_json::to_string_pretty(&Artifact { manifest, result })? + "\n",
    };
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn flags<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn show<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map(|x| format!("{x:?}").trim_matches('"').to_string()).unwrap_or_default()
}

fn theorem_report(args: &TheoremArgs) -> Result<(String, MetaGame, TheoremReport)> {
    let loaded = load(&args.game)?;
    let meta = meta_of(loaded.doc)?;
    let grid = match &args.epsilon_grid {
        Some(s) => parse_list(s, "--epsilon-grid")?,
        None => EPSILON_GRID.to_vec(),
    };
    let inputs = TheoremInputs {
        kind: args.metric.parse::<MetricKind>()?,
        memory: args.memory,
        delta: args.delta,
        delta0: args.delta0,
        delta_bar: args.delta_bar,
        weights: weights(&args.weights, meta.agents())?,
        epsilon_grid: grid,
        state_cap: state_cap()?,
    };
    let report = verify_theorems(&meta, &inputs)?;
    Ok((loaded.digest, meta, report))
}

fn theorem_flags(args: &TheoremArgs) -> BTreeMap<String, String> {
    flags([
        ("game", args.game.display().to_string()),
        ("memory", args.memory.to_string()),
        ("epsilon-grid", show(&args.epsilon_grid)),
        ("delta", args.delta.to_string()),
        ("delta0", show(&args.delta0)),
        ("delta-bar", show(&args.delta_bar)),
        ("metric", args.metric.clone()),
        ("weights", show(&args.weights)),
    ])
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Analyze { game, dot } => {
            let loaded = load(game)?;
            let (graph, _) = graph_of(loaded.doc)?;
            if let Some(p) = dot {
                fs::write(p, graph.to_dot()).with_context(|| format!("cannot write {}", p.display()))?;
            }
            let summary = report::analyze(&graph);
            let csv = report::analyze_csv(&summary);
            let m = manifest(cli, "analyze", &loaded.digest, flags([("game", game.display().to_string())]));
            emit(cli, m, summary, Some(csv))?;
        }
        Command::Rank { game, metric } => {
            let loaded = load(game)?;
            let kind: MetricKind = metric.metric.parse()?;
            let (graph, meta) = graph_of(loaded.doc)?;
            let w = match &meta {
                Some(meta) => node_weights(meta, &weights(&metric.weights, meta.agents())?)?,
                None => {
                    if metric.weights.is_some() {
                        bail!("--weights needs payoffs; graph files carry node weights directly");
                    }
                    graph
                        .weights()
                        .ok_or_else(|| anyhow!("graph file has no \"weights\"; ranking needs W for every node"))?
                        .to_vec()
                }
            };
            let (_, rows) = rank_graph(&graph, kind, metric.memory, &w)?;
            let csv = report::rank_csv(&rows);
            let m = manifest(
                cli,
                "rank",
                &loaded.digest,
                flags([
                    ("game", game.display().to_string()),
                    ("metric", metric.metric.clone()),
                    ("memory", metric.memory.to_string()),
                    ("weights", show(&metric.weights)),
                ]),
            );
            emit(cli, m, rows, Some(csv))?;
        }
        Command::Simulate(a) => {
            let loaded = load(&a.game)?;
            let meta = meta_of(loaded.doc)?;
            let mode: Mode = a.mode.parse()?;
            if mode == Mode::Empirical && meta.source().is_none() {
                bail!("empirical mode needs a stochastic game file, not a payoff table");
            }
            let f = FeasibleFunction::for_game(&meta, a.delta, weights(&a.weights, meta.agents())?)?;
            let cfg = SbrdConfig {
                epsilon: a.epsilon,
                memory: a.memory,
                mode,
                episodes: a.episodes,
                seed: cli.seed,
                tie_tol: EXACT_TIE_TOL,
            };
            let sbrd = Sbrd::new(&meta, f, cfg)?;
            let initial = a.initial.as_deref().map(|l| meta.parse_profile(l)).transpose()?;
            let summary = sbrd.run(a.steps, a.burn_in, initial)?;
            let occupancy = report::occupancy(sbrd.graph(), &summary);
            let csv = report::occupancy_csv(&occupancy);
            let m = manifest(
                cli,
                "simulate",
                &loaded.digest,
                flags([
                    ("game", a.game.display().to_string()),
                    ("memory", a.memory.to_string()),
                    ("epsilon", a.epsilon.to_string()),
                    ("delta", a.delta.to_string()),
                    ("weights", show(&a.weights)),
                    ("steps", a.steps.to_string()),
                    ("burn-in", a.burn_in.to_string()),
                    ("mode", a.mode.clone()),
                    ("episodes", a.episodes.to_string()),
                    ("initial", show(&a.initial)),
                ]),
            );
            emit(cli, m, report::SimulateReport { summary, occupancy }, Some(csv))?;
        }
        Command::Chain(a) => {
            let (digest, meta, theorems) = theorem_report(a)?;
            let graph = build_sbr_graph(&meta, EXACT_TIE_TOL)?;
            let m = manifest(cli, "chain", &digest, theorem_flags(a));
            match report::chain_report(&graph, theorems.clone()) {
                Some(r) => {
                    let csv = report::chain_csv(&r);
                    emit(cli, m, r, Some(csv))?;
                }
                // preconditions stopped the stationary analysis
                None => emit(cli, m, theorems, None)?,
            }
        }
        Command::CceCheck { game, q, support, tol, mu } => {
            let loaded = load(game)?;
            let meta = meta_of(loaded.doc)?;
            let m = manifest(
                cli,
                "cce-check",
                &loaded.digest,
                flags([
                    ("game", game.display().to_string()),
                    ("q", show(q)),
                    ("support", show(support)),
                    ("tol", tol.to_string()),
                    ("mu", mu.to_string()),
                ]),
            );
            match (q, support) {
                (Some(q), _) => {
                    let q = JointDistribution::new(parse_list(q, "--q")?)?;
                    let check = is_cce(&meta, &q, *tol)?;
                    let ok = check.is_cce;
                    emit(cli, m, check, None)?;
                    return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
                }
                (None, Some(s)) => {
                    let support = s
                        .split(';')
                        .map(|l| meta.parse_profile(l))
                        .collect::<sinkrank::Result<Vec<usize>>>()?;
                    let result = cce_with_support_exists_mu(&meta, &support, *mu)?;
                    let sensitivity = support_sensitivity(&meta, &support, &[*mu, mu / 10.0, mu / 100.0])?;
                    let ok = result.feasible;
                    emit(
                        cli,
                        m,
                        serde_json::json!({ "support": result, "sensitivity": sensitivity }),
                        None,
                    )?;
                    return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
                }
                (None, None) => bail!("give either --q or --support"),
            }
        }
        Command::Verify(a) => {
            let (digest, _, report) = theorem_report(a)?;
            let verdict = report.verdict;
            for p in &report.preconditions {
                eprintln!("precondition: {p}");
            }
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("failed: {} ({})", c.name, c.detail);
            }
            let m = manifest(cli, "verify", &digest, theorem_flags(a));
            emit(cli, m, report, None)?;
            return Ok(match verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail => ExitCode::from(1),
                Verdict::Precondition => ExitCode::from(2),
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
