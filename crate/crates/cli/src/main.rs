//! `nmg-solve`: validate, generate and solve networked zero-sum games.
//!
//! Exit codes: 0 success, 1 domain failure (invalid game, unsupported
//! topology, solver failure), 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use nmg::decomposition::{validate_dense, TransitionStructure};
use nmg::game_model::{
    validate_nmg, validate_polymatrix, Horizon, MarkovPolicy, ValidationOptions,
};
use nmg::generate::{
    fashion, random_zs_nmg, star_random, FashionParams, RandomNmgParams, Topology,
};
use nmg::io::{load_game, policy_from_json, policy_to_json, GameFile, LoadedGame};
use nmg::markov::{
    fp_markov, markov_ne_gap, star_value_iteration, value_iteration_ne, FpConfig, ViOutput,
};
use nmg::polymatrix::{matrix_ne_gap, solve_stage, OracleConfig, OracleKind};
use nmg::schedule::StepSchedule;

const STRUCTURE_TOL: f64 = 1e-9;
const STAR_TOL: f64 = 1e-8;
const STAR_MAX_SWEEPS: usize = 100_000;

#[derive(Parser, Debug)]
#[command(
    name = "nmg-solve",
    version,
    about = "Networked zero-sum Markov game solver"
)]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "NMG_SOLVE_THREADS", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file; writes report.json.
    Validate {
        path: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compute an equilibrium; writes policy.json, gap.csv and summary.json.
    Solve(SolveArgs),
    /// Fictitious play on a discounted star game; writes trajectory.csv and summary.json.
    Fp(FpArgs),
    /// Write a generated game file.
    Generate(GenerateArgs),
    /// NE gap of a policy; writes gap.json.
    Gap {
        game: PathBuf,
        policy: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-run a solve or fp run from its summary.json (or a bare config object).
    Replay {
        config: PathBuf,
        /// Output directory; defaults to the one recorded in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SolveArgs {
    path: PathBuf,
    /// lp, mwu-fixed, mwu-diminishing, omwu, omd, fp, smooth-fp or no-regret.
    #[arg(long, default_value = "lp")]
    oracle: String,
    /// Iteration budget of iterative oracles.
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budgets at which the gap curve is sampled.
    #[arg(long, default_value_t = 10)]
    checkpoints: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct FpArgs {
    path: PathBuf,
    #[arg(long, default_value_t = 0.55)]
    alpha_pow: f64,
    #[arg(long, default_value_t = 0.75)]
    beta_pow: f64,
    #[arg(long, default_value_t = 1 << 16)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Snapshot every this many iterations (0: final only).
    #[arg(long, default_value_t = 4096)]
    stride: usize,
    /// Probability of a uniform restart at each step.
    #[arg(long, default_value_t = 0.0)]
    explore: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    RandomZsNmg,
    Fashion,
    StarRandom,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output game file.
    #[arg(long)]
    out: PathBuf,
    /// complete, triangle, ring or star.
    #[arg(long, default_value = "triangle")]
    topology: String,
    #[arg(long, default_value_t = 3)]
    players: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 2)]
    states: usize,
    /// Finite horizon; ignored when --gamma is given.
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    /// Discount factor (makes the game infinite-horizon).
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated controller list (random-zs-nmg); empty for action-independent dynamics.
    #[arg(long)]
    controllers: Option<String>,
    #[arg(long, default_value_t = 2)]
    conformists: usize,
    #[arg(long, default_value_t = 2)]
    rebels: usize,
    #[arg(long, default_value_t = 2)]
    s_max: usize,
    /// Comma-separated influencer list (fashion).
    #[arg(long, default_value = "0")]
    influencers: String,
    /// Links such as "0-2,1-3" (fashion); defaults to all conformist-rebel pairs.
    #[arg(long)]
    edges: Option<String>,
    /// Fashion: emit the zero-sum version (every link must join a conformist and a rebel).
    #[arg(long)]
    zero_sum: bool,
}

/// Persisted parameters of a run; replaying them reproduces the outputs.
#[derive(Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum RunConfig<'a> {
    Solve {
        #[serde(flatten)]
        args: &'a SolveArgs,
        oracle_config: &'a OracleConfig,
    },
    Fp {
        #[serde(flatten)]
        args: &'a FpArgs,
    },
}

/// Owned form of [`RunConfig`] read back for replay.
#[derive(Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum StoredRun {
    Solve(SolveArgs),
    Fp(FpArgs),
}

enum Failure {
    Domain(String),
    Usage(String),
}

type CliResult<T> = Result<T, Failure>;

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parse and shape errors are usage errors, the rest are domain failures.
fn classify(e: nmg::Error) -> Failure {
    match e {
        nmg::Error::Parse(_) | nmg::Error::Dimension(_) => usage(e),
        other => domain(other),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_game(path: &Path) -> CliResult<LoadedGame> {
    load_game(&read(path)?).map_err(|e| match e {
        nmg::Error::Parse(m) => usage(format!("{}: {m}", path.display())),
        other => domain(format!("{}: {other}", path.display())),
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| domain(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    write(
        path,
        &(serde_json::to_string_pretty(value).map_err(domain)? + "\n"),
    )
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(domain)?;
    }
    let bytes = w.into_inner().map_err(|e| domain(e.to_string()))?;
    write(path, &String::from_utf8(bytes).map_err(domain)?)
}

fn validate(path: &Path, out: &Path) -> CliResult<()> {
    let opts = ValidationOptions::default();
    let (valid, report, problems) = match read_game(path)? {
        LoadedGame::Matrix(g) => {
            let r = validate_polymatrix(&g, &opts);
            let problems = r
                .violations
                .iter()
                .map(|v| v.detail.clone())
                .collect::<Vec<_>>();
            (r.valid, json!({"kind": "matrix", "report": r}), problems)
        }
        LoadedGame::Markov(g) => {
            let r = validate_nmg(&g, &opts);
            let problems = r
                .violations
                .iter()
                .map(|v| match v.stage {
                    Some(h) => format!("stage {h}: {}", v.detail),
                    None => v.detail.clone(),
                })
                .collect::<Vec<_>>();
            (r.valid, json!({"kind": "markov", "report": r}), problems)
        }
        LoadedGame::Dense { game, graph } => {
            let d = validate_dense(&game, &graph, STRUCTURE_TOL).map_err(classify)?;
            let mut problems: Vec<String> = d
                .rewards
                .failures
                .iter()
                .map(|f| {
                    format!(
                        "reward of player {} at state {} (own action {}) is not pairwise separable",
                        f.player, f.state, f.own_action
                    )
                })
                .collect();
            let transitions = match &d.transitions {
                TransitionStructure::Decomposed {
                    dynamics,
                    max_residual,
                } => {
                    json!({"decomposable": true, "controllers": dynamics.controllers(), "max_residual": max_residual})
                }
                TransitionStructure::NotDecomposable(f) => {
                    problems.push(format!(
                        "transition to state {} from state {} is not an ensemble of single-controller kernels",
                        f.next_state, f.state
                    ));
                    json!({"decomposable": false, "failure": f})
                }
            };
            let report = json!({
                "valid": d.is_networked(),
                "rewards": {
                    "decomposable": d.rewards.decomposable(),
                    "max_residual": d.rewards.max_residual,
                    "failures": d.rewards.failures,
                },
                "transitions": transitions,
            });
            (
                d.is_networked(),
                json!({"kind": "dense", "report": report}),
                problems,
            )
        }
    };
    let mut report = report;
    report["valid"] = json!(valid);
    write_json(&out.join("report.json"), &report)?;
    if valid {
        println!("valid");
        Ok(())
    } else {
        Err(Failure::Domain(problems.join("\n")))
    }
}

fn oracle_config(args: &SolveArgs) -> CliResult<OracleConfig> {
    let kind: OracleKind = args.oracle.parse().map_err(|_| {
        let names: Vec<&str> = OracleKind::ALL.iter().map(|k| k.name()).collect();
        usage(format!(
            "unknown oracle '{}' (expected one of: {})",
            args.oracle,
            names.join(", ")
        ))
    })?;
    let mut cfg = OracleConfig::new(kind).iters(args.iters).seed(args.seed);
    cfg.tau = args.tau;
    cfg.eta = args.eta;
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn checkpoints(kind: OracleKind, iters: usize, count: usize) -> Vec<usize> {
    if kind == OracleKind::Lp || count <= 1 {
        return vec![iters];
    }
    let mut v: Vec<usize> = (1..=count)
        .map(|k| (iters * k).div_ceil(count).max(1))
        .collect();
    v.dedup();
    v
}

#[derive(Serialize)]
struct CurveRow {
    iters: usize,
    ne_gap: f64,
    /// Sum over stages of the largest stage-game gap (zero for matrix games).
    stage_bound: f64,
}

fn solve(args: &SolveArgs) -> CliResult<()> {
    let cfg = oracle_config(args)?;
    let game = read_game(&args.path)?;
    let config = RunConfig::Solve {
        args,
        oracle_config: &cfg,
    };
    let budgets = checkpoints(cfg.kind, cfg.max_iters, args.checkpoints);
    let mut curve = Vec::new();
    let summary = match game {
        LoadedGame::Matrix(g) => {
            let mut last = None;
            for &t in &budgets {
                let out = solve_stage(&g, &cfg.clone().iters(t), cfg.seed).map_err(classify)?;
                curve.push(CurveRow {
                    iters: t,
                    ne_gap: out.gap,
                    stage_bound: 0.0,
                });
                last = Some(out);
            }
            let out = last.expect("at least one budget");
            let policy = MarkovPolicy {
                stages: vec![vec![out.profile.clone()]],
            };
            write(&args.out.join("policy.json"), &policy_to_json(&policy))?;
            json!({
                "config": config,
                "game": "matrix",
                "final_gap": out.gap,
                "iterations": out.iterations,
                "payoffs": g.expected_payoffs(&out.profile).map_err(classify)?,
                "eps_cce": out.eps_cce,
            })
        }
        LoadedGame::Markov(g) => match g.horizon() {
            Horizon::Finite(_) => {
                let mut last: Option<(ViOutput, f64)> = None;
                for &t in &budgets {
                    let vi = value_iteration_ne(&g, &cfg.clone().iters(t)).map_err(classify)?;
                    let gap = markov_ne_gap(&g, &vi.policy, 0).map_err(classify)?.ne_gap;
                    curve.push(CurveRow {
                        iters: t,
                        ne_gap: gap,
                        stage_bound: vi.aggregate_bound(),
                    });
                    last = Some((vi, gap));
                }
                let (vi, gap) = last.expect("at least one budget");
                write(&args.out.join("policy.json"), &policy_to_json(&vi.policy))?;
                let iterations: usize = vi.oracle_iterations.iter().flatten().sum();
                json!({
                    "config": config,
                    "game": "markov",
                    "final_gap": gap,
                    "iterations": iterations,
                    "aggregate_bound": vi.aggregate_bound(),
                    "stage_solves": vi.stage_solves(),
                    "initial_values": vi.values[0],
                    "max_value_sum": vi.max_value_sum,
                    "cce_gaps": vi.cce_gaps,
                })
            }
            Horizon::Discounted(_) => {
                let star = star_value_iteration(&g, STAR_TOL, STAR_MAX_SWEEPS).map_err(|e| match e {
                    nmg::Error::Topology(m) => Failure::Domain(format!(
                        "{m}; stationary equilibria are only computed for star games with center-controlled transitions"
                    )),
                    other => classify(other),
                })?;
                let report = markov_ne_gap(&g, &star.policy, 0).map_err(classify)?;
                write_csv(
                    &args.out.join("sweeps.csv"),
                    star.distances.iter().enumerate().map(|(k, d)| SweepRow {
                        sweep: k + 1,
                        distance: *d,
                    }),
                )?;
                curve.push(CurveRow {
                    iters: star.sweeps,
                    ne_gap: report.ne_gap,
                    stage_bound: 0.0,
                });
                write(&args.out.join("policy.json"), &policy_to_json(&star.policy))?;
                json!({
                    "config": config,
                    "game": "star",
                    "note": "discounted star game solved by value iteration with exact stage LPs; the oracle is not used",
                    "final_gap": report.ne_gap,
                    "gap_error_bound": report.error_bound,
                    "iterations": star.sweeps,
                    "center": star.center,
                    "center_values": star.center_values,
                })
            }
        },
        LoadedGame::Dense { .. } => {
            return Err(Failure::Domain(
                "game has no pairwise structure; run validate to check whether it decomposes"
                    .into(),
            ))
        }
    };
    write_csv(&args.out.join("gap.csv"), curve)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    println!("final gap {}", summary["final_gap"]);
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    sweep: usize,
    distance: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    iter: usize,
    s: usize,
    player: usize,
    #[serde(rename = "Vhat")]
    vhat: f64,
    #[serde(rename = "sumVhat")]
    sum_vhat: f64,
}

fn fp(args: &FpArgs) -> CliResult<()> {
    let game = match read_game(&args.path)? {
        LoadedGame::Markov(g) => g,
        _ => {
            return Err(Failure::Domain(
                "fictitious play needs a discounted star Markov game".into(),
            ))
        }
    };
    let cfg = FpConfig {
        alpha: StepSchedule::Power(args.alpha_pow),
        beta: StepSchedule::Power(args.beta_pow),
        iters: args.iters,
        seed: args.seed,
        stride: args.stride,
        explore: args.explore,
        initial_state: 0,
    };
    let tr = fp_markov(&game, &cfg).map_err(|e| match e {
        nmg::Error::Topology(m) => Failure::Domain(format!(
            "{m}; fictitious play runs on star graphs whose transitions the center controls"
        )),
        nmg::Error::InvalidParameter(m) if m.contains("discounted") => Failure::Domain(m),
        other => classify(other),
    })?;
    let mut rows = Vec::new();
    for snap in &tr.snapshots {
        for (s, sum) in snap.value_sums.iter().enumerate() {
            for (i, v) in snap.values.iter().enumerate() {
                rows.push(TrajectoryRow {
                    iter: snap.iter,
                    s,
                    player: i,
                    vhat: v[s],
                    sum_vhat: *sum,
                });
            }
        }
    }
    write_csv(&args.out.join("trajectory.csv"), rows)?;
    let last = tr.last();
    let summary = json!({
        "config": RunConfig::Fp { args },
        "iterations": last.iter,
        "final_values": last.values,
        "final_abs_value_sum": last.value_sums.iter().map(|x| x.abs()).collect::<Vec<_>>(),
        "dyadic_max_abs_value_sum": tr.dyadic_max,
        "visits": tr.state.visits,
        "warnings": tr.warnings,
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    for w in &tr.warnings {
        eprintln!("warning: {w}");
    }
    println!("final |sum V| {}", summary["final_abs_value_sum"]);
    Ok(())
}

fn parse_list(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| usage(format!("'{t}' is not a player index")))
        })
        .collect()
}

fn parse_edges(text: &str) -> CliResult<Vec<(usize, usize)>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once('-')
                .ok_or_else(|| usage(format!("link '{t}' is not of the form i-j")))?;
            let p = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("link '{t}' is not of the form i-j")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn generate(args: &GenerateArgs) -> CliResult<()> {
    let horizon = match args.gamma {
        Some(g) => Horizon::Discounted(g),
        None => Horizon::Finite(args.horizon),
    };
    let game = match args.kind {
        Kind::RandomZsNmg => {
            let params = RandomNmgParams {
                topology: args.topology.parse::<Topology>().map_err(usage)?,
                players: args.players,
                actions: args.actions,
                states: args.states,
                horizon,
                controllers: args.controllers.as_deref().map(parse_list).transpose()?,
            };
            random_zs_nmg(&params, args.seed)
        }
        Kind::StarRandom => star_random(
            args.players,
            args.actions,
            args.states,
            args.gamma.unwrap_or(0.9),
            args.seed,
        ),
        Kind::Fashion => {
            let mut params = FashionParams::new(args.conformists, args.rebels, args.s_max, horizon);
            params.influencers = parse_list(&args.influencers)?;
            params.edges = args.edges.as_deref().map(parse_edges).transpose()?;
            params.zero_sum = args.zero_sum;
            fashion(&params)
        }
    }
    .map_err(|e| match e {
        nmg::Error::InvalidParameter(_) => usage(e),
        other => domain(other),
    })?;
    write(&args.out, &GameFile::from_markov(&game).to_json())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn gap(game_path: &Path, policy_path: &Path, out: &Path) -> CliResult<()> {
    let game = read_game(game_path)?;
    let policy = policy_from_json(&read(policy_path)?)
        .map_err(|e| usage(format!("{}: {e}", policy_path.display())))?;
    let report = match game {
        LoadedGame::Matrix(g) => {
            if policy.stages.len() != 1 || policy.stages[0].len() != 1 {
                return Err(usage(
                    "a matrix game takes a policy with one stage and one state",
                ));
            }
            let profile = &policy.stages[0][0];
            nmg::game_model::policy::check_profile(g.action_counts(), profile, 1e-6)
                .map_err(usage)?;
            json!({"game": "matrix", "report": matrix_ne_gap(&g, profile)})
        }
        LoadedGame::Markov(g) => {
            let r = markov_ne_gap(&g, &policy, 0).map_err(|e| match e {
                nmg::Error::Dimension(_)
                | nmg::Error::InvalidParameter(_)
                | nmg::Error::Parse(_) => usage(e),
                other => domain(other),
            })?;
            json!({"game": "markov", "report": r})
        }
        LoadedGame::Dense { .. } => {
            return Err(Failure::Domain(
                "gaps are computed for networked games only".into(),
            ))
        }
    };
    let ne_gap = report["report"]["ne_gap"].clone();
    let mut report = report;
    report["ne_gap"] = ne_gap.clone();
    write_json(&out.join("gap.json"), &report)?;
    println!("ne gap {ne_gap}");
    Ok(())
}

fn replay(path: &Path, out: Option<&Path>) -> CliResult<(&'static str, PathBuf)> {
    let text = read(path)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(config) = value.get_mut("config") {
        value = config.take();
    }
    let stored: StoredRun = serde_json::from_value(value)
        .map_err(|e| usage(format!("{}: not a run config: {e}", path.display())))?;
    match stored {
        StoredRun::Solve(mut a) => {
            if let Some(o) = out {
                a.out = o.to_path_buf();
            }
            solve(&a).map(|_| ("solve", a.out))
        }
        StoredRun::Fp(mut a) => {
            if let Some(o) = out {
                a.out = o.to_path_buf();
            }
            fp(&a).map(|_| ("fp", a.out))
        }
    }
}

fn run(cmd: &Command) -> CliResult<(&'static str, Option<PathBuf>)> {
    match cmd {
        Command::Validate { path, out } => {
            validate(path, out).map(|_| ("validate", Some(out.clone())))
        }
        Command::Solve(a) => solve(a).map(|_| ("solve", Some(a.out.clone()))),
        Command::Fp(a) => fp(a).map(|_| ("fp", Some(a.out.clone()))),
        Command::Generate(a) => generate(a).map(|_| ("generate", None)),
        Command::Gap { game, policy, out } => {
            gap(game, policy, out).map(|_| ("gap", Some(out.clone())))
        }
        Command::Replay { config, out } => {
            replay(config, out.as_deref()).map(|(c, dir)| (c, Some(dir)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let start = Instant::now();
    match pool.install(|| run(&cli.command)) {
        Ok((command, dir)) => {
            if let Some(dir) = dir {
                let timing = json!({
                    "command": command,
                    "threads": cli.threads,
                    "wall_seconds": start.elapsed().as_secs_f64(),
                });
                if let Err(Failure::Domain(m) | Failure::Usage(m)) =
                    write_json(&dir.join("timing.json"), &timing)
                {
                    eprintln!("error: {m}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
