//! Command-line front end for the channel-selection laboratory.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use osa_core::planner::{policy_value, Solver};
use osa_core::policy::PolicySpec;
use osa_core::sim::{
    estimate_throughput, run_episode, write_rewards_csv, write_trace_jsonl, InitialBelief,
    SimConfig,
};
use osa_core::{BeliefVector, ChannelModel, CorrelationSign};
use osa_lab::experiment;
use osa_lab::instance::{BeliefSpec, EpsilonSpec, InstanceSpec, ModelSpec};
use osa_lab::report::{ExperimentConfig, ExperimentReport};
use serde::Serialize;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "osa-lab",
    about = "Verification laboratory for myopic channel selection under noisy sensing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the round-robin form of the myopic policy against exact
    /// belief tracking on every observation path.
    Structure(ExperimentArgs),
    /// Check that the myopic policy attains the optimal value (N=2).
    Optimality(ExperimentArgs),
    /// Check myopic-vs-optimal equivalence for N in {3,4,5}.
    Conjecture(ExperimentArgs),
    /// Check conditional-value swap symmetry and the 1−ε difference bound.
    Lemma4(ExperimentArgs),
    /// Cross-check planner values against Monte Carlo simulation.
    Montecarlo(ExperimentArgs),
    /// Solve one instance exactly and report value and optimal actions.
    Solve(SolveArgs),
    /// Run seeded episodes and report throughput (and optionally traces).
    Simulate(SimulateArgs),
    /// Re-run the configuration stored in a report and verify it
    /// reproduces byte-identically.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON file holding an instance spec (fields may still be overridden
    /// by the flags below).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of channels N.
    #[arg(long)]
    n: Option<usize>,

    /// Horizon T in slots.
    #[arg(long)]
    horizon: Option<usize>,

    /// Number of instances to draw.
    #[arg(long)]
    instances: Option<usize>,

    /// Master seed for instance sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Set ε to this fraction of the structural bound (0 < f < 1).
    #[arg(long)]
    epsilon_frac: Option<f64>,

    /// Explicit model as `p01,p11,epsilon,delta`.
    #[arg(long)]
    model: Option<String>,

    /// Explicit initial beliefs as `v1,v2,...` (length N).
    #[arg(long)]
    omega: Option<String>,

    /// Initial-belief sampling: stationary | random-in-band |
    /// random-with-transients.
    #[arg(long)]
    belief: Option<String>,

    /// Constrain sampled models to one correlation sign:
    /// positive | negative.
    #[arg(long)]
    sign: Option<String>,

    /// Episodes per policy (montecarlo only).
    #[arg(long)]
    episodes: Option<u64>,

    /// Write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report file format: json | csv.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SolveArgs {
    /// Model as `p01,p11,epsilon,delta`.
    #[arg(long)]
    model: String,

    /// Initial beliefs as `v1,v2,...`; defaults to the stationary belief
    /// over `--n` channels.
    #[arg(long)]
    omega: Option<String>,

    /// Number of channels (used when `--omega` is omitted).
    #[arg(long)]
    n: Option<usize>,

    #[arg(long)]
    horizon: usize,

    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model as `p01,p11,epsilon,delta`.
    #[arg(long)]
    model: String,

    #[arg(long)]
    n: usize,

    #[arg(long)]
    horizon: usize,

    #[arg(long, default_value_t = 10_000)]
    episodes: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Policy name: myopic-argmax | structural | random | fixed:<k>.
    #[arg(long, default_value = "myopic-argmax")]
    policy: String,

    /// Initial beliefs as `v1,v2,...`; defaults to stationary.
    #[arg(long)]
    omega: Option<String>,

    /// Write per-episode totals (csv) or the summary (json) here.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format for --out: json | csv.
    #[arg(long, default_value = "json")]
    format: String,

    /// Also write the first K episode traces as JSON lines.
    #[arg(long)]
    traces_out: Option<PathBuf>,

    /// How many episode traces to write to --traces-out.
    #[arg(long, default_value_t = 10)]
    trace_episodes: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Report file produced by an experiment subcommand.
    report: PathBuf,
}

fn parse_model(text: &str) -> Result<ChannelModel> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("cannot parse `{text}` as p01,p11,epsilon,delta"))?;
    if parts.len() != 4 {
        bail!("--model needs exactly four values, got {}", parts.len());
    }
    Ok(ChannelModel::new(parts[0], parts[1], parts[2], parts[3])?)
}

fn parse_omega(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("cannot parse belief entry `{p}`"))
        })
        .collect()
}

fn parse_sign(text: &str) -> Result<CorrelationSign> {
    match text {
        "positive" => Ok(CorrelationSign::Positive),
        "negative" => Ok(CorrelationSign::Negative),
        other => bail!("unknown sign `{other}` (expected positive or negative)"),
    }
}

fn parse_belief(text: &str) -> Result<BeliefSpec> {
    match text {
        "stationary" => Ok(BeliefSpec::Stationary),
        "random-in-band" => Ok(BeliefSpec::RandomInBand),
        "random-with-transients" => Ok(BeliefSpec::RandomWithTransients),
        other => bail!("unknown belief spec `{other}`"),
    }
}

/// Per-experiment defaults: (channels, horizon, instances).
fn experiment_defaults(name: &str) -> (usize, usize, usize) {
    match name {
        "structure" => (4, 12, 100),
        "optimality" => (2, 10, 200),
        "conjecture" => (3, 8, 100),
        "lemma4" => (2, 15, 200),
        "montecarlo" => (2, 8, 10),
        _ => (2, 10, 100),
    }
}

fn build_config(name: &str, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let (default_n, default_horizon, default_instances) = experiment_defaults(name);
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str::<InstanceSpec>(&text)
                .with_context(|| format!("cannot parse config {}", path.display()))?
        }
        None => InstanceSpec::new(default_n, default_horizon, 0),
    };
    if let Some(n) = args.n {
        spec.channels = n;
    }
    if let Some(horizon) = args.horizon {
        spec.horizon = horizon;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(model) = &args.model {
        let m = parse_model(model)?;
        spec.model = ModelSpec::Explicit {
            p01: m.p01(),
            p11: m.p11(),
            delta: m.delta(),
        };
        spec.epsilon = EpsilonSpec::Explicit(m.epsilon());
    }
    if let Some(fraction) = args.epsilon_frac {
        spec.epsilon = EpsilonSpec::BelowBoundFraction(fraction);
    }
    if let Some(omega) = &args.omega {
        spec.initial_belief = BeliefSpec::Explicit(parse_omega(omega)?);
    }
    if let Some(belief) = &args.belief {
        spec.initial_belief = parse_belief(belief)?;
    }
    if let Some(sign) = &args.sign {
        let parsed = parse_sign(sign)?;
        spec.model = match spec.model {
            ModelSpec::Sampled {
                p_low,
                p_high,
                min_separation,
                delta_low,
                delta_high,
                ..
            } => ModelSpec::Sampled {
                p_low,
                p_high,
                min_separation,
                sign: Some(parsed),
                delta_low,
                delta_high,
            },
            explicit => explicit,
        };
    }
    Ok(ExperimentConfig {
        experiment: name.to_string(),
        spec,
        instances: args.instances.unwrap_or(default_instances),
        episodes: args.episodes.unwrap_or(100_000),
    })
}

fn write_report(report: &ExperimentReport, args: &ExperimentArgs) -> Result<()> {
    if let Some(path) = &args.out {
        match args.format.as_str() {
            "json" => fs::write(path, report.to_json())?,
            "csv" => {
                let mut buffer = Vec::new();
                report.write_csv(&mut buffer)?;
                fs::write(path, buffer)?;
            }
            other => bail!("unknown format `{other}` (expected json or csv)"),
        }
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

fn run_experiment(name: &str, args: &ExperimentArgs) -> Result<bool> {
    let config = build_config(name, args)?;
    let report = experiment::run(&config)?;
    println!("{}", report.summary());
    write_report(&report, args)?;
    Ok(report.all_passed())
}

#[derive(Serialize)]
struct SolveSummary {
    model: ChannelModel,
    omega: Vec<f64>,
    channels: usize,
    horizon: usize,
    value: f64,
    optimal_actions: Vec<usize>,
    memo_nodes: usize,
    expansions: u64,
    wall_time_ms: f64,
}

fn solve(args: &SolveArgs) -> Result<()> {
    let model = parse_model(&args.model)?;
    let omega = match (&args.omega, args.n) {
        (Some(text), _) => BeliefVector::new(parse_omega(text)?)?,
        (None, Some(n)) => BeliefVector::stationary(&model, n)?,
        (None, None) => bail!("provide --omega or --n"),
    };
    let start = Instant::now();
    let mut solver = Solver::new(&model, args.horizon)?;
    let entry = solver.optimal_value(&omega, 1)?;
    let summary = SolveSummary {
        model,
        omega: omega.entries().to_vec(),
        channels: omega.len(),
        horizon: args.horizon,
        value: entry.value,
        optimal_actions: entry.optimal_actions.iter().map(|c| c.number()).collect(),
        memo_nodes: solver.memo_len(),
        expansions: solver.expansions(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    match &args.out {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    config: SimConfig,
    mean_total_reward: f64,
    std_error: f64,
    planner_value: f64,
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let model = parse_model(&args.model)?;
    let policy: PolicySpec = args.policy.parse()?;
    let initial = match &args.omega {
        Some(text) => InitialBelief::Explicit(parse_omega(text)?),
        None => InitialBelief::Stationary,
    };
    let config = SimConfig {
        model,
        channels: args.n,
        horizon: args.horizon,
        episodes: args.episodes,
        seed: args.seed,
        initial,
        policy,
    };
    let omega = config.initial_belief()?;
    let planner_value = policy_value(&config.policy, &omega, config.horizon, &model)?.value;
    let estimate = estimate_throughput(&config)?;

    if let Some(path) = &args.traces_out {
        let mut buffer = Vec::new();
        for episode in 0..args.trace_episodes.min(args.episodes) {
            let trace = run_episode(&config, episode)?;
            write_trace_jsonl(&trace, &mut buffer)?;
        }
        fs::write(path, buffer)?;
        eprintln!("traces written to {}", path.display());
    }

    let summary = SimulateSummary {
        config: config.clone(),
        mean_total_reward: estimate.mean,
        std_error: estimate.std_error,
        planner_value,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);

    if let Some(path) = &args.out {
        match args.format.as_str() {
            "json" => fs::write(path, serde_json::to_string_pretty(&summary)?)?,
            "csv" => {
                let totals: Vec<(u64, u32)> = (0..args.episodes)
                    .map(|e| run_episode(&config, e).map(|t| (e, t.total_reward)))
                    .collect::<std::result::Result<_, _>>()?;
                let mut buffer = Vec::new();
                write_rewards_csv(&totals, &mut buffer)?;
                fs::write(path, buffer)?;
            }
            other => bail!("unknown format `{other}` (expected json or csv)"),
        }
        eprintln!("output written to {}", path.display());
    }
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read report {}", args.report.display()))?;
    let stored: ExperimentReport = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse report {}", args.report.display()))?;
    let outcome = experiment::replay(&stored)?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(outcome.byte_identical && outcome.verdicts_match)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Structure(args) => run_experiment("structure", args),
        Command::Optimality(args) => run_experiment("optimality", args),
        Command::Conjecture(args) => run_experiment("conjecture", args),
        Command::Lemma4(args) => run_experiment("lemma4", args),
        Command::Montecarlo(args) => run_experiment("montecarlo", args),
        Command::Solve(args) => solve(args).map(|()| true),
        Command::Simulate(args) => simulate(args).map(|()| true),
        Command::Replay(args) => replay(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
