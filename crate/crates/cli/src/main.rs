//! `qmpher` command-line front end: train runs from JSON configs, evaluate
//! and inspect checkpoints, and plot metrics CSVs. Exit codes: 0 success,
//! 2 configuration error, 3 numerical divergence, 4 I/O or corrupt data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmpher::checkpoint::PolicyCheckpoint;
use qmpher::config::{Algorithm, RunConfig};
use qmpher::envs::make_env;
use qmpher::harness::{evaluate, train};
use qmpher::plot::plot;
use qmpher::Error;

#[derive(Parser)]
#[command(name = "qmpher", version, about = "Goal-conditioned RL lab: DDPG + HER with Q-switched primitive reuse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy from a JSON run config.
    Train(TrainArgs),
    /// Evaluate a checkpoint's deterministic policy.
    Eval(EvalArgs),
    /// Render learning curves from metrics CSVs into an SVG and a summary table.
    Plot(PlotArgs),
    /// Print a checkpoint's spec and network shapes.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// JSON run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's environment.
    #[arg(long)]
    env: Option<String>,
    /// Override the config's algorithm (her, qmp_her, scripted_curriculum).
    #[arg(long)]
    algo: Option<String>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Environment to evaluate in; defaults to the checkpoint's own.
    #[arg(long)]
    env: Option<String>,
    #[arg(long, default_value_t = 50)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSV files, one curve each.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Output SVG path; a `.table.csv` summary is written next to it.
    #[arg(long, default_value = "curves.svg")]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train(args) => {
            let mut config = RunConfig::from_file(&args.config)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(env) = args.env {
                config.env = env;
            }
            if let Some(algo) = args.algo {
                config.algorithm = algo.parse::<Algorithm>()?;
            }
            if let Some(out) = args.out {
                config.out_dir = out;
            }
            let report = train(&config)?;
            let last = report.rows.last().expect("n_epochs > 0 is validated");
            println!(
                "trained {} epochs: success_rate={:.3} policy_updates={}",
                report.rows.len(),
                last.eval_success_rate,
                last.policy_updates
            );
            println!("metrics: {}", report.metrics_path.display());
            println!("checkpoint: {}", report.checkpoint_path.display());
            Ok(())
        }
        Command::Eval(args) => {
            let ckpt = PolicyCheckpoint::load(&args.checkpoint)?;
            let env_name = args.env.unwrap_or_else(|| ckpt.env_spec.name.clone());
            let mut env = make_env(&env_name)?;
            if *env.spec() != ckpt.env_spec {
                return Err(Error::CheckpointDims(format!(
                    "checkpoint was trained on '{}', not '{env_name}'",
                    ckpt.env_spec.name
                )));
            }
            let agent = ckpt.into_agent(Default::default())?;
            let rate = evaluate(&agent, &mut env, args.episodes, args.seed)?;
            println!("success_rate={rate:.4} over {} episodes on {env_name}", args.episodes);
            Ok(())
        }
        Command::Plot(args) => {
            plot(&args.csv, &args.out)?;
            println!("wrote {}", args.out.display());
            println!("wrote {}", args.out.with_extension("table.csv").display());
            Ok(())
        }
        Command::Inspect(args) => {
            let ckpt = PolicyCheckpoint::load(&args.checkpoint)?;
            let spec = &ckpt.env_spec;
            println!("env: {}", spec.name);
            println!(
                "dims: obs={} goal={} action={} horizon={}",
                spec.observation_dim, spec.goal_dim, spec.action_dim, spec.horizon
            );
            println!("actor layers: {:?}", ckpt.actor.layer_sizes);
            println!("critic layers: {:?}", ckpt.critic.layer_sizes);
            println!(
                "parameters: actor={} critic={}",
                ckpt.actor.param_count(),
                ckpt.critic.param_count()
            );
            println!("normalizer samples: obs={} goal={}", ckpt.normalizer.obs.count, ckpt.normalizer.goal.count);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
