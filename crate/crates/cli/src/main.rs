//! Command-line driver for the policy-imitation attack pipeline.
//!
//! Stages are file-mediated: each subcommand reads its inputs from the
//! output directory and writes its artifacts back there, so stages can be
//! run one at a time or all together with `pipeline`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mlab::pipeline::{
    run_pipeline, stage_attack_eval, stage_attack_train, stage_collect_demos, stage_crop_eval,
    stage_imitate, stage_train_target, stage_transfer_eval, ExperimentConfig, StageStatus,
};

#[derive(Parser)]
#[command(
    name = "mlab",
    version,
    about = "Train CartPole Q-policy victims, replicate them from observations, and evaluate perturbation attacks, FGSM transfer, and the CRoP defense"
)]
struct Cli {
    /// Experiment config file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Victim id (defaults to every victim in the roster).
    #[arg(long, global = true)]
    victim: Option<String>,

    /// Demonstration count (defaults to every configured count).
    #[arg(long, global = true)]
    demos: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train victim Q-policies.
    TrainTarget,
    /// Record passive demonstrations of a trained victim.
    CollectDemos,
    /// Learn an imitated Q-function from recorded demonstrations.
    Imitate,
    /// Train the perturbation adversary against an imitation.
    AttackTrain,
    /// Evaluate a trained adversary (regret and perturbation counts).
    AttackEval,
    /// Craft FGSM examples against an imitation and measure transfer.
    TransferEval,
    /// Sweep the CRoP defense trade-off.
    CropEval,
    /// Run every stage for every (victim x demo count) cell.
    Pipeline,
    /// Print the effective config (after overrides) as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::paper_defaults(PathBuf::from("out")),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn victims_of<'a>(cli: &'a Cli, cfg: &'a ExperimentConfig) -> Result<Vec<String>> {
    match &cli.victim {
        Some(id) => {
            if cfg.victim(id).is_none() {
                bail!("unknown victim id '{id}'");
            }
            Ok(vec![id.clone()])
        }
        None => Ok(cfg.victims.iter().map(|v| v.id.clone()).collect()),
    }
}

fn demo_counts_of(cli: &Cli, cfg: &ExperimentConfig) -> Vec<usize> {
    match cli.demos {
        Some(n) => vec![n],
        None => cfg.demo_counts.clone(),
    }
}

fn for_each_cell(
    cli: &Cli,
    cfg: &ExperimentConfig,
    f: impl Fn(&str, usize) -> Result<(), mlab::pipeline::PipelineError>,
) -> Result<()> {
    for id in victims_of(cli, cfg)? {
        for n in demo_counts_of(cli, cfg) {
            f(&id, n).with_context(|| format!("cell {id}/{n}"))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::TrainTarget => {
            for id in victims_of(&cli, &cfg)? {
                stage_train_target(&cfg, &id).with_context(|| format!("victim {id}"))?;
            }
        }
        Command::CollectDemos => for_each_cell(&cli, &cfg, |id, n| stage_collect_demos(&cfg, id, n))?,
        Command::Imitate => for_each_cell(&cli, &cfg, |id, n| stage_imitate(&cfg, id, n))?,
        Command::AttackTrain => for_each_cell(&cli, &cfg, |id, n| stage_attack_train(&cfg, id, n))?,
        Command::AttackEval => for_each_cell(&cli, &cfg, |id, n| stage_attack_eval(&cfg, id, n))?,
        Command::TransferEval => {
            for_each_cell(&cli, &cfg, |id, n| stage_transfer_eval(&cfg, id, n))?
        }
        Command::CropEval => stage_crop_eval(&cfg)?,
        Command::Pipeline => {
            let manifest = run_pipeline(&cfg)?;
            let failed = manifest.failed_stages();
            for (key, record) in &manifest.stages {
                let status = match record.status {
                    StageStatus::Completed => "completed",
                    StageStatus::Skipped => "skipped (up to date)",
                    StageStatus::Failed => "FAILED",
                    StageStatus::SkippedUpstreamFailure => "skipped (upstream failure)",
                };
                println!("{key}: {status} ({:.1}s)", record.seconds);
            }
            if !failed.is_empty() {
                eprintln!("{} stage(s) failed: {}", failed.len(), failed.join(", "));
                return Ok(ExitCode::from(failed.len().min(255) as u8));
            }
            println!("manifest: {}", cfg.output_dir.join("manifest.toml").display());
        }
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
