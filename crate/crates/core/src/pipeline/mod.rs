//! Experiment orchestration: runs train -> demos -> imitate -> adversary ->
//! attack/transfer/crop evaluation for every (victim x demo count) cell,
//! with per-stage idempotence and a machine-readable run manifest.
//!
//! Stages communicate through files only (checkpoints, demonstration files,
//! per-cell CSV rows), so any stage can be rerun in isolation and a rerun
//! with an unchanged config reuses everything.

mod config;
mod manifest;

pub use config::{CropSettings, EvalSettings, ExperimentConfig, VictimSpec};
pub use manifest::{RunManifest, StageRecord, StageStatus};

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::adversary::{evaluate_attack, train_adversary};
use crate::approximator::{Network, NetworkSpec};
use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
use crate::crop::{evaluate_crop, CropEvalProtocol};
use crate::dqfd::{collect_demonstrations, dqfd_train, DemoFileError, DemonstrationSet};
use crate::dqn::{evaluate_policy, train_dqn, Policy, TrainError, TrainingCurve};
use crate::report::{emit_report, ReportError, ReportKind, ReportRow, RowIndex};
use crate::seeding::{derive_seed, mix};
use crate::transfer::run_transfer_eval;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown victim id '{0}'")]
    UnknownVictim(String),
    #[error("missing input: {0} (run the upstream stage first)")]
    MissingInput(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    DemoFile(#[from] DemoFileError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("toml error: {0}")]
    Toml(String),
}

/// All artifact paths under one output root.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.toml")
    }

    pub fn victim_dir(&self, id: &str) -> PathBuf {
        self.root.join("victims").join(id)
    }

    pub fn victim_checkpoint(&self, id: &str) -> PathBuf {
        self.victim_dir(id).join("checkpoint.bin")
    }

    pub fn victim_curve(&self, id: &str) -> PathBuf {
        self.victim_dir(id).join("training_curve.csv")
    }

    pub fn cell_dir(&self, id: &str, demos: usize) -> PathBuf {
        self.root.join("cells").join(id).join(demos.to_string())
    }

    pub fn demo_file(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("demos.bin")
    }

    pub fn imitation_checkpoint(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("imitation.bin")
    }

    pub fn imitation_log(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("imitation_log.csv")
    }

    pub fn adversary_checkpoint(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("adversary.bin")
    }

    pub fn adversary_curve(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("adversary_curve.csv")
    }

    pub fn attack_rows(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("attack_rows.csv")
    }

    pub fn transfer_rows(&self, id: &str, demos: usize) -> PathBuf {
        self.cell_dir(id, demos).join("transfer_rows.csv")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn attack_report(&self) -> PathBuf {
        self.reports_dir().join("attack.csv")
    }

    pub fn transfer_report(&self) -> PathBuf {
        self.reports_dir().join("transfer.csv")
    }

    pub fn crop_report(&self) -> PathBuf {
        self.reports_dir().join("crop.csv")
    }
}

fn require(path: PathBuf, what: &str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingInput(format!("{what} at {}", path.display())))
    }
}

fn load_victim(layout: &OutputLayout, id: &str) -> Result<Network, PipelineError> {
    Ok(load_checkpoint(&require(layout.victim_checkpoint(id), "victim checkpoint")?)?)
}

fn load_imitation(layout: &OutputLayout, id: &str, demos: usize) -> Result<Network, PipelineError> {
    Ok(load_checkpoint(&require(
        layout.imitation_checkpoint(id, demos),
        "imitation checkpoint",
    )?)?)
}

fn load_demo_set(
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<DemonstrationSet, PipelineError> {
    Ok(DemonstrationSet::load(&require(layout.demo_file(id, demos), "demonstration file")?)?)
}

fn curve_rows(curve: &TrainingCurve) -> Vec<ReportRow> {
    curve
        .records
        .iter()
        .map(|r| ReportRow::TrainingCurve { episode: r.episode, steps: r.steps, ret: r.ret })
        .collect()
}

/// The exact DQN configuration the train-target stage uses for a roster
/// victim: the template with seeds derived from the master seed and the
/// victim's roster seed.
pub fn victim_dqn_config(cfg: &ExperimentConfig, victim: &VictimSpec) -> crate::dqn::DqnConfig {
    let stage_seed = derive_seed(cfg.master_seed, &["train-target", &victim.id]);
    let mut dqn = cfg.victim_dqn.clone();
    dqn.seed = mix(stage_seed, victim.seed);
    dqn.spec = NetworkSpec::new(victim.layer_sizes.clone(), mix(dqn.seed, 0x11));
    dqn
}

fn body_train_target(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    victim: &VictimSpec,
) -> Result<(), PipelineError> {
    let dqn = victim_dqn_config(cfg, victim);
    let (net, curve) = train_dqn(&dqn)?;
    std::fs::create_dir_all(layout.victim_dir(&victim.id))?;
    save_checkpoint(&layout.victim_checkpoint(&victim.id), &net)?;
    emit_report(ReportKind::TrainingCurve, &curve_rows(&curve), &layout.victim_curve(&victim.id))?;
    let stats = evaluate_policy(
        &Policy::Greedy(net),
        cfg.eval.victim_episodes,
        derive_seed(cfg.master_seed, &["victim-eval", &victim.id]),
    );
    log::info!(
        "victim {}: eval mean {:.1} (min {:.0}, max {:.0}) over {} episodes",
        victim.id,
        stats.mean,
        stats.min,
        stats.max,
        stats.returns.len()
    );
    Ok(())
}

fn body_collect_demos(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let victim = Policy::Greedy(load_victim(layout, id)?);
    let seed = derive_seed(cfg.master_seed, &["collect-demos", id, &demos.to_string()]);
    let set = collect_demonstrations(&victim, demos, seed);
    std::fs::create_dir_all(layout.cell_dir(id, demos))?;
    set.save(&layout.demo_file(id, demos))?;
    Ok(())
}

fn body_imitate(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let set = load_demo_set(layout, id, demos)?;
    let mut dqfd = cfg.dqfd.clone();
    dqfd.seed = derive_seed(cfg.master_seed, &["imitate", id, &demos.to_string()]);
    dqfd.spec.seed = mix(dqfd.seed, 0xD);
    let (replica, log) = dqfd_train(&set, &dqfd)?;
    save_checkpoint(&layout.imitation_checkpoint(id, demos), &replica)?;
    let rows: Vec<ReportRow> = log
        .records
        .iter()
        .map(|r| ReportRow::ImitationLog { step: r.step, loss: r.loss, agreement: r.agreement })
        .collect();
    emit_report(ReportKind::ImitationLog, &rows, &layout.imitation_log(id, demos))?;
    if let Some(last) = log.records.last() {
        log::info!(
            "imitate {id}/{demos}: final loss {:.4}, demo agreement {:.3}",
            last.loss,
            last.agreement
        );
    }
    Ok(())
}

fn body_attack_train(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let victim = Policy::Greedy(load_victim(layout, id)?);
    let q_tilde = load_imitation(layout, id, demos)?;
    let mut adv = cfg.adversary.clone();
    adv.dqn.seed = derive_seed(cfg.master_seed, &["attack-train", id, &demos.to_string()]);
    adv.dqn.spec.seed = mix(adv.dqn.seed, 0x11);
    let (net, curve) = train_adversary(&victim, &q_tilde, &adv)?;
    save_checkpoint(&layout.adversary_checkpoint(id, demos), &net)?;
    emit_report(ReportKind::TrainingCurve, &curve_rows(&curve), &layout.adversary_curve(id, demos))?;
    Ok(())
}

fn body_attack_eval(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let victim = Policy::Greedy(load_victim(layout, id)?);
    let q_tilde = load_imitation(layout, id, demos)?;
    let adversary = load_checkpoint(&require(
        layout.adversary_checkpoint(id, demos),
        "adversary checkpoint",
    )?)?;
    let seed = derive_seed(cfg.master_seed, &["attack-eval", id, &demos.to_string()]);
    let report = evaluate_attack(
        &adversary,
        &victim,
        &q_tilde,
        cfg.eval.attack_episodes,
        &cfg.adversary,
        seed,
    );
    let mut rows: Vec<ReportRow> = report
        .episodes
        .iter()
        .enumerate()
        .map(|(i, e)| ReportRow::Attack {
            victim_id: id.to_string(),
            demo_count: demos,
            episode: RowIndex::Episode(i),
            regret: e.regret,
            perturbations: e.perturbations as f64,
        })
        .collect();
    rows.push(ReportRow::Attack {
        victim_id: id.to_string(),
        demo_count: demos,
        episode: RowIndex::Mean,
        regret: report.mean_regret,
        perturbations: report.mean_perturbations,
    });
    emit_report(ReportKind::Attack, &rows, &layout.attack_rows(id, demos))?;
    log::info!(
        "attack-eval {id}/{demos}: mean regret {:.1}, mean perturbations {:.2}",
        report.mean_regret,
        report.mean_perturbations
    );
    Ok(())
}

fn body_transfer_eval(
    cfg: &ExperimentConfig,
    layout: &OutputLayout,
    id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let victim = Policy::Greedy(load_victim(layout, id)?);
    let q_tilde = load_imitation(layout, id, demos)?;
    let seed = derive_seed(cfg.master_seed, &["transfer-eval", id, &demos.to_string()]);
    let report =
        run_transfer_eval(&victim, &q_tilde, cfg.eval.transfer_episodes, &cfg.fgsm, seed);
    let mut rows: Vec<ReportRow> = report
        .episodes
        .iter()
        .enumerate()
        .map(|(i, e)| ReportRow::Transfer {
            victim_id: id.to_string(),
            demo_count: demos,
            episode: RowIndex::Episode(i),
            crafted: e.crafted as f64,
            transferred: e.transferred as f64,
        })
        .collect();
    rows.push(ReportRow::Transfer {
        victim_id: id.to_string(),
        demo_count: demos,
        episode: RowIndex::Mean,
        crafted: report.mean_crafted,
        transferred: report.mean_transferred,
    });
    emit_report(ReportKind::Transfer, &rows, &layout.transfer_rows(id, demos))?;
    log::info!(
        "transfer-eval {id}/{demos}: mean crafted {:.1}, mean transferred {:.1}",
        report.mean_crafted,
        report.mean_transferred
    );
    Ok(())
}

fn body_crop_eval(cfg: &ExperimentConfig, layout: &OutputLayout) -> Result<(), PipelineError> {
    let id = &cfg.crop.victim;
    let victim = load_victim(layout, id)?;
    let protocol = CropEvalProtocol {
        demo_count: cfg.crop.demo_count,
        dqfd: cfg.dqfd.clone(),
        fgsm: cfg.fgsm,
        return_episodes: cfg.crop.return_episodes,
        transfer_episodes: cfg.crop.transfer_episodes,
        agreement_states: cfg.crop.agreement_states,
    };
    let seed = derive_seed(cfg.master_seed, &["crop-eval", id]);
    let report = evaluate_crop(&victim, &cfg.crop.sweep, &protocol, seed)?;
    let rows: Vec<ReportRow> = report
        .rows
        .iter()
        .map(|r| ReportRow::Crop {
            omega: r.omega,
            mean_return: r.mean_return,
            imitation_agreement: r.imitation_agreement,
            mean_transfers: r.mean_transfers,
        })
        .collect();
    std::fs::create_dir_all(layout.reports_dir())?;
    emit_report(ReportKind::Crop, &rows, &layout.crop_report())?;
    Ok(())
}

/// Concatenates per-cell row files (in roster order) under a single header.
fn combine_cell_reports(
    header: &str,
    cells: &[PathBuf],
    out: &Path,
) -> Result<(), PipelineError> {
    let mut text = String::from(header);
    text.push('\n');
    for cell in cells {
        let cell_text = std::fs::read_to_string(cell)?;
        for line in cell_text.lines().skip(1) {
            text.push_str(line);
            text.push('\n');
        }
    }
    std::fs::write(out, text)?;
    Ok(())
}

fn run_stage(
    manifest: &mut RunManifest,
    previous: Option<&RunManifest>,
    key: &str,
    outputs: &[PathBuf],
    deps_ok: bool,
    reusable: bool,
    body: impl FnOnce() -> Result<(), PipelineError>,
) -> bool {
    if !deps_ok {
        log::warn!("stage {key}: skipped, upstream failure");
        manifest.record(
            key,
            StageRecord { status: StageStatus::SkippedUpstreamFailure, seconds: 0.0, error: None },
        );
        return false;
    }
    if reusable
        && previous.is_some_and(|p| p.stage_ok(key))
        && outputs.iter().all(|p| p.exists())
    {
        log::info!("stage {key}: outputs up to date, skipping");
        manifest
            .record(key, StageRecord { status: StageStatus::Skipped, seconds: 0.0, error: None });
        return true;
    }
    let start = Instant::now();
    match body() {
        Ok(()) => {
            let seconds = start.elapsed().as_secs_f64();
            log::info!("stage {key}: completed in {seconds:.1}s");
            manifest.record(key, StageRecord { status: StageStatus::Completed, seconds, error: None });
            true
        }
        Err(e) => {
            let seconds = start.elapsed().as_secs_f64();
            log::error!("stage {key}: failed after {seconds:.1}s: {e}");
            manifest.record(
                key,
                StageRecord { status: StageStatus::Failed, seconds, error: Some(e.to_string()) },
            );
            false
        }
    }
}

/// Runs every stage for every (victim x demo count) cell, skipping stages
/// whose outputs already exist under the same config hash. Stage failures
/// are recorded in the manifest and skip that cell's dependents; other cells
/// continue.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let layout = OutputLayout::new(cfg.output_dir.clone());
    std::fs::create_dir_all(layout.root())?;
    std::fs::create_dir_all(layout.reports_dir())?;
    let hash = cfg.config_hash();
    let previous = RunManifest::load(&layout.manifest()).ok().filter(|m| m.config_hash == hash);
    if previous.is_some() {
        log::info!("found manifest with matching config hash; reusing completed stages");
    }
    let mut manifest = RunManifest::new(hash);
    let prev = previous.as_ref();

    let mut attack_cells = Vec::new();
    let mut transfer_cells = Vec::new();

    for victim in &cfg.victims {
        let id = &victim.id;
        let train_key = format!("train-target/{id}");
        let victim_ok = run_stage(
            &mut manifest,
            prev,
            &train_key,
            &[layout.victim_checkpoint(id), layout.victim_curve(id)],
            true,
            true,
            || body_train_target(cfg, &layout, victim),
        );
        manifest
            .artifacts
            .insert(format!("victim/{id}"), layout.victim_checkpoint(id).display().to_string());

        for &demos in &cfg.demo_counts {
            let cell = format!("{id}/{demos}");
            let collect_ok = run_stage(
                &mut manifest,
                prev,
                &format!("collect-demos/{cell}"),
                &[layout.demo_file(id, demos)],
                victim_ok,
                true,
                || body_collect_demos(cfg, &layout, id, demos),
            );
            let imitate_ok = run_stage(
                &mut manifest,
                prev,
                &format!("imitate/{cell}"),
                &[layout.imitation_checkpoint(id, demos), layout.imitation_log(id, demos)],
                collect_ok,
                true,
                || body_imitate(cfg, &layout, id, demos),
            );
            let attack_train_ok = run_stage(
                &mut manifest,
                prev,
                &format!("attack-train/{cell}"),
                &[layout.adversary_checkpoint(id, demos), layout.adversary_curve(id, demos)],
                imitate_ok,
                true,
                || body_attack_train(cfg, &layout, id, demos),
            );
            let attack_eval_ok = run_stage(
                &mut manifest,
                prev,
                &format!("attack-eval/{cell}"),
                &[layout.attack_rows(id, demos)],
                attack_train_ok,
                true,
                || body_attack_eval(cfg, &layout, id, demos),
            );
            let transfer_ok = run_stage(
                &mut manifest,
                prev,
                &format!("transfer-eval/{cell}"),
                &[layout.transfer_rows(id, demos)],
                imitate_ok,
                true,
                || body_transfer_eval(cfg, &layout, id, demos),
            );
            if attack_eval_ok {
                attack_cells.push(layout.attack_rows(id, demos));
                manifest.artifacts.insert(
                    format!("attack-rows/{cell}"),
                    layout.attack_rows(id, demos).display().to_string(),
                );
            }
            if transfer_ok {
                transfer_cells.push(layout.transfer_rows(id, demos));
                manifest.artifacts.insert(
                    format!("transfer-rows/{cell}"),
                    layout.transfer_rows(id, demos).display().to_string(),
                );
            }
            manifest
                .artifacts
                .insert(format!("demos/{cell}"), layout.demo_file(id, demos).display().to_string());
            manifest.artifacts.insert(
                format!("imitation/{cell}"),
                layout.imitation_checkpoint(id, demos).display().to_string(),
            );
        }
    }

    let crop_dep = manifest.stage_ok(&format!("train-target/{}", cfg.crop.victim));
    run_stage(
        &mut manifest,
        prev,
        &format!("crop-eval/{}", cfg.crop.victim),
        &[layout.crop_report()],
        crop_dep,
        true,
        || body_crop_eval(cfg, &layout),
    );
    manifest
        .artifacts
        .insert("report/crop".into(), layout.crop_report().display().to_string());

    // Combined tables are cheap and regenerate every run so they always
    // reflect the current set of successful cells.
    run_stage(&mut manifest, prev, "report/attack", &[], true, false, || {
        combine_cell_reports(ReportKind::Attack.header(), &attack_cells, &layout.attack_report())
    });
    run_stage(&mut manifest, prev, "report/transfer", &[], true, false, || {
        combine_cell_reports(
            ReportKind::Transfer.header(),
            &transfer_cells,
            &layout.transfer_report(),
        )
    });
    manifest
        .artifacts
        .insert("report/attack".into(), layout.attack_report().display().to_string());
    manifest
        .artifacts
        .insert("report/transfer".into(), layout.transfer_report().display().to_string());

    manifest.save(&layout.manifest())?;
    Ok(manifest)
}

fn prepared_layout(cfg: &ExperimentConfig) -> Result<OutputLayout, PipelineError> {
    cfg.validate()?;
    let layout = OutputLayout::new(cfg.output_dir.clone());
    std::fs::create_dir_all(layout.root())?;
    Ok(layout)
}

fn known_victim<'a>(cfg: &'a ExperimentConfig, id: &str) -> Result<&'a VictimSpec, PipelineError> {
    cfg.victim(id).ok_or_else(|| PipelineError::UnknownVictim(id.to_string()))
}

/// Single-stage entry points for the CLI; these always execute.
pub fn stage_train_target(cfg: &ExperimentConfig, victim_id: &str) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    body_train_target(cfg, &layout, known_victim(cfg, victim_id)?)
}

pub fn stage_collect_demos(
    cfg: &ExperimentConfig,
    victim_id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    known_victim(cfg, victim_id)?;
    body_collect_demos(cfg, &layout, victim_id, demos)
}

pub fn stage_imitate(
    cfg: &ExperimentConfig,
    victim_id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    known_victim(cfg, victim_id)?;
    body_imitate(cfg, &layout, victim_id, demos)
}

pub fn stage_attack_train(
    cfg: &ExperimentConfig,
    victim_id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    known_victim(cfg, victim_id)?;
    body_attack_train(cfg, &layout, victim_id, demos)
}

pub fn stage_attack_eval(
    cfg: &ExperimentConfig,
    victim_id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    known_victim(cfg, victim_id)?;
    body_attack_eval(cfg, &layout, victim_id, demos)
}

pub fn stage_transfer_eval(
    cfg: &ExperimentConfig,
    victim_id: &str,
    demos: usize,
) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    known_victim(cfg, victim_id)?;
    body_transfer_eval(cfg, &layout, victim_id, demos)
}

pub fn stage_crop_eval(cfg: &ExperimentConfig) -> Result<(), PipelineError> {
    let layout = prepared_layout(cfg)?;
    body_crop_eval(cfg, &layout)
}
