use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use rltrack::agents::train::{write_progress_row, PROGRESS_HEADER};
use rltrack::agents::{grid_sweep, default_grid, Agent, GridAxis, Policy, Trainer};
use rltrack::env::io::{load_s1, save_s1, write_termination_csv};
use rltrack::env::{
    baseline_track, replay_asr, seed_batch, Actor, Episode, Noise, StreamlineBatch, Subject, TrackingConfig,
    TrackingEnv,
};
use rltrack::nn::Checkpoint;
use rltrack::rng::{derive_seed, substream};
use rltrack::scoring::{polyline_length, score, write_scores_csv, GroundTruth, ScoreReport};
use rltrack::volume::{generate_phantom, Phantom, PhantomSpec};
use rltrack::Vec3;
use serde::{Deserialize, Serialize};

use crate::config::{read_toml, ResolvedConfig, RunConfig};
use crate::dataset::{load_phantom, phantom_or_desk, save_phantom};

const STREAM_TRACK_POOL: u64 = 10;
const STREAM_TRACK_EPISODE: u64 = 11;

pub const CONFIG_FILE: &str = "config.toml";
pub const PROGRESS_FILE: &str = "progress.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "agent.ckpt";
pub const TRACTOGRAM_FILE: &str = "tractogram.s1";
pub const TERMINATION_FILE: &str = "termination.csv";
pub const SCORES_JSON: &str = "scores.json";
pub const SCORES_CSV: &str = "scores.csv";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn subject_env(ph: &Phantom, cfg: &TrackingConfig, reward: rltrack::env::RewardConfig) -> Result<TrackingEnv> {
    let subject = Arc::new(Subject::from_phantom(ph, cfg.signal_kind));
    Ok(TrackingEnv::new(subject, cfg.clone(), reward)?)
}

/// Tracks the full seed pool of `env` with `actor` and drops streamlines
/// outside `[min_len, max_len]`.
fn track_pool(env: &TrackingEnv, actor: &dyn Actor, seed: u64, min_len: f64, max_len: f64) -> Result<TrackOutput> {
    let pool = seed_batch(env.subject(), env.config(), &mut substream(seed, &[STREAM_TRACK_POOL]))?;
    let (batch, _) = Episode::new(env, &pool, derive_seed(seed, &[STREAM_TRACK_EPISODE])).track(actor);
    Ok(TrackOutput::new(batch, min_len, max_len))
}

struct TrackOutput {
    batch: StreamlineBatch,
    kept: Vec<Vec<Vec3>>,
}

impl TrackOutput {
    fn new(batch: StreamlineBatch, min_len: f64, max_len: f64) -> Self {
        let kept = batch
            .tractogram()
            .into_iter()
            .filter(|s| {
                let l = polyline_length(s);
                l >= min_len && l <= max_len
            })
            .collect();
        Self { batch, kept }
    }

    fn write(&self, out: &Path) -> Result<()> {
        save_s1(&out.join(TRACTOGRAM_FILE), &self.kept)?;
        let mut w = create(&out.join(TERMINATION_FILE))?;
        write_termination_csv(&mut w, &self.batch.termination_histogram())?;
        w.flush()?;
        Ok(())
    }
}

fn write_scores(out: &Path, report: &ScoreReport) -> Result<()> {
    let mut w = create(&out.join(SCORES_JSON))?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    let mut w = create(&out.join(SCORES_CSV))?;
    write_scores_csv(&mut w, report)?;
    w.flush()?;
    Ok(())
}

pub fn phantom(config: Option<&Path>, out: &Path) -> Result<()> {
    let spec: PhantomSpec = match config {
        Some(p) => read_toml(p)?,
        None => PhantomSpec::desk(),
    };
    let ph = generate_phantom(&spec)?;
    save_phantom(out, &spec, &ph)?;
    println!("phantom with {} bundles written to {}", ph.bundles.len(), out.display());
    Ok(())
}

fn checkpoint_meta(cfg: &ResolvedConfig, ph: &Phantom, episode: usize) -> serde_json::Value {
    serde_json::json!({
        "seed": cfg.seed,
        "episode": episode,
        "tracking": cfg.tracking,
        "voxel_size": ph.fodf.affine().mean_voxel_size(),
    })
}

fn train_resolved(cfg: &ResolvedConfig) -> Result<Box<dyn Agent>> {
    let out = &cfg.out;
    create_dir(&out.join(CHECKPOINT_DIR))?;
    cfg.write(&out.join(CONFIG_FILE))?;
    let ph = phantom_or_desk(cfg.data.phantom.as_deref())?;
    let env = subject_env(&ph, &cfg.tracking, cfg.reward)?;
    let mut trainer = Trainer::new(&env, cfg.algorithm, &cfg.hyperparams, cfg.train.clone(), cfg.seed)?;
    let mut progress = create(&out.join(PROGRESS_FILE))?;
    writeln!(progress, "# seed={} algorithm={}", cfg.seed, cfg.algorithm)?;
    writeln!(progress, "{PROGRESS_HEADER}")?;
    while !trainer.is_done() {
        let row = trainer.run_episode()?;
        write_progress_row(&mut progress, &row)?;
        progress.flush()?;
        if trainer.checkpoint_due() {
            let ck = trainer.agent().checkpoint(checkpoint_meta(cfg, &ph, row.episode));
            ck.save(&out.join(CHECKPOINT_DIR).join(format!("episode_{:06}.ckpt", row.episode)))?;
        }
    }
    let agent = trainer.into_agent();
    agent.checkpoint(checkpoint_meta(cfg, &ph, cfg.train.episodes)).save(&out.join(FINAL_CHECKPOINT))?;
    Ok(agent)
}

pub fn train(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?.resolve(seed, out)?;
    train_resolved(&cfg)?;
    println!("trained {} for {} episodes; outputs in {}", cfg.algorithm, cfg.train.episodes, cfg.out.display());
    Ok(())
}

/// Everything `track` resolved from its flags and the checkpoint.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackRecord {
    seed: u64,
    checkpoint: PathBuf,
    phantom: PathBuf,
    training_voxel_size: f64,
    target_voxel_size: f64,
    min_length: f64,
    max_length: f64,
    tracking: TrackingConfig,
}

pub struct TrackArgs<'a> {
    pub checkpoint: &'a Path,
    pub phantom: &'a Path,
    pub npv: Option<usize>,
    pub step: Option<f64>,
    pub min_length: Option<f64>,
    pub max_length: Option<f64>,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn track(a: TrackArgs<'_>) -> Result<()> {
    if a.npv == Some(0) {
        bail!("invalid config: --npv must be > 0");
    }
    let ck = Checkpoint::load(a.checkpoint).with_context(|| format!("cannot load {}", a.checkpoint.display()))?;
    let policy = Policy::from_checkpoint(&ck)?;
    let meta = &ck.meta;
    let mut cfg: TrackingConfig = match meta.get("tracking") {
        Some(v) => serde_json::from_value(v.clone()).context("checkpoint has an invalid tracking config")?,
        None => TrackingConfig::default(),
    };
    let ph = load_phantom(a.phantom)?;
    let target_voxel = ph.fodf.affine().mean_voxel_size();
    let train_voxel = meta.get("voxel_size").and_then(|v| v.as_f64()).unwrap_or(target_voxel);
    cfg.step_size = a.step.unwrap_or_else(|| TrackingConfig::rescaled_step(cfg.step_size, train_voxel, target_voxel));
    cfg.noise = Noise::None;
    if let Some(n) = a.npv {
        cfg.seeds_per_voxel = n;
    }
    let min_length = a.min_length.unwrap_or(cfg.min_length);
    let max_length = a.max_length.unwrap_or(cfg.max_length);
    cfg.min_length = min_length;
    cfg.max_length = max_length;
    cfg.validate()?;
    let env = subject_env(&ph, &cfg, Default::default())?;
    ensure!(
        env.state_dim() == policy.net.input_dim(),
        "shape mismatch: policy expects {} state features, the volumes give {}",
        policy.net.input_dim(),
        env.state_dim()
    );
    create_dir(a.out)?;
    let record = TrackRecord {
        seed: a.seed,
        checkpoint: a.checkpoint.to_path_buf(),
        phantom: a.phantom.to_path_buf(),
        training_voxel_size: train_voxel,
        target_voxel_size: target_voxel,
        min_length,
        max_length,
        tracking: cfg,
    };
    fs::write(a.out.join(CONFIG_FILE), toml::to_string(&record)?)?;
    let out = track_pool(&env, &policy, a.seed, min_length, max_length)?;
    out.write(a.out)?;
    println!(
        "tracked {} seeds, kept {} streamlines (step {} mm); outputs in {}",
        out.batch.len(),
        out.kept.len(),
        record.tracking.step_size,
        a.out.display()
    );
    Ok(())
}

pub fn score_cmd(tractogram: &Path, phantom: &Path, min_len: f64, max_len: f64, out: &Path) -> Result<()> {
    let t = load_s1(tractogram).with_context(|| format!("cannot load {}", tractogram.display()))?;
    let ph = load_phantom(phantom)?;
    let gt = GroundTruth::from_phantom(&ph, min_len, max_len)?;
    let report = score(&t, &gt)?;
    create_dir(out)?;
    write_scores(out, &report)?;
    println!(
        "vc {:.4} ic {:.4} nc {:.4} vb {} ib {} ol {:.4} or {:.4} f1 {:.4}",
        report.vc_rate, report.ic_rate, report.nc_rate, report.vb, report.ib, report.mean_ol, report.mean_or, report.mean_f1
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct BaselineSummary {
    seed: u64,
    streamlines: usize,
    kept: usize,
    /// Replayed average summed reward per kept streamline.
    asr: f64,
}

pub fn baseline(
    phantom: Option<&Path>,
    config: Option<&Path>,
    npv: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    if npv == Some(0) {
        bail!("invalid config: --npv must be > 0");
    }
    let run = RunConfig::load(config)?;
    let mut cfg = run.tracking.clone();
    if let Some(n) = npv {
        cfg.seeds_per_voxel = n;
    }
    cfg.validate()?;
    let seed = seed.or(run.seed).unwrap_or(0);
    let ph = phantom_or_desk(phantom.or(run.data.phantom.as_deref()))?;
    let env = subject_env(&ph, &cfg, run.reward)?;
    let pool = seed_batch(env.subject(), env.config(), &mut substream(seed, &[STREAM_TRACK_POOL]))?;
    let (batch, _) = baseline_track(&env, &pool, derive_seed(seed, &[STREAM_TRACK_EPISODE]))?;
    let output = TrackOutput::new(batch, cfg.min_length, cfg.max_length);
    create_dir(out)?;
    output.write(out)?;
    let summary = BaselineSummary {
        seed,
        streamlines: output.batch.len(),
        kept: output.kept.len(),
        asr: replay_asr(&env, &output.kept),
    };
    fs::write(out.join("baseline.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let gt = GroundTruth::from_phantom(&ph, cfg.min_length, cfg.max_length)?;
    if let Ok(report) = score(&output.kept, &gt) {
        write_scores(out, &report)?;
        println!("baseline: {} streamlines, asr {:.3}, vc {:.4}, vb {}", summary.kept, summary.asr, report.vc_rate, report.vb);
    }
    Ok(())
}

/// Grid file: either explicit axes or the algorithm's default grid.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub standard: bool,
    #[serde(default)]
    pub axes: Vec<GridAxis>,
}

pub fn sweep(config: Option<&Path>, grid: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let base = RunConfig::load(config)?.resolve(seed, out)?;
    let grid: GridFile = read_toml(grid)?;
    let axes = if grid.standard { default_grid(base.algorithm) } else { grid.axes };
    ensure!(!axes.is_empty(), "invalid config: the grid has no axes");
    create_dir(&base.out)?;
    base.write(&base.out.join(CONFIG_FILE))?;
    let ph = phantom_or_desk(base.data.phantom.as_deref())?;
    let gt = GroundTruth::from_phantom(&ph, base.evaluation.min_length, base.evaluation.max_length)?;
    let result = grid_sweep(&base.hyperparams, &axes, |i, hp| {
        let cell = ResolvedConfig { hyperparams: hp.clone(), out: base.out.join(format!("cell_{i:03}")), ..base.clone() };
        let agent = train_resolved(&cell).map_err(|e| rltrack::Error::InvalidConfig(format!("{e:#}")))?;
        let vc_ol = evaluate(&cell, &ph, &gt, agent.policy()).map_err(|e| rltrack::Error::InvalidConfig(format!("{e:#}")))?;
        println!("cell {i}: vc {:.4} ol {:.4}", vc_ol.0, vc_ol.1);
        Ok(vc_ol)
    })?;
    let mut w = create(&base.out.join("sweep.csv"))?;
    writeln!(w, "# seed={} algorithm={}", base.seed, base.algorithm)?;
    let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    writeln!(w, "cell,{},vc_rate,ol", names.join(","))?;
    for (i, e) in result.entries.iter().enumerate() {
        let hp = toml::Table::try_from(&e.hyperparams)?;
        let vals: Vec<String> = names.iter().map(|n| hp.get(*n).map(|v| v.to_string()).unwrap_or_default()).collect();
        writeln!(w, "{i},{},{},{}", vals.join(","), e.vc_rate, e.ol)?;
    }
    w.flush()?;
    let best = ResolvedConfig { hyperparams: result.best_entry().hyperparams.clone(), ..base.clone() };
    best.write(&base.out.join("best.toml"))?;
    println!("best cell {} (vc {:.4}, ol {:.4})", result.best, result.best_entry().vc_rate, result.best_entry().ol);
    Ok(())
}

/// Greedy tracking at the evaluation density, scored against ground truth.
fn evaluate(cfg: &ResolvedConfig, ph: &Phantom, gt: &GroundTruth, policy: &Policy) -> Result<(f64, f64)> {
    let mut tc = cfg.tracking.clone();
    tc.noise = Noise::None;
    tc.seeds_per_voxel = cfg.evaluation.seeds_per_voxel;
    let env = subject_env(ph, &tc, cfg.reward)?;
    let ev = &cfg.evaluation;
    let out = track_pool(&env, policy, cfg.seed, ev.min_length, ev.max_length)?;
    out.write(&cfg.out)?;
    Ok(match score(&out.kept, gt) {
        Ok(r) => {
            write_scores(&cfg.out, &r)?;
            (r.vc_rate, r.mean_ol)
        }
        Err(rltrack::Error::EmptyTractogram) => (0.0, 0.0),
        Err(e) => return Err(e.into()),
    })
}
