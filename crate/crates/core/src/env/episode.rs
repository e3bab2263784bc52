use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::env::config::{Noise, Seeding};
use crate::env::streamline::{Phase, Status, Streamline, StreamlineBatch, TransitionBatch};
use crate::env::tracker::{scale_action, TerminationReason, TrackingEnv};
use crate::rng::{substream, Rng};
use crate::Vec3;

/// Directions of the reversed forward half handed to backward tracking when
/// retracking is off.
pub const NO_RETRACK_HISTORY: usize = 4;

/// What an actor sees for the active streamlines of one step, row-aligned.
pub struct Observation<'a> {
    pub states: ArrayView2<'a, f32>,
    pub tips: &'a [Vec3],
    pub prev_dirs: &'a [Option<Vec3>],
}

impl Observation<'_> {
    pub fn len(&self) -> usize {
        self.tips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tips.is_empty()
    }
}

/// Maps observations to raw 3-vector actions, one per row.
///
/// `rngs[i]` is a generator private to row `i` for this step.
pub trait Actor: Sync {
    fn act(&self, obs: &Observation<'_>, rngs: &mut [Rng]) -> Vec<Vec3>;
}

impl<F> Actor for F
where
    F: Fn(&Observation<'_>, &mut [Rng]) -> Vec<Vec3> + Sync,
{
    fn act(&self, obs: &Observation<'_>, rngs: &mut [Rng]) -> Vec<Vec3> {
        self(obs, rngs)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeStats {
    pub steps: usize,
    /// Actions too short to define a direction; each stopped its streamline.
    pub degenerate_actions: usize,
    /// First steps reversed under interface seeding.
    pub first_step_flips: usize,
}

#[derive(Debug, Clone, Default)]
struct Context {
    /// Directions seen by the agent, oldest first.
    dirs: Vec<Vec3>,
    cached_state: Option<Vec<f32>>,
}

struct StepOut {
    action: [f32; 3],
    reward: f64,
    next_state: Vec<f32>,
    done: bool,
    truncated: bool,
    trajectory: u32,
    degenerate: bool,
    flipped: bool,
}

/// One batched tracking episode that can be advanced step by step.
pub struct Episode<'a> {
    env: &'a TrackingEnv,
    seed: u64,
    lines: Vec<Streamline>,
    ctx: Vec<Context>,
    stage: u64,
    step_in_stage: u64,
    finished: bool,
    stats: EpisodeStats,
}

impl<'a> Episode<'a> {
    pub fn new(env: &'a TrackingEnv, seeds: &[Vec3], seed: u64) -> Self {
        let batch = StreamlineBatch::from_seeds(seeds);
        Self {
            env,
            seed,
            ctx: vec![Context::default(); seeds.len()],
            lines: batch.streamlines,
            stage: 0,
            step_in_stage: 0,
            finished: seeds.is_empty(),
            stats: EpisodeStats::default(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn stats(&self) -> EpisodeStats {
        self.stats
    }

    pub fn streamlines(&self) -> &[Streamline] {
        &self.lines
    }

    /// Advances every active streamline by one action and returns the
    /// transitions produced.
    pub fn step(&mut self, actor: &dyn Actor) -> TransitionBatch {
        let env = self.env;
        let dim = env.state_dim();
        let mut out = TransitionBatch::new(dim);
        if self.finished {
            return out;
        }
        let active: Vec<usize> = (0..self.lines.len()).filter(|&i| self.lines[i].is_active()).collect();

        let rows: Vec<(Vec<f32>, Vec3, Option<Vec3>)> = active
            .par_iter()
            .map(|&i| {
                let (tip, hist) = position(&self.lines[i], &self.ctx[i]);
                let state = match &self.ctx[i].cached_state {
                    Some(s) => s.clone(),
                    None => env.assemble_state(&tip, hist),
                };
                (state, tip, hist.last().copied())
            })
            .collect();
        let mut states = Array2::<f32>::zeros((active.len(), dim));
        for (mut row, (s, _, _)) in states.rows_mut().into_iter().zip(&rows) {
            row.as_slice_mut().unwrap().copy_from_slice(s);
        }
        let tips: Vec<Vec3> = rows.iter().map(|r| r.1).collect();
        let prev: Vec<Option<Vec3>> = rows.iter().map(|r| r.2).collect();
        drop(rows);

        let (seed, stage, step) = (self.seed, self.stage, self.step_in_stage);
        let mut rngs: Vec<Rng> = active
            .iter()
            .map(|&i| substream(seed, &[stage, step, i as u64, 0]))
            .collect();
        let obs = Observation { states: states.view(), tips: &tips, prev_dirs: &prev };
        let actions = actor.act(&obs, &mut rngs);
        assert_eq!(actions.len(), active.len(), "actor returned the wrong number of actions");

        let mut slot = vec![usize::MAX; self.lines.len()];
        for (row, &i) in active.iter().enumerate() {
            slot[i] = row;
        }
        let results: Vec<StepOut> = self
            .lines
            .par_iter_mut()
            .zip(self.ctx.par_iter_mut())
            .enumerate()
            .filter(|(i, _)| slot[*i] != usize::MAX)
            .map(|(i, (line, ctx))| {
                let row = slot[i];
                let mut noise_rng = substream(seed, &[stage, step, i as u64, 1]);
                let state = states.row(row);
                advance(env, i, line, ctx, state.as_slice().unwrap(), actions[row], &mut noise_rng)
            })
            .collect();

        for (row, r) in results.into_iter().enumerate() {
            self.stats.degenerate_actions += r.degenerate as usize;
            self.stats.first_step_flips += r.flipped as usize;
            out.push(
                states.row(row).as_slice().unwrap(),
                r.action,
                r.reward,
                &r.next_state,
                r.done,
                r.truncated,
                r.trajectory,
            );
        }
        self.stats.steps += 1;
        self.step_in_stage += 1;
        if self.lines.iter().all(|l| !l.is_active()) {
            self.end_stage();
        }
        out
    }

    fn end_stage(&mut self) {
        let cfg = self.env.config();
        if self.stage > 0 || cfg.seeding == Seeding::Interface {
            self.finished = true;
            return;
        }
        for (line, ctx) in self.lines.iter_mut().zip(&mut self.ctx) {
            line.forward_reason = line.reason();
            line.forward_points = line.points.len();
            line.flip();
            line.status = Status::Active;
            ctx.cached_state = None;
            if cfg.retracking {
                ctx.dirs = line.dirs.clone();
                line.retrack_cursor = 0;
                line.phase = if line.points.len() > 1 { Phase::Retrack } else { Phase::Backward };
            } else {
                let n = line.dirs.len().min(NO_RETRACK_HISTORY);
                ctx.dirs = line.dirs[..n].to_vec();
                line.phase = Phase::Backward;
            }
        }
        self.stage = 1;
        self.step_in_stage = 0;
    }

    /// Runs to completion, keeping every transition.
    pub fn run(mut self, actor: &dyn Actor) -> Rollout {
        let mut transitions = TransitionBatch::new(self.env.state_dim());
        while !self.finished {
            transitions.extend(&self.step(actor));
        }
        let stats = self.stats;
        Rollout {
            streamlines: self.into_batch(),
            transitions: transitions.sorted_by_trajectory(),
            stats,
        }
    }

    /// Runs to completion, dropping transitions.
    pub fn track(mut self, actor: &dyn Actor) -> (StreamlineBatch, EpisodeStats) {
        while !self.finished {
            self.step(actor);
        }
        let stats = self.stats;
        (self.into_batch(), stats)
    }

    pub fn into_batch(self) -> StreamlineBatch {
        StreamlineBatch { streamlines: self.lines }
    }
}

/// Result of a full episode; transitions are grouped per half-streamline.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub streamlines: StreamlineBatch,
    pub transitions: TransitionBatch,
    pub stats: EpisodeStats,
}

pub fn rollout_episode(env: &TrackingEnv, actor: &dyn Actor, seeds: &[Vec3], seed: u64) -> Rollout {
    Episode::new(env, seeds, seed).run(actor)
}

/// Tip and direction history the agent acts from.
fn position<'c>(line: &Streamline, ctx: &'c Context) -> (Vec3, &'c [Vec3]) {
    match line.phase {
        Phase::Retrack => (line.points[line.retrack_cursor], &ctx.dirs[..line.retrack_cursor]),
        _ => (*line.tip(), &ctx.dirs[..]),
    }
}

fn advance(
    env: &TrackingEnv,
    index: usize,
    line: &mut Streamline,
    ctx: &mut Context,
    state: &[f32],
    action: Vec3,
    noise_rng: &mut Rng,
) -> StepOut {
    let cfg = env.config();
    let trajectory = 2 * index as u32 + u32::from(line.phase != Phase::Forward);
    let (tip, _) = position(line, ctx);
    let mut a = action;
    if let Noise::FaScaled { sigma0 } = cfg.noise {
        let sigma = sigma0 * env.fa_at(&tip);
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).expect("finite sigma");
            a += Vec3::new(n.sample(noise_rng), n.sample(noise_rng), n.sample(noise_rng));
        }
    }

    let Some(mut delta) = scale_action(&a, cfg.step_size) else {
        line.status = Status::Stopped(TerminationReason::AngleExceeded);
        ctx.cached_state = None;
        return StepOut {
            action: to_f32(&a),
            reward: 0.0,
            next_state: state.to_vec(),
            done: true,
            truncated: false,
            trajectory,
            degenerate: true,
            flipped: false,
        };
    };

    if line.phase == Phase::Retrack {
        let c = line.retrack_cursor;
        let u = delta / cfg.step_size;
        let reward = env.reward(&tip, &u, ctx.dirs[..c].last(), false, c + 1);
        line.retrack_cursor += 1;
        if line.retrack_cursor + 1 >= line.points.len() {
            line.phase = Phase::Backward;
        }
        let (next_tip, hist) = position(line, ctx);
        let next_state = env.assemble_state(&next_tip, hist);
        ctx.cached_state = Some(next_state.clone());
        return StepOut {
            action: to_f32(&a),
            reward,
            next_state,
            done: false,
            truncated: false,
            trajectory,
            degenerate: false,
            flipped: false,
        };
    }

    let segments_after = line.dirs.len() + 1;
    let mut u = delta / cfg.step_size;
    let mut new_tip = tip + delta;
    let mut reason = env.check_termination(&new_tip, &u, &ctx.dirs, segments_after);
    let mut flipped = false;
    if cfg.seeding == Seeding::Interface
        && line.phase == Phase::Forward
        && line.dirs.is_empty()
        && matches!(reason, Some(TerminationReason::ExitedMask | TerminationReason::ReachedGm))
    {
        a = -a;
        delta = -delta;
        u = -u;
        new_tip = tip + delta;
        reason = env.check_termination(&new_tip, &u, &ctx.dirs, segments_after);
        flipped = true;
    }
    let reward = env.reward(&tip, &u, ctx.dirs.last(), reason == Some(TerminationReason::ReachedGm), segments_after);
    line.points.push(new_tip);
    line.dirs.push(u);
    ctx.dirs.push(u);
    let next_state = env.assemble_state(&new_tip, &ctx.dirs);
    match reason {
        Some(r) => {
            line.status = Status::Stopped(r);
            ctx.cached_state = None;
        }
        None => ctx.cached_state = Some(next_state.clone()),
    }
    StepOut {
        action: to_f32(&a),
        reward,
        next_state,
        done: reason.is_some(),
        truncated: reason == Some(TerminationReason::TooLong),
        trajectory,
        degenerate: false,
        flipped,
    }
}

fn to_f32(a: &Vec3) -> [f32; 3] {
    [a.x as f32, a.y as f32, a.z as f32]
}
