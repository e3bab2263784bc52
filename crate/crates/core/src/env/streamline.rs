use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::tracker::TerminationReason;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Forward,
    /// Replaying the flipped forward half.
    Retrack,
    /// Free tracking past the seed.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Stopped(TerminationReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Streamline {
    pub seed: Vec3,
    /// Points in mm; after the backward phase starts the forward half is
    /// stored reversed, so the streamline runs far end → seed → far end.
    pub points: Vec<Vec3>,
    /// Unit segment directions, `points.len() - 1` of them.
    pub dirs: Vec<Vec3>,
    pub status: Status,
    pub phase: Phase,
    /// Index into `points` of the replayed position while retracking.
    pub retrack_cursor: usize,
    /// Number of points produced by the forward phase.
    pub forward_points: usize,
    pub forward_reason: Option<TerminationReason>,
}

impl Streamline {
    pub fn new(seed: Vec3) -> Self {
        Self {
            seed,
            points: vec![seed],
            dirs: Vec::new(),
            status: Status::Active,
            phase: Phase::Forward,
            retrack_cursor: 0,
            forward_points: 1,
            forward_reason: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    pub fn reason(&self) -> Option<TerminationReason> {
        match self.status {
            Status::Active => None,
            Status::Stopped(r) => Some(r),
        }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn tip(&self) -> &Vec3 {
        self.points.last().expect("streamline has at least its seed")
    }

    /// Reverses point order and direction signs.
    pub(crate) fn flip(&mut self) {
        self.points.reverse();
        self.dirs.reverse();
        self.dirs.iter_mut().for_each(|d| *d = -*d);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamlineBatch {
    pub streamlines: Vec<Streamline>,
}

impl StreamlineBatch {
    pub fn from_seeds(seeds: &[Vec3]) -> Self {
        Self { streamlines: seeds.iter().map(|s| Streamline::new(*s)).collect() }
    }

    pub fn len(&self) -> usize {
        self.streamlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streamlines.is_empty()
    }

    /// Point lists only.
    pub fn tractogram(&self) -> Vec<Vec<Vec3>> {
        self.streamlines.iter().map(|s| s.points.clone()).collect()
    }

    /// Count of final termination reasons, every reason listed.
    pub fn termination_histogram(&self) -> BTreeMap<TerminationReason, usize> {
        let mut h: BTreeMap<_, _> = TerminationReason::ALL.iter().map(|r| (*r, 0)).collect();
        for s in &self.streamlines {
            if let Some(r) = s.reason() {
                *h.get_mut(&r).unwrap() += 1;
            }
        }
        h
    }
}

/// Flat storage of `(s, a, r, s', done)` tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionBatch {
    pub state_dim: usize,
    pub states: Vec<f32>,
    pub actions: Vec<[f32; 3]>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f32>,
    /// Last transition of a half-streamline.
    pub dones: Vec<bool>,
    /// Stopped by the length limit rather than by the environment.
    pub truncated: Vec<bool>,
    /// Half-streamline each transition belongs to: `2 * streamline + half`.
    pub trajectory: Vec<u32>,
}

impl TransitionBatch {
    pub fn new(state_dim: usize) -> Self {
        Self { state_dim, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        s: &[f32],
        a: [f32; 3],
        r: f64,
        s_next: &[f32],
        done: bool,
        truncated: bool,
        trajectory: u32,
    ) {
        debug_assert_eq!(s.len(), self.state_dim);
        debug_assert_eq!(s_next.len(), self.state_dim);
        self.states.extend_from_slice(s);
        self.actions.push(a);
        self.rewards.push(r);
        self.next_states.extend_from_slice(s_next);
        self.dones.push(done);
        self.truncated.push(truncated);
        self.trajectory.push(trajectory);
    }

    pub fn state(&self, i: usize) -> &[f32] {
        &self.states[i * self.state_dim..(i + 1) * self.state_dim]
    }

    pub fn next_state(&self, i: usize) -> &[f32] {
        &self.next_states[i * self.state_dim..(i + 1) * self.state_dim]
    }

    pub fn extend(&mut self, other: &TransitionBatch) {
        assert_eq!(self.state_dim, other.state_dim, "state dimension mismatch");
        self.states.extend_from_slice(&other.states);
        self.actions.extend_from_slice(&other.actions);
        self.rewards.extend_from_slice(&other.rewards);
        self.next_states.extend_from_slice(&other.next_states);
        self.dones.extend_from_slice(&other.dones);
        self.truncated.extend_from_slice(&other.truncated);
        self.trajectory.extend_from_slice(&other.trajectory);
    }

    /// Reorders so each half-streamline is contiguous and in time order.
    pub fn sorted_by_trajectory(&self) -> TransitionBatch {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.trajectory[i]);
        let mut out = TransitionBatch::new(self.state_dim);
        for i in order {
            out.push(
                self.state(i),
                self.actions[i],
                self.rewards[i],
                self.next_state(i),
                self.dones[i],
                self.truncated[i],
                self.trajectory[i],
            );
        }
        out
    }

    /// Mean over trajectories of the summed reward, counting a streamline's
    /// two halves together.
    pub fn average_streamline_reward(&self) -> f64 {
        let mut sums: BTreeMap<u32, f64> = BTreeMap::new();
        for (t, r) in self.trajectory.iter().zip(&self.rewards) {
            *sums.entry(t / 2).or_default() += r;
        }
        if sums.is_empty() {
            0.0
        } else {
            sums.values().sum::<f64>() / sums.len() as f64
        }
    }
}
