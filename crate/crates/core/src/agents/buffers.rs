use rand::Rng as _;

use crate::env::TransitionBatch;
use crate::rng::Rng;

/// Fixed-capacity FIFO of transitions for off-policy learning.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    state_dim: usize,
    capacity: usize,
    states: Vec<f32>,
    next_states: Vec<f32>,
    actions: Vec<[f32; 3]>,
    rewards: Vec<f64>,
    /// Terminal for bootstrapping: done and not truncated.
    terminal: Vec<bool>,
    /// Slot of the next write once full.
    head: usize,
    len: usize,
    /// Total transitions ever inserted.
    pushed: u64,
}

/// Samples copied out of a [`ReplayBuffer`], row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySample {
    pub states: Vec<f32>,
    pub next_states: Vec<f32>,
    pub actions: Vec<[f32; 3]>,
    pub rewards: Vec<f64>,
    pub terminal: Vec<bool>,
}

impl ReplaySample {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(state_dim: usize, capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            state_dim,
            capacity,
            states: Vec::new(),
            next_states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminal: Vec::new(),
            head: 0,
            len: 0,
            pushed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, s: &[f32], a: [f32; 3], r: f64, s_next: &[f32], terminal: bool) {
        let d = self.state_dim;
        assert_eq!(s.len(), d, "state dimension mismatch");
        assert_eq!(s_next.len(), d, "state dimension mismatch");
        if self.len < self.capacity {
            self.states.extend_from_slice(s);
            self.next_states.extend_from_slice(s_next);
            self.actions.push(a);
            self.rewards.push(r);
            self.terminal.push(terminal);
            self.len += 1;
        } else {
            let i = self.head;
            self.states[i * d..(i + 1) * d].copy_from_slice(s);
            self.next_states[i * d..(i + 1) * d].copy_from_slice(s_next);
            self.actions[i] = a;
            self.rewards[i] = r;
            self.terminal[i] = terminal;
            self.head = (self.head + 1) % self.capacity;
        }
        self.pushed += 1;
    }

    pub fn push_batch(&mut self, batch: &TransitionBatch) {
        for i in 0..batch.len() {
            let terminal = batch.dones[i] && !batch.truncated[i];
            self.push(batch.state(i), batch.actions[i], batch.rewards[i], batch.next_state(i), terminal);
        }
    }

    /// Stored rewards from oldest to newest.
    pub fn rewards_in_order(&self) -> Vec<f64> {
        let (a, b) = self.rewards.split_at(self.head);
        b.iter().chain(a).copied().collect()
    }

    pub fn gather(&self, idx: &[usize]) -> ReplaySample {
        let d = self.state_dim;
        let mut s = ReplaySample {
            states: Vec::with_capacity(idx.len() * d),
            next_states: Vec::with_capacity(idx.len() * d),
            actions: Vec::with_capacity(idx.len()),
            rewards: Vec::with_capacity(idx.len()),
            terminal: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            s.states.extend_from_slice(&self.states[i * d..(i + 1) * d]);
            s.next_states.extend_from_slice(&self.next_states[i * d..(i + 1) * d]);
            s.actions.push(self.actions[i]);
            s.rewards.push(self.rewards[i]);
            s.terminal.push(self.terminal[i]);
        }
        s
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> ReplaySample {
        assert!(self.len > 0, "sampling from an empty replay buffer");
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.len)).collect();
        self.gather(&idx)
    }
}

/// Transitions of the current on-policy batch, in collection order.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    batch: TransitionBatch,
}

impl RolloutBuffer {
    pub fn new(state_dim: usize) -> Self {
        Self { batch: TransitionBatch::new(state_dim) }
    }

    pub fn len(&self) -> usize {
        self.batch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batch.is_empty()
    }

    pub fn push(&mut self, t: &TransitionBatch) {
        self.batch.extend(t);
    }

    /// Empties the buffer, returning its contents grouped by trajectory.
    pub fn take(&mut self) -> TransitionBatch {
        let dim = self.batch.state_dim;
        std::mem::replace(&mut self.batch, TransitionBatch::new(dim)).sorted_by_trajectory()
    }
}
