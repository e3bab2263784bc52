//! Discounted returns and generalised advantage estimates over flat
//! trajectories separated by `done` flags.

/// `G_t = r_t + γ·G_{t+1}`, restarting after every `done`.
pub fn discounted_returns(rewards: &[f64], gamma: f64, dones: &[bool]) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len(), "rewards and dones differ in length");
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// GAE(γ, λ) with `values` holding one bootstrap entry past the last step.
/// A `done` step does not bootstrap and cuts the advantage recursion.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64, dones: &[bool]) -> Vec<f64> {
    assert_eq!(values.len(), rewards.len() + 1, "values need a bootstrap entry");
    let next: Vec<f64> = values[1..].to_vec();
    gae_with_next(rewards, &values[..rewards.len()], &next, gamma, lambda, dones, dones)
}

/// GAE with explicit next-state values.
///
/// `terminal[t]` drops the bootstrap term `γ·V(s_{t+1})` and `episode_end[t]`
/// stops the recursion. A truncated step ends the episode but still
/// bootstraps.
pub fn gae_with_next(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    gamma: f64,
    lambda: f64,
    terminal: &[bool],
    episode_end: &[bool],
) -> Vec<f64> {
    let n = rewards.len();
    assert!(
        values.len() == n && next_values.len() == n && terminal.len() == n && episode_end.len() == n,
        "gae inputs differ in length"
    );
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        if episode_end[t] {
            acc = 0.0;
        }
        let boot = if terminal[t] { 0.0 } else { gamma * next_values[t] };
        let delta = rewards[t] + boot - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    adv
}

/// Rescales to zero mean and unit variance; a constant input maps to zeros.
pub fn normalize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in x.iter_mut() {
        *v = if sd > 1e-8 { (*v - mean) / sd } else { 0.0 };
    }
}
