use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use rltrack::agents::onpolicy::{
    clip_ratio, conjugate_gradient, fisher_vector_product, line_search, log_probs, policy_gradient,
    ppo_objective, trust_region_scale,
};
use rltrack::agents::returns::{discounted_returns, gae};
use rltrack::agents::{
    build_agent, Agent, AgentHyperparams, Algorithm, OffPolicyAgent, OnPolicyAgent, ReplayBuffer, ToyMdp,
};
use rltrack::env::TransitionBatch;
use rltrack::nn::dist::{gaussian_entropy, gaussian_kl};
use rltrack::nn::{Activation, Mlp};
use rltrack::rng::substream;

fn random_batch(dim: usize, n: usize, seed: u64) -> TransitionBatch {
    let mut rng = substream(seed, &[0xba7c]);
    let mut b = TransitionBatch::new(dim);
    for i in 0..n {
        let s: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s2: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let done = i % 7 == 6 || i + 1 == n;
        let truncated = done && i % 2 == 0;
        b.push(&s, a, rng.random_range(-1.0..1.0), &s2, done, truncated, (i / 7) as u32);
    }
    b
}

fn replay_sample(dim: usize, n: usize, seed: u64) -> rltrack::agents::ReplaySample {
    let mut buf = ReplayBuffer::new(dim, n);
    buf.push_batch(&random_batch(dim, n, seed));
    buf.gather(&(0..n).collect::<Vec<_>>())
}

fn small(algo: Algorithm) -> AgentHyperparams {
    AgentHyperparams {
        hidden: vec![16, 16],
        batch_size: 32,
        learning_starts: 32,
        replay_capacity: 4096,
        ..AgentHyperparams::for_algorithm(algo)
    }
}

fn means_of(net: &Mlp<f32>, states: ArrayView2<'_, f32>) -> Array2<f32> {
    net.forward(states).unwrap()
}

#[test]
fn discounted_returns_with_zero_gamma_are_rewards() {
    let r = [0.3, -1.0, 2.0, 0.5];
    assert_eq!(discounted_returns(&r, 0.0, &[false; 4]), r.to_vec());
    assert_eq!(discounted_returns(&[1.0, 1.0, 1.0], 0.5, &[false; 3]), vec![1.75, 1.5, 1.0]);
}

#[test]
fn gae_limits() {
    let r = [1.0, -0.5, 0.25, 2.0];
    let v = [0.2, 0.4, -0.1, 0.3, 0.7];
    let d = [false, true, false, false];
    let td: Vec<f64> = (0..4).map(|t| r[t] + if d[t] { 0.0 } else { 0.9 * v[t + 1] } - v[t]).collect();
    for (a, b) in gae(&r, &v, 0.9, 0.0, &d).iter().zip(&td) {
        assert!((a - b).abs() < 1e-12);
    }
    let zero = [0.0; 5];
    for (a, b) in gae(&r, &zero, 0.9, 1.0, &d).iter().zip(discounted_returns(&r, 0.9, &d)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn vpg_zero_advantage_gives_zero_policy_gradient() {
    let means = Array2::from_shape_fn((5, 3), |(i, k)| (i as f32 - k as f32) * 0.1);
    let actions: Vec<[f32; 3]> = (0..5).map(|i| [i as f32 * 0.2, -0.1, 0.3]).collect();
    let pg = policy_gradient(&means, &[-0.5; 3], &actions, &[0.0; 5], 0.0);
    assert!(pg.mean.iter().all(|&v| v == 0.0));
    assert!(pg.log_std.iter().all(|&v| v == 0.0));
    let with_bonus = policy_gradient(&means, &[-0.5; 3], &actions, &[0.0; 5], 0.001);
    assert!(with_bonus.mean.iter().all(|&v| v == 0.0));
    assert!(with_bonus.log_std.iter().all(|&v| v == -0.001));
}

#[test]
fn vpg_one_transition_gradient_matches_hand_formula() {
    let mu = [0.2f64, -0.4, 0.1];
    let ls = [-0.3f64, 0.1, -1.0];
    let a = [0.5f32, -0.2, 0.0];
    let w = 1.7;
    let means = Array2::from_shape_vec((1, 3), mu.iter().map(|&v| v as f32).collect()).unwrap();
    let pg = policy_gradient(&means, &ls, &[a], &[w], 0.0);
    for k in 0..3 {
        let sd = ls[k].exp();
        let diff = a[k] as f64 - means[[0, k]] as f64;
        let dmu = -w * diff / (sd * sd);
        let dls = -w * (diff * diff / (sd * sd) - 1.0);
        assert_relative_eq!(pg.mean[[0, k]] as f64, dmu, max_relative = 1e-6);
        assert_relative_eq!(pg.log_std[k], dls, max_relative = 1e-12);
    }
}

#[test]
fn entropy_bonus_shifts_the_loss_by_coef_times_entropy() {
    let means = Array2::from_shape_fn((4, 3), |(i, k)| (i * k) as f32 * 0.05);
    let actions: Vec<[f32; 3]> = (0..4).map(|i| [0.1 * i as f32, 0.2, -0.3]).collect();
    let w = [0.5, -1.0, 2.0, 0.1];
    let ls = [-0.5, 0.0, 0.3];
    let base = policy_gradient(&means, &ls, &actions, &w, 0.0).loss;
    let bonus = policy_gradient(&means, &ls, &actions, &w, 0.001).loss;
    assert!((base - bonus - 0.001 * gaussian_entropy(&ls)).abs() < 1e-15);
}

#[test]
fn a2c_zero_advantage_leaves_only_the_value_loss() {
    let means = Array2::from_shape_fn((3, 3), |(i, k)| (i + k) as f32 * 0.1);
    let actions = vec![[0.0f32; 3]; 3];
    let pg = policy_gradient(&means, &[0.0; 3], &actions, &[0.0; 3], 0.0);
    assert!(pg.mean.iter().all(|&v| v == 0.0) && pg.loss == 0.0);
    let v = Array2::from_shape_vec((3, 1), vec![0.5f32, 0.0, -1.0]).unwrap();
    let (loss, dy) = rltrack::agents::policy::mse_grad(&v, &[0.0, 0.0, 0.0]);
    assert!(loss > 0.0 && dy.iter().any(|&x| x != 0.0));
}

#[test]
fn a2c_perfect_tabular_value_gives_zero_advantages() {
    // Optimal play on the toy chain visits state k at step k.
    let gamma: f64 = 0.75;
    let value = |k: usize| (0..5 - k).map(|j| gamma.powi(j as i32)).sum::<f64>();
    let rewards = [1.0; 5];
    let values: Vec<f64> = (0..5).map(value).chain([0.0]).collect();
    let dones = [false, false, false, false, true];
    for a in gae(&rewards, &values, gamma, 0.95, &dones) {
        assert!(a.abs() < 1e-12);
    }
}

#[test]
fn every_update_keeps_parameters_finite() {
    for algo in Algorithm::ALL {
        for seed in 0..3 {
            let hp = small(algo);
            let mut agent = build_agent(algo, &hp, 6, &mut substream(seed, &[algo as u64])).unwrap();
            let mut rng = substream(seed, &[99]);
            for step in 0..4 {
                let batch = random_batch(6, 40, seed * 10 + step);
                agent.observe(&batch, &mut rng).unwrap();
                agent.end_episode(&mut rng).unwrap();
            }
            assert!(agent.is_finite(), "{algo} seed {seed}");
        }
    }
}

#[test]
fn on_policy_losses_are_finite_on_random_batches() {
    for algo in [Algorithm::Vpg, Algorithm::A2c, Algorithm::Trpo, Algorithm::Acktr, Algorithm::Ppo] {
        let hp = AgentHyperparams { epochs: 2, ..small(algo) };
        let mut agent = OnPolicyAgent::new(algo, hp, 5, &mut substream(1, &[])).unwrap();
        let l = agent.update(&random_batch(5, 50, 2), &mut substream(2, &[])).unwrap();
        assert!(l.actor().unwrap().is_finite(), "{algo}");
        if algo != Algorithm::Vpg {
            assert!(l.critic().unwrap().is_finite(), "{algo}");
        }
    }
}

#[test]
fn trpo_with_unbounded_delta_steps_to_the_cg_solution() {
    let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
    let g = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let fvp = |v: &[f64]| (&h * DVector::from_column_slice(v)).as_slice().to_vec();
    let x = conjugate_gradient(fvp, g.as_slice(), 10, 1e-14);
    let fx = fvp(&x);
    let scale = trust_region_scale(&x, &fx, f64::INFINITY);
    assert_eq!(scale, 1.0);
    let surrogate = |t: &[f64]| {
        let t = DVector::from_column_slice(t);
        (g.dot(&t) - 0.5 * t.dot(&(&h * &t)), 0.5 * t.dot(&(&h * &t)))
    };
    let (theta, info) = line_search(&[0.0; 3], &x, 0.0, surrogate, f64::INFINITY, 10, 0.5);
    assert!(info.accepted);
    assert_eq!(info.backtracks, 0);
    let exact = h.clone().lu().solve(&g).unwrap();
    for (a, b) in theta.unwrap().iter().zip(exact.iter()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn line_search_rejects_when_nothing_improves() {
    let (theta, info) = line_search(&[1.0, 2.0], &[0.5, 0.5], 0.0, |_| (-1.0, 0.0), 1.0, 10, 0.5);
    assert!(theta.is_none() && !info.accepted);
    assert_eq!(info.backtracks, 10);
}

/// Dense Fisher of a Gaussian policy from a central-difference Jacobian.
fn dense_fisher(net: &Mlp<f64>, x: ArrayView2<'_, f64>, log_std: &[f64], damping: f64) -> DMatrix<f64> {
    let np = net.params().len();
    let rows = x.nrows();
    let out = net.output_dim();
    let h = 1e-5;
    let mut jac = vec![DMatrix::<f64>::zeros(out, np); rows];
    for p in 0..np {
        let mut plus = net.clone();
        plus.params_mut()[p] += h;
        let mut minus = net.clone();
        minus.params_mut()[p] -= h;
        let (yp, ym) = (plus.forward(x).unwrap(), minus.forward(x).unwrap());
        for r in 0..rows {
            for o in 0..out {
                jac[r][(o, p)] = (yp[[r, o]] - ym[[r, o]]) / (2.0 * h);
            }
        }
    }
    let n = np + log_std.len();
    let mut f = DMatrix::<f64>::zeros(n, n);
    let m = DMatrix::from_diagonal(&DVector::from_iterator(out, log_std.iter().map(|l| (-2.0 * l).exp())));
    let mut net_block = DMatrix::<f64>::zeros(np, np);
    for j in &jac {
        net_block += j.transpose() * &m * j;
    }
    f.view_mut((0, 0), (np, np)).copy_from(&(net_block / rows as f64));
    for k in 0..log_std.len() {
        f[(np + k, np + k)] = 2.0;
    }
    f + DMatrix::identity(n, n) * damping
}

#[test]
fn trpo_cg_matches_dense_fisher_solve() {
    let mut rng = substream(5, &[]);
    let net = Mlp::<f64>::new(&[3, 3, 2], Activation::Tanh, &mut rng).unwrap();
    assert_eq!(net.params().len(), 20);
    let x = Array2::from_shape_fn((30, 3), |_| rng.random_range(-1.0..1.0));
    let log_std = [-0.3, 0.2];
    let damping = 0.1;
    let tape = net.forward_tape(x.view()).unwrap();
    let g: Vec<f64> = (0..22).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sol = conjugate_gradient(
        |v| fisher_vector_product(&net, &tape, &log_std, v, damping).unwrap(),
        &g,
        200,
        1e-14,
    );
    let f = dense_fisher(&net, x.view(), &log_std, damping);
    let exact = f.lu().solve(&DVector::from_vec(g)).unwrap();
    for (a, b) in sol.iter().zip(exact.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

fn mean_kl(before: &rltrack::agents::Policy, after: &rltrack::agents::Policy, states: ArrayView2<'_, f32>) -> f64 {
    let (mb, ma) = (means_of(&before.net, states), means_of(&after.net, states));
    let n = states.nrows();
    (0..n)
        .map(|i| {
            let row = |m: &Array2<f32>| [m[[i, 0]] as f64, m[[i, 1]] as f64, m[[i, 2]] as f64];
            gaussian_kl(&row(&ma), &after.log_std, &row(&mb), &before.log_std)
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn trpo_accepted_steps_stay_within_the_trust_region() {
    let mut accepted = 0;
    for seed in 0..30 {
        let delta = [1e-3, 1e-2, 1e-1][seed as usize % 3];
        let hp = AgentHyperparams { delta, epochs: 1, ..small(Algorithm::Trpo) };
        let mut agent = OnPolicyAgent::new(Algorithm::Trpo, hp, 5, &mut substream(seed, &[])).unwrap();
        let batch = random_batch(5, 60, seed + 500);
        let before = agent.policy().clone();
        agent.update(&batch, &mut substream(seed, &[1])).unwrap();
        let info = agent.last_line_search().unwrap();
        let states = ArrayView2::from_shape((batch.len(), 5), &batch.states[..]).unwrap();
        let kl = mean_kl(&before, agent.policy(), states);
        if info.accepted {
            accepted += 1;
            assert!(kl <= delta + 1e-6, "kl {kl} > {delta}");
        } else {
            assert_eq!(kl, 0.0);
        }
    }
    assert!(accepted > 20);
}

#[test]
fn trpo_rejected_search_restores_parameters_bit_exactly() {
    let hp = AgentHyperparams { delta: 0.0, epochs: 1, ..small(Algorithm::Trpo) };
    let mut agent = OnPolicyAgent::new(Algorithm::Trpo, hp, 5, &mut substream(8, &[])).unwrap();
    let before = agent.policy().clone();
    agent.update(&random_batch(5, 40, 9), &mut substream(8, &[1])).unwrap();
    assert!(!agent.last_line_search().unwrap().accepted);
    let bits = |p: &rltrack::agents::Policy| p.net.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&before), bits(agent.policy()));
    assert_eq!(before.log_std, agent.policy().log_std);
}

#[test]
fn ppo_clip_examples() {
    assert!((clip_ratio(1.5, 0.2) - 1.2).abs() < 1e-15);
    assert!((ppo_objective(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
    assert_eq!(ppo_objective(1.1, 2.0, 0.2), 1.1 * 2.0);
    assert_eq!(ppo_objective(0.9, -1.0, 0.2), -0.9);
    assert!((ppo_objective(0.5, -1.0, 0.2) - (-0.8)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ppo_clipped_objective_never_exceeds_unclipped(
        batch in prop::collection::vec((0.0f64..3.0, -5.0f64..5.0), 1..32),
        eps in 0.01f64..0.5,
    ) {
        for (r, a) in batch {
            prop_assert!(ppo_objective(r, a, eps) <= r * a + 1e-15);
        }
    }
}

#[test]
fn ppo_update_uses_clipped_ratio_gradient() {
    // Far outside the band with positive advantage the objective is flat.
    let means = Array2::from_shape_vec((1, 3), vec![0.0f32; 3]).unwrap();
    let actions = [[0.1f32, 0.0, 0.0]];
    let lp = log_probs(&means, &[0.0; 3], &actions);
    let old = [lp[0] - 2.0];
    let pg = rltrack::agents::onpolicy::ppo_gradient(&means, &[0.0; 3], &actions, &old, &[1.0], 0.2, 0.0);
    assert!(pg.mean.iter().all(|&v| v == 0.0));
    assert!((pg.loss + 1.2).abs() < 1e-12);
}

#[test]
fn ddpg_gamma_zero_targets_equal_rewards() {
    let hp = AgentHyperparams { gamma: 0.0, ..small(Algorithm::Ddpg) };
    let agent = OffPolicyAgent::new(Algorithm::Ddpg, hp, 4, &mut substream(1, &[])).unwrap();
    let s = replay_sample(4, 25, 3);
    let t = agent.target_values(&s, &mut substream(2, &[])).unwrap();
    assert_eq!(t.y, s.rewards);
}

#[test]
fn ddpg_tau_one_copies_live_networks_into_targets() {
    let hp = AgentHyperparams { tau: 1.0, ..small(Algorithm::Ddpg) };
    let mut agent = OffPolicyAgent::new(Algorithm::Ddpg, hp, 4, &mut substream(1, &[])).unwrap();
    agent.update(&replay_sample(4, 32, 4), &mut substream(2, &[])).unwrap();
    assert_eq!(agent.critic_targets()[0].params(), agent.critics()[0].params());
    assert_eq!(agent.actor_target().unwrap().params(), agent.policy().net.params());
}

#[test]
fn ddpg_critic_learns_one_state_bellman_value() {
    // Constant reward 1 in a single non-terminal state with the actor pinned
    // at a saturated action: Q = 1 / (1 − γ) = 2.
    let hp = AgentHyperparams {
        gamma: 0.5,
        lr: 1e-3,
        tau: 0.05,
        hidden: vec![16],
        batch_size: 32,
        learning_starts: 1,
        replay_capacity: 256,
        ..AgentHyperparams::for_algorithm(Algorithm::Ddpg)
    };
    let mut agent = OffPolicyAgent::new(Algorithm::Ddpg, hp, 1, &mut substream(3, &[])).unwrap();
    assert!(agent.actor_target().is_some());
    let net = &mut agent.policy_mut().net;
    let last = net.n_layers() - 1;
    let off = net.layer_offset(last);
    let n_w = net.sizes()[last] * 3;
    net.params_mut()[off..off + n_w].iter_mut().for_each(|p| *p = 0.0);
    net.params_mut()[off + n_w..].iter_mut().for_each(|p| *p = 20.0);
    let mut rng = substream(4, &[]);
    let mut batch = TransitionBatch::new(1);
    for _ in 0..256 {
        batch.push(&[1.0], [1.0; 3], 1.0, &[1.0], false, false, 0);
    }
    let mut buf = ReplayBuffer::new(1, 256);
    buf.push_batch(&batch);
    for _ in 0..3000 {
        let s = buf.sample(32, &mut rng);
        agent.update(&s, &mut rng).unwrap();
    }
    let x = Array2::from_elem((1, 1), 1.0f32);
    let a = agent.policy().greedy(x.view()).unwrap()[0];
    let q = agent.q_values(0, x.view(), &[[a[0] as f32, a[1] as f32, a[2] as f32]]).unwrap()[0];
    assert!((q - 2.0).abs() < 0.05, "Q = {q}");
}

#[test]
fn td3_identical_twins_reduce_to_the_ddpg_target() {
    let hp = AgentHyperparams { target_noise: 0.0, ..small(Algorithm::Td3) };
    let mut agent = OffPolicyAgent::new(Algorithm::Td3, hp.clone(), 4, &mut substream(6, &[])).unwrap();
    let first = agent.critic_targets()[0].clone();
    agent.critic_targets_mut()[1] = first.clone();
    let s = replay_sample(4, 20, 7);
    let t = agent.target_values(&s, &mut substream(1, &[])).unwrap();
    let next = ArrayView2::from_shape((20, 4), &s.next_states[..]).unwrap();
    let a: Vec<[f32; 3]> = agent
        .actor_target()
        .unwrap()
        .forward(next)
        .unwrap()
        .rows()
        .into_iter()
        .map(|r| [r[0].tanh(), r[1].tanh(), r[2].tanh()])
        .collect();
    let x = rltrack::agents::policy::state_action(next, &a);
    let q = first.forward(x.view()).unwrap();
    for i in 0..20 {
        let cont = if s.terminal[i] { 0.0 } else { 1.0 };
        let y = s.rewards[i] + hp.gamma * cont * q[[i, 0]] as f64;
        assert!((t.y[i] - y).abs() < 1e-12);
    }
}

#[test]
fn twin_targets_never_exceed_either_critic() {
    for algo in [Algorithm::Td3, Algorithm::Sac, Algorithm::SacAuto] {
        let agent = OffPolicyAgent::new(algo, small(algo), 4, &mut substream(2, &[algo as u64])).unwrap();
        for seed in 0..200 {
            let s = replay_sample(4, 8, seed);
            let t = agent.target_values(&s, &mut substream(seed, &[1])).unwrap();
            for i in 0..8 {
                let qmin = t.q_next[0][i].min(t.q_next[1][i]);
                assert!(qmin <= t.q_next[0][i] && qmin <= t.q_next[1][i]);
                let soft = qmin - agent.alpha() * t.log_prob_next.as_ref().map_or(0.0, |l| l[i]);
                let cont = if s.terminal[i] { 0.0 } else { 1.0 };
                assert!((t.y[i] - (s.rewards[i] + agent.hyperparams().gamma * cont * soft)).abs() < 1e-12);
            }
        }
    }
}

/// Mean of `Q(s, μ(s)) − V^μ(s)` on a one-state task with noisy rewards.
fn q_bias(algo: Algorithm, seed: u64) -> f64 {
    let gamma = 0.9;
    let hp = AgentHyperparams {
        hidden: vec![32, 32],
        lr: 1e-3,
        gamma,
        batch_size: 64,
        learning_starts: 1,
        replay_capacity: 4096,
        tau: 0.01,
        ..AgentHyperparams::for_algorithm(algo)
    };
    let mut agent = OffPolicyAgent::new(algo, hp, 2, &mut substream(seed, &[1])).unwrap();
    let mut rng = substream(seed, &[2]);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let reward = |a: &[f64]| -a.iter().map(|x| (x - 0.3).powi(2)).sum::<f64>();
    let s = [1.0f32, 0.0];
    let mut buf = ReplayBuffer::new(2, 2000);
    for _ in 0..2000 {
        let a: [f32; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let r = reward(&a.map(|v| v as f64)) + noise.sample(&mut rng);
        buf.push(&s, a, r, &s, false);
    }
    let mut update_rng = substream(seed, &[3]);
    for _ in 0..2000 {
        let smp = buf.sample(64, &mut update_rng);
        agent.update(&smp, &mut update_rng).unwrap();
    }
    let x = Array2::from_shape_vec((1, 2), s.to_vec()).unwrap();
    let a = agent.policy().greedy(x.view()).unwrap()[0];
    let q = agent.q_values(0, x.view(), &[a.map(|v| v as f32)]).unwrap()[0];
    q - reward(&a) / (1.0 - gamma)
}

#[test]
fn td3_overestimates_less_than_ddpg() {
    let mean = |algo| (0..6).map(|s| q_bias(algo, s)).sum::<f64>() / 6.0;
    let (ddpg, td3) = (mean(Algorithm::Ddpg), mean(Algorithm::Td3));
    assert!(td3 < ddpg, "TD3 bias {td3} vs DDPG {ddpg}");
}

#[test]
fn sac_with_zero_alpha_ignores_log_probabilities() {
    let hp = AgentHyperparams { alpha: 0.0, ..small(Algorithm::Sac) };
    let agent = OffPolicyAgent::new(Algorithm::Sac, hp.clone(), 4, &mut substream(3, &[])).unwrap();
    let s = replay_sample(4, 16, 5);
    let t = agent.target_values(&s, &mut substream(4, &[])).unwrap();
    for i in 0..16 {
        let cont = if s.terminal[i] { 0.0 } else { 1.0 };
        let qmin = t.q_next[0][i].min(t.q_next[1][i]);
        assert_eq!(t.y[i], s.rewards[i] + hp.gamma * cont * qmin);
    }
}

#[test]
fn sac_higher_entropy_policy_gets_larger_targets() {
    let mean_target = |log_std_bias: f32| {
        let mut agent = OffPolicyAgent::new(Algorithm::Sac, small(Algorithm::Sac), 4, &mut substream(3, &[])).unwrap();
        for c in agent.critic_targets_mut() {
            c.params_mut().iter_mut().for_each(|p| *p = 0.0);
        }
        let net = &mut agent.policy_mut().net;
        let last = net.n_layers() - 1;
        let off = net.layer_offset(last) + net.sizes()[last] * 6;
        for k in 3..6 {
            net.params_mut()[off + k] = log_std_bias;
        }
        let s = replay_sample(4, 256, 5);
        let t = agent.target_values(&s, &mut substream(4, &[])).unwrap();
        t.y.iter().sum::<f64>() / 256.0
    };
    assert!(mean_target(0.5) > mean_target(-1.0));
}

#[test]
fn sac_auto_alpha_moves_toward_the_target_entropy() {
    let trajectory = |entropy: f64| {
        let mut agent =
            OffPolicyAgent::new(Algorithm::SacAuto, small(Algorithm::SacAuto), 3, &mut substream(1, &[])).unwrap();
        let mut rng = substream(2, &[]);
        let mut alphas = vec![agent.alpha()];
        for _ in 0..200 {
            // Log-densities of a fixed policy with E[−log π] = entropy.
            let lp: Vec<f64> = (0..64).map(|_| -entropy + rng.random_range(-0.5..0.5)).collect();
            agent.alpha_step(&lp);
            alphas.push(agent.alpha());
        }
        alphas
    };
    // The target entropy is −dim(a) = −3.
    let low = trajectory(-5.0);
    let high = trajectory(-1.0);
    assert!(low.windows(2).all(|w| w[1] > w[0]), "too little entropy must raise alpha");
    assert!(high.windows(2).all(|w| w[1] < w[0]), "too much entropy must lower alpha");
}

/// Training iterations of the toy chain, 16 episodes of 5 steps each.
fn toy_budget(algo: Algorithm) -> usize {
    match algo {
        Algorithm::Vpg | Algorithm::Ppo | Algorithm::Ddpg => 120,
        Algorithm::A2c | Algorithm::Td3 => 80,
        Algorithm::Trpo | Algorithm::Acktr | Algorithm::Sac | Algorithm::SacAuto => 40,
    }
}

fn toy_hyperparams(algo: Algorithm) -> AgentHyperparams {
    let mut hp = AgentHyperparams {
        hidden: vec![32, 32],
        batch_size: 64,
        learning_starts: 64,
        replay_capacity: 10_000,
        updates_per_round: 4,
        ..AgentHyperparams::for_algorithm(algo)
    };
    if algo == Algorithm::A2c {
        hp.lr = 1e-3;
    }
    hp
}

#[test]
fn every_algorithm_solves_the_toy_chain_within_budget() {
    let toy = ToyMdp::default();
    for algo in Algorithm::ALL {
        let hp = toy_hyperparams(algo);
        let solved = (0..5u64)
            .filter(|&seed| {
                let mut agent = build_agent(algo, &hp, 5, &mut substream(seed, &[9])).unwrap();
                let curve = toy.train(agent.as_mut(), toy_budget(algo), seed).unwrap();
                *curve.last().unwrap() >= 0.9 * rltrack::agents::toy::TOY_OPTIMUM
            })
            .count();
        assert!(solved >= 4, "{algo} solved {solved}/5");
    }
}

#[test]
fn agent_checkpoint_restores_the_policy() {
    for algo in Algorithm::ALL {
        let agent = build_agent(algo, &small(algo), 5, &mut substream(1, &[])).unwrap();
        let ck = agent.checkpoint(serde_json::json!({"seed": 7}));
        let mut buf = Vec::new();
        ck.write(&mut buf).unwrap();
        let back = rltrack::nn::Checkpoint::read(&buf[..]).unwrap();
        assert_eq!(back.meta["algorithm"], algo.name());
        assert_eq!(back.meta["seed"], 7);
        let p = rltrack::agents::Policy::from_checkpoint(&back).unwrap();
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i + j) as f32 * 0.1);
        assert_eq!(p.greedy(x.view()).unwrap(), agent.policy().greedy(x.view()).unwrap());
    }
}
