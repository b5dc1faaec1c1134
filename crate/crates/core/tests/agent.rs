use std::collections::VecDeque;
use std::sync::Arc;

use lsm_core::agent::{argmax, clip_reward, evaluate, q_target, q_values, select_action};
use lsm_core::envs::chain::ChainEnv;
use lsm_core::experiment::topology_for;
use lsm_core::{
    Activation, Agent, CartPole, EpsilonSchedule, ExperimentConfig, IdentityFeatures, Liquid,
    ReplayBuffer, TrainConfig, Transition,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain_value_iteration(n: usize, gamma: f64) -> Vec<[f64; 2]> {
    let mut q = vec![[0.0; 2]; n];
    for _ in 0..10_000 {
        let mut next = q.clone();
        for s in 0..n - 1 {
            for a in 0..2 {
                let (s2, r, terminal) = ChainEnv::transition(n, s, a);
                next[s][a] = if terminal {
                    r
                } else {
                    r + gamma * q[s2][0].max(q[s2][1])
                };
            }
        }
        q = next;
    }
    q
}

fn one_hot(n: usize, s: usize) -> Activation {
    let mut bits = vec![false; n];
    bits[s] = true;
    Activation::from_binary(&bits)
}

#[test]
fn no_parameter_change_during_warmup() {
    let config = TrainConfig {
        warmup: 100,
        epoch_length: 100,
        epochs: 1,
        eval_steps: 0,
        ..TrainConfig::default()
    };
    let mut agent = Agent::new(4, 8, 2, config.clone(), 1).unwrap();
    let initial = agent.readout.clone();
    let mut env = ChainEnv::new(4, 1).unwrap();
    let mut features = IdentityFeatures::new(4);
    agent.train(&mut env, &mut features, None, |_| {}).unwrap();
    assert_eq!(agent.buffer.len(), 100);
    assert_eq!(agent.readout, initial);

    let mut agent = Agent::new(
        4,
        8,
        2,
        TrainConfig {
            epoch_length: 101,
            ..config
        },
        1,
    )
    .unwrap();
    agent.train(&mut env, &mut features, None, |_| {}).unwrap();
    assert_ne!(agent.readout, initial);
}

#[test]
fn three_state_chain_matches_value_iteration() {
    let (n, gamma) = (3, 0.9);
    let oracle = chain_value_iteration(n, gamma);
    assert!((oracle[1][1] - 1.0).abs() < 1e-12 && (oracle[0][1] - gamma).abs() < 1e-12);
    let config = TrainConfig {
        gamma,
        epoch_length: 1000,
        epochs: 10,
        eval_steps: 0,
        ..TrainConfig::default()
    };
    let mut agent = Agent::new(n, 16, 2, config, 5).unwrap();
    let mut env = ChainEnv::new(n, 5).unwrap();
    agent
        .train(&mut env, &mut IdentityFeatures::new(n), None, |_| {})
        .unwrap();
    for (s, expected) in oracle.iter().enumerate().take(n - 1) {
        let q = q_values(&agent.readout, &one_hot(n, s)).unwrap();
        for a in 0..2 {
            assert!(
                (q[a] - expected[a]).abs() < 2e-2,
                "state {s} action {a}: {} vs {}",
                q[a],
                expected[a]
            );
        }
        assert_eq!(argmax(&q), 1);
    }
}

#[test]
fn untrained_readout_on_cartpole_scores_like_a_fixed_policy() {
    let config = ExperimentConfig::preset("cartpole").unwrap();
    let topology = Arc::new(topology_for(&config, 0).unwrap());
    let mut features = Liquid::new(topology, config.liquid, config.run.window_ms, 1).unwrap();
    let agent = Agent::new(config.feature_dim(), 32, 2, config.agent.clone(), 2).unwrap();
    let mut env = CartPole::new(config.env.cartpole.clone(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stats = evaluate(
        &mut env,
        &mut features,
        &agent.readout,
        3000,
        0.0,
        &mut rng,
        None,
    )
    .unwrap();
    assert!(stats.gameplay_rewards.len() >= 50);
    let first: Vec<f64> = stats.gameplay_rewards[..50].to_vec();
    let mean = first.iter().sum::<f64>() / 50.0;
    assert!((8.0..=40.0).contains(&mean), "mean {mean}");
    assert!(first.iter().all(|&r| (1.0..=200.0).contains(&r)));
}

#[test]
fn evaluation_trace_is_consistent() {
    let config = TrainConfig {
        epoch_length: 500,
        epochs: 4,
        eval_steps: 0,
        ..TrainConfig::default()
    };
    let mut agent = Agent::new(6, 16, 2, config, 8).unwrap();
    let mut env = ChainEnv::new(6, 8).unwrap();
    let mut features = IdentityFeatures::new(6);
    agent.train(&mut env, &mut features, None, |_| {}).unwrap();
    let mut trace = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let stats = evaluate(
        &mut env,
        &mut features,
        &agent.readout,
        200,
        0.0,
        &mut rng,
        Some(&mut trace),
    )
    .unwrap();
    assert_eq!(trace.len(), 200);
    assert_eq!(
        trace.iter().filter(|r| r.terminal).count(),
        stats.gameplay_rewards.len()
    );
    let total: f64 = trace.iter().map(|r| r.reward).sum();
    assert_eq!(total, stats.total_reward);
    for w in trace.windows(2) {
        assert_eq!(w[1].gameplay, w[0].gameplay + usize::from(w[0].terminal));
    }
    // greedy: the recorded action is the argmax of the recorded values
    assert!(trace.iter().all(|r| r.action == argmax(&r.q)));
    // a trained chain agent always walks right
    assert!(trace.iter().all(|r| r.action == 1));
}

#[test]
fn terminal_targets_ignore_the_next_state() {
    let agent = Agent::new(3, 4, 2, TrainConfig::default(), 0).unwrap();
    let x = Arc::new(one_hot(3, 0));
    let y = Arc::new(one_hot(3, 2));
    let t = |terminal| Transition {
        x_t: Arc::clone(&x),
        action: 1,
        reward: 0.5,
        x_next: Arc::clone(&y),
        terminal,
    };
    let (done, live) = (t(true), t(false));
    let targets = q_target(&[&done, &live], &agent.readout, 0.95).unwrap();
    assert_eq!(targets[0], 0.5);
    let q_next = q_values(&agent.readout, &y).unwrap();
    assert!((targets[1] - (0.5 + 0.95 * q_next[0].max(q_next[1]))).abs() < 1e-15);
    assert_eq!(q_target(&[&live], &agent.readout, 0.0).unwrap(), vec![0.5]);
}

proptest! {
    #[test]
    fn clipped_rewards_keep_sign_and_cap_magnitude(r in -1e6f64..1e6) {
        let c = clip_reward(r);
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert_eq!(c.abs(), r.abs().min(1.0));
        if r != 0.0 {
            prop_assert_eq!(c.signum(), r.signum());
        }
    }

    #[test]
    fn buffer_keeps_the_most_recent(capacity in 1usize..50, pushes in 0usize..200) {
        let mut buffer = ReplayBuffer::new(capacity).unwrap();
        let mut oracle = VecDeque::new();
        for tag in 0..pushes {
            let x = Arc::new(Activation::from_counts(vec![tag as u16], u16::MAX).unwrap());
            buffer.push(Transition { x_t: Arc::clone(&x), action: 0, reward: 0.0, x_next: x, terminal: false });
            oracle.push_back(tag as u16);
            if oracle.len() > capacity {
                oracle.pop_front();
            }
            prop_assert!(buffer.len() <= capacity);
        }
        let mut tags: Vec<u16> = buffer.iter().map(|t| t.x_t.counts()[0]).collect();
        tags.sort_unstable();
        prop_assert_eq!(tags, Vec::from(oracle));
    }

    #[test]
    fn samples_come_from_the_buffer(capacity in 1usize..30, pushes in 1usize..60, batch in 1usize..40, seed in any::<u64>()) {
        let mut buffer = ReplayBuffer::new(capacity).unwrap();
        for tag in 0..pushes {
            let x = Arc::new(Activation::from_counts(vec![tag as u16], u16::MAX).unwrap());
            buffer.push(Transition { x_t: Arc::clone(&x), action: 0, reward: 0.0, x_next: x, terminal: false });
        }
        let lowest = pushes.saturating_sub(capacity) as u16;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = buffer.sample(batch, &mut rng);
        prop_assert_eq!(sample.len(), batch);
        prop_assert!(sample.iter().all(|t| t.x_t.counts()[0] >= lowest));
    }

    #[test]
    fn epsilon_decays_linearly_then_holds(total in 10usize..100_000, fraction in 0.01f64..1.0, step in 0usize..200_000) {
        let s = EpsilonSchedule { eps_start: 1.0, eps_final: 0.1, decay_fraction: fraction, total_steps: total };
        let e = s.eps_at(step);
        prop_assert!((0.1..=1.0).contains(&e));
        prop_assert_eq!(s.eps_at(0), 1.0);
        prop_assert!(s.eps_at(step + 1) <= e);
        let decay = fraction * total as f64;
        if step as f64 >= decay {
            prop_assert!((e - 0.1).abs() < 1e-12);
        } else {
            prop_assert!((e - (1.0 - 0.9 * step as f64 / decay)).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_selection_is_argmax(q in proptest::collection::vec(-10.0f64..10.0, 1..8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = select_action(&q, 0.0, &mut rng);
        prop_assert!(q.iter().all(|&v| v <= q[a]));
        prop_assert!(select_action(&q, 1.0, &mut rng) < q.len());
    }
}
