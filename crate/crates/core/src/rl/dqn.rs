//! Deep Q-learning with a replay buffer, ε-greedy exploration, a
//! periodically synced target network, and the Huber loss on the
//! temporal-difference error.

use std::collections::VecDeque;

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::learn::mlp::{Adam, Mlp, OutputActivation};
use crate::noise::{derive_seed, derive_seed2};
use crate::rl::env::Environment;
use crate::rl::{huber_grad, huber_loss, td_target};

/// DQN training hyperparameters. The network architecture, loss, reward and
/// episode structure are fixed by the protocol; the remaining knobs carry
/// standard defaults and are all adjustable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Episodes over which ε decays linearly from `eps_start` to `eps_end`.
    pub eps_decay_episodes: usize,
    /// Target network refresh period, in episodes.
    pub target_sync_episodes: usize,
    pub learning_rate: f64,
    pub hidden_layers: Vec<usize>,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            gamma: 0.99,
            replay_capacity: 10_000,
            batch_size: 128,
            eps_start: 0.9,
            eps_end: 0.05,
            eps_decay_episodes: 300,
            target_sync_episodes: 10,
            learning_rate: 1e-3,
            hidden_layers: vec![128, 128],
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.batch_size == 0 || self.replay_capacity == 0 {
            return Err(CoreError::Config(
                "episodes, batch_size and replay_capacity must be ≥ 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return Err(CoreError::Config("ε bounds must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::Config("gamma must lie in [0, 1]".into()));
        }
        if self.target_sync_episodes == 0 {
            return Err(CoreError::Config("target_sync_episodes must be ≥ 1".into()));
        }
        Ok(())
    }

    /// ε for a given (0-based) episode: linear decay, then flat.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.eps_decay_episodes == 0 || episode >= self.eps_decay_episodes {
            return self.eps_end;
        }
        let frac = episode as f64 / self.eps_decay_episodes as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

/// One environment transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    /// 0 or 1 under the improvement reward.
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO replay buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, n: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Transition> {
        (0..n)
            .map(|_| &self.buf[rng.random_range(0..self.buf.len())])
            .collect()
    }
}

/// Per-episode training log entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub cumulative_reward: f64,
    /// Mean monitoring KL over the episode's simulated steps, when the
    /// environment reports one.
    pub mean_kl: Option<f64>,
    pub epsilon: f64,
}

/// Greedy action under a Q-network (first maximum wins ties).
pub fn greedy_action(net: &Mlp, state: &[f64]) -> usize {
    let q = net.forward(state);
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

/// Trains a DQN agent on `env`. Returns the trained Q-network and the
/// per-episode log. Deterministic given the config seed.
pub fn train_dqn<E: Environment>(env: &mut E, config: &DqnConfig) -> Result<(Mlp, Vec<EpisodeLog>)> {
    config.validate()?;
    let mut dims = vec![env.state_dim()];
    dims.extend_from_slice(&config.hidden_layers);
    dims.push(env.n_actions());
    let mut policy = Mlp::new(dims, OutputActivation::Linear, derive_seed(config.seed, 0xE7))?;
    let mut target = policy.clone();
    let mut adam = Adam::new(policy.num_params(), config.learning_rate);
    let mut grad = vec![0.0; policy.num_params()];
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0xAC));
    let mut logs = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let epsilon = config.epsilon(episode);
        let mut state = env.reset(derive_seed2(config.seed, 1, episode as u64))?;
        let mut steps = 0usize;
        let mut cumulative_reward = 0.0;
        let mut kl_sum = 0.0;
        let mut kl_count = 0usize;
        loop {
            let action = if rng.random::<f64>() < epsilon {
                rng.random_range(0..env.n_actions())
            } else {
                greedy_action(&policy, &state)
            };
            let out = env.step(action)?;
            steps += 1;
            cumulative_reward += out.reward;
            if let Some(kl) = out.kl {
                kl_sum += kl;
                kl_count += 1;
            }
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                done: out.done,
            });
            state = out.state;
            if buffer.len() >= config.batch_size {
                let loss = update_step(
                    &mut policy,
                    &target,
                    &mut adam,
                    &mut grad,
                    &buffer,
                    config,
                    &mut rng,
                )?;
                if !loss.is_finite() {
                    return Err(CoreError::Training(format!(
                        "Q-learning diverged at episode {episode} (loss {loss})"
                    )));
                }
            }
            if out.done {
                break;
            }
        }
        if (episode + 1) % config.target_sync_episodes == 0 {
            target = policy.clone();
        }
        logs.push(EpisodeLog {
            episode,
            steps,
            cumulative_reward,
            mean_kl: (kl_count > 0).then(|| kl_sum / kl_count as f64),
            epsilon,
        });
    }
    Ok((policy, logs))
}

/// One minibatch update; returns the batch Huber loss.
fn update_step(
    policy: &mut Mlp,
    target: &Mlp,
    adam: &mut Adam,
    grad: &mut [f64],
    buffer: &ReplayBuffer,
    config: &DqnConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let batch = buffer.sample(config.batch_size, rng);
    grad.fill(0.0);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let n_actions = policy.output_dim();
    for t in batch {
        let cache = policy.forward_cached(&t.state, 0.0, &mut None);
        let q_sa = cache.output()[t.action];
        let max_next = if t.done {
            0.0
        } else {
            target
                .forward(&t.next_state)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let y = td_target(t.reward, t.done, config.gamma, max_next);
        let delta = q_sa - y;
        loss += huber_loss(delta) * scale;
        let mut d_out = vec![0.0; n_actions];
        d_out[t.action] = huber_grad(delta) * scale;
        policy.backward_into(&cache, &d_out, grad);
    }
    adam.step(policy.params_mut(), grad);
    Ok(loss)
}
