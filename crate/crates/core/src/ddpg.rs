//! DDPG actor-critic over the MLP substrate: TD targets through target
//! networks, critic regression, actor ascent on the critic, observation/goal
//! normalization, and noisy action proposal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::tensor_nn::{adam_step, polyak_update, Activation, AdamHyper, AdamState, GradientBundle, Mlp};

pub const NORMALIZER_STD_FLOOR: f64 = 1e-2;
pub const NORMALIZER_CLIP: f64 = 5.0;
/// Coefficient on the pre-tanh action penalty in the actor loss.
pub const ACTION_REG_COEFF: f64 = 1.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    /// Probability of replacing the selected action with a uniform random one.
    pub epsilon: f64,
    /// Gaussian exploration noise scale on noisy actions.
    pub sigma: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma: 0.98,
            tau: 0.05,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            batch_size: 256,
            epsilon: 0.3,
            sigma: 0.2,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.tau)
            && self.actor_lr > 0.0
            && self.critic_lr > 0.0
            && self.batch_size > 0
            && (0.0..=1.0).contains(&self.epsilon)
            && self.sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("hyperparameter out of declared range".into()))
        }
    }

    /// Sparse-reward return bound: targets are clipped to [-1/(1-gamma), 0].
    pub fn target_floor(&self) -> f64 {
        -1.0 / (1.0 - self.gamma)
    }
}

/// Welford running moments for one vector stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new(dim: usize) -> Self {
        RunningMoments {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn update(&mut self, sample: &[f64]) {
        assert_eq!(sample.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for i in 0..sample.len() {
            let delta = sample[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (sample[i] - self.mean[i]);
        }
    }

    /// Population std, floored so constant streams stay well-conditioned.
    pub fn std(&self, i: usize) -> f64 {
        let var = if self.count > 0 {
            self.m2[i] / self.count as f64
        } else {
            0.0
        };
        var.sqrt().max(NORMALIZER_STD_FLOOR)
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        for i in 0..x.len() {
            let v = (x[i] - self.mean[i]) / self.std(i);
            out.push(v.clamp(-NORMALIZER_CLIP, NORMALIZER_CLIP));
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Normalizer {
    pub obs: RunningMoments,
    pub goal: RunningMoments,
}

impl Normalizer {
    pub fn new(obs_dim: usize, goal_dim: usize) -> Self {
        Normalizer {
            obs: RunningMoments::new(obs_dim),
            goal: RunningMoments::new(goal_dim),
        }
    }

    /// Normalized obs || goal, each clipped to [-5, 5].
    pub fn normalize(&self, obs: &[f64], goal: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(obs.len() + goal.len());
        self.obs.normalize_into(obs, &mut out);
        self.goal.normalize_into(goal, &mut out);
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub next_obs: Vec<Vec<f64>>,
    pub goals: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rewards.len();
        if self.obs.len() != n || self.actions.len() != n || self.next_obs.len() != n || self.goals.len() != n {
            return Err(Error::Contract("training batch columns have unequal lengths".into()));
        }
        if self.rewards.iter().any(|&r| r != 0.0 && r != -1.0) {
            return Err(Error::Contract("training batch reward outside {-1, 0}".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Deterministic,
    Noisy,
}

/// Actor-critic agent. The actor maps normalized s||g to a tanh action; the
/// critic maps normalized s||g plus the raw action to a scalar Q.
#[derive(Debug, Clone)]
pub struct Agent {
    pub obs_dim: usize,
    pub goal_dim: usize,
    pub action_dim: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub normalizer: Normalizer,
    pub hyper: HyperParams,
}

impl Agent {
    pub fn new<R: Rng>(spec: &EnvSpec, hidden: &[usize], hyper: HyperParams, rng: &mut R) -> Self {
        let input = spec.observation_dim + spec.goal_dim;
        let mut actor_sizes = vec![input];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(spec.action_dim);
        let mut critic_sizes = vec![input + spec.action_dim];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, Activation::Tanh, rng);
        let critic = Mlp::new(&critic_sizes, Activation::Identity, rng);
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let actor_opt = AdamState::new(
            &actor,
            AdamHyper {
                learning_rate: hyper.actor_lr,
                ..AdamHyper::default()
            },
        );
        let critic_opt = AdamState::new(
            &critic,
            AdamHyper {
                learning_rate: hyper.critic_lr,
                ..AdamHyper::default()
            },
        );
        Agent {
            obs_dim: spec.observation_dim,
            goal_dim: spec.goal_dim,
            action_dim: spec.action_dim,
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            normalizer: Normalizer::new(spec.observation_dim, spec.goal_dim),
            hyper,
        }
    }

    fn critic_input(&self, norm_sg: &[f64], action: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(norm_sg.len() + action.len());
        x.extend_from_slice(norm_sg);
        x.extend_from_slice(action);
        x
    }

    /// Q(s, g, a) with the online critic.
    pub fn q_value(&self, obs: &[f64], goal: &[f64], action: &[f64]) -> Result<f64> {
        let norm = self.normalizer.normalize(obs, goal);
        let out = self.critic.forward(&self.critic_input(&norm, action))?;
        Ok(out[0])
    }

    /// y_i = clip(r_i + gamma * Q_target(s', g, pi_target(s', g)), [-1/(1-gamma), 0]).
    pub fn td_target(&self, batch: &TrainingBatch) -> Result<Vec<f64>> {
        batch.validate()?;
        let gamma = self.hyper.gamma;
        let floor = self.hyper.target_floor();
        let mut targets = Vec::with_capacity(batch.len());
        for i in 0..batch.len() {
            let norm = self.normalizer.normalize(&batch.next_obs[i], &batch.goals[i]);
            let a_next = self.target_actor.forward(&norm)?;
            let q = self.target_critic.forward(&self.critic_input(&norm, &a_next))?[0];
            if !q.is_finite() {
                return Err(Error::Divergence("target critic produced non-finite Q".into()));
            }
            targets.push((batch.rewards[i] + gamma * q).clamp(floor, 0.0));
        }
        Ok(targets)
    }

    /// One Adam step on mean squared TD error. Returns the pre-step loss.
    pub fn update_critic(&mut self, batch: &TrainingBatch) -> Result<f64> {
        let targets = self.td_target(batch)?;
        let n = batch.len() as f64;
        let mut grads = GradientBundle::zeros_like(&self.critic);
        let mut loss = 0.0;
        for i in 0..batch.len() {
            let norm = self.normalizer.normalize(&batch.obs[i], &batch.goals[i]);
            let x = self.critic_input(&norm, &batch.actions[i]);
            let cache = self.critic.forward_cached(&x)?;
            let q = cache.output()[0];
            if !q.is_finite() {
                return Err(Error::Divergence("critic produced non-finite Q".into()));
            }
            let err = q - targets[i];
            loss += err * err / n;
            let (g, _) = self.critic.backward(&cache, &[2.0 * err / n], None)?;
            grads.accumulate(&g);
        }
        adam_step(&mut self.critic, &grads, &mut self.critic_opt)?;
        Ok(loss)
    }

    /// Loss = -mean Q(s, g, pi(s, g)) + c * mean(pre-tanh^2); returns the
    /// actor-parameter gradients, the mean Q, and the loss value.
    pub fn actor_loss_and_grads(&self, batch: &TrainingBatch) -> Result<(GradientBundle, f64, f64)> {
        batch.validate()?;
        let n = batch.len() as f64;
        let reg_scale = 2.0 * ACTION_REG_COEFF / (n * self.action_dim as f64);
        let mut grads = GradientBundle::zeros_like(&self.actor);
        let mut mean_q = 0.0;
        let mut reg = 0.0;
        for i in 0..batch.len() {
            let norm = self.normalizer.normalize(&batch.obs[i], &batch.goals[i]);
            let actor_cache = self.actor.forward_cached(&norm)?;
            let action = actor_cache.output().to_vec();
            let x = self.critic_input(&norm, &action);
            let critic_cache = self.critic.forward_cached(&x)?;
            let q = critic_cache.output()[0];
            if !q.is_finite() {
                return Err(Error::Divergence("critic produced non-finite Q in actor update".into()));
            }
            mean_q += q / n;
            // dL/dQ = -1/n, chain through the critic into its action inputs
            let (_, critic_input_grad) = self.critic.backward(&critic_cache, &[-1.0 / n], None)?;
            let action_grad = &critic_input_grad[norm.len()..];
            let preact_grad: Vec<f64> = actor_cache
                .output_preact()
                .iter()
                .map(|&z| reg_scale * z)
                .collect();
            let (g, _) = self.actor.backward(&actor_cache, action_grad, Some(&preact_grad))?;
            grads.accumulate(&g);
            let preact = actor_cache.output_preact();
            reg += ACTION_REG_COEFF * preact.iter().map(|z| z * z).sum::<f64>()
                / (n * self.action_dim as f64);
        }
        Ok((grads, mean_q, -mean_q + reg))
    }

    /// One Adam step maximizing mean Q(s, g, pi(s, g)) with a pre-tanh action
    /// penalty. Returns the pre-step mean Q.
    pub fn update_actor(&mut self, batch: &TrainingBatch) -> Result<f64> {
        let (grads, mean_q, _) = self.actor_loss_and_grads(batch)?;
        adam_step(&mut self.actor, &grads, &mut self.actor_opt)?;
        Ok(mean_q)
    }

    pub fn polyak_targets(&mut self) -> Result<()> {
        polyak_update(&mut self.target_actor, &self.actor, self.hyper.tau)?;
        polyak_update(&mut self.target_critic, &self.critic, self.hyper.tau)
    }

    /// Actor action for (s, g); noisy mode adds per-component Gaussian noise
    /// and clips back into [-1, 1]. Epsilon-random replacement lives in the
    /// Q-switch, not here.
    pub fn propose_action<R: Rng>(
        &self,
        obs: &[f64],
        goal: &[f64],
        mode: ActionMode,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        check_dim("propose_action obs", self.obs_dim, obs.len())?;
        check_dim("propose_action goal", self.goal_dim, goal.len())?;
        let norm = self.normalizer.normalize(obs, goal);
        let mut action = self.actor.forward(&norm)?;
        if mode == ActionMode::Noisy && self.hyper.sigma > 0.0 {
            for a in action.iter_mut() {
                let noise: f64 = rng.sample(rand_distr::StandardNormal);
                *a = (*a + self.hyper.sigma * noise).clamp(-1.0, 1.0);
            }
        }
        Ok(action)
    }

    /// Feed one episode's observations and goals into the running normalizer.
    pub fn update_normalizer(&mut self, observations: &[Vec<f64>], goals: &[Vec<f64>]) {
        for o in observations {
            self.normalizer.obs.update(o);
        }
        for g in goals {
            self.normalizer.goal.update(g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvSpec, GoalSpaceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn tiny_spec() -> EnvSpec {
        EnvSpec {
            name: "tiny".into(),
            observation_dim: 1,
            action_dim: 1,
            goal_dim: 1,
            horizon: 5,
            has_object: false,
            has_gripper: false,
            goal_space: GoalSpaceKind::Continuous,
        }
    }

    fn tiny_agent(seed: u64) -> Agent {
        Agent::new(&tiny_spec(), &[8, 8], HyperParams::default(), &mut rng(seed))
    }

    fn tiny_batch(n: usize, reward: f64) -> TrainingBatch {
        TrainingBatch {
            obs: vec![vec![0.1]; n],
            actions: vec![vec![0.2]; n],
            next_obs: vec![vec![0.3]; n],
            goals: vec![vec![0.4]; n],
            rewards: vec![reward; n],
        }
    }

    #[test]
    fn td_target_gamma_zero_returns_rewards() {
        let mut agent = tiny_agent(1);
        agent.hyper.gamma = 0.0;
        let batch = tiny_batch(4, -1.0);
        let y = agent.td_target(&batch).unwrap();
        assert_eq!(y, vec![-1.0; 4]);
    }

    #[test]
    fn td_target_success_with_zero_critic_is_zero() {
        let mut agent = tiny_agent(2);
        agent.target_critic = crate::tensor_nn::Mlp::zeros(&[3, 1], Activation::Identity);
        let batch = tiny_batch(3, 0.0);
        let y = agent.td_target(&batch).unwrap();
        assert_eq!(y, vec![0.0; 3]);
    }

    #[test]
    fn td_target_hand_arithmetic_with_stub_critic() {
        // gamma = 0.98, r = -1, Q_target = -5 -> y = max(-1 - 4.9, -50) = -5.9
        let mut agent = tiny_agent(3);
        agent.hyper.gamma = 0.98;
        let mut stub = crate::tensor_nn::Mlp::zeros(&[3, 1], Activation::Identity);
        stub.biases[0][0] = -5.0;
        agent.target_critic = stub;
        let batch = tiny_batch(2, -1.0);
        let y = agent.td_target(&batch).unwrap();
        for v in y {
            assert!((v - (-5.9)).abs() < 1e-12);
        }
    }

    #[test]
    fn td_target_always_within_return_bound() {
        let agent = tiny_agent(4);
        let floor = agent.hyper.target_floor();
        let mut r = rng(5);
        for _ in 0..50 {
            let mut batch = tiny_batch(8, -1.0);
            for row in batch.next_obs.iter_mut() {
                row[0] = r.random_range(-1.0..1.0);
            }
            let y = agent.td_target(&batch).unwrap();
            assert!(y.iter().all(|&v| v >= floor && v <= 0.0));
        }
    }

    #[test]
    fn update_critic_perfect_predictions_give_zero_loss() {
        let mut agent = tiny_agent(6);
        agent.hyper.gamma = 0.0;
        // critic that always outputs 0 and a batch of successes (r = 0)
        agent.critic = crate::tensor_nn::Mlp::zeros(&[3, 8, 1], Activation::Identity);
        agent.target_critic = agent.critic.clone();
        let batch = tiny_batch(4, 0.0);
        let loss = agent.update_critic(&batch).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn update_critic_overfits_fixed_batch() {
        // median over 3 seeds: loss after 100 updates below the first loss
        let mut finals = Vec::new();
        for seed in 0..3 {
            let mut agent = tiny_agent(40 + seed);
            let batch = tiny_batch(8, -1.0);
            let first = agent.update_critic(&batch).unwrap();
            let mut last = first;
            for _ in 0..99 {
                last = agent.update_critic(&batch).unwrap();
            }
            finals.push((first, last));
        }
        finals.sort_by(|a, b| (a.1 / a.0).partial_cmp(&(b.1 / b.0)).unwrap());
        let (first, last) = finals[1];
        assert!(last < first, "loss did not decrease: {first} -> {last}");
    }

    #[test]
    fn update_critic_first_step_matches_analytic_gradient_direction() {
        // critic Q = w * a on a single transition; dL/dw = 2 (Q - y) a.
        let mut agent = tiny_agent(7);
        agent.hyper.gamma = 0.0;
        let mut critic = crate::tensor_nn::Mlp::zeros(&[3, 1], Activation::Identity);
        critic.weights[0] = vec![0.0, 0.0, 0.5]; // only the action input
        agent.critic = critic.clone();
        agent.target_critic = critic;
        let batch = TrainingBatch {
            obs: vec![vec![0.0]],
            actions: vec![vec![0.8]],
            next_obs: vec![vec![0.0]],
            goals: vec![vec![0.0]],
            rewards: vec![-1.0],
        };
        // Q = 0.4, y = -1, grad = 2 * 1.4 * 0.8 > 0 so Adam's first step moves
        // w down by ~lr
        let w_before = agent.critic.weights[0][2];
        agent.update_critic(&batch).unwrap();
        let w_after = agent.critic.weights[0][2];
        let lr = agent.critic_opt.hyper.learning_rate;
        assert!((w_before - w_after - lr).abs() < lr * 0.01, "step was {}", w_before - w_after);
    }

    // Critic computing Q = -5 |a - 0.3| via two relu units; the actor should
    // walk its action to ~0.3.
    fn vee_critic() -> crate::tensor_nn::Mlp {
        let mut c = crate::tensor_nn::Mlp::zeros(&[3, 2, 1], Activation::Identity);
        c.weights[0] = vec![0.0, 0.0, 1.0, 0.0, 0.0, -1.0];
        c.biases[0] = vec![-0.3, 0.3];
        c.weights[1] = vec![-5.0, -5.0];
        c
    }

    #[test]
    fn update_actor_constant_critic_leaves_only_regularizer() {
        let mut agent = tiny_agent(8);
        let mut stub = crate::tensor_nn::Mlp::zeros(&[3, 1], Activation::Identity);
        stub.biases[0][0] = 2.5;
        agent.critic = stub;
        let batch = tiny_batch(4, -1.0);
        let (grads, mean_q, _) = agent.actor_loss_and_grads(&batch).unwrap();
        assert!((mean_q - 2.5).abs() < 1e-12);
        // same gradients as a pure-regularizer objective: recompute with a
        // zero critic (Q term contributes nothing either way)
        agent.critic = crate::tensor_nn::Mlp::zeros(&[3, 1], Activation::Identity);
        let (reg_grads, _, _) = agent.actor_loss_and_grads(&batch).unwrap();
        for (a, b) in grads.d_weights.iter().zip(reg_grads.d_weights.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_actor_walks_to_known_optimum() {
        let mut agent = tiny_agent(9);
        agent.critic = vee_critic();
        agent.hyper.sigma = 0.0;
        let batch = tiny_batch(8, -1.0);
        for _ in 0..2000 {
            agent.update_actor(&batch).unwrap();
        }
        let a = agent
            .propose_action(&batch.obs[0], &batch.goals[0], ActionMode::Deterministic, &mut rng(0))
            .unwrap();
        assert!((a[0] - 0.3).abs() < 0.05, "actor action {} not near 0.3", a[0]);
    }

    #[test]
    fn actor_gradient_matches_finite_differences_through_critic() {
        let mut agent = tiny_agent(10);
        agent.critic = vee_critic();
        // move the critic kink away from the fd probe points
        agent.critic.biases[0] = vec![-0.29, 0.29];
        let batch = tiny_batch(3, -1.0);
        let (grads, _, _) = agent.actor_loss_and_grads(&batch).unwrap();
        let h = 1e-6;
        let mut worst = 0.0_f64;
        let mut probe = agent.clone();
        for layer in 0..agent.actor.weights.len() {
            for idx in 0..agent.actor.weights[layer].len() {
                let orig = agent.actor.weights[layer][idx];
                probe.actor.weights[layer][idx] = orig + h;
                let (_, _, plus) = probe.actor_loss_and_grads(&batch).unwrap();
                probe.actor.weights[layer][idx] = orig - h;
                let (_, _, minus) = probe.actor_loss_and_grads(&batch).unwrap();
                probe.actor.weights[layer][idx] = orig;
                let fd = (plus - minus) / (2.0 * h);
                let exact = grads.d_weights[layer][idx];
                let denom = exact.abs().max(fd.abs()).max(1e-6);
                worst = worst.max((fd - exact).abs() / denom);
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn propose_action_sigma_zero_equals_deterministic() {
        let mut agent = tiny_agent(11);
        agent.hyper.sigma = 0.0;
        let det = agent
            .propose_action(&[0.2], &[0.3], ActionMode::Deterministic, &mut rng(1))
            .unwrap();
        let noisy = agent
            .propose_action(&[0.2], &[0.3], ActionMode::Noisy, &mut rng(1))
            .unwrap();
        assert_eq!(det, noisy);
    }

    #[test]
    fn noisy_actions_stay_in_unit_box() {
        let agent = tiny_agent(12);
        let mut r = rng(2);
        for _ in 0..10_000 {
            let a = agent.propose_action(&[0.2], &[0.3], ActionMode::Noisy, &mut r).unwrap();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn noisy_action_sequence_replays_under_fixed_seed() {
        let agent = tiny_agent(13);
        let seq = |seed| {
            let mut r = rng(seed);
            (0..100)
                .map(|_| agent.propose_action(&[0.2], &[0.3], ActionMode::Noisy, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(7), seq(7));
    }

    #[test]
    fn normalizer_constant_stream_maps_to_zero() {
        let mut m = RunningMoments::new(2);
        for _ in 0..100 {
            m.update(&[3.0, -1.0]);
        }
        let mut out = Vec::new();
        m.normalize_into(&[3.0, -1.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn normalizer_matches_two_pass_oracle() {
        let mut m = RunningMoments::new(1);
        let mut r = rng(14);
        let samples: Vec<f64> = (0..10_000).map(|_| r.random_range(-3.0..7.0)).collect();
        for s in &samples {
            m.update(&[*s]);
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / samples.len() as f64;
        assert!((m.mean[0] - mean).abs() < 1e-9);
        assert!((m.std(0) - var.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn normalizer_clips_extreme_inputs() {
        let mut m = RunningMoments::new(1);
        for i in 0..100 {
            m.update(&[(i % 2) as f64]);
        }
        let mut out = Vec::new();
        m.normalize_into(&[100.0 * m.std(0)], &mut out);
        assert_eq!(out[0], 5.0);
        out.clear();
        m.normalize_into(&[-100.0 * m.std(0)], &mut out);
        assert_eq!(out[0], -5.0);
    }

    #[test]
    fn polyak_contract_bounds_target_drift() {
        let mut agent = tiny_agent(15);
        let batch = tiny_batch(8, -1.0);
        agent.update_critic(&batch).unwrap();
        let before = agent.target_critic.clone();
        let max_gap = agent
            .critic
            .weights
            .iter()
            .flatten()
            .zip(before.weights.iter().flatten())
            .map(|(o, t)| (o - t).abs())
            .fold(0.0_f64, f64::max);
        agent.polyak_targets().unwrap();
        let max_delta = agent
            .target_critic
            .weights
            .iter()
            .flatten()
            .zip(before.weights.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_delta <= agent.hyper.tau * max_gap + 1e-15);
    }

    #[test]
    fn batch_with_bad_reward_is_rejected() {
        let agent = tiny_agent(16);
        let mut batch = tiny_batch(2, -1.0);
        batch.rewards[1] = 0.5;
        assert!(agent.td_target(&batch).is_err());
    }
}
