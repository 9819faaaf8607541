//! Episode-structured replay with hindsight goal relabeling. Relabeling
//! happens at sample time with the "future" strategy: with probability
//! k/(k+1) the desired goal is replaced by the achieved goal of a uniformly
//! chosen future timestep of the same episode, and the reward is recomputed.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ddpg::TrainingBatch;
use crate::envs::RewardModel;
use crate::error::{Error, Result};

/// One fixed-horizon episode: T+1 observations and achieved goals, T actions,
/// and the episode's sampled goal.
#[derive(Debug, Clone)]
pub struct Episode {
    pub observations: Vec<Vec<f64>>,
    pub achieved_goals: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub goal: Vec<f64>,
}

impl Episode {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// Where one sampled transition came from; used to verify the relabeling
/// contract from outside.
#[derive(Debug, Clone, Copy)]
pub struct SampleInfo {
    pub episode: usize,
    pub t: usize,
    pub relabeled: bool,
    pub future_t: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    episodes: VecDeque<Episode>,
    capacity: usize,
    horizon: usize,
    obs_dim: usize,
    action_dim: usize,
    goal_dim: usize,
    pub k_future: usize,
}

impl ReplayBuffer {
    pub fn new(
        capacity: usize,
        horizon: usize,
        obs_dim: usize,
        action_dim: usize,
        goal_dim: usize,
        k_future: usize,
    ) -> Self {
        assert!(capacity > 0 && horizon > 0);
        ReplayBuffer {
            episodes: VecDeque::with_capacity(capacity),
            capacity,
            horizon,
            obs_dim,
            action_dim,
            goal_dim,
            k_future,
        }
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn episode(&self, idx: usize) -> &Episode {
        &self.episodes[idx]
    }

    /// Probability that a sampled transition gets relabeled: k/(k+1).
    pub fn relabel_probability(&self) -> f64 {
        self.k_future as f64 / (self.k_future as f64 + 1.0)
    }

    pub fn store_episode(&mut self, episode: Episode) -> Result<()> {
        let t = self.horizon;
        if episode.actions.len() != t
            || episode.observations.len() != t + 1
            || episode.achieved_goals.len() != t + 1
        {
            return Err(Error::Contract(format!(
                "episode length mismatch: expected horizon {t}, got {} actions / {} observations",
                episode.actions.len(),
                episode.observations.len()
            )));
        }
        if episode.observations.iter().any(|o| o.len() != self.obs_dim)
            || episode.actions.iter().any(|a| a.len() != self.action_dim)
            || episode.achieved_goals.iter().any(|g| g.len() != self.goal_dim)
            || episode.goal.len() != self.goal_dim
        {
            return Err(Error::Contract("episode dimensions do not match buffer spec".into()));
        }
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front(); // FIFO eviction
        }
        self.episodes.push_back(episode);
        Ok(())
    }

    /// Uniform (episode, timestep) sampling with future-strategy relabeling.
    pub fn sample_with_her(
        &self,
        batch_size: usize,
        reward_model: &RewardModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrainingBatch> {
        Ok(self.sample_with_info(batch_size, reward_model, rng)?.0)
    }

    pub fn sample_with_info(
        &self,
        batch_size: usize,
        reward_model: &RewardModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TrainingBatch, Vec<SampleInfo>)> {
        if self.episodes.is_empty() {
            return Err(Error::Contract("cannot sample from an empty replay buffer".into()));
        }
        let p = self.relabel_probability();
        let t_max = self.horizon;
        let mut batch = TrainingBatch {
            obs: Vec::with_capacity(batch_size),
            actions: Vec::with_capacity(batch_size),
            next_obs: Vec::with_capacity(batch_size),
            goals: Vec::with_capacity(batch_size),
            rewards: Vec::with_capacity(batch_size),
        };
        let mut info = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let ep_idx = rng.random_range(0..self.episodes.len());
            let t = rng.random_range(0..t_max);
            let ep = &self.episodes[ep_idx];
            let relabel = self.k_future > 0 && rng.random::<f64>() < p;
            let (goal, future_t) = if relabel {
                let t_future = rng.random_range(t..t_max);
                // achieved goal after executing step t_future
                (ep.achieved_goals[t_future + 1].clone(), Some(t_future))
            } else {
                (ep.goal.clone(), None)
            };
            let reward = reward_model.reward(&ep.achieved_goals[t + 1], &goal);
            batch.obs.push(ep.observations[t].clone());
            batch.actions.push(ep.actions[t].clone());
            batch.next_obs.push(ep.observations[t + 1].clone());
            batch.goals.push(goal);
            batch.rewards.push(reward);
            info.push(SampleInfo {
                episode: ep_idx,
                t,
                relabeled: relabel,
                future_t,
            });
        }
        Ok((batch, info))
    }
}

/// Seam used by relabeling so it stays reward-model-agnostic.
pub fn recompute_reward(achieved: &[f64], goal: &[f64], reward_model: &RewardModel) -> f64 {
    reward_model.reward(achieved, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    const T: usize = 5;

    fn episode(tag: f64) -> Episode {
        // achieved goal after step t is [tag, t+1, 0]
        Episode {
            observations: (0..=T).map(|t| vec![tag, t as f64]).collect(),
            achieved_goals: (0..=T).map(|t| vec![tag, t as f64, 0.0]).collect(),
            actions: (0..T).map(|t| vec![t as f64]).collect(),
            goal: vec![tag, 100.0, 0.0],
        }
    }

    fn buffer(capacity: usize, k: usize) -> ReplayBuffer {
        ReplayBuffer::new(capacity, T, 2, 1, 3, k)
    }

    fn model() -> RewardModel {
        RewardModel::Continuous { delta: 0.05 }
    }

    #[test]
    fn store_into_empty_buffer() {
        let mut b = buffer(4, 4);
        b.store_episode(episode(1.0)).unwrap();
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn fifo_eviction_at_capacity() {
        let mut b = buffer(3, 4);
        for i in 0..4 {
            b.store_episode(episode(i as f64)).unwrap();
        }
        assert_eq!(b.len(), 3);
        // first episode (tag 0) evicted
        assert!((0..b.len()).all(|i| b.episode(i).goal[0] != 0.0));
    }

    #[test]
    fn stored_arrays_round_trip() {
        let mut b = buffer(2, 4);
        let ep = episode(7.0);
        b.store_episode(ep.clone()).unwrap();
        let stored = b.episode(0);
        assert_eq!(stored.observations, ep.observations);
        assert_eq!(stored.achieved_goals, ep.achieved_goals);
        assert_eq!(stored.actions, ep.actions);
        assert_eq!(stored.goal, ep.goal);
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let mut b = ReplayBuffer::new(2, T + 1, 2, 1, 3, 4);
        assert!(b.store_episode(episode(0.0)).is_err());
    }

    #[test]
    fn dim_mismatch_rejected() {
        let mut b = ReplayBuffer::new(2, T, 3, 1, 3, 4);
        assert!(b.store_episode(episode(0.0)).is_err());
    }

    #[test]
    fn empty_buffer_sampling_is_an_error() {
        let b = buffer(2, 4);
        assert!(b.sample_with_her(8, &model(), &mut rng(0)).is_err());
    }

    #[test]
    fn k_zero_never_relabels() {
        let mut b = buffer(4, 0);
        b.store_episode(episode(1.0)).unwrap();
        let (batch, info) = b.sample_with_info(64, &model(), &mut rng(1)).unwrap();
        assert!(info.iter().all(|i| !i.relabeled));
        // rewards equal stored rewards: goal [1, 100, 0] is never achieved
        assert!(batch.rewards.iter().all(|&r| r == -1.0));
        assert!(batch.goals.iter().all(|g| g == &vec![1.0, 100.0, 0.0]));
    }

    #[test]
    fn relabeled_goal_from_same_episode_future_step() {
        let mut b = buffer(8, 4);
        for i in 0..8 {
            b.store_episode(episode(i as f64)).unwrap();
        }
        let (batch, info) = b.sample_with_info(5000, &model(), &mut rng(2)).unwrap();
        for (j, inf) in info.iter().enumerate() {
            if inf.relabeled {
                let tf = inf.future_t.unwrap();
                assert!(tf >= inf.t && tf < T, "future strategy violated");
                let expect = &b.episode(inf.episode).achieved_goals[tf + 1];
                assert_eq!(&batch.goals[j], expect, "goal not from the same episode");
            }
            // every sampled reward matches the reward oracle on the goal used
            let ach = &b.episode(inf.episode).achieved_goals[inf.t + 1];
            assert_eq!(batch.rewards[j], model().reward(ach, &batch.goals[j]));
        }
    }

    #[test]
    fn relabel_to_own_achieved_goal_yields_success() {
        let mut b = buffer(4, 4);
        b.store_episode(episode(3.0)).unwrap();
        let (batch, info) = b.sample_with_info(2000, &model(), &mut rng(3)).unwrap();
        for (j, inf) in info.iter().enumerate() {
            if inf.relabeled && inf.future_t == Some(inf.t) {
                assert_eq!(batch.rewards[j], 0.0, "success by construction");
            }
        }
        assert!(info.iter().any(|i| i.relabeled && i.future_t == Some(i.t)));
    }

    #[test]
    fn relabel_fraction_matches_binomial_expectation() {
        let mut b = buffer(4, 4);
        b.store_episode(episode(0.0)).unwrap();
        let (_, info) = b.sample_with_info(100_000, &model(), &mut rng(4)).unwrap();
        let frac = info.iter().filter(|i| i.relabeled).count() as f64 / info.len() as f64;
        assert!((frac - 0.8).abs() < 0.01, "relabeled fraction {frac}");
    }

    #[test]
    fn sampling_is_reproducible_for_fixed_seed() {
        let mut b = buffer(4, 4);
        b.store_episode(episode(0.0)).unwrap();
        b.store_episode(episode(1.0)).unwrap();
        let (a, _) = b.sample_with_info(32, &model(), &mut rng(5)).unwrap();
        let (c, _) = b.sample_with_info(32, &model(), &mut rng(5)).unwrap();
        assert_eq!(a.goals, c.goals);
        assert_eq!(a.rewards, c.rewards);
        assert_eq!(a.obs, c.obs);
    }

    #[test]
    fn recompute_reward_delegates_to_reward_model() {
        let m = model();
        let mut r = rng(6);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
            let g: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
            assert_eq!(recompute_reward(&a, &g, &m), m.reward(&a, &g));
        }
        assert_eq!(recompute_reward(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3], &m), 0.0);
    }
}
