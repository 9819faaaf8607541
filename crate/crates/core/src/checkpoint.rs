//! Policy checkpoints: a single JSON document with a version header, the
//! source environment spec, actor/critic networks (layer sizes, activations,
//! row-major parameter arrays) and normalizer moments. Serialization is
//! canonical, so save -> load -> save is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ddpg::{Agent, HyperParams, Normalizer};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::qmp::Primitive;
use crate::tensor_nn::AdamState;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub version: u32,
    pub env_spec: EnvSpec,
    pub actor: crate::tensor_nn::Mlp,
    pub critic: crate::tensor_nn::Mlp,
    pub target_actor: crate::tensor_nn::Mlp,
    pub target_critic: crate::tensor_nn::Mlp,
    pub normalizer: Normalizer,
}

impl PolicyCheckpoint {
    pub fn from_agent(agent: &Agent, env_spec: &EnvSpec) -> Self {
        PolicyCheckpoint {
            version: CHECKPOINT_VERSION,
            env_spec: env_spec.clone(),
            actor: agent.actor.clone(),
            critic: agent.critic.clone(),
            target_actor: agent.target_actor.clone(),
            target_critic: agent.target_critic.clone(),
            normalizer: agent.normalizer.clone(),
        }
    }

    /// Rebuild an agent for continued use. Optimizer moments are not part of
    /// the checkpoint; they restart at zero.
    pub fn into_agent(self, hyper: HyperParams) -> Result<Agent> {
        self.validate_dims()?;
        let actor_opt = AdamState::new(
            &self.actor,
            crate::tensor_nn::AdamHyper {
                learning_rate: hyper.actor_lr,
                ..Default::default()
            },
        );
        let critic_opt = AdamState::new(
            &self.critic,
            crate::tensor_nn::AdamHyper {
                learning_rate: hyper.critic_lr,
                ..Default::default()
            },
        );
        Ok(Agent {
            obs_dim: self.env_spec.observation_dim,
            goal_dim: self.env_spec.goal_dim,
            action_dim: self.env_spec.action_dim,
            actor: self.actor,
            critic: self.critic,
            target_actor: self.target_actor,
            target_critic: self.target_critic,
            actor_opt,
            critic_opt,
            normalizer: self.normalizer,
            hyper,
        })
    }

    fn validate_dims(&self) -> Result<()> {
        let spec = &self.env_spec;
        let sg = spec.observation_dim + spec.goal_dim;
        let ok = self.actor.input_dim() == sg
            && self.actor.output_dim() == spec.action_dim
            && self.critic.input_dim() == sg + spec.action_dim
            && self.critic.output_dim() == 1
            && self.actor.shape_congruent(&self.target_actor)
            && self.critic.shape_congruent(&self.target_critic)
            && self.normalizer.obs.mean.len() == spec.observation_dim
            && self.normalizer.goal.mean.len() == spec.goal_dim;
        if !ok {
            return Err(Error::CheckpointDims(format!(
                "network shapes do not match env spec '{}'",
                spec.name
            )));
        }
        if !(self.actor.all_finite() && self.critic.all_finite()) {
            return Err(Error::CheckpointCorrupt("non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("checkpoint serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let value: serde_json::Value = serde_json::from_slice(&bytes)
            .map_err(|e| Error::CheckpointCorrupt(format!("{}: {e}", path.display())))?;
        let found = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CheckpointCorrupt(format!("{}: missing version field", path.display())))?
            as u32;
        if found != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                expected: CHECKPOINT_VERSION,
                found,
            });
        }
        let ckpt: PolicyCheckpoint = serde_json::from_value(value)
            .map_err(|e| Error::CheckpointCorrupt(format!("{}: {e}", path.display())))?;
        ckpt.validate_dims()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(agent: &Agent, env_spec: &EnvSpec, path: &Path) -> Result<()> {
    PolicyCheckpoint::from_agent(agent, env_spec).save(path)
}

/// Load a checkpoint as a frozen primitive for use inside `target_spec`,
/// verifying its observation blocks can be projected out of the target's and
/// its action can be adapted.
pub fn load_primitive(path: &Path, target_spec: &EnvSpec) -> Result<Primitive> {
    let ckpt = PolicyCheckpoint::load(path)?;
    let spec = ckpt.env_spec.clone();
    if spec.goal_dim != target_spec.goal_dim {
        return Err(Error::CheckpointDims(format!(
            "primitive '{}' goal dim {} does not match target '{}' goal dim {}",
            spec.name, spec.goal_dim, target_spec.name, target_spec.goal_dim
        )));
    }
    if (spec.has_gripper && !target_spec.has_gripper) || (spec.has_object && !target_spec.has_object) {
        return Err(Error::CheckpointDims(format!(
            "primitive '{}' observes blocks that target '{}' does not provide",
            spec.name, target_spec.name
        )));
    }
    Ok(Primitive {
        actor: ckpt.actor,
        normalizer: ckpt.normalizer,
        spec,
    })
}
