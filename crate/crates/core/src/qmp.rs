//! Q-switched mixture of primitives: frozen primitive policies propose
//! candidate actions through declarative objective adapters, and the target
//! critic picks the candidate with the highest Q-value. During warm-up the
//! target policy can be excluded so exploration is driven by the primitives.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ddpg::{ActionMode, Agent, Normalizer};
use crate::envs::{object_position, project_for_primitive, EnvSpec, GoalObservation};
use crate::error::{Error, Result};
use crate::tensor_nn::Mlp;

/// A frozen actor trained on a (usually simpler) source task.
#[derive(Debug, Clone)]
pub struct Primitive {
    pub actor: Mlp,
    pub normalizer: Normalizer,
    pub spec: EnvSpec,
}

impl Primitive {
    /// Deterministic action on the primitive's own (s', g'), adapted to the
    /// target action space: shorter actions are padded with `gripper_pad`,
    /// longer ones truncated.
    pub fn propose(
        &self,
        obs: &[f64],
        goal: &[f64],
        target_action_dim: usize,
        gripper_pad: f64,
    ) -> Result<Vec<f64>> {
        let norm = self.normalizer.normalize(obs, goal);
        let mut action = self.actor.forward(&norm)?;
        while action.len() < target_action_dim {
            action.push(gripper_pad);
        }
        action.truncate(target_action_dim);
        Ok(action)
    }
}

/// How a primitive's goal is derived from the target task's current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Fixed point in the workspace.
    GoalOverride { point: [f64; 3] },
    /// Object position plus a fixed offset (zero offset = "go to the object").
    GoalOffsetFromObject { offset: [f64; 3] },
    /// Object xy at a declared safe height, for clearing obstacles.
    GoalAboveObstacle { height: f64 },
    /// The episode's own sampled goal.
    EpisodeGoal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub primitive_index: usize,
    #[serde(flatten)]
    pub kind: ObjectiveKind,
}

/// s', g' for one primitive under one objective.
pub fn adjust_for_objective(
    obs: &GoalObservation,
    objective: &Objective,
    target_spec: &EnvSpec,
    primitive_spec: &EnvSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let projected = project_for_primitive(obs, target_spec, primitive_spec)?;
    let goal = match &objective.kind {
        ObjectiveKind::GoalOverride { point } => point.to_vec(),
        ObjectiveKind::EpisodeGoal => obs.desired_goal.clone(),
        ObjectiveKind::GoalOffsetFromObject { offset } => {
            let p = object_position(&obs.observation, target_spec).ok_or_else(|| {
                Error::Contract(format!(
                    "objective references object position but {} has no object",
                    target_spec.name
                ))
            })?;
            vec![p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]]
        }
        ObjectiveKind::GoalAboveObstacle { height } => {
            let p = object_position(&obs.observation, target_spec).ok_or_else(|| {
                Error::Contract(format!(
                    "objective references object position but {} has no object",
                    target_spec.name
                ))
            })?;
            vec![p[0], p[1], *height]
        }
    };
    Ok((projected.observation, goal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Target,
    Primitive { k: usize, l: usize },
    Random,
}

/// All actions proposed at one timestep, in target action space.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub actions: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Normal,
}

#[derive(Debug, Clone, Copy)]
pub struct SwitchConfig {
    /// Gripper component used when padding gripper-less primitive actions;
    /// -1 keeps the gripper closed, matching how such primitives trained.
    pub gripper_pad: f64,
    /// Whether the target policy also proposes during warm-up.
    pub warmup_includes_target: bool,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig {
            gripper_pad: -1.0,
            warmup_includes_target: false,
        }
    }
}

/// One candidate per objective (each objective names its primitive), plus the
/// target policy's noisy action outside warm-up.
pub fn build_candidate_set<R: Rng>(
    obs: &GoalObservation,
    primitives: &[Primitive],
    objectives: &[Objective],
    target_spec: &EnvSpec,
    agent: &Agent,
    phase: Phase,
    cfg: &SwitchConfig,
    rng: &mut R,
) -> Result<CandidateSet> {
    let mut set = CandidateSet {
        actions: Vec::new(),
        provenance: Vec::new(),
    };
    for (l, objective) in objectives.iter().enumerate() {
        let k = objective.primitive_index;
        let primitive = primitives.get(k).ok_or_else(|| {
            Error::Config(format!("objective {l} references missing primitive {k}"))
        })?;
        let (s, g) = adjust_for_objective(obs, objective, target_spec, &primitive.spec)?;
        let action = primitive.propose(&s, &g, target_spec.action_dim, cfg.gripper_pad)?;
        set.actions.push(action);
        set.provenance.push(Provenance::Primitive { k, l });
    }
    if phase == Phase::Normal || cfg.warmup_includes_target {
        let action = agent.propose_action(&obs.observation, &obs.desired_goal, ActionMode::Noisy, rng)?;
        set.actions.push(action);
        set.provenance.push(Provenance::Target);
    }
    if set.is_empty() {
        return Err(Error::Contract(
            "empty candidate set: no objectives and target policy excluded".into(),
        ));
    }
    Ok(set)
}

/// The executed action with its provenance and per-candidate Q-values.
#[derive(Debug, Clone)]
pub struct SelectionRecord {
    pub action: Vec<f64>,
    pub provenance: Provenance,
    pub q_values: Vec<f64>,
    pub random: bool,
}

/// Argmax-Q selection with epsilon-greedy override. `score` is the target
/// critic conditioned on the current (s, g); ties break to the lowest
/// candidate index.
pub fn q_switch_select<F, R>(
    candidates: &CandidateSet,
    score: F,
    action_dim: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionRecord>
where
    F: Fn(&[f64]) -> f64,
    R: Rng,
{
    if candidates.is_empty() {
        return Err(Error::Contract("q_switch_select on empty candidate set".into()));
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let action: Vec<f64> = (0..action_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        return Ok(SelectionRecord {
            action,
            provenance: Provenance::Random,
            q_values: Vec::new(),
            random: true,
        });
    }
    let mut q_values = Vec::with_capacity(candidates.len());
    for action in &candidates.actions {
        let q = score(action);
        if !q.is_finite() {
            return Err(Error::Divergence("non-finite Q-value while scoring candidates".into()));
        }
        q_values.push(q);
    }
    let mut best = 0;
    for (i, &q) in q_values.iter().enumerate() {
        if q > q_values[best] {
            best = i;
        }
    }
    Ok(SelectionRecord {
        action: candidates.actions[best].clone(),
        provenance: candidates.provenance[best],
        q_values,
        random: false,
    })
}

/// Per-provenance selection fractions over an epoch. Target and primitive
/// shares are fractions of the non-random selections and sum to 1; the
/// random share is the fraction of all selections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionShares {
    pub target: f64,
    pub primitive: f64,
    pub random: f64,
}

pub fn switch_share_metrics(records: &[SelectionRecord]) -> SelectionShares {
    let total = records.len();
    if total == 0 {
        return SelectionShares {
            target: 0.0,
            primitive: 0.0,
            random: 0.0,
        };
    }
    let random = records.iter().filter(|r| r.random).count();
    let target = records
        .iter()
        .filter(|r| !r.random && r.provenance == Provenance::Target)
        .count();
    let non_random = total - random;
    let (target_share, primitive_share) = if non_random > 0 {
        let t = target as f64 / non_random as f64;
        (t, 1.0 - t)
    } else {
        (0.0, 0.0)
    };
    SelectionShares {
        target: target_share,
        primitive: primitive_share,
        random: random as f64 / total as f64,
    }
}
