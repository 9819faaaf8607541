//! Run configuration: a single JSON document whose keys mirror the struct
//! fields one-to-one; CLI flags override individual keys.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ddpg::HyperParams;
use crate::envs::{env_names, OBSTACLE_MAX};
use crate::error::{Error, Result};
use crate::qmp::{Objective, ObjectiveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Her,
    QmpHer,
    ScriptedCurriculum,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "her" => Ok(Algorithm::Her),
            "qmp_her" => Ok(Algorithm::QmpHer),
            "scripted_curriculum" => Ok(Algorithm::ScriptedCurriculum),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: String,
    pub algorithm: Algorithm,
    /// Checkpoint paths of frozen primitive policies.
    pub primitives: Vec<PathBuf>,
    /// Named objective preset; None picks the task default.
    pub objective_preset: Option<String>,
    /// Explicit objectives; overrides the preset when non-empty.
    pub objectives: Vec<Objective>,
    pub n_epochs: usize,
    /// M: episodes collected per epoch.
    pub episodes_per_epoch: usize,
    /// Optimization cycles per update block.
    pub opt_cycles: usize,
    /// Episodes between update blocks; one block = one policy update.
    pub episodes_per_block: usize,
    pub eval_episodes: usize,
    pub seed: u64,
    pub hidden_layers: Vec<usize>,
    pub hyper: HyperParams,
    /// Replay capacity, in episodes.
    pub buffer_capacity: usize,
    pub k_future: usize,
    /// Epochs of pure data collection before updates begin.
    pub warmup_epochs: usize,
    pub warmup_includes_target: bool,
    /// Gripper component appended when padding gripper-less primitive actions.
    pub gripper_pad: f64,
    /// Offset distance d for the approach-from-the-side objectives.
    pub offset_distance: f64,
    /// Elevated waypoint for the scripted curriculum's first phase.
    pub lift_point: Option<[f64; 3]>,
    pub out_dir: PathBuf,
    /// When false, the wall_time_s metrics column is written as zero so two
    /// equal-seed runs produce byte-identical CSVs.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: "reach_toy".to_string(),
            algorithm: Algorithm::Her,
            primitives: Vec::new(),
            objective_preset: None,
            objectives: Vec::new(),
            n_epochs: 30,
            episodes_per_epoch: 50,
            opt_cycles: 40,
            episodes_per_block: 2,
            eval_episodes: 50,
            seed: 1,
            hidden_layers: vec![256, 256, 256],
            hyper: HyperParams::default(),
            buffer_capacity: 10_000,
            k_future: 4,
            warmup_epochs: 1,
            warmup_includes_target: false,
            gripper_pad: -1.0,
            offset_distance: 0.06,
            lift_point: None,
            out_dir: PathBuf::from("runs/run"),
            record_wall_time: true,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !env_names().contains(&self.env.as_str()) {
            return Err(Error::Config(format!("unknown environment '{}'", self.env)));
        }
        self.hyper.validate()?;
        if self.n_epochs == 0
            || self.episodes_per_epoch == 0
            || self.episodes_per_block == 0
            || self.eval_episodes == 0
            || self.buffer_capacity == 0
            || self.hidden_layers.is_empty()
        {
            return Err(Error::Config("schedule and architecture values must be positive".into()));
        }
        match self.algorithm {
            Algorithm::ScriptedCurriculum => {
                if self.primitives.len() != 1 {
                    return Err(Error::Config(
                        "scripted_curriculum requires exactly one primitive checkpoint".into(),
                    ));
                }
            }
            Algorithm::QmpHer => {
                if self.primitives.is_empty() && self.warmup_epochs > 0 && !self.warmup_includes_target {
                    return Err(Error::Config(
                        "qmp_her with no primitives cannot warm up without the target policy; \
                         set warmup_epochs to 0 or warmup_includes_target to true"
                            .into(),
                    ));
                }
            }
            Algorithm::Her => {}
        }
        Ok(())
    }

    /// Objectives to use: explicit list, named preset, or the task default.
    pub fn resolve_objectives(&self) -> Result<Vec<Objective>> {
        if !self.objectives.is_empty() {
            return Ok(self.objectives.clone());
        }
        if self.primitives.is_empty() || self.algorithm != Algorithm::QmpHer {
            return Ok(Vec::new());
        }
        let preset = match &self.objective_preset {
            Some(name) => name.clone(),
            None => default_preset_for(&self.env)?.to_string(),
        };
        objective_preset(&preset, self.offset_distance)
    }

    pub fn default_lift_point(&self) -> [f64; 3] {
        self.lift_point.unwrap_or(match self.env.as_str() {
            // above the obstacle wall's center
            "pickobstacle_toy" => [0.5, 0.36, OBSTACLE_MAX[2] + 0.10],
            // centered and elevated near the release edge
            "pickthrow_toy" => [0.5, 0.55, 0.30],
            _ => [0.5, 0.35, 0.30],
        })
    }
}

fn default_preset_for(env: &str) -> Result<&'static str> {
    match env {
        "push_toy" | "pickplace_toy" => Ok("reach_ensemble"),
        "pickobstacle_toy" => Ok("above_obstacle_pair"),
        "pickthrow_toy" => Ok("throw_combo"),
        other => Err(Error::Config(format!(
            "no default objective preset for '{other}'; pass objectives explicitly"
        ))),
    }
}

/// Named objective sets. Objective indices refer to the order of the
/// `primitives` list in the run config.
pub fn objective_preset(name: &str, d: f64) -> Result<Vec<Objective>> {
    let on = |primitive_index: usize, kind: ObjectiveKind| Objective {
        primitive_index,
        kind,
    };
    match name {
        // One reach primitive steered at the object, the goal, and the four
        // side approaches.
        "reach_ensemble" => Ok(vec![
            on(0, ObjectiveKind::GoalOffsetFromObject { offset: [0.0, 0.0, 0.0] }),
            on(0, ObjectiveKind::EpisodeGoal),
            on(0, ObjectiveKind::GoalOffsetFromObject { offset: [-d, 0.0, 0.0] }),
            on(0, ObjectiveKind::GoalOffsetFromObject { offset: [d, 0.0, 0.0] }),
            on(0, ObjectiveKind::GoalOffsetFromObject { offset: [0.0, -d, 0.0] }),
            on(0, ObjectiveKind::GoalOffsetFromObject { offset: [0.0, d, 0.0] }),
        ]),
        // One pick-and-place primitive: clear the obstacle, then the goal.
        "above_obstacle_pair" => Ok(vec![
            on(
                0,
                ObjectiveKind::GoalAboveObstacle {
                    height: OBSTACLE_MAX[2] + 0.10,
                },
            ),
            on(0, ObjectiveKind::EpisodeGoal),
        ]),
        // Primitive 0 (pickobstacle): episode goal; primitive 1 (pickplace):
        // centered-elevated waypoint and the episode goal.
        "throw_combo" => Ok(vec![
            on(0, ObjectiveKind::EpisodeGoal),
            on(
                1,
                ObjectiveKind::GoalOverride {
                    point: [0.5, 0.55, 0.30],
                },
            ),
            on(1, ObjectiveKind::EpisodeGoal),
        ]),
        other => Err(Error::Config(format!("unknown objective preset '{other}'"))),
    }
}
