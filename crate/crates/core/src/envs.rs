//! Goal-conditioned toy environments: deterministic kinematic analogues of
//! the Fetch block-manipulation tasks. A velocity-commanded gripper moves in
//! a unit workspace; grasping is attachment-based, pushing resolves
//! sphere-overlap in the table plane. Sparse rewards only.
//!
//! Observation layout (documented per block, all f64):
//!   [grip_pos(3), grip_vel(3)]                    proprioception, always
//!   [open_cmd(1), attached(1)]                    only when has_gripper
//!   [obj_pos(3), obj_rel_to_grip(3), obj_vel(3)]  only when has_object

use rand_chacha::ChaCha8Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Success threshold for continuous goals (workspace units).
pub const GOAL_DELTA: f64 = 0.05;
/// Max per-step gripper displacement; actions in [-1,1] scale to this.
pub const ACTION_SCALE: f64 = 0.05;
/// Object resting height (center) on the table plane z = 0.
pub const OBJECT_Z: f64 = 0.025;
/// Gripper-object distance below which a "close" command attaches.
pub const GRASP_RADIUS: f64 = 0.05;
/// Table-plane contact distance for pushing.
// Strictly below GOAL_DELTA so an object riding at contact distance from a
// gripper parked on the goal still counts as success.
pub const CONTACT_DIST: f64 = 0.035;
/// Extra margin within which table contact is sticky: a touching object
/// follows the gripper's in-plane motion instead of only being shoved.
pub const CONTACT_STICK: f64 = 0.01;
/// Gripper must be at least this low to push the object.
pub const CONTACT_MAX_Z: f64 = 0.06;
/// Horizontal release-velocity multiplier for the throw task.
pub const FLIGHT_SCALE: f64 = 6.0;
/// Landings beyond this y are assigned to the nearest bucket.
pub const BUCKET_ZONE_Y: f64 = 0.72;
/// A landing counts as "in" a bucket within this distance of its center.
pub const BUCKET_RADIUS: f64 = 0.07;

/// Obstacle wall for pickobstacle_toy: axis-aligned box [min, max].
pub const OBSTACLE_MIN: [f64; 3] = [0.25, 0.33, 0.0];
pub const OBSTACLE_MAX: [f64; 3] = [0.75, 0.39, 0.15];

/// Eight bucket centers, two rows of four, beyond the gripper's reach.
pub fn bucket_centers() -> Vec<[f64; 3]> {
    let mut centers = Vec::with_capacity(8);
    for &y in &[0.80, 0.95] {
        for &x in &[0.2, 0.4, 0.6, 0.8] {
            centers.push([x, y, 0.02]);
        }
    }
    centers
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSpaceKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub observation_dim: usize,
    pub action_dim: usize,
    pub goal_dim: usize,
    pub horizon: usize,
    pub has_object: bool,
    pub has_gripper: bool,
    pub goal_space: GoalSpaceKind,
}

impl EnvSpec {
    /// Offset of the object block within the observation, if present.
    pub fn object_offset(&self) -> Option<usize> {
        if self.has_object {
            Some(6 + if self.has_gripper { 2 } else { 0 })
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Reach,
    Push,
    PickPlace,
    PickObstacle,
    PickThrow,
}

/// Distance rule used by both the environment and HER reward recomputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardModel {
    Continuous { delta: f64 },
    Buckets { centers: Vec<[f64; 3]>, radius: f64 },
}

impl RewardModel {
    pub fn for_env(kind: EnvKind) -> Self {
        match kind {
            EnvKind::PickThrow => RewardModel::Buckets {
                centers: bucket_centers(),
                radius: BUCKET_RADIUS,
            },
            _ => RewardModel::Continuous { delta: GOAL_DELTA },
        }
    }

    pub fn bucket_index(&self, point: &[f64]) -> Option<usize> {
        match self {
            RewardModel::Buckets { centers, radius } => {
                let (mut best, mut best_d2) = (0usize, f64::INFINITY);
                for (i, c) in centers.iter().enumerate() {
                    let d2 = dist2(point, c);
                    if d2 < best_d2 {
                        best = i;
                        best_d2 = d2;
                    }
                }
                (best_d2.sqrt() < *radius).then_some(best)
            }
            RewardModel::Continuous { .. } => None,
        }
    }

    /// Sparse reward: 0 on success, -1 otherwise. Continuous success is a
    /// strict distance inequality.
    pub fn reward(&self, achieved: &[f64], desired: &[f64]) -> f64 {
        assert_eq!(achieved.len(), desired.len(), "goal length mismatch");
        match self {
            RewardModel::Continuous { delta } => {
                if dist2(achieved, desired).sqrt() < *delta {
                    0.0
                } else {
                    -1.0
                }
            }
            RewardModel::Buckets { .. } => {
                match (self.bucket_index(achieved), self.bucket_index(desired)) {
                    (Some(a), Some(d)) if a == d => 0.0,
                    _ => -1.0,
                }
            }
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalObservation {
    pub observation: Vec<f64>,
    pub achieved_goal: Vec<f64>,
    pub desired_goal: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: GoalObservation,
    pub reward: f64,
    pub success: bool,
}

/// One toy environment instance. Deterministic: all randomness comes from
/// the RNG handed to `reset`.
#[derive(Debug, Clone)]
pub struct ToyEnv {
    pub kind: EnvKind,
    spec: EnvSpec,
    reward_model: RewardModel,
    grip: [f64; 3],
    grip_vel: [f64; 3],
    obj: [f64; 3],
    obj_vel: [f64; 3],
    attached: bool,
    open_cmd: f64,
    goal: Vec<f64>,
    t: usize,
    started: bool,
}

pub fn make_env(name: &str) -> Result<ToyEnv> {
    let kind = match name {
        "reach_toy" => EnvKind::Reach,
        "push_toy" => EnvKind::Push,
        "pickplace_toy" => EnvKind::PickPlace,
        "pickobstacle_toy" => EnvKind::PickObstacle,
        "pickthrow_toy" => EnvKind::PickThrow,
        other => return Err(Error::Config(format!("unknown environment '{other}'"))),
    };
    Ok(ToyEnv::new(kind))
}

pub fn env_names() -> [&'static str; 5] {
    ["reach_toy", "push_toy", "pickplace_toy", "pickobstacle_toy", "pickthrow_toy"]
}

impl ToyEnv {
    pub fn new(kind: EnvKind) -> Self {
        let (name, has_object, has_gripper, horizon, goal_space) = match kind {
            EnvKind::Reach => ("reach_toy", false, false, 30, GoalSpaceKind::Continuous),
            EnvKind::Push => ("push_toy", true, false, 50, GoalSpaceKind::Continuous),
            EnvKind::PickPlace => ("pickplace_toy", true, true, 50, GoalSpaceKind::Continuous),
            EnvKind::PickObstacle => ("pickobstacle_toy", true, true, 60, GoalSpaceKind::Continuous),
            EnvKind::PickThrow => ("pickthrow_toy", true, true, 60, GoalSpaceKind::Discrete),
        };
        let observation_dim = 6 + if has_gripper { 2 } else { 0 } + if has_object { 9 } else { 0 };
        let action_dim = if has_gripper { 4 } else { 3 };
        let spec = EnvSpec {
            name: name.to_string(),
            observation_dim,
            action_dim,
            goal_dim: 3,
            horizon,
            has_object,
            has_gripper,
            goal_space,
        };
        ToyEnv {
            kind,
            spec,
            reward_model: RewardModel::for_env(kind),
            grip: [0.5, 0.30, 0.10],
            grip_vel: [0.0; 3],
            obj: [0.0; 3],
            obj_vel: [0.0; 3],
            attached: false,
            open_cmd: 1.0,
            goal: vec![0.0; 3],
            t: 0,
            started: false,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn reward_model(&self) -> &RewardModel {
        &self.reward_model
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn reset(&mut self, rng: &mut ChaCha8Rng) -> GoalObservation {
        self.grip = [0.5, 0.30, 0.10];
        self.grip_vel = [0.0; 3];
        self.obj_vel = [0.0; 3];
        self.attached = false;
        self.open_cmd = 1.0;
        self.t = 0;
        self.started = true;
        match self.kind {
            EnvKind::Reach => {
                self.goal = vec![
                    rng.random_range(0.30..0.70),
                    rng.random_range(0.10..0.55),
                    rng.random_range(0.05..0.30),
                ];
            }
            EnvKind::Push => {
                self.obj = sample_table_point(rng, 0.35..0.65, 0.15..0.45);
                let g = sample_apart(rng, &self.obj, 0.35..0.65, 0.15..0.45, 0.10);
                self.goal = vec![g[0], g[1], OBJECT_Z];
            }
            EnvKind::PickPlace => {
                self.obj = sample_table_point(rng, 0.35..0.65, 0.15..0.45);
                let g = sample_apart(rng, &self.obj, 0.35..0.65, 0.15..0.45, 0.10);
                let z = rng.random_range(OBJECT_Z..0.25);
                self.goal = vec![g[0], g[1], z];
            }
            EnvKind::PickObstacle => {
                self.obj = sample_table_point(rng, 0.35..0.65, 0.12..0.28);
                let gx = rng.random_range(0.35..0.65);
                let gy = rng.random_range(0.44..0.60);
                let gz = rng.random_range(OBJECT_Z..0.25);
                self.goal = vec![gx, gy, gz];
            }
            EnvKind::PickThrow => {
                self.obj = sample_table_point(rng, 0.35..0.65, 0.15..0.45);
                let centers = bucket_centers();
                let idx = rng.random_range(0..centers.len());
                self.goal = centers[idx].to_vec();
            }
        }
        self.observe()
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if !self.started {
            return Err(Error::Contract("step called before reset".into()));
        }
        check_dim("env action", self.spec.action_dim, action.len())?;
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Contract("non-finite action component".into()));
        }
        if self.t >= self.spec.horizon {
            return Err(Error::Contract(format!(
                "episode already finished (horizon {})",
                self.spec.horizon
            )));
        }
        let a: Vec<f64> = action.iter().map(|x| x.clamp(-1.0, 1.0)).collect();

        let old_grip = self.grip;
        let old_obj = self.obj;
        let mut new_grip = [
            (self.grip[0] + a[0] * ACTION_SCALE).clamp(0.05, 0.95),
            (self.grip[1] + a[1] * ACTION_SCALE).clamp(0.05, 0.70),
            (self.grip[2] + a[2] * ACTION_SCALE).clamp(0.0, 0.40),
        ];
        let blocks = self.kind == EnvKind::PickObstacle;
        if blocks && inside_obstacle(&new_grip) {
            new_grip = old_grip; // collision clamp
        }
        let grip_vel = [
            new_grip[0] - old_grip[0],
            new_grip[1] - old_grip[1],
            new_grip[2] - old_grip[2],
        ];

        let close_cmd = self.spec.has_gripper && a[3] < 0.0;
        if self.spec.has_gripper {
            self.open_cmd = a[3];
        }

        let mut new_obj = old_obj;
        if self.spec.has_object {
            if self.attached {
                if close_cmd {
                    // carried object tracks the gripper
                    new_obj = [new_grip[0], new_grip[1], new_grip[2].max(OBJECT_Z)];
                    if blocks && inside_obstacle(&new_obj) {
                        new_grip = old_grip;
                        new_obj = old_obj;
                    }
                } else {
                    // release
                    self.attached = false;
                    new_obj = match self.kind {
                        EnvKind::PickThrow => self.ballistic_landing(&old_obj, &grip_vel),
                        _ => self.drop_to_rest(&old_obj),
                    };
                }
            } else {
                let in_reach = dist2(&new_grip, &old_obj).sqrt() < GRASP_RADIUS
                    || dist2(&old_grip, &old_obj).sqrt() < GRASP_RADIUS;
                if close_cmd && in_reach {
                    self.attached = true;
                    new_obj = [new_grip[0], new_grip[1], new_grip[2].max(OBJECT_Z)];
                    if blocks && inside_obstacle(&new_obj) {
                        self.attached = false;
                        new_grip = old_grip;
                        new_obj = old_obj;
                    }
                } else if on_table(&old_obj) {
                    new_obj = self.resolve_push(&new_grip, &grip_vel, &old_obj, blocks);
                }
            }
        }

        self.grip = new_grip;
        self.grip_vel = [
            new_grip[0] - old_grip[0],
            new_grip[1] - old_grip[1],
            new_grip[2] - old_grip[2],
        ];
        self.obj_vel = [
            new_obj[0] - old_obj[0],
            new_obj[1] - old_obj[1],
            new_obj[2] - old_obj[2],
        ];
        self.obj = new_obj;
        self.t += 1;

        let obs = self.observe();
        let reward = self.reward_model.reward(&obs.achieved_goal, &obs.desired_goal);
        Ok(StepResult {
            success: reward == 0.0,
            observation: obs,
            reward,
        })
    }

    /// Table-plane contact rule, in two parts: an object already touching the
    /// gripper follows the gripper's in-plane motion (sticky contact), and a
    /// low gripper within contact distance pushes the object away until the
    /// contact distance is restored.
    fn resolve_push(&self, grip: &[f64; 3], grip_vel: &[f64; 3], obj: &[f64; 3], blocks: bool) -> [f64; 3] {
        if grip[2] >= CONTACT_MAX_Z {
            return *obj;
        }
        let old_grip = [grip[0] - grip_vel[0], grip[1] - grip_vel[1]];
        let od = ((obj[0] - old_grip[0]).powi(2) + (obj[1] - old_grip[1]).powi(2)).sqrt();
        let mut obj = *obj;
        if od <= CONTACT_DIST + CONTACT_STICK {
            let dragged = [
                (obj[0] + grip_vel[0]).clamp(0.02, 0.98),
                (obj[1] + grip_vel[1]).clamp(0.02, 0.70),
                OBJECT_Z,
            ];
            if !(blocks && inside_obstacle(&dragged)) {
                obj = dragged;
            }
        }
        let dx = obj[0] - grip[0];
        let dy = obj[1] - grip[1];
        let d = (dx * dx + dy * dy).sqrt();
        if d >= CONTACT_DIST {
            return obj;
        }
        let (nx, ny) = if d > 1e-9 {
            (dx / d, dy / d)
        } else {
            // gripper landed exactly on the object: push along its motion
            let v = (grip_vel[0] * grip_vel[0] + grip_vel[1] * grip_vel[1]).sqrt();
            if v > 1e-9 {
                (grip_vel[0] / v, grip_vel[1] / v)
            } else {
                (0.0, 1.0)
            }
        };
        let pushed = [
            (grip[0] + nx * CONTACT_DIST).clamp(0.02, 0.98),
            (grip[1] + ny * CONTACT_DIST).clamp(0.02, 0.70),
            OBJECT_Z,
        ];
        if blocks && inside_obstacle(&pushed) {
            return obj;
        }
        pushed
    }

    fn drop_to_rest(&self, obj: &[f64; 3], ) -> [f64; 3] {
        let over_obstacle = self.kind == EnvKind::PickObstacle
            && obj[0] >= OBSTACLE_MIN[0]
            && obj[0] <= OBSTACLE_MAX[0]
            && obj[1] >= OBSTACLE_MIN[1]
            && obj[1] <= OBSTACLE_MAX[1];
        let rest_z = if over_obstacle {
            OBSTACLE_MAX[2] + OBJECT_Z
        } else {
            OBJECT_Z
        };
        [obj[0], obj[1], rest_z]
    }

    /// Straight-line flight scaled by the release velocity; landings beyond
    /// the table edge snap to the nearest bucket center.
    fn ballistic_landing(&self, obj: &[f64; 3], release_vel: &[f64; 3]) -> [f64; 3] {
        let lx = obj[0] + release_vel[0] * FLIGHT_SCALE;
        let ly = obj[1] + release_vel[1] * FLIGHT_SCALE;
        if ly >= BUCKET_ZONE_Y {
            let landing = [lx, ly, 0.02];
            let centers = bucket_centers();
            let mut best = centers[0];
            let mut best_d2 = f64::INFINITY;
            for c in &centers {
                let d2 = dist2(&landing, c);
                if d2 < best_d2 {
                    best = *c;
                    best_d2 = d2;
                }
            }
            best
        } else {
            [lx.clamp(0.02, 0.98), ly.clamp(0.02, 0.70), OBJECT_Z]
        }
    }

    pub fn compute_reward(&self, achieved: &[f64], desired: &[f64]) -> Result<f64> {
        check_dim("compute_reward goals", achieved.len(), desired.len())?;
        Ok(self.reward_model.reward(achieved, desired))
    }

    fn observe(&self) -> GoalObservation {
        let mut obs = Vec::with_capacity(self.spec.observation_dim);
        obs.extend_from_slice(&self.grip);
        obs.extend_from_slice(&self.grip_vel);
        if self.spec.has_gripper {
            obs.push(self.open_cmd);
            obs.push(if self.attached { 1.0 } else { 0.0 });
        }
        if self.spec.has_object {
            obs.extend_from_slice(&self.obj);
            obs.push(self.obj[0] - self.grip[0]);
            obs.push(self.obj[1] - self.grip[1]);
            obs.push(self.obj[2] - self.grip[2]);
            obs.extend_from_slice(&self.obj_vel);
        }
        let achieved = if self.spec.has_object {
            self.obj.to_vec()
        } else {
            self.grip.to_vec()
        };
        GoalObservation {
            observation: obs,
            achieved_goal: achieved,
            desired_goal: self.goal.clone(),
        }
    }
}

fn on_table(obj: &[f64; 3]) -> bool {
    obj[2] <= OBJECT_Z + 1e-9 && obj[1] <= 0.70
}

pub fn inside_obstacle(p: &[f64; 3]) -> bool {
    (0..3).all(|i| p[i] > OBSTACLE_MIN[i] && p[i] < OBSTACLE_MAX[i])
}

fn sample_table_point(
    rng: &mut ChaCha8Rng,
    x: std::ops::Range<f64>,
    y: std::ops::Range<f64>,
) -> [f64; 3] {
    [rng.random_range(x), rng.random_range(y), OBJECT_Z]
}

fn sample_apart(
    rng: &mut ChaCha8Rng,
    from: &[f64; 3],
    x: std::ops::Range<f64>,
    y: std::ops::Range<f64>,
    min_dist: f64,
) -> [f64; 3] {
    loop {
        let p = sample_table_point(rng, x.clone(), y.clone());
        let dx = p[0] - from[0];
        let dy = p[1] - from[1];
        if (dx * dx + dy * dy).sqrt() >= min_dist {
            return p;
        }
    }
}

/// Restrict an observation to the blocks a primitive trained on a smaller
/// environment understands. Goals are left untouched; the objective adapter
/// substitutes them afterwards.
pub fn project_for_primitive(
    obs: &GoalObservation,
    source: &EnvSpec,
    target: &EnvSpec,
) -> Result<GoalObservation> {
    check_dim("project source observation", source.observation_dim, obs.observation.len())?;
    if target.has_gripper && !source.has_gripper {
        return Err(Error::Contract(format!(
            "cannot project {} onto {}: source has no gripper block",
            source.name, target.name
        )));
    }
    if target.has_object && !source.has_object {
        return Err(Error::Contract(format!(
            "cannot project {} onto {}: source has no object block",
            source.name, target.name
        )));
    }
    let mut out = Vec::with_capacity(target.observation_dim);
    out.extend_from_slice(&obs.observation[0..6]);
    let src_gripper_at = 6;
    if target.has_gripper {
        out.extend_from_slice(&obs.observation[src_gripper_at..src_gripper_at + 2]);
    }
    if target.has_object {
        let off = source.object_offset().unwrap();
        out.extend_from_slice(&obs.observation[off..off + 9]);
    }
    debug_assert_eq!(out.len(), target.observation_dim);
    Ok(GoalObservation {
        observation: out,
        achieved_goal: obs.achieved_goal.clone(),
        desired_goal: obs.desired_goal.clone(),
    })
}

/// Object position slice of an observation, if the env has an object.
pub fn object_position(obs: &[f64], spec: &EnvSpec) -> Option<[f64; 3]> {
    spec.object_offset()
        .map(|off| [obs[off], obs[off + 1], obs[off + 2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn reset_is_deterministic_for_fixed_seed() {
        let mut env = make_env("reach_toy").unwrap();
        let a = env.reset(&mut rng(7));
        let mut env2 = make_env("reach_toy").unwrap();
        let b = env2.reset(&mut rng(7));
        assert_eq!(a, b);
    }

    #[test]
    fn push_goals_lie_on_the_table() {
        let mut env = make_env("push_toy").unwrap();
        let mut r = rng(3);
        for _ in 0..50 {
            let obs = env.reset(&mut r);
            assert_eq!(obs.desired_goal[2], OBJECT_Z);
        }
    }

    #[test]
    fn throw_goal_is_one_of_eight_bucket_centers() {
        let mut env = make_env("pickthrow_toy").unwrap();
        let centers = bucket_centers();
        assert_eq!(centers.len(), 8);
        let mut r = rng(9);
        for _ in 0..50 {
            let obs = env.reset(&mut r);
            assert!(centers.iter().any(|c| c.as_slice() == obs.desired_goal.as_slice()));
        }
    }

    #[test]
    fn zero_action_leaves_gripper_and_achieved_goal_unchanged() {
        let mut env = make_env("reach_toy").unwrap();
        let obs = env.reset(&mut rng(1));
        let step = env.step(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(step.observation.observation[..3], obs.observation[..3]);
        assert_eq!(step.observation.achieved_goal, obs.achieved_goal);
    }

    #[test]
    fn reach_achieved_goal_is_gripper_position() {
        let mut env = make_env("reach_toy").unwrap();
        env.reset(&mut rng(2));
        let step = env.step(&[1.0, -0.5, 0.25]).unwrap();
        assert_eq!(step.observation.achieved_goal, step.observation.observation[..3].to_vec());
    }

    // Hand-integrated 5-step trajectory: gripper starts behind the object on
    // the contact line and pushes +x. Closed form: once in contact the object
    // stays exactly CONTACT_DIST ahead of the gripper.
    #[test]
    fn push_contact_follows_closed_form_trajectory() {
        let mut env = make_env("push_toy").unwrap();
        env.reset(&mut rng(4));
        // place the scenario by hand
        env.grip = [0.40, 0.30, 0.03];
        env.obj = [0.45, 0.30, OBJECT_Z];
        let mut expect_grip_x = 0.40;
        for _ in 0..5 {
            let step = env.step(&[1.0, 0.0, 0.0]).unwrap();
            expect_grip_x += ACTION_SCALE;
            let gx = step.observation.observation[0];
            assert!((gx - expect_grip_x).abs() < 1e-12);
            let ox = step.observation.achieved_goal[0];
            assert!((ox - (expect_grip_x + CONTACT_DIST)).abs() < 1e-12, "object not pushed to contact distance");
            assert_eq!(step.observation.achieved_goal[2], OBJECT_Z);
        }
    }

    #[test]
    fn push_object_never_leaves_table_plane() {
        let mut env = make_env("push_toy").unwrap();
        let mut r = rng(8);
        for _ in 0..5 {
            env.reset(&mut r);
            for _ in 0..env.spec().horizon {
                let a: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
                let step = env.step(&a).unwrap();
                assert_eq!(step.observation.achieved_goal[2], OBJECT_Z);
            }
        }
    }

    #[test]
    fn reward_matches_brute_force_predicate_on_random_pairs() {
        let env = make_env("push_toy").unwrap();
        let mut r = rng(12);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
            let d: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
            // independent re-implementation of the distance rule
            let dist = ((a[0] - d[0]).powi(2) + (a[1] - d[1]).powi(2) + (a[2] - d[2]).powi(2)).sqrt();
            let want = if dist < GOAL_DELTA { 0.0 } else { -1.0 };
            assert_eq!(env.compute_reward(&a, &d).unwrap(), want);
        }
    }

    #[test]
    fn reward_boundary_is_strict() {
        let env = make_env("reach_toy").unwrap();
        let a = [0.0, 0.0, 0.0];
        let d = [GOAL_DELTA, 0.0, 0.0];
        assert_eq!(env.compute_reward(&a, &d).unwrap(), -1.0);
        assert_eq!(env.compute_reward(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn episode_runs_exactly_horizon_steps() {
        let mut env = make_env("reach_toy").unwrap();
        env.reset(&mut rng(5));
        for _ in 0..env.spec().horizon {
            env.step(&[0.1, 0.0, 0.0]).unwrap();
        }
        let err = env.step(&[0.1, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("finished"));
    }

    #[test]
    fn action_length_mismatch_is_an_error() {
        let mut env = make_env("reach_toy").unwrap();
        env.reset(&mut rng(5));
        assert!(env.step(&[0.1, 0.0]).is_err());
    }

    #[test]
    fn obstacle_blocks_straight_line_paths() {
        let mut env = make_env("pickobstacle_toy").unwrap();
        env.reset(&mut rng(6));
        env.grip = [0.5, 0.30, 0.05];
        // drive straight at the wall; y would cross into [0.33, 0.39]
        let mut last_y = env.grip[1];
        for _ in 0..10 {
            let step = env.step(&[0.0, 1.0, 0.0, 1.0]).unwrap();
            last_y = step.observation.observation[1];
        }
        assert!(last_y <= OBSTACLE_MIN[1] + 1e-9, "gripper passed through the obstacle: y = {last_y}");
    }

    #[test]
    fn pick_attach_lift_keeps_object_at_or_above_table() {
        let mut env = make_env("pickplace_toy").unwrap();
        env.reset(&mut rng(10));
        // teleport the gripper onto the object, close, and lift
        env.grip = env.obj;
        for _ in 0..8 {
            let step = env.step(&[0.0, 0.0, 1.0, -1.0]).unwrap();
            assert!(step.observation.achieved_goal[2] >= OBJECT_Z - 1e-12);
        }
        assert!(env.obj[2] > 0.2, "object was not lifted: z = {}", env.obj[2]);
    }

    #[test]
    fn throw_release_lands_in_a_bucket_region() {
        let mut env = make_env("pickthrow_toy").unwrap();
        env.reset(&mut rng(11));
        env.grip = env.obj;
        // grasp
        env.step(&[0.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(env.attached);
        // carry the object to the table edge, then throw forward
        while env.grip[1] < 0.64 {
            env.step(&[0.0, 1.0, 0.2, -1.0]).unwrap();
        }
        let step = env.step(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        let rm = env.reward_model().clone();
        let idx = rm.bucket_index(&step.observation.achieved_goal);
        assert!(idx.is_some(), "object landed outside every bucket: {:?}", step.observation.achieved_goal);
    }

    #[test]
    fn projection_drops_object_block_and_keeps_proprioception() {
        let mut push = make_env("push_toy").unwrap();
        let mut r = rng(14);
        let reach_spec = make_env("reach_toy").unwrap().spec().clone();
        let push_spec = push.spec().clone();
        for _ in 0..100 {
            let obs = push.reset(&mut r);
            let projected = project_for_primitive(&obs, &push_spec, &reach_spec).unwrap();
            assert_eq!(projected.observation.len(), reach_spec.observation_dim);
            // slice oracle: proprioception block equals the source prefix
            assert_eq!(projected.observation[..], obs.observation[..6]);
        }
    }

    #[test]
    fn projection_onto_self_is_identity() {
        let mut env = make_env("pickplace_toy").unwrap();
        let obs = env.reset(&mut rng(15));
        let spec = env.spec().clone();
        let projected = project_for_primitive(&obs, &spec, &spec).unwrap();
        assert_eq!(projected.observation, obs.observation);
    }

    #[test]
    fn projection_rejects_incompatible_layouts() {
        let mut reach = make_env("reach_toy").unwrap();
        let obs = reach.reset(&mut rng(16));
        let reach_spec = reach.spec().clone();
        let push_spec = make_env("push_toy").unwrap().spec().clone();
        assert!(project_for_primitive(&obs, &reach_spec, &push_spec).is_err());
    }

    #[test]
    fn success_iff_reward_zero_over_random_rollouts() {
        let mut r = rng(17);
        for name in env_names() {
            let mut env = make_env(name).unwrap();
            env.reset(&mut r);
            let dim = env.spec().action_dim;
            for _ in 0..env.spec().horizon {
                let a: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
                let step = env.step(&a).unwrap();
                assert!(step.reward == 0.0 || step.reward == -1.0);
                assert_eq!(step.success, step.reward == 0.0);
            }
        }
    }
}
