//! Training and evaluation orchestrator: collects episodes with the
//! configured behaviour policy (plain noisy actor, Q-switched primitive
//! mixture, or the scripted two-phase curriculum), applies HER updates on a
//! fixed schedule, evaluates the deterministic actor, and writes metrics and
//! checkpoints.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{load_primitive, save_checkpoint};
use crate::config::{Algorithm, RunConfig};
use crate::ddpg::{ActionMode, Agent};
use crate::envs::{make_env, project_for_primitive, EnvSpec, GoalObservation, ToyEnv};
use crate::error::{Error, Result};
use crate::her::{Episode, ReplayBuffer};
use crate::qmp::{
    build_candidate_set, q_switch_select, switch_share_metrics, Objective, Phase, Primitive,
    Provenance, SelectionRecord, SwitchConfig,
};

/// Scripted curriculum phase boundaries (timesteps).
pub const SCRIPT_PHASE1_END: usize = 20;
pub const SCRIPT_PHASE2_END: usize = 40;

pub const METRICS_HEADER: &str = "epoch,policy_updates,env_steps,eval_success_rate,mean_q,critic_loss,share_target,share_primitive,share_random,wall_time_s";

#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub epoch: usize,
    pub policy_updates: u64,
    pub env_steps: u64,
    pub eval_success_rate: f64,
    pub mean_q: f64,
    pub critic_loss: f64,
    pub share_target: f64,
    pub share_primitive: f64,
    pub share_random: f64,
    pub wall_time_s: f64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.epoch,
            self.policy_updates,
            self.env_steps,
            self.eval_success_rate,
            self.mean_q,
            self.critic_loss,
            self.share_target,
            self.share_primitive,
            self.share_random,
            self.wall_time_s
        )
    }
}

/// One executed behaviour-policy action, for provenance analysis and replay
/// verification.
#[derive(Debug, Clone)]
pub struct StepLog {
    pub epoch: usize,
    pub episode: usize,
    pub t: usize,
    pub provenance: Provenance,
    pub action: Vec<f64>,
}

#[derive(Debug)]
pub struct TrainReport {
    pub rows: Vec<MetricsRow>,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub action_log: Vec<StepLog>,
}

// Disjoint RNG streams derived from the run seed.
const SALT_INIT: u64 = 0x5eed_0001;
const SALT_ENV: u64 = 0x5eed_0002;
const SALT_ACTION: u64 = 0x5eed_0003;
const SALT_BUFFER: u64 = 0x5eed_0004;
const SALT_EVAL: u64 = 0x5eed_0005;

fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt))
}

/// Honor the output-root environment variable for relative output paths.
pub fn resolve_out_dir(out_dir: &std::path::Path) -> PathBuf {
    if out_dir.is_absolute() {
        return out_dir.to_path_buf();
    }
    match std::env::var_os("QMPHER_OUT") {
        Some(root) => PathBuf::from(root).join(out_dir),
        None => out_dir.to_path_buf(),
    }
}

pub fn train(config: &RunConfig) -> Result<TrainReport> {
    config.validate()?;
    let mut env = make_env(&config.env)?;
    let spec = env.spec().clone();
    let reward_model = env.reward_model().clone();

    let mut init_rng = stream(config.seed, SALT_INIT);
    let mut env_rng = stream(config.seed, SALT_ENV);
    let mut action_rng = stream(config.seed, SALT_ACTION);
    let mut buffer_rng = stream(config.seed, SALT_BUFFER);

    let mut agent = Agent::new(&spec, &config.hidden_layers, config.hyper, &mut init_rng);
    let primitives: Vec<Primitive> = config
        .primitives
        .iter()
        .map(|p| load_primitive(p, &spec))
        .collect::<Result<_>>()?;
    let objectives = config.resolve_objectives()?;
    for o in &objectives {
        if o.primitive_index >= primitives.len() {
            return Err(Error::Config(format!(
                "objective references primitive {} but only {} primitives are loaded",
                o.primitive_index,
                primitives.len()
            )));
        }
    }
    let switch_cfg = SwitchConfig {
        gripper_pad: config.gripper_pad,
        warmup_includes_target: config.warmup_includes_target,
    };
    let mut buffer = ReplayBuffer::new(
        config.buffer_capacity,
        spec.horizon,
        spec.observation_dim,
        spec.action_dim,
        spec.goal_dim,
        config.k_future,
    );

    let out_dir = resolve_out_dir(&config.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let checkpoint_path = out_dir.join("checkpoint.json");
    let mut metrics_file = std::fs::File::create(&metrics_path)?;
    writeln!(metrics_file, "{METRICS_HEADER}")?;

    let mut rows = Vec::with_capacity(config.n_epochs);
    let mut action_log = Vec::new();
    let mut policy_updates: u64 = 0;
    let mut env_steps: u64 = 0;

    for epoch in 0..config.n_epochs {
        let epoch_start = Instant::now();
        let phase = if config.algorithm == Algorithm::QmpHer && epoch < config.warmup_epochs {
            Phase::Warmup
        } else {
            Phase::Normal
        };
        let mut records: Vec<SelectionRecord> = Vec::new();
        let mut critic_loss_sum = 0.0;
        let mut mean_q_sum = 0.0;
        let mut n_updates_this_epoch = 0u64;

        for episode in 0..config.episodes_per_epoch {
            let mut obs = env.reset(&mut env_rng);
            let mut ep = Episode {
                observations: vec![obs.observation.clone()],
                achieved_goals: vec![obs.achieved_goal.clone()],
                actions: Vec::with_capacity(spec.horizon),
                goal: obs.desired_goal.clone(),
            };
            for t in 0..spec.horizon {
                let record = behaviour_action(
                    config,
                    &spec,
                    &agent,
                    &primitives,
                    &objectives,
                    &switch_cfg,
                    phase,
                    t,
                    &obs,
                    &mut action_rng,
                )
                .map_err(|e| annotate_epoch(e, epoch))?;
                let step = env.step(&record.action).map_err(|e| annotate_epoch(e, epoch))?;
                ep.actions.push(record.action.clone());
                ep.observations.push(step.observation.observation.clone());
                ep.achieved_goals.push(step.observation.achieved_goal.clone());
                action_log.push(StepLog {
                    epoch,
                    episode,
                    t,
                    provenance: record.provenance,
                    action: record.action.clone(),
                });
                records.push(record);
                obs = step.observation;
                env_steps += 1;
            }
            agent.update_normalizer(&ep.observations, &ep.achieved_goals);
            agent.normalizer.goal.update(&ep.goal);
            buffer.store_episode(ep)?;

            let block_done = (episode + 1) % config.episodes_per_block == 0;
            if block_done && phase == Phase::Normal && !buffer.is_empty() {
                for _ in 0..config.opt_cycles {
                    let batch = buffer.sample_with_her(
                        config.hyper.batch_size,
                        &reward_model,
                        &mut buffer_rng,
                    )?;
                    let loss = agent.update_critic(&batch).map_err(|e| annotate_epoch(e, epoch))?;
                    let q = agent.update_actor(&batch).map_err(|e| annotate_epoch(e, epoch))?;
                    agent.polyak_targets()?;
                    critic_loss_sum += loss;
                    mean_q_sum += q;
                    n_updates_this_epoch += 1;
                }
                policy_updates += 1;
            }
        }

        let eval_rng = stream(config.seed, SALT_EVAL ^ (epoch as u64) << 16);
        let eval_success_rate = evaluate_with_rng(
            &agent.clone(),
            &mut make_env(&config.env)?,
            config.eval_episodes,
            eval_rng,
        )?;
        let shares = switch_share_metrics(&records);
        let wall_time_s = if config.record_wall_time {
            epoch_start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let row = MetricsRow {
            epoch,
            policy_updates,
            env_steps,
            eval_success_rate,
            mean_q: if n_updates_this_epoch > 0 {
                mean_q_sum / n_updates_this_epoch as f64
            } else {
                0.0
            },
            critic_loss: if n_updates_this_epoch > 0 {
                critic_loss_sum / n_updates_this_epoch as f64
            } else {
                0.0
            },
            share_target: shares.target,
            share_primitive: shares.primitive,
            share_random: shares.random,
            wall_time_s,
        };
        writeln!(metrics_file, "{}", row.to_csv_line())?;
        metrics_file.flush()?;
        rows.push(row);
        save_checkpoint(&agent, &spec, &checkpoint_path)?;
    }

    Ok(TrainReport {
        rows,
        metrics_path,
        checkpoint_path,
        action_log,
    })
}

fn annotate_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Divergence(msg) => Error::Divergence(format!("epoch {epoch}: {msg}")),
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn behaviour_action(
    config: &RunConfig,
    spec: &EnvSpec,
    agent: &Agent,
    primitives: &[Primitive],
    objectives: &[Objective],
    switch_cfg: &SwitchConfig,
    phase: Phase,
    t: usize,
    obs: &GoalObservation,
    rng: &mut ChaCha8Rng,
) -> Result<SelectionRecord> {
    match config.algorithm {
        Algorithm::ScriptedCurriculum => scripted_curriculum_step(
            t,
            obs,
            &primitives[0],
            spec,
            agent,
            config.default_lift_point(),
            config.gripper_pad,
            config.hyper.epsilon,
            rng,
        ),
        Algorithm::Her | Algorithm::QmpHer => {
            // plain HER is the Q-switch with an empty ensemble
            let (prims, objs): (&[Primitive], &[Objective]) = if config.algorithm == Algorithm::Her {
                (&[], &[])
            } else {
                (primitives, objectives)
            };
            let run_phase = if config.algorithm == Algorithm::Her {
                Phase::Normal
            } else {
                phase
            };
            let candidates =
                build_candidate_set(obs, prims, objs, spec, agent, run_phase, switch_cfg, rng)?;
            q_switch_select(
                &candidates,
                |action| {
                    agent
                        .q_value(&obs.observation, &obs.desired_goal, action)
                        .unwrap_or(f64::NAN)
                },
                spec.action_dim,
                config.hyper.epsilon,
                rng,
            )
        }
    }
}

/// The PickPlace&HER-style baseline: primitive toward an elevated waypoint
/// for the first 20 timesteps, primitive toward the episode goal for the
/// next 20, noisy target actor afterwards. The two primitive phases are
/// distinguished by objective index in the provenance tag.
#[allow(clippy::too_many_arguments)]
pub fn scripted_curriculum_step<R: Rng>(
    t: usize,
    obs: &GoalObservation,
    primitive: &Primitive,
    target_spec: &EnvSpec,
    agent: &Agent,
    lift_point: [f64; 3],
    gripper_pad: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<SelectionRecord> {
    if t < SCRIPT_PHASE2_END {
        let projected = project_for_primitive(obs, target_spec, &primitive.spec)?;
        let (goal, l) = if t < SCRIPT_PHASE1_END {
            (lift_point.to_vec(), 0)
        } else {
            (obs.desired_goal.clone(), 1)
        };
        let action = primitive.propose(&projected.observation, &goal, target_spec.action_dim, gripper_pad)?;
        Ok(SelectionRecord {
            action,
            provenance: Provenance::Primitive { k: 0, l },
            q_values: Vec::new(),
            random: false,
        })
    } else if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let action: Vec<f64> = (0..target_spec.action_dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Ok(SelectionRecord {
            action,
            provenance: Provenance::Random,
            q_values: Vec::new(),
            random: true,
        })
    } else {
        let action = agent.propose_action(&obs.observation, &obs.desired_goal, ActionMode::Noisy, rng)?;
        Ok(SelectionRecord {
            action,
            provenance: Provenance::Target,
            q_values: Vec::new(),
            random: false,
        })
    }
}

/// Success rate of the deterministic actor alone: no noise, no Q-switch, no
/// primitives. Success is the final step's success flag.
pub fn evaluate(agent: &Agent, env: &mut ToyEnv, episodes: usize, seed: u64) -> Result<f64> {
    evaluate_with_rng(agent, env, episodes, ChaCha8Rng::seed_from_u64(seed))
}

fn evaluate_with_rng(
    agent: &Agent,
    env: &mut ToyEnv,
    episodes: usize,
    mut rng: ChaCha8Rng,
) -> Result<f64> {
    let horizon = env.spec().horizon;
    let mut successes = 0usize;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(0); // unused: deterministic mode
    for _ in 0..episodes {
        let mut obs = env.reset(&mut rng);
        let mut final_success = false;
        for _ in 0..horizon {
            let action = agent.propose_action(
                &obs.observation,
                &obs.desired_goal,
                ActionMode::Deterministic,
                &mut noise_rng,
            )?;
            let step = env.step(&action)?;
            final_success = step.success;
            obs = step.observation;
        }
        if final_success {
            successes += 1;
        }
    }
    Ok(successes as f64 / episodes as f64)
}
