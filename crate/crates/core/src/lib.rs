//! Goal-conditioned reinforcement-learning lab: DDPG + hindsight experience
//! replay with Q-switched reuse of frozen primitive policies, on
//! deterministic kinematic manipulation toys.

pub mod checkpoint;
pub mod config;
pub mod ddpg;
pub mod envs;
pub mod error;
pub mod harness;
pub mod her;
pub mod plot;
pub mod qmp;
pub mod tensor_nn;

pub use checkpoint::{load_primitive, save_checkpoint, PolicyCheckpoint};
pub use config::{Algorithm, RunConfig};
pub use ddpg::{ActionMode, Agent, HyperParams, TrainingBatch};
pub use envs::{make_env, EnvSpec, GoalObservation, StepResult, ToyEnv};
pub use error::{Error, Result};
pub use harness::{evaluate, train, MetricsRow, TrainReport};
pub use her::{Episode, ReplayBuffer};
pub use qmp::{CandidateSet, Objective, ObjectiveKind, Primitive, Provenance, SelectionRecord};
pub use tensor_nn::{adam_step, polyak_update, AdamState, GradientBundle, Mlp};
