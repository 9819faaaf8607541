//! Python bindings: environments, trained policies, training runs, and
//! plotting, mirroring the `qmpher` CLI surface.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmpher::checkpoint::PolicyCheckpoint;
use qmpher::config::RunConfig;
use qmpher::ddpg::{ActionMode, Agent};
use qmpher::envs::make_env;
use qmpher::harness::{evaluate, train};

fn to_py(e: qmpher::Error) -> PyErr {
    match e.exit_code() {
        3 => PyRuntimeError::new_err(e.to_string()),
        4 => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// One deterministic kinematic manipulation environment.
#[pyclass(name = "ToyEnv")]
struct PyToyEnv {
    inner: qmpher::ToyEnv,
    rng: ChaCha8Rng,
}

#[pymethods]
impl PyToyEnv {
    #[new]
    #[pyo3(signature = (name, seed=0))]
    fn new(name: &str, seed: u64) -> PyResult<Self> {
        Ok(PyToyEnv {
            inner: make_env(name).map_err(to_py)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.spec().name.clone()
    }

    #[getter]
    fn observation_dim(&self) -> usize {
        self.inner.spec().observation_dim
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.spec().action_dim
    }

    #[getter]
    fn goal_dim(&self) -> usize {
        self.inner.spec().goal_dim
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.spec().horizon
    }

    /// Start a new episode; returns (observation, achieved_goal, desired_goal).
    fn reset(&mut self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let obs = self.inner.reset(&mut self.rng);
        (obs.observation, obs.achieved_goal, obs.desired_goal)
    }

    /// Apply one action; returns (observation, achieved_goal, desired_goal,
    /// reward, success).
    fn step(&mut self, action: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, f64, bool)> {
        let step = self.inner.step(&action).map_err(to_py)?;
        let o = step.observation;
        Ok((o.observation, o.achieved_goal, o.desired_goal, step.reward, step.success))
    }
}

/// A trained policy loaded from a checkpoint.
#[pyclass(name = "Policy")]
struct PyPolicy {
    agent: Agent,
    env_name: String,
}

#[pymethods]
impl PyPolicy {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ckpt = PolicyCheckpoint::load(&path).map_err(to_py)?;
        let env_name = ckpt.env_spec.name.clone();
        let agent = ckpt.into_agent(Default::default()).map_err(to_py)?;
        Ok(PyPolicy { agent, env_name })
    }

    #[getter]
    fn env_name(&self) -> String {
        self.env_name.clone()
    }

    /// Deterministic action for (observation, goal).
    fn act(&self, observation: Vec<f64>, goal: Vec<f64>) -> PyResult<Vec<f64>> {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        self.agent
            .propose_action(&observation, &goal, ActionMode::Deterministic, &mut unused)
            .map_err(to_py)
    }

    /// Online-critic Q(s, g, a).
    fn q_value(&self, observation: Vec<f64>, goal: Vec<f64>, action: Vec<f64>) -> PyResult<f64> {
        self.agent.q_value(&observation, &goal, &action).map_err(to_py)
    }

    /// Success rate of the deterministic policy over seeded episodes.
    #[pyo3(signature = (episodes=50, seed=0))]
    fn evaluate(&self, episodes: usize, seed: u64) -> PyResult<f64> {
        let mut env = make_env(&self.env_name).map_err(to_py)?;
        evaluate(&self.agent, &mut env, episodes, seed).map_err(to_py)
    }
}

/// Run training from a JSON config string; returns a summary dict with the
/// per-epoch success rates and output paths.
#[pyfunction]
fn train_from_json(py: Python<'_>, config_json: &str) -> PyResult<PyObject> {
    let config: RunConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(format!("config error: {e}")))?;
    let report = train(&config).map_err(to_py)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item(
        "eval_success_rate",
        report.rows.iter().map(|r| r.eval_success_rate).collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "policy_updates",
        report.rows.iter().map(|r| r.policy_updates).collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "share_target",
        report.rows.iter().map(|r| r.share_target).collect::<Vec<_>>(),
    )?;
    dict.set_item("metrics_path", report.metrics_path.to_string_lossy())?;
    dict.set_item("checkpoint_path", report.checkpoint_path.to_string_lossy())?;
    Ok(dict.into())
}

/// Render learning curves from metrics CSVs to an SVG plus a summary table.
#[pyfunction]
fn plot_curves(csv_paths: Vec<PathBuf>, out: PathBuf) -> PyResult<()> {
    qmpher::plot::plot(&csv_paths, &out).map_err(to_py)
}

/// Names of all available environments.
#[pyfunction]
fn env_names() -> Vec<&'static str> {
    qmpher::envs::env_names().to_vec()
}

#[pymodule]
fn qmpher_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyToyEnv>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(train_from_json, m)?)?;
    m.add_function(wrap_pyfunction!(plot_curves, m)?)?;
    m.add_function(wrap_pyfunction!(env_names, m)?)?;
    Ok(())
}
