//! Python bindings: curriculum runs with the named baseline agents, the
//! transfer/forgetting checks, complexity analysis, machine construction,
//! reconstruction, and DOT export. Structured results cross the boundary as
//! plain dicts (serialized through JSON).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyModule};

use gradualenv::agents::{
    Agent, ConstantAgent, EchoAgent, MemorizerAgent, OracleAgent, RandomAgent,
};
use gradualenv::analysis::{curriculum_order_check, export_dot as dot_of, shared_structure, DotOptions};
use gradualenv::harness::{forgetting_check, gradual_learning_check, run_curriculum, Budget};
use gradualenv::mechanics::{self, MachineFile};
use gradualenv::reconstruct::{reconstruct_from_sequence, transducer_from_task};
use gradualenv::stream::{self, Reward, Symbol};
use gradualenv::task::{
    builtin_task, default_curriculum, sample_instance, CurriculumSpec, InstanceState, TaskSpec,
    DEFAULT_CURRICULUM_SEED,
};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Serialize through JSON and hand the result to Python's json module, so
/// reports arrive as ordinary dicts and lists.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: for<'de> serde::Deserialize<'de>>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

fn make_agent(name: &str, seed: u64) -> PyResult<Box<dyn Agent>> {
    if let Some(byte) = name.strip_prefix("constant:") {
        let b: u8 = byte.parse().map_err(value_err)?;
        return Ok(Box::new(ConstantAgent::new(b)));
    }
    match name {
        "random" => Ok(Box::new(RandomAgent::new(seed))),
        "echo" => Ok(Box::new(EchoAgent)),
        "memorizer" => Ok(Box::new(MemorizerAgent::new(seed))),
        "oracle" => Ok(Box::new(OracleAgent::new())),
        other => Err(value_err(format!(
            "unknown agent {other:?} (expected random, echo, memorizer, oracle, constant:<byte>)"
        ))),
    }
}

fn resolve_task(id: &str) -> PyResult<TaskSpec> {
    builtin_task(id).ok_or_else(|| value_err(format!("unknown task {id:?}")))
}

fn resolve_curriculum(tasks: Option<Vec<String>>, seed: u64, n_s: u64) -> PyResult<CurriculumSpec> {
    match tasks {
        Some(ids) => Ok(CurriculumSpec {
            tasks: ids
                .iter()
                .map(|id| resolve_task(id))
                .collect::<PyResult<_>>()?,
            n_s,
            seed,
        }),
        None => {
            let mut c = default_curriculum(seed);
            c.n_s = n_s;
            Ok(c)
        }
    }
}

#[pyfunction]
fn builtin_task_ids() -> Vec<&'static str> {
    gradualenv::task::builtin_task_ids().to_vec()
}

#[pyfunction]
fn encode_frame<'py>(py: Python<'py>, observation: u8, reward: i8) -> PyResult<Bound<'py, PyBytes>> {
    let reward = Reward::from_i8(reward).map_err(value_err)?;
    Ok(PyBytes::new(py, &stream::encode_frame(Symbol(observation), reward)))
}

#[pyfunction]
fn decode_frame(frame: &[u8]) -> PyResult<(u8, i8)> {
    let frame: [u8; 2] = frame
        .try_into()
        .map_err(|_| value_err("frame must be exactly 2 bytes"))?;
    let (obs, reward) = stream::decode_frame(frame).map_err(value_err)?;
    Ok((obs.0, reward.as_i8()))
}

#[pyfunction]
fn shannon_entropy(dist: Vec<f64>) -> PyResult<f64> {
    mechanics::shannon_entropy(&dist).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (agent="memorizer", tasks=None, seed=DEFAULT_CURRICULUM_SEED, n_s=2, budget_steps=None))]
fn run<'py>(
    py: Python<'py>,
    agent: &str,
    tasks: Option<Vec<String>>,
    seed: u64,
    n_s: u64,
    budget_steps: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let curriculum = resolve_curriculum(tasks, seed, n_s)?;
    let mut runner = make_agent(agent, seed)?;
    let budget = Budget {
        max_steps: budget_steps,
        max_seconds: None,
    };
    let result = run_curriculum(runner.as_mut(), &curriculum, n_s, budget).map_err(runtime_err)?;

    #[derive(serde::Serialize)]
    struct Report<'a> {
        total_steps: u64,
        per_task: &'a [gradualenv::harness::TaskRunStats],
    }
    to_py(
        py,
        &Report {
            total_steps: result.total_steps,
            per_task: &result.per_task,
        },
    )
}

#[pyfunction]
#[pyo3(signature = (agent, pretrain, probe, n_s=2, seed=DEFAULT_CURRICULUM_SEED))]
fn check_gradual<'py>(
    py: Python<'py>,
    agent: &str,
    pretrain: Vec<String>,
    probe: &str,
    n_s: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    make_agent(agent, seed)?; // validate the name up front
    let agent = agent.to_string();
    let factory = move || make_agent(&agent, seed).expect("agent name was validated");
    let pretrain: Vec<TaskSpec> = pretrain
        .iter()
        .map(|id| resolve_task(id))
        .collect::<PyResult<_>>()?;
    let probe = resolve_task(probe)?;
    let report = gradual_learning_check(&factory, &pretrain, &probe, n_s, seed, Budget::UNLIMITED)
        .map_err(runtime_err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (agent, tasks, c=1.2, n_s=2, seed=DEFAULT_CURRICULUM_SEED))]
fn check_forgetting<'py>(
    py: Python<'py>,
    agent: &str,
    tasks: Vec<String>,
    c: f64,
    n_s: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    if tasks.len() != 3 {
        return Err(value_err(format!("need exactly 3 tasks, got {}", tasks.len())));
    }
    make_agent(agent, seed)?;
    let agent = agent.to_string();
    let factory = move || make_agent(&agent, seed).expect("agent name was validated");
    let t1 = resolve_task(&tasks[0])?;
    let t2 = resolve_task(&tasks[1])?;
    let t3 = resolve_task(&tasks[2])?;
    let report = forgetting_check(&factory, (&t1, &t2, &t3), c, n_s, seed, Budget::UNLIMITED)
        .map_err(runtime_err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (tasks=None, seed=DEFAULT_CURRICULUM_SEED))]
fn analyze<'py>(
    py: Python<'py>,
    tasks: Option<Vec<String>>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let curriculum = resolve_curriculum(tasks, seed, 2)?;
    to_py(py, &curriculum_order_check(&curriculum))
}

#[pyfunction]
#[pyo3(signature = (task, seeds=None))]
fn model_task<'py>(
    py: Python<'py>,
    task: &str,
    seeds: Option<Vec<u64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = resolve_task(task)?;
    let seeds = seeds.unwrap_or_else(|| vec![DEFAULT_CURRICULUM_SEED, DEFAULT_CURRICULUM_SEED + 1]);
    let transducer = transducer_from_task(&spec, &seeds).map_err(value_err)?;
    to_py(py, &MachineFile::Transducer(transducer))
}

#[pyfunction]
#[pyo3(signature = (sequence, l_max=4, alpha=0.001))]
fn reconstruct<'py>(
    py: Python<'py>,
    sequence: &[u8],
    l_max: usize,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let machine = reconstruct_from_sequence(sequence, l_max, alpha).map_err(value_err)?;
    to_py(py, &MachineFile::Machine(machine))
}

#[pyfunction]
fn statistical_complexity(machine: &Bound<'_, PyAny>) -> PyResult<f64> {
    match from_py::<MachineFile>(machine)? {
        MachineFile::Machine(m) => mechanics::statistical_complexity(&m).map_err(value_err),
        MachineFile::Transducer(t) => {
            mechanics::input_dependent_complexity(&t, &t.uniform_input()).map_err(value_err)
        }
    }
}

#[pyfunction]
#[pyo3(signature = (machine, hide_negative=false, merge_chains=false))]
fn export_dot(
    machine: &Bound<'_, PyAny>,
    hide_negative: bool,
    merge_chains: bool,
) -> PyResult<String> {
    let file: MachineFile = from_py(machine)?;
    file.validate().map_err(value_err)?;
    Ok(dot_of(
        &file,
        DotOptions {
            hide_negative,
            merge_chains,
        },
    ))
}

#[pyfunction]
fn shared_structure_score<'py>(
    py: Python<'py>,
    a: &Bound<'_, PyAny>,
    b: &Bound<'_, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let MachineFile::Transducer(a) = from_py::<MachineFile>(a)? else {
        return Err(value_err("first machine must be a transducer"));
    };
    let MachineFile::Transducer(b) = from_py::<MachineFile>(b)? else {
        return Err(value_err("second machine must be a transducer"));
    };
    to_py(py, &shared_structure(&a, &b))
}

/// One live task instance, steppable from Python. The first observation
/// comes from `prime()`; each `step(action)` returns `(reward, observation)`.
#[pyclass]
struct Instance {
    inner: InstanceState,
    #[pyo3(get)]
    req_reward: u64,
}

#[pymethods]
impl Instance {
    #[new]
    #[pyo3(signature = (task, seed=DEFAULT_CURRICULUM_SEED))]
    fn new(task: &str, seed: u64) -> PyResult<Self> {
        let spec = resolve_task(task)?;
        Ok(Instance {
            req_reward: spec.req_reward,
            inner: sample_instance(&spec, seed),
        })
    }

    fn prime(&mut self) -> PyResult<u8> {
        let (_, obs) = self.inner.env_step(None).map_err(runtime_err)?;
        Ok(obs.0)
    }

    fn step(&mut self, action: u8) -> PyResult<(i8, u8)> {
        let (reward, obs) = self.inner.env_step(Some(Symbol(action))).map_err(runtime_err)?;
        Ok((reward.as_i8(), obs.0))
    }

    #[getter]
    fn soft_limit(&self) -> u64 {
        self.inner.soft_limit()
    }

    #[getter]
    fn hard_limit(&self) -> u64 {
        self.inner.hard_limit()
    }

    #[getter]
    fn elapsed(&self) -> u64 {
        self.inner.elapsed
    }
}

#[pymodule]
fn gradualenv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(builtin_task_ids, m)?)?;
    m.add_function(wrap_pyfunction!(encode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(decode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(check_gradual, m)?)?;
    m.add_function(wrap_pyfunction!(check_forgetting, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(model_task, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(export_dot, m)?)?;
    m.add_function(wrap_pyfunction!(shared_structure_score, m)?)?;
    m.add("DEFAULT_CURRICULUM_SEED", DEFAULT_CURRICULUM_SEED)?;
    Ok(())
}
