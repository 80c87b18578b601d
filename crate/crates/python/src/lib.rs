//! Python bindings. Structured results (tables, reports) cross the boundary
//! as JSON strings.

use distrl_core::dist::{self, DiscreteDistribution, ProjectionSpec};
use distrl_core::dp::{self, PlanningResult};
use distrl_core::experiments;
use distrl_core::mdp::build_chain;
use distrl_core::qlearn::{self, LearningConfig, LearningMode};
use distrl_core::{DeterministicPolicy, Functional, TabularMdp};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: distrl_core::Error) -> PyErr {
    match e {
        distrl_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn functional(spec: &str) -> PyResult<Functional> {
    Functional::from_json(spec).map_err(err)
}

/// Finite discrete distribution in canonical form.
#[pyclass(name = "Distribution", module = "distrl", frozen)]
struct PyDistribution(DiscreteDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(atoms: Vec<f64>, weights: Vec<f64>) -> PyResult<Self> {
        DiscreteDistribution::new(atoms, weights)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn dirac(x: f64) -> PyResult<Self> {
        if !x.is_finite() {
            return Err(PyValueError::new_err("Dirac location must be finite"));
        }
        Ok(Self(DiscreteDistribution::dirac(x)))
    }

    #[staticmethod]
    fn mixture(components: Vec<PyRef<'_, PyDistribution>>, weights: Vec<f64>) -> PyResult<Self> {
        let parts: Vec<&DiscreteDistribution> = components.iter().map(|c| &c.0).collect();
        DiscreteDistribution::mixture(&parts, &weights)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn atoms(&self) -> Vec<f64> {
        self.0.atoms().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn translate(&self, c: f64) -> Self {
        Self(self.0.translate(c))
    }

    fn convolve(&self, other: &PyDistribution) -> PyResult<Self> {
        self.0.convolve(&other.0).map(Self).map_err(err)
    }

    fn wasserstein1(&self, other: &PyDistribution) -> f64 {
        dist::wasserstein1(&self.0, &other.0)
    }

    fn cramer(&self, other: &PyDistribution) -> f64 {
        dist::cramer_l2(&self.0, &other.0)
    }

    fn quantile_project(&self, resolution: usize) -> PyResult<Self> {
        dist::quantile_project(&self.0, &ProjectionSpec::quantile(resolution))
            .map(Self)
            .map_err(err)
    }

    fn categorical_project(&self, resolution: usize, lo: f64, hi: f64) -> PyResult<Self> {
        let spec = ProjectionSpec::categorical_on(resolution, lo, hi);
        spec.validate().map_err(err)?;
        dist::categorical_project(&self.0, &spec)
            .map(Self)
            .map_err(err)
    }

    /// Value of a functional given as JSON, e.g. `'{"kind": "cvar", "alpha": 0.1}'`.
    fn evaluate(&self, spec: &str) -> PyResult<f64> {
        functional(spec)?.evaluate(&self.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &PyDistribution) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "Distribution(atoms={:?}, weights={:?})",
            self.0.atoms(),
            self.0.weights()
        )
    }
}

#[pyclass(name = "Mdp", module = "distrl", frozen)]
struct PyMdp(TabularMdp);

#[pymethods]
impl PyMdp {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TabularMdp::from_json_str(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        TabularMdp::load(path).map(Self).map_err(err)
    }

    /// `horizon` steps of `reward` along a single deterministic path.
    #[staticmethod]
    fn chain(horizon: usize, reward: &PyDistribution) -> PyResult<Self> {
        build_chain(horizon, &reward.0).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.0.horizon()
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.0.num_states()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
}

fn planned(result: PlanningResult) -> (f64, Vec<Vec<usize>>) {
    (result.root_value, result.policy.actions().to_vec())
}

/// Plans with `method` in {"greedy", "brute-force", "exponential", "expected"};
/// returns `(root_value, actions[h][x])`.
#[pyfunction]
#[pyo3(signature = (mdp, spec, method = "greedy"))]
fn plan(mdp: &PyMdp, spec: &str, method: &str) -> PyResult<(f64, Vec<Vec<usize>>)> {
    let mdp = &mdp.0;
    let result = match method {
        "greedy" => dp::plan_distributional(mdp, &functional(spec)?),
        "brute-force" => dp::brute_force_optimal(mdp, &functional(spec)?),
        "expected" => dp::plan_expected(mdp),
        "exponential" => match functional(spec)? {
            Functional::ExponentialUtility { lambda } => dp::plan_exponential(mdp, lambda),
            other => {
                return Err(PyValueError::new_err(format!(
                    "the exponential method needs an exponential functional, got {other}"
                )))
            }
        },
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    result.map(planned).map_err(err)
}

/// Return distribution of `actions[h][x]` from every `(h, x, a)`, as a JSON table.
#[pyfunction]
#[pyo3(signature = (mdp, actions, resolution = None))]
fn evaluate_policy(
    mdp: &PyMdp,
    actions: Vec<Vec<usize>>,
    resolution: Option<usize>,
) -> PyResult<String> {
    let policy = DeterministicPolicy::new(&mdp.0, actions).map_err(err)?;
    let table = match resolution {
        Some(n) => dp::evaluate_policy_projected(&mdp.0, &policy, &ProjectionSpec::quantile(n)),
        None => dp::evaluate_policy_exact(&mdp.0, &policy),
    }
    .map_err(err)?;
    to_json(&table)
}

/// Tabular Q-learning; returns `(q[h][x][a], greedy actions, root value)`.
#[pyfunction]
#[pyo3(signature = (mdp, lam, episodes, seed, mode = "exponential", offset = 0.0, epsilon = None))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn q_learning(
    mdp: &PyMdp,
    lam: f64,
    episodes: usize,
    seed: u64,
    mode: &str,
    offset: f64,
    epsilon: Option<f64>,
) -> PyResult<(Vec<Vec<Vec<f64>>>, Vec<Vec<usize>>, f64)> {
    let mode = match mode {
        "exponential" => LearningMode::Exponential { lambda: lam },
        "linear" => LearningMode::Linear {
            lambda: lam,
            b: offset,
        },
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let cfg = LearningConfig {
        mode,
        episodes,
        step_size: Default::default(),
        seed,
        epsilon,
    };
    let q = qlearn::learn(&mdp.0, &cfg).map_err(err)?;
    let m = &mdp.0;
    let values = (0..m.horizon())
        .map(|h| (0..m.num_states()).map(|x| q.row(h, x).to_vec()).collect())
        .collect();
    let policy = qlearn::extract_greedy(&q).actions().to_vec();
    Ok((values, policy, qlearn::root_value(&q, m)))
}

/// Runs a named experiment and returns its report as JSON.
#[pyfunction]
#[pyo3(signature = (name, horizon = None, resolution = None, alphas = None, delta0 = 1.0, spec = None, budget = 100_000, seed = None))]
#[allow(clippy::too_many_arguments)]
fn experiment(
    name: &str,
    horizon: Option<usize>,
    resolution: Option<usize>,
    alphas: Option<Vec<f64>>,
    delta0: f64,
    spec: Option<&str>,
    budget: usize,
    seed: Option<u64>,
) -> PyResult<String> {
    let report = match name {
        "eval-error" => experiments::eval_error(
            horizon.unwrap_or(70),
            resolution.unwrap_or(1000),
            &alphas.unwrap_or_else(|| vec![0.1, 0.25]),
        ),
        "tightness" => {
            let n =
                resolution.ok_or_else(|| PyValueError::new_err("tightness needs resolution"))?;
            experiments::tightness(n, delta0, horizon.unwrap_or(20))
        }
        "counterexample" => {
            let spec = spec.ok_or_else(|| PyValueError::new_err("counterexample needs spec"))?;
            let seed = seed.ok_or_else(|| PyValueError::new_err("counterexample needs seed"))?;
            experiments::counterexample(&functional(spec)?, budget, seed)
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment {other:?}"
            )))
        }
    };
    Ok(report.map_err(err)?.to_json())
}

/// `L` with `|s(d1) − s(d2)| ≤ L·W1(d1, d2)` on supports of length `support_length`.
#[pyfunction]
fn lipschitz_constant(spec: &str, support_length: f64) -> PyResult<f64> {
    functional(spec)?
        .lipschitz_constant(support_length)
        .map_err(err)
}

#[pymodule]
fn distrl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyMdp>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_policy, m)?)?;
    m.add_function(wrap_pyfunction!(q_learning, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_constant, m)?)?;
    Ok(())
}
