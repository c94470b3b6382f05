//! Python bindings: market parameters, reward schedules, equilibrium and
//! profit evaluation, the program solvers, bounds, Monte Carlo, and the sweep.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use rebate_core::{equilibrium, market, sim, solvers, sweep, Error};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn struct_to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value =
        serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// Market parameters (theta, sigma_eps, sigma_theta).
#[pyclass(name = "MarketParams", skip_from_py_object)]
#[derive(Clone)]
struct PyMarketParams {
    inner: market::MarketParams,
}

#[pymethods]
impl PyMarketParams {
    #[new]
    fn new(theta: f64, sigma_eps: f64, sigma_theta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: market::MarketParams::new(theta, sigma_eps, sigma_theta)
                .map_err(to_py_err)?,
        })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn sigma_eps(&self) -> f64 {
        self.inner.sigma_eps
    }

    #[getter]
    fn sigma_theta(&self) -> f64 {
        self.inner.sigma_theta
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn sigma_v(&self) -> f64 {
        self.inner.sigma_v()
    }

    /// Posterior (mean, stddev) of quality given one private valuation.
    fn posterior(&self, v_i: f64) -> PyResult<(f64, f64)> {
        let post = market::posterior(&self.inner, v_i).map_err(to_py_err)?;
        Ok((post.mean, post.stddev))
    }

    fn __repr__(&self) -> String {
        format!(
            "MarketParams(theta={}, sigma_eps={}, sigma_theta={})",
            self.inner.theta, self.inner.sigma_eps, self.inner.sigma_theta
        )
    }
}

/// A reward program r(v) in [0, price_cap].
#[pyclass(name = "RewardSchedule", skip_from_py_object)]
#[derive(Clone)]
struct PyRewardSchedule {
    inner: rebate_core::RewardSchedule,
}

#[pymethods]
impl PyRewardSchedule {
    #[staticmethod]
    fn zero(price_cap: f64) -> Self {
        Self { inner: rebate_core::RewardSchedule::zero(price_cap) }
    }

    #[staticmethod]
    fn constant(level: f64, price_cap: f64) -> PyResult<Self> {
        Ok(Self {
            inner: rebate_core::RewardSchedule::constant(level, price_cap).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn step(level: f64, threshold_quality: f64, price_cap: f64) -> PyResult<Self> {
        Ok(Self {
            inner: rebate_core::RewardSchedule::step(level, threshold_quality, price_cap)
                .map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn saturated_linear(price_cap: f64, v_lo: f64, v_hi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: rebate_core::RewardSchedule::saturated_linear(price_cap, v_lo, v_hi)
                .map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn interval_refund(price_cap: f64, intervals: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self {
            inner: rebate_core::RewardSchedule::interval_refund(price_cap, intervals)
                .map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn tabulated(price_cap: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: rebate_core::RewardSchedule::tabulated(price_cap, breakpoints, values)
                .map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: rebate_core::RewardSchedule::from_json(text).map_err(to_py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn price_cap(&self) -> f64 {
        self.inner.price_cap
    }

    fn evaluate(&self, v: f64) -> f64 {
        self.inner.evaluate(v)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    fn expected_reward(&self, params: &PyMarketParams, v_i: f64) -> PyResult<f64> {
        self.inner.expected_reward(&params.inner, v_i).map_err(to_py_err)
    }

    fn expected_reward_derivative(&self, params: &PyMarketParams, v_i: f64) -> PyResult<f64> {
        self.inner.expected_reward_derivative(&params.inner, v_i).map_err(to_py_err)
    }

    fn to_sales_volume_domain(
        &self,
        params: &PyMarketParams,
        cutoff: f64,
        a_bar: f64,
    ) -> PyResult<f64> {
        self.inner.to_sales_volume_domain(&params.inner, cutoff, a_bar).map_err(to_py_err)
    }

    fn spread_certificate<'py>(
        &self,
        py: Python<'py>,
        params: &PyMarketParams,
    ) -> PyResult<Bound<'py, PyAny>> {
        struct_to_py(py, &self.inner.spread_certificate(&params.inner))
    }

    fn rate_certificate<'py>(
        &self,
        py: Python<'py>,
        params: &PyMarketParams,
    ) -> PyResult<Bound<'py, PyAny>> {
        struct_to_py(py, &self.inner.rate_certificate(&params.inner))
    }

    fn __repr__(&self) -> String {
        format!("RewardSchedule({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

/// Profit-maximizing fixed price for the no-reward market.
#[pyfunction]
fn optimal_price(params: &PyMarketParams) -> PyResult<f64> {
    market::optimal_price(&params.inner).map_err(to_py_err)
}

/// p * Phi((theta - p)/sigma).
#[pyfunction]
fn no_reward_profit(params: &PyMarketParams, p: f64) -> f64 {
    market::no_reward_profit(&params.inner, p)
}

/// Expected sales volume under a threshold strategy.
#[pyfunction]
fn expected_sales_volume(params: &PyMarketParams, cutoff: f64) -> f64 {
    market::expected_sales_volume(&params.inner, cutoff)
}

/// Solve the consumer cutoff; returns the equilibrium as a dict.
#[pyfunction]
fn solve_cutoff<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
) -> PyResult<Bound<'py, PyAny>> {
    let eq = equilibrium::solve_cutoff(&params.inner, p, &schedule.inner).map_err(to_py_err)?;
    struct_to_py(py, &eq)
}

/// All indifference cutoffs found by the sign-change scan.
#[pyfunction]
fn solve_cutoff_all(
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
) -> PyResult<Vec<f64>> {
    equilibrium::solve_cutoff_all(&params.inner, p, &schedule.inner).map_err(to_py_err)
}

/// Expected profit integrating over realized quality.
#[pyfunction]
fn expected_profit_quality(
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
    cutoff: f64,
) -> PyResult<f64> {
    equilibrium::expected_profit_quality(&params.inner, p, &schedule.inner, cutoff)
        .map_err(to_py_err)
}

/// Expected profit integrating over valuations, with its decomposition.
#[pyfunction]
fn expected_profit_valuation<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
    cutoff: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = equilibrium::expected_profit_valuation(&params.inner, p, &schedule.inner, cutoff)
        .map_err(to_py_err)?;
    struct_to_py(py, &d)
}

/// Equilibrium profit minus the no-reward profit at the same price.
#[pyfunction]
fn profitability_gap(
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
) -> PyResult<f64> {
    equilibrium::profitability_gap(&params.inner, p, &schedule.inner).map_err(to_py_err)
}

/// Optimal spread-constrained step program.
#[pyfunction]
fn solve_spread_constrained<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = solvers::solve_spread_constrained(&params.inner, p).map_err(to_py_err)?;
    struct_to_py(py, &rep)
}

/// Optimal rate-constrained saturated-linear program.
#[pyfunction]
fn solve_rate_constrained<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = solvers::solve_rate_constrained(&params.inner, p).map_err(to_py_err)?;
    struct_to_py(py, &rep)
}

/// Relaxed-problem benchmark; returns (report, pi2).
#[pyfunction]
fn solve_relaxed<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
) -> PyResult<(Bound<'py, PyAny>, f64)> {
    let (rep, pi2) = solvers::solve_relaxed(&params.inner, p).map_err(to_py_err)?;
    Ok((struct_to_py(py, &rep)?, pi2))
}

/// Best full-refund interval policy with l intervals.
#[pyfunction]
#[pyo3(signature = (params, p, l, constraint_tol=1e-7))]
fn optimize_interval_refund<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
    l: usize,
    constraint_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solvers::IntervalSearchConfig { constraint_tol, ..Default::default() };
    let rep = solvers::optimize_interval_refund(&params.inner, p, l, &cfg).map_err(to_py_err)?;
    struct_to_py(py, &rep)
}

/// Profit bounds pi1, pi2, pi_h as a dict.
#[pyfunction]
fn profit_bounds<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let b = solvers::profit_bounds(&params.inner, p).map_err(to_py_err)?;
    struct_to_py(py, &b)
}

/// Finite-agent Monte Carlo; returns aggregate statistics as a dict.
#[pyfunction]
#[pyo3(signature = (params, p, schedule, cutoff, n_agents, n_quality_draws, seed=0, antithetic=false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    params: &PyMarketParams,
    p: f64,
    schedule: &PyRewardSchedule,
    cutoff: f64,
    n_agents: usize,
    n_quality_draws: usize,
    seed: u64,
    antithetic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let config = sim::SimConfig { n_agents, n_quality_draws, seed, antithetic };
    let mut result =
        sim::simulate(&params.inner, p, &schedule.inner, cutoff, &config).map_err(to_py_err)?;
    result.per_draw_records = None; // keep the Python payload small
    struct_to_py(py, &result)
}

/// Profit-comparison sweep; returns a list of row dicts.
#[pyfunction]
#[pyo3(signature = (theta, sigma_total, grid, intervals=vec![]))]
fn run_sweep<'py>(
    py: Python<'py>,
    theta: f64,
    sigma_total: f64,
    grid: Vec<f64>,
    intervals: Vec<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let options = sweep::SweepOptions { interval_levels: intervals, ..Default::default() };
    let rows = sweep::run_sweep(theta, sigma_total, &grid, &options).map_err(to_py_err)?;
    let doc = sweep::rows_to_json(theta, sigma_total, &rows);
    json_to_py(py, &doc["rows"])
}

#[pymodule]
fn rebate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarketParams>()?;
    m.add_class::<PyRewardSchedule>()?;
    m.add_function(wrap_pyfunction!(optimal_price, m)?)?;
    m.add_function(wrap_pyfunction!(no_reward_profit, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sales_volume, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cutoff_all, m)?)?;
    m.add_function(wrap_pyfunction!(expected_profit_quality, m)?)?;
    m.add_function(wrap_pyfunction!(expected_profit_valuation, m)?)?;
    m.add_function(wrap_pyfunction!(profitability_gap, m)?)?;
    m.add_function(wrap_pyfunction!(solve_spread_constrained, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rate_constrained, m)?)?;
    m.add_function(wrap_pyfunction!(solve_relaxed, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_interval_refund, m)?)?;
    m.add_function(wrap_pyfunction!(profit_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
