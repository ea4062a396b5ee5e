//! Python bindings: targets, the ROCFTP sampler, the experiment studies and
//! the CFTP demonstration.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rocftp::cftp::{cftp_replications, DEFAULT_MAX_DOUBLINGS};
use rocftp::experiments;
use rocftp::targets::{builtin_case, resolve_target};
use rocftp::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Syntax { .. }
        | Error::WeightSum { .. }
        | Error::InvalidComponent(_)
        | Error::UnknownCase(_)
        | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A finite mixture of Normal, Uniform and Beta components, built from an
/// expression such as `"0.8*N(-2,1)+0.2*N(2,1)"` or a case name.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Target {
    inner: rocftp::Target,
}

#[pymethods]
impl Target {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let (inner, _) = resolve_target(spec).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn ln_density(&self, x: f64) -> f64 {
        self.inner.ln_density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile(p).map_err(to_py)
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    /// Most interest range as a dict with `intervals`, `hull`, `level`, `mass`.
    #[pyo3(signature = (epsilon, resolution = 100_000))]
    fn mir<'py>(&self, py: Python<'py>, epsilon: f64, resolution: usize) -> PyResult<Bound<'py, PyDict>> {
        let m = rocftp::most_interest_range(&self.inner, epsilon, resolution).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("epsilon", m.epsilon)?;
        d.set_item("level", m.level)?;
        d.set_item("intervals", m.intervals)?;
        d.set_item("hull", (m.hull_lo, m.hull_hi))?;
        d.set_item("mass", m.mass)?;
        Ok(d)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Target('{}')", self.inner)
    }
}

/// Default `(expression, (lo, hi), sigma)` of a built-in case.
#[pyfunction]
fn case_defaults(name: &str) -> PyResult<(String, (f64, f64), f64)> {
    let c = builtin_case(name).map_err(to_py)?;
    Ok((c.target.to_string(), c.range, c.sigma))
}

/// Read-once CFTP sampler over a fixed block length.
#[pyclass(frozen)]
struct Sampler {
    config: rocftp::SamplerConfig,
}

#[pymethods]
impl Sampler {
    #[new]
    #[pyo3(signature = (target, lo, hi, sigma, block_length, seed = 1, max_blocks = None))]
    fn new(target: &Target, lo: f64, hi: f64, sigma: f64, block_length: u64, seed: u64, max_blocks: Option<u64>) -> PyResult<Self> {
        let mut config =
            rocftp::SamplerConfig::new(target.inner.clone(), lo, hi, sigma, block_length, seed).map_err(to_py)?;
        if let Some(m) = max_blocks {
            config = config.with_max_blocks(m).map_err(to_py)?;
        }
        Ok(Self { config })
    }

    /// Returns `(samples, stats)`; raises `RuntimeError` if the block budget
    /// runs out first.
    fn sample<'py>(&self, py: Python<'py>, n: usize) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
        let run = py.detach(|| rocftp::sample(&self.config, n)).map_err(|(_, e)| to_py(e))?;
        let d = PyDict::new(py);
        d.set_item("blocks", run.stats.blocks)?;
        d.set_item("coalescent_blocks", run.stats.coalescent_blocks)?;
        d.set_item("total_steps", run.stats.total_steps)?;
        d.set_item("p_hat", run.stats.p_hat)?;
        d.set_item("blocks_per_sample", run.stats.blocks_per_sample)?;
        Ok((run.samples, d))
    }

    #[getter]
    fn block_length(&self) -> u64 {
        self.config.block_length
    }
}

#[pyfunction]
#[pyo3(signature = (target, lo, hi, sigma, reps = 1000, seed = 1))]
fn calibrate_block_length(py: Python<'_>, target: &Target, lo: f64, hi: f64, sigma: f64, reps: usize, seed: u64) -> PyResult<u64> {
    py.detach(|| rocftp::calibrate_block_length(&target.inner, lo, hi, sigma, reps, seed)).map_err(to_py)
}

/// Rows `(T, p_hat, n_bar, tau_bar, reps)`.
#[pyfunction]
#[pyo3(signature = (target, lo, hi, sigma, block_lengths, reps = 10_000, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn block_sweep(
    py: Python<'_>,
    target: &Target,
    lo: f64,
    hi: f64,
    sigma: f64,
    block_lengths: Vec<u64>,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<(u64, f64, f64, f64, usize)>> {
    let rows = py
        .detach(|| experiments::block_sweep(&target.inner, lo, hi, sigma, &block_lengths, reps, seed))
        .map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.block_length, r.p_hat, r.n_bar, r.tau_bar, r.reps)).collect())
}

/// Dict with `path_counts`, `mean_times`, `percent_equal` and `times`.
#[pyfunction]
#[pyo3(signature = (target, lo, hi, sigma, path_counts, reps = 1000, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn coalescence_study<'py>(
    py: Python<'py>,
    target: &Target,
    lo: f64,
    hi: f64,
    sigma: f64,
    path_counts: Vec<usize>,
    reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = py
        .detach(|| experiments::coalescence_study(&target.inner, lo, hi, sigma, &path_counts, reps, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("path_counts", s.path_counts)?;
    d.set_item("mean_times", s.mean_times)?;
    d.set_item("percent_equal", s.percent_equal)?;
    d.set_item("times", s.times)?;
    Ok(d)
}

/// Rows `(t, survive_hat, tv_bound)`.
#[pyfunction]
#[pyo3(signature = (target, starts, sigma, t_max = 100, reps = 10_000, seed = 1))]
fn decay_study(
    py: Python<'_>,
    target: &Target,
    starts: Vec<f64>,
    sigma: f64,
    t_max: u64,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<(u64, f64, f64)>> {
    let rows = py
        .detach(|| experiments::decay_study(&target.inner, &starts, sigma, t_max, reps, seed))
        .map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.t, r.survive_hat, r.tv_bound)).collect())
}

/// Dict with `samples`, `ks_statistic`, `ks_p_value`, `outlier_count`,
/// `outlier_fraction` and `mode_masses` as `(lo, hi, observed, expected)`.
#[pyfunction]
#[pyo3(signature = (target, lo, hi, sigma, block_length, n = 10_000, delta = 0.5, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn gof_study<'py>(
    py: Python<'py>,
    target: &Target,
    lo: f64,
    hi: f64,
    sigma: f64,
    block_length: u64,
    n: usize,
    delta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| experiments::gof_study(&target.inner, lo, hi, sigma, block_length, n, delta, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ks_statistic", r.ks.statistic)?;
    d.set_item("ks_p_value", r.ks.p_value)?;
    d.set_item("outlier_count", r.outlier_count)?;
    d.set_item("outlier_fraction", r.outlier_fraction)?;
    let masses: Vec<(f64, f64, f64, f64)> = r.mode_masses.iter().map(|m| (m.lo, m.hi, m.observed, m.expected)).collect();
    d.set_item("mode_masses", masses)?;
    d.set_item("samples", r.samples)?;
    Ok(d)
}

/// Independent CFTP draws on the AR(1) multishift chain as
/// `(sample, backoff_steps)` pairs.
#[pyfunction]
#[pyo3(signature = (rho = 0.92, lo = -100.0, hi = 100.0, reps = 1000, seed = 1, max_doublings = DEFAULT_MAX_DOUBLINGS))]
fn cftp_demo(py: Python<'_>, rho: f64, lo: f64, hi: f64, reps: usize, seed: u64, max_doublings: u32) -> PyResult<Vec<(f64, u64)>> {
    let reps = py
        .detach(|| cftp_replications(rho, (lo, hi), reps, seed, max_doublings))
        .map_err(to_py)?;
    Ok(reps.into_iter().map(|r| (r.outcome.sample, r.outcome.backoff_steps)).collect())
}

#[pymodule]
#[pyo3(name = "rocftp")]
fn rocftp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Target>()?;
    m.add_class::<Sampler>()?;
    m.add_function(wrap_pyfunction!(case_defaults, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_block_length, m)?)?;
    m.add_function(wrap_pyfunction!(block_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(coalescence_study, m)?)?;
    m.add_function(wrap_pyfunction!(decay_study, m)?)?;
    m.add_function(wrap_pyfunction!(gof_study, m)?)?;
    m.add_function(wrap_pyfunction!(cftp_demo, m)?)?;
    Ok(())
}
