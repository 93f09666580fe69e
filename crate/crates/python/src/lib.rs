//! Python bindings for `hbfsim`.
//!
//! ```python
//! import hbfsim_py as hb
//! cfg = hb.SystemConfig(n_tx=16, n_rx=16, n_rf=2, n_streams=2, n_subcarriers=8, snr_db=10.0)
//! h = hb.generate_channel(cfg, seed=1)
//! print(hb.run_swhbf(cfg, h, solver="pga-ts")["avg_se"], hb.dbf_baseline(cfg, h))
//! ```

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hbfsim::channel::{self, ChannelRealization};
use hbfsim::harness::{self, Architecture, ExperimentSpec, PowerModel, PsBits, Scheme};
use hbfsim::solvers::{SolverKind, SolverParams};
use hbfsim::squint::{self, SquintParams, SwitchVector};
use hbfsim::HbfError;

create_exception!(hbfsim_py, InfeasibleError, PyRuntimeError, "No feasible analog beamformer exists.");

fn to_py(e: HbfError) -> PyErr {
    match e {
        HbfError::InvalidArgument(_) | HbfError::InvalidConfig(_) | HbfError::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        HbfError::Infeasible(_) => InfeasibleError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Link configuration. Power is set from `snr_db` unless `power_budget` is given.
#[pyclass(name = "SystemConfig", from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    inner: channel::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (
        n_tx = 64, n_rx = 64, n_rf = 4, n_streams = 4, n_subcarriers = 64,
        carrier_hz = 140e9, bandwidth_hz = 10e9, spacing = 0.5, n_paths = 4,
        snr_db = None, power_budget = None, noise_var = 1.0, channel_norm = false,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_tx: usize,
        n_rx: usize,
        n_rf: usize,
        n_streams: usize,
        n_subcarriers: usize,
        carrier_hz: f64,
        bandwidth_hz: f64,
        spacing: f64,
        n_paths: usize,
        snr_db: Option<f64>,
        power_budget: Option<f64>,
        noise_var: f64,
        channel_norm: bool,
    ) -> PyResult<Self> {
        if snr_db.is_some() && power_budget.is_some() {
            return Err(PyValueError::new_err("give snr_db or power_budget, not both"));
        }
        let mut inner = channel::SystemConfig {
            n_tx,
            n_rx,
            n_rf,
            n_streams,
            n_subcarriers,
            carrier_hz,
            bandwidth_hz,
            spacing,
            n_paths,
            noise_var,
            channel_norm,
            ..channel::SystemConfig::default()
        };
        inner = match (snr_db, power_budget) {
            (_, Some(p)) => channel::SystemConfig { power_budget: p, ..inner },
            (Some(s), None) => inner.with_snr_db(s),
            (None, None) => inner.with_snr_db(10.0),
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        channel::SystemConfig::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn with_snr_db(&self, snr_db: f64) -> Self {
        Self { inner: self.inner.clone().with_snr_db(snr_db) }
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.inner.n_tx
    }

    #[getter]
    fn n_rx(&self) -> usize {
        self.inner.n_rx
    }

    #[getter]
    fn n_rf(&self) -> usize {
        self.inner.n_rf
    }

    #[getter]
    fn n_streams(&self) -> usize {
        self.inner.n_streams
    }

    #[getter]
    fn n_subcarriers(&self) -> usize {
        self.inner.n_subcarriers
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db()
    }

    #[getter]
    fn power_budget(&self) -> f64 {
        self.inner.power_budget
    }

    #[getter]
    fn frac_bw(&self) -> f64 {
        self.inner.frac_bw()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(n_tx={}, n_rx={}, n_rf={}, n_streams={}, n_subcarriers={}, snr_db={:.3})",
            c.n_tx,
            c.n_rx,
            c.n_rf,
            c.n_streams,
            c.n_subcarriers,
            c.snr_db()
        )
    }
}

/// One frequency-selective channel draw.
#[pyclass(name = "Channel", skip_from_py_object)]
struct PyChannel {
    inner: ChannelRealization,
}

#[pymethods]
impl PyChannel {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __len__(&self) -> usize {
        self.inner.n_subcarriers()
    }

    /// Subcarrier matrix `k` as nested lists of complex numbers.
    fn matrix(&self, k: usize) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self
            .inner
            .matrices
            .get(k)
            .ok_or_else(|| PyValueError::new_err(format!("subcarrier {k} out of range")))?;
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

#[pyfunction]
fn generate_channel(cfg: &PySystemConfig, seed: u64) -> PyResult<PyChannel> {
    hbfsim::generate_channel(&cfg.inner, seed).map(|inner| PyChannel { inner }).map_err(to_py)
}

fn params(n: usize, frac_bw: f64, spacing: f64, k: usize) -> PyResult<SquintParams> {
    SquintParams::new(n, frac_bw, spacing, k).map_err(to_py)
}

#[pyfunction]
fn bsr_closed(n: usize, frac_bw: f64, spacing: f64) -> f64 {
    squint::bsr_closed(n, frac_bw, spacing)
}

#[pyfunction]
#[pyo3(signature = (n, frac_bw, spacing, k = 128))]
fn bsr_exact(n: usize, frac_bw: f64, spacing: f64, k: usize) -> PyResult<f64> {
    Ok(squint::bsr_exact(&params(n, frac_bw, spacing, k)?))
}

#[pyfunction]
#[pyo3(signature = (n, frac_bw, spacing, k = 128))]
fn eag_ps_exact(n: usize, frac_bw: f64, spacing: f64, k: usize) -> PyResult<f64> {
    Ok(squint::eag_ps_exact(&params(n, frac_bw, spacing, k)?))
}

#[pyfunction]
fn eag_ps_approx(n: usize, frac_bw: f64, spacing: f64) -> f64 {
    squint::eag_ps_approx(n, frac_bw, spacing)
}

#[pyfunction]
#[pyo3(signature = (w, frac_bw, spacing, k = 128))]
fn eag_sw_exact(w: Vec<u8>, frac_bw: f64, spacing: f64, k: usize) -> PyResult<f64> {
    let p = params(w.len(), frac_bw, spacing, k)?;
    let w = SwitchVector::new(w).map_err(to_py)?;
    squint::eag_sw_exact(&w, &p).map_err(to_py)
}

#[pyfunction]
fn eag_sw_approx(w: Vec<u8>) -> PyResult<f64> {
    squint::eag_sw_approx(&SwitchVector::new(w).map_err(to_py)?).map_err(to_py)
}

/// `arch` is `dbf`, `sw-hbf` or `ps-hbf[:bits]`.
#[pyfunction]
fn power_total(arch: &str, cfg: &PySystemConfig) -> PyResult<f64> {
    let arch = match arch {
        "sw-hbf" => Architecture::SwHbf,
        other => other.parse::<Scheme>().map_err(to_py)?.architecture(),
    };
    harness::power_total(arch, &cfg.inner, &PowerModel::default()).map_err(to_py)
}

#[pyfunction]
fn energy_efficiency(avg_se: f64, power_w: f64) -> PyResult<f64> {
    harness::energy_efficiency(avg_se, power_w).map_err(to_py)
}

fn bit_rows(m: &hbfsim::linalg::RMat) -> Vec<Vec<u8>> {
    m.row_iter().map(|r| r.iter().map(|&x| x as u8).collect()).collect()
}

/// Full switch-based hybrid design; returns a dict with the SE and analog matrices.
#[pyfunction]
#[pyo3(signature = (cfg, channel, solver = "pga-ts", seed = 0))]
fn run_swhbf<'py>(
    py: Python<'py>,
    cfg: &PySystemConfig,
    channel: &PyChannel,
    solver: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: SolverKind = solver.parse().map_err(to_py)?;
    let params = SolverParams::default().with_seed(seed);
    let (sol, stats) = py
        .detach(|| harness::run_swhbf_detailed(&cfg.inner, &channel.inner, kind, &params))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("avg_se", sol.avg_se())?;
    out.set_item("se_per_subcarrier", sol.se_per_subcarrier.clone())?;
    out.set_item("f_rf", bit_rows(sol.f_rf.entries()))?;
    out.set_item("w_rf", bit_rows(sol.w_rf.entries()))?;
    out.set_item("iterations", stats.iterations())?;
    out.set_item("termination", stats.precoder.termination.to_string())?;
    Ok(out)
}

#[pyfunction]
fn dbf_baseline(cfg: &PySystemConfig, channel: &PyChannel) -> PyResult<f64> {
    harness::dbf_baseline(&cfg.inner, &channel.inner).map_err(to_py)
}

/// `bits` is 1, 2, 4 or `"inf"`.
#[pyfunction]
#[pyo3(signature = (cfg, channel, bits = "4"))]
fn pshbf_baseline(cfg: &PySystemConfig, channel: &PyChannel, bits: &str) -> PyResult<f64> {
    let bits: PsBits = bits.parse().map_err(to_py)?;
    harness::pshbf_baseline(&cfg.inner, &channel.inner, bits).map_err(to_py)
}

/// Monte Carlo run; returns `(rows, aggregates)` as lists of dicts.
#[pyfunction]
#[pyo3(signature = (cfg, solver, trials, seed, snr_db = None, bandwidth_hz = None, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo<'py>(
    py: Python<'py>,
    cfg: &PySystemConfig,
    solver: &str,
    trials: usize,
    seed: u64,
    snr_db: Option<Vec<f64>>,
    bandwidth_hz: Option<Vec<f64>>,
    threads: usize,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>)> {
    let mut spec = ExperimentSpec::new(cfg.inner.clone(), solver.parse().map_err(to_py)?, trials, seed);
    spec.snr_db = snr_db.unwrap_or_default();
    spec.bandwidth_hz = bandwidth_hz.unwrap_or_default();
    if threads == 0 {
        return Err(PyValueError::new_err("threads must be at least 1"));
    }
    let out = py.detach(|| harness::monte_carlo_with_threads(&spec, threads)).map_err(to_py)?;
    let rows = out
        .trials
        .iter()
        .map(|t| {
            let d = PyDict::new(py);
            d.set_item("trial", t.trial)?;
            d.set_item("seed", t.seed)?;
            d.set_item("solver", &t.solver)?;
            d.set_item("snr_db", t.snr_db)?;
            d.set_item("bandwidth_hz", t.bandwidth_hz)?;
            d.set_item("bsr", t.bsr)?;
            d.set_item("avg_se", t.avg_se)?;
            d.set_item("power_w", t.power_w)?;
            d.set_item("ee", t.ee)?;
            d.set_item("iterations", t.iterations)?;
            d.set_item("termination", &t.termination)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let aggregates = out
        .aggregates
        .iter()
        .map(|a| {
            let d = PyDict::new(py);
            d.set_item("snr_db", a.cell.snr_db)?;
            d.set_item("bandwidth_hz", a.cell.bandwidth_hz)?;
            d.set_item("successes", a.successes)?;
            d.set_item("failures", a.failures)?;
            d.set_item("mean_se", a.mean_se)?;
            d.set_item("std_se", a.std_se)?;
            d.set_item("mean_ee", a.mean_ee)?;
            d.set_item("std_ee", a.std_ee)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((rows, aggregates))
}

#[pymodule]
fn hbfsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(generate_channel, m)?)?;
    m.add_function(wrap_pyfunction!(bsr_closed, m)?)?;
    m.add_function(wrap_pyfunction!(bsr_exact, m)?)?;
    m.add_function(wrap_pyfunction!(eag_ps_exact, m)?)?;
    m.add_function(wrap_pyfunction!(eag_ps_approx, m)?)?;
    m.add_function(wrap_pyfunction!(eag_sw_exact, m)?)?;
    m.add_function(wrap_pyfunction!(eag_sw_approx, m)?)?;
    m.add_function(wrap_pyfunction!(power_total, m)?)?;
    m.add_function(wrap_pyfunction!(energy_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_swhbf, m)?)?;
    m.add_function(wrap_pyfunction!(dbf_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(pshbf_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    Ok(())
}
