//! Python bindings for `qctl`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use qctl::budget::{self, ConversionContext, EnergyUnit};
use qctl::noise::{FilterKind, FilterResponse, PowerSpectrum, PsdUnit};
use qctl::onequbit::{self, StaticKind};
use qctl::readout::{self, DetectorChain, FidelityMode, ReadoutBudget, SnrMethod};
use qctl::twoqubit::{self, DoubleDotParams, EigenMethod};

fn py_err(e: qctl::Error) -> PyErr {
    match e {
        qctl::Error::Validation(m) => PyValueError::new_err(m),
        qctl::Error::Numerical(m) => PyArithmeticError::new_err(m),
    }
}

fn static_kind(s: &str) -> PyResult<StaticKind> {
    Ok(match s {
        "z_phase" => StaticKind::ZPhase,
        "frequency" => StaticKind::Frequency,
        "phase" => StaticKind::Phase,
        "amplitude" => StaticKind::Amplitude,
        "duration" => StaticKind::Duration,
        _ => return Err(PyValueError::new_err(format!("unknown error kind '{s}'"))),
    })
}

fn filter_kind(s: &str) -> PyResult<FilterKind> {
    Ok(match s {
        "amplitude" => FilterKind::Amplitude,
        "frequency" => FilterKind::Frequency,
        "additive" => FilterKind::Additive,
        _ => return Err(PyValueError::new_err(format!("unknown filter kind '{s}'"))),
    })
}

/// Static-error fidelity of a rotation by `theta`; returns `(exact, taylor)`.
#[pyfunction]
fn fid_static(kind: &str, theta: f64, x: f64) -> PyResult<(f64, f64)> {
    let f = onequbit::fid_static(static_kind(kind)?, theta, x);
    Ok((f.exact, f.taylor))
}

/// Converts between `V`, `eV`, `Hz` and `rad/s`.
#[pyfunction]
#[pyo3(signature = (value, from_unit, to_unit, lever_arm=None))]
fn convert(value: f64, from_unit: &str, to_unit: &str, lever_arm: Option<f64>) -> PyResult<f64> {
    let mut ctx = ConversionContext::default();
    if let Some(a) = lever_arm {
        ctx.lever_arm = a;
    }
    let from = EnergyUnit::parse(from_unit).map_err(py_err)?;
    let to = EnergyUnit::parse(to_unit).map_err(py_err)?;
    budget::convert(value, from, to, &ctx).map_err(py_err)
}

/// Rows of a worked specification table as
/// `(section, item, value, unit, infidelity_operation, infidelity_idle, formula)`.
#[pyfunction]
#[pyo3(signature = (name, overrides=None))]
#[allow(clippy::type_complexity)]
fn case_study(
    name: &str,
    overrides: Option<BTreeMap<String, f64>>,
) -> PyResult<Vec<(String, String, f64, String, Option<f64>, Option<f64>, String)>> {
    let t = budget::case_study(name, &overrides.unwrap_or_default()).map_err(py_err)?;
    Ok(t.items
        .into_iter()
        .map(|i| (i.section, i.item, i.value, i.unit, i.infidelity_operation, i.infidelity_idle, i.formula))
        .collect())
}

/// Runs a CLI command on a JSON config string and returns the CSV or JSON text.
#[pyfunction]
#[pyo3(signature = (command, config="{}", seed=None, format="json"))]
fn run_command(command: &str, config: &str, seed: Option<u64>, format: &str) -> PyResult<String> {
    let cfg: serde_json::Value = serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let r = qctl::cli::run_command(command, &cfg, seed).map_err(py_err)?;
    match format {
        "csv" => Ok(r.to_csv()),
        "json" => Ok(r.to_json(&cfg, seed)),
        _ => Err(PyValueError::new_err("format must be 'csv' or 'json'")),
    }
}

/// Double-quantum-dot parameters in rad/s.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct DoubleDot {
    inner: DoubleDotParams,
}

#[pymethods]
impl DoubleDot {
    #[new]
    #[pyo3(signature = (omega_0, delta_omega_0, t0, u, epsilon=0.0))]
    fn new(omega_0: f64, delta_omega_0: f64, t0: f64, u: f64, epsilon: f64) -> Self {
        DoubleDot { inner: DoubleDotParams { omega_0, delta_omega_0, t0, u, epsilon } }
    }

    fn omega_op(&self) -> f64 {
        twoqubit::omega_op(&self.inner)
    }

    /// The four spin-branch energies, `exact=False` uses the closed-form approximation.
    #[pyo3(signature = (exact=true))]
    fn eigenenergies(&self, exact: bool) -> PyResult<Vec<f64>> {
        let m = if exact { EigenMethod::Exact6x6 } else { EigenMethod::Approx };
        Ok(twoqubit::eigenenergies(&self.inner, m).map_err(py_err)?.lambdas.to_vec())
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("DoubleDot(omega_0={}, delta_omega_0={}, t0={}, u={}, epsilon={})", p.omega_0, p.delta_omega_0, p.t0, p.u, p.epsilon)
    }
}

/// Intrinsic filter |H(ω)|² of a rotation.
#[pyclass]
struct Filter {
    inner: FilterResponse,
}

#[pymethods]
impl Filter {
    #[new]
    fn new(kind: &str, theta: f64, omega_r: f64) -> PyResult<Self> {
        Ok(Filter { inner: FilterResponse::new(filter_kind(kind)?, theta, omega_r).map_err(py_err)? })
    }

    fn h2(&self, omega: f64) -> f64 {
        self.inner.h2(omega)
    }

    #[getter]
    fn dc_gain(&self) -> f64 {
        self.inner.dc_gain
    }

    #[getter]
    fn enbw(&self) -> f64 {
        self.inner.enbw
    }
}

/// White-noise detection SNR; densities in A/√Hz.
#[pyfunction]
fn snr(i_s: f64, sensor_a_per_rthz: f64, circuit_a_per_rthz: f64, t_read: f64) -> PyResult<f64> {
    let w = |d: f64| PowerSpectrum::white(PsdUnit::A2PerHz, d * d);
    let chain = DetectorChain { i_s, s_sensor: w(sensor_a_per_rthz), s_circuit: w(circuit_a_per_rthz), t_read, threshold: None };
    readout::snr(&chain, SnrMethod::White).map_err(py_err)
}

#[pyfunction]
fn p_detect(snr: f64) -> PyResult<f64> {
    readout::p_detect(snr).map_err(py_err)
}

#[pyfunction]
fn readout_fidelity(p_charge: f64, p_sense: f64, p_detect: f64) -> PyResult<f64> {
    readout::readout_fidelity(&ReadoutBudget { p_charge, p_sense, p_detect }, FidelityMode::Full).map_err(py_err)
}

/// Adds the functions and classes to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(fid_static, m)?)?;
    m.add_function(wrap_pyfunction!(convert, m)?)?;
    m.add_function(wrap_pyfunction!(case_study, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(p_detect, m)?)?;
    m.add_function(wrap_pyfunction!(readout_fidelity, m)?)?;
    m.add_class::<DoubleDot>()?;
    m.add_class::<Filter>()?;
    m.add("TAU", qctl::TAU)?;
    Ok(())
}

#[pymodule]
fn qctl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
