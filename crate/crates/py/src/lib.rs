// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Inputs use cyclic units (GHz, MHz, kHz) and ns, like the
//! config files; results come back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use qnd_core::hilbert::{qubit_basis, squeezed_coherent_state, tensor_state};
use qnd_core::integrate::{
    evolve_schrodinger, max_step_limit, observables_series, sample_grid, IntegratorConfig,
};
use qnd_core::metrics::{measurement_report, Engine, Protocol};
use qnd_core::models::{build_hamiltonian, Envelope, Model};
use qnd_core::moments::{closure_error_report, evolve_moments, MomentState};
use qnd_core::search::{optimize_protocol, population_error, OptimizeOptions, SearchSpace};
use qnd_core::units::{ghz, khz, mhz, to_ghz, to_mhz};
use qnd_core::{presets, CavityStateSpec, HilbertDims, PulseSchedule, QubitModel, SystemParams, C64};
use serde_json::Value;

fn err(e: qnd_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => py.None().into_bound(py),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn engine(name: &str) -> PyResult<Engine> {
    match name {
        "exact" => Ok(Engine::Exact),
        "moments" => Ok(Engine::Moments),
        _ => Err(PyValueError::new_err(format!("unknown engine `{name}`"))),
    }
}

fn integrator(p: &Protocol) -> IntegratorConfig {
    IntegratorConfig::for_params(&p.params)
}

/// A readout protocol: system, coupler envelope, initial cavity state and
/// interaction time.
#[pyclass(name = "Protocol", module = "qnd", skip_from_py_object)]
#[derive(Clone)]
pub struct PyProtocol {
    inner: Protocol,
}

#[pymethods]
impl PyProtocol {
    #[new]
    #[pyo3(signature = (
        omega_c_ghz, omega_q_ghz, g_max_mhz, tau_ns, alpha, *, r = 0.0, theta = 0.0,
        envelope = "erfc", v1 = None, t1 = None, t2 = None, qubit_model = "ideal",
        qubit_levels = None, anharmonicity_mhz = None, kappa_int_khz = 0.0,
        kappa_ext_mhz = 0.0, cavity_cutoff = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        omega_c_ghz: f64,
        omega_q_ghz: f64,
        g_max_mhz: f64,
        tau_ns: f64,
        alpha: C64,
        r: f64,
        theta: f64,
        envelope: &str,
        v1: Option<f64>,
        t1: Option<f64>,
        t2: Option<f64>,
        qubit_model: &str,
        qubit_levels: Option<usize>,
        anharmonicity_mhz: Option<f64>,
        kappa_int_khz: f64,
        kappa_ext_mhz: f64,
        cavity_cutoff: Option<usize>,
    ) -> PyResult<Self> {
        let model = match qubit_model {
            "ideal" => QubitModel::Ideal,
            "transmon" => QubitModel::Transmon,
            m => return Err(PyValueError::new_err(format!("unknown qubit model `{m}`"))),
        };
        let need = |x: Option<f64>, n: &str| {
            x.ok_or_else(|| PyValueError::new_err(format!("envelope `{envelope}` needs {n}")))
        };
        let schedule = match envelope {
            "erfc" => PulseSchedule::erfc(need(v1, "v1")?, need(t1, "t1")?, need(t2, "t2")?),
            "square" => PulseSchedule::square(need(t1, "t1")?, need(t2, "t2")?),
            "constant" => PulseSchedule::constant(),
            e => return Err(PyValueError::new_err(format!("unknown envelope `{e}`"))),
        };
        let cavity = CavityStateSpec { alpha, r, theta };
        let levels = qubit_levels.unwrap_or(if model == QubitModel::Ideal { 2 } else { 5 });
        let anh = anharmonicity_mhz.unwrap_or(if model == QubitModel::Ideal { 0.0 } else { 200.0 });
        let params = SystemParams {
            omega_c: ghz(omega_c_ghz),
            omega_q: ghz(omega_q_ghz),
            anharmonicity: mhz(anh),
            g_max: mhz(g_max_mhz),
            kappa_int: khz(kappa_int_khz),
            kappa_ext: mhz(kappa_ext_mhz),
            qubit_model: model,
            dims: HilbertDims::new(levels, cavity_cutoff.unwrap_or_else(|| cavity.default_cutoff()))
                .map_err(err)?,
        };
        params.validate().map_err(err)?;
        schedule.validate().map_err(err)?;
        Ok(Self {
            inner: Protocol {
                params,
                schedule,
                cavity,
                tau: tau_ns,
            },
        })
    }

    /// A shipped protocol by name; see `preset_names()`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        presets::by_name(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn cavity_cutoff(&self) -> usize {
        self.inner.params.dims.cavity_cutoff
    }

    #[getter]
    fn qubit_levels(&self) -> usize {
        self.inner.params.dims.qubit_levels
    }

    #[getter]
    fn detuning_ghz(&self) -> f64 {
        to_ghz(self.inner.params.detuning())
    }

    #[getter]
    fn envelope(&self) -> (String, Vec<f64>) {
        match self.inner.schedule.envelope {
            Envelope::Erfc { v1, t1, t2 } => ("erfc".into(), vec![v1, t1, t2]),
            Envelope::Square { t1, t2 } => ("square".into(), vec![t1, t2]),
            Envelope::Constant => ("constant".into(), vec![]),
        }
    }

    /// Readout scores at `τ`: distinguishability, disturbance, per-branch
    /// flips and populations.
    #[pyo3(signature = (engine = "exact"))]
    fn report<'py>(&self, py: Python<'py>, engine: &str) -> PyResult<Bound<'py, PyAny>> {
        let e = self::engine(engine)?;
        let p = self.inner.clone();
        let r = py
            .detach(move || measurement_report(&p, e, &integrator(&p)))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("engine", engine)?;
        d.set_item("distinguishability", r.distinguishability)?;
        d.set_item("indistinguishability", r.indistinguishability)?;
        d.set_item("disturbance", r.disturbance)?;
        d.set_item("p0", r.p0)?;
        d.set_item("p1", r.p1)?;
        d.set_item("level_populations", r.level_populations)?;
        d.set_item("wall_clock_s", r.wall_clock_s)?;
        Ok(d.into_any())
    }

    /// Exact trajectory from qubit level `level`: `{"t_ns": [...], name: [...]}`.
    #[pyo3(signature = (level, samples = 121, observables = vec!["excited".to_string(), "a_re".to_string(), "a_im".to_string(), "n".to_string()]))]
    fn evolve<'py>(
        &self,
        py: Python<'py>,
        level: usize,
        samples: usize,
        observables: Vec<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = self.inner.clone();
        let names: Vec<&str> = observables.iter().map(String::as_str).collect();
        let (times, series) = py
            .detach(|| -> qnd_core::Result<_> {
                let h = build_hamiltonian(&p.params, &p.schedule, Model::Rabi)?;
                let cav = squeezed_coherent_state(&p.cavity, p.params.dims.cavity_cutoff)?;
                let psi = tensor_state(&qubit_basis(p.params.dims.qubit_levels, level), &cav, 0.0)?;
                let grid = sample_grid(0.0, p.tau, samples);
                let tr = evolve_schrodinger(&psi, &h, &grid, &integrator(&p))?;
                Ok((tr.times.clone(), observables_series(&tr, &names)?))
            })
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t_ns", times)?;
        for (name, values) in series {
            d.set_item(name, values)?;
        }
        Ok(d.into_any())
    }

    /// Moment-closure trajectory of `⟨a⟩` and the flip probability.
    #[pyo3(signature = (level, samples = 121))]
    fn evolve_moments<'py>(&self, py: Python<'py>, level: usize, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let p = &self.inner;
        let m0 = MomentState::product(p.params.qubit_model, level, &p.cavity);
        let grid = sample_grid(0.0, p.tau, samples);
        let tr = evolve_moments(&m0, &p.params, &p.schedule, 0.0, &grid, &integrator(p)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t_ns", tr.times.clone())?;
        d.set_item("a_re", tr.states.iter().map(|s| s.cavity_mean().re).collect::<Vec<_>>())?;
        d.set_item("a_im", tr.states.iter().map(|s| s.cavity_mean().im).collect::<Vec<_>>())?;
        d.set_item("n", tr.states.iter().map(|s| s.cavity_photons()).collect::<Vec<_>>())?;
        d.set_item(
            "flip",
            tr.states.iter().map(|s| s.flip_probability(level)).collect::<Vec<_>>(),
        )?;
        Ok(d.into_any())
    }

    /// Moment closure against the exact solution on this protocol.
    #[pyo3(signature = (samples = 61))]
    fn closure_report<'py>(&self, py: Python<'py>, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let p = self.inner.clone();
        let r = py
            .detach(move || {
                let grid = sample_grid(0.0, p.tau, samples);
                closure_error_report(&p.params, &p.schedule, &p.cavity, &grid, &integrator(&p))
            })
            .map_err(err)?;
        serialize(py, &r)
    }

    /// `|P₁(τ) − 1|` for an initially excited qubit.
    fn population_error(&self, py: Python<'_>) -> PyResult<f64> {
        let p = self.inner.clone();
        py.detach(move || population_error(&p, &integrator(&p))).map_err(err)
    }

    /// Local search inside the standard box, warm-started from this protocol.
    #[pyo3(signature = (d_bound = 0.005, seed = 0, de_generations = 0, local_starts = 1, local_max_evals = 50, override_bounds = false))]
    #[allow(clippy::too_many_arguments)]
    fn optimize<'py>(
        &self,
        py: Python<'py>,
        d_bound: f64,
        seed: u64,
        de_generations: usize,
        local_starts: usize,
        local_max_evals: usize,
        override_bounds: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = &self.inner;
        let start = presets::params_of(p)
            .ok_or_else(|| PyValueError::new_err("optimization needs an erfc envelope"))?;
        let mut space = SearchSpace::standard(
            p.params.qubit_model,
            p.tau,
            p.params.g_max,
            p.cavity.alpha.norm(),
            p.cavity.r,
        );
        space.qubit_levels = p.params.dims.qubit_levels;
        space.anharmonicity = p.params.anharmonicity;
        space.cavity_cutoff = Some(p.params.dims.cavity_cutoff);
        space.override_bounds = override_bounds;
        let opts = OptimizeOptions {
            seed,
            de_generations,
            local_starts,
            local_max_evals,
            warm_starts: vec![start],
            integrator: IntegratorConfig {
                max_step: max_step_limit(&p.params),
                ..IntegratorConfig::default()
            },
            ..OptimizeOptions::default()
        };
        let r = py.detach(move || optimize_protocol(&space, d_bound, &opts)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("omega_q_ghz", to_ghz(r.best.omega_q))?;
        d.set_item("omega_c_ghz", to_ghz(r.best.omega_c))?;
        d.set_item("v1", r.best.v1)?;
        d.set_item("t1", r.best.t1)?;
        d.set_item("t2", r.best.t2)?;
        d.set_item("theta", r.best.theta)?;
        d.set_item("distinguishability", r.distinguishability)?;
        d.set_item("disturbance", r.disturbance)?;
        d.set_item("feasible", r.feasible)?;
        d.set_item("evaluations", r.evaluations)?;
        Ok(d.into_any())
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.params;
        format!(
            "Protocol(omega_c={:.4} GHz, omega_q={:.4} GHz, g={:.1} MHz, tau={} ns, alpha={}, r={}, cutoff={})",
            to_ghz(p.omega_c),
            to_ghz(p.omega_q),
            to_mhz(p.g_max),
            self.inner.tau,
            self.inner.cavity.alpha,
            self.inner.cavity.r,
            p.dims.cavity_cutoff
        )
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::all().into_iter().map(|(n, _)| n).collect()
}

/// Overlap-based indistinguishability of two Gaussian states from `(⟨a⟩, ⟨a²⟩, ⟨a†a⟩)`.
#[pyfunction]
fn gaussian_indistinguishability(m0: (C64, C64, f64), m1: (C64, C64, f64)) -> f64 {
    qnd_core::metrics::gaussian_indistinguishability(m0, m1)
}

/// Readout objective with the disturbance penalty.
#[pyfunction]
fn penalized(distinguishability: f64, disturbance: f64, d_bound: f64) -> f64 {
    qnd_core::search::penalized(distinguishability, disturbance, d_bound)
}

#[pymodule]
fn qnd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", qnd_core::VERSION)?;
    m.add_class::<PyProtocol>()?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_indistinguishability, m)?)?;
    m.add_function(wrap_pyfunction!(penalized, m)?)?;
    Ok(())
}
