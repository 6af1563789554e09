// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration.
//!
//! Files are TOML with every frequency in cyclic units (GHz, MHz, kHz) and
//! every time in ns. Precedence: command-line flags, then the file, then the
//! defaults documented on each field.

use std::fmt;
use std::path::PathBuf;

use qnd_core::hilbert::{CavityStateSpec, HilbertDims};
use qnd_core::integrate::{max_step_limit, IntegratorConfig, Method};
use qnd_core::metrics::Engine;
use qnd_core::models::{GaussianDrive, PulseSchedule, QubitModel, SustainDrive, SystemParams};
use qnd_core::search::{Interval, DEFAULT_D_BOUND, G_MAX_MHZ, OMEGA_C_GHZ, OMEGA_Q_GHZ};
use qnd_core::units::{ghz, khz, mhz};
use qnd_core::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    /// `exact` (default) or `moments`
    pub engine: Option<String>,
    pub output_dir: Option<String>,
    pub override_bounds: Option<bool>,
    pub system: Option<RawSystem>,
    pub pulse: Option<RawPulse>,
    pub cavity: Option<RawCavity>,
    pub integrator: Option<RawIntegrator>,
    pub sweep: Option<RawSweep>,
    pub optimize: Option<RawOptimize>,
    pub robustness: Option<RawRobustness>,
    pub loss: Option<RawLoss>,
    pub phase_space: Option<RawPhaseSpace>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    pub omega_c_ghz: Option<f64>,
    pub omega_q_ghz: Option<f64>,
    pub g_max_mhz: Option<f64>,
    /// default 200 for the transmon, 0 otherwise
    pub anharmonicity_mhz: Option<f64>,
    pub kappa_int_khz: Option<f64>,
    pub kappa_ext_mhz: Option<f64>,
    /// `ideal` (default) or `transmon`
    pub qubit_model: Option<String>,
    /// default 2 for the ideal qubit, 5 for the transmon
    pub qubit_levels: Option<usize>,
    pub cavity_cutoff: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulse {
    /// `erfc`, `square` or `constant`
    pub envelope: Option<String>,
    pub v1_per_ns: Option<f64>,
    pub t1_ns: Option<f64>,
    pub t2_ns: Option<f64>,
    pub tau_ns: Option<f64>,
    pub drive: Option<RawDrive>,
    pub sustain: Option<RawSustain>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDrive {
    pub amplitude_mhz: Option<f64>,
    pub sigma_ns: Option<f64>,
    pub t_center_ns: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSustain {
    pub amplitude_mhz: Option<f64>,
    pub phase_rad: Option<f64>,
    pub start_ns: Option<f64>,
    pub end_ns: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCavity {
    pub alpha_abs: Option<f64>,
    pub alpha_phase_rad: Option<f64>,
    pub r: Option<f64>,
    pub theta_rad: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    /// `adaptive` (default) or `rk4`
    pub method: Option<String>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    /// default: the resolution limit for `ω_c + ω_q`
    pub max_step_ns: Option<f64>,
    pub norm_check_interval_ns: Option<f64>,
    /// trajectory samples, default 121
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub delta_over_g: Option<Vec<f64>>,
    pub tau_ns: Option<Vec<f64>>,
    pub g_mhz: Option<Vec<f64>>,
    pub target_d: Option<f64>,
    pub tau_min_ns: Option<f64>,
    pub tau_max_ns: Option<f64>,
    pub resolution_ns: Option<f64>,
    /// recurrence: include the shipped comparison protocols (default true)
    pub references: Option<bool>,
    /// detuning sweeps: put the qubit above the cavity (default true)
    pub qubit_above_cavity: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOptimize {
    pub d_bound: Option<f64>,
    pub de_generations: Option<usize>,
    pub de_population: Option<usize>,
    /// `moments` (default) or `exact`
    pub global_engine: Option<String>,
    pub local_starts: Option<usize>,
    pub local_max_evals: Option<usize>,
    pub local_step: Option<f64>,
    pub omega_q_ghz: Option<[f64; 2]>,
    pub omega_c_ghz: Option<[f64; 2]>,
    pub v1_per_ns: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRobustness {
    pub pct: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub square_v1_per_ns: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLoss {
    /// fixed sustain amplitude; calibrated when absent
    pub sustain_amplitude_mhz: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPhaseSpace {
    pub levels: Option<usize>,
    pub re_range: Option<[f64; 2]>,
    pub im_range: Option<[f64; 2]>,
    pub points: Option<usize>,
}

/// One offending field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{} invalid field(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub delta_over_g: Vec<f64>,
    pub tau_ns: Vec<f64>,
    pub g_mhz: Vec<f64>,
    pub target_d: f64,
    pub tau_range: (f64, f64),
    pub resolution: f64,
    pub references: bool,
    pub qubit_above_cavity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeSection {
    pub d_bound: f64,
    pub de_generations: usize,
    pub de_population: usize,
    pub global_engine: Engine,
    pub local_starts: usize,
    pub local_max_evals: usize,
    pub local_step: f64,
    pub omega_q: Interval,
    pub omega_c: Interval,
    pub v1: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessSection {
    pub pct: Vec<f64>,
    pub samples: usize,
    pub square_v1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSpaceSection {
    pub levels: usize,
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub points: usize,
}

/// Validated configuration in internal (angular) units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub seed: u64,
    pub engine: Engine,
    pub output_dir: PathBuf,
    pub override_bounds: bool,
    pub params: SystemParams,
    pub schedule: PulseSchedule,
    pub tau: f64,
    pub cavity: CavityStateSpec,
    pub integrator: IntegratorConfig,
    pub samples: usize,
    pub sweep: Sweep,
    pub optimize: OptimizeSection,
    pub robustness: RobustnessSection,
    pub sustain_amplitude: Option<f64>,
    pub phase_space: PhaseSpaceSection,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub engine: Option<String>,
    pub output_dir: Option<String>,
    pub override_bounds: bool,
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn load(path: &std::path::Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn apply_overrides(mut raw: RawConfig, o: &Overrides) -> RawConfig {
    if o.scenario.is_some() {
        raw.scenario = o.scenario.clone();
    }
    if o.seed.is_some() {
        raw.seed = o.seed;
    }
    if o.engine.is_some() {
        raw.engine = o.engine.clone();
    }
    if o.output_dir.is_some() {
        raw.output_dir = o.output_dir.clone();
    }
    if o.override_bounds {
        raw.override_bounds = Some(true);
    }
    raw
}

struct Checker {
    v: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.v.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn required(&mut self, path: &str, x: Option<f64>) -> f64 {
        match x {
            Some(v) if v.is_finite() => v,
            Some(_) => {
                self.push(path, "must be finite");
                f64::NAN
            }
            None => {
                self.push(path, "required field is missing");
                f64::NAN
            }
        }
    }

    fn non_negative(&mut self, path: &str, x: f64) {
        if !(x >= 0.0) {
            self.push(path, "must be >= 0");
        }
    }

    fn positive(&mut self, path: &str, x: f64) {
        if !(x > 0.0) {
            self.push(path, "must be > 0");
        }
    }

    fn range(&mut self, path: &str, r: [f64; 2]) -> Interval {
        if !(r[0] < r[1]) {
            self.push(path, "needs [lo, hi] with lo < hi");
        }
        Interval::new(r[0], r[1])
    }
}

fn parse_engine(s: &str) -> Option<Engine> {
    match s {
        "exact" => Some(Engine::Exact),
        "moments" => Some(Engine::Moments),
        _ => None,
    }
}

/// Validates every field and converts to internal units.
pub fn validate(raw: &RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut c = Checker { v: Vec::new() };
    let override_bounds = raw.override_bounds.unwrap_or(false);

    let engine = match raw.engine.as_deref() {
        None => Engine::Exact,
        Some(s) => parse_engine(s).unwrap_or_else(|| {
            c.push("engine", format!("unknown engine `{s}` (exact|moments)"));
            Engine::Exact
        }),
    };

    let sys = raw.system.clone().unwrap_or_default();
    let wc = c.required("system.omega_c_ghz", sys.omega_c_ghz);
    let wq = c.required("system.omega_q_ghz", sys.omega_q_ghz);
    let g = c.required("system.g_max_mhz", sys.g_max_mhz);
    c.non_negative("system.omega_c_ghz", wc);
    c.non_negative("system.omega_q_ghz", wq);
    c.non_negative("system.g_max_mhz", g);
    if !override_bounds {
        if wq.is_finite() && !(OMEGA_Q_GHZ.0..=OMEGA_Q_GHZ.1).contains(&wq) {
            c.push(
                "system.omega_q_ghz",
                format!("{wq} GHz outside bound {}–{} GHz (use --override-bounds)", OMEGA_Q_GHZ.0, OMEGA_Q_GHZ.1),
            );
        }
        if wc.is_finite() && !(OMEGA_C_GHZ.0..=OMEGA_C_GHZ.1).contains(&wc) {
            c.push(
                "system.omega_c_ghz",
                format!("{wc} GHz outside bound {}–{} GHz (use --override-bounds)", OMEGA_C_GHZ.0, OMEGA_C_GHZ.1),
            );
        }
        if g.is_finite() && g > G_MAX_MHZ {
            c.push("system.g_max_mhz", format!("{g} MHz above bound {G_MAX_MHZ} MHz (use --override-bounds)"));
        }
    }
    let model = match sys.qubit_model.as_deref() {
        None | Some("ideal") => QubitModel::Ideal,
        Some("transmon") => QubitModel::Transmon,
        Some(s) => {
            c.push("system.qubit_model", format!("unknown model `{s}` (ideal|transmon)"));
            QubitModel::Ideal
        }
    };
    let levels = sys.qubit_levels.unwrap_or(match model {
        QubitModel::Ideal => 2,
        QubitModel::Transmon => 5,
    });
    if model == QubitModel::Ideal && levels != 2 {
        c.push("system.qubit_levels", "the ideal qubit has exactly 2 levels");
    }
    if levels < 2 {
        c.push("system.qubit_levels", "must be >= 2");
    }
    let anh = sys.anharmonicity_mhz.unwrap_or(match model {
        QubitModel::Ideal => 0.0,
        QubitModel::Transmon => 200.0,
    });
    c.non_negative("system.anharmonicity_mhz", anh);
    let k_int = sys.kappa_int_khz.unwrap_or(0.0);
    let k_ext = sys.kappa_ext_mhz.unwrap_or(0.0);
    c.non_negative("system.kappa_int_khz", k_int);
    c.non_negative("system.kappa_ext_mhz", k_ext);

    let pulse = raw.pulse.clone().unwrap_or_default();
    let tau = c.required("pulse.tau_ns", pulse.tau_ns);
    c.positive("pulse.tau_ns", tau);
    let mut schedule = match pulse.envelope.as_deref() {
        None => {
            c.push("pulse.envelope", "required field is missing");
            PulseSchedule::constant()
        }
        Some("erfc") => {
            let v1 = c.required("pulse.v1_per_ns", pulse.v1_per_ns);
            let t1 = c.required("pulse.t1_ns", pulse.t1_ns);
            let t2 = c.required("pulse.t2_ns", pulse.t2_ns);
            c.positive("pulse.v1_per_ns", v1);
            c.non_negative("pulse.t1_ns", t1);
            if t1.is_finite() && t2.is_finite() && !(t2 > t1) {
                c.push("pulse.t2_ns", format!("t2 = {t2} must exceed t1 = {t1}"));
            }
            PulseSchedule::erfc(v1, t1, t2)
        }
        Some("square") => {
            let t1 = c.required("pulse.t1_ns", pulse.t1_ns);
            let t2 = c.required("pulse.t2_ns", pulse.t2_ns);
            c.non_negative("pulse.t1_ns", t1);
            if t1.is_finite() && t2.is_finite() && !(t2 > t1) {
                c.push("pulse.t2_ns", format!("t2 = {t2} must exceed t1 = {t1}"));
            }
            PulseSchedule::square(t1, t2)
        }
        Some("constant") => PulseSchedule::constant(),
        Some(s) => {
            c.push("pulse.envelope", format!("unknown envelope `{s}` (erfc|square|constant)"));
            PulseSchedule::constant()
        }
    };
    if let Some(d) = &pulse.drive {
        let amp = c.required("pulse.drive.amplitude_mhz", d.amplitude_mhz);
        let sigma = c.required("pulse.drive.sigma_ns", d.sigma_ns);
        let tc = c.required("pulse.drive.t_center_ns", d.t_center_ns);
        c.positive("pulse.drive.sigma_ns", sigma);
        schedule.drive = Some(GaussianDrive {
            amplitude: mhz(amp),
            sigma,
            t_center: tc,
        });
    }
    if let Some(s) = &pulse.sustain {
        let amp = c.required("pulse.sustain.amplitude_mhz", s.amplitude_mhz);
        let start = s.start_ns.unwrap_or(0.0);
        let end = s.end_ns.unwrap_or(tau);
        if !(end > start) {
            c.push("pulse.sustain.end_ns", "must exceed start_ns");
        }
        schedule.sustain = Some(SustainDrive {
            amplitude: mhz(amp),
            phase: s.phase_rad.unwrap_or(0.0),
            start,
            end,
        });
    }

    let cav = raw.cavity.clone().unwrap_or_default();
    let alpha_abs = c.required("cavity.alpha_abs", cav.alpha_abs);
    c.non_negative("cavity.alpha_abs", alpha_abs);
    let r = cav.r.unwrap_or(0.0);
    c.non_negative("cavity.r", r);
    let cavity = CavityStateSpec {
        alpha: C64::from_polar(alpha_abs, cav.alpha_phase_rad.unwrap_or(0.0)),
        r,
        theta: cav.theta_rad.unwrap_or(0.0),
    };

    let cutoff = match sys.cavity_cutoff {
        Some(n) => {
            if n < 2 {
                c.push("system.cavity_cutoff", "must be >= 2");
            }
            n
        }
        None if c.v.is_empty() => default_cutoff(&cavity, &schedule, tau),
        None => 2,
    };
    let dims = HilbertDims::new(levels.max(2), cutoff.max(2)).expect("clamped dims");
    let params = SystemParams {
        omega_c: ghz(wc),
        omega_q: ghz(wq),
        anharmonicity: mhz(anh),
        g_max: mhz(g),
        kappa_int: khz(k_int),
        kappa_ext: mhz(k_ext),
        qubit_model: model,
        dims,
    };

    let ir = raw.integrator.clone().unwrap_or_default();
    let limit = if wc.is_finite() && wq.is_finite() {
        max_step_limit(&params)
    } else {
        1e-3
    };
    let method = match ir.method.as_deref() {
        None | Some("adaptive") => Method::AdaptiveRk,
        Some("rk4") => Method::FixedRk4,
        Some(s) => {
            c.push("integrator.method", format!("unknown method `{s}` (adaptive|rk4)"));
            Method::AdaptiveRk
        }
    };
    let integrator = IntegratorConfig {
        method,
        rel_tol: ir.rel_tol.unwrap_or(1e-9),
        abs_tol: ir.abs_tol.unwrap_or(1e-11),
        max_step: ir.max_step_ns.unwrap_or(limit),
        norm_check_interval: ir.norm_check_interval_ns.unwrap_or(0.5),
    };
    c.positive("integrator.rel_tol", integrator.rel_tol);
    c.positive("integrator.abs_tol", integrator.abs_tol);
    c.positive("integrator.max_step_ns", integrator.max_step);
    if integrator.max_step > limit * (1.0 + 1e-12) {
        c.push(
            "integrator.max_step_ns",
            format!("{} ns does not resolve ω_c+ω_q (limit {limit:.4e} ns)", integrator.max_step),
        );
    }
    let samples = ir.samples.unwrap_or(121);
    if samples < 2 {
        c.push("integrator.samples", "must be >= 2");
    }

    let sw = raw.sweep.clone().unwrap_or_default();
    let sweep = Sweep {
        delta_over_g: sw.delta_over_g.unwrap_or_else(|| vec![5.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 50.0, 60.0]),
        tau_ns: sw.tau_ns.unwrap_or_else(|| vec![4.0, 5.0, 6.0, 8.0, 10.0]),
        g_mhz: sw.g_mhz.unwrap_or_else(|| vec![25.0, 50.0, 75.0, 100.0]),
        target_d: sw.target_d.unwrap_or(0.99),
        tau_range: (sw.tau_min_ns.unwrap_or(2.0), sw.tau_max_ns.unwrap_or(30.0)),
        resolution: sw.resolution_ns.unwrap_or(1.0),
        references: sw.references.unwrap_or(true),
        qubit_above_cavity: sw.qubit_above_cavity.unwrap_or(true),
    };
    if sweep.delta_over_g.iter().any(|x| !(*x > 0.0)) {
        c.push("sweep.delta_over_g", "entries must be > 0");
    }
    if sweep.tau_ns.iter().any(|x| !(*x > 0.0)) {
        c.push("sweep.tau_ns", "entries must be > 0");
    }
    if sweep.g_mhz.iter().any(|x| !(*x >= 0.0)) {
        c.push("sweep.g_mhz", "entries must be >= 0");
    }
    if !(sweep.tau_range.0 > 0.0 && sweep.tau_range.1 > sweep.tau_range.0) {
        c.push("sweep.tau_max_ns", "needs 0 < tau_min_ns < tau_max_ns");
    }
    c.positive("sweep.resolution_ns", sweep.resolution);
    if !(sweep.target_d > 0.0 && sweep.target_d < 1.0) {
        c.push("sweep.target_d", "must lie in (0, 1)");
    }

    let op = raw.optimize.clone().unwrap_or_default();
    let global_engine = match op.global_engine.as_deref() {
        None => Engine::Moments,
        Some(s) => parse_engine(s).unwrap_or_else(|| {
            c.push("optimize.global_engine", format!("unknown engine `{s}` (exact|moments)"));
            Engine::Moments
        }),
    };
    let q_box = op.omega_q_ghz.unwrap_or([OMEGA_Q_GHZ.0, OMEGA_Q_GHZ.1]);
    let c_box = op.omega_c_ghz.unwrap_or([OMEGA_C_GHZ.0, OMEGA_C_GHZ.1]);
    let optimize = OptimizeSection {
        d_bound: op.d_bound.unwrap_or(DEFAULT_D_BOUND),
        de_generations: op.de_generations.unwrap_or(10),
        de_population: op.de_population.unwrap_or(90),
        global_engine,
        local_starts: op.local_starts.unwrap_or(5),
        local_max_evals: op.local_max_evals.unwrap_or(100),
        local_step: op.local_step.unwrap_or(0.03),
        omega_q: {
            let iv = c.range("optimize.omega_q_ghz", q_box);
            Interval::new(ghz(iv.lo), ghz(iv.hi))
        },
        omega_c: {
            let iv = c.range("optimize.omega_c_ghz", c_box);
            Interval::new(ghz(iv.lo), ghz(iv.hi))
        },
        v1: c.range("optimize.v1_per_ns", op.v1_per_ns.unwrap_or([0.2, 20.0])),
    };
    if !override_bounds {
        if q_box[0] < OMEGA_Q_GHZ.0 || q_box[1] > OMEGA_Q_GHZ.1 {
            c.push("optimize.omega_q_ghz", "outside the standard 3–7 GHz box (use --override-bounds)");
        }
        if c_box[0] < OMEGA_C_GHZ.0 || c_box[1] > OMEGA_C_GHZ.1 {
            c.push("optimize.omega_c_ghz", "outside the standard 8–11 GHz box (use --override-bounds)");
        }
    }
    if !(optimize.d_bound > 0.0 && optimize.d_bound < 1.0) {
        c.push("optimize.d_bound", "must lie in (0, 1)");
    }

    let rb = raw.robustness.clone().unwrap_or_default();
    let robustness = RobustnessSection {
        pct: rb.pct.unwrap_or_else(|| vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
        samples: rb.samples.unwrap_or(200),
        square_v1: rb.square_v1_per_ns.unwrap_or(20.0),
    };
    if robustness.pct.iter().any(|p| !(*p >= 0.0)) {
        c.push("robustness.pct", "entries must be >= 0");
    }
    if robustness.samples == 0 {
        c.push("robustness.samples", "must be > 0");
    }
    c.positive("robustness.square_v1_per_ns", robustness.square_v1);

    let sustain_amplitude = raw
        .loss
        .as_ref()
        .and_then(|l| l.sustain_amplitude_mhz)
        .map(mhz);
    if sustain_amplitude.is_some_and(|a| !(a >= 0.0)) {
        c.push("loss.sustain_amplitude_mhz", "must be >= 0");
    }

    let ps = raw.phase_space.clone().unwrap_or_default();
    let span = alpha_abs.max(1.0) + 4.0;
    let phase_space = PhaseSpaceSection {
        levels: ps.levels.unwrap_or(levels.min(4)),
        re_range: ps.re_range.unwrap_or([-span, span]),
        im_range: ps.im_range.unwrap_or([-span, span]),
        points: ps.points.unwrap_or(61),
    };
    c.range("phase_space.re_range", phase_space.re_range);
    c.range("phase_space.im_range", phase_space.im_range);
    if phase_space.points < 2 {
        c.push("phase_space.points", "must be >= 2");
    }
    if phase_space.levels == 0 || phase_space.levels > levels {
        c.push("phase_space.levels", format!("must lie in 1..={levels}"));
    }

    if !c.v.is_empty() {
        return Err(ConfigError::Invalid(c.v));
    }
    Ok(ScenarioConfig {
        scenario: raw.scenario.clone(),
        seed: raw.seed.unwrap_or(0),
        engine,
        output_dir: PathBuf::from(raw.output_dir.clone().unwrap_or_else(|| "out".into())),
        override_bounds,
        params,
        schedule,
        tau,
        cavity,
        integrator,
        samples,
        sweep,
        optimize,
        robustness,
        sustain_amplitude,
        phase_space,
    })
}

/// Cutoff covering the prepared state and whatever a resonant drive adds.
fn default_cutoff(cavity: &CavityStateSpec, schedule: &PulseSchedule, tau: f64) -> usize {
    let base = cavity.default_cutoff();
    if !schedule.has_drive() {
        return base;
    }
    // crude bound on the displacement a resonant drive can produce
    let n = 2000;
    let h = tau / n as f64;
    let pushed: f64 = (0..=n)
        .map(|k| schedule.drive_amplitude(k as f64 * h).norm() * h)
        .sum();
    let driven = CavityStateSpec::coherent(C64::new(cavity.alpha.norm() + pushed, 0.0));
    base.max(driven.default_cutoff())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
        [system]
        omega_c_ghz = 8.128
        omega_q_ghz = 6.998
        g_max_mhz = 100.0
        cavity_cutoff = 40

        [pulse]
        envelope = "erfc"
        v1_per_ns = 2.0
        t1_ns = 1.0
        t2_ns = 5.0
        tau_ns = 6.0

        [cavity]
        alpha_abs = 3.0
    "#;

    fn paths(e: ConfigError) -> Vec<String> {
        match e {
            ConfigError::Invalid(v) => v.into_iter().map(|v| v.path).collect(),
            other => panic!("expected violations, got {other}"),
        }
    }

    #[test]
    fn cyclic_units_are_converted() {
        let cfg = validate(&parse(GOOD).unwrap()).unwrap();
        assert!((cfg.params.omega_c - 2.0 * std::f64::consts::PI * 8.128).abs() < 1e-12);
        assert!((cfg.params.g_max - 2.0 * std::f64::consts::PI * 0.1).abs() < 1e-12);
        assert_eq!(cfg.params.dims.cavity_cutoff, 40);
        assert_eq!(cfg.engine, Engine::Exact);
    }

    #[test]
    fn out_of_box_qubit_frequency() {
        let text = GOOD.replace("omega_q_ghz = 6.998", "omega_q_ghz = 7.5");
        let raw = parse(&text).unwrap();
        assert_eq!(paths(validate(&raw).unwrap_err()), vec!["system.omega_q_ghz"]);
        let raw = apply_overrides(
            raw,
            &Overrides {
                override_bounds: true,
                ..Default::default()
            },
        );
        assert!(validate(&raw).is_ok());
    }

    #[test]
    fn reversed_window() {
        let text = GOOD.replace("t2_ns = 5.0", "t2_ns = 0.5");
        assert_eq!(paths(validate(&parse(&text).unwrap()).unwrap_err()), vec!["pulse.t2_ns"]);
    }

    #[test]
    fn empty_config_lists_required_fields() {
        let p = paths(validate(&parse("").unwrap()).unwrap_err());
        for f in [
            "system.omega_c_ghz",
            "system.omega_q_ghz",
            "system.g_max_mhz",
            "pulse.tau_ns",
            "pulse.envelope",
            "cavity.alpha_abs",
        ] {
            assert!(p.iter().any(|x| x == f), "{f} missing from {p:?}");
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = parse("[system]\nomega_c_ghz = = 3").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse("bogus = 1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn flags_take_precedence() {
        let raw = parse(&format!("seed = 3\nengine = \"exact\"\n{GOOD}")).unwrap();
        let raw = apply_overrides(
            raw,
            &Overrides {
                seed: Some(9),
                engine: Some("moments".into()),
                ..Default::default()
            },
        );
        let cfg = validate(&raw).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.engine, Engine::Moments);
    }

    #[test]
    fn driven_cutoff_covers_drive() {
        let text = GOOD.replace("cavity_cutoff = 40\n", "").replace("alpha_abs = 3.0", "alpha_abs = 0.0")
            + "\n[pulse.drive]\namplitude_mhz = 60.4\nsigma_ns = 5.424\nt_center_ns = 1.233\n";
        let cfg = validate(&parse(&text).unwrap()).unwrap();
        // the truncated pulse alone displaces the vacuum to |α| ≈ 2
        let needed = CavityStateSpec::coherent(C64::new(2.0, 0.0)).default_cutoff();
        assert!(cfg.params.dims.cavity_cutoff >= needed, "{}", cfg.params.dims.cavity_cutoff);
    }
}
