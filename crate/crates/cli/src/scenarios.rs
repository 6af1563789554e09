// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! The reproducible experiments behind `qnd run`.

use std::time::Instant;

use qnd_core::hilbert::{qubit_basis, squeezed_coherent_state, tensor_state};
use qnd_core::integrate::{
    evolve_lindblad, evolve_schrodinger, max_step_limit, sample_grid, CollapseRole, IntegratorConfig,
    Observed,
};
use qnd_core::metrics::{
    cavity_indistinguishability, dispersive_analytics, husimi_q, measurement_report,
    uhlmann_indistinguishability, Engine, Protocol, ReadoutReport,
};
use qnd_core::models::{build_hamiltonian, Model, SustainDrive};
use qnd_core::moments::{evolve_moments, MomentState};
use qnd_core::search::{
    optimize_protocol, robustness_mc, square_baseline, time_to_fidelity, OptimizeOptions,
    ProtocolParams, SearchSpace,
};
use qnd_core::units::{mhz, to_ghz, to_mhz};
use qnd_core::{presets, DensityState, JointState, Subsystem, C64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::output::{Cell, OutputDir, OutputError};

/// Name and one-line description of every scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("recurrence", "excited population vs time against coherent and dispersive references"),
    ("fidelity-vs-tau", "best indistinguishability per interaction time"),
    ("time-vs-g", "shortest interaction time reaching a target per coupling"),
    ("da-distance", "centroid separation: exact, dispersive model, moments, analytic"),
    ("da-flip", "qubit flip probability vs detuning ratio"),
    ("transmon-phasespace", "Husimi Q of the cavity per initial transmon level"),
    ("transmon-leakage", "transmon level populations over the protocol"),
    ("loss-sustain", "photon number and fidelity with cavity loss, with and without a sustain drive"),
    ("robustness", "population error under envelope noise: smooth vs square"),
    ("optimize", "protocol search inside the frequency box"),
];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Bad or missing inputs for this scenario; maps to exit code 2.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Simulation(#[from] qnd_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

type Result<T> = std::result::Result<T, RunError>;

pub fn run(name: &str, cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let summary = match name {
        "recurrence" => recurrence(cfg, out)?,
        "fidelity-vs-tau" => fidelity_vs_tau(cfg, out)?,
        "time-vs-g" => time_vs_g(cfg, out)?,
        "da-distance" => da_distance(cfg, out)?,
        "da-flip" => da_flip(cfg, out)?,
        "transmon-phasespace" => transmon_phasespace(cfg, out)?,
        "transmon-leakage" => transmon_leakage(cfg, out)?,
        "loss-sustain" => loss_sustain(cfg, out)?,
        "robustness" => robustness(cfg, out)?,
        "optimize" => optimize(cfg, out)?,
        other => return Err(RunError::Config(format!("unknown scenario `{other}`"))),
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn protocol(cfg: &ScenarioConfig) -> Protocol {
    Protocol {
        params: cfg.params.clone(),
        schedule: cfg.schedule.clone(),
        cavity: cfg.cavity,
        tau: cfg.tau,
    }
}

fn integrator_for(p: &Protocol, base: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        max_step: base.max_step.min(max_step_limit(&p.params)),
        ..base.clone()
    }
}

fn erfc_params(p: &Protocol) -> Result<ProtocolParams> {
    presets::params_of(p)
        .ok_or_else(|| RunError::Config("pulse.envelope: this scenario needs an erfc envelope".into()))
}

fn branch(p: &Protocol, level: usize, model: Model, samples: &[f64], cfg: &IntegratorConfig) -> Result<Vec<JointState>> {
    let h = build_hamiltonian(&p.params, &p.schedule, model)?;
    let cav = squeezed_coherent_state(&p.cavity, p.params.dims.cavity_cutoff)?;
    let psi = tensor_state(&qubit_basis(p.params.dims.qubit_levels, level), &cav, 0.0)?;
    Ok(evolve_schrodinger(&psi, &h, samples, &integrator_for(p, cfg))?.states)
}

fn report_summary(r: &ReadoutReport) -> Value {
    json!({
        "engine": r.engine,
        "distinguishability": r.distinguishability,
        "indistinguishability": r.indistinguishability,
        "disturbance": r.disturbance,
        "p0": r.p0,
        "p1": r.p1,
        "level_populations": r.level_populations,
    })
}

fn column<S: Observed>(states: &[S], f: impl Fn(&S) -> f64) -> Vec<f64> {
    states.iter().map(f).collect()
}

fn table(times: &[f64], cols: &[Vec<f64>]) -> Vec<Vec<Cell>> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            std::iter::once(Cell::F(t))
                .chain(cols.iter().map(|c| Cell::F(c[i])))
                .collect()
        })
        .collect()
}

fn recurrence(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let main = protocol(cfg);
    let grid = sample_grid(0.0, cfg.tau, cfg.samples);
    let mut header = vec!["t_ns", "excited_protocol"];
    let excited = |p: &Protocol| -> Result<Vec<f64>> {
        let states = branch(p, 1, Model::Rabi, &grid, &cfg.integrator)?;
        Ok(column(&states, |s| s.qubit_population(1)))
    };
    let mut cols = vec![excited(&main)?];
    let mut refs = serde_json::Map::new();
    if cfg.sweep.references {
        for (label, p) in [
            ("excited_coherent", presets::coherent_readout()),
            ("excited_dispersive", presets::dispersive_reference(cfg.tau)),
        ] {
            let c = excited(&p)?;
            refs.insert(label.into(), json!(c.last().copied()));
            header.push(label);
            cols.push(c);
        }
    }
    out.csv("recurrence.csv", &header, &table(&grid, &cols))?;
    let report = measurement_report(&main, cfg.engine, &cfg.integrator)?;
    Ok(json!({
        "scenario": "recurrence",
        "final_excited": cols[0].last(),
        "reference_final_excited": refs,
        "readout": report_summary(&report),
    }))
}

fn search_space(cfg: &ScenarioConfig, tau: f64) -> SearchSpace {
    let p = &cfg.params;
    let mut s = SearchSpace::standard(p.qubit_model, tau, p.g_max, cfg.cavity.alpha.norm(), cfg.cavity.r);
    s.omega_q = cfg.optimize.omega_q;
    s.omega_c = cfg.optimize.omega_c;
    s.v1 = cfg.optimize.v1;
    s.kappa_int = p.kappa_int;
    s.kappa_ext = p.kappa_ext;
    s.qubit_levels = p.dims.qubit_levels;
    s.anharmonicity = p.anharmonicity;
    s.cavity_cutoff = Some(p.dims.cavity_cutoff);
    s.override_bounds = cfg.override_bounds;
    s
}

fn options(cfg: &ScenarioConfig, warm: Vec<ProtocolParams>) -> OptimizeOptions {
    let o = &cfg.optimize;
    OptimizeOptions {
        seed: cfg.seed,
        de_generations: o.de_generations,
        de_population: o.de_population,
        global_engine: o.global_engine,
        local_starts: o.local_starts,
        local_max_evals: o.local_max_evals,
        local_step: o.local_step,
        warm_starts: warm,
        integrator: cfg.integrator.clone(),
    }
}

fn fidelity_vs_tau(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let base = protocol(cfg);
    let template = erfc_params(&base)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &tau in &cfg.sweep.tau_ns {
        let start = template.rescaled(cfg.tau, tau);
        let (d, dist, p0, p1, feasible) = if cfg.optimize.local_max_evals > 0 {
            let mut opts = options(cfg, vec![start]);
            opts.de_generations = 0;
            let r = optimize_protocol(&search_space(cfg, tau), cfg.optimize.d_bound, &opts)?;
            let v = &r.verification;
            (r.distinguishability, r.disturbance, v.p0, v.p1, r.feasible)
        } else {
            let mut p = base.clone();
            p.schedule = qnd_core::PulseSchedule::erfc(start.v1, start.t1, start.t2);
            p.tau = tau;
            let r = measurement_report(&p, cfg.engine, &cfg.integrator)?;
            (r.distinguishability, r.disturbance, r.p0, r.p1, r.disturbance <= cfg.optimize.d_bound)
        };
        rows.push(vec![tau.into(), d.into(), dist.into(), p0.into(), p1.into(), feasible.into()]);
        points.push(json!({"tau_ns": tau, "distinguishability": d, "disturbance": dist}));
    }
    out.csv(
        "fidelity_vs_tau.csv",
        &["tau_ns", "distinguishability", "disturbance", "p0", "p1", "feasible"],
        &rows,
    )?;
    Ok(json!({"scenario": "fidelity-vs-tau", "points": points}))
}

fn time_vs_g(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let template = erfc_params(&protocol(cfg))?;
    let g_grid: Vec<f64> = cfg.sweep.g_mhz.iter().map(|&g| mhz(g)).collect();
    let rows = time_to_fidelity(
        &search_space(cfg, cfg.tau),
        &template,
        cfg.tau,
        cfg.sweep.target_d,
        cfg.optimize.d_bound,
        &g_grid,
        cfg.sweep.tau_range,
        cfg.sweep.resolution,
        &options(cfg, Vec::new()),
    )?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                to_mhz(r.g_max).into(),
                r.tau_min.into(),
                r.distinguishability.into(),
                r.disturbance.into(),
                r.tau_min.is_some().into(),
            ]
        })
        .collect();
    out.csv(
        "time_vs_g.csv",
        &["g_mhz", "tau_min_ns", "distinguishability", "disturbance", "reachable"],
        &cells,
    )?;
    Ok(json!({"scenario": "time-vs-g", "target_d": cfg.sweep.target_d, "rows": rows}))
}

#[derive(Clone, Debug, Serialize)]
struct DaRow {
    delta_over_g: f64,
    distance_exact: f64,
    distance_dispersive: Option<f64>,
    distance_moments: f64,
    distance_analytic: f64,
    flip_exact: [f64; 2],
    flip_moments: [f64; 2],
}

#[derive(Clone, Debug, Default, Serialize)]
struct DaTiming {
    exact_s: f64,
    moments_s: f64,
}

fn da_sweep(cfg: &ScenarioConfig, with_dispersive: bool) -> Result<(Vec<DaRow>, DaTiming)> {
    let base = protocol(cfg);
    let g = base.params.g_max;
    if !(g > 0.0) {
        return Err(RunError::Config("system.g_max_mhz: the sweep needs a coupling".into()));
    }
    // displacement the drive alone would produce
    let n = 4000;
    let h = base.tau / n as f64;
    let pushed: C64 = (0..n)
        .map(|k| base.schedule.drive_amplitude((k as f64 + 0.5) * h) * h)
        .sum::<C64>()
        * C64::new(0.0, -1.0);
    let alpha_final = base.cavity.alpha + pushed;
    let at = [base.tau];
    let mut timing = DaTiming::default();
    let mut rows = Vec::new();
    for &ratio in &cfg.sweep.delta_over_g {
        let mut p = base.clone();
        let side = if cfg.sweep.qubit_above_cavity { 1.0 } else { -1.0 };
        p.params.omega_q = p.params.omega_c + side * ratio * g;
        if !(p.params.omega_q > 0.0) {
            return Err(RunError::Config(format!(
                "sweep.delta_over_g: {ratio} puts the qubit below zero frequency"
            )));
        }
        let t = Instant::now();
        let ex: Vec<JointState> = (0..2)
            .map(|x| branch(&p, x, Model::Rabi, &at, &cfg.integrator).map(|mut s| s.remove(0)))
            .collect::<Result<_>>()?;
        timing.exact_s += t.elapsed().as_secs_f64();
        let distance_dispersive = if with_dispersive {
            let ds: Vec<JointState> = (0..2)
                .map(|x| branch(&p, x, Model::Dispersive, &at, &cfg.integrator).map(|mut s| s.remove(0)))
                .collect::<Result<_>>()?;
            Some((ds[0].cavity_mean() - ds[1].cavity_mean()).norm())
        } else {
            None
        };
        let t = Instant::now();
        let ms: Vec<MomentState> = (0..2)
            .map(|x| {
                let m0 = MomentState::product(p.params.qubit_model, x, &p.cavity);
                evolve_moments(&m0, &p.params, &p.schedule, 0.0, &at, &integrator_for(&p, &cfg.integrator))
                    .map(|tr| *tr.last())
            })
            .collect::<qnd_core::Result<_>>()?;
        timing.moments_s += t.elapsed().as_secs_f64();
        let delta = p.params.detuning();
        let analytic = dispersive_analytics(g, delta, p.tau, alpha_final, &p.schedule)?;
        rows.push(DaRow {
            delta_over_g: ratio,
            distance_exact: (ex[0].cavity_mean() - ex[1].cavity_mean()).norm(),
            distance_dispersive,
            distance_moments: (ms[0].cavity_mean() - ms[1].cavity_mean()).norm(),
            distance_analytic: analytic.lambda,
            flip_exact: [1.0 - ex[0].qubit_population(0), 1.0 - ex[1].qubit_population(1)],
            flip_moments: [ms[0].flip_probability(0), ms[1].flip_probability(1)],
        });
    }
    Ok((rows, timing))
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        (a - b).abs() / b
    }
}

fn da_distance(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let (rows, timing) = da_sweep(cfg, true)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            let disp = r.distance_dispersive.unwrap_or(f64::NAN);
            vec![
                r.delta_over_g.into(),
                r.distance_exact.into(),
                disp.into(),
                r.distance_moments.into(),
                r.distance_analytic.into(),
                rel(disp, r.distance_exact).into(),
                rel(r.distance_moments, r.distance_exact).into(),
            ]
        })
        .collect();
    out.csv(
        "da_distance.csv",
        &[
            "delta_over_g",
            "distance_exact",
            "distance_dispersive",
            "distance_moments",
            "distance_analytic",
            "rel_dev_dispersive",
            "rel_dev_moments",
        ],
        &cells,
    )?;
    Ok(json!({"scenario": "da-distance", "rows": rows, "timing": timing}))
}

fn da_flip(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let (rows, timing) = da_sweep(cfg, false)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.delta_over_g.into(),
                r.flip_exact[0].into(),
                r.flip_exact[1].into(),
                r.flip_moments[0].into(),
                r.flip_moments[1].into(),
            ]
        })
        .collect();
    out.csv(
        "da_flip.csv",
        &["delta_over_g", "p0_exact", "p1_exact", "p0_moments", "p1_moments"],
        &cells,
    )?;
    Ok(json!({"scenario": "da-flip", "rows": rows, "timing": timing}))
}

fn transmon_phasespace(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let p = protocol(cfg);
    let ps = &cfg.phase_space;
    let axis = |r: [f64; 2]| -> Vec<f64> {
        (0..ps.points)
            .map(|k| r[0] + (r[1] - r[0]) * k as f64 / (ps.points - 1) as f64)
            .collect()
    };
    let (re, im) = (axis(ps.re_range), axis(ps.im_range));
    let grid = sample_grid(0.0, p.tau, cfg.samples);
    let mut q_rows = Vec::new();
    let mut centroid_cols = Vec::new();
    let mut header = vec!["t_ns".to_string()];
    let mut finals = Vec::new();
    for level in 0..ps.levels {
        let states = branch(&p, level, Model::Rabi, &grid, &cfg.integrator)?;
        let last = states.last().expect("non-empty grid");
        for (row, &y) in husimi_q(last, &re, &im).iter().zip(&im) {
            for (&q, &x) in row.iter().zip(&re) {
                q_rows.push(vec![level.into(), x.into(), y.into(), q.into()]);
            }
        }
        centroid_cols.push(column(&states, |s| s.cavity_mean().re));
        centroid_cols.push(column(&states, |s| s.cavity_mean().im));
        header.push(format!("x{level}_a_re"));
        header.push(format!("x{level}_a_im"));
        let a = last.cavity_mean();
        finals.push(json!({
            "level": level,
            "a_re": a.re,
            "a_im": a.im,
            "initial_level_population": last.qubit_population(level),
        }));
    }
    out.csv("husimi.csv", &["level", "re", "im", "q"], &q_rows)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("centroids.csv", &header, &table(&grid, &centroid_cols))?;
    Ok(json!({"scenario": "transmon-phasespace", "final_centroids": finals}))
}

fn transmon_leakage(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let p = protocol(cfg);
    let levels = p.params.dims.qubit_levels;
    let grid = sample_grid(0.0, p.tau, cfg.samples);
    let mut header = vec!["t_ns".to_string()];
    let mut cols = Vec::new();
    let mut leak = Vec::new();
    for x in 0..2 {
        let states = branch(&p, x, Model::Rabi, &grid, &cfg.integrator)?;
        for k in 0..levels {
            header.push(format!("x{x}_p{k}"));
            cols.push(column(&states, |s| s.qubit_population(k)));
        }
        let last = states.last().expect("non-empty grid");
        leak.push((2..levels).map(|k| last.qubit_population(k)).sum::<f64>());
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("leakage.csv", &header, &table(&grid, &cols))?;
    let report = measurement_report(&p, cfg.engine, &cfg.integrator)?;
    Ok(json!({
        "scenario": "transmon-leakage",
        "final_leakage": leak,
        "readout": report_summary(&report),
    }))
}

struct LossRun {
    photons: Vec<f64>,
    excited: Vec<f64>,
    indistinguishability: f64,
}

fn lossy_branches(p: &Protocol, kappa: f64, grid: &[f64], cfg: &IntegratorConfig) -> Result<LossRun> {
    let h = build_hamiltonian(&p.params, &p.schedule, Model::Rabi)?;
    let cav = squeezed_coherent_state(&p.cavity, p.params.dims.cavity_cutoff)?;
    let cfg = integrator_for(p, cfg);
    let mut finals: Vec<DensityState> = Vec::new();
    let mut traces = None;
    for x in 0..2 {
        let rho = tensor_state(&qubit_basis(p.params.dims.qubit_levels, x), &cav, 0.0)?.to_density();
        let tr = evolve_lindblad(&rho, &h, &[(CollapseRole::CavityAnnihilation, kappa)], grid, &cfg)?;
        if x == 1 {
            traces = Some((
                column(&tr.states, |s| s.cavity_photons()),
                column(&tr.states, |s| s.qubit_population(1)),
            ));
        }
        finals.push(qnd_core::hilbert::partial_trace(tr.last(), Subsystem::Cavity)?);
    }
    let (photons, excited) = traces.expect("two branches");
    Ok(LossRun {
        photons,
        excited,
        indistinguishability: uhlmann_indistinguishability(&finals[0], &finals[1])?,
    })
}

/// Photon number at `τ` along the excited branch with a sustain amplitude.
fn sustained_photons(p: &Protocol, kappa: f64, sustain: SustainDrive, cfg: &IntegratorConfig) -> Result<f64> {
    let mut q = p.clone();
    q.schedule.sustain = Some(sustain);
    let h = build_hamiltonian(&q.params, &q.schedule, Model::Rabi)?;
    let cav = squeezed_coherent_state(&q.cavity, q.params.dims.cavity_cutoff)?;
    let rho = tensor_state(&qubit_basis(q.params.dims.qubit_levels, 1), &cav, 0.0)?.to_density();
    let tr = evolve_lindblad(
        &rho,
        &h,
        &[(CollapseRole::CavityAnnihilation, kappa)],
        &[q.tau],
        &integrator_for(&q, cfg),
    )?;
    Ok(tr.last().cavity_photons())
}

fn loss_sustain(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let mut p = protocol(cfg);
    let kappa = p.params.total_kappa();
    if !(kappa > 0.0) {
        return Err(RunError::Config(
            "system.kappa_ext_mhz: loss-sustain needs a nonzero cavity loss".into(),
        ));
    }
    let given = p.schedule.sustain.take();
    let grid = sample_grid(0.0, p.tau, cfg.samples);

    let ideal: Vec<Vec<JointState>> = (0..2)
        .map(|x| branch(&p, x, Model::Rabi, &grid, &cfg.integrator))
        .collect::<Result<_>>()?;
    let n_ideal = column(&ideal[1], |s| s.cavity_photons());
    let e_ideal = column(&ideal[1], |s| s.qubit_population(1));
    let d_ideal = cavity_indistinguishability(ideal[0].last().unwrap(), ideal[1].last().unwrap())?;
    let target = *n_ideal.last().unwrap();

    let lossy = lossy_branches(&p, kappa, &grid, &cfg.integrator)?;

    let phase = p.cavity.alpha.arg() + std::f64::consts::FRAC_PI_2;
    let sustain = |amplitude: f64| SustainDrive {
        amplitude,
        phase,
        start: 0.0,
        end: p.tau,
    };
    let (drive, calibrated) = match (given, cfg.sustain_amplitude) {
        (Some(s), _) => (s, false),
        (None, Some(a)) => (sustain(a), false),
        (None, None) => {
            // golden-section search on the final photon number
            let miss = |a: f64| -> Result<f64> {
                Ok((sustained_photons(&p, kappa, sustain(a), &cfg.integrator)? - target).abs())
            };
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (0.0, kappa * p.cavity.alpha.norm().max(1.0));
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let (mut fc, mut fd) = (miss(c)?, miss(d)?);
            for _ in 0..16 {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = miss(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = miss(d)?;
                }
            }
            (sustain(0.5 * (lo + hi)), true)
        }
    };
    let mut ps = p.clone();
    ps.schedule.sustain = Some(drive);
    let held = lossy_branches(&ps, kappa, &grid, &cfg.integrator)?;

    out.csv(
        "loss.csv",
        &[
            "t_ns",
            "n_lossless",
            "n_lossy",
            "n_sustain",
            "excited_lossless",
            "excited_lossy",
            "excited_sustain",
        ],
        &table(
            &grid,
            &[
                n_ideal.clone(),
                lossy.photons.clone(),
                held.photons.clone(),
                e_ideal,
                lossy.excited.clone(),
                held.excited.clone(),
            ],
        ),
    )?;
    let last = |v: &[f64]| *v.last().unwrap();
    Ok(json!({
        "scenario": "loss-sustain",
        "kappa_mhz": to_mhz(kappa),
        "sustain": {
            "amplitude_mhz": to_mhz(drive.amplitude),
            "phase_rad": drive.phase,
            "calibrated": calibrated,
        },
        "final_photons": {
            "lossless": target,
            "lossy": last(&lossy.photons),
            "sustain": last(&held.photons),
        },
        "sustain_photon_ratio": last(&held.photons) / target,
        "distinguishability": {
            "lossless": 1.0 - d_ideal,
            "lossy": 1.0 - lossy.indistinguishability,
            "sustain": 1.0 - held.indistinguishability,
        },
    }))
}

fn robustness(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let smooth = protocol(cfg);
    erfc_params(&smooth)?;
    let square = square_baseline(&smooth, cfg.robustness.square_v1);
    let rep = robustness_mc(
        &smooth,
        &square,
        &cfg.robustness.pct,
        cfg.robustness.samples,
        cfg.seed,
        &cfg.integrator,
    )?;
    let cells: Vec<Vec<Cell>> = rep
        .smooth
        .iter()
        .zip(&rep.square)
        .map(|(s, q)| {
            vec![
                s.pct.into(),
                s.mean.into(),
                s.std.into(),
                s.standard_error.into(),
                s.flagged.into(),
                q.mean.into(),
                q.std.into(),
                q.standard_error.into(),
                q.flagged.into(),
            ]
        })
        .collect();
    out.csv(
        "robustness.csv",
        &[
            "pct",
            "smooth_mean",
            "smooth_std",
            "smooth_se",
            "smooth_flagged",
            "square_mean",
            "square_std",
            "square_se",
            "square_flagged",
        ],
        &cells,
    )?;
    Ok(json!({"scenario": "robustness", "report": rep}))
}

fn optimize(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<Value> {
    let base = protocol(cfg);
    let warm = presets::params_of(&base).into_iter().collect();
    let r = optimize_protocol(&search_space(cfg, cfg.tau), cfg.optimize.d_bound, &options(cfg, warm))?;
    let b = r.best;
    out.csv(
        "optimize.csv",
        &[
            "omega_q_ghz",
            "omega_c_ghz",
            "v1_per_ns",
            "t1_ns",
            "t2_ns",
            "theta_rad",
            "distinguishability",
            "disturbance",
            "feasible",
            "delta_over_g",
            "evaluations",
        ],
        &[vec![
            to_ghz(b.omega_q).into(),
            to_ghz(b.omega_c).into(),
            b.v1.into(),
            b.t1.into(),
            b.t2.into(),
            b.theta.into(),
            r.distinguishability.into(),
            r.disturbance.into(),
            r.feasible.into(),
            r.delta_over_g.into(),
            r.evaluations.into(),
        ]],
    )?;
    Ok(json!({
        "scenario": "optimize",
        "best": {
            "omega_q_ghz": to_ghz(b.omega_q),
            "omega_c_ghz": to_ghz(b.omega_c),
            "v1_per_ns": b.v1,
            "t1_ns": b.t1,
            "t2_ns": b.t2,
            "theta_rad": b.theta,
        },
        "distinguishability": r.distinguishability,
        "disturbance": r.disturbance,
        "feasible": r.feasible,
        "surrogate_distinguishability": r.surrogate_distinguishability,
        "phases": r.phases,
        "evaluations": r.evaluations,
        "seed": r.seed,
        "delta_over_g": r.delta_over_g,
        "verification": report_summary(&r.verification),
    }))
}

/// Runs `engine` on the configured protocol and reports the readout.
pub fn evaluate(cfg: &ScenarioConfig, engine: Engine) -> Result<ReadoutReport> {
    Ok(measurement_report(&protocol(cfg), engine, &cfg.integrator)?)
}
