// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Protocol search and Monte-Carlo robustness.
//!
//! A candidate fixes `ω_q`, `ω_c`, the erfc envelope `(v1, t1, t2)` and the
//! squeezing angle `θ`; the interaction time, `g_max`, `|α|`, `r`, losses and
//! qubit model come from the [`SearchSpace`]. The global phase runs
//! differential evolution, the local phase runs Nelder–Mead restarts with the
//! exact engine, and the winner is always re-scored by the exact engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{
    qubit_basis, squeezed_coherent_state, tensor_state, CavityStateSpec, HilbertDims, C64,
};
use crate::integrate::{evolve_schrodinger, IntegratorConfig};
use crate::metrics::{measurement_report, Engine, Protocol, ReadoutReport};
use crate::models::{build_hamiltonian, Envelope, Model, PulseSchedule, QubitModel, SystemParams};
use crate::units::{ghz, mhz};
use crate::{Error, Result};

/// Quadratic penalty weight on `d − d_bound`.
pub const PENALTY_WEIGHT: f64 = 1e4;
pub const DEFAULT_D_BOUND: f64 = 0.005;
/// Objective assigned to candidates whose simulation fails.
pub const WORST_OBJECTIVE: f64 = -1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Free protocol variables. Frequencies in rad/ns, times in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub omega_q: f64,
    pub omega_c: f64,
    pub v1: f64,
    pub t1: f64,
    pub t2: f64,
    /// Squeezing angle, with `α` real and positive.
    pub theta: f64,
}

impl ProtocolParams {
    fn to_array(self) -> [f64; DIMS] {
        [self.omega_q, self.omega_c, self.v1, self.t1, self.t2, self.theta]
    }

    fn from_array(x: [f64; DIMS]) -> Self {
        Self {
            omega_q: x[0],
            omega_c: x[1],
            v1: x[2],
            t1: x[3],
            t2: x[4],
            theta: x[5],
        }
    }

    /// Stretches the envelope from interaction time `from` to `to`.
    pub fn rescaled(&self, from: f64, to: f64) -> Self {
        let s = to / from;
        Self {
            v1: self.v1 / s,
            t1: self.t1 * s,
            t2: self.t2 * s,
            ..*self
        }
    }
}

const DIMS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub omega_q: Interval,
    pub omega_c: Interval,
    pub v1: Interval,
    pub t1: Interval,
    pub t2: Interval,
    pub theta: Interval,
    pub g_max: f64,
    pub tau: f64,
    /// `|α|`
    pub alpha: f64,
    pub r: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub qubit_model: QubitModel,
    pub qubit_levels: usize,
    pub anharmonicity: f64,
    /// Defaults to the largest cutoff any squeezing angle needs.
    pub cavity_cutoff: Option<usize>,
    /// Allows frequencies and `g_max` outside the standard box.
    pub override_bounds: bool,
}

/// Standard `ω_q/2π` box in GHz.
pub const OMEGA_Q_GHZ: (f64, f64) = (3.0, 7.0);
/// Standard `ω_c/2π` box in GHz.
pub const OMEGA_C_GHZ: (f64, f64) = (8.0, 11.0);
/// Largest standard `g_max/2π` in MHz.
pub const G_MAX_MHZ: f64 = 100.0;
/// Qubit decay rate `γ/2π` in kHz assumed by the standard box; negligible on
/// nanosecond protocols and not simulated.
pub const GAMMA_KHZ: f64 = 10.0;

impl SearchSpace {
    /// The standard box for a given interaction time and cavity state.
    pub fn standard(qubit_model: QubitModel, tau: f64, g_max: f64, alpha: f64, r: f64) -> Self {
        let (qubit_levels, anharmonicity) = match qubit_model {
            QubitModel::Ideal => (2, 0.0),
            QubitModel::Transmon => (5, mhz(200.0)),
        };
        Self {
            omega_q: Interval::new(ghz(OMEGA_Q_GHZ.0), ghz(OMEGA_Q_GHZ.1)),
            omega_c: Interval::new(ghz(OMEGA_C_GHZ.0), ghz(OMEGA_C_GHZ.1)),
            v1: Interval::new(0.2, 20.0),
            t1: Interval::new(0.0, tau),
            t2: Interval::new(0.0, tau),
            theta: Interval::new(0.0, std::f64::consts::TAU),
            g_max,
            tau,
            alpha,
            r,
            kappa_int: 0.0,
            kappa_ext: 0.0,
            qubit_model,
            qubit_levels,
            anharmonicity,
            cavity_cutoff: None,
            override_bounds: false,
        }
    }

    fn intervals(&self) -> [Interval; DIMS] {
        [self.omega_q, self.omega_c, self.v1, self.t1, self.t2, self.theta]
    }

    /// Field paths of every violated bound.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let names = ["omega_q", "omega_c", "v1", "t1", "t2", "theta"];
        for (name, iv) in names.iter().zip(self.intervals()) {
            if !(iv.lo < iv.hi) || !iv.lo.is_finite() || !iv.hi.is_finite() {
                v.push(format!("{name}: empty or non-finite interval"));
            }
        }
        if !(self.tau > 0.0) {
            v.push("tau: must be > 0".into());
        }
        if !(self.g_max >= 0.0) {
            v.push("g_max: must be >= 0".into());
        }
        if !(self.alpha >= 0.0) || !(self.r >= 0.0) {
            v.push("cavity: |alpha| and r must be >= 0".into());
        }
        if !self.override_bounds {
            let tol = 1e-9;
            if self.omega_q.lo < ghz(OMEGA_Q_GHZ.0) - tol || self.omega_q.hi > ghz(OMEGA_Q_GHZ.1) + tol {
                v.push(format!("omega_q: outside {}–{} GHz", OMEGA_Q_GHZ.0, OMEGA_Q_GHZ.1));
            }
            if self.omega_c.lo < ghz(OMEGA_C_GHZ.0) - tol || self.omega_c.hi > ghz(OMEGA_C_GHZ.1) + tol {
                v.push(format!("omega_c: outside {}–{} GHz", OMEGA_C_GHZ.0, OMEGA_C_GHZ.1));
            }
            if self.g_max > mhz(G_MAX_MHZ) + tol {
                v.push(format!("g_max: above {G_MAX_MHZ} MHz"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    pub fn contains(&self, p: &ProtocolParams) -> bool {
        self.intervals()
            .iter()
            .zip(p.to_array())
            .all(|(iv, x)| iv.contains(x))
    }

    pub fn cavity(&self, theta: f64) -> CavityStateSpec {
        CavityStateSpec {
            alpha: C64::new(self.alpha, 0.0),
            r: self.r,
            theta,
        }
    }

    /// Phase squeezing has the broadest photon distribution, so it sets the cutoff.
    pub fn cutoff(&self) -> usize {
        self.cavity_cutoff
            .unwrap_or_else(|| self.cavity(std::f64::consts::PI).default_cutoff())
    }

    pub fn protocol(&self, p: &ProtocolParams) -> Result<Protocol> {
        let params = SystemParams {
            omega_c: p.omega_c,
            omega_q: p.omega_q,
            anharmonicity: self.anharmonicity,
            g_max: self.g_max,
            kappa_int: self.kappa_int,
            kappa_ext: self.kappa_ext,
            qubit_model: self.qubit_model,
            dims: HilbertDims::new(self.qubit_levels, self.cutoff())?,
        };
        let schedule = PulseSchedule::erfc(p.v1, p.t1, p.t2);
        Ok(Protocol {
            params,
            schedule,
            cavity: self.cavity(p.theta),
            tau: self.tau,
        })
    }

    fn clip(&self, x: [f64; DIMS]) -> [f64; DIMS] {
        let iv = self.intervals();
        std::array::from_fn(|i| x[i].clamp(iv[i].lo, iv[i].hi))
    }

    fn to_unit(&self, x: [f64; DIMS]) -> [f64; DIMS] {
        let iv = self.intervals();
        std::array::from_fn(|i| (x[i] - iv[i].lo) / iv[i].width())
    }

    fn point_at(&self, u: [f64; DIMS]) -> [f64; DIMS] {
        let iv = self.intervals();
        std::array::from_fn(|i| iv[i].lo + u[i].clamp(0.0, 1.0) * iv[i].width())
    }
}

/// Score of one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    pub distinguishability: f64,
    pub disturbance: f64,
    pub feasible: bool,
    pub failure: Option<String>,
}

/// `D` for feasible candidates, `D − 1 − Λ (d − d_bound)²` otherwise, so
/// every infeasible score is below every feasible one.
pub fn penalized(distinguishability: f64, disturbance: f64, d_bound: f64) -> f64 {
    if disturbance <= d_bound {
        distinguishability
    } else {
        distinguishability - 1.0 - PENALTY_WEIGHT * (disturbance - d_bound).powi(2)
    }
}

/// Scores a protocol with the chosen engine.
pub fn objective_for(
    protocol: &Protocol,
    d_bound: f64,
    engine: Engine,
    cfg: &IntegratorConfig,
) -> Evaluation {
    let fail = |msg: String| Evaluation {
        objective: WORST_OBJECTIVE,
        distinguishability: f64::NAN,
        disturbance: f64::NAN,
        feasible: false,
        failure: Some(msg),
    };
    if let Err(e) = protocol.schedule.validate() {
        return fail(e.to_string());
    }
    match measurement_report(protocol, engine, cfg) {
        Ok(rep) => {
            // the surrogate may leave [0, 1]; clamp for ranking only
            let dd = rep.distinguishability.clamp(0.0, 1.0);
            let d = rep.disturbance.clamp(0.0, 1.0);
            if !dd.is_finite() || !d.is_finite() {
                return fail("non-finite score".into());
            }
            Evaluation {
                objective: penalized(dd, d, d_bound),
                distinguishability: dd,
                disturbance: d,
                feasible: d <= d_bound,
                failure: None,
            }
        }
        Err(e) => fail(e.to_string()),
    }
}

/// [`objective_for`] on a candidate of `space`.
pub fn objective(
    candidate: &ProtocolParams,
    space: &SearchSpace,
    d_bound: f64,
    engine: Engine,
    cfg: &IntegratorConfig,
) -> Evaluation {
    match space.protocol(candidate) {
        Ok(p) => objective_for(&p, d_bound, engine, &cfg_for(&p, cfg)),
        Err(e) => Evaluation {
            objective: WORST_OBJECTIVE,
            distinguishability: f64::NAN,
            disturbance: f64::NAN,
            feasible: false,
            failure: Some(e.to_string()),
        },
    }
}

/// Caps `max_step` at the resolution limit of the candidate's frequencies.
fn cfg_for(p: &Protocol, cfg: &IntegratorConfig) -> IntegratorConfig {
    let limit = crate::integrate::max_step_limit(&p.params);
    IntegratorConfig {
        max_step: cfg.max_step.min(limit),
        ..cfg.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub seed: u64,
    /// `0` skips the global phase.
    pub de_generations: usize,
    /// Raised to `15 × dimensions` when smaller.
    pub de_population: usize,
    pub global_engine: Engine,
    pub local_starts: usize,
    pub local_max_evals: usize,
    /// Initial Nelder–Mead step, as a fraction of each interval.
    pub local_step: f64,
    pub warm_starts: Vec<ProtocolParams>,
    pub integrator: IntegratorConfig,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            de_generations: 20,
            de_population: 15 * DIMS,
            global_engine: Engine::Moments,
            local_starts: 5,
            local_max_evals: 150,
            local_step: 0.05,
            warm_starts: Vec::new(),
            // each candidate is capped at its own frequency limit
            integrator: IntegratorConfig {
                max_step: 1.0,
                ..IntegratorConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub name: String,
    pub engine: Engine,
    pub evaluations: usize,
    pub best_objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: ProtocolParams,
    pub protocol: Protocol,
    /// From the exact verification run.
    pub distinguishability: f64,
    pub disturbance: f64,
    pub feasible: bool,
    /// Surrogate score of the winner, when a surrogate phase ran.
    pub surrogate_distinguishability: Option<f64>,
    pub phases: Vec<PhaseSummary>,
    pub evaluations: usize,
    pub seed: u64,
    pub delta_over_g: f64,
    pub verification: ReadoutReport,
}

struct Scored {
    x: [f64; DIMS],
    eval: Evaluation,
}

fn evaluate_all(
    xs: &[[f64; DIMS]],
    space: &SearchSpace,
    d_bound: f64,
    engine: Engine,
    cfg: &IntegratorConfig,
) -> Vec<Evaluation> {
    xs.par_iter()
        .map(|x| objective(&ProtocolParams::from_array(*x), space, d_bound, engine, cfg))
        .collect()
}

fn differential_evolution(
    space: &SearchSpace,
    d_bound: f64,
    opts: &OptimizeOptions,
    evals: &mut usize,
) -> Vec<Scored> {
    let np = opts.de_population.max(15 * DIMS);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pop: Vec<[f64; DIMS]> = (0..np)
        .map(|_| space.point_at(std::array::from_fn(|_| rng.random::<f64>())))
        .collect();
    for (slot, w) in pop.iter_mut().zip(&opts.warm_starts) {
        *slot = space.clip(w.to_array());
    }
    let cfg = &opts.integrator;
    let mut scores = evaluate_all(&pop, space, d_bound, opts.global_engine, cfg);
    *evals += np;
    const F: f64 = 0.7;
    const CR: f64 = 0.9;
    for _ in 0..opts.de_generations {
        let trials: Vec<[f64; DIMS]> = (0..np)
            .map(|i| {
                let pick = |rng: &mut ChaCha8Rng, avoid: &[usize]| loop {
                    let k = rng.random_range(0..np);
                    if !avoid.contains(&k) {
                        return k;
                    }
                };
                let a = pick(&mut rng, &[i]);
                let b = pick(&mut rng, &[i, a]);
                let c = pick(&mut rng, &[i, a, b]);
                let ua = space.to_unit(pop[a]);
                let ub = space.to_unit(pop[b]);
                let uc = space.to_unit(pop[c]);
                let ui = space.to_unit(pop[i]);
                let jr = rng.random_range(0..DIMS);
                let u: [f64; DIMS] = std::array::from_fn(|j| {
                    if j == jr || rng.random::<f64>() < CR {
                        ua[j] + F * (ub[j] - uc[j])
                    } else {
                        ui[j]
                    }
                });
                space.point_at(u)
            })
            .collect();
        let trial_scores = evaluate_all(&trials, space, d_bound, opts.global_engine, cfg);
        *evals += np;
        for i in 0..np {
            if trial_scores[i].objective >= scores[i].objective {
                pop[i] = trials[i];
                scores[i] = trial_scores[i].clone();
            }
        }
    }
    let mut out: Vec<Scored> = pop
        .into_iter()
        .zip(scores)
        .map(|(x, eval)| Scored { x, eval })
        .collect();
    out.sort_by(|a, b| b.eval.objective.total_cmp(&a.eval.objective));
    out
}

/// Bounded Nelder–Mead maximisation in unit coordinates.
fn nelder_mead<Fn_>(start: [f64; DIMS], step: f64, max_evals: usize, mut f: Fn_) -> ([f64; DIMS], f64, usize)
where
    Fn_: FnMut([f64; DIMS]) -> f64,
{
    let clampu = |u: [f64; DIMS]| -> [f64; DIMS] { std::array::from_fn(|i| u[i].clamp(0.0, 1.0)) };
    let mut simplex: Vec<([f64; DIMS], f64)> = Vec::with_capacity(DIMS + 1);
    let s0 = clampu(start);
    simplex.push((s0, f(s0)));
    for i in 0..DIMS {
        let mut u = s0;
        u[i] = if u[i] + step <= 1.0 { u[i] + step } else { u[i] - step };
        simplex.push((u, f(u)));
    }
    let mut n = DIMS + 1;
    while n < max_evals {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = simplex[0].1 - simplex[DIMS].1;
        let size = simplex
            .iter()
            .skip(1)
            .map(|(u, _)| (0..DIMS).map(|i| (u[i] - simplex[0].0[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread.abs() < 1e-10 && size < 1e-4) || size < 1e-7 {
            break;
        }
        let centroid: [f64; DIMS] =
            std::array::from_fn(|i| simplex[..DIMS].iter().map(|(u, _)| u[i]).sum::<f64>() / DIMS as f64);
        let worst = simplex[DIMS];
        let along = |c: f64| clampu(std::array::from_fn(|i| centroid[i] + c * (worst.0[i] - centroid[i])));
        let xr = along(-1.0);
        let fr = f(xr);
        n += 1;
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(xe);
            n += 1;
            simplex[DIMS] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[DIMS - 1].1 {
            simplex[DIMS] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst.1 {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            n += 1;
            if fc > worst.1.max(fr) {
                simplex[DIMS] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let u: [f64; DIMS] = std::array::from_fn(|i| best[i] + 0.5 * (v.0[i] - best[i]));
                    *v = (u, f(u));
                    n += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    (simplex[0].0, simplex[0].1, n)
}

/// Global surrogate search, exact local refinement, exact verification.
pub fn optimize_protocol(
    space: &SearchSpace,
    d_bound: f64,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    space.validate()?;
    if !(d_bound > 0.0) {
        return Err(Error::InvalidParameter("d_bound must be > 0".into()));
    }
    let mut evals = 0usize;
    let mut phases = Vec::new();
    let cfg = &opts.integrator;

    let mut starts: Vec<[f64; DIMS]> = opts.warm_starts.iter().map(|w| space.clip(w.to_array())).collect();
    let mut surrogate_of = Vec::new();
    if opts.de_generations > 0 {
        let before = evals;
        let ranked = differential_evolution(space, d_bound, opts, &mut evals);
        phases.push(PhaseSummary {
            name: "global".into(),
            engine: opts.global_engine,
            evaluations: evals - before,
            best_objective: ranked[0].eval.objective,
        });
        for s in &ranked {
            if starts.len() >= opts.local_starts.max(opts.warm_starts.len()) {
                break;
            }
            let dup = starts.iter().any(|x| {
                space.to_unit(*x).iter().zip(space.to_unit(s.x)).all(|(a, b)| (a - b).abs() < 1e-6)
            });
            if !dup {
                starts.push(s.x);
            }
        }
        surrogate_of = ranked;
    }
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "no starting points: give warm starts or enable the global phase".into(),
        ));
    }

    let before = evals;
    let local: Vec<([f64; DIMS], f64, usize)> = starts
        .par_iter()
        .map(|x0| {
            let f = |u: [f64; DIMS]| {
                objective(&ProtocolParams::from_array(space.point_at(u)), space, d_bound, Engine::Exact, cfg)
                    .objective
            };
            if opts.local_max_evals == 0 {
                let u = space.to_unit(*x0);
                (u, f(u), 1)
            } else {
                nelder_mead(space.to_unit(*x0), opts.local_step, opts.local_max_evals, f)
            }
        })
        .collect();
    evals += local.iter().map(|l| l.2).sum::<usize>();
    let (best_u, best_f, _) = local
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    phases.push(PhaseSummary {
        name: "local".into(),
        engine: Engine::Exact,
        evaluations: evals - before,
        best_objective: best_f,
    });

    let best = ProtocolParams::from_array(space.point_at(best_u));
    let protocol = space.protocol(&best)?;
    let verification = measurement_report(&protocol, Engine::Exact, &cfg_for(&protocol, cfg))?;
    evals += 1;
    phases.push(PhaseSummary {
        name: "verify".into(),
        engine: Engine::Exact,
        evaluations: 1,
        best_objective: penalized(verification.distinguishability, verification.disturbance, d_bound),
    });
    let surrogate_distinguishability = if surrogate_of.is_empty() {
        None
    } else {
        let e = objective(&best, space, d_bound, opts.global_engine, cfg);
        Some(e.distinguishability)
    };
    Ok(OptimizationResult {
        best,
        distinguishability: verification.distinguishability,
        disturbance: verification.disturbance,
        feasible: verification.disturbance <= d_bound,
        surrogate_distinguishability,
        phases,
        evaluations: evals,
        seed: opts.seed,
        delta_over_g: (best.omega_q - best.omega_c) / space.g_max,
        verification,
        protocol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeToFidelityRow {
    pub g_max: f64,
    /// `None` when the target is unreachable within the τ budget.
    pub tau_min: Option<f64>,
    pub distinguishability: Option<f64>,
    pub disturbance: Option<f64>,
}

/// Shortest interaction time reaching `target_d` under `d_bound`, per `g`.
///
/// Bisection over `[tau_lo, tau_hi]` down to `resolution`; each probe runs a
/// local search warm-started from `template` (defined at `template_tau`).
#[allow(clippy::too_many_arguments)]
pub fn time_to_fidelity(
    space: &SearchSpace,
    template: &ProtocolParams,
    template_tau: f64,
    target_d: f64,
    d_bound: f64,
    g_grid: &[f64],
    tau_range: (f64, f64),
    resolution: f64,
    opts: &OptimizeOptions,
) -> Result<Vec<TimeToFidelityRow>> {
    let (tau_lo, tau_hi) = tau_range;
    if !(tau_lo > 0.0 && tau_hi > tau_lo && resolution > 0.0) {
        return Err(Error::InvalidParameter("invalid τ bracket".into()));
    }
    let probe = |g: f64, tau: f64| -> Option<OptimizationResult> {
        if g <= 0.0 {
            return None;
        }
        let mut sp = space.clone();
        sp.g_max = g;
        sp.tau = tau;
        sp.t1 = Interval::new(0.0, tau);
        sp.t2 = Interval::new(0.0, tau);
        let mut o = opts.clone();
        o.de_generations = 0;
        o.warm_starts = vec![template.rescaled(template_tau, tau)];
        optimize_protocol(&sp, d_bound, &o).ok()
    };
    let ok = |r: &Option<OptimizationResult>| {
        r.as_ref().is_some_and(|r| r.feasible && r.distinguishability >= target_d)
    };
    let mut rows = Vec::new();
    for &g in g_grid {
        let top = probe(g, tau_hi);
        if !ok(&top) {
            rows.push(TimeToFidelityRow {
                g_max: g,
                tau_min: None,
                distinguishability: top.as_ref().map(|r| r.distinguishability),
                disturbance: top.as_ref().map(|r| r.disturbance),
            });
            continue;
        }
        let (mut lo, mut hi, mut best) = (tau_lo, tau_hi, top);
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            let r = probe(g, mid);
            if ok(&r) {
                hi = mid;
                best = r;
            } else {
                lo = mid;
            }
        }
        rows.push(TimeToFidelityRow {
            g_max: g,
            tau_min: Some(hi),
            distinguishability: best.as_ref().map(|r| r.distinguishability),
            disturbance: best.as_ref().map(|r| r.disturbance),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub pct: f64,
    pub mean: f64,
    pub std: f64,
    pub standard_error: f64,
    /// Standard error above 10% of the mean.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub smooth: Vec<RobustnessRow>,
    pub square: Vec<RobustnessRow>,
    pub samples: usize,
    pub seed: u64,
}

/// `|P(τ) − P(0)| / P(0)` for the qubit prepared in `|1⟩`.
pub fn population_error(protocol: &Protocol, cfg: &IntegratorConfig) -> Result<f64> {
    let p = &protocol.params;
    let h = build_hamiltonian(p, &protocol.schedule, Model::Rabi)?;
    let cav = squeezed_coherent_state(&protocol.cavity, p.dims.cavity_cutoff)?;
    let psi = tensor_state(&qubit_basis(p.dims.qubit_levels, 1), &cav, 0.0)?;
    let tr = evolve_schrodinger(&psi, &h, &[protocol.tau], &cfg_for(protocol, cfg))?;
    Ok((tr.last().qubit_population(1) - 1.0).abs())
}

/// The square-envelope baseline: same `t1`, `t2`, with a near-instant ramp.
pub fn square_baseline(protocol: &Protocol, sharp_v1: f64) -> Protocol {
    let mut p = protocol.clone();
    if let Envelope::Erfc { t1, t2, .. } = p.schedule.envelope {
        p.schedule.envelope = Envelope::Erfc {
            v1: sharp_v1,
            t1,
            t2,
        };
    }
    p
}

fn perturbed(protocol: &Protocol, pct: f64, rng: &mut ChaCha8Rng) -> Protocol {
    let mut p = protocol.clone();
    if let Envelope::Erfc { v1, t1, t2 } = p.schedule.envelope {
        let mut draw = |x: f64| {
            let sd = (pct / 100.0 * x).abs();
            if sd == 0.0 {
                x
            } else {
                Normal::new(x, sd).expect("finite σ").sample(rng)
            }
        };
        p.schedule.envelope = Envelope::Erfc {
            v1: draw(v1).abs(),
            t1: draw(t1),
            t2: draw(t2),
        };
    }
    p
}

fn mc_rows(
    protocol: &Protocol,
    pct_grid: &[f64],
    samples: usize,
    seed: u64,
    stream_base: u64,
    cfg: &IntegratorConfig,
) -> Result<Vec<RobustnessRow>> {
    pct_grid
        .iter()
        .enumerate()
        .map(|(row, &pct)| {
            let errs: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(stream_base + (row * samples + i) as u64);
                    let p = perturbed(protocol, pct, &mut rng);
                    population_error(&p, cfg)
                })
                .collect::<Result<_>>()?;
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = if errs.len() > 1 {
                errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std = var.sqrt();
            let se = std / n.sqrt();
            Ok(RobustnessRow {
                pct,
                mean,
                std,
                standard_error: se,
                flagged: se > 0.1 * mean,
            })
        })
        .collect()
}

/// Perturbs `v1, t1, t2` together with relative Gaussian noise `pct`% and
/// averages the population error, for `smooth` and for `square`.
pub fn robustness_mc(
    smooth: &Protocol,
    square: &Protocol,
    pct_grid: &[f64],
    samples: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<RobustnessReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be > 0".into()));
    }
    if samples < 100 {
        log::warn!("robustness rows with {samples} < 100 samples are not reportable");
    }
    Ok(RobustnessReport {
        smooth: mc_rows(smooth, pct_grid, samples, seed, 0, cfg)?,
        square: mc_rows(square, pct_grid, samples, seed, 1 << 40, cfg)?,
        samples,
        seed,
    })
}
