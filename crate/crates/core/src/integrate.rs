// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Time integration of Schrödinger and Lindblad dynamics.
//!
//! The stepper is an embedded Dormand–Prince 5(4) pair with standard
//! step-size control; classic fixed-step RK4 is kept as a cross-check.
//! Steps are clipped so that every requested sample time is hit exactly.

use serde::{Deserialize, Serialize};

use crate::hilbert::{
    DensityState, HilbertDims, JointState, Space, C64, FOCK_LEAKAGE_TOL, I, ZERO,
};
use crate::models::{Hamiltonian, SystemParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AdaptiveRk,
    FixedRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// ns
    pub max_step: f64,
    /// ns
    pub norm_check_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: 1e-3,
            norm_check_interval: 0.5,
        }
    }
}

impl IntegratorConfig {
    /// Default tolerances with `max_step` set to resolve `ω_c + ω_q`.
    pub fn for_params(params: &SystemParams) -> Self {
        Self {
            max_step: max_step_limit(params),
            ..Self::default()
        }
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("integrator tolerances must be > 0".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be > 0".into()));
        }
        let limit = max_step_limit(params);
        if self.max_step > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "max_step {:.4e} ns does not resolve ω_c+ω_q (limit {:.4e} ns)",
                self.max_step, limit
            )));
        }
        Ok(())
    }
}

/// `1 / (20 (ω_c + ω_q)/2π)` in ns.
pub fn max_step_limit(params: &SystemParams) -> f64 {
    let f = (params.omega_c + params.omega_q) / std::f64::consts::TAU;
    if f > 0.0 {
        1.0 / (20.0 * f)
    } else {
        0.05
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// First-order system `dy/dt = f(t, y)` over complex vectors.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F: Fn(f64, &[C64], &mut [C64])> OdeSystem for F {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self(t, y, dy)
    }
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrates `sys` from `t0` through every time in `samples` (ascending,
/// all `>= t0`). `observe` sees the state at each sample; `check` runs after
/// each accepted step and may abort the integration.
pub fn integrate<S, O, K>(
    sys: &S,
    y0: &[C64],
    t0: f64,
    samples: &[f64],
    cfg: &IntegratorConfig,
    mut observe: O,
    mut check: K,
) -> Result<IntegrationStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(f64, &[C64]) -> Result<()>,
    K: FnMut(f64, &[C64]) -> Result<()>,
{
    if samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
    }
    if samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::InvalidParameter("sample times precede the start time".into()));
    }
    match cfg.method {
        Method::AdaptiveRk => dopri(sys, y0, t0, samples, cfg, &mut observe, &mut check),
        Method::FixedRk4 => rk4(sys, y0, t0, samples, cfg, &mut observe, &mut check),
    }
}

fn dopri<S, O, K>(
    sys: &S,
    y0: &[C64],
    t0: f64,
    samples: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut O,
    check: &mut K,
) -> Result<IntegrationStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(f64, &[C64]) -> Result<()>,
    K: FnMut(f64, &[C64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![ZERO; n]).collect();
    let mut tmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    let mut t = t0;
    let mut h = cfg.max_step.min(1e-3);
    sys.rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;

    for &target in samples {
        while target - t > 1e-13 * target.abs().max(1.0) {
            let mut step = h.min(cfg.max_step);
            let last = step >= target - t;
            if last {
                step = target - t;
            }
            {
                let (k1, rest) = k.split_at_mut(1);
                let k1 = &k1[0];
                lin(&mut tmp, &y, step, &[(A21, k1)]);
                sys.rhs(t + C2 * step, &tmp, &mut rest[0]);
                lin(&mut tmp, &y, step, &[(A31, k1), (A32, &rest[0])]);
                sys.rhs(t + C3 * step, &tmp, &mut rest[1]);
                lin(&mut tmp, &y, step, &[(A41, k1), (A42, &rest[0]), (A43, &rest[1])]);
                sys.rhs(t + C4 * step, &tmp, &mut rest[2]);
                lin(
                    &mut tmp,
                    &y,
                    step,
                    &[(A51, k1), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
                );
                sys.rhs(t + C5 * step, &tmp, &mut rest[3]);
                lin(
                    &mut tmp,
                    &y,
                    step,
                    &[
                        (A61, k1),
                        (A62, &rest[0]),
                        (A63, &rest[1]),
                        (A64, &rest[2]),
                        (A65, &rest[3]),
                    ],
                );
                sys.rhs(t + step, &tmp, &mut rest[4]);
                lin(
                    &mut ynew,
                    &y,
                    step,
                    &[(B1, k1), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
                );
                sys.rhs(t + step, &ynew, &mut rest[5]);
            }
            stats.rhs_evals += 6;
            let mut err_sq = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1
                    + k[2][i] * E3
                    + k[3][i] * E4
                    + k[4][i] * E5
                    + k[5][i] * E6
                    + k[6][i] * E7)
                    * step;
                // hypot is needlessly slow for small systems
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm_sqr().max(ynew[i].norm_sqr()).sqrt();
                err_sq += e.norm_sqr() / (sc * sc);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration("non-finite error estimate".into()));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                stats.accepted += 1;
                check(t, &y)?;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h = step * fac;
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 {
                    return Err(Error::Integration(format!("step size underflow at t={t}")));
                }
            }
        }
        observe(target, &y)?;
    }
    Ok(stats)
}

fn rk4<S, O, K>(
    sys: &S,
    y0: &[C64],
    t0: f64,
    samples: &[f64],
    cfg: &IntegratorConfig,
    observe: &mut O,
    check: &mut K,
) -> Result<IntegrationStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(f64, &[C64]) -> Result<()>,
    K: FnMut(f64, &[C64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = IntegrationStats::default();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    let mut t = t0;
    for &target in samples {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / cfg.max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for s in 0..steps {
                let ts = t + s as f64 * h;
                sys.rhs(ts, &y, &mut k1);
                lin(&mut tmp, &y, h, &[(0.5, &k1)]);
                sys.rhs(ts + 0.5 * h, &tmp, &mut k2);
                lin(&mut tmp, &y, h, &[(0.5, &k2)]);
                sys.rhs(ts + 0.5 * h, &tmp, &mut k3);
                lin(&mut tmp, &y, h, &[(1.0, &k3)]);
                sys.rhs(ts + h, &tmp, &mut k4);
                for i in 0..n {
                    y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
                stats.rhs_evals += 4;
                stats.accepted += 1;
                check(ts + h, &y)?;
            }
            t = target;
        }
        observe(target, &y)?;
    }
    Ok(stats)
}

/// `n` evenly spaced sample times covering `[t0, t1]` inclusive.
pub fn sample_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t1];
    }
    let mut v: Vec<f64> = (0..n)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
        .collect();
    v[n - 1] = t1;
    v
}

/// Expectation values the trajectory tables are built from.
pub trait Observed {
    fn time(&self) -> f64;
    fn qubit_levels(&self) -> usize;
    fn qubit_population(&self, level: usize) -> f64;
    fn cavity_mean(&self) -> C64;
    fn cavity_photons(&self) -> f64;
    fn cavity_a2(&self) -> C64;
}

fn joint_dims(space: Space) -> HilbertDims {
    match space {
        Space::Joint(d) => d,
        _ => unreachable!("trajectory states live on the joint space"),
    }
}

impl Observed for JointState {
    fn time(&self) -> f64 {
        self.time
    }

    fn qubit_levels(&self) -> usize {
        self.dims.qubit_levels
    }

    fn qubit_population(&self, level: usize) -> f64 {
        JointState::qubit_population(self, level)
    }

    fn cavity_mean(&self) -> C64 {
        let n = self.dims.cavity_cutoff;
        let mut acc = ZERO;
        for q in 0..self.dims.qubit_levels {
            let b = self.branch(q);
            for k in 0..n - 1 {
                acc += b[k].conj() * b[k + 1] * ((k + 1) as f64).sqrt();
            }
        }
        acc
    }

    fn cavity_photons(&self) -> f64 {
        let n = self.dims.cavity_cutoff;
        (0..self.dims.qubit_levels)
            .map(|q| {
                self.branch(q)
                    .iter()
                    .enumerate()
                    .take(n)
                    .map(|(k, c)| k as f64 * c.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    fn cavity_a2(&self) -> C64 {
        let n = self.dims.cavity_cutoff;
        let mut acc = ZERO;
        for q in 0..self.dims.qubit_levels {
            let b = self.branch(q);
            for k in 0..n.saturating_sub(2) {
                acc += b[k].conj() * b[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
        acc
    }
}

impl Observed for DensityState {
    fn time(&self) -> f64 {
        self.time
    }

    fn qubit_levels(&self) -> usize {
        joint_dims(self.space).qubit_levels
    }

    fn qubit_population(&self, level: usize) -> f64 {
        DensityState::qubit_population(self, level)
    }

    fn cavity_mean(&self) -> C64 {
        let d = joint_dims(self.space);
        let mut acc = ZERO;
        for q in 0..d.qubit_levels {
            for k in 0..d.cavity_cutoff - 1 {
                // Tr(a ρ) = Σ ⟨k|a|k+1⟩ ρ[k+1, k]
                acc += self.matrix[(d.index(q, k + 1), d.index(q, k))] * ((k + 1) as f64).sqrt();
            }
        }
        acc
    }

    fn cavity_photons(&self) -> f64 {
        let d = joint_dims(self.space);
        (0..d.cavity_cutoff).map(|k| k as f64 * self.fock_population(k)).sum()
    }

    fn cavity_a2(&self) -> C64 {
        let d = joint_dims(self.space);
        let mut acc = ZERO;
        for q in 0..d.qubit_levels {
            for k in 0..d.cavity_cutoff.saturating_sub(2) {
                acc += self.matrix[(d.index(q, k + 2), d.index(q, k))]
                    * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
        acc
    }
}

/// Sampled evolution. Observables are always derived from `states`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub stats: IntegrationStats,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Names accepted by [`observables_series`].
pub const OBSERVABLES: &[&str] = &[
    "sigma_z", "excited", "a_re", "a_im", "a_abs", "n", "a2_re", "a2_im", "p0", "p1", "p2", "p3",
    "p4", "p5", "p6", "p7",
];

fn observable<S: Observed>(s: &S, name: &str) -> Result<f64> {
    Ok(match name {
        "sigma_z" => s.qubit_population(1) - s.qubit_population(0),
        "excited" => s.qubit_population(1),
        "a_re" => s.cavity_mean().re,
        "a_im" => s.cavity_mean().im,
        "a_abs" => s.cavity_mean().norm(),
        "n" => s.cavity_photons(),
        "a2_re" => s.cavity_a2().re,
        "a2_im" => s.cavity_a2().im,
        p if p.starts_with('p') => {
            let level: usize = p[1..]
                .parse()
                .map_err(|_| Error::UnknownObservable(name.to_string()))?;
            if level >= s.qubit_levels() {
                return Err(Error::UnknownObservable(name.to_string()));
            }
            s.qubit_population(level)
        }
        _ => return Err(Error::UnknownObservable(name.to_string())),
    })
}

/// Named time series computed from the stored states.
pub fn observables_series<S: Observed>(
    traj: &Trajectory<S>,
    which: &[&str],
) -> Result<Vec<(String, Vec<f64>)>> {
    if traj.states.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    which
        .iter()
        .map(|&name| {
            let series = traj
                .states
                .iter()
                .map(|s| observable(s, name))
                .collect::<Result<Vec<_>>>()?;
            Ok((name.to_string(), series))
        })
        .collect()
}

/// CSV with a `t_ns` column followed by the requested observables.
pub fn trajectory_csv<S: Observed>(traj: &Trajectory<S>, which: &[&str]) -> Result<String> {
    let series = observables_series(traj, which)?;
    let mut out = String::from("t_ns");
    for (name, _) in &series {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        out.push_str(&format!("{t:.6}"));
        for (_, s) in &series {
            out.push_str(&format!(",{:.10e}", s[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// JSON object `{ "t_ns": [...], "<name>": [...] }`.
pub fn trajectory_json<S: Observed>(traj: &Trajectory<S>, which: &[&str]) -> Result<serde_json::Value> {
    let series = observables_series(traj, which)?;
    let mut map = serde_json::Map::new();
    map.insert("t_ns".into(), serde_json::json!(traj.times));
    for (name, s) in series {
        map.insert(name, serde_json::json!(s));
    }
    Ok(serde_json::Value::Object(map))
}

fn top_fock_population(psi: &[C64], dims: HilbertDims) -> f64 {
    let n = dims.cavity_cutoff;
    (0..dims.qubit_levels)
        .map(|q| psi[q * n + n - 1].norm_sqr() + psi[q * n + n - 2].norm_sqr())
        .sum()
}

/// Pure-state evolution under `hamiltonian`, sampled at `samples`.
pub fn evolve_schrodinger(
    initial: &JointState,
    hamiltonian: &Hamiltonian,
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<JointState>> {
    if hamiltonian.dims != initial.dims {
        return Err(Error::DimensionMismatch("state and Hamiltonian dims differ".into()));
    }
    let dims = initial.dims;
    let norm0 = initial.norm();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "initial state is not normalized (norm {norm0})"
        )));
    }
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| hamiltonian.schrodinger_rhs(t, y, dy);
    let mut times = Vec::with_capacity(samples.len());
    let mut states = Vec::with_capacity(samples.len());
    let mut last_check = initial.time;
    let guard = |t: f64, y: &[C64]| -> Result<()> {
        let nrm = crate::hilbert::norm(y);
        if (nrm - 1.0).abs() > 1e-6 {
            return Err(Error::Integration(format!("norm drifted to {nrm:.9} at t={t:.4} ns")));
        }
        let top = top_fock_population(y, dims);
        if top >= FOCK_LEAKAGE_TOL {
            return Err(Error::Truncation(format!(
                "top two Fock levels hold {top:.3e} at t={t:.4} ns (cutoff {})",
                dims.cavity_cutoff
            )));
        }
        Ok(())
    };
    let stats = integrate(
        &rhs,
        &initial.amplitudes,
        initial.time,
        samples,
        cfg,
        |t, y| {
            guard(t, y)?;
            times.push(t);
            states.push(JointState {
                amplitudes: y.to_vec(),
                dims,
                time: t,
            });
            Ok(())
        },
        |t, y| {
            if t - last_check >= cfg.norm_check_interval {
                last_check = t;
                guard(t, y)?;
            }
            Ok(())
        },
    )?;
    Ok(Trajectory {
        times,
        states,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseRole {
    CavityAnnihilation,
}

/// Matrix-free Lindblad generator on a column-major density matrix.
struct Liouvillian<'a> {
    h: &'a Hamiltonian,
    dims: HilbertDims,
    kappa: f64,
}

impl Liouvillian<'_> {
    fn apply(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dims.joint();
        let nc = self.dims.cavity_cutoff;
        // K = ρ H; H ρ = K† because both are Hermitian
        let mut k = vec![ZERO; n * n];
        self.h.right_mul_add(t, rho, &mut k);
        for j in 0..n {
            for i in 0..n {
                out[j * n + i] = -I * (k[i * n + j].conj() - k[j * n + i]);
            }
        }
        if self.kappa > 0.0 {
            let photons = |idx: usize| (idx % nc) as f64;
            for j in 0..n {
                let nj = photons(j);
                for i in 0..n {
                    let ni = photons(i);
                    let mut d = -0.5 * (ni + nj) * rho[j * n + i];
                    if (i % nc) + 1 < nc && (j % nc) + 1 < nc {
                        d += rho[(j + 1) * n + i + 1] * ((ni + 1.0) * (nj + 1.0)).sqrt();
                    }
                    out[j * n + i] += d * self.kappa;
                }
            }
        }
    }
}

fn density_from_flat(flat: &[C64], dims: HilbertDims, t: f64) -> DensityState {
    let n = dims.joint();
    DensityState {
        matrix: crate::hilbert::CMatrix::from_column_slice(n, n, flat),
        space: Space::Joint(dims),
        time: t,
    }
}

/// Density-matrix evolution with cavity loss `κ 𝒟[a]`.
pub fn evolve_lindblad(
    initial: &DensityState,
    hamiltonian: &Hamiltonian,
    collapse: &[(CollapseRole, f64)],
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<DensityState>> {
    let dims = match initial.space {
        Space::Joint(d) if d == hamiltonian.dims => d,
        _ => return Err(Error::DimensionMismatch("state and Hamiltonian dims differ".into())),
    };
    if collapse.iter().any(|&(_, r)| !(r >= 0.0)) {
        return Err(Error::InvalidParameter("collapse rates must be >= 0".into()));
    }
    let kappa = collapse
        .iter()
        .filter(|(role, _)| *role == CollapseRole::CavityAnnihilation)
        .map(|&(_, r)| r)
        .sum();
    let tr0 = initial.trace();
    if (tr0.re - 1.0).abs() > 1e-8 || tr0.im.abs() > 1e-8 {
        return Err(Error::InvalidParameter("initial density matrix has trace != 1".into()));
    }
    let l = Liouvillian {
        h: hamiltonian,
        dims,
        kappa,
    };
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| l.apply(t, y, dy);
    let n = dims.joint();
    let nc = dims.cavity_cutoff;
    let guard = |t: f64, y: &[C64]| -> Result<()> {
        let tr: C64 = (0..n).map(|i| y[i * n + i]).sum();
        if (tr.re - 1.0).abs() > 1e-6 {
            return Err(Error::Integration(format!("trace drifted to {:.9} at t={t:.4} ns", tr.re)));
        }
        let top: f64 = (0..dims.qubit_levels)
            .map(|q| {
                let a = q * nc + nc - 1;
                let b = q * nc + nc - 2;
                y[a * n + a].re + y[b * n + b].re
            })
            .sum();
        if top >= FOCK_LEAKAGE_TOL {
            return Err(Error::Truncation(format!(
                "top two Fock levels hold {top:.3e} at t={t:.4} ns"
            )));
        }
        Ok(())
    };
    let flat: Vec<C64> = initial.matrix.as_slice().to_vec();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut last_check = initial.time;
    let stats = integrate(
        &rhs,
        &flat,
        initial.time,
        samples,
        cfg,
        |t, y| {
            guard(t, y)?;
            times.push(t);
            states.push(density_from_flat(y, dims, t));
            Ok(())
        },
        |t, y| {
            if t - last_check >= cfg.norm_check_interval {
                last_check = t;
                guard(t, y)?;
            }
            Ok(())
        },
    )?;
    Ok(Trajectory {
        times,
        states,
        stats,
    })
}
