// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Readout figures of merit.
//!
//! The indistinguishability `𝓕 = Tr√(√ρ₁ ρ₀ √ρ₁)` of the two qubit-conditioned
//! cavity states, the distinguishability `D = 1 − 𝓕`, per-branch flip
//! probabilities and the disturbance `d = max(p₀, p₁)`.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hilbert::{
    hermitian_eigen, matrix_sqrt_psd, partial_trace_pure, qubit_basis, squeezed_coherent_state,
    tensor_state, CMatrix, CavityStateSpec, DensityState, JointState, Subsystem, C64, ZERO,
};
use crate::integrate::{
    evolve_schrodinger, sample_grid, IntegrationStats, IntegratorConfig, Observed,
};
use crate::models::{
    build_hamiltonian, integrated_coupling_squared, Model, PulseSchedule, QubitModel, SystemParams,
};
use crate::moments::{evolve_moments, MomentState};
use crate::{Error, Result};

/// Uhlmann indistinguishability of two density matrices.
pub fn uhlmann_indistinguishability(rho0: &DensityState, rho1: &DensityState) -> Result<f64> {
    if rho0.matrix.shape() != rho1.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            rho0.matrix.shape(),
            rho1.matrix.shape()
        )));
    }
    let s1 = matrix_sqrt_psd(&rho1.matrix)?;
    let m = &s1 * &rho0.matrix * &s1;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let (vals, _) = hermitian_eigen(&m);
    let f: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Branch matrix `A[n, q] = ψ[q, n]`, so that `Tr_qubit |ψ⟩⟨ψ| = A A†`.
fn branch_matrix(state: &JointState) -> CMatrix {
    let n = state.dims.cavity_cutoff;
    let l = state.dims.qubit_levels;
    DMatrix::from_fn(n, l, |k, q| state.amplitudes[q * n + k])
}

/// `𝓕` of the reduced cavity states of two joint pure states.
///
/// With `ρ₀ = AA†`, `ρ₁ = BB†` the fidelity is the trace norm of `A†B`, an
/// `L × L` problem instead of an `N × N` one.
pub fn cavity_indistinguishability(psi0: &JointState, psi1: &JointState) -> Result<f64> {
    if psi0.dims != psi1.dims {
        return Err(Error::DimensionMismatch("joint states on different spaces".into()));
    }
    let c = branch_matrix(psi0).adjoint() * branch_matrix(psi1);
    let sv = c.svd(false, false).singular_values;
    Ok(sv.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Gaussian-state indistinguishability from first and second cavity moments.
///
/// Quadratures `x = a + a†`, `p = −i(a − a†)`, vacuum covariance = identity.
/// `𝓕² = 2 / (√(Δ+Λ) − √Λ) · exp(−½ δᵀ(V₀+V₁)⁻¹δ)` with `Δ = det(V₀+V₁)`,
/// `Λ = (det V₀ − 1)(det V₁ − 1)`.
pub fn gaussian_indistinguishability(m0: (C64, C64, f64), m1: (C64, C64, f64)) -> f64 {
    let cov = |(a, a2, n): (C64, C64, f64)| {
        let m = a2 - a * a;
        let nc = n - a.norm_sqr();
        [
            [2.0 * m.re + 2.0 * nc + 1.0, 2.0 * m.im],
            [2.0 * m.im, -2.0 * m.re + 2.0 * nc + 1.0],
        ]
    };
    let det = |v: [[f64; 2]; 2]| v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let v0 = cov(m0);
    let v1 = cov(m1);
    let s = [
        [v0[0][0] + v1[0][0], v0[0][1] + v1[0][1]],
        [v0[1][0] + v1[1][0], v0[1][1] + v1[1][1]],
    ];
    let ds = det(s);
    // closure can push det V slightly below the vacuum bound
    let lam = ((det(v0) - 1.0).max(0.0)) * ((det(v1) - 1.0).max(0.0));
    let d = m1.0 - m0.0;
    let delta = [2.0 * d.re, 2.0 * d.im];
    let quad = (s[1][1] * delta[0] * delta[0] - 2.0 * s[0][1] * delta[0] * delta[1]
        + s[0][0] * delta[1] * delta[1])
        / ds;
    let f2 = 2.0 / ((ds + lam).sqrt() - lam.sqrt()) * (-0.5 * quad).exp();
    f2.max(0.0).sqrt().min(1.0)
}

/// Schmidt form `|Ψ⟩ = √(1−ε)|φ⁺⟩|ψ⁺⟩ + e^{iθ}√ε|φ⁻⟩|ψ⁻⟩` of a qubit–cavity
/// pure state, with `|φ⁺⟩ = √(1−q)|x⟩ + e^{iφ}√q|1−x⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtDecomposition {
    pub epsilon: f64,
    pub q: f64,
    pub theta: f64,
    pub phi: f64,
    pub major_qubit: Vec<C64>,
    pub minor_qubit: Vec<C64>,
    pub major_cavity: Vec<C64>,
    pub minor_cavity: Vec<C64>,
    /// Degenerate spectrum; the major branch is then the eigenvector with the
    /// larger overlap on `|x⟩`.
    pub tie: bool,
}

impl SchmidtDecomposition {
    /// `p_x = ε + q − 2εq`
    pub fn flip_probability(&self) -> f64 {
        self.epsilon + self.q - 2.0 * self.epsilon * self.q
    }
}

const SCHMIDT_TIE_TOL: f64 = 1e-12;

/// Fixes the phase of `v` so its largest-magnitude entry is real positive;
/// returns the removed phase.
fn fix_phase(v: &mut [C64]) -> f64 {
    let k = (0..v.len())
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0);
    let ph = v[k].arg();
    let rot = C64::from_polar(1.0, -ph);
    v.iter_mut().for_each(|c| *c *= rot);
    ph
}

/// Schmidt decomposition and flip probability for a two-level qubit that
/// started in `|x⟩`.
pub fn schmidt_disturbance(state: &JointState, x: usize) -> Result<(SchmidtDecomposition, f64)> {
    if state.dims.qubit_levels != 2 {
        return Err(Error::InvalidParameter(
            "Schmidt disturbance needs a two-level qubit; use 1 − P_x for the transmon".into(),
        ));
    }
    if x > 1 {
        return Err(Error::InvalidParameter(format!("initial level {x} is not 0 or 1")));
    }
    let rho_q = partial_trace_pure(state, Subsystem::Qubit).matrix;
    let (vals, vecs) = hermitian_eigen(&rho_q);
    let (lo, hi) = (vals[0].max(0.0), vals[1].max(0.0));
    let tie = (hi - lo).abs() < SCHMIDT_TIE_TOL;
    let (mut maj, mut min) = (1usize, 0usize);
    if tie && vecs[(x, 0)].norm() > vecs[(x, 1)].norm() {
        std::mem::swap(&mut maj, &mut min);
    }
    let total = lo + hi;
    let epsilon = (vals[min].max(0.0) / total).clamp(0.0, 0.5);

    // |φ⁺⟩ with ⟨x|φ⁺⟩ real non-negative
    let mut phi_p: Vec<C64> = (0..2).map(|i| vecs[(i, maj)]).collect();
    let rot = if phi_p[x].norm() > 0.0 {
        C64::from_polar(1.0, -phi_p[x].arg())
    } else {
        C64::new(1.0, 0.0)
    };
    phi_p.iter_mut().for_each(|c| *c *= rot);
    let q = phi_p[1 - x].norm_sqr().clamp(0.0, 1.0);
    let phi = phi_p[1 - x].arg();
    // orthogonal complement √q|x⟩ − e^{iφ}√(1−q)|1−x⟩
    let mut phi_m = vec![ZERO; 2];
    phi_m[x] = C64::new(q.sqrt(), 0.0);
    phi_m[1 - x] = -C64::from_polar((1.0 - q).sqrt(), phi);

    let project = |phi_q: &[C64]| -> Vec<C64> {
        let b0 = state.branch(0);
        let b1 = state.branch(1);
        b0.iter()
            .zip(b1)
            .map(|(u, v)| phi_q[0].conj() * u + phi_q[1].conj() * v)
            .collect()
    };
    let mut psi_p = project(&phi_p);
    let mut psi_m = project(&phi_m);
    let np = crate::hilbert::norm(&psi_p);
    let nm = crate::hilbert::norm(&psi_m);
    let th_p = if np > 0.0 { fix_phase(&mut psi_p) } else { 0.0 };
    let th_m = if nm > 0.0 { fix_phase(&mut psi_m) } else { 0.0 };
    if np > 0.0 {
        psi_p.iter_mut().for_each(|c| *c /= np);
    }
    if nm > 0.0 {
        psi_m.iter_mut().for_each(|c| *c /= nm);
    }
    let theta = if nm > 0.0 {
        (th_m - th_p).rem_euclid(std::f64::consts::TAU)
    } else {
        0.0
    };
    let sd = SchmidtDecomposition {
        epsilon,
        q,
        theta,
        phi,
        major_qubit: phi_p,
        minor_qubit: phi_m,
        major_cavity: psi_p,
        minor_cavity: psi_m,
        tie,
    };
    let p = sd.flip_probability();
    Ok((sd, p))
}

/// Sampled `⟨a⟩(t)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CentroidTrack {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl CentroidTrack {
    pub fn from_states<S: Observed>(times: &[f64], states: &[S]) -> Self {
        CentroidTrack {
            times: times.to_vec(),
            values: states.iter().map(|s| s.cavity_mean()).collect(),
        }
    }

    /// Linear interpolation, clamped to the sampled range.
    pub fn at(&self, t: f64) -> C64 {
        let ts = &self.times;
        if ts.is_empty() {
            return ZERO;
        }
        if t <= ts[0] {
            return self.values[0];
        }
        if t >= ts[ts.len() - 1] {
            return self.values[ts.len() - 1];
        }
        let k = ts.partition_point(|&s| s <= t);
        let (t0, t1) = (ts[k - 1], ts[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - w) + self.values[k] * w
    }
}

/// `|⟨a⟩₀(t) − ⟨a⟩₁(t)|`
pub fn centroid_distance(track0: &CentroidTrack, track1: &CentroidTrack, t: f64) -> f64 {
    (track0.at(t) - track1.at(t)).norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveAnalytics {
    pub phi: f64,
    pub lambda: f64,
    pub n_crit: f64,
}

/// `φ = ∫₀^τ g(t)²/Δ dt`, `λ = 2|α| sin|φ|`, `n_crit = Δ²/4g²`.
pub fn dispersive_analytics(
    g_max: f64,
    delta: f64,
    tau: f64,
    alpha: C64,
    schedule: &PulseSchedule,
) -> Result<DispersiveAnalytics> {
    if delta == 0.0 {
        return Err(Error::SingularDetuning);
    }
    let phi = integrated_coupling_squared(schedule, g_max, tau) / delta;
    Ok(DispersiveAnalytics {
        phi,
        lambda: 2.0 * alpha.norm() * phi.abs().sin(),
        n_crit: crate::models::n_crit(g_max, delta),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Moments,
}

/// Everything a readout simulation needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub params: SystemParams,
    pub schedule: PulseSchedule,
    pub cavity: CavityStateSpec,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub engine: Engine,
    pub indistinguishability: f64,
    pub distinguishability: f64,
    pub p0: f64,
    pub p1: f64,
    pub disturbance: f64,
    pub schmidt: Vec<SchmidtDecomposition>,
    /// Final qubit level populations per initial level (transmon leakage).
    pub level_populations: Vec<Vec<f64>>,
    pub centroids: Vec<CentroidTrack>,
    /// Qubit population of the initial level along each branch.
    pub initial_level_population: Vec<Vec<f64>>,
    pub wall_clock_s: f64,
    pub stats: Vec<IntegrationStats>,
}

/// Samples used for the centroid and population traces.
pub const REPORT_SAMPLES: usize = 121;

/// Simulates both initial qubit levels and scores the readout at `τ`.
pub fn measurement_report(
    protocol: &Protocol,
    engine: Engine,
    cfg: &IntegratorConfig,
) -> Result<ReadoutReport> {
    let Protocol {
        params,
        schedule,
        cavity,
        tau,
    } = protocol;
    if !(*tau > 0.0) {
        return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
    }
    let start = Instant::now();
    let samples = sample_grid(0.0, *tau, REPORT_SAMPLES);
    match engine {
        Engine::Exact => {
            let h = build_hamiltonian(params, schedule, Model::Rabi)?;
            let cav = squeezed_coherent_state(cavity, params.dims.cavity_cutoff)?;
            let run = |x: usize| -> Result<_> {
                let psi = tensor_state(&qubit_basis(params.dims.qubit_levels, x), &cav, 0.0)?;
                evolve_schrodinger(&psi, &h, &samples, cfg)
            };
            let (r0, r1) = rayon::join(|| run(0), || run(1));
            let (t0, t1) = (r0?, r1?);
            let f = cavity_indistinguishability(t0.last(), t1.last())?;
            let mut schmidt = Vec::new();
            let (p0, p1) = if params.qubit_model == QubitModel::Ideal {
                let (s0, p0) = schmidt_disturbance(t0.last(), 0)?;
                let (s1, p1) = schmidt_disturbance(t1.last(), 1)?;
                schmidt.push(s0);
                schmidt.push(s1);
                (p0, p1)
            } else {
                (
                    1.0 - t0.last().qubit_population(0),
                    1.0 - t1.last().qubit_population(1),
                )
            };
            let levels = |tr: &crate::integrate::Trajectory<JointState>| {
                (0..params.dims.qubit_levels)
                    .map(|k| tr.last().qubit_population(k))
                    .collect::<Vec<_>>()
            };
            Ok(ReadoutReport {
                engine,
                indistinguishability: f,
                distinguishability: 1.0 - f,
                p0,
                p1,
                disturbance: p0.max(p1),
                schmidt,
                level_populations: vec![levels(&t0), levels(&t1)],
                centroids: vec![
                    CentroidTrack::from_states(&t0.times, &t0.states),
                    CentroidTrack::from_states(&t1.times, &t1.states),
                ],
                initial_level_population: vec![
                    t0.states.iter().map(|s| s.qubit_population(0)).collect(),
                    t1.states.iter().map(|s| s.qubit_population(1)).collect(),
                ],
                wall_clock_s: start.elapsed().as_secs_f64(),
                stats: vec![t0.stats, t1.stats],
            })
        }
        Engine::Moments => {
            let run = |x: usize| {
                let m0 = MomentState::product(params.qubit_model, x, cavity);
                evolve_moments(&m0, params, schedule, 0.0, &samples, cfg)
            };
            let t0 = run(0)?;
            let t1 = run(1)?;
            let moments = |s: &MomentState| (s.cavity_mean(), s.cavity_a2(), s.cavity_photons());
            let f = gaussian_indistinguishability(moments(t0.last()), moments(t1.last()));
            let p0 = t0.last().flip_probability(0);
            let p1 = t1.last().flip_probability(1);
            let pop = |tr: &crate::integrate::Trajectory<MomentState>, x: usize| {
                tr.states
                    .iter()
                    .map(|s| 1.0 - s.flip_probability(x))
                    .collect::<Vec<_>>()
            };
            Ok(ReadoutReport {
                engine,
                indistinguishability: f,
                distinguishability: 1.0 - f,
                p0,
                p1,
                disturbance: p0.max(p1),
                schmidt: Vec::new(),
                level_populations: Vec::new(),
                centroids: vec![
                    CentroidTrack::from_states(&t0.times, &t0.states),
                    CentroidTrack::from_states(&t1.times, &t1.states),
                ],
                initial_level_population: vec![pop(&t0, 0), pop(&t1, 1)],
                wall_clock_s: start.elapsed().as_secs_f64(),
                stats: vec![t0.stats, t1.stats],
            })
        }
    }
}

/// Husimi `Q(β) = ⟨β|ρ_cav|β⟩/π` of the reduced cavity state of a joint pure
/// state, on a `re × im` grid. Rows follow `im`, columns follow `re`.
pub fn husimi_q(state: &JointState, re: &[f64], im: &[f64]) -> Vec<Vec<f64>> {
    let n = state.dims.cavity_cutoff;
    let mut coh = vec![ZERO; n];
    im.iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    let beta = C64::new(x, y);
                    coh[0] = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
                    for k in 1..n {
                        coh[k] = coh[k - 1] * beta / (k as f64).sqrt();
                    }
                    (0..state.dims.qubit_levels)
                        .map(|q| crate::hilbert::inner(&coh, state.branch(q)).norm_sqr())
                        .sum::<f64>()
                        / std::f64::consts::PI
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, HilbertDims, Space};

    fn pure_density(v: &[C64]) -> DensityState {
        let n = v.len();
        DensityState {
            matrix: DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()),
            space: Space::Cavity(n),
            time: 0.0,
        }
    }

    #[test]
    fn identical_and_orthogonal() {
        let a = coherent_state(C64::new(1.0, 0.5), 30).unwrap();
        let ra = pure_density(&a);
        assert!((uhlmann_indistinguishability(&ra, &ra).unwrap() - 1.0).abs() < 1e-9);
        let mut e0 = vec![ZERO; 4];
        let mut e1 = vec![ZERO; 4];
        e0[0] = C64::new(1.0, 0.0);
        e1[3] = C64::new(1.0, 0.0);
        let f = uhlmann_indistinguishability(&pure_density(&e0), &pure_density(&e1)).unwrap();
        assert!(f.abs() < 1e-9);
    }

    #[test]
    fn coherent_overlap() {
        let (al, be) = (C64::new(1.2, -0.3), C64::new(-0.4, 0.9));
        let a = coherent_state(al, 40).unwrap();
        let b = coherent_state(be, 40).unwrap();
        let f = uhlmann_indistinguishability(&pure_density(&a), &pure_density(&b)).unwrap();
        assert!((f - (-(al - be).norm_sqr() / 2.0).exp()).abs() < 1e-7);
    }

    #[test]
    fn dimension_mismatch() {
        let a = pure_density(&coherent_state(ZERO, 4).unwrap());
        let b = pure_density(&coherent_state(ZERO, 5).unwrap());
        assert!(matches!(
            uhlmann_indistinguishability(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn schmidt_product_state() {
        let cav = coherent_state(C64::new(0.7, 0.2), 12).unwrap();
        for x in 0..2 {
            let psi = tensor_state(&qubit_basis(2, x), &cav, 0.0).unwrap();
            let (sd, p) = schmidt_disturbance(&psi, x).unwrap();
            assert!(sd.epsilon.abs() < 1e-12 && sd.q.abs() < 1e-12 && p.abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_formula() {
        let sd = SchmidtDecomposition {
            epsilon: 0.0,
            q: 0.25,
            theta: 0.0,
            phi: 0.0,
            major_qubit: vec![],
            minor_qubit: vec![],
            major_cavity: vec![],
            minor_cavity: vec![],
            tie: false,
        };
        assert_eq!(sd.flip_probability(), 0.25);
    }

    #[test]
    fn schmidt_tie_is_flagged() {
        let dims = HilbertDims::new(2, 4).unwrap();
        let mut amp = vec![ZERO; 8];
        amp[dims.index(0, 0)] = C64::new(0.5f64.sqrt(), 0.0);
        amp[dims.index(1, 1)] = C64::new(0.5f64.sqrt(), 0.0);
        let psi = JointState {
            amplitudes: amp,
            dims,
            time: 0.0,
        };
        let (sd, p) = schmidt_disturbance(&psi, 0).unwrap();
        assert!(sd.tie);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_matches_coherent_overlap() {
        let (al, be) = (C64::new(1.0, 2.0), C64::new(-0.5, 0.1));
        let f = gaussian_indistinguishability((al, al * al, al.norm_sqr()), (be, be * be, be.norm_sqr()));
        assert!((f - (-(al - be).norm_sqr() / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn dispersive_zero_coupling_and_quarter_turn() {
        let s = PulseSchedule::constant();
        let z = dispersive_analytics(0.0, 1.0, 10.0, C64::new(3.0, 0.0), &s).unwrap();
        assert_eq!(z.phi, 0.0);
        assert_eq!(z.lambda, 0.0);
        // g²τ/Δ = π/2
        let (g, delta) = (0.5, 1.0);
        let tau = std::f64::consts::FRAC_PI_2 * delta / (g * g);
        let q = dispersive_analytics(g, delta, tau, C64::new(0.0, 3.0), &s).unwrap();
        assert!((q.lambda - 6.0).abs() < 1e-9);
        assert!((q.n_crit - 1.0).abs() < 1e-15);
        assert!(matches!(
            dispersive_analytics(g, 0.0, tau, ZERO, &s),
            Err(Error::SingularDetuning)
        ));
    }

    #[test]
    fn centroid_tracks() {
        let tr = CentroidTrack {
            times: vec![0.0, 1.0, 2.0],
            values: vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 2.0)],
        };
        assert_eq!(centroid_distance(&tr, &tr, 0.7), 0.0);
        assert!((tr.at(1.5) - C64::new(2.0, 1.0)).norm() < 1e-15);
        let neg = CentroidTrack {
            times: tr.times.clone(),
            values: tr.values.iter().map(|v| -v).collect(),
        };
        assert!((centroid_distance(&tr, &neg, 2.0) - 2.0 * 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn husimi_of_coherent_peaks_at_alpha() {
        let cav = coherent_state(C64::new(1.0, -1.0), 20).unwrap();
        let psi = tensor_state(&qubit_basis(2, 0), &cav, 0.0).unwrap();
        let q = husimi_q(&psi, &[1.0, 0.0], &[-1.0]);
        assert!((q[0][0] - 1.0 / std::f64::consts::PI).abs() < 1e-10);
        assert!(q[0][1] < q[0][0]);
    }
}
