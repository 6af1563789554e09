// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! System parameters, coupler/drive envelopes and Hamiltonian builders.
//!
//! Four dynamical models share one representation, a sum of sparse operators
//! with scalar time-dependent coefficients:
//!
//! * `Lab`: `ω_c a†a + H_q + g(t) B (a + a†)` plus a resonant cavity drive.
//! * `Rabi`: the same interaction in the frame of `ω_c a†a + H_q`, with
//!   counter-rotating terms kept. This is the frame used for protocol runs.
//! * `Rwa`: `Rabi` without the terms rotating at `ω_k + ω_c`.
//! * `Dispersive`: `(g(t)²/Δ) σz a†a`, two-level qubit only.
//!
//! The transmon is the Duffing oscillator `ω_q b†b − (ε/2) b†b(b†b − 1)`,
//! which equals `(ω_q/2)(2b†b − ε b†b(b†b−1)/ω_q)`. Its interaction frame
//! uses the exact Duffing level energies, so each transition `k−1 → k`
//! rotates at `ω_q − (k−1)ε`.

use serde::{Deserialize, Serialize};

use crate::hilbert::{
    diagonal_sparse, embed, ladder_sparse, number_sparse, CMatrix, HilbertDims, JointState,
    SparseMatrix, Subsystem, C64, I, ZERO,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitModel {
    Ideal,
    Transmon,
}

/// Physical configuration of one qubit–cavity pair. Angular units (rad/ns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    /// `|0⟩ → |1⟩` transition.
    pub omega_q: f64,
    /// Transmon anharmonicity `ε = ω_q0 − ω_q1 > 0`; unused for the ideal qubit.
    pub anharmonicity: f64,
    pub g_max: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub qubit_model: QubitModel,
    pub dims: HilbertDims,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega_c", self.omega_c),
            ("omega_q", self.omega_q),
            ("anharmonicity", self.anharmonicity),
            ("g_max", self.g_max),
            ("kappa_int", self.kappa_int),
            ("kappa_ext", self.kappa_ext),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0")));
            }
        }
        if self.qubit_model == QubitModel::Ideal && self.dims.qubit_levels != 2 {
            return Err(Error::InvalidParameter(
                "the ideal qubit has exactly two levels".into(),
            ));
        }
        Ok(())
    }

    /// `Δ = ω_q − ω_c`.
    pub fn detuning(&self) -> f64 {
        self.omega_q - self.omega_c
    }

    pub fn total_kappa(&self) -> f64 {
        self.kappa_int + self.kappa_ext
    }

    /// Bare qubit energies, level by level.
    pub fn qubit_energies(&self) -> Vec<f64> {
        match self.qubit_model {
            QubitModel::Ideal => vec![-0.5 * self.omega_q, 0.5 * self.omega_q],
            QubitModel::Transmon => (0..self.dims.qubit_levels)
                .map(|k| {
                    let k = k as f64;
                    self.omega_q * k - 0.5 * self.anharmonicity * k * (k - 1.0)
                })
                .collect(),
        }
    }

    /// Transition frequency `E_k − E_{k−1}` for `k = 1..levels`.
    pub fn transition_frequencies(&self) -> Vec<f64> {
        self.qubit_energies().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Photon number above which the dispersive expansion fails, `Δ²/4g²`.
    pub fn n_crit(&self) -> f64 {
        n_crit(self.g_max, self.detuning())
    }
}

pub fn n_crit(g: f64, delta: f64) -> f64 {
    delta * delta / (4.0 * g * g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Envelope {
    /// `(g_max/4) erfc(−v1 (t − t1)) erfc(v1 (t − t2))`.
    Erfc { v1: f64, t1: f64, t2: f64 },
    /// `g_max` on `[t1, t2]`, zero elsewhere.
    Square { t1: f64, t2: f64 },
    /// Always on.
    Constant,
}

/// Resonant cavity drive with envelope `amplitude · exp(−(t − t_center)²/2σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDrive {
    /// rad/ns
    pub amplitude: f64,
    pub sigma: f64,
    pub t_center: f64,
}

/// Constant resonant drive `amplitude · e^{i phase}` over `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SustainDrive {
    /// rad/ns
    pub amplitude: f64,
    pub phase: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub envelope: Envelope,
    #[serde(default)]
    pub drive: Option<GaussianDrive>,
    #[serde(default)]
    pub sustain: Option<SustainDrive>,
}

impl PulseSchedule {
    pub fn erfc(v1: f64, t1: f64, t2: f64) -> Self {
        Self {
            envelope: Envelope::Erfc { v1, t1, t2 },
            drive: None,
            sustain: None,
        }
    }

    pub fn square(t1: f64, t2: f64) -> Self {
        Self {
            envelope: Envelope::Square { t1, t2 },
            drive: None,
            sustain: None,
        }
    }

    pub fn constant() -> Self {
        Self {
            envelope: Envelope::Constant,
            drive: None,
            sustain: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.envelope {
            Envelope::Erfc { v1, t1, t2 } => {
                if !(v1 > 0.0) {
                    return Err(Error::InvalidParameter("envelope v1 must be > 0".into()));
                }
                check_window(t1, t2)?;
            }
            Envelope::Square { t1, t2 } => check_window(t1, t2)?,
            Envelope::Constant => {}
        }
        if let Some(d) = self.drive {
            if !(d.sigma > 0.0) {
                return Err(Error::InvalidParameter("drive sigma must be > 0".into()));
            }
        }
        if let Some(s) = self.sustain {
            if !(s.end > s.start) {
                return Err(Error::InvalidParameter("sustain window must have end > start".into()));
            }
        }
        Ok(())
    }

    /// Complex drive amplitude `ε(t)` entering `ε a† + ε* a` in the cavity frame.
    pub fn drive_amplitude(&self, t: f64) -> C64 {
        let mut e = ZERO;
        if let Some(d) = self.drive {
            let x = (t - d.t_center) / d.sigma;
            e += d.amplitude * (-0.5 * x * x).exp();
        }
        if let Some(s) = self.sustain {
            if t >= s.start && t <= s.end {
                e += C64::from_polar(s.amplitude, s.phase);
            }
        }
        e
    }

    pub fn has_drive(&self) -> bool {
        self.drive.is_some() || self.sustain.is_some()
    }
}

fn check_window(t1: f64, t2: f64) -> Result<()> {
    if !(t1 >= 0.0) {
        return Err(Error::InvalidParameter("envelope t1 must be >= 0".into()));
    }
    if !(t2 > t1) {
        return Err(Error::InvalidParameter("envelope requires t2 > t1".into()));
    }
    Ok(())
}

/// Coupling strength `g(t)` in rad/ns.
pub fn envelope_value(schedule: &PulseSchedule, g_max: f64, t: f64) -> f64 {
    match schedule.envelope {
        Envelope::Erfc { v1, t1, t2 } => {
            0.25 * g_max * libm::erfc(-v1 * (t - t1)) * libm::erfc(v1 * (t - t2))
        }
        Envelope::Square { t1, t2 } => {
            if t >= t1 && t <= t2 {
                g_max
            } else {
                0.0
            }
        }
        Envelope::Constant => g_max,
    }
}

/// `∫₀^τ g(t)² dt` by composite Simpson on a grid fine enough for the ramps.
pub fn integrated_coupling_squared(schedule: &PulseSchedule, g_max: f64, tau: f64) -> f64 {
    let n = 4000usize;
    let h = tau / n as f64;
    let f = |t: f64| envelope_value(schedule, g_max, t).powi(2);
    let mut s = f(0.0) + f(tau);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lab,
    Rabi,
    Rwa,
    Dispersive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulation {
    Static,
    /// `g(t)`
    Coupling,
    /// `g(t)²`
    CouplingSquared,
    /// `ε(t)`
    Drive,
    /// `ε(t)*`
    DriveConj,
}

/// One `c(t) · e^{i freq t} · op` contribution.
#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub modulation: Modulation,
    pub freq: f64,
    pub op: SparseMatrix,
}

/// Time-dependent Hamiltonian `H(t) = Σ_k c_k(t) e^{i ω_k t} O_k` (ħ = 1).
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub dims: HilbertDims,
    pub model: Model,
    pub terms: Vec<HamiltonianTerm>,
    schedule: PulseSchedule,
    g_max: f64,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.dims.joint()
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn coupling(&self, t: f64) -> f64 {
        envelope_value(&self.schedule, self.g_max, t)
    }

    /// Scalar coefficient of every term at time `t`.
    pub fn coefficients(&self, t: f64) -> Vec<C64> {
        let g = self.coupling(t);
        let e = self.schedule.drive_amplitude(t);
        self.terms
            .iter()
            .map(|term| {
                let base = match term.modulation {
                    Modulation::Static => C64::new(1.0, 0.0),
                    Modulation::Coupling => C64::new(g, 0.0),
                    Modulation::CouplingSquared => C64::new(g * g, 0.0),
                    Modulation::Drive => e,
                    Modulation::DriveConj => e.conj(),
                };
                if term.freq == 0.0 {
                    base
                } else {
                    base * C64::from_polar(1.0, term.freq * t)
                }
            })
            .collect()
    }

    pub fn dense(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for (term, c) in self.terms.iter().zip(self.coefficients(t)) {
            if c == ZERO {
                continue;
            }
            for &(r, col, v) in &term.op.entries {
                m[(r, col)] += c * v;
            }
        }
        m
    }

    /// `out = H(t) ψ`.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|c| *c = ZERO);
        for (term, c) in self.terms.iter().zip(self.coefficients(t)) {
            if c != ZERO {
                term.op.mul_add(c, psi, out);
            }
        }
    }

    /// `out = −i H(t) ψ`, the Schrödinger right-hand side.
    pub fn schrodinger_rhs(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|c| *c = ZERO);
        for (term, c) in self.terms.iter().zip(self.coefficients(t)) {
            if c != ZERO {
                term.op.mul_add(-I * c, psi, out);
            }
        }
    }

    /// `out[:, col] += ρ[:, row] · c v` over all entries: `out += ρ H(t)`
    /// for column-major `ρ`.
    pub fn right_mul_add(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim();
        for (term, c) in self.terms.iter().zip(self.coefficients(t)) {
            if c == ZERO {
                continue;
            }
            for &(r, col, v) in &term.op.entries {
                let w = c * v;
                let src = &rho[r * n..(r + 1) * n];
                let dst = &mut out[col * n..(col + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
        }
    }
}

struct Ops {
    b: SparseMatrix,
    a: SparseMatrix,
    ad: SparseMatrix,
}

fn joint_ops(dims: HilbertDims) -> Ops {
    let a_local = ladder_sparse(dims.cavity_cutoff);
    let a = embed(dims, Subsystem::Cavity, &a_local);
    Ops {
        b: ladder_sparse(dims.qubit_levels),
        ad: a.adjoint(),
        a,
    }
}

/// Single-transition piece `√k |k−1⟩⟨k|` of the qubit lowering operator.
fn transition(levels: usize, k: usize) -> SparseMatrix {
    let mut m = SparseMatrix::new(levels, levels);
    m.entries.push((k - 1, k, C64::new((k as f64).sqrt(), 0.0)));
    m
}

fn drive_terms(dims: HilbertDims, frame_freq: f64) -> Vec<HamiltonianTerm> {
    let ops = joint_ops(dims);
    vec![
        HamiltonianTerm {
            modulation: Modulation::Drive,
            freq: -frame_freq,
            op: ops.ad,
        },
        HamiltonianTerm {
            modulation: Modulation::DriveConj,
            freq: frame_freq,
            op: ops.a,
        },
    ]
}

/// Assembles the Hamiltonian of `model` for a configuration and schedule.
pub fn build_hamiltonian(
    params: &SystemParams,
    schedule: &PulseSchedule,
    model: Model,
) -> Result<Hamiltonian> {
    params.validate()?;
    schedule.validate()?;
    let dims = params.dims;
    let ops = joint_ops(dims);
    let levels = dims.qubit_levels;
    let id_c = SparseMatrix::identity(dims.cavity_cutoff);
    let mut terms = Vec::new();
    match model {
        Model::Lab => {
            let n_op = embed(dims, Subsystem::Cavity, &number_sparse(dims.cavity_cutoff));
            let hq = embed(dims, Subsystem::Qubit, &diagonal_sparse(&params.qubit_energies()));
            terms.push(HamiltonianTerm {
                modulation: Modulation::Static,
                freq: 0.0,
                op: n_op.scaled(C64::new(params.omega_c, 0.0)).add(&hq),
            });
            let bx = ops.b.add(&ops.b.adjoint());
            let x = ops.a.add(&ops.ad);
            let coupling = bx.kron(&id_c);
            terms.push(HamiltonianTerm {
                modulation: Modulation::Coupling,
                freq: 0.0,
                op: coupling.matmul(&x),
            });
            if schedule.has_drive() {
                terms.extend(drive_terms(dims, params.omega_c));
            }
        }
        Model::Rabi | Model::Rwa => {
            let wc = params.omega_c;
            for (idx, wk) in params.transition_frequencies().into_iter().enumerate() {
                let bk = transition(levels, idx + 1).kron(&id_c);
                let bkd = bk.adjoint();
                let prod = |q: &SparseMatrix, c: &SparseMatrix| q.matmul(c);
                // b_k a† and b_k† a conserve excitations
                terms.push(HamiltonianTerm {
                    modulation: Modulation::Coupling,
                    freq: wk - wc,
                    op: prod(&bkd, &ops.a),
                });
                terms.push(HamiltonianTerm {
                    modulation: Modulation::Coupling,
                    freq: -(wk - wc),
                    op: prod(&bk, &ops.ad),
                });
                if model == Model::Rabi {
                    terms.push(HamiltonianTerm {
                        modulation: Modulation::Coupling,
                        freq: wk + wc,
                        op: prod(&bkd, &ops.ad),
                    });
                    terms.push(HamiltonianTerm {
                        modulation: Modulation::Coupling,
                        freq: -(wk + wc),
                        op: prod(&bk, &ops.a),
                    });
                }
            }
            if schedule.has_drive() {
                terms.extend(drive_terms(dims, 0.0));
            }
        }
        Model::Dispersive => {
            if params.qubit_model != QubitModel::Ideal {
                return Err(Error::InvalidParameter(
                    "the dispersive model is defined for the two-level qubit".into(),
                ));
            }
            let delta = params.detuning();
            if delta == 0.0 {
                return Err(Error::SingularDetuning);
            }
            let sz = diagonal_sparse(&[-1.0, 1.0]);
            let op = sz
                .kron(&number_sparse(dims.cavity_cutoff))
                .scaled(C64::new(1.0 / delta, 0.0));
            terms.push(HamiltonianTerm {
                modulation: Modulation::CouplingSquared,
                freq: 0.0,
                op,
            });
            if schedule.has_drive() {
                terms.extend(drive_terms(dims, 0.0));
            }
        }
    }
    Ok(Hamiltonian {
        dims,
        model,
        terms,
        schedule: schedule.clone(),
        g_max: params.g_max,
    })
}

/// Lab-frame Hamiltonian matrix at time `t`.
pub fn hamiltonian_lab(params: &SystemParams, schedule: &PulseSchedule, t: f64) -> Result<CMatrix> {
    Ok(build_hamiltonian(params, schedule, Model::Lab)?.dense(t))
}

/// Interaction-picture Hamiltonian with counter-rotating terms.
pub fn hamiltonian_rabi_interaction(
    params: &SystemParams,
    schedule: &PulseSchedule,
    t: f64,
) -> Result<CMatrix> {
    Ok(build_hamiltonian(params, schedule, Model::Rabi)?.dense(t))
}

pub fn hamiltonian_rwa(params: &SystemParams, schedule: &PulseSchedule, t: f64) -> Result<CMatrix> {
    Ok(build_hamiltonian(params, schedule, Model::Rwa)?.dense(t))
}

pub fn hamiltonian_dispersive(
    params: &SystemParams,
    schedule: &PulseSchedule,
    t: f64,
) -> Result<CMatrix> {
    Ok(build_hamiltonian(params, schedule, Model::Dispersive)?.dense(t))
}

/// Diagonal of the bare Hamiltonian `ω_c a†a + H_q` in the joint basis.
pub fn bare_energies(params: &SystemParams) -> Vec<f64> {
    let d = params.dims;
    let eq = params.qubit_energies();
    let mut out = Vec::with_capacity(d.joint());
    for e in eq.iter().take(d.qubit_levels) {
        for n in 0..d.cavity_cutoff {
            out.push(e + params.omega_c * n as f64);
        }
    }
    out
}

/// Interaction-frame state to lab frame: `ψ_lab = e^{−i H₀ t} ψ_I`.
pub fn to_lab_frame(params: &SystemParams, state: &JointState) -> JointState {
    rotate(params, state, -1.0)
}

/// Lab-frame state to interaction frame: `ψ_I = e^{+i H₀ t} ψ_lab`.
pub fn to_interaction_frame(params: &SystemParams, state: &JointState) -> JointState {
    rotate(params, state, 1.0)
}

fn rotate(params: &SystemParams, state: &JointState, sign: f64) -> JointState {
    let e = bare_energies(params);
    let amplitudes = state
        .amplitudes
        .iter()
        .zip(&e)
        .map(|(c, &en)| c * C64::from_polar(1.0, sign * en * state.time))
        .collect();
    JointState {
        amplitudes,
        dims: state.dims,
        time: state.time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::max_abs_diff;
    use crate::units::{ghz, mhz};

    fn ideal(cutoff: usize) -> SystemParams {
        SystemParams {
            omega_c: ghz(8.128),
            omega_q: ghz(6.998),
            anharmonicity: 0.0,
            g_max: mhz(100.0),
            kappa_int: 0.0,
            kappa_ext: 0.0,
            qubit_model: QubitModel::Ideal,
            dims: HilbertDims::new(2, cutoff).unwrap(),
        }
    }

    fn transmon(levels: usize, cutoff: usize) -> SystemParams {
        SystemParams {
            anharmonicity: mhz(200.0),
            qubit_model: QubitModel::Transmon,
            dims: HilbertDims::new(levels, cutoff).unwrap(),
            ..ideal(cutoff)
        }
    }

    /// erfc by Simpson quadrature of (2/√π) ∫₀^s e^{−u²} du.
    fn erfc_oracle(s: f64) -> f64 {
        let n = 200_000;
        let h = s / n as f64;
        let f = |u: f64| (-u * u).exp();
        let mut acc = f(0.0) + f(s);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * acc * h / 3.0
    }

    #[test]
    fn erfc_plateau_and_half_point() {
        let g = mhz(100.0);
        let s = PulseSchedule::erfc(5.0, 2.0, 20.0);
        assert!((envelope_value(&s, g, 11.0) - g).abs() < 1e-4 * g);
        assert!((envelope_value(&s, g, 2.0) - 0.5 * g).abs() < 1e-4 * g);
    }

    #[test]
    fn erfc_matches_quadrature_oracle() {
        let g = mhz(100.0);
        let (v1, t1, t2) = (1.214, 2.249, 9.551);
        let s = PulseSchedule::erfc(v1, t1, t2);
        for t in [0.0, 1.0, 2.249, 6.0, 9.0, 12.0] {
            let expect = 0.25 * g * erfc_oracle(-v1 * (t - t1)) * erfc_oracle(v1 * (t - t2));
            let got = envelope_value(&s, g, t);
            assert!((got - expect).abs() < 1e-12, "t={t}: {got} vs {expect}");
        }
    }

    #[test]
    fn square_envelope() {
        let s = PulseSchedule::square(1.0, 3.0);
        assert_eq!(envelope_value(&s, 2.0, 0.5), 0.0);
        assert_eq!(envelope_value(&s, 2.0, 2.0), 2.0);
        assert_eq!(envelope_value(&s, 2.0, 3.5), 0.0);
    }

    #[test]
    fn erfc_slope_bound() {
        let g = 1.0;
        let v1 = 3.0;
        let s = PulseSchedule::erfc(v1, 1.0, 4.0);
        let dt = 1e-4;
        let bound = g * v1 * 2.0 / std::f64::consts::PI.sqrt() * dt * (1.0 + 1e-3);
        let mut t = 0.0;
        while t < 5.0 {
            let d = (envelope_value(&s, g, t + dt) - envelope_value(&s, g, t)).abs();
            assert!(d <= bound, "t={t}");
            t += 0.01;
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(PulseSchedule::erfc(1.0, 3.0, 2.0).validate().is_err());
        assert!(PulseSchedule::erfc(0.0, 1.0, 2.0).validate().is_err());
        assert!(PulseSchedule::square(-1.0, 2.0).validate().is_err());
        assert!(PulseSchedule::erfc(1.0, 1.0, 2.0).validate().is_ok());
    }

    fn off() -> PulseSchedule {
        // g(t) vanishes everywhere on [0, 10] for these times
        PulseSchedule::square(100.0, 200.0)
    }

    #[test]
    fn builders_are_hermitian() {
        let mut sched = PulseSchedule::erfc(1.5, 1.0, 4.0);
        sched.drive = Some(GaussianDrive {
            amplitude: 0.3,
            sigma: 2.0,
            t_center: 1.0,
        });
        sched.sustain = Some(SustainDrive {
            amplitude: 0.1,
            phase: 0.7,
            start: 0.0,
            end: 5.0,
        });
        for p in [ideal(6), transmon(4, 6)] {
            for model in [Model::Lab, Model::Rabi, Model::Rwa, Model::Dispersive] {
                let Ok(h) = build_hamiltonian(&p, &sched, model) else {
                    continue;
                };
                for t in [0.0, 0.37, 2.5] {
                    let m = h.dense(t);
                    let nrm = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
                    assert!(max_abs_diff(&m, &m.adjoint()) <= 1e-12 * nrm, "{model:?}");
                }
            }
        }
    }

    #[test]
    fn uncoupled_lab_is_block_diagonal() {
        let p = ideal(5);
        let m = hamiltonian_lab(&p, &off(), 1.0).unwrap();
        for i in 0..5 {
            for j in 5..10 {
                assert_eq!(m[(i, j)], ZERO);
                assert_eq!(m[(j, i)], ZERO);
            }
        }
    }

    #[test]
    fn ideal_qubit_term_eigenvalues() {
        let e = ideal(3).qubit_energies();
        assert_eq!(e, vec![-0.5 * ghz(6.998), 0.5 * ghz(6.998)]);
    }

    #[test]
    fn transmon_level_spacing() {
        // diagonalize the bare qubit term, compare E2 − E1 with ω_q − ε
        let p = transmon(5, 2);
        let m = hamiltonian_lab(&p, &off(), 0.0).unwrap();
        let mut bare = CMatrix::zeros(5, 5);
        for q in 0..5 {
            for r in 0..5 {
                bare[(q, r)] = m[(p.dims.index(q, 0), p.dims.index(r, 0))];
            }
        }
        let (vals, _) = crate::hilbert::hermitian_eigen(&bare);
        assert!((vals[1] - vals[0] - p.omega_q).abs() < 1e-9);
        assert!((vals[2] - vals[1] - (p.omega_q - mhz(200.0))).abs() < 1e-9);
    }

    #[test]
    fn rabi_at_time_zero_is_sigma_x_times_quadrature() {
        let p = ideal(6);
        let s = PulseSchedule::constant();
        let m = hamiltonian_rabi_interaction(&p, &s, 0.0).unwrap();
        let sx = SparseMatrix::from_dense(&CMatrix::from_row_slice(
            2,
            2,
            &[ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO],
        ));
        let a = ladder_sparse(6).to_dense();
        let x = SparseMatrix::from_dense(&(&a + a.adjoint()));
        let expect = sx.kron(&x).to_dense() * C64::new(p.g_max, 0.0);
        assert!(max_abs_diff(&m, &expect) < 1e-12);
    }

    #[test]
    fn rabi_equals_frame_rotated_lab_coupling() {
        // e^{iH₀t} (H_lab − H₀) e^{−iH₀t} == H_Rabi(t)
        let p = ideal(5);
        let s = PulseSchedule::erfc(2.0, 0.5, 3.0);
        let t = 1.234;
        let lab = hamiltonian_lab(&p, &s, t).unwrap();
        let e = bare_energies(&p);
        let n = e.len();
        let mut rot = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { lab[(i, j)] - e[i] } else { lab[(i, j)] };
                rot[(i, j)] = v * C64::from_polar(1.0, (e[i] - e[j]) * t);
            }
        }
        let rabi = hamiltonian_rabi_interaction(&p, &s, t).unwrap();
        assert!(max_abs_diff(&rot, &rabi) < 1e-9);
        let pt = transmon(4, 5);
        let lab = hamiltonian_lab(&pt, &s, t).unwrap();
        let e = bare_energies(&pt);
        let n = e.len();
        let mut rot = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { lab[(i, j)] - e[i] } else { lab[(i, j)] };
                rot[(i, j)] = v * C64::from_polar(1.0, (e[i] - e[j]) * t);
            }
        }
        let rabi = hamiltonian_rabi_interaction(&pt, &s, t).unwrap();
        assert!(max_abs_diff(&rot, &rabi) < 1e-9);
    }

    #[test]
    fn rwa_conserves_excitations() {
        let p = ideal(7);
        let h = hamiltonian_rwa(&p, &PulseSchedule::constant(), 0.8).unwrap();
        let sz_p = diagonal_sparse(&[0.0, 1.0]).kron(&SparseMatrix::identity(7));
        let n = SparseMatrix::identity(2).kron(&number_sparse(7));
        let ex = n.add(&sz_p).to_dense();
        let comm = &h * &ex - &ex * &h;
        assert!(comm.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn dispersive_commutes_with_sigma_z() {
        let p = ideal(7);
        let h = hamiltonian_dispersive(&p, &PulseSchedule::constant(), 0.3).unwrap();
        let sz = diagonal_sparse(&[-1.0, 1.0]).kron(&SparseMatrix::identity(7)).to_dense();
        let comm = &h * &sz - &sz * &h;
        assert!(comm.iter().all(|c| c.norm() == 0.0));
        for i in 0..14 {
            for j in 0..14 {
                if i != j {
                    assert_eq!(h[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn dispersive_rejects_zero_detuning() {
        let mut p = ideal(4);
        p.omega_q = p.omega_c;
        assert!(matches!(
            build_hamiltonian(&p, &PulseSchedule::constant(), Model::Dispersive),
            Err(Error::SingularDetuning)
        ));
    }

    #[test]
    fn rwa_average_approaches_full() {
        // averaging the Rabi coupling over many fast periods drops the counter-rotating part
        let p = ideal(4);
        let s = PulseSchedule::constant();
        let h_rabi = build_hamiltonian(&p, &s, Model::Rabi).unwrap();
        let h_rwa = build_hamiltonian(&p, &s, Model::Rwa).unwrap();
        let sigma = p.omega_c + p.omega_q;
        let period = std::f64::consts::TAU / sigma;
        let t0 = 0.0;
        let samples = 4000;
        let span = 50.0 * period;
        let mut avg = CMatrix::zeros(8, 8);
        let mut avg_rwa = CMatrix::zeros(8, 8);
        for k in 0..samples {
            let t = t0 + span * (k as f64 + 0.5) / samples as f64;
            avg += h_rabi.dense(t);
            avg_rwa += h_rwa.dense(t);
        }
        avg /= C64::new(samples as f64, 0.0);
        avg_rwa /= C64::new(samples as f64, 0.0);
        // residual counter-rotating amplitude relative to g is O(Δ/Σ) small only after averaging
        let nrm = avg_rwa.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(max_abs_diff(&avg, &avg_rwa) < 2e-3 * nrm.max(p.g_max));
    }
}
