// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Gaussian moment-closure surrogate for the qubit–cavity dynamics.
//!
//! Moments are taken in the interaction frame of the bare Hamiltonian, with
//! the counter-rotating coupling retained:
//!
//! `H(t) = g(t) S(t) X(t) + ε(t) a† + ε(t)* a`, `X = a e^{−iω_c t} + a† e^{iω_c t}`.
//!
//! For the two-level qubit `S = σ₊ e^{iω_q t} + σ₋ e^{−iω_q t}` and the state
//! is `⟨a⟩, ⟨a²⟩, ⟨a†a⟩, ⟨σz⟩, ⟨σ₋⟩, ⟨aσz⟩, ⟨aσ₋⟩, ⟨aσ₊⟩`: 14 real numbers.
//! For the transmon the qubit is the Duffing mode `b` (frame rotating at
//! `ω_q`, nonlinearity `−(ε/2) b†²b²` kept in the generator) and the set is
//! `⟨a⟩, ⟨a²⟩, ⟨a†a⟩, ⟨b⟩, ⟨b²⟩, ⟨b†b⟩, ⟨ab⟩, ⟨ab†⟩`, again 14 real numbers.
//!
//! Higher moments are closed by dropping all cumulants above second order,
//! e.g. `⟨XYZ⟩ → ⟨XY⟩⟨Z⟩ + ⟨XZ⟩⟨Y⟩ + ⟨YZ⟩⟨X⟩ − 2⟨X⟩⟨Y⟩⟨Z⟩` with operator
//! order kept inside each pair. Cavity loss enters as `κ 𝒟[a]`.

use serde::{Deserialize, Serialize};

use crate::hilbert::{CavityStateSpec, JointState, C64, I, ZERO};
use crate::integrate::{integrate, IntegratorConfig, Observed, Trajectory};
use crate::models::{envelope_value, PulseSchedule, QubitModel, SystemParams};
use crate::{Error, Result};

/// Ideal-qubit moment set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitMoments {
    pub a: C64,
    pub a2: C64,
    pub n: f64,
    pub sz: f64,
    pub sm: C64,
    pub a_sz: C64,
    pub a_sm: C64,
    pub a_sp: C64,
}

/// Transmon moment set, the qubit treated as a weakly nonlinear mode `b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OscillatorMoments {
    pub a: C64,
    pub a2: C64,
    pub n: f64,
    pub b: C64,
    pub b2: C64,
    pub nb: f64,
    pub ab: C64,
    pub abd: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MomentState {
    Qubit(QubitMoments),
    Oscillator(OscillatorMoments),
}

/// Real components in either moment set.
pub const MOMENT_DIMENSION: usize = 14;

impl MomentState {
    /// Product state `|level⟩ ⊗ D(α)S(ξ)|0⟩`.
    pub fn product(model: QubitModel, level: usize, cavity: &CavityStateSpec) -> Self {
        let a = cavity.alpha;
        let a2 = cavity.second_moment();
        let n = cavity.mean_photons();
        match model {
            QubitModel::Ideal => {
                let sz = if level == 0 { -1.0 } else { 1.0 };
                MomentState::Qubit(QubitMoments {
                    a,
                    a2,
                    n,
                    sz,
                    sm: ZERO,
                    a_sz: a * sz,
                    a_sm: ZERO,
                    a_sp: ZERO,
                })
            }
            QubitModel::Transmon => MomentState::Oscillator(OscillatorMoments {
                a,
                a2,
                n,
                b: ZERO,
                b2: ZERO,
                nb: level as f64,
                ab: ZERO,
                abd: ZERO,
            }),
        }
    }

    /// Product of a coherent qubit mode `|β⟩` with the cavity state; the
    /// closure is exact for this input when the mode is linear.
    pub fn oscillator_coherent(beta: C64, cavity: &CavityStateSpec) -> Self {
        let a = cavity.alpha;
        MomentState::Oscillator(OscillatorMoments {
            a,
            a2: cavity.second_moment(),
            n: cavity.mean_photons(),
            b: beta,
            b2: beta * beta,
            nb: beta.norm_sqr(),
            ab: a * beta,
            abd: a * beta.conj(),
        })
    }

    /// Moments of a pure joint state. For the transmon the state must be in
    /// the linear `ω_q` frame used here, not the exact per-level frame.
    pub fn from_joint(model: QubitModel, psi: &JointState) -> Self {
        let d = psi.dims;
        let nc = d.cavity_cutoff;
        let c = |q: usize, n: usize| psi.amplitudes[d.index(q, n)];
        let sq = |k: usize| (k as f64).sqrt();
        let (mut a, mut a2, mut n_ph) = (ZERO, ZERO, 0.0);
        for q in 0..d.qubit_levels {
            for n in 0..nc {
                n_ph += n as f64 * c(q, n).norm_sqr();
                if n + 1 < nc {
                    a += c(q, n).conj() * sq(n + 1) * c(q, n + 1);
                }
                if n + 2 < nc {
                    a2 += c(q, n).conj() * sq((n + 1) * (n + 2)) * c(q, n + 2);
                }
            }
        }
        match model {
            QubitModel::Ideal => {
                let mut m = QubitMoments {
                    a,
                    a2,
                    n: n_ph,
                    ..Default::default()
                };
                for n in 0..nc {
                    m.sz += c(1, n).norm_sqr() - c(0, n).norm_sqr();
                    m.sm += c(0, n).conj() * c(1, n);
                    if n + 1 < nc {
                        let s = sq(n + 1);
                        m.a_sz += (c(1, n).conj() * c(1, n + 1) - c(0, n).conj() * c(0, n + 1)) * s;
                        m.a_sm += c(0, n).conj() * s * c(1, n + 1);
                        m.a_sp += c(1, n).conj() * s * c(0, n + 1);
                    }
                }
                MomentState::Qubit(m)
            }
            QubitModel::Transmon => {
                let mut m = OscillatorMoments {
                    a,
                    a2,
                    n: n_ph,
                    ..Default::default()
                };
                for k in 0..d.qubit_levels {
                    for n in 0..nc {
                        m.nb += k as f64 * c(k, n).norm_sqr();
                        if k + 1 < d.qubit_levels {
                            m.b += c(k, n).conj() * sq(k + 1) * c(k + 1, n);
                            if n + 1 < nc {
                                let s = sq((k + 1) * (n + 1));
                                m.ab += c(k, n).conj() * s * c(k + 1, n + 1);
                                m.abd += c(k + 1, n).conj() * s * c(k, n + 1);
                            }
                        }
                        if k + 2 < d.qubit_levels {
                            m.b2 += c(k, n).conj() * sq((k + 1) * (k + 2)) * c(k + 2, n);
                        }
                    }
                }
                MomentState::Oscillator(m)
            }
        }
    }

    pub fn cavity_mean(&self) -> C64 {
        match self {
            MomentState::Qubit(m) => m.a,
            MomentState::Oscillator(m) => m.a,
        }
    }

    pub fn cavity_a2(&self) -> C64 {
        match self {
            MomentState::Qubit(m) => m.a2,
            MomentState::Oscillator(m) => m.a2,
        }
    }

    pub fn cavity_photons(&self) -> f64 {
        match self {
            MomentState::Qubit(m) => m.n,
            MomentState::Oscillator(m) => m.n,
        }
    }

    /// Surrogate flip probability for an initial qubit level.
    ///
    /// Exact `P(1−x)` for the two-level qubit. For the oscillator only the mean
    /// excitation is available, so `|⟨b†b⟩ − x|` stands in as a lower-bound proxy.
    pub fn flip_probability(&self, initial_level: usize) -> f64 {
        match self {
            MomentState::Qubit(m) => {
                let p1 = 0.5 * (1.0 + m.sz);
                let p = if initial_level == 0 { p1 } else { 1.0 - p1 };
                p.clamp(0.0, 1.0)
            }
            MomentState::Oscillator(m) => (m.nb - initial_level as f64).abs().min(1.0),
        }
    }

    pub(crate) fn pack(&self) -> [C64; 8] {
        match *self {
            MomentState::Qubit(m) => [
                m.a,
                m.a2,
                C64::new(m.n, 0.0),
                C64::new(m.sz, 0.0),
                m.sm,
                m.a_sz,
                m.a_sm,
                m.a_sp,
            ],
            MomentState::Oscillator(m) => [
                m.a,
                m.a2,
                C64::new(m.n, 0.0),
                m.b,
                m.b2,
                C64::new(m.nb, 0.0),
                m.ab,
                m.abd,
            ],
        }
    }

    pub(crate) fn unpack(model: QubitModel, y: &[C64]) -> Self {
        match model {
            QubitModel::Ideal => MomentState::Qubit(QubitMoments {
                a: y[0],
                a2: y[1],
                n: y[2].re,
                sz: y[3].re,
                sm: y[4],
                a_sz: y[5],
                a_sm: y[6],
                a_sp: y[7],
            }),
            QubitModel::Transmon => MomentState::Oscillator(OscillatorMoments {
                a: y[0],
                a2: y[1],
                n: y[2].re,
                b: y[3],
                b2: y[4],
                nb: y[5].re,
                ab: y[6],
                abd: y[7],
            }),
        }
    }

    fn model(&self) -> QubitModel {
        match self {
            MomentState::Qubit(_) => QubitModel::Ideal,
            MomentState::Oscillator(_) => QubitModel::Transmon,
        }
    }

    /// Physicality checks the closure may transiently violate.
    pub fn invariant_violation(&self) -> Option<String> {
        let a = self.cavity_mean();
        let n = self.cavity_photons();
        if n < a.norm_sqr() - 1e-6 {
            return Some(format!("⟨a†a⟩={n:.6} below |⟨a⟩|²={:.6}", a.norm_sqr()));
        }
        if let MomentState::Qubit(m) = self {
            if m.sz.abs() > 1.0 + 1e-6 {
                return Some(format!("|⟨σz⟩|={:.6} exceeds 1", m.sz.abs()));
            }
        }
        None
    }
}

/// Time-dependent scalars shared by both moment sets.
#[derive(Clone, Copy)]
struct Drive {
    g: f64,
    eps: C64,
    /// `e^{−iω_c t}`
    c: C64,
    /// `e^{iω_q t}`
    q: C64,
    kappa: f64,
}

impl Drive {
    fn at(params: &SystemParams, schedule: &PulseSchedule, t: f64) -> Self {
        Drive {
            g: envelope_value(schedule, params.g_max, t),
            eps: schedule.drive_amplitude(t),
            c: unit_phase(-params.omega_c * t),
            q: unit_phase(params.omega_q * t),
            kappa: params.total_kappa(),
        }
    }
}

fn unit_phase(x: f64) -> C64 {
    let x = x - std::f64::consts::TAU * (x / std::f64::consts::TAU).trunc();
    let (s, c) = x.sin_cos();
    C64::new(c, s)
}

/// `−i x`
fn mi(x: C64) -> C64 {
    C64::new(x.im, -x.re)
}

/// `i x`
fn pi(x: C64) -> C64 {
    C64::new(-x.im, x.re)
}

fn qubit_rhs(d: &Drive, m: &QubitMoments) -> QubitMoments {
    let Drive { g, eps, c, q, kappa } = *d;
    // e^{i(ω_c+ω_q)t} and e^{i(ω_c−ω_q)t}
    let u = c.conj() * q;
    let v = c.conj() * q.conj();
    let (uc, vc) = (u.conj(), v.conj());
    let a = m.a;
    let ac = a.conj();
    let sp = m.sm.conj();
    let sz = m.sz;
    let half = 0.5 * kappa;

    // ⟨a a s⟩ and ⟨a† a s⟩ under Gaussian closure
    let k2 = m.a2 - a * a * 2.0;
    let kn = m.n - 2.0 * a.norm_sqr();
    let a2_sm = k2 * m.sm + a * m.a_sm * 2.0;
    let a2_sp = k2 * sp + a * m.a_sp * 2.0;
    let a2_sz = k2 * sz + a * m.a_sz * 2.0;
    let n_sm = m.sm * kn + a * m.a_sp.conj() + ac * m.a_sm;
    let n_sp = n_sm.conj();
    let n_sz = kn * sz + 2.0 * (ac * m.a_sz).re;

    let da = mi((u * sp + v * m.sm) * g + eps) - a * half;
    let da2 = mi(((u * m.a_sp + v * m.a_sm) * g + eps * a) * 2.0) - m.a2 * kappa;
    let dn = -2.0 * g * (vc * m.a_sp + uc * m.a_sm).im - 2.0 * (eps.conj() * a).im - kappa * m.n;
    let dsz = -4.0 * g * (uc * m.a_sm + v * m.a_sp.conj()).im;
    let dsm = pi((vc * m.a_sz + u * m.a_sz.conj()) * g);
    let da_sz = pi(
        (u * sp - v * m.sm) * g - eps * sz
            + (uc * a2_sm + v * (n_sm + m.sm) - vc * a2_sp - u * (n_sp + sp)) * (2.0 * g),
    ) - m.a_sz * half;
    let da_sm = pi(-u * (0.5 * g * (1.0 + sz)) - eps * m.sm + (vc * a2_sz + u * (n_sz + sz)) * g)
        - m.a_sm * half;
    let da_sp = pi(-v * (0.5 * g * (1.0 - sz)) - eps * sp - (uc * a2_sz + v * (n_sz + sz)) * g)
        - m.a_sp * half;

    QubitMoments {
        a: da,
        a2: da2,
        n: dn,
        sz: dsz,
        sm: dsm,
        a_sz: da_sz,
        a_sm: da_sm,
        a_sp: da_sp,
    }
}

fn oscillator_rhs(d: &Drive, anh: f64, m: &OscillatorMoments) -> OscillatorMoments {
    let Drive { g, eps, c, q, kappa } = *d;
    let cc = c.conj();
    let qc = q.conj();
    let (a, b) = (m.a, m.b);
    let bc = b.conj();
    let b_abs2 = b.norm_sqr();
    let nb = C64::new(m.nb, 0.0);
    let n = C64::new(m.n, 0.0);

    // centred second moments
    let nc = nb - b_abs2;
    let mc = m.b2 - b * b;
    let pc = m.abd - a * bc;
    let qcov = m.ab - a * b;

    let bd_b_b = bc * m.b2 + b * nb * 2.0 - b * b_abs2 * 2.0;
    let bd_b3 = bc * b * b * b + nc * b * b * 3.0 + mc * bc * b * 3.0 + nc * mc * 3.0;
    let a_bd_b_b = a * bc * b * b
        + pc * b * b
        + qcov * b_abs2 * 2.0
        + nc * a * b * 2.0
        + mc * a * bc
        + pc * mc
        + qcov * nc * 2.0;
    let a_bd_bd_b = a * bc * bc * b
        + pc * b_abs2 * 2.0
        + qcov * bc * bc
        + mc.conj() * a * b
        + nc * a * bc * 2.0
        + pc * nc * 2.0
        + qcov * mc.conj();

    let s_mean = qc * b + q * bc;
    let s_a = qc * m.ab + q * m.abd;
    let x_mean = c * a + cc * a.conj();
    let x_b = c * m.ab + cc * m.abd.conj();
    let a_x = c * m.a2 + cc * (n + 1.0);

    let da = -I * g * cc * s_mean - I * eps - a * (0.5 * kappa);
    let da2 = -I * 2.0 * g * cc * s_a - I * 2.0 * eps * a - m.a2 * kappa;
    let dn = -2.0 * g * (c * s_a).im - 2.0 * (eps.conj() * a).im - kappa * m.n;
    let db = I * (bd_b_b * anh - g * q * x_mean);
    let db2 = I * ((bd_b3 * 2.0 + m.b2) * anh - 2.0 * g * q * x_b);
    let dnb = -2.0 * g * (qc * x_b).im;
    let dab = I * (-g * cc * (qc * m.b2 + q * nb) - eps * b + a_bd_b_b * anh - g * q * a_x)
        - m.ab * (0.5 * kappa);
    let dabd = I * (-g * cc * (qc * (nb + 1.0) + q * m.b2.conj()) - eps * bc - a_bd_bd_b * anh
        + g * qc * a_x)
        - m.abd * (0.5 * kappa);

    OscillatorMoments {
        a: da,
        a2: da2,
        n: dn,
        b: db,
        b2: db2,
        nb: dnb,
        ab: dab,
        abd: dabd,
    }
}

/// Time derivative of the moment vector.
pub fn derive_moment_rhs(
    params: &SystemParams,
    schedule: &PulseSchedule,
    t: f64,
    m: &MomentState,
) -> MomentState {
    let d = Drive::at(params, schedule, t);
    match m {
        MomentState::Qubit(q) => MomentState::Qubit(qubit_rhs(&d, q)),
        MomentState::Oscillator(o) => {
            MomentState::Oscillator(oscillator_rhs(&d, params.anharmonicity, o))
        }
    }
}

impl Observed for MomentState {
    fn time(&self) -> f64 {
        f64::NAN
    }

    fn qubit_levels(&self) -> usize {
        2
    }

    fn qubit_population(&self, level: usize) -> f64 {
        match self {
            MomentState::Qubit(m) => {
                let p1 = 0.5 * (1.0 + m.sz);
                if level == 0 {
                    1.0 - p1
                } else {
                    p1
                }
            }
            MomentState::Oscillator(_) => f64::NAN,
        }
    }

    fn cavity_mean(&self) -> C64 {
        MomentState::cavity_mean(self)
    }

    fn cavity_photons(&self) -> f64 {
        MomentState::cavity_photons(self)
    }

    fn cavity_a2(&self) -> C64 {
        MomentState::cavity_a2(self)
    }
}

/// Integrates the closed moment equations, sampled at `samples`.
///
/// Invariant violations are logged, never clamped.
pub fn evolve_moments(
    initial: &MomentState,
    params: &SystemParams,
    schedule: &PulseSchedule,
    t0: f64,
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<MomentState>> {
    params.validate()?;
    schedule.validate()?;
    let model = initial.model();
    if model != params.qubit_model {
        return Err(Error::InvalidParameter(
            "moment set does not match the configured qubit model".into(),
        ));
    }
    let anh = params.anharmonicity;
    let cache = std::cell::Cell::new((t0, Drive::at(params, schedule, t0)));
    // the last two stages of a step share their time
    let drive = |t: f64| {
        let (t_last, d_last) = cache.get();
        if t == t_last {
            return d_last;
        }
        let d = Drive::at(params, schedule, t);
        cache.set((t, d));
        d
    };
    match model {
        QubitModel::Ideal => run_moments(model, initial, t0, samples, cfg, |t, y, dy| {
            let MomentState::Qubit(m) = MomentState::unpack(model, y) else {
                unreachable!()
            };
            let r = qubit_rhs(&drive(t), &m);
            dy[0] = r.a;
            dy[1] = r.a2;
            dy[2] = C64::new(r.n, 0.0);
            dy[3] = C64::new(r.sz, 0.0);
            dy[4] = r.sm;
            dy[5] = r.a_sz;
            dy[6] = r.a_sm;
            dy[7] = r.a_sp;
        }),
        QubitModel::Transmon => run_moments(model, initial, t0, samples, cfg, |t, y, dy| {
            let MomentState::Oscillator(m) = MomentState::unpack(model, y) else {
                unreachable!()
            };
            let r = MomentState::Oscillator(oscillator_rhs(&drive(t), anh, &m));
            dy.copy_from_slice(&r.pack());
        }),
    }
}

fn run_moments<F: Fn(f64, &[C64], &mut [C64])>(
    model: QubitModel,
    initial: &MomentState,
    t0: f64,
    samples: &[f64],
    cfg: &IntegratorConfig,
    rhs: F,
) -> Result<Trajectory<MomentState>> {
    let mut times = Vec::with_capacity(samples.len());
    let mut states = Vec::with_capacity(samples.len());
    let mut warned = false;
    let stats = integrate(
        &rhs,
        &initial.pack(),
        t0,
        samples,
        cfg,
        |t, y| {
            if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::Integration(format!("moment equations diverged at t={t}")));
            }
            let s = MomentState::unpack(model, y);
            if !warned {
                if let Some(msg) = s.invariant_violation() {
                    log::warn!("moment closure left the physical region at t={t:.3} ns: {msg}");
                    warned = true;
                }
            }
            times.push(t);
            states.push(s);
            Ok(())
        },
        |_, _| Ok(()),
    )?;
    Ok(Trajectory {
        times,
        states,
        stats,
    })
}

/// Agreement between the moment surrogate and the exact engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    /// max over time and both branches of `|⟨a⟩_moments − ⟨a⟩_exact|`
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub distance_exact: f64,
    pub distance_moments: f64,
    /// `|distance_moments − distance_exact| / distance_exact`
    pub distance_relative_error: f64,
}

/// Runs both engines for qubit levels 0 and 1 and compares the cavity centroids.
pub fn closure_error_report(
    params: &SystemParams,
    schedule: &PulseSchedule,
    cavity: &CavityStateSpec,
    samples: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ClosureReport> {
    use crate::hilbert::{qubit_basis, squeezed_coherent_state, tensor_state};
    use crate::integrate::evolve_schrodinger;
    use crate::models::{build_hamiltonian, Model};

    let h = build_hamiltonian(params, schedule, Model::Rabi)?;
    let cav = squeezed_coherent_state(cavity, params.dims.cavity_cutoff)?;
    let mut max_dev: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut finals_exact = [ZERO; 2];
    let mut finals_mom = [ZERO; 2];
    for x in 0..2 {
        let psi = tensor_state(&qubit_basis(params.dims.qubit_levels, x), &cav, 0.0)?;
        let exact = evolve_schrodinger(&psi, &h, samples, cfg)?;
        let m0 = MomentState::product(params.qubit_model, x, cavity);
        let mom = evolve_moments(&m0, params, schedule, 0.0, samples, cfg)?;
        for (e, m) in exact.states.iter().zip(&mom.states) {
            let dev = (e.cavity_mean() - m.cavity_mean()).norm();
            max_dev = max_dev.max(dev);
            sum_sq += dev * dev;
            count += 1;
        }
        finals_exact[x] = exact.last().cavity_mean();
        finals_mom[x] = mom.last().cavity_mean();
    }
    let de = (finals_exact[0] - finals_exact[1]).norm();
    let dm = (finals_mom[0] - finals_mom[1]).norm();
    Ok(ClosureReport {
        max_deviation: max_dev,
        rms_deviation: (sum_sq / count.max(1) as f64).sqrt(),
        distance_exact: de,
        distance_moments: dm,
        distance_relative_error: if de > 0.0 { (dm - de).abs() / de } else { (dm - de).abs() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HilbertDims;
    use crate::units::{ghz, mhz};

    fn params() -> SystemParams {
        SystemParams {
            omega_c: ghz(8.0),
            omega_q: ghz(7.0),
            anharmonicity: 0.0,
            g_max: mhz(50.0),
            kappa_int: 0.0,
            kappa_ext: 0.0,
            qubit_model: QubitModel::Ideal,
            dims: HilbertDims::new(2, 20).unwrap(),
        }
    }

    #[test]
    fn packing_round_trip() {
        let m = MomentState::Qubit(QubitMoments {
            a: C64::new(1.0, 2.0),
            a2: C64::new(3.0, 4.0),
            n: 5.0,
            sz: -0.5,
            sm: C64::new(0.1, 0.2),
            a_sz: C64::new(0.3, 0.4),
            a_sm: C64::new(0.5, 0.6),
            a_sp: C64::new(0.7, 0.8),
        });
        assert_eq!(MomentState::unpack(QubitModel::Ideal, &m.pack()), m);
        assert_eq!(MOMENT_DIMENSION, 16 - 2);
    }

    #[test]
    fn uncoupled_cavity_is_static_in_rotating_frame() {
        let p = params();
        let s = PulseSchedule::square(50.0, 60.0);
        let cav = CavityStateSpec {
            alpha: C64::new(2.0, 1.0),
            r: 0.4,
            theta: 0.2,
        };
        let m0 = MomentState::product(QubitModel::Ideal, 1, &cav);
        let dm = derive_moment_rhs(&p, &s, 1.3, &m0).pack();
        assert!(dm.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn damped_cavity_mean() {
        let mut p = params();
        p.kappa_ext = mhz(5.0);
        let s = PulseSchedule::square(50.0, 60.0);
        let alpha = C64::new(2.0, -1.0);
        let m0 = MomentState::product(QubitModel::Ideal, 0, &CavityStateSpec::coherent(alpha));
        let cfg = IntegratorConfig {
            max_step: 0.05,
            ..Default::default()
        };
        let traj = evolve_moments(&m0, &p, &s, 0.0, &[2.0, 10.0], &cfg).unwrap();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let k = p.total_kappa();
            let expect = alpha * (-0.5 * k * t).exp();
            assert!((st.cavity_mean() - expect).norm() < 1e-8);
            assert!((st.cavity_photons() - alpha.norm_sqr() * (-k * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn transmon_product_state_shape() {
        let cav = CavityStateSpec::coherent(C64::new(3.0, 0.0));
        let m = MomentState::product(QubitModel::Transmon, 1, &cav);
        let MomentState::Oscillator(o) = m else { panic!() };
        assert_eq!(o.nb, 1.0);
        assert_eq!(o.a, C64::new(3.0, 0.0));
        assert!((o.n - 9.0).abs() < 1e-15);
    }
}
