// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact solutions and invariants the solvers must reproduce.

use qnd_core::hilbert::{
    coherent_state, hermitian_eigen, inner, partial_trace_pure, qubit_basis, tensor_state, CMatrix,
};
use qnd_core::integrate::{
    evolve_lindblad, evolve_schrodinger, sample_grid, CollapseRole, IntegratorConfig, Observed,
};
use qnd_core::metrics::{measurement_report, schmidt_disturbance, Engine, Protocol};
use qnd_core::models::{build_hamiltonian, hamiltonian_lab, to_interaction_frame, Model};
use qnd_core::moments::{closure_error_report, derive_moment_rhs, evolve_moments, MomentState};
use qnd_core::units::{ghz, mhz};
use qnd_core::{
    CavityStateSpec, HilbertDims, JointState, PulseSchedule, QubitModel, Subsystem, SystemParams, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(wc: f64, wq: f64, g: f64, model: QubitModel, levels: usize, cutoff: usize) -> SystemParams {
    SystemParams {
        omega_c: ghz(wc),
        omega_q: ghz(wq),
        anharmonicity: if model == QubitModel::Transmon { mhz(200.0) } else { 0.0 },
        g_max: mhz(g),
        kappa_int: 0.0,
        kappa_ext: 0.0,
        qubit_model: model,
        dims: HilbertDims::new(levels, cutoff).unwrap(),
    }
}

fn tight(p: &SystemParams) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        ..IntegratorConfig::for_params(p)
    }
}

fn product(p: &SystemParams, level: usize, alpha: C64) -> JointState {
    let cav = coherent_state(alpha, p.dims.cavity_cutoff).unwrap();
    tensor_state(&qubit_basis(p.dims.qubit_levels, level), &cav, 0.0).unwrap()
}

#[test]
fn resonant_vacuum_rabi_oscillation() {
    let p = system(8.0, 8.0, 50.0, QubitModel::Ideal, 2, 4);
    let h = build_hamiltonian(&p, &PulseSchedule::constant(), Model::Rwa).unwrap();
    let grid = sample_grid(0.0, 20.0, 81);
    let tr = evolve_schrodinger(&product(&p, 1, C64::new(0.0, 0.0)), &h, &grid, &tight(&p)).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let expected = (p.g_max * t).cos().powi(2);
        assert!((s.qubit_population(1) - expected).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn damped_cavity_decays_exponentially() {
    let mut p = system(8.0, 6.0, 0.0, QubitModel::Ideal, 2, 25);
    let kappa = mhz(5.0);
    p.kappa_ext = kappa;
    let alpha = C64::new(2.0, 0.0);
    let h = build_hamiltonian(&p, &PulseSchedule::constant(), Model::Rabi).unwrap();
    let grid = sample_grid(0.0, 40.0, 21);
    let rho = product(&p, 0, alpha).to_density();
    let tr = evolve_lindblad(&rho, &h, &[(CollapseRole::CavityAnnihilation, kappa)], &grid, &tight(&p)).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let a = alpha * (-kappa * t / 2.0).exp();
        assert!((s.cavity_mean() - a).norm() < 1e-7, "t = {t}");
        assert!((s.cavity_photons() - 4.0 * (-kappa * t).exp()).abs() < 1e-7, "t = {t}");
    }
}

#[test]
fn lab_and_interaction_frames_agree() {
    let p = system(8.0, 7.0, 100.0, QubitModel::Ideal, 2, 20);
    let schedule = PulseSchedule::erfc(3.0, 0.5, 1.5);
    let psi0 = product(&p, 1, C64::new(1.0, 0.0));
    let cfg = tight(&p);
    let lab = build_hamiltonian(&p, &schedule, Model::Lab).unwrap();
    let rabi = build_hamiltonian(&p, &schedule, Model::Rabi).unwrap();
    let a = evolve_schrodinger(&psi0, &lab, &[2.0], &cfg).unwrap();
    let b = evolve_schrodinger(&psi0, &rabi, &[2.0], &cfg).unwrap();
    let converted = to_interaction_frame(&p, a.last());
    let overlap = inner(&converted.amplitudes, &b.last().amplitudes);
    assert!((overlap.norm() - 1.0).abs() < 1e-7, "{overlap}");
    assert!((overlap - C64::new(1.0, 0.0)).norm() < 1e-6, "{overlap}");
}

#[test]
fn static_lab_hamiltonian_conserves_energy() {
    let p = system(8.0, 7.2, 80.0, QubitModel::Ideal, 2, 20);
    let schedule = PulseSchedule::constant();
    let h = build_hamiltonian(&p, &schedule, Model::Lab).unwrap();
    let hm: CMatrix = hamiltonian_lab(&p, &schedule, 0.0).unwrap();
    let energy = |s: &JointState| {
        let v = nalgebra::DVector::from_column_slice(&s.amplitudes);
        (v.adjoint() * &hm * &v)[(0, 0)].re
    };
    let psi0 = product(&p, 1, C64::new(1.2, 0.3));
    let tr = evolve_schrodinger(&psi0, &h, &sample_grid(0.0, 3.0, 7), &tight(&p)).unwrap();
    let e0 = energy(&psi0);
    for s in &tr.states {
        assert!((energy(s) - e0).abs() < 1e-7 * e0.abs(), "{} vs {e0}", energy(s));
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn lindblad_keeps_a_valid_density_matrix() {
    let mut p = system(8.2, 7.0, 100.0, QubitModel::Ideal, 2, 20);
    p.kappa_ext = mhz(20.0);
    let h = build_hamiltonian(&p, &PulseSchedule::erfc(2.0, 0.5, 2.5), Model::Rabi).unwrap();
    let rho = product(&p, 1, C64::new(1.5, 0.0)).to_density();
    let tr = evolve_lindblad(
        &rho,
        &h,
        &[(CollapseRole::CavityAnnihilation, p.kappa_ext)],
        &sample_grid(0.0, 3.0, 7),
        &IntegratorConfig::for_params(&p),
    )
    .unwrap();
    for s in &tr.states {
        assert!((s.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(s.hermiticity_error() < 1e-10);
        let (vals, _) = hermitian_eigen(&s.matrix);
        assert!(vals.iter().all(|&v| v > -1e-9), "{vals:?}");
    }
}

fn random_state(rng: &mut ChaCha8Rng, levels: usize, cutoff: usize) -> JointState {
    let dims = HilbertDims::new(levels, cutoff).unwrap();
    let mut v: Vec<C64> = (0..dims.joint())
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = qnd_core::hilbert::norm(&v);
    v.iter_mut().for_each(|c| *c /= n);
    JointState {
        amplitudes: v,
        dims,
        time: 0.0,
    }
}

#[test]
fn schmidt_form_reconstructs_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let psi = random_state(&mut rng, 2, 8);
        let rho_q = partial_trace_pure(&psi, Subsystem::Qubit).matrix;
        for x in 0..2 {
            let (sd, p) = schmidt_disturbance(&psi, x).unwrap();
            // flip probability equals the reduced population of the other level
            assert!((p - rho_q[(1 - x, 1 - x)].re).abs() < 1e-12);
            let (vals, _) = hermitian_eigen(&rho_q);
            assert!((sd.epsilon - vals[0]).abs() < 1e-12);
            let w = C64::from_polar(1.0, sd.theta);
            let mut rebuilt = vec![C64::new(0.0, 0.0); psi.amplitudes.len()];
            for q in 0..2 {
                for n in 0..8 {
                    rebuilt[q * 8 + n] = (1.0 - sd.epsilon).sqrt() * sd.major_qubit[q] * sd.major_cavity[n]
                        + w * sd.epsilon.sqrt() * sd.minor_qubit[q] * sd.minor_cavity[n];
                }
            }
            // equal up to a global phase
            assert!((inner(&rebuilt, &psi.amplitudes).norm() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn gaussian_closure_is_exact_for_linear_modes() {
    let mut p = system(8.0, 7.0, 100.0, QubitModel::Transmon, 10, 14);
    p.anharmonicity = 0.0;
    let schedule = PulseSchedule::erfc(2.0, 0.5, 2.5);
    let beta = C64::new(0.3, -0.1);
    let cavity = CavityStateSpec::coherent(C64::new(0.5, 0.2));
    let qubit = coherent_state(beta, p.dims.qubit_levels).unwrap();
    let cav = coherent_state(cavity.alpha, p.dims.cavity_cutoff).unwrap();
    let psi = tensor_state(&qubit, &cav, 0.0).unwrap();
    let h = build_hamiltonian(&p, &schedule, Model::Rabi).unwrap();
    let grid = sample_grid(0.0, 3.0, 13);
    let cfg = tight(&p);
    let exact = evolve_schrodinger(&psi, &h, &grid, &cfg).unwrap();
    let m0 = MomentState::oscillator_coherent(beta, &cavity);
    let mom = evolve_moments(&m0, &p, &schedule, 0.0, &grid, &cfg).unwrap();
    for (e, m) in exact.states.iter().zip(&mom.states) {
        let (MomentState::Oscillator(x), MomentState::Oscillator(y)) =
            (MomentState::from_joint(QubitModel::Transmon, e), m)
        else {
            unreachable!()
        };
        assert!((x.a - y.a).norm() < 1e-7, "{} vs {}", x.a, y.a);
        assert!((x.b - y.b).norm() < 1e-7, "{} vs {}", x.b, y.b);
        assert!((x.n - y.n).abs() < 1e-7);
        assert!((x.ab - y.ab).norm() < 1e-7);
    }
}

/// Central difference of exactly computed moments at `t`.
fn moment_derivative(p: &SystemParams, schedule: &PulseSchedule, psi0: &JointState, t: f64) -> (MomentState, MomentState) {
    let h = build_hamiltonian(p, schedule, Model::Rabi).unwrap();
    // small enough that the counter-rotating phase is resolved
    let dt = 1e-5;
    let cfg = IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        ..IntegratorConfig::for_params(p)
    };
    let tr = evolve_schrodinger(psi0, &h, &[t - dt, t, t + dt], &cfg).unwrap();
    let eps = p.anharmonicity;
    let linear = |s: &JointState| {
        // per-level frame to the linear ω_q frame
        let mut s = s.clone();
        let nc = s.dims.cavity_cutoff;
        for (i, c) in s.amplitudes.iter_mut().enumerate() {
            let k = (i / nc) as f64;
            *c *= C64::from_polar(1.0, 0.5 * eps * k * (k - 1.0) * s.time);
        }
        MomentState::from_joint(p.qubit_model, &s)
    };
    let m: Vec<MomentState> = tr.states.iter().map(linear).collect();
    let fd = |f: &dyn Fn(&MomentState) -> C64| (f(&m[2]) - f(&m[0])) / (2.0 * dt);
    let d = match (m[0], m[2]) {
        (MomentState::Qubit(_), MomentState::Qubit(_)) => {
            let g = |f: fn(&qnd_core::moments::QubitMoments) -> C64| {
                fd(&|s: &MomentState| match s {
                    MomentState::Qubit(q) => f(q),
                    _ => unreachable!(),
                })
            };
            MomentState::Qubit(qnd_core::moments::QubitMoments {
                a: g(|q| q.a),
                a2: g(|q| q.a2),
                n: g(|q| C64::new(q.n, 0.0)).re,
                sz: g(|q| C64::new(q.sz, 0.0)).re,
                sm: g(|q| q.sm),
                ..Default::default()
            })
        }
        _ => {
            let g = |f: fn(&qnd_core::moments::OscillatorMoments) -> C64| {
                fd(&|s: &MomentState| match s {
                    MomentState::Oscillator(q) => f(q),
                    _ => unreachable!(),
                })
            };
            MomentState::Oscillator(qnd_core::moments::OscillatorMoments {
                a: g(|q| q.a),
                a2: g(|q| q.a2),
                n: g(|q| C64::new(q.n, 0.0)).re,
                nb: g(|q| C64::new(q.nb, 0.0)).re,
                ..Default::default()
            })
        }
    };
    (d, derive_moment_rhs(p, schedule, t, &m[1]))
}

#[test]
fn qubit_moment_equations_match_exact_derivatives() {
    let p = system(8.0, 7.0, 100.0, QubitModel::Ideal, 2, 30);
    let schedule = PulseSchedule::erfc(2.0, 0.3, 3.0);
    let psi0 = product(&p, 1, C64::new(2.0, 0.0));
    // the exactly closed components: everything not needing a third moment
    let (MomentState::Qubit(fd), MomentState::Qubit(rhs)) = moment_derivative(&p, &schedule, &psi0, 1.3) else {
        unreachable!()
    };
    let scale = 1.0 + fd.a.norm();
    assert!((fd.a - rhs.a).norm() < 1e-5 * scale, "{} vs {}", fd.a, rhs.a);
    assert!((fd.a2 - rhs.a2).norm() < 1e-5 * scale);
    assert!((fd.n - rhs.n).abs() < 1e-5 * scale);
    assert!((fd.sz - rhs.sz).abs() < 1e-5 * scale, "{fd:?} vs {rhs:?}");
    assert!((fd.sm - rhs.sm).norm() < 1e-5 * scale);
}

#[test]
fn transmon_moment_equations_match_after_frame_change() {
    let p = system(8.0, 7.0, 100.0, QubitModel::Transmon, 6, 30);
    let schedule = PulseSchedule::erfc(2.0, 0.3, 3.0);
    let psi0 = product(&p, 1, C64::new(2.0, 0.0));
    let (MomentState::Oscillator(fd), MomentState::Oscillator(rhs)) =
        moment_derivative(&p, &schedule, &psi0, 1.3)
    else {
        unreachable!()
    };
    let scale = 1.0 + fd.a.norm();
    assert!((fd.a - rhs.a).norm() < 1e-5 * scale, "{} vs {}", fd.a, rhs.a);
    assert!((fd.a2 - rhs.a2).norm() < 1e-5 * scale);
    assert!((fd.n - rhs.n).abs() < 1e-5 * scale);
    assert!((fd.nb - rhs.nb).abs() < 1e-5 * scale);
}

#[test]
fn closure_is_exact_without_coupling() {
    let p = system(8.0, 7.0, 0.0, QubitModel::Ideal, 2, 30);
    let cavity = CavityStateSpec {
        alpha: C64::new(2.0, 1.0),
        r: 0.3,
        theta: 1.0,
    };
    let r = closure_error_report(
        &p,
        &PulseSchedule::constant(),
        &cavity,
        &sample_grid(0.0, 5.0, 11),
        &IntegratorConfig::for_params(&p),
    )
    .unwrap();
    assert!(r.max_deviation < 1e-8, "{r:?}");
    assert_eq!(r.distance_exact, 0.0);
}

#[test]
fn tightening_tolerances_converges() {
    let cavity = CavityStateSpec::coherent(C64::new(3.0, 0.0));
    let params = system(8.264, 6.998, 100.0, QubitModel::Ideal, 2, cavity.default_cutoff());
    let protocol = Protocol {
        params: params.clone(),
        schedule: PulseSchedule::erfc(2.0, 0.8, 4.2),
        cavity,
        tau: 5.0,
    };
    let at = |rtol: f64| {
        let cfg = IntegratorConfig {
            rel_tol: rtol,
            abs_tol: rtol * 1e-2,
            ..IntegratorConfig::for_params(&params)
        };
        measurement_report(&protocol, Engine::Exact, &cfg).unwrap().distinguishability
    };
    let (coarse, mid, fine) = (at(1e-5), at(1e-8), at(1e-11));
    assert!((mid - fine).abs() <= (coarse - fine).abs() + 1e-12);
    assert!((mid - fine).abs() < 1e-6, "{mid} vs {fine}");
}
