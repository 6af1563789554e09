// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use qnd_core::hilbert::{inner, partial_trace_pure, tensor_state, Space};
use qnd_core::metrics::{cavity_indistinguishability, gaussian_indistinguishability, uhlmann_indistinguishability};
use qnd_core::{CavityStateSpec, DensityState, HilbertDims, JointState, Subsystem, C64};

fn unit(v: Vec<(f64, f64)>) -> Vec<C64> {
    let mut v: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
    let n = qnd_core::hilbert::norm(&v).max(1e-300);
    v.iter_mut().for_each(|c| *c /= n);
    v
}

fn pure(v: &[C64]) -> DensityState {
    let m = nalgebra::DVector::from_column_slice(v);
    DensityState {
        matrix: &m * m.adjoint(),
        space: Space::Cavity(v.len()),
        time: 0.0,
    }
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_states_reduce_to_overlap(a in amplitudes(6), b in amplitudes(6)) {
        let (u, v) = (unit(a), unit(b));
        let f = uhlmann_indistinguishability(&pure(&u), &pure(&v)).unwrap();
        prop_assert!((f - inner(&u, &v).norm()).abs() < 1e-6);
    }

    #[test]
    fn symmetric_and_bounded(a in amplitudes(12), b in amplitudes(12)) {
        // mixed states from tracing out a two-level partner
        let dims = HilbertDims::new(2, 6).unwrap();
        let mk = |v: Vec<(f64, f64)>| JointState { amplitudes: unit(v), dims, time: 0.0 };
        let (x, y) = (mk(a), mk(b));
        let (rx, ry) = (partial_trace_pure(&x, Subsystem::Cavity), partial_trace_pure(&y, Subsystem::Cavity));
        let f = uhlmann_indistinguishability(&rx, &ry).unwrap();
        let g = uhlmann_indistinguishability(&ry, &rx).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&f));
        prop_assert!((f - g).abs() < 1e-7);
        let own = uhlmann_indistinguishability(&rx, &rx).unwrap();
        prop_assert!((own - 1.0).abs() < 1e-6);
        // the trace-norm route must agree with the density route
        let h = cavity_indistinguishability(&x, &y).unwrap();
        prop_assert!((f - h).abs() < 1e-6, "{f} vs {h}");
    }

    #[test]
    fn gaussian_formula_matches_coherent_overlap(ar in -3.0f64..3.0, ai in -3.0f64..3.0, br in -3.0f64..3.0, bi in -3.0f64..3.0) {
        let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
        let expected = (-(a - b).norm_sqr() / 2.0).exp();
        let got = gaussian_indistinguishability((a, a * a, a.norm_sqr()), (b, b * b, b.norm_sqr()));
        prop_assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

#[test]
fn squeezed_states_agree_with_gaussian_formula() {
    let cutoff = 80;
    let spec = |alpha: f64, theta: f64| CavityStateSpec {
        alpha: C64::new(alpha, 0.0),
        r: 0.5,
        theta,
    };
    let (s0, s1) = (spec(2.0, 0.0), spec(2.6, 0.0));
    let state = |s: &CavityStateSpec| {
        let v = qnd_core::hilbert::squeezed_coherent_state(s, cutoff).unwrap();
        tensor_state(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &v, 0.0).unwrap()
    };
    let exact = cavity_indistinguishability(&state(&s0), &state(&s1)).unwrap();
    let m = |s: &CavityStateSpec| (s.alpha, s.second_moment(), s.mean_photons());
    let gauss = gaussian_indistinguishability(m(&s0), m(&s1));
    assert!((exact - gauss).abs() < 1e-8, "{exact} vs {gauss}");
}
