// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and optimization of pulsed, transverse-coupling qubit readout.
//!
//! A qubit (ideal two-level or transmon) couples to a single cavity mode
//! through `g(t) B (a + a†)` with a coupler envelope `g(t)` that is switched
//! on and off. The crate evolves the joint state exactly (Schrödinger or
//! Lindblad) or through a Gaussian moment closure, scores readout protocols
//! by the distinguishability of the two qubit-conditioned cavity states and
//! the disturbance they inflict on the qubit, and searches protocol space.
//!
//! Units: time in ns, every frequency and rate as an angular frequency in
//! rad/ns. Use [`units`] to convert from the cyclic GHz/MHz/kHz values.

pub mod hilbert;
pub mod integrate;
pub mod metrics;
pub mod models;
pub mod moments;
pub mod presets;
pub mod search;

pub use hilbert::{CavityStateSpec, DensityState, HilbertDims, JointState, Subsystem, C64};
pub use models::{Envelope, GaussianDrive, PulseSchedule, QubitModel, SustainDrive, SystemParams};

use thiserror::Error;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix has a negative eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("zero detuning: the dispersive model is singular")]
    SingularDetuning,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Cyclic-frequency to angular-frequency conversion (rad/ns).
pub mod units {
    use std::f64::consts::TAU;

    pub fn ghz(f: f64) -> f64 {
        TAU * f
    }

    pub fn mhz(f: f64) -> f64 {
        TAU * f * 1e-3
    }

    pub fn khz(f: f64) -> f64 {
        TAU * f * 1e-6
    }

    pub fn to_ghz(w: f64) -> f64 {
        w / TAU
    }

    pub fn to_mhz(w: f64) -> f64 {
        w / TAU * 1e3
    }

    pub fn to_khz(w: f64) -> f64 {
        w / TAU * 1e6
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn cyclic_to_angular() {
            let turn = 2.0 * std::f64::consts::PI;
            assert!((ghz(1.0) - turn).abs() < 1e-15);
            assert!((mhz(100.0) - 0.1 * turn).abs() < 1e-15);
            assert!((khz(10.0) - 1e-5 * turn).abs() < 1e-18);
            assert!((to_mhz(mhz(353.71)) - 353.71).abs() < 1e-12);
            assert!((to_ghz(ghz(8.128)) - 8.128).abs() < 1e-12);
            assert!((to_khz(khz(10.0)) - 10.0).abs() < 1e-12);
        }
    }
}
