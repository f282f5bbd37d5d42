//! Numerical laboratory for q-expectation dynamics.
//!
//! The crate is organised around one small linear-algebra substrate and four
//! experiment engines built on top of it:
//!
//! * [`quantum_core`]: Hermitian operators, density operators, tensor
//!   composition, partial traces and unitary evolution.
//! * [`ehrenfest`]: 1-D grid dynamics, classical trajectories and the
//!   Taylor-type bounds relating `<f(q)>` to `f(<q>)`.
//! * [`spectral_probe`]: q-expectation signals of discrete-spectrum systems
//!   driving a damped oscillator, resonance scans and peak recovery.
//! * [`born_emergence`]: pointer statistics for a qubit coupled to an
//!   environment, both from a stochastic model and from an exact small
//!   universe.
//! * [`detectors`]: error bookkeeping, counting detectors, a bistable
//!   Langevin pointer and spin-ensemble statistics.
//!
//! [`experiments`] wires these into configurable, seed-deterministic runs
//! that write CSV/JSON artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod born_emergence;
pub mod detectors;
pub mod ehrenfest;
mod error;
pub mod experiments;
pub mod quantum_core;
pub mod rng;
pub mod spectral_probe;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
