//! Hybrid physics + learned force-correction time integration.
//!
//! A cheap low-fidelity equation of motion is closed by a feed-forward network
//! that predicts the missing force one step ahead from a short history of the
//! response. The crate contains the pieces needed to reproduce the method on a
//! wave-excited Duffing oscillator and on a six-degree-of-freedom ship model:
//!
//! * [`wave`]: spectra, random-phase realizations, zero-up-crossing counts
//! * [`integrator`]: BDF2/Newton stepping, Euler kinematics, constraints
//! * [`duffing`]: reference solver, forcing models A-E, correction extraction
//! * [`corrector`]: stencil datasets, network training and inference
//! * [`vessel`]: ship matrices, head-seas excitation, synthetic reference data
//! * [`metrics`]: L2, L-infinity and Jensen-Shannon divergence
//! * [`eigen`]: linear stability of the low-fidelity models
//! * [`experiment`]: configuration-driven studies with provenance

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corrector;
pub mod duffing;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod integrator;
pub mod metrics;
pub mod trajectory;
pub mod vessel;
pub mod wave;

pub use error::{Error, ErrorCategory, Result};
pub use trajectory::{Channel, Trajectory};
