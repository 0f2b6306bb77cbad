// SPDX-License-Identifier: Apache-2.0

//! Three-level atoms (ground `g`, bright `B`, dark `D`) collectively coupled to a
//! single cavity mode.
//!
//! The crate is organised around the same objects a lab notebook would use:
//!
//! * [`model`]: physical parameters, units and the flat moment-vector layouts.
//! * [`dressed`]: analytic atom-light dressed states of the single-excitation
//!   ladder and the transmission peaks they predict.
//! * [`cumulant`]: second-order mean-field (cumulant) equations of motion, both
//!   the fully driven system and the coherence-free system with a filter cavity.
//! * [`exact`]: brute-force master-equation propagation for a handful of atoms,
//!   used as an oracle for the mean-field equations.
//! * [`dynamics`]: adaptive Runge-Kutta integration and steady-state solving.
//! * [`oracle`]: exact-versus-cumulant comparison suite.
//! * [`analysis`]: transmission and emission spectra, linewidths, pseudo-Dicke
//!   numbers and pump sweeps.
//!
//! All frequencies and rates are angular frequencies in rad/ms and all times are
//! in ms (see [`units`]).

pub mod analysis;
pub mod cumulant;
pub mod dressed;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod model;
pub mod oracle;
pub mod units;

pub use error::{Error, Result};
pub use model::{DriveConfig, DriveShape, Layout, MomentState, PhysicalParams};

/// Complex number type used throughout.
pub type C64 = num_complex::Complex64;
