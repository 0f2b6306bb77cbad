// SPDX-License-Identifier: Apache-2.0

//! Second-order cumulant (mean-field) equations of motion.
//!
//! * [`driven`]: the coherent, probe-driven system in the [`Layout::Driven102`]
//!   layout.
//! * [`reduced`]: the coherence-free, undriven system ([`Layout::Reduced16`]).
//! * [`filter`]: the weakly coupled filter cavity used to sample emission
//!   spectra, driven one-way by a frozen steady state.
//! * [`closure`]: the third-order cumulant closure.
//!
//! Sums over atoms are replaced by `N` (single-atom terms) and `N − 1`
//! (pair terms) for identical atoms.
//!
//! [`Layout::Driven102`]: crate::model::Layout::Driven102
//! [`Layout::Reduced16`]: crate::model::Layout::Reduced16

pub mod closure;
pub mod driven;
pub mod filter;
pub mod generator;
pub mod reduced;

pub use closure::{close_third_order, ThirdMoment};
pub use driven::{driven_rhs, DrivenMoments, DrivenSystem};
pub use filter::{default_filter, filter_rhs, filter_steady, FilterMoments, FilterParams, FilterSystem};
pub use generator::AtomGenerator;
pub use reduced::{undriven_rhs, ReducedMoments, ReducedSystem};
