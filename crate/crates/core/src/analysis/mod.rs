// SPDX-License-Identifier: Apache-2.0

//! Physics outputs built on the moment equations: transmission and emission
//! spectra, linewidths, pseudo-Dicke numbers and pump sweeps.

pub mod dicke;
pub mod emission;
pub mod linewidth;
pub mod spectrum;
pub mod sweep;
pub mod transmission;

pub use dicke::{dicke_from_moments, dicke_numbers, DickePoint};
pub use emission::{emission_spectrum, emission_spectrum_from, reduced_steady_state, EmissionConfig};
pub use linewidth::{
    linewidth_rate_form, linewidth_implicit, linewidth_semianalytic, ImplicitLinewidth,
};
pub use spectrum::{find_peaks, fwhm, fwhm_with, FwhmMode, Peak, SpectrumKind, SpectrumPoint, SpectrumResult};
pub use sweep::{pump_sweep, SweepConfig, SweepRow};
pub use transmission::{record_pulse, spectrum_from_record, transmission_spectrum, PulseRecord, TransmissionConfig};
