// SPDX-License-Identifier: Apache-2.0

//! Unit conventions.
//!
//! Internally every rate and frequency is an angular frequency in rad/ms and
//! every time is in ms. The helpers below convert from the linear frequencies
//! people quote (Hz, kHz, MHz) by multiplying with 2π.
//!
//! The probe strength Ω carries units of (angular frequency)^(1/2) so that
//! `sqrt(kappa1) * Ω` is an angular frequency. A value quoted in `sqrt(kHz)` is
//! numerically the same in `ms^(-1/2)`, so [`sqrt_khz`] is the identity.

use std::f64::consts::TAU;

/// Linear frequency in Hz to rad/ms.
pub fn hz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Linear frequency in kHz to rad/ms.
pub fn khz(f: f64) -> f64 {
    TAU * f
}

/// Linear frequency in MHz to rad/ms.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e3
}

/// rad/ms back to linear Hz.
pub fn to_hz(w: f64) -> f64 {
    w / TAU * 1e3
}

/// rad/ms back to linear kHz.
pub fn to_khz(w: f64) -> f64 {
    w / TAU
}

/// rad/ms back to linear MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU * 1e-3
}

/// Nanoseconds to ms.
pub fn ns(t: f64) -> f64 {
    t * 1e-6
}

/// Probe strength quoted in sqrt(kHz) to ms^(-1/2).
pub fn sqrt_khz(v: f64) -> f64 {
    v
}

/// Zeeman splitting of the 1S0-3P1 line, 2π·2.1 MHz per gauss.
pub fn zeeman_splitting(b_gauss: f64) -> f64 {
    mhz(2.1 * b_gauss)
}
