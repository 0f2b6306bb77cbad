// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::model::Layout;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("moment layout mismatch: expected {expected:?}, found {found:?}")]
    LayoutMismatch { expected: Layout, found: Layout },

    #[error("state length {found} does not match layout {layout:?} (expected {expected})")]
    StateLength {
        layout: Layout,
        expected: usize,
        found: usize,
    },

    #[error("step size underflow at t = {t} ms (h = {h:e}); the system is likely stiff here")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite value in state at t = {t} ms")]
    NonFinite { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t} ms")]
    StepBudget { t: f64, max_steps: usize },

    #[error("steady state not converged: residual {residual:e} (threshold {threshold:e})")]
    NotConverged { residual: f64, threshold: f64 },

    #[error("Hilbert space too large: {atoms} atoms with photon cutoff {n_max}")]
    DimensionOverflow { atoms: usize, n_max: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("unsupported third-order moment: {0}")]
    UnsupportedMoment(String),

    #[error("trajectory not decayed: final/peak output ratio {ratio:e} exceeds {limit:e}")]
    SpectralLeakage { ratio: f64, limit: f64 },

    #[error("peak not resolved: {0}")]
    UnresolvedPeak(String),

    #[error("linewidth formula not applicable: {0}")]
    FormulaInvalid(String),

    #[error("no fixed point bracketed in ({lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("inconsistent correlations: J^2 = {0}")]
    NegativeJSquared(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
