// SPDX-License-Identifier: Apache-2.0

//! Pump-rate sweeps with warm-started steady states.

use serde::{Deserialize, Serialize};

use crate::cumulant::{ReducedMoments, ReducedSystem};
use crate::dynamics::{jacobian, SteadyConfig, SteadyState};
use crate::error::{Error, Result};
use crate::model::PhysicalParams;

use super::dicke::{dicke_from_moments, DickePoint};
use super::emission::{emission_spectrum_from, reduced_steady_state, EmissionConfig};
use super::linewidth::{implicit_from, semianalytic_from};
use super::spectrum::{fwhm_with, FwhmMode};
use crate::cumulant::DrivenMoments;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub steady: SteadyConfig,
    /// Filter grid (offsets) for an emission spectrum at every row.
    pub spectrum_grid: Option<Vec<f64>>,
    pub emission: EmissionConfig,
    pub fwhm_mode: FwhmMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            steady: SteadyConfig::default(),
            spectrum_grid: None,
            emission: EmissionConfig::default(),
            fwhm_mode: FwhmMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Balanced pump rate `η = η+ = η−`.
    pub eta: f64,
    pub photon_number: Option<f64>,
    pub bb: Option<f64>,
    pub dd: Option<f64>,
    pub gg: Option<f64>,
    pub im_db: Option<f64>,
    pub linewidth_semianalytic: Option<f64>,
    pub linewidth_implicit: Option<f64>,
    pub fwhm: Option<f64>,
    pub dicke: Option<DickePoint>,
    pub residual: Option<f64>,
    /// Solver or formula diagnostics for the row.
    pub errors: Vec<String>,
}

impl SweepRow {
    fn empty(eta: f64) -> Self {
        Self {
            eta,
            photon_number: None,
            bb: None,
            dd: None,
            gg: None,
            im_db: None,
            linewidth_semianalytic: None,
            linewidth_implicit: None,
            fwhm: None,
            dicke: None,
            residual: None,
            errors: Vec::new(),
        }
    }
}

/// Relative size of the largest admissible growth rate of the linearised
/// flow; the conserved population gives one zero eigenvalue.
const STABILITY_SLACK: f64 = 1e-6;

fn physical(m: &ReducedMoments) -> bool {
    let pop = |x: f64| (-1e-9..=1.0 + 1e-9).contains(&x);
    m.n >= 0.0 && pop(m.bb) && pop(m.gg) && pop(m.dd)
}

fn stable(p: &PhysicalParams, y: &[f64]) -> Result<bool> {
    let sys = ReducedSystem::new(p)?;
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| sys.rhs(t, y, dy);
    let eig = jacobian(&mut rhs, y).complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(eig.iter().all(|z| z.re <= STABILITY_SLACK * scale))
}

/// Newton from the neighbouring steady state, accepted only when it lands
/// on a physical, linearly stable fixed point; a full time march from the
/// ground state otherwise.
fn solve_row(q: &PhysicalParams, warm: Option<&[f64]>, cfg: &SteadyConfig) -> Result<(ReducedMoments, SteadyState)> {
    if let Some(w) = warm {
        let newton_only = SteadyConfig {
            integration: cfg.integration.with_t_end(0.0),
            ..*cfg
        };
        if let Ok((m, ss)) = reduced_steady_state(q, Some(w), &newton_only) {
            if physical(&m) && stable(q, &ss.state)? {
                return Ok((m, ss));
            }
        }
    }
    reduced_steady_state(q, None, cfg)
}

/// Steady-state observables along an ascending grid of balanced pump rates.
/// Failures are recorded per row and the sweep continues.
pub fn pump_sweep(p: &PhysicalParams, eta_grid: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if eta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("eta grid must be strictly ascending".into()));
    }
    let gamma = p.big_gamma_plus();
    let mut warm: Option<Vec<f64>> = None;
    let mut rows = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        let q = p.with_pump(eta);
        let mut row = SweepRow::empty(eta);
        match solve_row(&q, warm.as_deref(), &cfg.steady) {
            Ok((m, ss)) => {
                warm = Some(ss.state.clone());
                row.photon_number = Some(m.n);
                row.bb = Some(m.bb);
                row.dd = Some(m.dd);
                row.gg = Some(m.gg);
                row.im_db = Some(m.db().im);
                row.residual = Some(ss.residual);
                match semianalytic_from(&q, &m) {
                    Ok(g) => row.linewidth_semianalytic = Some(g),
                    Err(e) => row.errors.push(format!("semianalytic: {e}")),
                }
                match implicit_from(&q, &m) {
                    Ok(g) => row.linewidth_implicit = Some(g.gamma),
                    Err(e) => row.errors.push(format!("implicit: {e}")),
                }
                match dicke_from_moments(&DrivenMoments::from_reduced(&m), q.n()) {
                    Ok(mut d) => {
                        d.eta_over_gamma = if gamma > 0.0 { eta / gamma } else { f64::INFINITY };
                        row.dicke = Some(d);
                    }
                    Err(e) => row.errors.push(format!("dicke: {e}")),
                }
                if let Some(grid) = &cfg.spectrum_grid {
                    match emission_spectrum_from(&q, &m, grid, &cfg.emission)
                        .and_then(|sr| fwhm_with(&sr, cfg.fwhm_mode))
                    {
                        Ok(w) => row.fwhm = Some(w),
                        Err(e) => row.errors.push(format!("spectrum: {e}")),
                    }
                }
            }
            Err(e) => row.errors.push(format!("steady state: {e}")),
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::khz;

    #[test]
    fn unpumped_row_is_dark() {
        let p = PhysicalParams::new(10_000, khz(7.5), khz(150.0), khz(7.5));
        let rows = pump_sweep(&p, &[0.0, khz(1.0)], &SweepConfig::default()).unwrap();
        assert_eq!(rows[0].photon_number, Some(0.0));
        assert!(rows[1].photon_number.unwrap() > 0.0);
    }

    #[test]
    fn warm_rows_match_cold_solves() {
        let gamma = khz(7.5);
        let p = PhysicalParams::new(250_000, khz(7.5), khz(150.0), gamma).with_zeeman(crate::units::mhz(0.1));
        let grid = [gamma, 2.0 * gamma];
        let rows = pump_sweep(&p, &grid, &SweepConfig::default()).unwrap();
        for (row, &eta) in rows.iter().zip(&grid) {
            let (m, _) = reduced_steady_state(&p.with_pump(eta), None, &SteadyConfig::default()).unwrap();
            let n = row.photon_number.unwrap();
            assert!((n - m.n).abs() < 1e-6 * m.n, "{n} vs {}", m.n);
        }
    }

    #[test]
    fn descending_grid_is_rejected() {
        let p = PhysicalParams::new(10, khz(7.5), khz(150.0), khz(7.5));
        assert!(pump_sweep(&p, &[2.0, 1.0], &SweepConfig::default()).is_err());
    }
}
