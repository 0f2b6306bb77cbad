// SPDX-License-Identifier: Apache-2.0

//! Exact-oracle versus cumulant comparisons for two atoms.

use serde::{Deserialize, Serialize};

use crate::analysis::reduced_steady_state;
use crate::cumulant::{DrivenMoments, DrivenSystem};
use crate::dynamics::{integrate, IntegrationConfig, SteadyConfig};
use crate::error::{Error, Result};
use crate::exact::{build_generator, exact_driven_moments, DensityState};
use crate::model::{op_index, DriveConfig, Layout, Level, MomentState, PhysicalParams};
use crate::units::{khz, mhz};

/// Magnitudes below this are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    /// Largest relative deviation over the compared quantities.
    pub max_rel_dev: f64,
    /// Quantity attaining `max_rel_dev`.
    pub worst: String,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub n_atoms: u64,
    pub steady_cutoff: usize,
    pub driven_cutoff: usize,
    pub steady_tolerance: f64,
    pub driven_tolerance: f64,
    /// Constant drive strength for the trajectory comparison (ms^(-1/2)).
    pub drive: f64,
    /// Trajectory length in units of 1/κ.
    pub kappa_times: f64,
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_atoms: 2,
            steady_cutoff: 8,
            driven_cutoff: 6,
            steady_tolerance: 0.1,
            driven_tolerance: 1e-3,
            drive: 1.0,
            kappa_times: 0.2,
            samples: 20,
        }
    }
}

/// Balanced-rate pumped pair used by the steady comparisons.
pub fn oracle_params(n_atoms: u64, delta: f64) -> PhysicalParams {
    let gamma = khz(7.5);
    PhysicalParams::new(n_atoms, khz(7.5), khz(150.0), gamma)
        .with_pump(0.5 * gamma)
        .with_zeeman(delta)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(ABS_FLOOR)
}

fn worst(devs: &[(String, f64)]) -> (String, f64) {
    devs.iter()
        .cloned()
        .fold((String::new(), 0.0), |acc, d| if d.1 > acc.1 { d } else { acc })
}

fn check(name: String, devs: &[(String, f64)], tolerance: f64) -> OracleCheck {
    let (w, max_rel_dev) = worst(devs);
    OracleCheck {
        name,
        max_rel_dev,
        worst: w,
        tolerance,
        passed: max_rel_dev <= tolerance,
    }
}

/// Steady photon number, populations and `Im⟨A_DB⟩` of the direct oracle
/// solve against the coherence-free cumulant steady state.
pub fn steady_check(p: &PhysicalParams, cfg: &OracleConfig) -> Result<OracleCheck> {
    let sys = build_generator(p, cfg.n_atoms as usize, cfg.steady_cutoff)?;
    let (d, _) = sys.steady_direct()?;
    let e = exact_driven_moments(&d);
    let (r, _) = reduced_steady_state(p, None, &SteadyConfig::default())?;
    let db = op_index(Level::D, Level::B);
    let pairs = [
        ("n", e.n, r.n),
        ("gg", e.s[op_index(Level::G, Level::G)].re, r.gg),
        ("bb", e.s[op_index(Level::B, Level::B)].re, r.bb),
        ("dd", e.s[op_index(Level::D, Level::D)].re, r.dd),
        ("im_db", e.s[db].im, r.db().im),
    ];
    let devs: Vec<(String, f64)> = pairs.iter().map(|(k, a, b)| (k.to_string(), rel(*a, *b))).collect();
    Ok(check(
        format!("steady N={} n_max={} delta={:.6e}", cfg.n_atoms, cfg.steady_cutoff, p.delta_zeeman),
        &devs,
        cfg.steady_tolerance,
    ))
}

/// Short weakly driven trajectories from the all-ground vacuum. Each moment
/// is compared relative to its largest magnitude along the exact trajectory.
pub fn driven_check(p: &PhysicalParams, cfg: &OracleConfig) -> Result<OracleCheck> {
    let q = p.with_drive(DriveConfig::constant(cfg.drive));
    let t_end = cfg.kappa_times / q.kappa();
    let stride = t_end / cfg.samples as f64;
    let icfg = IntegrationConfig::default()
        .with_tolerances(1e-10, 1e-16)
        .with_t_end(t_end)
        .with_stride(stride);
    let sys = build_generator(&q, cfg.n_atoms as usize, cfg.driven_cutoff)?;
    let exact = sys.evolve(&DensityState::ground(sys.space()), &icfg)?;
    let red = DrivenSystem::new(&q)?;
    let traj = integrate(
        |t, y, dy| red.rhs(t, y, dy),
        0.0,
        &MomentState::ground(Layout::Driven102).values,
        &icfg,
    )?;
    if traj.times.len() != exact.len() {
        return Err(Error::InvalidParams("oracle and cumulant sample grids differ".into()));
    }
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut push = |name: String, a: f64, b: f64, idx: usize| {
        if idx == 0 {
            series.push((name, vec![(a, b)]));
        } else if let Some(s) = series.iter_mut().find(|s| s.0 == name) {
            s.1.push((a, b));
        }
    };
    for (i, ((_, d), y)) in exact.iter().zip(&traj.states).enumerate() {
        let e = exact_driven_moments(d);
        let c = DrivenMoments::unpack(y);
        push("a.re".into(), e.a.re, c.a.re, i);
        push("a.im".into(), e.a.im, c.a.im, i);
        push("n".into(), e.n, c.n, i);
        for (mu, lbl) in [
            (op_index(Level::G, Level::G), "gg"),
            (op_index(Level::B, Level::B), "bb"),
            (op_index(Level::D, Level::D), "dd"),
            (op_index(Level::G, Level::B), "gb"),
            (op_index(Level::G, Level::D), "gd"),
        ] {
            push(format!("{lbl}.re"), e.s[mu].re, c.s[mu].re, i);
            push(format!("{lbl}.im"), e.s[mu].im, c.s[mu].im, i);
        }
    }
    let devs: Vec<(String, f64)> = series
        .into_iter()
        .map(|(name, v)| {
            let scale = v.iter().map(|x| x.0.abs()).fold(0.0, f64::max).max(ABS_FLOOR);
            let dev = v.iter().map(|x| (x.0 - x.1).abs()).fold(0.0, f64::max) / scale;
            (name, if scale > ABS_FLOOR { dev } else { 0.0 })
        })
        .collect();
    Ok(check(
        format!(
            "driven N={} n_max={} delta={:.6e} t<={}/kappa",
            cfg.n_atoms, cfg.driven_cutoff, p.delta_zeeman, cfg.kappa_times
        ),
        &devs,
        cfg.driven_tolerance,
    ))
}

/// Steady and driven comparisons at `Δ ∈ {0, 2π·0.1 MHz}`.
pub fn oracle_suite(cfg: &OracleConfig) -> Result<Vec<OracleCheck>> {
    let mut out = Vec::new();
    for delta in [0.0, mhz(0.1)] {
        let p = oracle_params(cfg.n_atoms, delta);
        out.push(steady_check(&p, cfg)?);
        out.push(driven_check(&p, cfg)?);
    }
    Ok(out)
}
