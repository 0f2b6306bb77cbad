// SPDX-License-Identifier: Apache-2.0

//! Emission spectra sampled by a weakly coupled filter cavity.

use rayon::prelude::*;

use crate::cumulant::{default_filter, FilterParams, FilterSystem, ReducedMoments, ReducedSystem};
use crate::dynamics::{steady_state, SteadyConfig, SteadyState};
use crate::error::{Error, Result};
use crate::model::{Layout, MomentState, PhysicalParams};

use super::linewidth;
use super::spectrum::{find_peaks, SpectrumKind, SpectrumPoint, SpectrumResult, MIN_POINTS_ABOVE_HALF};

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionConfig {
    /// Filter cavity; `None` picks [`default_filter`] from the expected
    /// linewidth.
    pub filter: Option<FilterParams>,
    pub normalize: bool,
    /// Refine the grid around detected peaks.
    pub refine: bool,
    /// Spacing reduction per refinement level.
    pub refine_factor: usize,
    pub max_refine_levels: usize,
    /// At most this many peaks are refined.
    pub max_refined_peaks: usize,
    /// Peaks lower than this fraction of the maximum are ignored.
    pub peak_threshold: f64,
    /// Refinement stops once a peak has this many samples above half height.
    pub resolved_points: usize,
    pub steady: SteadyConfig,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        Self {
            filter: None,
            normalize: false,
            refine: true,
            refine_factor: 10,
            max_refine_levels: 8,
            max_refined_peaks: 3,
            peak_threshold: 1e-6,
            resolved_points: 11,
            steady: SteadyConfig::default(),
        }
    }
}

/// Converged steady state of the coherence-free system, started from `warm`
/// or from the all-ground vacuum.
pub fn reduced_steady_state(
    p: &PhysicalParams,
    warm: Option<&[f64]>,
    cfg: &SteadyConfig,
) -> Result<(ReducedMoments, SteadyState)> {
    let sys = ReducedSystem::new(p)?;
    let ground = MomentState::ground(Layout::Reduced16).values;
    let y0 = warm.unwrap_or(&ground);
    let ss = steady_state(
        |t, y, dy| sys.rhs(t, y, dy),
        y0,
        cfg,
        &[ReducedSystem::population_functional()],
    )?
    .require_converged(cfg.tol)?;
    Ok((ReducedMoments::unpack(&ss.state), ss))
}

/// Filter used when none is configured: widths from the semi-analytic
/// linewidth when it applies, κ otherwise.
pub fn auto_filter(p: &PhysicalParams, main: &ReducedMoments) -> FilterParams {
    let expected = linewidth::semianalytic_from(p, main)
        .ok()
        .filter(|g| *g > 0.0)
        .unwrap_or(p.kappa());
    default_filter(p.kappa(), expected)
}

fn sample(sys: &ReducedSystemRef, offsets: &[f64]) -> Result<Vec<SpectrumPoint>> {
    offsets
        .par_iter()
        .map(|&w| {
            let fs = FilterSystem::new(sys.p, sys.filter.at(w), sys.main)?;
            let x = fs.steady()?;
            Ok(SpectrumPoint {
                offset: w,
                intensity: x.bd_b,
                phase: None,
            })
        })
        .collect()
}

struct ReducedSystemRef<'a> {
    p: &'a PhysicalParams,
    main: &'a ReducedMoments,
    filter: FilterParams,
}

/// Emission spectrum `⟨b†b⟩(ω_f)` over `f_grid` (filter offsets from the
/// frame carrier), with optional adaptive refinement.
pub fn emission_spectrum(p: &PhysicalParams, f_grid: &[f64], cfg: &EmissionConfig) -> Result<SpectrumResult> {
    let (main, _) = reduced_steady_state(p, None, &cfg.steady)?;
    emission_spectrum_from(p, &main, f_grid, cfg)
}

/// As [`emission_spectrum`] for an already converged main state.
pub fn emission_spectrum_from(
    p: &PhysicalParams,
    main: &ReducedMoments,
    f_grid: &[f64],
    cfg: &EmissionConfig,
) -> Result<SpectrumResult> {
    if p.eta_plus <= 0.0 && p.eta_minus <= 0.0 {
        return Err(Error::InvalidParams("emission spectra need incoherent pumping".into()));
    }
    if f_grid.len() < 3 {
        return Err(Error::InvalidParams("frequency grid needs at least 3 points".into()));
    }
    let filter = cfg.filter.unwrap_or_else(|| auto_filter(p, main));
    let ctx = ReducedSystemRef { p, main, filter };
    let mut pts = sample(&ctx, f_grid)?;
    sort_dedup(&mut pts);
    if cfg.refine {
        for _ in 0..cfg.max_refine_levels {
            let extra = refinement(&pts, cfg);
            if extra.is_empty() {
                break;
            }
            pts.extend(sample(&ctx, &extra)?);
            sort_dedup(&mut pts);
        }
    }
    for q in &mut pts {
        // Round-off of the linear solve far in the tails.
        if q.intensity < 0.0 && q.intensity > -1e-9 * q.intensity.abs().max(1.0) {
            q.intensity = q.intensity.max(0.0);
        }
    }
    let sr = SpectrumResult::new(SpectrumKind::Emission, pts, cfg.peak_threshold);
    Ok(if cfg.normalize { sr.normalized() } else { sr })
}

fn sort_dedup(pts: &mut Vec<SpectrumPoint>) {
    pts.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    pts.dedup_by(|a, b| a.offset == b.offset);
}

/// New sample offsets around insufficiently resolved peaks.
fn refinement(pts: &[SpectrumPoint], cfg: &EmissionConfig) -> Vec<f64> {
    let peaks = find_peaks(pts, cfg.peak_threshold);
    let mut extra = Vec::new();
    for pk in peaks.iter().take(cfg.max_refined_peaks) {
        let i = pts.partition_point(|q| q.offset < pk.offset);
        let i = i.min(pts.len() - 1);
        // Index of the sample closest to the vertex.
        let c = if i > 0 && (pts[i - 1].offset - pk.offset).abs() < (pts[i].offset - pk.offset).abs() {
            i - 1
        } else {
            i
        };
        let half = 0.5 * pts[c].intensity;
        let mut lo = c;
        while lo > 0 && pts[lo - 1].intensity >= half {
            lo -= 1;
        }
        let mut hi = c;
        while hi + 1 < pts.len() && pts[hi + 1].intensity >= half {
            hi += 1;
        }
        if hi - lo + 1 >= cfg.resolved_points.max(MIN_POINTS_ABOVE_HALF) {
            continue;
        }
        let left = pts[lo.saturating_sub(1)].offset;
        let right = pts[(hi + 1).min(pts.len() - 1)].offset;
        let span = right - left;
        if !(span > 0.0) || span <= 1e-12 * pk.offset.abs().max(1.0) {
            continue;
        }
        let n = 2 * cfg.refine_factor * (hi - lo + 2);
        for k in 1..n {
            extra.push(left + span * k as f64 / n as f64);
        }
    }
    extra.sort_by(f64::total_cmp);
    extra.dedup();
    extra
}
