// SPDX-License-Identifier: Apache-2.0

//! Sampled spectra, peak picking and widths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Transmission,
    Emission,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Angular frequency offset (rad/ms).
    pub offset: f64,
    pub intensity: f64,
    /// Phase in radians (transmission only).
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub offset: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub kind: SpectrumKind,
    /// Sorted by offset.
    pub points: Vec<SpectrumPoint>,
    /// Sorted by decreasing height.
    pub peaks: Vec<Peak>,
    /// Width of the dominant peak, when resolved.
    pub fwhm: Option<f64>,
}

impl SpectrumResult {
    pub fn new(kind: SpectrumKind, mut points: Vec<SpectrumPoint>, peak_threshold: f64) -> Self {
        points.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        let peaks = find_peaks(&points, peak_threshold);
        let mut sr = Self {
            kind,
            points,
            peaks,
            fwhm: None,
        };
        sr.fwhm = fwhm_with(&sr, FwhmMode::Dominant).ok();
        sr
    }

    pub fn max_intensity(&self) -> f64 {
        self.points.iter().map(|p| p.intensity).fold(0.0, f64::max)
    }

    /// Divides all intensities (and peak heights) by the maximum.
    pub fn normalized(mut self) -> Self {
        let m = self.max_intensity();
        if m > 0.0 {
            for p in &mut self.points {
                p.intensity /= m;
            }
            for p in &mut self.peaks {
                p.height /= m;
            }
        }
        self
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.offset).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.intensity).collect()
    }
}

/// Peaks whose prominence is below this fraction of their height are ripple.
pub const MIN_RELATIVE_PROMINENCE: f64 = 0.01;

/// Interior local maxima higher than `rel_threshold` times the global
/// maximum and prominent by at least [`MIN_RELATIVE_PROMINENCE`], sorted by
/// decreasing height. Plateaus count once.
pub fn find_peaks(points: &[SpectrumPoint], rel_threshold: f64) -> Vec<Peak> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let max = points.iter().map(|p| p.intensity).fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let y = points[i].intensity;
        if y > points[i - 1].intensity {
            // Extend over a plateau.
            let mut j = i;
            while j + 1 < n && points[j + 1].intensity == y {
                j += 1;
            }
            if j + 1 < n
                && points[j + 1].intensity < y
                && y >= rel_threshold * max
                && prominence(points, i, j) >= MIN_RELATIVE_PROMINENCE * y
            {
                let mid = (i + j) / 2;
                out.push(refine_vertex(points, mid));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out.sort_by(|a, b| b.height.total_cmp(&a.height));
    out
}

/// Height of the plateau `i..=j` above the higher of the two minima that
/// separate it from taller samples (or the ends of the data).
fn prominence(points: &[SpectrumPoint], i: usize, j: usize) -> f64 {
    let y = points[i].intensity;
    let mut left = y;
    for q in points[..i].iter().rev() {
        if q.intensity > y {
            break;
        }
        left = left.min(q.intensity);
    }
    let mut right = y;
    for q in &points[j + 1..] {
        if q.intensity > y {
            break;
        }
        right = right.min(q.intensity);
    }
    y - left.max(right)
}

/// Parabolic vertex through three neighbouring samples.
fn refine_vertex(points: &[SpectrumPoint], i: usize) -> Peak {
    let (x0, x1, x2) = (points[i - 1].offset, points[i].offset, points[i + 1].offset);
    let (y0, y1, y2) = (points[i - 1].intensity, points[i].intensity, points[i + 1].intensity);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return Peak {
            offset: x1,
            height: y1,
        };
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    Peak {
        offset: xv,
        height: yv.max(y1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FwhmMode {
    /// Full width at half maximum of the highest peak.
    Dominant,
    /// Distance between the two highest peaks.
    SidePeakSeparation,
    /// Side-peak separation for a symmetric doublet with a dip in between,
    /// otherwise the dominant width.
    Auto,
}

/// Width of `sr` in [`FwhmMode::Auto`].
pub fn fwhm(sr: &SpectrumResult) -> Result<f64> {
    fwhm_with(sr, FwhmMode::Auto)
}

/// Minimum number of samples at or above half maximum.
pub const MIN_POINTS_ABOVE_HALF: usize = 5;

pub fn fwhm_with(sr: &SpectrumResult, mode: FwhmMode) -> Result<f64> {
    let pts = &sr.points;
    match mode {
        FwhmMode::Dominant => dominant_width(pts),
        FwhmMode::SidePeakSeparation => {
            let p = find_peaks(pts, 0.0);
            if p.len() < 2 {
                return Err(Error::UnresolvedPeak("fewer than two peaks".into()));
            }
            Ok((p[0].offset - p[1].offset).abs())
        }
        FwhmMode::Auto => {
            let p = find_peaks(pts, 0.0);
            if p.len() >= 2 && p[1].height > 0.5 * p[0].height {
                let mid = 0.5 * (p[0].offset + p[1].offset);
                let y_mid = interpolate(pts, mid);
                if y_mid < 0.5 * p[1].height {
                    return Ok((p[0].offset - p[1].offset).abs());
                }
            }
            dominant_width(pts)
        }
    }
}

fn interpolate(pts: &[SpectrumPoint], x: f64) -> f64 {
    let k = pts.partition_point(|p| p.offset < x);
    if k == 0 {
        return pts[0].intensity;
    }
    if k >= pts.len() {
        return pts[pts.len() - 1].intensity;
    }
    let (a, b) = (pts[k - 1], pts[k]);
    a.intensity + (b.intensity - a.intensity) * (x - a.offset) / (b.offset - a.offset)
}

fn dominant_width(pts: &[SpectrumPoint]) -> Result<f64> {
    if pts.is_empty() {
        return Err(Error::UnresolvedPeak("empty spectrum".into()));
    }
    let (imax, ymax) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.intensity))
        .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let half = 0.5 * ymax;
    let mut lo = imax;
    while lo > 0 && pts[lo - 1].intensity >= half {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < pts.len() && pts[hi + 1].intensity >= half {
        hi += 1;
    }
    if lo == 0 || hi + 1 == pts.len() {
        return Err(Error::UnresolvedPeak(
            "half maximum not reached inside the grid; widen the frequency range".into(),
        ));
    }
    let above = hi - lo + 1;
    if above < MIN_POINTS_ABOVE_HALF {
        return Err(Error::UnresolvedPeak(format!(
            "only {above} samples above half maximum; use a finer frequency grid"
        )));
    }
    let cross = |a: SpectrumPoint, b: SpectrumPoint| {
        a.offset + (half - a.intensity) * (b.offset - a.offset) / (b.intensity - a.intensity)
    };
    let left = cross(pts[lo - 1], pts[lo]);
    let right = cross(pts[hi], pts[hi + 1]);
    Ok(right - left)
}
