// SPDX-License-Identifier: Apache-2.0

//! Pulsed-probe transmission `T(ω) = F[√κ2 ⟨a⟩](ω) / F[b_in](ω)`.
//!
//! The probe enters as `b_in(t) = −iΩ(t)`, the input field for which the
//! drive term `√κ1 Ω (a + a†)` is the standard input coupling. With this
//! choice an empty cavity transmits `T = √(κ1κ2)/(κ/2 + i(ω_c − ω))`.
//! Offsets are measured from the drive carrier; a component `e^{−iδt}` in
//! the drive frame is reported at offset `δ`.

use rustfft::FftPlanner;

use crate::cumulant::{DrivenMoments, DrivenSystem};
use crate::dynamics::{IntegrationConfig, Integrator};
use crate::error::{Error, Result};
use crate::model::{driven_offsets as off, DriveConfig, DriveShape, MomentState, Layout, PhysicalParams};
use crate::C64;

use super::spectrum::{SpectrumKind, SpectrumPoint, SpectrumResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Sampling interval; `None` uses σ/4.
    pub sample_dt: Option<f64>,
    /// Integration is stopped once the output stays below `leakage_limit`
    /// times its peak over a trailing window; reaching `t_max` first is an
    /// error.
    pub t_max: f64,
    pub leakage_limit: f64,
    /// Total FFT length is at least `zero_pad` times the record.
    pub zero_pad: usize,
    /// Frequencies where `|F[in]|` drops below this fraction of its maximum
    /// are not reported.
    pub min_input_fraction: f64,
    /// Optional cap on `|offset|`.
    pub band: Option<f64>,
    /// Relative height for reported peaks.
    pub peak_threshold: f64,
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-14,
            sample_dt: None,
            t_max: 5.0,
            leakage_limit: 1e-4,
            zero_pad: 4,
            min_input_fraction: 0.05,
            band: None,
            peak_threshold: 1e-3,
        }
    }
}

/// Time records of a pulsed run (drive frame).
#[derive(Debug, Clone)]
pub struct PulseRecord {
    pub dt: f64,
    pub input: Vec<C64>,
    pub output: Vec<C64>,
    /// Driven-layout states at each sample.
    pub states: Vec<Vec<f64>>,
}

/// Integrates the driven system from the all-ground vacuum through the pulse
/// and records input and output fields on a uniform grid.
pub fn record_pulse(p: &PhysicalParams, drive: DriveConfig, cfg: &TransmissionConfig) -> Result<PulseRecord> {
    if drive.shape != DriveShape::Gaussian {
        return Err(Error::InvalidParams(
            "transmission spectra need a Gaussian probe pulse".into(),
        ));
    }
    let q = p.with_drive(drive);
    let sys = DrivenSystem::new(&q)?;
    let dt = cfg.sample_dt.unwrap_or(drive.pulse_sigma / 4.0);
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("sample interval must be > 0".into()));
    }
    let icfg = IntegrationConfig::default()
        .with_tolerances(cfg.rtol, cfg.atol)
        .with_t_end(cfg.t_max)
        .with_max_step(dt);
    let y0 = MomentState::ground(Layout::Driven102).values;
    let mut it = Integrator::new(|t: f64, y: &[f64], dy: &mut [f64]| sys.rhs(t, y, dy), 0.0, &y0, icfg)?;
    let sk2 = p.kappa2.sqrt();
    let field = |y: &[f64]| C64::new(y[off::A], y[off::A + 1]) * sk2;
    let mut input = vec![C64::new(0.0, -drive.amplitude(0.0))];
    let mut output = vec![field(&y0)];
    let mut states = vec![y0.clone()];
    let mut buf = vec![0.0; y0.len()];
    let pulse_end = drive.pulse_center + 6.0 * drive.pulse_sigma;
    // Trailing window over which the output must stay small.
    let window = (20.0 * drive.pulse_sigma).max(20.0 * dt);
    let window_len = (window / dt).ceil() as usize;
    let mut peak: f64 = 0.0;
    let mut k = 1usize;
    loop {
        let t = it.step(cfg.t_max)?;
        while (k as f64) * dt <= t {
            let ts = k as f64 * dt;
            it.interpolate(ts, &mut buf);
            let a = field(&buf);
            peak = peak.max(a.norm());
            input.push(C64::new(0.0, -drive.amplitude(ts)));
            output.push(a);
            states.push(buf.clone());
            k += 1;
        }
        let tail_start = output.len().saturating_sub(window_len);
        let decayed = t > pulse_end
            && output.len() > window_len
            && output[tail_start..].iter().all(|z| z.norm() < cfg.leakage_limit * peak);
        if decayed {
            break;
        }
        if t >= cfg.t_max {
            let ratio = output.last().map_or(0.0, |z| z.norm()) / peak.max(f64::MIN_POSITIVE);
            return Err(Error::SpectralLeakage {
                ratio,
                limit: cfg.leakage_limit,
            });
        }
    }
    Ok(PulseRecord {
        dt,
        input,
        output,
        states,
    })
}

/// `Σ_n x_n e^{+iδ_k t_n}` on `δ_k = 2πk/(M dt)`, returned with ascending
/// offsets.
fn spectrum_of(x: &[C64], m: usize, dt: f64) -> (Vec<f64>, Vec<C64>) {
    let mut buf = vec![C64::new(0.0, 0.0); m];
    buf[..x.len()].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (m as f64 * dt);
    let half = m / 2;
    let mut freqs = Vec::with_capacity(m);
    let mut vals = Vec::with_capacity(m);
    for j in 0..m {
        // Reorder to k = −M/2 … M/2 − 1.
        let src = (j + half) % m;
        let kk = src as i64 - if src >= half { m as i64 } else { 0 };
        freqs.push(kk as f64 * dw);
        vals.push(buf[src]);
    }
    (freqs, vals)
}

/// Transmission spectrum of a Gaussian probe pulse.
pub fn transmission_spectrum(p: &PhysicalParams, drive: DriveConfig, cfg: &TransmissionConfig) -> Result<SpectrumResult> {
    let rec = record_pulse(p, drive, cfg)?;
    Ok(spectrum_from_record(&rec, cfg))
}

pub fn spectrum_from_record(rec: &PulseRecord, cfg: &TransmissionConfig) -> SpectrumResult {
    let m = (rec.input.len() * cfg.zero_pad.max(1)).next_power_of_two();
    let (freqs, fin) = spectrum_of(&rec.input, m, rec.dt);
    let (_, fout) = spectrum_of(&rec.output, m, rec.dt);
    let max_in = fin.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let points = freqs
        .iter()
        .zip(fin.iter().zip(&fout))
        .filter(|(w, (x, _))| {
            x.norm() >= cfg.min_input_fraction * max_in && cfg.band.map_or(true, |b| w.abs() <= b)
        })
        .map(|(&w, (x, y))| {
            let t = y / x;
            SpectrumPoint {
                offset: w,
                intensity: t.norm(),
                phase: Some(t.arg()),
            }
        })
        .collect();
    SpectrumResult::new(SpectrumKind::Transmission, points, cfg.peak_threshold)
}

/// Largest |⟨a⟩| reached during a record, for diagnostics.
pub fn peak_field(rec: &PulseRecord) -> f64 {
    rec.states
        .iter()
        .map(|y| DrivenMoments::unpack(y).a.norm())
        .fold(0.0, f64::max)
}
