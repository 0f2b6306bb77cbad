// SPDX-License-Identifier: Apache-2.0

//! Atom-light dressed states of the single-collective-excitation ladder.
//!
//! For each photon number `n` the states `|D⟩|n⟩`, `|B⟩|n⟩` and `|G⟩|n+1⟩`
//! span a closed 3×3 block. The bright collective state couples to the cavity
//! with `g_n = sqrt(n+1) sqrt(2N) g`; the Zeeman splitting mixes bright and
//! dark with strength `Δ/2`.
//!
//! Shifts are measured from `(n+1) ω_c`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::model::PhysicalParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Zero,
    Minus,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Plus, Branch::Zero, Branch::Minus];

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Zero => "zero",
            Branch::Minus => "minus",
        }
    }

    fn sign(self) -> i8 {
        match self {
            Branch::Plus => 1,
            Branch::Zero => 0,
            Branch::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedLevel {
    pub branch: Branch,
    pub n_photons: u32,
    /// Shift δ relative to `(n+1) ω_c` (rad/ms).
    pub shift: f64,
    pub amp_d: C64,
    pub amp_b: C64,
    pub amp_g: C64,
}

impl DressedLevel {
    pub fn norm_sqr(&self) -> f64 {
        self.amp_d.norm_sqr() + self.amp_b.norm_sqr() + self.amp_g.norm_sqr()
    }

    /// Photonic weight `|⟨G, n+1|ψ⟩|²`.
    pub fn photon_weight(&self) -> f64 {
        self.amp_g.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPrediction {
    /// Transition frequency relative to ω_c (rad/ms).
    pub frequency_offset: f64,
    /// Relative intensity; only known for the fundamental triplet.
    pub weight: Option<f64>,
    /// 0 for the fundamental triplet, otherwise the transition group 1–3.
    pub group: u8,
    pub n_upper: u32,
    pub upper: Branch,
    pub lower: Branch,
}

/// Collective coupling `g_n` for photon number `n`.
pub fn coupling(p: &PhysicalParams, n: u32) -> f64 {
    ((n as f64 + 1.0) * 2.0 * p.n()).sqrt() * p.g
}

/// The block Hamiltonian in the basis `(|D⟩|n⟩, |B⟩|n⟩, |G⟩|n+1⟩)` with the
/// constant `(n+1) ω_c` removed.
pub fn hamiltonian_block(p: &PhysicalParams, n: u32) -> Matrix3<f64> {
    let w = p.atom_cavity_detuning();
    let h = 0.5 * p.delta_zeeman;
    let gn = coupling(p, n);
    Matrix3::new(w, h, 0.0, h, w, gn, 0.0, gn, 0.0)
}

/// Left-hand side of the shift cubic, scaled by 1/4.
fn cubic(w: f64, gn: f64, delta: f64, x: f64) -> f64 {
    gn * gn * w - (gn * gn + 0.25 * delta * delta - w * w) * x - 2.0 * w * x * x + x * x * x
}

fn cubic_deriv(w: f64, gn: f64, delta: f64, x: f64) -> f64 {
    -(gn * gn + 0.25 * delta * delta - w * w) - 4.0 * w * x + 3.0 * x * x
}

/// Real roots of the shift cubic, descending.
pub fn cubic_shifts(w: f64, gn: f64, delta: f64) -> [f64; 3] {
    // x³ + a x² + b x + c with x = y − a/3.
    let a = -2.0 * w;
    let b = w * w - gn * gn - 0.25 * delta * delta;
    let c = gn * gn * w;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let mut roots = if p < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let t = std::f64::consts::TAU / 3.0;
        [
            m * phi.cos() + shift,
            m * (phi - t).cos() + shift,
            m * (phi - 2.0 * t).cos() + shift,
        ]
    } else {
        // p = 0 for a real symmetric block means a triple root.
        [shift; 3]
    };
    let scale = gn.abs().max(delta.abs()).max(w.abs());
    if scale > 0.0 {
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let d = cubic_deriv(w, gn, delta, *r);
                if d.abs() <= 1e-12 * scale * scale {
                    break;
                }
                let step = cubic(w, gn, delta, *r) / d;
                if !step.is_finite() || step.abs() > 1e-6 * scale {
                    break;
                }
                *r -= step;
            }
        }
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    roots
}

/// Unit null vector of `m − δ·1` from the best-conditioned row cross product.
fn null_vector(m: &Matrix3<f64>, delta: f64) -> [f64; 3] {
    let a = m - Matrix3::identity() * delta;
    let r: [nalgebra::Vector3<f64>; 3] = [
        a.row(0).transpose(),
        a.row(1).transpose(),
        a.row(2).transpose(),
    ];
    let cands = [r[0].cross(&r[1]), r[0].cross(&r[2]), r[1].cross(&r[2])];
    let best = cands
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .copied()
        .unwrap();
    let nrm = best.norm();
    if nrm == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let v = best / nrm;
    [v[0], v[1], v[2]]
}

/// Amplitudes `2(g_n² + ω_ac δ − δ²), −δΔ, −g_n Δ`, normalised; `None` when
/// that vector vanishes numerically (Δ = 0 bright branches).
fn closed_form_vector(w: f64, gn: f64, delta: f64, x: f64) -> Option<[f64; 3]> {
    let v = [2.0 * (gn * gn + w * x - x * x), -x * delta, -gn * delta];
    let nrm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let scale = gn * gn + 0.25 * delta * delta + w * w;
    if nrm <= 1e-6 * scale {
        return None;
    }
    Some([v[0] / nrm, v[1] / nrm, v[2] / nrm])
}

fn residual(h: &Matrix3<f64>, x: f64, v: &[f64; 3]) -> f64 {
    let v = nalgebra::Vector3::new(v[0], v[1], v[2]);
    (h * v - v * x).norm()
}

/// Fixes the overall sign: photonic amplitude negative, otherwise dark
/// amplitude positive, otherwise bright amplitude negative.
fn fix_phase(v: &mut [f64; 3]) {
    let flip = if v[2].abs() > 1e-12 {
        v[2] > 0.0
    } else if v[0].abs() > 1e-12 {
        v[0] < 0.0
    } else {
        v[1] > 0.0
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The three dressed levels for photon number `n`, sorted plus, zero, minus.
pub fn dressed_levels(p: &PhysicalParams, n: u32) -> [DressedLevel; 3] {
    let mut w = p.atom_cavity_detuning();
    let delta = p.delta_zeeman;
    let gn = coupling(p, n);

    if gn == 0.0 && delta == 0.0 {
        // Bare states; the dressing is trivial.
        let mut bare = [(w, [1.0, 0.0, 0.0]), (w, [0.0, 1.0, 0.0]), (0.0, [0.0, 0.0, 1.0])];
        bare.sort_by(|a, b| b.0.total_cmp(&a.0));
        return build(n, bare);
    }

    let mut shifts = cubic_shifts(w, gn, delta);
    let scale = gn.abs().max(delta.abs()).max(w.abs());
    let min_gap = (shifts[0] - shifts[1]).min(shifts[1] - shifts[2]);
    if min_gap < 1e-9 * scale {
        let eps = 1e-12 * gn.abs().max(scale);
        log::warn!("degenerate dressed shifts at n = {n}; perturbing ω_ac by {eps:e}");
        w += eps;
        shifts = cubic_shifts(w, gn, delta);
    }

    let resonant = w == 0.0;
    let h = {
        let mut q = *p;
        q.omega_a_offset = q.omega_c_offset + w;
        hamiltonian_block(&q, n)
    };
    let mut out = [(0.0, [0.0; 3]); 3];
    for (k, &x) in shifts.iter().enumerate() {
        let x = if resonant {
            // δ0 = 0, δ± = ±sqrt(g_n² + Δ²/4).
            let r = (gn * gn + 0.25 * delta * delta).sqrt();
            [r, 0.0, -r][k]
        } else {
            x
        };
        let cross = null_vector(&h, x);
        let mut v = match closed_form_vector(w, gn, delta, x) {
            Some(c) if residual(&h, x, &c) <= residual(&h, x, &cross) => c,
            _ => cross,
        };
        fix_phase(&mut v);
        out[k] = (x, v);
    }
    build(n, out)
}

fn build(n: u32, levels: [(f64, [f64; 3]); 3]) -> [DressedLevel; 3] {
    std::array::from_fn(|k| {
        let (shift, v) = levels[k];
        DressedLevel {
            branch: Branch::ALL[k],
            n_photons: n,
            shift,
            amp_d: C64::new(v[0], 0.0),
            amp_b: C64::new(v[1], 0.0),
            amp_g: C64::new(v[2], 0.0),
        }
    })
}

/// Residual of the shift cubic at `x`, in units of `g_n³`.
pub fn cubic_residual(p: &PhysicalParams, n: u32, x: f64) -> f64 {
    let gn = coupling(p, n);
    let w = p.atom_cavity_detuning();
    let scale = gn.abs().max(p.delta_zeeman.abs()).max(w.abs()).max(1e-300);
    cubic(w, gn, p.delta_zeeman, x).abs() / scale.powi(3)
}

fn group(upper: Branch, lower: Branch) -> u8 {
    let (u, l) = (upper.sign(), lower.sign());
    if u == l {
        1
    } else if u == 0 || l == 0 {
        2
    } else {
        3
    }
}

/// Peaks of the linear transmission (fundamental triplet, group 0) and,
/// for `max_n ≥ 1`, all nine `n → n−1` transitions for `n = 1..=max_n`.
pub fn transmission_peaks(p: &PhysicalParams, max_n: u32) -> Vec<PeakPrediction> {
    let ground = dressed_levels(p, 0);
    let mut peaks: Vec<PeakPrediction> = ground
        .iter()
        .map(|l| PeakPrediction {
            frequency_offset: l.shift,
            weight: Some(l.photon_weight()),
            group: 0,
            n_upper: 0,
            upper: l.branch,
            lower: l.branch,
        })
        .collect();
    let mut below = ground;
    for n in 1..=max_n {
        let above = dressed_levels(p, n);
        for u in &above {
            for l in &below {
                peaks.push(PeakPrediction {
                    frequency_offset: u.shift - l.shift,
                    weight: None,
                    group: group(u.branch, l.branch),
                    n_upper: n,
                    upper: u.branch,
                    lower: l.branch,
                });
            }
        }
        below = above;
    }
    peaks
}

/// Centre and summed side weights of the fundamental triplet,
/// `Δ²/(Δ²+8Ng²)` and `8Ng²/(Δ²+8Ng²)`.
pub fn triplet_weights(p: &PhysicalParams) -> (f64, f64) {
    let d2 = p.delta_zeeman * p.delta_zeeman;
    let c = 8.0 * p.n() * p.g * p.g;
    if d2 + c == 0.0 {
        return (0.0, 0.0);
    }
    (d2 / (d2 + c), c / (d2 + c))
}
