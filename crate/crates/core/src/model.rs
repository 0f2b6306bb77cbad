// SPDX-License-Identifier: Apache-2.0

//! Physical parameters, rotating-frame bookkeeping and flat moment layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the probe envelope Ω(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveShape {
    Gaussian,
    Constant,
}

/// Coherent probe entering through mirror 1, `H_d = sqrt(κ1) Ω(t) (e^{-iω_d t} a† + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Drive carrier ω_d relative to the frame carrier (rad/ms).
    pub omega_d_offset: f64,
    /// Peak strength Ω0 in ms^(-1/2).
    pub amp0: f64,
    /// Pulse centre τ (ms).
    pub pulse_center: f64,
    /// Pulse width σ (ms).
    pub pulse_sigma: f64,
    pub shape: DriveShape,
}

impl DriveConfig {
    pub fn constant(amp0: f64) -> Self {
        Self {
            omega_d_offset: 0.0,
            amp0,
            pulse_center: 0.0,
            pulse_sigma: 1.0,
            shape: DriveShape::Constant,
        }
    }

    pub fn gaussian(amp0: f64, pulse_center: f64, pulse_sigma: f64) -> Self {
        Self {
            omega_d_offset: 0.0,
            amp0,
            pulse_center,
            pulse_sigma,
            shape: DriveShape::Gaussian,
        }
    }

    /// Envelope Ω(t).
    pub fn amplitude(&self, t: f64) -> f64 {
        match self.shape {
            DriveShape::Constant => self.amp0,
            DriveShape::Gaussian => {
                let x = (t - self.pulse_center) / self.pulse_sigma;
                self.amp0 * (-0.5 * x * x).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amp0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "drive amplitude must be >= 0, got {}",
                self.amp0
            )));
        }
        if self.shape == DriveShape::Gaussian && !(self.pulse_sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gaussian pulse width must be > 0, got {}",
                self.pulse_sigma
            )));
        }
        Ok(())
    }
}

/// Everything that defines one cavity + identical-atom ensemble.
///
/// Frequencies `omega_a_offset`, `omega_c_offset` (and the drive carrier) are
/// measured from a common frame carrier; only their differences enter the
/// dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_atoms: u64,
    pub g: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub delta_zeeman: f64,
    pub omega_a_offset: f64,
    pub omega_c_offset: f64,
    pub drive: Option<DriveConfig>,
}

impl PhysicalParams {
    /// Resonant, undriven, unpumped system with balanced decay `gamma`.
    pub fn new(n_atoms: u64, g: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            n_atoms,
            g,
            kappa1: 0.5 * kappa,
            kappa2: 0.5 * kappa,
            gamma_plus: gamma,
            gamma_minus: gamma,
            eta_plus: 0.0,
            eta_minus: 0.0,
            delta_zeeman: 0.0,
            omega_a_offset: 0.0,
            omega_c_offset: 0.0,
            drive: None,
        }
    }

    pub fn with_pump(mut self, eta: f64) -> Self {
        self.eta_plus = eta;
        self.eta_minus = eta;
        self
    }

    pub fn with_zeeman(mut self, delta: f64) -> Self {
        self.delta_zeeman = delta;
        self
    }

    pub fn with_drive(mut self, drive: DriveConfig) -> Self {
        self.drive = Some(drive);
        self
    }

    pub fn kappa(&self) -> f64 {
        self.kappa1 + self.kappa2
    }

    /// Λ+ = (η+ + η−)/2.
    pub fn lambda_plus(&self) -> f64 {
        0.5 * (self.eta_plus + self.eta_minus)
    }

    /// Λ− = (η+ − η−)/2.
    pub fn lambda_minus(&self) -> f64 {
        0.5 * (self.eta_plus - self.eta_minus)
    }

    /// Γ+ = (γ+ + γ−)/2.
    pub fn big_gamma_plus(&self) -> f64 {
        0.5 * (self.gamma_plus + self.gamma_minus)
    }

    /// Γ− = (γ+ − γ−)/2.
    pub fn big_gamma_minus(&self) -> f64 {
        0.5 * (self.gamma_plus - self.gamma_minus)
    }

    /// ω_a − ω_c.
    pub fn atom_cavity_detuning(&self) -> f64 {
        self.omega_a_offset - self.omega_c_offset
    }

    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    /// Purcell-enhanced single-atom rate 4g²/κ, if κ > 0.
    pub fn purcell_rate(&self) -> Option<f64> {
        let k = self.kappa();
        (k > 0.0).then(|| 4.0 * self.g * self.g / k)
    }

    /// Collective vacuum coupling √(2N)·g of the bright state.
    pub fn collective_coupling(&self) -> f64 {
        (2.0 * self.n()).sqrt() * self.g
    }

    /// Drive envelope at time t (zero without a drive).
    pub fn drive_amplitude(&self, t: f64) -> f64 {
        self.drive.map_or(0.0, |d| d.amplitude(t))
    }
}

/// Validated parameters with the derived rates attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedParams {
    pub params: PhysicalParams,
    pub kappa: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub big_gamma_plus: f64,
    pub big_gamma_minus: f64,
    /// `None` when κ = 0.
    pub purcell_rate: Option<f64>,
}

/// Checks rates and counts; `cavity_dynamics` additionally requires κ > 0.
pub fn validate_params(p: &PhysicalParams, cavity_dynamics: bool) -> Result<CheckedParams> {
    if p.n_atoms == 0 {
        return Err(Error::InvalidParams("n_atoms must be >= 1".into()));
    }
    let rates = [
        ("g", p.g),
        ("kappa1", p.kappa1),
        ("kappa2", p.kappa2),
        ("gamma_plus", p.gamma_plus),
        ("gamma_minus", p.gamma_minus),
        ("eta_plus", p.eta_plus),
        ("eta_minus", p.eta_minus),
        ("delta_zeeman", p.delta_zeeman),
    ];
    for (name, v) in rates {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name} must be a finite non-negative rate, got {v}"
            )));
        }
    }
    if !p.omega_a_offset.is_finite() || !p.omega_c_offset.is_finite() {
        return Err(Error::InvalidParams("frequency offsets must be finite".into()));
    }
    if cavity_dynamics && p.kappa() <= 0.0 {
        return Err(Error::InvalidParams(
            "kappa = kappa1 + kappa2 must be > 0 for cavity dynamics".into(),
        ));
    }
    if let Some(d) = &p.drive {
        d.validate()?;
    }
    Ok(CheckedParams {
        params: *p,
        kappa: p.kappa(),
        lambda_plus: p.lambda_plus(),
        lambda_minus: p.lambda_minus(),
        big_gamma_plus: p.big_gamma_plus(),
        big_gamma_minus: p.big_gamma_minus(),
        purcell_rate: p.purcell_rate(),
    })
}

/// Re-expresses every frequency offset relative to `carrier`, itself given in
/// the current frame. With lab-frame absolute frequencies in `p` this yields
/// `omega_a_offset = ω_a − carrier` and `omega_c_offset = ω_c − carrier`.
pub fn to_rotating_frame(p: &PhysicalParams, carrier: f64) -> PhysicalParams {
    let mut q = *p;
    q.omega_a_offset -= carrier;
    q.omega_c_offset -= carrier;
    if let Some(d) = q.drive.as_mut() {
        d.omega_d_offset -= carrier;
    }
    q
}

/// Frame rotating at the cavity frequency (default for undriven runs).
pub fn cavity_frame(p: &PhysicalParams) -> PhysicalParams {
    to_rotating_frame(p, p.omega_c_offset)
}

/// Frame rotating at the drive carrier (default for driven runs).
pub fn drive_frame(p: &PhysicalParams) -> PhysicalParams {
    match p.drive {
        Some(d) => to_rotating_frame(p, d.omega_d_offset),
        None => *p,
    }
}

/// Single-atom levels in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    G = 0,
    B = 1,
    D = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::B, Level::D];

    pub fn label(self) -> &'static str {
        match self {
            Level::G => "g",
            Level::B => "B",
            Level::D => "D",
        }
    }
}

/// Superindex of the transition operator `A_st = |s><t|`.
pub const fn op_index(s: Level, t: Level) -> usize {
    3 * (s as usize) + (t as usize)
}

/// Superindex of the adjoint operator `A_ts`.
pub const fn adjoint_index(mu: usize) -> usize {
    3 * (mu % 3) + mu / 3
}

fn op_label(mu: usize) -> String {
    format!("{}{}", Level::ALL[mu / 3].label(), Level::ALL[mu % 3].label())
}

/// Which independent-moment system a state vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Coherent, driven system: ⟨a⟩, ⟨aa⟩, ⟨a†a⟩, ⟨A_st⟩, ⟨aA_st⟩, ⟨A_st A_s't'⟩.
    Driven102,
    /// Coherence-free system without the filter block.
    Reduced16,
    /// Coherence-free system followed by the filter block.
    Reduced16Filter,
}

/// Storage offsets of the driven layout.
pub mod driven_offsets {
    pub const A: usize = 0;
    pub const AA: usize = 2;
    pub const N: usize = 4;
    pub const S: usize = 5;
    pub const P: usize = 14;
    pub const C: usize = 32;
    pub const LEN: usize = 77;
}

/// Storage offsets of the coherence-free layout.
pub mod reduced_offsets {
    pub const N: usize = 0;
    pub const A_BG: usize = 1;
    pub const A_DG: usize = 3;
    pub const BB: usize = 5;
    pub const DD: usize = 6;
    pub const BD: usize = 7;
    pub const GG: usize = 9;
    /// ⟨A_gB A_Bg⟩ (real).
    pub const C_BB: usize = 10;
    /// ⟨A_gB A_Dg⟩ (complex); ⟨A_gD A_Bg⟩ is its conjugate.
    pub const C_BD: usize = 11;
    /// ⟨A_gD A_Dg⟩ (real).
    pub const C_DD: usize = 13;
    pub const MAIN_LEN: usize = 14;
    pub const BB_F: usize = 14;
    pub const BA: usize = 15;
    pub const B_AGB: usize = 17;
    pub const B_AGD: usize = 19;
    pub const LEN_WITH_FILTER: usize = 21;
}

/// How one entry of the pair-correlation tensor is recovered from storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSlot {
    /// Offset (relative to the pair block) of the real part.
    pub offset: usize,
    /// Stored as a single real number.
    pub real: bool,
    /// The entry is the complex conjugate of the stored value.
    pub conjugate: bool,
}

/// Orbit bookkeeping for ⟨A_μ^k A_ν^k'⟩ under atom exchange (μ,ν)→(ν,μ) and
/// hermitian conjugation (μ,ν)→(μ̄,ν̄) with complex conjugation.
#[derive(Debug, Clone)]
pub struct PairTable {
    pub slots: [[PairSlot; 9]; 9],
    /// Canonical representatives in storage order, with their real flag.
    pub reps: Vec<(usize, usize, bool)>,
    pub len: usize,
}

impl PairTable {
    pub fn build() -> Self {
        let orbit = |m: usize, n: usize| {
            let (mb, nb) = (adjoint_index(m), adjoint_index(n));
            [(m, n, false), (n, m, false), (mb, nb, true), (nb, mb, true)]
        };
        let mut slots = [[PairSlot {
            offset: usize::MAX,
            real: false,
            conjugate: false,
        }; 9]; 9];
        let mut reps = Vec::new();
        let mut len = 0;
        for m in 0..9 {
            for n in 0..9 {
                if slots[m][n].offset != usize::MAX {
                    continue;
                }
                let (mb, nb) = (adjoint_index(m), adjoint_index(n));
                let real = (mb, nb) == (m, n) || (mb, nb) == (n, m);
                for (i, j, conj) in orbit(m, n) {
                    slots[i][j] = PairSlot {
                        offset: len,
                        real,
                        conjugate: conj && !real,
                    };
                }
                reps.push((m, n, real));
                len += if real { 1 } else { 2 };
            }
        }
        Self { slots, reps, len }
    }
}

impl Layout {
    pub fn len(self) -> usize {
        match self {
            Layout::Driven102 => driven_offsets::LEN,
            Layout::Reduced16 => reduced_offsets::MAIN_LEN,
            Layout::Reduced16Filter => reduced_offsets::LEN_WITH_FILTER,
        }
    }

    /// Column names, one per stored real number.
    pub fn column_names(self) -> Vec<String> {
        match self {
            Layout::Driven102 => {
                let mut v: Vec<String> = ["re_a", "im_a", "re_aa", "im_aa", "ada"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                for (s, t) in [(0, 0), (1, 1), (2, 2)] {
                    v.push(format!("A_{}", op_label(3 * s + t)));
                }
                for (s, t) in [(0, 1), (0, 2), (1, 2)] {
                    let l = op_label(3 * s + t);
                    v.push(format!("re_A_{l}"));
                    v.push(format!("im_A_{l}"));
                }
                for mu in 0..9 {
                    let l = op_label(mu);
                    v.push(format!("re_aA_{l}"));
                    v.push(format!("im_aA_{l}"));
                }
                for (m, n, real) in PairTable::build().reps {
                    let l = format!("{}_{}", op_label(m), op_label(n));
                    if real {
                        v.push(format!("AA_{l}"));
                    } else {
                        v.push(format!("re_AA_{l}"));
                        v.push(format!("im_AA_{l}"));
                    }
                }
                v
            }
            Layout::Reduced16 | Layout::Reduced16Filter => {
                let mut v: Vec<String> = [
                    "ada", "re_aA_Bg", "im_aA_Bg", "re_aA_Dg", "im_aA_Dg", "A_BB", "A_DD",
                    "re_A_BD", "im_A_BD", "A_gg", "AA_gB_Bg", "re_AA_gB_Dg", "im_AA_gB_Dg",
                    "AA_gD_Dg",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                if self == Layout::Reduced16Filter {
                    v.extend(
                        [
                            "bdb", "re_bda", "im_bda", "re_bdA_gB", "im_bdA_gB", "re_bdA_gD",
                            "im_bdA_gD",
                        ]
                        .iter()
                        .map(|s| s.to_string()),
                    );
                }
                v
            }
        }
    }
}

/// Flat real vector of independent expectation values tagged with its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl MomentState {
    pub fn new(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::StateLength {
                layout,
                expected: layout.len(),
                found: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    /// Cavity vacuum with every atom in `g`.
    pub fn ground(layout: Layout) -> Self {
        let mut s = Self::zeros(layout);
        match layout {
            Layout::Driven102 => {
                s.values[driven_offsets::S] = 1.0;
                // ⟨A_gg A_gg⟩ = 1 for the product ground state.
                let slot = PairTable::build().slots[0][0];
                s.values[driven_offsets::C + slot.offset] = 1.0;
            }
            Layout::Reduced16 | Layout::Reduced16Filter => {
                s.values[reduced_offsets::GG] = 1.0;
            }
        }
        s
    }

    pub fn expect_layout(&self, layout: Layout) -> Result<()> {
        if self.layout != layout {
            return Err(Error::LayoutMismatch {
                expected: layout,
                found: self.layout,
            });
        }
        if self.values.len() != layout.len() {
            return Err(Error::StateLength {
                layout,
                expected: layout.len(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Sum of the three single-atom populations.
    pub fn population_sum(&self) -> f64 {
        match self.layout {
            Layout::Driven102 => self.values[driven_offsets::S..driven_offsets::S + 3]
                .iter()
                .sum(),
            Layout::Reduced16 | Layout::Reduced16Filter => {
                use reduced_offsets::*;
                self.values[BB] + self.values[DD] + self.values[GG]
            }
        }
    }

    pub fn photon_number(&self) -> f64 {
        match self.layout {
            Layout::Driven102 => self.values[driven_offsets::N],
            _ => self.values[reduced_offsets::N],
        }
    }
}
