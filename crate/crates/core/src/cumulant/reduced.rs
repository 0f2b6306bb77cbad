// SPDX-License-Identifier: Apache-2.0

//! Coherence-free cumulant equations.
//!
//! Without a probe and without initial coherence, `⟨a⟩` and `⟨A_gr⟩` vanish
//! for all times and only phase-invariant moments survive. Third-order terms
//! collapse to `⟨a†a A⟩ = ⟨a†a⟩⟨A⟩` and `⟨a A A'⟩ = ⟨aA⟩⟨A'⟩ + ⟨aA'⟩⟨A⟩`.

use crate::error::Result;
use crate::model::{reduced_offsets as off, Layout, MomentState, PhysicalParams};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Unpacked coherence-free moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReducedMoments {
    /// `⟨a†a⟩`.
    pub n: f64,
    /// `⟨a A_Bg⟩`.
    pub a_bg: C64,
    /// `⟨a A_Dg⟩`.
    pub a_dg: C64,
    pub bb: f64,
    pub dd: f64,
    /// `⟨A_BD⟩`.
    pub bd: C64,
    pub gg: f64,
    /// `⟨A_gB A_Bg⟩`.
    pub c_bb: f64,
    /// `⟨A_gB A_Dg⟩`.
    pub c_bd: C64,
    /// `⟨A_gD A_Dg⟩`.
    pub c_dd: f64,
}

impl ReducedMoments {
    pub fn unpack(v: &[f64]) -> Self {
        Self {
            n: v[off::N],
            a_bg: C64::new(v[off::A_BG], v[off::A_BG + 1]),
            a_dg: C64::new(v[off::A_DG], v[off::A_DG + 1]),
            bb: v[off::BB],
            dd: v[off::DD],
            bd: C64::new(v[off::BD], v[off::BD + 1]),
            gg: v[off::GG],
            c_bb: v[off::C_BB],
            c_bd: C64::new(v[off::C_BD], v[off::C_BD + 1]),
            c_dd: v[off::C_DD],
        }
    }

    pub fn pack(&self, v: &mut [f64]) {
        v[off::N] = self.n;
        v[off::A_BG] = self.a_bg.re;
        v[off::A_BG + 1] = self.a_bg.im;
        v[off::A_DG] = self.a_dg.re;
        v[off::A_DG + 1] = self.a_dg.im;
        v[off::BB] = self.bb;
        v[off::DD] = self.dd;
        v[off::BD] = self.bd.re;
        v[off::BD + 1] = self.bd.im;
        v[off::GG] = self.gg;
        v[off::C_BB] = self.c_bb;
        v[off::C_BD] = self.c_bd.re;
        v[off::C_BD + 1] = self.c_bd.im;
        v[off::C_DD] = self.c_dd;
    }

    pub fn from_state(s: &MomentState) -> Result<Self> {
        if s.layout == Layout::Reduced16Filter {
            s.expect_layout(Layout::Reduced16Filter)?;
        } else {
            s.expect_layout(Layout::Reduced16)?;
        }
        Ok(Self::unpack(&s.values))
    }

    pub fn to_state(&self) -> MomentState {
        let mut v = vec![0.0; off::MAIN_LEN];
        self.pack(&mut v);
        MomentState {
            layout: Layout::Reduced16,
            values: v,
        }
    }

    /// `⟨A_DB⟩ = ⟨A_BD⟩*`.
    pub fn db(&self) -> C64 {
        self.bd.conj()
    }
}

/// Coefficients of the coherence-free equations for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSystem {
    pub n_atoms: f64,
    pub sqrt2g: f64,
    pub kappa: f64,
    pub detuning: f64,
    pub delta: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl ReducedSystem {
    pub fn new(p: &PhysicalParams) -> Result<Self> {
        let c = crate::model::validate_params(p, true)?;
        Ok(Self {
            n_atoms: p.n(),
            sqrt2g: std::f64::consts::SQRT_2 * p.g,
            kappa: c.kappa,
            detuning: p.atom_cavity_detuning(),
            delta: p.delta_zeeman,
            gamma_plus: c.big_gamma_plus,
            gamma_minus: c.big_gamma_minus,
            lambda_plus: c.lambda_plus,
            lambda_minus: c.lambda_minus,
        })
    }

    pub fn derivative(&self, m: &ReducedMoments) -> ReducedMoments {
        let n_at = self.n_atoms;
        let g2 = self.sqrt2g;
        let (gp, gm, lp, lm) = (
            self.gamma_plus,
            self.gamma_minus,
            self.lambda_plus,
            self.lambda_minus,
        );
        let half_delta = 0.5 * self.delta;
        // Zeeman/cross-decay mixing of the raising coherences.
        let mix = C64::new(-0.5 * gm, half_delta);
        let coh = C64::new(-0.5 * self.kappa - lp - 0.5 * gp, self.detuning);
        let pair_decay = gp + 2.0 * lp;

        let n = -self.kappa * m.n - 2.0 * g2 * n_at * m.a_bg.im;

        // Atom-photon correlations: emission into the mode, with the other
        // atoms' polarisation correlations as a collective source.
        let a_bg = coh * m.a_bg + mix * m.a_dg - I * g2 * (n_at - 1.0) * m.c_bb
            + I * g2 * (m.n * m.gg - (m.n + 1.0) * m.bb);
        let a_dg = coh * m.a_dg + mix * m.a_bg
            - I * g2 * (n_at - 1.0) * m.c_bd
            - I * g2 * (m.n + 1.0) * m.db();

        let bb = self.delta * m.bd.im - gp * m.bb - gm * m.bd.re + lp * m.gg
            + 2.0 * g2 * m.a_bg.im;
        let dd = -self.delta * m.bd.im - gp * m.dd - gm * m.bd.re + lp * m.gg;
        let bd = I * half_delta * (m.dd - m.bb) - gp * m.bd - 0.5 * gm * (m.bb + m.dd)
            + lm * m.gg
            + I * g2 * m.a_dg.conj();
        let gg = -2.0 * g2 * m.a_bg.im + 2.0 * gm * m.bd.re - 2.0 * lp * m.gg
            + gp * (m.bb + m.dd);

        let c_bb = -pair_decay * m.c_bb - gm * m.c_bd.re - self.delta * m.c_bd.im
            - 2.0 * g2 * (m.bb - m.gg) * m.a_bg.im;
        let c_bd = -pair_decay * m.c_bd - 0.5 * gm * (m.c_bb + m.c_dd)
            + I * half_delta * (m.c_bb - m.c_dd)
            + I * g2 * (m.a_dg * (m.bb - m.gg) - m.a_bg.conj() * m.db());
        let c_dd = -pair_decay * m.c_dd - gm * m.c_bd.re + self.delta * m.c_bd.im
            - 2.0 * g2 * (m.a_dg * m.bd).im;

        ReducedMoments {
            n,
            a_bg,
            a_dg,
            bb,
            dd,
            bd,
            gg,
            c_bb,
            c_bd,
            c_dd,
        }
    }

    pub fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let m = ReducedMoments::unpack(y);
        self.derivative(&m).pack(dy);
    }

    /// Conservation law `⟨A_gg⟩ + ⟨A_BB⟩ + ⟨A_DD⟩`, as a linear functional.
    pub fn population_functional() -> Vec<f64> {
        let mut c = vec![0.0; off::MAIN_LEN];
        c[off::GG] = 1.0;
        c[off::BB] = 1.0;
        c[off::DD] = 1.0;
        c
    }
}

/// Time derivative of a coherence-free state.
pub fn undriven_rhs(p: &PhysicalParams, s: &MomentState) -> Result<MomentState> {
    s.expect_layout(Layout::Reduced16)?;
    let sys = ReducedSystem::new(p)?;
    let mut out = MomentState::zeros(Layout::Reduced16);
    sys.rhs(0.0, &s.values, &mut out.values);
    Ok(out)
}
