// SPDX-License-Identifier: Apache-2.0

//! Filter cavity `b` (frequency ω_f, loss χ) coupled to the cavity with
//! `β (b†a + a†b)`. The main system is frozen at its steady state and only
//! the filter correlations evolve.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::model::{Layout, MomentState, PhysicalParams};
use crate::units::hz;
use crate::C64;

use super::reduced::{ReducedMoments, ReducedSystem};

const I: C64 = C64::new(0.0, 1.0);

/// Number of reals in the filter block.
pub const FILTER_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterParams {
    /// Filter frequency relative to the frame carrier (rad/ms).
    pub omega_f_offset: f64,
    pub beta: f64,
    pub chi: f64,
}

impl FilterParams {
    pub fn validate(&self, kappa: f64) -> Result<()> {
        if !(self.chi > 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "filter needs chi > 0 and beta > 0 (chi = {}, beta = {})",
                self.chi, self.beta
            )));
        }
        if self.beta > kappa / 100.0 {
            log::warn!(
                "filter coupling beta = {} is not small against kappa = {kappa}",
                self.beta
            );
        }
        Ok(())
    }

    pub fn at(self, omega_f_offset: f64) -> Self {
        Self {
            omega_f_offset,
            ..self
        }
    }
}

/// Filter loss `χ = min(max(2π·1 Hz, Γ/10), κ/10⁴)` and coupling `β = χ/10`
/// for an expected linewidth `Γ`.
pub fn default_filter(kappa: f64, expected_linewidth: f64) -> FilterParams {
    let chi = hz(1.0).max(expected_linewidth / 10.0).min(kappa / 1e4);
    FilterParams {
        omega_f_offset: 0.0,
        beta: chi / 10.0,
        chi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterMoments {
    /// `⟨b†b⟩`.
    pub bd_b: f64,
    /// `⟨b†a⟩`.
    pub bd_a: C64,
    /// `⟨b†A_gB⟩`.
    pub bd_gb: C64,
    /// `⟨b†A_gD⟩`.
    pub bd_gd: C64,
}

impl FilterMoments {
    pub fn unpack(v: &[f64]) -> Self {
        Self {
            bd_b: v[0],
            bd_a: C64::new(v[1], v[2]),
            bd_gb: C64::new(v[3], v[4]),
            bd_gd: C64::new(v[5], v[6]),
        }
    }

    pub fn pack(&self, v: &mut [f64]) {
        v[0] = self.bd_b;
        v[1] = self.bd_a.re;
        v[2] = self.bd_a.im;
        v[3] = self.bd_gb.re;
        v[4] = self.bd_gb.im;
        v[5] = self.bd_gd.re;
        v[6] = self.bd_gd.im;
    }

    /// `⟨b†A_μ⟩` where tracked.
    pub fn bd_atom(&self, mu: usize) -> Option<C64> {
        match mu {
            1 => Some(self.bd_gb),
            2 => Some(self.bd_gd),
            _ => None,
        }
    }
}

/// Filter equations around a frozen coherence-free steady state.
#[derive(Debug, Clone, Copy)]
pub struct FilterSystem {
    sys: ReducedSystem,
    main: ReducedMoments,
    omega_c: f64,
    omega_a: f64,
    f: FilterParams,
}

impl FilterSystem {
    pub fn new(p: &PhysicalParams, f: FilterParams, main: &ReducedMoments) -> Result<Self> {
        let sys = ReducedSystem::new(p)?;
        f.validate(sys.kappa)?;
        Ok(Self {
            sys,
            main: *main,
            omega_c: p.omega_c_offset,
            omega_a: p.omega_a_offset,
            f,
        })
    }

    pub fn derivative(&self, x: &FilterMoments) -> FilterMoments {
        let m = &self.main;
        let s = &self.sys;
        let (beta, chi) = (self.f.beta, self.f.chi);
        let wf = self.f.omega_f_offset;
        let g2 = s.sqrt2g;
        let bd_b = -chi * x.bd_b + 2.0 * beta * x.bd_a.im;
        let bd_a = C64::new(-0.5 * (chi + s.kappa), wf - self.omega_c) * x.bd_a
            - I * beta * (x.bd_b - m.n)
            - I * g2 * s.n_atoms * x.bd_gb;
        let coh = C64::new(-0.5 * chi - s.lambda_plus - 0.5 * s.gamma_plus, wf - self.omega_a);
        let mix = C64::new(0.5 * s.gamma_minus, 0.5 * s.delta);
        // ⟨b†aA⟩ → ⟨b†a⟩⟨A⟩ with ⟨b⟩ = ⟨a⟩ = 0.
        let bd_gb = -I * g2 * x.bd_a * (m.gg - m.bb) + coh * x.bd_gb + I * beta * m.a_bg.conj()
            - mix * x.bd_gd;
        let bd_gd = I * g2 * x.bd_a * m.bd + coh * x.bd_gd + I * beta * m.a_dg.conj()
            - mix * x.bd_gb;
        FilterMoments {
            bd_b,
            bd_a,
            bd_gb,
            bd_gd,
        }
    }

    pub fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.derivative(&FilterMoments::unpack(y)).pack(dy);
    }

    /// Steady state of the (affine) filter equations by a direct solve.
    pub fn steady(&self) -> Result<FilterMoments> {
        let mut f0 = [0.0; FILTER_LEN];
        self.rhs(0.0, &[0.0; FILTER_LEN], &mut f0);
        let mut jac = SMatrix::<f64, FILTER_LEN, FILTER_LEN>::zeros();
        let mut col = [0.0; FILTER_LEN];
        for j in 0..FILTER_LEN {
            let mut e = [0.0; FILTER_LEN];
            e[j] = 1.0;
            self.rhs(0.0, &e, &mut col);
            for i in 0..FILTER_LEN {
                jac[(i, j)] = col[i] - f0[i];
            }
        }
        let rhs = -SVector::<f64, FILTER_LEN>::from_column_slice(&f0);
        let x = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidParams("singular filter equations".into()))?;
        Ok(FilterMoments::unpack(x.as_slice()))
    }
}

/// Time derivative of the filter block for a frozen main steady state,
/// returned in the [`Layout::Reduced16Filter`] layout.
pub fn filter_rhs(
    p: &PhysicalParams,
    f: &FilterParams,
    main_steady: &MomentState,
    fs: &FilterMoments,
    residual_tol: f64,
) -> Result<MomentState> {
    let main = check_steady(p, main_steady, residual_tol)?;
    let sys = FilterSystem::new(p, *f, &main)?;
    let d = sys.derivative(fs);
    let mut out = MomentState::zeros(Layout::Reduced16Filter);
    d.pack(&mut out.values[crate::model::reduced_offsets::MAIN_LEN..]);
    Ok(out)
}

/// Steady filter moments for a converged main state.
pub fn filter_steady(
    p: &PhysicalParams,
    f: &FilterParams,
    main_steady: &MomentState,
    residual_tol: f64,
) -> Result<FilterMoments> {
    let main = check_steady(p, main_steady, residual_tol)?;
    FilterSystem::new(p, *f, &main)?.steady()
}

/// Rejects main states whose residual exceeds `tol·(1 + ‖s‖)`.
pub fn check_steady(p: &PhysicalParams, s: &MomentState, tol: f64) -> Result<ReducedMoments> {
    let main = ReducedMoments::from_state(s)?;
    let sys = ReducedSystem::new(p)?;
    let d = sys.derivative(&main);
    let mut dv = [0.0; crate::model::reduced_offsets::MAIN_LEN];
    d.pack(&mut dv);
    let res = dv.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nrm = s.values[..crate::model::reduced_offsets::MAIN_LEN]
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let threshold = tol * (1.0 + nrm);
    if res > threshold {
        return Err(Error::NotConverged {
            residual: res,
            threshold,
        });
    }
    Ok(main)
}
