// SPDX-License-Identifier: Apache-2.0

//! Semi-analytic lasing linewidth.
//!
//! With `x = Γ/2 + Λ+ + Γ+/2` the filter pole condition reads
//! `Γ = κ/2 + Im Z(Γ)`, where
//! `Z = −i 2Ng² [i(Δ/2)⟨A_DB⟩ + x(⟨A_BB⟩ − ⟨A_gg⟩)] / (x² + Δ²/4)`.
//! Dropping `Γ` from the denominator gives the closed form.

use crate::cumulant::ReducedMoments;
use crate::error::{Error, Result};
use crate::model::{MomentState, PhysicalParams};
use crate::C64;

fn require_balanced_pump(p: &PhysicalParams) -> Result<()> {
    let lm = p.lambda_minus();
    if lm.abs() > 1e-12 * p.lambda_plus().abs().max(1.0) {
        return Err(Error::FormulaInvalid(format!(
            "requires balanced pumping (eta_plus = eta_minus), got Lambda_minus = {lm}"
        )));
    }
    Ok(())
}

/// Closed form `Γ = {κ − θ[(γ+2η)(⟨A_BB⟩−⟨A_gg⟩) − Δ Im⟨A_DB⟩]} / {2 + θ(⟨A_BB⟩−⟨A_gg⟩)}`
/// with `θ = 8Ng²/[(γ+2η)² + Δ²]`, `γ = Γ+` and `η = Λ+`.
pub fn linewidth_semianalytic(p: &PhysicalParams, steady: &MomentState) -> Result<f64> {
    semianalytic_from(p, &ReducedMoments::from_state(steady)?)
}

pub fn semianalytic_from(p: &PhysicalParams, m: &ReducedMoments) -> Result<f64> {
    require_balanced_pump(p)?;
    let gamma = p.big_gamma_plus();
    let eta = p.lambda_plus();
    let delta = p.delta_zeeman;
    let inv = m.bb - m.gg;
    let r = gamma + 2.0 * eta;
    let theta = 8.0 * p.n() * p.g * p.g / (r * r + delta * delta);
    let den = 2.0 + theta * inv;
    if !(den > 0.0) {
        return Err(Error::FormulaInvalid(format!(
            "denominator 2 + θ(⟨A_BB⟩−⟨A_gg⟩) = {den} is not positive"
        )));
    }
    let num = p.kappa() - theta * (r * inv - delta * m.db().im);
    Ok(num / den)
}

/// The same closed form written with `Λ+`, `Γ+` and
/// `θ' = 2Ng²/[(Λ+ + Γ+/2)² + Δ²/4]`.
pub fn linewidth_rate_form(p: &PhysicalParams, m: &ReducedMoments) -> Result<f64> {
    require_balanced_pump(p)?;
    let x0 = p.lambda_plus() + 0.5 * p.big_gamma_plus();
    let delta = p.delta_zeeman;
    let theta = 2.0 * p.n() * p.g * p.g / (x0 * x0 + 0.25 * delta * delta);
    let inv = m.bb - m.gg;
    let den = 1.0 + 0.5 * theta * inv;
    if !(den > 0.0) {
        return Err(Error::FormulaInvalid(format!("denominator {den} is not positive")));
    }
    Ok((0.5 * p.kappa() - theta * (x0 * inv - 0.5 * delta * m.db().im)) / den)
}

/// `Z(Γ)`.
pub fn z_function(p: &PhysicalParams, m: &ReducedMoments, linewidth: f64) -> C64 {
    let x = 0.5 * linewidth + p.lambda_plus() + 0.5 * p.big_gamma_plus();
    let delta = p.delta_zeeman;
    let pref = 2.0 * p.n() * p.g * p.g / (x * x + 0.25 * delta * delta);
    let bracket = C64::new(0.0, 0.5 * delta) * m.db() + x * (m.bb - m.gg);
    C64::new(0.0, -pref) * bracket
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitLinewidth {
    pub gamma: f64,
    /// `|Γ − κ/2 − Im Z(Γ)|` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

fn fixed_point_defect(p: &PhysicalParams, m: &ReducedMoments, g: f64) -> f64 {
    0.5 * p.kappa() + z_function(p, m, g).im - g
}

/// Largest root of `Γ = κ/2 + Im Z(Γ)` in `(0, κ]`, by a logarithmic scan
/// and bisection.
pub fn linewidth_implicit(p: &PhysicalParams, steady: &MomentState) -> Result<ImplicitLinewidth> {
    implicit_from(p, &ReducedMoments::from_state(steady)?)
}

pub fn implicit_from(p: &PhysicalParams, m: &ReducedMoments) -> Result<ImplicitLinewidth> {
    require_balanced_pump(p)?;
    let kappa = p.kappa();
    let lo_limit = 1e-12 * kappa;
    let f = |g: f64| fixed_point_defect(p, m, g);
    // Scan downwards from κ for the first sign change.
    let steps = 400;
    let ratio = (lo_limit / kappa).powf(1.0 / steps as f64);
    let mut hi = kappa;
    let mut f_hi = f(hi);
    let mut bracket = None;
    for _ in 0..steps {
        if f_hi == 0.0 {
            bracket = Some((hi, hi));
            break;
        }
        let lo = hi * ratio;
        let f_lo = f(lo);
        if (f_lo >= 0.0) != (f_hi >= 0.0) {
            bracket = Some((lo, hi));
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::BracketFailure { lo: 0.0, hi: kappa })?;
    let mut iterations = 0;
    let lo_positive = f(lo) >= 0.0;
    while hi - lo > 1e-14 * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let gamma = 0.5 * (lo + hi);
    Ok(ImplicitLinewidth {
        gamma,
        residual: f(gamma).abs(),
        iterations,
    })
}

/// Damped Newton iteration on `Γ − κ/2 − Im Z(Γ) = 0` from `guess`.
pub fn implicit_iterate(p: &PhysicalParams, m: &ReducedMoments, guess: f64, damping: f64, max_iter: usize) -> Result<ImplicitLinewidth> {
    require_balanced_pump(p)?;
    let f = |g: f64| fixed_point_defect(p, m, g);
    let mut g = guess;
    for k in 0..max_iter {
        let h = 1e-7 * g.abs().max(1e-9 * p.kappa());
        let slope = (f(g + h) - f(g - h)) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let mut next = g - damping * f(g) / slope;
        if next <= 0.0 {
            next = 0.5 * g;
        }
        if (next - g).abs() < 1e-13 * g.abs() {
            return Ok(ImplicitLinewidth {
                gamma: next,
                residual: f(next).abs(),
                iterations: k + 1,
            });
        }
        g = next;
    }
    Err(Error::NotConverged {
        residual: f(g).abs(),
        threshold: 1e-13 * g.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, mhz};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(bb: f64, gg: f64, bd: C64) -> ReducedMoments {
        ReducedMoments {
            bb,
            gg,
            dd: 1.0 - bb - gg,
            bd,
            ..ReducedMoments::default()
        }
    }

    #[test]
    fn uninverted_resonant_limit_is_half_kappa() {
        let p = PhysicalParams::new(250_000, khz(7.5), khz(150.0), khz(7.5)).with_pump(khz(10.0));
        let m = state(0.3, 0.3, C64::new(0.0, 0.0));
        let g = semianalytic_from(&p, &m).unwrap();
        assert!((g - 0.5 * p.kappa()).abs() < 1e-12 * p.kappa());
    }

    #[test]
    fn both_closed_forms_agree() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = PhysicalParams::new(r.gen_range(1..1_000_000), khz(r.gen_range(1.0..10.0)), khz(150.0), khz(r.gen_range(1.0..10.0)))
                .with_pump(khz(r.gen_range(0.0..50.0)))
                .with_zeeman(mhz(r.gen_range(0.0..1.0)));
            let bb = r.gen_range(0.0..0.5);
            let gg = r.gen_range(0.0..0.5);
            let m = state(bb, gg, C64::new(r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1)));
            match (semianalytic_from(&p, &m), linewidth_rate_form(&p, &m)) {
                (Ok(a), Ok(b)) => assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("forms disagree on validity: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn unbalanced_pump_is_rejected() {
        let mut p = PhysicalParams::new(100, khz(7.5), khz(150.0), khz(7.5)).with_pump(khz(10.0));
        p.eta_minus = khz(5.0);
        let m = state(0.2, 0.5, C64::new(0.0, 0.0));
        assert!(matches!(semianalytic_from(&p, &m), Err(Error::FormulaInvalid(_))));
        assert!(matches!(implicit_from(&p, &m), Err(Error::FormulaInvalid(_))));
    }

    #[test]
    fn decoupled_limit_is_half_kappa() {
        let p = PhysicalParams::new(100, 0.0, khz(150.0), khz(7.5)).with_pump(khz(3.0));
        let m = state(0.2, 0.5, C64::new(0.0, 0.01));
        let g = implicit_from(&p, &m).unwrap();
        assert!((g.gamma - 0.5 * p.kappa()).abs() < 1e-10 * p.kappa());
    }

    #[test]
    fn implicit_matches_closed_form_for_narrow_lines() {
        // Pumping far above κ makes the Γ dependence of Z weak.
        let p = PhysicalParams::new(250_000, khz(7.5), khz(150.0), khz(7.5))
            .with_zeeman(mhz(10.0))
            .with_pump(mhz(4.0));
        let mut m = state(0.3, 0.3, C64::new(0.0, 0.0));
        let target = 1e-2 * p.kappa();
        // Γ of the closed form grows with Im⟨A_DB⟩.
        let (mut lo, mut hi) = (-0.5, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            m.bd = C64::new(0.0, -mid);
            if semianalytic_from(&p, &m).unwrap() > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let closed = semianalytic_from(&p, &m).unwrap();
        assert!((closed - target).abs() < 1e-6 * target);
        let imp = implicit_from(&p, &m).unwrap();
        assert!((imp.gamma - closed).abs() < 0.05 * closed, "{} vs {closed}", imp.gamma);
        assert!(imp.residual < 1e-9 * p.kappa());
        for guess in [0.5 * imp.gamma, 2.0 * imp.gamma] {
            let it = implicit_iterate(&p, &m, guess, 0.7, 500).unwrap();
            assert!((it.gamma - imp.gamma).abs() < 1e-8 * imp.gamma);
        }
    }

    #[test]
    fn missing_root_is_a_bracket_failure() {
        // f stays positive on (0, κ] when the gain grows with Γ.
        let p = PhysicalParams::new(250_000, khz(7.5), khz(150.0), khz(7.5))
            .with_zeeman(mhz(0.1))
            .with_pump(khz(37.5));
        let m = state(0.144_392_010_558_968_5, 0.145_946_577_278_347_8, C64::new(0.0, 1.505_360_567_179_097e-3));
        assert!(matches!(implicit_from(&p, &m), Err(Error::BracketFailure { .. })));
    }

}
