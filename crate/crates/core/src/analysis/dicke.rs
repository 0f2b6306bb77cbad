// SPDX-License-Identifier: Apache-2.0

//! Pseudo-Dicke numbers of the `g ↔ B` and `g ↔ D` transitions.
//!
//! For each transition `s`: `M_s = N(⟨A_ss⟩ − ⟨A_gg⟩)/2` and
//! `J_s² = 3N/4 + N(N−1)[⟨A_gs A_sg⟩ + ¼⟨(A_ss − A_gg)(A_ss − A_gg)⟩]`, the
//! pair moments taken between distinct atoms.

use serde::{Deserialize, Serialize};

use crate::cumulant::{DrivenMoments, ReducedMoments};
use crate::error::{Error, Result};
use crate::model::{op_index, Level, MomentState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickePoint {
    pub eta_over_gamma: f64,
    pub j_b: f64,
    pub m_b: f64,
    pub j_d: f64,
    pub m_d: f64,
}

fn transition(m: &DrivenMoments, n: f64, s: Level) -> Result<(f64, f64)> {
    let (g, ss, gs, sg) = (
        op_index(Level::G, Level::G),
        op_index(s, s),
        op_index(Level::G, s),
        op_index(s, Level::G),
    );
    let big_m = 0.5 * n * (m.s[ss].re - m.s[g].re);
    let zz = m.c[ss][ss] - m.c[ss][g] - m.c[g][ss] + m.c[g][g];
    let j2 = 0.75 * n + n * (n - 1.0) * (m.c[gs][sg].re + 0.25 * zz.re);
    if j2 < -1e-9 * n * n {
        return Err(Error::NegativeJSquared(j2));
    }
    Ok((j2.max(0.0).sqrt(), big_m))
}

/// Dicke numbers from full moments (atom populations plus distinct-pair
/// correlations).
pub fn dicke_from_moments(m: &DrivenMoments, n_atoms: f64) -> Result<DickePoint> {
    let (j_b, m_b) = transition(m, n_atoms, Level::B)?;
    let (j_d, m_d) = transition(m, n_atoms, Level::D)?;
    Ok(DickePoint {
        eta_over_gamma: 0.0,
        j_b,
        m_b,
        j_d,
        m_d,
    })
}

/// Dicke numbers of a coherence-free state. Pair moments of populations are
/// not tracked there and enter in factorised form.
pub fn dicke_numbers(steady: &MomentState, n_atoms: f64) -> Result<DickePoint> {
    let r = ReducedMoments::from_state(steady)?;
    dicke_from_moments(&DrivenMoments::from_reduced(&r), n_atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntegrationConfig;
    use crate::exact::{build_generator, exact_driven_moments, DensityState};
    use crate::model::{DriveConfig, Layout, PhysicalParams};
    use crate::units::khz;

    #[test]
    fn ground_state_numbers() {
        for n in [1.0, 10.0, 2.5e5] {
            let d = dicke_numbers(&MomentState::ground(Layout::Reduced16), n).unwrap();
            let j = (n * (n + 2.0)).sqrt() / 2.0;
            assert!((d.j_b - j).abs() < 1e-9 * j && (d.j_d - j).abs() < 1e-9 * j);
            assert!((d.m_b + n / 2.0).abs() < 1e-9 * n);
        }
    }

    #[test]
    fn two_atom_oracle_agrees_with_formula() {
        // A weakly driven pair with no dark-state channel stays in {g, B}.
        let mut p = PhysicalParams::new(2, khz(30.0), khz(150.0), khz(7.5));
        p.drive = Some(DriveConfig::constant(20.0));
        let sys = build_generator(&p, 2, 4).unwrap();
        let sp = sys.space();
        let cfg = IntegrationConfig::default().with_t_end(0.03).with_stride(0.01);
        let j2 = sp.collective_spin_squared(Level::B);
        for (_, d) in sys.evolve(&DensityState::ground(sp), &cfg).unwrap() {
            let m = exact_driven_moments(&d);
            let pt = dicke_from_moments(&m, 2.0).unwrap();
            let direct = j2.expect(&d.rho).re;
            assert!((pt.j_b * pt.j_b - direct).abs() < 1e-8, "{} vs {direct}", pt.j_b * pt.j_b);
        }
    }

    #[test]
    fn inconsistent_correlations_are_flagged() {
        let mut r = ReducedMoments {
            gg: 0.5,
            bb: 0.5,
            ..ReducedMoments::default()
        };
        r.c_bb = -10.0;
        let s = r.to_state();
        assert!(matches!(dicke_numbers(&s, 100.0), Err(Error::NegativeJSquared(_))));
    }
}
