// SPDX-License-Identifier: Apache-2.0

//! Third-order cumulant closure.
//!
//! A third moment of operators on different subsystems is replaced by
//! `⟨xyz⟩ ≈ ⟨xy⟩⟨z⟩ + ⟨xz⟩⟨y⟩ + ⟨yz⟩⟨x⟩ − 2⟨x⟩⟨y⟩⟨z⟩`.

use crate::error::{Error, Result};
use crate::C64;

use super::driven::DrivenMoments;
use super::filter::FilterMoments;

/// The third-order forms that appear in the equations of motion. Indices are
/// operator superindices `μ = 3s + t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThirdMoment {
    /// `⟨a† a A_μ⟩`.
    PhotonNumberAtom(usize),
    /// `⟨a a A_μ⟩`.
    FieldFieldAtom(usize),
    /// `⟨a A_μ^k A_ν^k'⟩`, k ≠ k'.
    FieldAtomAtom(usize, usize),
    /// `⟨a† A_μ^k A_ν^k'⟩`, k ≠ k'.
    ConjFieldAtomAtom(usize, usize),
    /// `⟨b† a A_μ⟩` with the filter field `b`.
    FilterFieldAtom(usize),
}

#[inline]
pub fn cumulant3(x: C64, y: C64, z: C64, xy: C64, xz: C64, yz: C64) -> C64 {
    xy * z + xz * y + yz * x - 2.0 * x * y * z
}

#[inline]
pub(crate) fn photon_number_atom(m: &DrivenMoments, mu: usize) -> C64 {
    cumulant3(m.a.conj(), m.a, m.s[mu], C64::from(m.n), m.q(mu), m.p[mu])
}

#[inline]
pub(crate) fn field_field_atom(m: &DrivenMoments, mu: usize) -> C64 {
    cumulant3(m.a, m.a, m.s[mu], m.aa, m.p[mu], m.p[mu])
}

#[inline]
pub(crate) fn field_atom_atom(m: &DrivenMoments, mu: usize, nu: usize) -> C64 {
    cumulant3(m.a, m.s[mu], m.s[nu], m.p[mu], m.p[nu], m.c[mu][nu])
}

#[inline]
pub(crate) fn conj_field_atom_atom(m: &DrivenMoments, mu: usize, nu: usize) -> C64 {
    cumulant3(m.a.conj(), m.s[mu], m.s[nu], m.q(mu), m.q(nu), m.c[mu][nu])
}

/// Evaluates a third-order moment from first- and second-order moments.
///
/// The filter form needs `filter`; the filter field has no coherent amplitude,
/// so `⟨b†A_μ⟩` is only required (and only known for `μ ∈ {gB, gD}`) when
/// the cavity field has one.
pub fn close_third_order(
    triple: ThirdMoment,
    m: &DrivenMoments,
    filter: Option<&FilterMoments>,
) -> Result<C64> {
    let check = |mu: usize| {
        if mu < 9 {
            Ok(())
        } else {
            Err(Error::UnsupportedMoment(format!("operator index {mu} out of range")))
        }
    };
    match triple {
        ThirdMoment::PhotonNumberAtom(mu) => check(mu).map(|_| photon_number_atom(m, mu)),
        ThirdMoment::FieldFieldAtom(mu) => check(mu).map(|_| field_field_atom(m, mu)),
        ThirdMoment::FieldAtomAtom(mu, nu) => {
            check(mu)?;
            check(nu)?;
            Ok(field_atom_atom(m, mu, nu))
        }
        ThirdMoment::ConjFieldAtomAtom(mu, nu) => {
            check(mu)?;
            check(nu)?;
            Ok(conj_field_atom_atom(m, mu, nu))
        }
        ThirdMoment::FilterFieldAtom(mu) => {
            check(mu)?;
            let f = filter.ok_or_else(|| {
                Error::UnsupportedMoment("⟨b†aA⟩ requires filter moments".into())
            })?;
            let bd_a_term = if m.a == C64::new(0.0, 0.0) {
                C64::new(0.0, 0.0)
            } else {
                let bd_mu = f.bd_atom(mu).ok_or_else(|| {
                    Error::UnsupportedMoment(format!(
                        "⟨b†A⟩ for operator index {mu} is not tracked"
                    ))
                })?;
                bd_mu * m.a
            };
            // ⟨b†⟩ = 0 for the incoherent filter field.
            Ok(f.bd_a * m.s[mu] + bd_a_term)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{adjoint_index, op_index, Level};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(r: &mut ChaCha8Rng) -> C64 {
        C64::new(r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1))
    }

    fn random_moments(seed: u64) -> DrivenMoments {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DrivenMoments::zeros();
        m.a = rc(&mut r);
        m.aa = rc(&mut r);
        m.n = r.gen_range(0.0..0.2);
        for mu in 0..9 {
            m.s[mu] = rc(&mut r);
            m.p[mu] = rc(&mut r);
            for nu in 0..9 {
                m.c[mu][nu] = rc(&mut r);
            }
        }
        m
    }

    #[test]
    fn coherence_free_photon_number_atom_factorises() {
        let mut m = DrivenMoments::zeros();
        m.n = 0.7;
        m.s[op_index(Level::B, Level::B)] = C64::from(0.3);
        m.p[op_index(Level::B, Level::B)] = C64::new(0.0, 0.0);
        let bb = op_index(Level::B, Level::B);
        let v = close_third_order(ThirdMoment::PhotonNumberAtom(bb), &m, None).unwrap();
        assert!((v - C64::from(0.21)).norm() < 1e-15);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let m = DrivenMoments::zeros();
        for t in [
            ThirdMoment::PhotonNumberAtom(4),
            ThirdMoment::FieldFieldAtom(3),
            ThirdMoment::FieldAtomAtom(1, 3),
            ThirdMoment::ConjFieldAtomAtom(2, 6),
        ] {
            assert_eq!(close_third_order(t, &m, None).unwrap(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn matches_main_text_expansion_at_random_states() {
        for seed in 0..20 {
            let m = random_moments(seed);
            for mu in 0..9 {
                // ⟨a†aA⟩ = ⟨a†a⟩⟨A⟩ + ⟨a†⟩⟨aA⟩ + ⟨a†A⟩⟨a⟩ − 2⟨a†⟩⟨a⟩⟨A⟩ written out.
                let a_dag_a = m.n;
                let a_dag_mu = m.p[adjoint_index(mu)].conj();
                let expect = a_dag_a * m.s[mu] + m.a.conj() * m.p[mu] + a_dag_mu * m.a
                    - 2.0 * m.a.conj() * m.a * m.s[mu];
                let got = close_third_order(ThirdMoment::PhotonNumberAtom(mu), &m, None).unwrap();
                assert!((got - expect).norm() < 1e-15);
                let expect = m.aa * m.s[mu] + 2.0 * m.a * m.p[mu] - 2.0 * m.a * m.a * m.s[mu];
                let got = close_third_order(ThirdMoment::FieldFieldAtom(mu), &m, None).unwrap();
                assert!((got - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn filter_form_requires_filter_block() {
        let m = DrivenMoments::zeros();
        assert!(matches!(
            close_third_order(ThirdMoment::FilterFieldAtom(4), &m, None),
            Err(Error::UnsupportedMoment(_))
        ));
        let mut f = FilterMoments::default();
        f.bd_a = C64::new(0.2, -0.1);
        let mut m = DrivenMoments::zeros();
        m.s[4] = C64::from(0.5);
        let v = close_third_order(ThirdMoment::FilterFieldAtom(4), &m, Some(&f)).unwrap();
        assert!((v - C64::new(0.1, -0.05)).norm() < 1e-15);
        m.a = C64::new(0.1, 0.0);
        assert!(close_third_order(ThirdMoment::FilterFieldAtom(4), &m, Some(&f)).is_err());
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let m = DrivenMoments::zeros();
        assert!(close_third_order(ThirdMoment::PhotonNumberAtom(9), &m, None).is_err());
    }
}
