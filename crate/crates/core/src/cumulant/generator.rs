// SPDX-License-Identifier: Apache-2.0

//! Single-atom Heisenberg generator in the transition-operator basis.
//!
//! `E_μ = |s⟩⟨t|` with `μ = 3s + t`. Each matrix `M` below is defined by
//! `op(E_μ) = Σ_ν M[μ][ν] E_ν`.

use nalgebra::Matrix3;

use crate::model::PhysicalParams;
use crate::C64;

pub type Mat9 = [[C64; 9]; 9];

type M3 = Matrix3<C64>;

const I: C64 = C64::new(0.0, 1.0);

fn basis(mu: usize) -> M3 {
    let mut m = M3::zeros();
    m[(mu / 3, mu % 3)] = C64::new(1.0, 0.0);
    m
}

fn to_row(x: &M3) -> [C64; 9] {
    std::array::from_fn(|nu| x[(nu / 3, nu % 3)])
}

fn anti(a: &M3, b: &M3) -> M3 {
    a * b + b * a
}

/// Atomic part of the adjoint Lindbladian plus the commutators with the
/// atom-cavity coupling operators.
#[derive(Debug, Clone)]
pub struct AtomGenerator {
    /// Free evolution, decay and pumping: `L†(E_μ)`.
    pub mx: Mat9,
    /// `[A_Bg, E_μ]`.
    pub kd: Mat9,
    /// `[A_gB, E_μ]`.
    pub ku: Mat9,
}

impl AtomGenerator {
    /// Generator with atomic frequency `omega_a` measured in the chosen frame.
    pub fn new(p: &PhysicalParams, omega_a: f64) -> Self {
        let e = |s: usize, t: usize| basis(3 * s + t);
        let (g, b, d) = (0, 1, 2);
        let h = (e(b, b) + e(d, d)) * C64::from(omega_a)
            + (e(b, d) + e(d, b)) * C64::from(0.5 * p.delta_zeeman);
        let gp = C64::from(p.big_gamma_plus());
        let gm = C64::from(p.big_gamma_minus());
        let lp = C64::from(p.lambda_plus());
        let lm = C64::from(p.lambda_minus());
        // Σ c_jk L_k† L_j for the two decay channels.
        let k_dec = (e(b, b) + e(d, d)) * gp + (e(b, d) + e(d, b)) * gm;
        let a_gg = e(g, g);
        let a_bg = e(b, g);
        let a_gb = e(g, b);

        let mut mx = [[C64::new(0.0, 0.0); 9]; 9];
        let mut kd = mx;
        let mut ku = mx;
        for mu in 0..9 {
            let x = basis(mu);
            let mut l = (h * x - x * h) * I;
            l += k_dec * x[(g, g)] - anti(&k_dec, &x) * C64::from(0.5);
            let feed = lp * (x[(b, b)] + x[(d, d)]) + lm * (x[(b, d)] + x[(d, b)]);
            l += a_gg * feed - anti(&a_gg, &x) * lp;
            mx[mu] = to_row(&l);
            kd[mu] = to_row(&(a_bg * x - x * a_bg));
            ku[mu] = to_row(&(a_gb * x - x * a_gb));
        }
        Self { mx, kd, ku }
    }
}

/// `A_gB E_μ` on the same atom, returned as an operator index.
pub fn lower_product(mu: usize) -> Option<usize> {
    // A_gB |s⟩⟨t| = δ_{Bs} |g⟩⟨t|.
    (mu / 3 == 1).then_some(mu % 3)
}
