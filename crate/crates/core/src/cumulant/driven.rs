// SPDX-License-Identifier: Apache-2.0

//! Coherent, probe-driven cumulant equations.
//!
//! Moments tracked for one representative atom `k` and one ordered pair
//! `k ≠ k'`: `⟨a⟩`, `⟨aa⟩`, `⟨a†a⟩`, `⟨A_μ⟩`, `⟨aA_μ⟩` and `⟨A_μ^k A_ν^k'⟩`.
//! Only hermitian- and exchange-independent parts are stored (see
//! [`PairTable`]); everything else is rebuilt on unpacking.
//!
//! The equations are evaluated in the frame rotating at the drive carrier.

use std::sync::OnceLock;

use crate::error::Result;
use crate::model::{
    adjoint_index, driven_offsets as off, op_index, DriveConfig, Layout, Level, MomentState,
    PairTable, PhysicalParams,
};
use crate::C64;

use super::closure::{conj_field_atom_atom, field_atom_atom, field_field_atom, photon_number_atom};
use super::generator::{lower_product, AtomGenerator, Mat9};
use super::reduced::ReducedMoments;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Indices of the stored off-diagonal single-atom expectations.
const S_OFFDIAG: [usize; 3] = [1, 2, 5];
const S_DIAG: [usize; 3] = [0, 4, 8];

pub fn pair_table() -> &'static PairTable {
    static TABLE: OnceLock<PairTable> = OnceLock::new();
    TABLE.get_or_init(PairTable::build)
}

/// Unpacked complex moments of the driven layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenMoments {
    pub a: C64,
    pub aa: C64,
    pub n: f64,
    /// `⟨A_μ⟩`.
    pub s: [C64; 9],
    /// `⟨a A_μ⟩`.
    pub p: [C64; 9],
    /// `⟨A_μ^k A_ν^k'⟩`.
    pub c: Mat9,
}

impl DrivenMoments {
    pub fn zeros() -> Self {
        Self {
            a: ZERO,
            aa: ZERO,
            n: 0.0,
            s: [ZERO; 9],
            p: [ZERO; 9],
            c: [[ZERO; 9]; 9],
        }
    }

    /// `⟨a† A_μ⟩ = ⟨a A_μ†⟩*`.
    #[inline]
    pub fn q(&self, mu: usize) -> C64 {
        self.p[adjoint_index(mu)].conj()
    }

    pub fn unpack(v: &[f64]) -> Self {
        let mut m = Self::zeros();
        m.a = C64::new(v[off::A], v[off::A + 1]);
        m.aa = C64::new(v[off::AA], v[off::AA + 1]);
        m.n = v[off::N];
        for (k, &mu) in S_DIAG.iter().enumerate() {
            m.s[mu] = C64::from(v[off::S + k]);
        }
        for (k, &mu) in S_OFFDIAG.iter().enumerate() {
            let z = C64::new(v[off::S + 3 + 2 * k], v[off::S + 4 + 2 * k]);
            m.s[mu] = z;
            m.s[adjoint_index(mu)] = z.conj();
        }
        for mu in 0..9 {
            m.p[mu] = C64::new(v[off::P + 2 * mu], v[off::P + 2 * mu + 1]);
        }
        let t = pair_table();
        for mu in 0..9 {
            for nu in 0..9 {
                let sl = t.slots[mu][nu];
                let re = v[off::C + sl.offset];
                let z = if sl.real {
                    C64::from(re)
                } else {
                    C64::new(re, v[off::C + sl.offset + 1])
                };
                m.c[mu][nu] = if sl.conjugate { z.conj() } else { z };
            }
        }
        m
    }

    /// Writes the independent parts; symmetry partners are ignored.
    pub fn pack(&self, v: &mut [f64]) {
        v[off::A] = self.a.re;
        v[off::A + 1] = self.a.im;
        v[off::AA] = self.aa.re;
        v[off::AA + 1] = self.aa.im;
        v[off::N] = self.n;
        for (k, &mu) in S_DIAG.iter().enumerate() {
            v[off::S + k] = self.s[mu].re;
        }
        for (k, &mu) in S_OFFDIAG.iter().enumerate() {
            v[off::S + 3 + 2 * k] = self.s[mu].re;
            v[off::S + 4 + 2 * k] = self.s[mu].im;
        }
        for mu in 0..9 {
            v[off::P + 2 * mu] = self.p[mu].re;
            v[off::P + 2 * mu + 1] = self.p[mu].im;
        }
        let t = pair_table();
        for &(mu, nu, real) in &t.reps {
            let o = off::C + t.slots[mu][nu].offset;
            v[o] = self.c[mu][nu].re;
            if !real {
                v[o + 1] = self.c[mu][nu].im;
            }
        }
    }

    pub fn from_state(s: &MomentState) -> Result<Self> {
        s.expect_layout(Layout::Driven102)?;
        Ok(Self::unpack(&s.values))
    }

    pub fn to_state(&self) -> MomentState {
        let mut v = vec![0.0; off::LEN];
        self.pack(&mut v);
        MomentState {
            layout: Layout::Driven102,
            values: v,
        }
    }

    /// Embeds a coherence-free state: coherent amplitudes vanish and pairs that
    /// the reduced system does not track are factorised.
    pub fn from_reduced(r: &ReducedMoments) -> Self {
        use Level::*;
        let mut m = Self::zeros();
        m.n = r.n;
        m.s[op_index(G, G)] = C64::from(r.gg);
        m.s[op_index(B, B)] = C64::from(r.bb);
        m.s[op_index(D, D)] = C64::from(r.dd);
        m.s[op_index(B, D)] = r.bd;
        m.s[op_index(D, B)] = r.bd.conj();
        m.p[op_index(B, G)] = r.a_bg;
        m.p[op_index(D, G)] = r.a_dg;
        let phase_free = |mu: usize| matches!(mu, 0 | 4 | 5 | 7 | 8);
        for mu in 0..9 {
            for nu in 0..9 {
                if phase_free(mu) && phase_free(nu) {
                    m.c[mu][nu] = m.s[mu] * m.s[nu];
                }
            }
        }
        let (gb, gd, bg, dg) = (op_index(G, B), op_index(G, D), op_index(B, G), op_index(D, G));
        let mut set = |x: usize, y: usize, z: C64| {
            m.c[x][y] = z;
            m.c[y][x] = z;
        };
        set(gb, bg, C64::from(r.c_bb));
        set(gb, dg, r.c_bd);
        set(gd, bg, r.c_bd.conj());
        set(gd, dg, C64::from(r.c_dd));
        m
    }
}

/// Precomputed coefficients of the driven equations for one parameter set.
#[derive(Debug, Clone)]
pub struct DrivenSystem {
    gen: AtomGenerator,
    omega_c: f64,
    kappa: f64,
    n_atoms: f64,
    sqrt2g: f64,
    sqrt_kappa1: f64,
    drive: Option<DriveConfig>,
    kd_nz: Vec<Vec<(usize, C64)>>,
    ku_nz: Vec<Vec<(usize, C64)>>,
    mx_nz: Vec<Vec<(usize, C64)>>,
}

fn nonzeros(m: &Mat9) -> Vec<Vec<(usize, C64)>> {
    m.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, z)| z.norm() != 0.0)
                .map(|(i, z)| (i, *z))
                .collect()
        })
        .collect()
}

impl DrivenSystem {
    pub fn new(p: &PhysicalParams) -> Result<Self> {
        crate::model::validate_params(p, true)?;
        let wd = p.drive.map(|d| d.omega_d_offset).unwrap_or(0.0);
        let gen = AtomGenerator::new(p, p.omega_a_offset - wd);
        Ok(Self {
            kd_nz: nonzeros(&gen.kd),
            ku_nz: nonzeros(&gen.ku),
            mx_nz: nonzeros(&gen.mx),
            gen,
            omega_c: p.omega_c_offset - wd,
            kappa: p.kappa(),
            n_atoms: p.n(),
            sqrt2g: std::f64::consts::SQRT_2 * p.g,
            sqrt_kappa1: p.kappa1.sqrt(),
            drive: p.drive,
        })
    }

    pub fn generator(&self) -> &AtomGenerator {
        &self.gen
    }

    /// `sqrt(κ1) Ω(t)`.
    pub fn drive_rate(&self, t: f64) -> f64 {
        self.sqrt_kappa1 * self.drive.map(|d| d.amplitude(t)).unwrap_or(0.0)
    }

    /// Full time derivative with every tensor entry populated.
    pub fn derivative(&self, t: f64, m: &DrivenMoments) -> DrivenMoments {
        let n_at = self.n_atoms;
        let g2 = self.sqrt2g;
        let ig2 = I * g2;
        let drive = self.drive_rate(t);
        let cav = C64::new(0.5 * self.kappa, self.omega_c);
        let (gb, bg) = (op_index(Level::G, Level::B), op_index(Level::B, Level::G));

        let mut d = DrivenMoments::zeros();
        // Field amplitude, with the collective atomic polarisation as source.
        d.a = -cav * m.a - I * drive - ig2 * n_at * m.s[gb];
        // Photon number.
        d.n = -self.kappa * m.n - 2.0 * drive * m.a.im - 2.0 * g2 * n_at * m.p[bg].im;
        d.aa = -2.0 * cav * m.aa - 2.0 * I * drive * m.a - 2.0 * ig2 * n_at * m.p[gb];

        let q: [C64; 9] = std::array::from_fn(|mu| m.q(mu));
        let aa_a: [C64; 9] = std::array::from_fn(|mu| field_field_atom(m, mu));
        let ada_a: [C64; 9] = std::array::from_fn(|mu| photon_number_atom(m, mu));

        for mu in 0..9 {
            let mut ds = ZERO;
            let mut dp = -cav * m.p[mu] - I * drive * m.s[mu];
            for &(nu, c) in &self.mx_nz[mu] {
                ds += c * m.s[nu];
                dp += c * m.p[nu];
            }
            for &(la, c) in &self.kd_nz[mu] {
                ds += ig2 * c * m.p[la];
                dp += ig2 * c * aa_a[la];
            }
            for &(la, c) in &self.ku_nz[mu] {
                ds += ig2 * c * q[la];
                dp += ig2 * c * (ada_a[la] + m.s[la]);
            }
            // Photon absorbed back by the same atom, then by the other N − 1.
            if let Some(t_idx) = lower_product(mu) {
                dp -= ig2 * m.s[t_idx];
            }
            dp -= ig2 * (n_at - 1.0) * m.c[gb][mu];
            d.s[mu] = ds;
            d.p[mu] = dp;
        }

        let mut ta = [[ZERO; 9]; 9];
        let mut tad = [[ZERO; 9]; 9];
        for la in 0..9 {
            for nu in 0..9 {
                ta[la][nu] = field_atom_atom(m, la, nu);
                tad[la][nu] = conj_field_atom_atom(m, la, nu);
            }
        }
        for mu in 0..9 {
            for nu in 0..9 {
                let mut dc = ZERO;
                for &(la, c) in &self.mx_nz[mu] {
                    dc += c * m.c[la][nu];
                }
                for &(la, c) in &self.mx_nz[nu] {
                    dc += c * m.c[mu][la];
                }
                let mut coup = ZERO;
                for &(la, c) in &self.kd_nz[mu] {
                    coup += c * ta[la][nu];
                }
                for &(la, c) in &self.ku_nz[mu] {
                    coup += c * tad[la][nu];
                }
                for &(la, c) in &self.kd_nz[nu] {
                    coup += c * ta[mu][la];
                }
                for &(la, c) in &self.ku_nz[nu] {
                    coup += c * tad[mu][la];
                }
                d.c[mu][nu] = dc + ig2 * coup;
            }
        }
        d
    }

    /// Flat right-hand side for the integrator.
    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let m = DrivenMoments::unpack(y);
        self.derivative(t, &m).pack(dy);
    }
}

/// Time derivative of a driven-layout state.
pub fn driven_rhs(p: &PhysicalParams, t: f64, s: &MomentState) -> Result<MomentState> {
    s.expect_layout(Layout::Driven102)?;
    let sys = DrivenSystem::new(p)?;
    let mut out = MomentState::zeros(Layout::Driven102);
    sys.rhs(t, &s.values, &mut out.values);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegrationConfig};
    use crate::units::{khz, mhz};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> PhysicalParams {
        let mut p = PhysicalParams::new(50, khz(7.5), khz(150.0), khz(7.5))
            .with_zeeman(mhz(0.1))
            .with_drive(DriveConfig::constant(3.0));
        p.gamma_minus = khz(4.0);
        p.eta_plus = khz(3.0);
        p.eta_minus = khz(1.0);
        p.omega_a_offset = khz(30.0);
        p.omega_c_offset = khz(-10.0);
        p
    }

    /// Random state obeying all hermiticity and exchange relations.
    fn random_state(seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..off::LEN).map(|_| r.gen_range(-0.3..0.3)).collect()
    }

    #[test]
    fn ground_vacuum_is_stationary() {
        let mut p = params();
        p.drive = None;
        p.eta_plus = 0.0;
        p.eta_minus = 0.0;
        let s = MomentState::ground(Layout::Driven102);
        let d = driven_rhs(&p, 0.0, &s).unwrap();
        assert!(d.values.iter().all(|&x| x == 0.0), "{:?}", d.values);
    }

    #[test]
    fn pack_round_trip_is_exact() {
        let v = random_state(3);
        let m = DrivenMoments::unpack(&v);
        let mut w = vec![0.0; off::LEN];
        m.pack(&mut w);
        assert_eq!(v, w);
    }

    #[test]
    fn population_is_conserved_algebraically() {
        let sys = DrivenSystem::new(&params()).unwrap();
        for seed in 0..10 {
            let v = random_state(seed);
            let m = DrivenMoments::unpack(&v);
            let d = sys.derivative(0.3, &m);
            let total = d.s[0] + d.s[4] + d.s[8];
            assert!(total.norm() < 1e-12 * 1e4, "{total}");
        }
    }

    #[test]
    fn derivative_respects_symmetries() {
        let sys = DrivenSystem::new(&params()).unwrap();
        for seed in 0..10 {
            let m = DrivenMoments::unpack(&random_state(seed));
            let d = sys.derivative(0.0, &m);
            let scale = 1e4;
            for mu in 0..9 {
                let mb = adjoint_index(mu);
                assert!((d.s[mb] - d.s[mu].conj()).norm() < 1e-12 * scale);
                for nu in 0..9 {
                    let nb = adjoint_index(nu);
                    assert!((d.c[mu][nu] - d.c[nu][mu]).norm() < 1e-12 * scale);
                    assert!((d.c[mb][nb] - d.c[mu][nu].conj()).norm() < 1e-12 * scale);
                }
            }
            assert!(d.n.is_finite());
        }
    }

    #[test]
    fn empty_cavity_reaches_driven_steady_amplitude() {
        let mut p = PhysicalParams::new(1, 0.0, khz(150.0), 0.0)
            .with_drive(DriveConfig::constant(2.0));
        p.omega_c_offset = khz(40.0);
        let sys = DrivenSystem::new(&p).unwrap();
        let y0 = MomentState::ground(Layout::Driven102).values;
        let cfg = IntegrationConfig::default().with_t_end(0.05);
        let tr = integrate(|t, y, dy| sys.rhs(t, y, dy), 0.0, &y0, &cfg).unwrap();
        let a = C64::new(tr.last()[off::A], tr.last()[off::A + 1]);
        let expect = -I * p.kappa1.sqrt() * 2.0 / C64::new(0.5 * p.kappa(), p.omega_c_offset);
        assert!((a - expect).norm() < 1e-7 * expect.norm(), "{a} vs {expect}");
        assert!((tr.last()[off::N] - expect.norm_sqr()).abs() < 1e-6 * expect.norm_sqr());
    }

    #[test]
    fn two_level_limit_keeps_dark_sector_empty() {
        let mut p = PhysicalParams::new(20, khz(7.5), khz(150.0), khz(7.5))
            .with_drive(DriveConfig::constant(20.0));
        p.eta_plus = khz(2.0);
        p.eta_minus = khz(2.0);
        let sys = DrivenSystem::new(&p).unwrap();
        let y0 = MomentState::ground(Layout::Driven102).values;
        let cfg = IntegrationConfig::default().with_t_end(0.02);
        let tr = integrate(|t, y, dy| sys.rhs(t, y, dy), 0.0, &y0, &cfg).unwrap();
        let m = DrivenMoments::unpack(tr.last());
        // Dark population is fed by pumping only; coherences with D stay zero.
        let d = op_index(Level::D, Level::D);
        for mu in 0..9 {
            let touches_dark = mu / 3 == 2 || mu % 3 == 2;
            if touches_dark && mu != d {
                assert!(m.s[mu].norm() < 1e-14, "{mu}");
                assert!(m.p[mu].norm() < 1e-14, "{mu}");
            }
        }
        assert!(m.s[op_index(Level::B, Level::B)].re > 0.0);
    }
}
