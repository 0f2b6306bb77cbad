// SPDX-License-Identifier: Apache-2.0

//! Brute-force master equation for a few atoms and a truncated photon space.
//!
//! The Hilbert space is `{g,B,D}^⊗N ⊗ Fock(n_max)` with basis index
//! `(Σ_k l_k 3^{N-1-k})·(n_max+1) + n`. Density matrices are stored densely and
//! row-major inside the propagation loop; operators are sparse and assembled
//! from Kronecker products of 3×3 atomic and `(n_max+1)`-dimensional photon
//! blocks.

use log::warn;
use nalgebra::{DMatrix, Matrix3};

use crate::cumulant::DrivenMoments;
use crate::dynamics::{integrate, steady_state, IntegrationConfig, SteadyConfig, SteadyState};
use crate::error::{Error, Result};
use crate::model::{validate_params, DriveShape, Level, MomentState, PhysicalParams};
use crate::C64;

pub const MAX_ATOMS: usize = 3;
pub const MAX_CUTOFF: usize = 12;
/// Largest excitation block handled by the dense stationary solve.
pub const MAX_DIRECT_BLOCK: usize = 4000;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; dim + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        let mut out = Self {
            dim,
            indptr,
            indices,
            values,
        };
        out.prune();
        out
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != ZERO) {
            return;
        }
        let trip: Vec<_> = self.triplets().filter(|t| t.2 != ZERO).collect();
        *self = Self::from_triplets(self.dim, trip);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    /// `Σ c_i A_i`.
    pub fn combine(dim: usize, terms: &[(C64, &Csr)]) -> Self {
        let trip = terms
            .iter()
            .flat_map(|(c, a)| a.triplets().map(move |(r, k, v)| (r, k, c * v)))
            .collect();
        Self::from_triplets(dim, trip)
    }

    pub fn matmul(&self, other: &Csr) -> Self {
        let mut trip = Vec::new();
        for (r, k, a) in self.triplets() {
            for j in other.indptr[k]..other.indptr[k + 1] {
                trip.push((r, other.indices[j], a * other.values[j]));
            }
        }
        Self::from_triplets(self.dim, trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// `out += coef · A X` for row-major `X`.
    fn left_mul_add(&self, x: &[C64], out: &mut [C64], coef: C64) {
        let d = self.dim;
        for r in 0..d {
            let dst = &mut out[r * d..(r + 1) * d];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = coef * self.values[k];
                let src = &x[self.indices[k] * d..(self.indices[k] + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
        }
    }

    /// `out += coef · X A` for row-major `X`.
    fn right_mul_add(&self, x: &[C64], out: &mut [C64], coef: C64) {
        let d = self.dim;
        for i in 0..d {
            let xi = &x[i * d..(i + 1) * d];
            let oi = &mut out[i * d..(i + 1) * d];
            for (k, &xik) in xi.iter().enumerate() {
                if xik == ZERO {
                    continue;
                }
                let s = coef * xik;
                for j in self.indptr[k]..self.indptr[k + 1] {
                    oi[self.indices[j]] += s * self.values[j];
                }
            }
        }
    }

    /// `Tr(A ρ)` for a dense `ρ`.
    pub fn expect(&self, rho: &DMatrix<C64>) -> C64 {
        self.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum()
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dense_kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Operator algebra of one truncated Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    pub n_atoms: usize,
    pub n_max: usize,
}

impl Space {
    pub fn new(n_atoms: usize, n_max: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > MAX_ATOMS || n_max > MAX_CUTOFF {
            return Err(Error::DimensionOverflow {
                atoms: n_atoms,
                n_max,
            });
        }
        if n_max == 0 {
            return Err(Error::InvalidParams("photon cutoff must be >= 1".into()));
        }
        Ok(Self { n_atoms, n_max })
    }

    pub fn atom_dim(&self) -> usize {
        3usize.pow(self.n_atoms as u32)
    }

    pub fn photon_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.atom_dim() * self.photon_dim()
    }

    pub fn index(&self, levels: &[Level], photons: usize) -> usize {
        let atoms = levels.iter().fold(0, |acc, &l| 3 * acc + l as usize);
        atoms * self.photon_dim() + photons
    }

    /// Sparse operator `⊗_k atom_k ⊗ photon`, identity where `None`.
    pub fn embed(&self, atoms: &[(usize, Matrix3<C64>)], photon: Option<&DMatrix<C64>>) -> Csr {
        let eye3 = DMatrix::<C64>::identity(3, 3);
        let mut m = DMatrix::<C64>::identity(1, 1);
        for k in 0..self.n_atoms {
            let f = atoms
                .iter()
                .filter(|(site, _)| *site == k)
                .fold(None::<DMatrix<C64>>, |acc, (_, a)| {
                    let a = DMatrix::from_iterator(3, 3, a.iter().copied());
                    Some(match acc {
                        None => a,
                        Some(prev) => prev * a,
                    })
                })
                .unwrap_or_else(|| eye3.clone());
            m = dense_kron(&m, &f);
        }
        let ph = photon
            .cloned()
            .unwrap_or_else(|| DMatrix::identity(self.photon_dim(), self.photon_dim()));
        sparse_kron(&m, &ph)
    }

    pub fn annihilation(&self) -> DMatrix<C64> {
        let d = self.photon_dim();
        let mut a = DMatrix::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        a
    }

    /// `a` on the full space.
    pub fn field(&self) -> Csr {
        self.embed(&[], Some(&self.annihilation()))
    }

    /// `A_st` on atom `k`.
    pub fn atom(&self, k: usize, s: Level, t: Level) -> Csr {
        self.embed(&[(k, transition(s, t))], None)
    }

    /// Squared collective pseudo-spin of the `g ↔ s` transition.
    pub fn collective_spin_squared(&self, s: Level) -> Csr {
        let d = self.dim();
        let jz_terms: Vec<Csr> = (0..self.n_atoms)
            .map(|k| {
                Csr::combine(
                    d,
                    &[
                        (C64::from(0.5), &self.atom(k, s, s)),
                        (C64::from(-0.5), &self.atom(k, Level::G, Level::G)),
                    ],
                )
            })
            .collect();
        let raise: Vec<Csr> = (0..self.n_atoms).map(|k| self.atom(k, s, Level::G)).collect();
        let sum = |v: &[Csr]| Csr::combine(d, &v.iter().map(|a| (ONE, a)).collect::<Vec<_>>());
        let jz = sum(&jz_terms);
        let jp = sum(&raise);
        let jm = jp.adjoint();
        Csr::combine(
            d,
            &[
                (ONE, &jz.matmul(&jz)),
                (C64::from(0.5), &jp.matmul(&jm)),
                (C64::from(0.5), &jm.matmul(&jp)),
            ],
        )
    }
}

fn sparse_kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Csr {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut trip = Vec::new();
    for i in 0..ra {
        for j in 0..ca {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    let y = b[(k, l)];
                    if y != ZERO {
                        trip.push((i * rb + k, j * cb + l, x * y));
                    }
                }
            }
        }
    }
    Csr::from_triplets(ra * rb, trip)
}

/// `|s⟩⟨t|` on one atom.
pub fn transition(s: Level, t: Level) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    m[(s as usize, t as usize)] = ONE;
    m
}

/// How the Zeeman-sublevel dissipators are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipatorForm {
    /// Bright/dark jump operators with the `D[o,p]` cross terms.
    CrossTerms,
    /// Independent jumps through the `σ±` sublevels `(B ± D)/√2`.
    Sublevels,
}

/// Density matrix over the truncated Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub n_atoms: usize,
    pub n_max: usize,
    pub rho: DMatrix<C64>,
}

impl DensityState {
    pub fn space(&self) -> Space {
        Space {
            n_atoms: self.n_atoms,
            n_max: self.n_max,
        }
    }

    /// Projector on a product basis state.
    pub fn product(space: Space, levels: &[Level], photons: usize) -> Result<Self> {
        if levels.len() != space.n_atoms || photons > space.n_max {
            return Err(Error::InvalidDensity(format!(
                "basis state with {} atoms and {} photons is outside the space",
                levels.len(),
                photons
            )));
        }
        let d = space.dim();
        let mut rho = DMatrix::zeros(d, d);
        let i = space.index(levels, photons);
        rho[(i, i)] = ONE;
        Ok(Self {
            n_atoms: space.n_atoms,
            n_max: space.n_max,
            rho,
        })
    }

    /// All atoms in `g`, cavity in vacuum.
    pub fn ground(space: Space) -> Self {
        Self::product(space, &vec![Level::G; space.n_atoms], 0).expect("ground state fits")
    }

    /// `|ψ⟩⟨ψ|` for a normalised vector.
    pub fn pure(space: Space, psi: &[C64]) -> Result<Self> {
        let d = space.dim();
        if psi.len() != d {
            return Err(Error::InvalidDensity(format!(
                "state vector length {} does not match dimension {d}",
                psi.len()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        let s = Self {
            n_atoms: space.n_atoms,
            n_max: space.n_max,
            rho: &v * v.adjoint(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Checks unit trace, hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let herm = max_abs(&(&self.rho - self.rho.adjoint()));
        if herm > 1e-12 {
            return Err(Error::InvalidDensity(format!("hermiticity violated by {herm:e}")));
        }
        let h = (&self.rho + self.rho.adjoint()) * C64::from(0.5);
        let min = h.symmetric_eigenvalues().min();
        if min < -1e-8 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    fn to_row_major(&self) -> Vec<C64> {
        self.rho.transpose().as_slice().to_vec()
    }

    fn from_row_major(space: Space, v: &[C64]) -> Self {
        let d = space.dim();
        Self {
            n_atoms: space.n_atoms,
            n_max: space.n_max,
            rho: DMatrix::from_row_slice(d, d, v),
        }
    }

    fn to_reals(&self) -> Vec<f64> {
        self.to_row_major().iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn from_reals(space: Space, y: &[f64]) -> Self {
        let v: Vec<C64> = y.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        Self::from_row_major(space, &v)
    }

    /// Removes the anti-hermitian part left by round-off.
    pub fn symmetrised(mut self) -> Self {
        self.rho = (&self.rho + self.rho.adjoint()) * C64::from(0.5);
        self
    }
}

/// Liouvillian `L(ρ) = −i(H_eff ρ − ρ H_eff†) + Σ c_jk L_j ρ L_k†`.
#[derive(Debug, Clone)]
pub struct ExactSystem {
    space: Space,
    h_eff: Csr,
    h_eff_dag: Csr,
    jumps: Vec<Csr>,
    jumps_dag: Vec<Csr>,
    /// `(j, k, c_jk)`.
    weights: Vec<(usize, usize, C64)>,
    driven: bool,
}

/// Full generator of the master equation for `n_atoms` atoms and photon
/// cutoff `n_max`, in the frame of the drive (or of the frame carrier when
/// undriven). Only constant drives are supported.
pub fn build_generator(p: &PhysicalParams, n_atoms: usize, n_max: usize) -> Result<ExactSystem> {
    build_generator_with(p, n_atoms, n_max, DissipatorForm::CrossTerms)
}

pub fn build_generator_with(
    p: &PhysicalParams,
    n_atoms: usize,
    n_max: usize,
    form: DissipatorForm,
) -> Result<ExactSystem> {
    let space = Space::new(n_atoms, n_max)?;
    let c = validate_params(p, false)?;
    if (p.n_atoms as usize) != n_atoms {
        warn!(
            "exact generator built for {n_atoms} atoms while params specify {}",
            p.n_atoms
        );
    }
    let (wd, omega) = match &p.drive {
        Some(d) if d.shape == DriveShape::Gaussian => {
            return Err(Error::InvalidParams(
                "the exact oracle supports constant drives only".into(),
            ))
        }
        Some(d) => (d.omega_d_offset, d.amp0),
        None => (0.0, 0.0),
    };
    let w_a = p.omega_a_offset - wd;
    let w_c = p.omega_c_offset - wd;
    let dim = space.dim();
    use Level::*;
    let e = transition;
    let a_ph = space.annihilation();
    let a_dag_ph = a_ph.adjoint();
    let sqrt2g = std::f64::consts::SQRT_2 * p.g;

    let mut h_terms: Vec<(C64, Csr)> = Vec::new();
    let h_atom = (e(B, B) + e(D, D)) * C64::from(w_a) + (e(B, D) + e(D, B)) * C64::from(0.5 * p.delta_zeeman);
    for k in 0..n_atoms {
        h_terms.push((ONE, space.embed(&[(k, h_atom)], None)));
        h_terms.push((C64::from(sqrt2g), space.embed(&[(k, e(B, G))], Some(&a_ph))));
        h_terms.push((C64::from(sqrt2g), space.embed(&[(k, e(G, B))], Some(&a_dag_ph))));
    }
    h_terms.push((C64::from(w_c), space.embed(&[], Some(&(&a_dag_ph * &a_ph)))));
    if omega != 0.0 {
        h_terms.push((C64::from(p.kappa1.sqrt() * omega), space.embed(&[], Some(&(&a_ph + &a_dag_ph)))));
    }

    // Jump operators and their Kossakowski weights.
    let mut jumps: Vec<Csr> = Vec::new();
    let mut weights: Vec<(usize, usize, C64)> = Vec::new();
    let mut push_group = |ops: Vec<Csr>, cm: [[f64; 2]; 2], jumps: &mut Vec<Csr>| {
        let base = jumps.len();
        let n = ops.len();
        jumps.extend(ops);
        for j in 0..n {
            for k in 0..n {
                let w = if n == 1 { cm[0][0] } else { cm[j][k] };
                if w != 0.0 {
                    weights.push((base + j, base + k, C64::from(w)));
                }
            }
        }
    };
    let r = 1.0 / std::f64::consts::SQRT_2;
    // σ± sublevel operators |e±⟩ = (|B⟩ ± |D⟩)/√2.
    let down = |sgn: f64| (e(G, B) + e(G, D) * C64::from(sgn)) * C64::from(r);
    let up = |sgn: f64| (e(B, G) + e(D, G) * C64::from(sgn)) * C64::from(r);
    for k in 0..n_atoms {
        match form {
            DissipatorForm::CrossTerms => {
                let gp = c.big_gamma_plus;
                let gm = c.big_gamma_minus;
                let lp = c.lambda_plus;
                let lm = c.lambda_minus;
                push_group(
                    vec![space.embed(&[(k, e(G, B))], None), space.embed(&[(k, e(G, D))], None)],
                    [[gp, gm], [gm, gp]],
                    &mut jumps,
                );
                push_group(
                    vec![space.embed(&[(k, e(B, G))], None), space.embed(&[(k, e(D, G))], None)],
                    [[lp, lm], [lm, lp]],
                    &mut jumps,
                );
            }
            DissipatorForm::Sublevels => {
                for (rate, op) in [
                    (p.gamma_plus, down(1.0)),
                    (p.gamma_minus, down(-1.0)),
                    (p.eta_plus, up(1.0)),
                    (p.eta_minus, up(-1.0)),
                ] {
                    push_group(vec![space.embed(&[(k, op)], None)], [[rate, 0.0], [0.0, 0.0]], &mut jumps);
                }
            }
        }
    }
    push_group(vec![space.field()], [[c.kappa, 0.0], [0.0, 0.0]], &mut jumps);

    let mut k_terms: Vec<(C64, Csr)> = Vec::new();
    for &(j, k, w) in &weights {
        k_terms.push((w * C64::new(0.0, -0.5), jumps[k].adjoint().matmul(&jumps[j])));
    }
    let all: Vec<(C64, &Csr)> = h_terms
        .iter()
        .chain(k_terms.iter())
        .map(|(c, m)| (*c, m))
        .collect();
    let h_eff = Csr::combine(dim, &all);
    let h_eff_dag = h_eff.adjoint();
    let jumps_dag = jumps.iter().map(Csr::adjoint).collect();
    Ok(ExactSystem {
        space,
        h_eff,
        h_eff_dag,
        jumps,
        jumps_dag,
        weights,
        driven: omega != 0.0,
    })
}

impl ExactSystem {
    pub fn space(&self) -> Space {
        self.space
    }

    /// `out = L(ρ)` on row-major storage.
    pub fn apply_row_major(&self, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        out.iter_mut().for_each(|z| *z = ZERO);
        self.h_eff.left_mul_add(rho, out, -I);
        self.h_eff_dag.right_mul_add(rho, out, I);
        scratch.resize(rho.len(), ZERO);
        let mut current: Option<usize> = None;
        for &(j, k, w) in &self.weights {
            if current != Some(j) {
                scratch.iter_mut().for_each(|z| *z = ZERO);
                self.jumps[j].left_mul_add(rho, scratch, ONE);
                current = Some(j);
            }
            self.jumps_dag[k].right_mul_add(scratch, out, w);
        }
    }

    pub fn apply(&self, d: &DensityState) -> DMatrix<C64> {
        let rho = d.to_row_major();
        let mut out = vec![ZERO; rho.len()];
        let mut scratch = Vec::new();
        self.apply_row_major(&rho, &mut out, &mut scratch);
        DensityState::from_row_major(self.space, &out).rho
    }

    /// Right-hand side on the real vector `[Re ρ_00, Im ρ_00, Re ρ_01, …]`.
    pub fn rhs(&self) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
        let n = self.space.dim().pow(2);
        let mut rho = vec![ZERO; n];
        let mut out = vec![ZERO; n];
        let mut scratch = Vec::new();
        move |_t, y, dy| {
            for (z, c) in rho.iter_mut().zip(y.chunks_exact(2)) {
                *z = C64::new(c[0], c[1]);
            }
            self.apply_row_major(&rho, &mut out, &mut scratch);
            for (c, z) in dy.chunks_exact_mut(2).zip(&out) {
                c[0] = z.re;
                c[1] = z.im;
            }
        }
    }

    /// Propagates `rho0`, validating every output sample.
    pub fn evolve(&self, rho0: &DensityState, cfg: &IntegrationConfig) -> Result<Vec<(f64, DensityState)>> {
        self.check_space(rho0)?;
        let traj = integrate(self.rhs(), 0.0, &rho0.to_reals(), cfg)?;
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, y)| {
                let d = DensityState::from_reals(self.space, y);
                d.validate()?;
                Ok((t, d))
            })
            .collect()
    }

    /// Excitation number (photons plus excited atoms) of every basis state.
    fn excitations(&self) -> Vec<usize> {
        let sp = self.space;
        (0..sp.dim())
            .map(|i| {
                let mut atoms = i / sp.photon_dim();
                let mut e = i % sp.photon_dim();
                for _ in 0..sp.n_atoms {
                    e += usize::from(atoms % 3 != 0);
                    atoms /= 3;
                }
                e
            })
            .collect()
    }

    /// Stationary state of an undriven generator from a direct linear solve.
    ///
    /// Without a coherent drive `L` conserves the difference of ket and bra
    /// excitation numbers, so the stationary state lies in the block of
    /// elements `ρ_ij` with equal excitations; there `L ρ = 0` is solved with
    /// one equation replaced by `tr ρ = 1`. Returns the state and `‖L ρ‖`.
    pub fn steady_direct(&self) -> Result<(DensityState, f64)> {
        if self.driven {
            return Err(Error::InvalidParams(
                "direct stationary solve requires an undriven generator".into(),
            ));
        }
        let d = self.space.dim();
        let exc = self.excitations();
        let block: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| exc[i] == exc[j])
            .collect();
        if block.len() > MAX_DIRECT_BLOCK {
            return Err(Error::DimensionOverflow {
                atoms: self.space.n_atoms,
                n_max: self.space.n_max,
            });
        }
        let mut pos = vec![usize::MAX; d * d];
        for (k, &(i, j)) in block.iter().enumerate() {
            pos[i * d + j] = k;
        }
        let nb = block.len();
        let mut m = DMatrix::<C64>::zeros(nb, nb);
        let mut e_ij = vec![ZERO; d * d];
        let mut out = vec![ZERO; d * d];
        let mut scratch = Vec::new();
        for (col, &(i, j)) in block.iter().enumerate() {
            e_ij[i * d + j] = ONE;
            self.apply_row_major(&e_ij, &mut out, &mut scratch);
            e_ij[i * d + j] = ZERO;
            for (idx, &v) in out.iter().enumerate() {
                if v != ZERO {
                    let row = pos[idx];
                    debug_assert!(row != usize::MAX, "generator leaves the excitation block");
                    if row != usize::MAX {
                        m[(row, col)] = v;
                    }
                }
            }
        }
        let mut rhs = nalgebra::DVector::<C64>::zeros(nb);
        let anchor = pos[0];
        for c in 0..nb {
            let (i, j) = block[c];
            m[(anchor, c)] = if i == j { ONE } else { ZERO };
        }
        rhs[anchor] = ONE;
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidDensity("singular stationary system".into()))?;
        let mut rho = vec![ZERO; d * d];
        for (k, &(i, j)) in block.iter().enumerate() {
            rho[i * d + j] = x[k];
        }
        let state = DensityState::from_row_major(self.space, &rho).symmetrised();
        let r = max_abs(&self.apply(&state));
        state.validate()?;
        Ok((state, r))
    }

    /// Steady state by time march from `rho0` (no Newton polish: the
    /// Jacobian would be dense in `dim²`).
    pub fn steady(&self, rho0: &DensityState, cfg: &SteadyConfig) -> Result<(DensityState, SteadyState)> {
        self.check_space(rho0)?;
        let mut cfg = *cfg;
        cfg.newton = false;
        let ss = steady_state(self.rhs(), &rho0.to_reals(), &cfg, &[])?;
        let d = DensityState::from_reals(self.space, &ss.state).symmetrised();
        d.validate()?;
        Ok((d, ss))
    }

    fn check_space(&self, d: &DensityState) -> Result<()> {
        if d.space() != self.space {
            return Err(Error::InvalidDensity(format!(
                "state has {} atoms / cutoff {}, generator has {} / {}",
                d.n_atoms, d.n_max, self.space.n_atoms, self.space.n_max
            )));
        }
        Ok(())
    }
}

/// Moments of `d` as unpacked driven moments (atom- and pair-averaged). For a
/// single atom the pair block is left at zero.
pub fn exact_driven_moments(d: &DensityState) -> DrivenMoments {
    let sp = d.space();
    let n = sp.n_atoms;
    let a_ph = sp.annihilation();
    let mut m = DrivenMoments::zeros();
    m.a = sp.field().expect(&d.rho);
    m.aa = sp.embed(&[], Some(&(&a_ph * &a_ph))).expect(&d.rho);
    m.n = sp.embed(&[], Some(&(a_ph.adjoint() * &a_ph))).expect(&d.rho).re;
    let lv = Level::ALL;
    let inv_n = 1.0 / n as f64;
    for mu in 0..9 {
        let op = transition(lv[mu / 3], lv[mu % 3]);
        for k in 0..n {
            m.s[mu] += sp.embed(&[(k, op)], None).expect(&d.rho) * inv_n;
            m.p[mu] += sp.embed(&[(k, op)], Some(&a_ph)).expect(&d.rho) * inv_n;
        }
    }
    if n > 1 {
        let pairs = (n * (n - 1)) as f64;
        for mu in 0..9 {
            let x = transition(lv[mu / 3], lv[mu % 3]);
            for nu in 0..9 {
                let y = transition(lv[nu / 3], lv[nu % 3]);
                let mut acc = ZERO;
                for k in 0..n {
                    for j in 0..n {
                        if j != k {
                            acc += sp.embed(&[(k, x), (j, y)], None).expect(&d.rho);
                        }
                    }
                }
                m.c[mu][nu] = acc / pairs;
            }
        }
    }
    m
}

/// Moments of `d` in the driven layout.
pub fn exact_moments(d: &DensityState) -> MomentState {
    exact_driven_moments(d).to_state()
}
