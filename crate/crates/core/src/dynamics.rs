// SPDX-License-Identifier: Apache-2.0

//! Time integration and steady-state solving.
//!
//! [`Integrator`] is an explicit Dormand-Prince 5(4) stepper with PI step-size
//! control and the 4th-order continuous extension for dense output. Every right
//! hand side in the crate is written as `f(t, y, dy)` on a flat `&[f64]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    /// Largest allowed step (ms). `f64::INFINITY` for no limit.
    pub max_step: f64,
    /// Spacing of dense-output samples (ms); `0` records accepted steps only.
    pub output_stride: f64,
    pub max_steps: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            t_end: 1.0,
            max_step: f64::INFINITY,
            output_stride: 0.0,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrationConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol <= 1e-2) {
            return Err(Error::InvalidParams(format!(
                "rtol must lie in (0, 1e-2], got {}",
                self.rtol
            )));
        }
        if !(self.atol > 0.0) {
            return Err(Error::InvalidParams("atol must be > 0".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidParams(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        if !(self.max_step > 0.0) || self.output_stride < 0.0 {
            return Err(Error::InvalidParams(
                "max_step must be > 0 and output_stride >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub last_step: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

// Dormand-Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-by-step DOPRI5 driver; owns its state and work buffers.
pub struct Integrator<F> {
    rhs: F,
    cfg: IntegrationConfig,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    cont: [Vec<f64>; 5],
    t_prev: f64,
    err_prev: f64,
    stats: IntegrationStats,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Integrator<F> {
    pub fn new(mut rhs: F, t0: f64, y0: &[f64], cfg: IntegrationConfig) -> Result<Self> {
        cfg.validate()?;
        let n = y0.len();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        rhs(t0, y0, &mut k[0]);
        let mut s = Self {
            rhs,
            cfg,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k,
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            cont: std::array::from_fn(|_| y0.to_vec()),
            t_prev: t0,
            err_prev: 1e-4,
            stats: IntegrationStats {
                rhs_evals: 1,
                min_step: f64::INFINITY,
                ..Default::default()
            },
        };
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Derivative at the current point (first stage of the next step).
    pub fn dydt(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn stats(&self) -> IntegrationStats {
        self.stats
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.cfg.atol + self.cfg.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len();
        if n == 0 {
            return self.cfg.max_step.min(self.cfg.t_end);
        }
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..n {
            let sc = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / n as f64).sqrt();
        d1 = (d1 / n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.cfg.max_step);
        for i in 0..n {
            self.ytmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        let mut f1 = vec![0.0; n];
        (self.rhs)(self.t + h0, &self.ytmp, &mut f1);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..n {
            let sc = self.scale(self.y[i], self.y[i]);
            d2 += ((f1[i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.cfg.max_step)
    }

    /// Advances one accepted step, never past `t_stop`. Returns the new time.
    pub fn step(&mut self, t_stop: f64) -> Result<f64> {
        const SAFETY: f64 = 0.9;
        const BETA: f64 = 0.04;
        const EXPO: f64 = 0.2 - BETA * 0.75;
        let n = self.y.len();
        loop {
            if self.stats.accepted + self.stats.rejected >= self.cfg.max_steps {
                return Err(Error::StepBudget {
                    t: self.t,
                    max_steps: self.cfg.max_steps,
                });
            }
            let mut h = self.h.min(self.cfg.max_step);
            let remaining = t_stop - self.t;
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1e-300) || h <= 0.0 && remaining > 0.0 {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let ytmp = &mut self.ytmp;
            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            (self.rhs)(t + C2 * h, ytmp, k2);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            (self.rhs)(t + C3 * h, ytmp, k3);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.rhs)(t + C4 * h, ytmp, k4);
            for i in 0..n {
                ytmp[i] =
                    y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.rhs)(t + C5 * h, ytmp, k5);
            for i in 0..n {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { t_stop } else { t + h };
            (self.rhs)(t_new, ytmp, k6);
            let ynew = &mut self.ynew;
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            (self.rhs)(t_new, ynew, k7);
            self.stats.rhs_evals += 6;

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.cfg.atol + self.cfg.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
                finite &= ynew[i].is_finite();
            }
            err = if n > 0 { (err / n as f64).sqrt() } else { 0.0 };
            if !finite || !err.is_finite() {
                if h < 1e-12 * (1.0 + t.abs()) {
                    return Err(Error::NonFinite { t });
                }
                self.h = 0.1 * h;
                self.stats.rejected += 1;
                continue;
            }
            if err <= 1.0 {
                // Dense-output coefficients for the accepted step.
                for i in 0..n {
                    let dy = ynew[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    self.cont[0][i] = y[i];
                    self.cont[1][i] = dy;
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = dy - h * k7[i] - bspl;
                    self.cont[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (SAFETY * err.powf(-EXPO) * self.err_prev.powf(BETA)).clamp(0.2, 5.0)
                };
                self.err_prev = err.max(1e-4);
                self.t_prev = t;
                self.t = t_new;
                std::mem::swap(&mut self.y, &mut self.ynew);
                std::mem::swap(k1, k7);
                self.stats.accepted += 1;
                self.stats.last_step = h;
                self.stats.min_step = self.stats.min_step.min(h);
                if !last || fac < 1.0 {
                    self.h = h * fac;
                } else {
                    self.h = self.h.max(h);
                }
                return Ok(self.t);
            }
            let fac = (SAFETY * err.powf(-0.2)).clamp(0.2, 1.0);
            self.h = h * fac;
            self.stats.rejected += 1;
        }
    }

    /// Dense output inside the last accepted step `[t_prev, t]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_prev) / h;
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
    }
}

/// Integrates `rhs` from `(t0, y0)` to `t0 + cfg.t_end`.
///
/// With `output_stride > 0` the trajectory is sampled on `t0 + k·stride`
/// (plus the final point); otherwise every accepted step is recorded.
pub fn integrate<F>(rhs: F, t0: f64, y0: &[f64], cfg: &IntegrationConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_until(rhs, t0, y0, cfg, |_, _| false)
}

/// Like [`integrate`] but stops early once `stop(t, y)` returns true after a
/// recorded sample.
pub fn integrate_until<F, S>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    cfg: &IntegrationConfig,
    mut stop: S,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    let mut it = Integrator::new(rhs, t0, y0, *cfg)?;
    let t_final = t0 + cfg.t_end;
    let mut times = vec![t0];
    let mut states = vec![y0.to_vec()];
    let mut buf = vec![0.0; y0.len()];
    let mut next_out = 1usize;
    let stride = cfg.output_stride;
    'outer: while it.t() < t_final {
        let t = it.step(t_final)?;
        if stride > 0.0 {
            loop {
                let ts = t0 + next_out as f64 * stride;
                if ts > t * (1.0 + 1e-15) || ts > t_final * (1.0 + 1e-15) {
                    break;
                }
                it.interpolate(ts.min(t), &mut buf);
                times.push(ts.min(t));
                states.push(buf.clone());
                next_out += 1;
                if stop(ts, &buf) {
                    break 'outer;
                }
            }
            if t >= t_final && *times.last().unwrap() < t_final {
                times.push(t);
                states.push(it.y().to_vec());
            }
        } else {
            times.push(t);
            states.push(it.y().to_vec());
            if stop(t, it.y()) {
                break;
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        stats: it.stats(),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyConfig {
    pub integration: IntegrationConfig,
    /// Relative residual threshold: ‖f(y)‖ < tol·(1 + ‖y‖).
    pub tol: f64,
    /// Residual checks happen every `check_every` accepted steps.
    pub check_every: usize,
    /// Run damped Newton iterations after the time march.
    pub newton: bool,
    pub newton_max_iter: usize,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            integration: IntegrationConfig::default().with_t_end(100.0),
            tol: 1e-10,
            check_every: 200,
            newton: true,
            newton_max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: Vec<f64>,
    /// Final ‖f(y)‖.
    pub residual: f64,
    /// ‖f(y)‖ at the end of the time march, before polishing.
    pub march_residual: f64,
    pub march_time: f64,
    pub newton_iterations: usize,
    pub converged: bool,
    pub stats: IntegrationStats,
}

impl SteadyState {
    pub fn threshold(&self, tol: f64) -> f64 {
        tol * (1.0 + norm(&self.state))
    }

    /// Turns a non-converged result into an error.
    pub fn require_converged(self, tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                residual: self.residual,
                threshold: self.threshold(tol),
            })
        }
    }
}

/// Time-marches an autonomous `rhs` towards a fixed point and optionally
/// polishes it with damped Newton steps on `rhs(y) = 0`.
///
/// `invariants` lists linear conserved quantities `c·y` (e.g. total
/// population); they are appended to the Newton system so that the resulting
/// Jacobian is not rank deficient.
pub fn steady_state<F>(
    mut rhs: F,
    y0: &[f64],
    cfg: &SteadyConfig,
    invariants: &[Vec<f64>],
) -> Result<SteadyState>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut f = vec![0.0; n];
    let mut march_time = 0.0;
    let mut stats = IntegrationStats::default();
    let mut y = y0.to_vec();
    rhs(0.0, &y, &mut f);
    let mut res = norm(&f);
    if res >= cfg.tol * (1.0 + norm(&y)) {
        let mut it = Integrator::new(&mut rhs, 0.0, y0, cfg.integration)?;
        let t_final = cfg.integration.t_end;
        let mut since = 0;
        while it.t() < t_final {
            it.step(t_final)?;
            since += 1;
            if since >= cfg.check_every {
                since = 0;
                let r = norm(it.dydt());
                if r < cfg.tol * (1.0 + norm(it.y())) {
                    break;
                }
            }
        }
        march_time = it.t();
        stats = it.stats();
        y = it.y().to_vec();
        drop(it);
        rhs(0.0, &y, &mut f);
        res = norm(&f);
    }
    let march_residual = res;
    let mut iterations = 0;
    if cfg.newton && n > 0 {
        let (y_pol, r_pol, iters) =
            newton_polish(&mut rhs, &y, invariants, cfg.newton_max_iter, cfg.tol);
        iterations = iters;
        if r_pol < res {
            y = y_pol;
            res = r_pol;
        }
    }
    let converged = res < cfg.tol * (1.0 + norm(&y));
    Ok(SteadyState {
        state: y,
        residual: res,
        march_residual,
        march_time,
        newton_iterations: iterations,
        converged,
        stats,
    })
}

/// Central-difference Jacobian of `rhs` at `y`.
pub fn jacobian<F>(rhs: &mut F, y: &[f64]) -> DMatrix<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-7 * (1.0 + y[j].abs());
        yp[j] = y[j] + h;
        rhs(0.0, &yp, &mut fp);
        yp[j] = y[j] - h;
        rhs(0.0, &yp, &mut fm);
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn newton_polish<F>(
    rhs: &mut F,
    y0: &[f64],
    invariants: &[Vec<f64>],
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64, usize)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let m = invariants.len();
    let mut y = y0.to_vec();
    let mut f = vec![0.0; n];
    rhs(0.0, &y, &mut f);
    let mut res = norm(&f);
    let targets: Vec<f64> = invariants.iter().map(|c| dot(c, y0)).collect();
    let mut trial = vec![0.0; n];
    let mut ft = vec![0.0; n];
    let mut iters = 0;
    for _ in 0..max_iter {
        // Stop at the floating-point floor of the residual.
        if res < 1e-3 * tol * (1.0 + norm(&y)) {
            break;
        }
        iters += 1;
        let jac = jacobian(rhs, &y);
        let mut a = DMatrix::zeros(n + m, n);
        let mut b = DVector::zeros(n + m);
        a.view_mut((0, 0), (n, n)).copy_from(&jac);
        for i in 0..n {
            b[i] = -f[i];
        }
        // Constraint rows carry the Jacobian's scale and pull each invariant
        // back to its starting value.
        let weight = jac.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for (r, c) in invariants.iter().enumerate() {
            for j in 0..n {
                a[(n + r, j)] = weight * c[j];
            }
            b[n + r] = weight * (targets[r] - dot(c, &y));
        }
        let svd = a.svd(true, true);
        let Ok(dx) = svd.solve(&b, 1e-13) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            for i in 0..n {
                trial[i] = y[i] + lambda * dx[i];
            }
            rhs(0.0, &trial, &mut ft);
            let r = norm(&ft);
            if r.is_finite() && r < res {
                y.copy_from_slice(&trial);
                f.copy_from_slice(&ft);
                res = r;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (y, res, iters)
}
