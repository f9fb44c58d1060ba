//! Pseudo-spectral Galerkin discretisation of
//! `Omega^2 u_tt - u_xx + u^3 / sin^2 x = 0` on `[0, pi]` with period `2 pi`.
//!
//! States are `u = sum_{m,n} u_hat[m, n] cos (2m+1) tau sin k_n x` with
//! `k_n = 2(n+1)` for the even class and `k_n = 2n+1` for the odd class.
//! The cubic projection is evaluated on grids of `3M - 1` points, folded
//! onto quarter periods, which integrates every product of the truncated
//! basis exactly.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lindstedt::{coefficient_series, omega_series, SeriesSolution};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityClass {
    /// `sin 2(n+1) x`; solutions odd about `x = pi/2`.
    Even,
    /// `sin (2n+1) x`; solutions even about `x = pi/2`.
    Odd,
}

#[derive(Clone, Debug)]
pub struct GalerkinConfig {
    m_tau: usize,
    m_x: usize,
    class: ParityClass,
    ct: DMatrix<f64>,
    sx: DMatrix<f64>,
    wt: DVector<f64>,
    wx: DVector<f64>,
    inv_sin2: DVector<f64>,
}

impl GalerkinConfig {
    pub fn new(m_tau: usize, m_x: usize, class: ParityClass) -> Result<Self> {
        if m_tau == 0 || m_x == 0 {
            return Err(Error::Domain("truncation sizes must be at least 1".into()));
        }
        let ft = 3 * m_tau - 1;
        let fx = 3 * m_x - 1;
        // tau_j = pi (j + 1/2) / (2 ft + 1), j = 0..=ft; the last node is pi/2
        let pt = 2 * ft + 1;
        let taus: Vec<f64> = (0..=ft).map(|j| PI * (j as f64 + 0.5) / pt as f64).collect();
        let wt = DVector::from_fn(ft + 1, |j, _| if j == ft { PI / pt as f64 } else { 2.0 * PI / pt as f64 });
        // x_k = pi (k + 1) / (2 (fx + 1)), k = 0..=fx; the last node is pi/2
        let q = 2 * (fx + 1);
        let xs: Vec<f64> = (0..=fx).map(|k| PI * (k as f64 + 1.0) / q as f64).collect();
        let wx = DVector::from_fn(fx + 1, |k, _| if k == fx { PI / q as f64 } else { 2.0 * PI / q as f64 });
        let mut cfg = GalerkinConfig {
            m_tau,
            m_x,
            class,
            ct: DMatrix::from_fn(ft + 1, m_tau, |j, m| ((2 * m + 1) as f64 * taus[j]).cos()),
            sx: DMatrix::zeros(fx + 1, m_x),
            wt,
            wx,
            inv_sin2: DVector::from_fn(fx + 1, |k, _| 1.0 / xs[k].sin().powi(2)),
        };
        cfg.sx = DMatrix::from_fn(fx + 1, m_x, |k, n| (cfg.wavenumber(n) as f64 * xs[k]).sin());
        Ok(cfg)
    }

    /// Even class with `M_tau = M_x = m`.
    pub fn square(m: usize) -> Result<Self> {
        Self::new(m, m, ParityClass::Even)
    }

    /// Class matching the parity of `mode`.
    pub fn for_mode(mode: u32, m_tau: usize, m_x: usize) -> Result<Self> {
        let class = if mode % 2 == 0 { ParityClass::Even } else { ParityClass::Odd };
        Self::new(m_tau, m_x, class)
    }

    pub fn m_tau(&self) -> usize {
        self.m_tau
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn class(&self) -> ParityClass {
        self.class
    }

    pub fn wavenumber(&self, n: usize) -> u32 {
        match self.class {
            ParityClass::Even => 2 * (n as u32 + 1),
            ParityClass::Odd => 2 * n as u32 + 1,
        }
    }

    /// Index `n` of spatial wavenumber `k`, if it belongs to the basis.
    pub fn spatial_index(&self, k: u32) -> Option<usize> {
        let n = match self.class {
            ParityClass::Even if k % 2 == 0 && k >= 2 => (k / 2 - 1) as usize,
            ParityClass::Odd if k % 2 == 1 => (k / 2) as usize,
            _ => return None,
        };
        (n < self.m_x).then_some(n)
    }

    /// Fundamental slot `cos tau sin N x`.
    pub fn mode_index(&self, mode: u32) -> Option<(usize, usize)> {
        self.spatial_index(mode).map(|n| (0, n))
    }

    pub fn unknowns(&self) -> usize {
        self.m_tau * self.m_x
    }

    /// `u` on the fine grid, rows `tau_j`, columns `x_k`.
    pub fn physical(&self, u_hat: &DMatrix<f64>) -> DMatrix<f64> {
        &self.ct * u_hat * self.sx.transpose()
    }

    /// Projection of `u^3 / sin^2 x` onto every basis function.
    pub fn cubic_projection(&self, u_hat: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = self.physical(u_hat);
        for k in 0..g.ncols() {
            let s = self.inv_sin2[k] * self.wx[k];
            for j in 0..g.nrows() {
                let v = g[(j, k)];
                g[(j, k)] = v * v * v * s * self.wt[j];
            }
        }
        self.ct.transpose() * g * &self.sx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinState {
    pub u_hat: DMatrix<f64>,
    pub omega: f64,
}

impl GalerkinState {
    pub fn zeros(cfg: &GalerkinConfig, omega: f64) -> Self {
        GalerkinState { u_hat: DMatrix::zeros(cfg.m_tau, cfg.m_x), omega }
    }

    /// Copies into a (possibly) different truncation, padding with zeros.
    pub fn resized(&self, m_tau: usize, m_x: usize) -> Self {
        let mut u = DMatrix::zeros(m_tau, m_x);
        for m in 0..m_tau.min(self.u_hat.nrows()) {
            for n in 0..m_x.min(self.u_hat.ncols()) {
                u[(m, n)] = self.u_hat[(m, n)];
            }
        }
        GalerkinState { u_hat: u, omega: self.omega }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.u_hat.as_slice())
    }

    pub fn from_vector(v: &DVector<f64>, m_tau: usize, m_x: usize, omega: f64) -> Self {
        GalerkinState { u_hat: DMatrix::from_column_slice(m_tau, m_x, v.as_slice()), omega }
    }
}

/// `F_mn = (pi/2)^2 (k_n^2 - Omega^2 (2m+1)^2) u_mn + <u^3 / sin^2 x, phi_mn>`.
pub fn residual(state: &GalerkinState, cfg: &GalerkinConfig) -> DMatrix<f64> {
    let mut f = cfg.cubic_projection(&state.u_hat);
    let w2 = state.omega * state.omega;
    let q = 0.25 * PI * PI;
    for m in 0..cfg.m_tau {
        let j = (2 * m + 1) as f64;
        for n in 0..cfg.m_x {
            let k = cfg.wavenumber(n) as f64;
            f[(m, n)] += q * (k * k - w2 * j * j) * state.u_hat[(m, n)];
        }
    }
    f
}

pub fn residual_norm(state: &GalerkinState, cfg: &GalerkinConfig) -> f64 {
    residual(state, cfg).amax()
}

/// Residual of `state` measured in the truncation `(m_tau, m_x)`.
pub fn residual_on(state: &GalerkinState, m_tau: usize, m_x: usize, class: ParityClass) -> Result<f64> {
    let cfg = GalerkinConfig::new(m_tau, m_x, class)?;
    Ok(residual_norm(&state.resized(m_tau, m_x), &cfg))
}

/// `E = (pi/4) Omega^2 sum_n (sum_m (-1)^m (2m+1) u_mn)^2`, the kinetic
/// energy at `tau = pi/2` where the field itself vanishes.
pub fn energy(state: &GalerkinState) -> f64 {
    let u = &state.u_hat;
    let mut s = 0.0;
    for n in 0..u.ncols() {
        let mut c = 0.0;
        for m in 0..u.nrows() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            c += sign * (2 * m + 1) as f64 * u[(m, n)];
        }
        s += c * c;
    }
    0.25 * PI * state.omega * state.omega * s
}

/// `|B[u]|` at time `tau`, with
/// `B = int cos x (u_t^2 + u_x^2 + u^4 / (2 sin^2 x)) - 2i sin x u_t u_x dx`.
pub fn breathing_mode_at(state: &GalerkinState, cfg: &GalerkinConfig, tau: f64) -> f64 {
    let kmax = cfg.wavenumber(cfg.m_x - 1) as usize;
    // midpoint rule, exact for every harmonic below 2 p
    let p = 4 * kmax + 8;
    let h = PI / p as f64;
    let u = &state.u_hat;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..p {
        let x = (i as f64 + 0.5) * h;
        let (mut val, mut ut, mut ux) = (0.0, 0.0, 0.0);
        for m in 0..cfg.m_tau {
            let j = (2 * m + 1) as f64;
            let (c, s) = ((j * tau).cos(), (j * tau).sin());
            for n in 0..cfg.m_x {
                let k = cfg.wavenumber(n) as f64;
                let a = u[(m, n)];
                if a == 0.0 {
                    continue;
                }
                let (sk, ck) = ((k * x).sin(), (k * x).cos());
                val += a * c * sk;
                ut -= a * state.omega * j * s * sk;
                ux += a * c * k * ck;
            }
        }
        let sx = x.sin();
        re += h * x.cos() * (ut * ut + ux * ux + 0.5 * val.powi(4) / (sx * sx));
        im -= h * 2.0 * sx * ut * ux;
    }
    re.hypot(im)
}

pub fn breathing_mode(state: &GalerkinState, cfg: &GalerkinConfig) -> f64 {
    breathing_mode_at(state, cfg, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixed {
    Omega,
    /// Holds `u_hat[m, n]` at its current value and solves for `Omega`.
    Coefficient(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-11, max_iter: 50, exec: Exec::default() }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub state: GalerkinState,
    pub iterations: usize,
    pub residual: f64,
}

/// Central-difference Jacobian of `f` at `x`, one column per task.
pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, exec: Exec) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Sync,
{
    let h = 1e-6 * x.amax().max(1.0);
    let cols = exec.map_range(x.len(), |i| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    });
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, x.len(), |r, c| cols[c][r])
}

pub(crate) fn smallest_singular_value(j: &DMatrix<f64>) -> f64 {
    j.clone().svd(false, false).singular_values.min()
}

/// Damped Newton iteration on the Galerkin residual with one quantity held
/// fixed.
pub fn newton_solve(
    state0: &GalerkinState,
    cfg: &GalerkinConfig,
    fixed: Fixed,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let (mt, mx) = (cfg.m_tau, cfg.m_x);
    if state0.u_hat.shape() != (mt, mx) {
        return Err(Error::Domain(format!("state shape {:?} does not match ({mt}, {mx})", state0.u_hat.shape())));
    }
    let pinned = match fixed {
        Fixed::Omega => None,
        Fixed::Coefficient(m, n) => {
            if m >= mt || n >= mx {
                return Err(Error::Domain(format!("pinned slot ({m}, {n}) outside the grid")));
            }
            Some(n * mt + m)
        }
    };
    let base = state0.to_vector();
    let pack = |s: &GalerkinState| -> DVector<f64> {
        let mut v = s.to_vector();
        if let Some(p) = pinned {
            v[p] = s.omega;
        }
        v
    };
    let unpack = |v: &DVector<f64>| -> GalerkinState {
        match pinned {
            None => GalerkinState::from_vector(v, mt, mx, state0.omega),
            Some(p) => {
                let mut u = v.clone();
                u[p] = base[p];
                GalerkinState::from_vector(&u, mt, mx, v[p])
            }
        }
    };
    let func = |v: &DVector<f64>| -> DVector<f64> {
        DVector::from_column_slice(residual(&unpack(v), cfg).as_slice())
    };

    let mut x = pack(state0);
    let mut fx = func(&x);
    let mut norm = fx.amax();
    for it in 0..opts.max_iter {
        if norm < opts.tol {
            return Ok(NewtonReport { state: unpack(&x), iterations: it, residual: norm });
        }
        let jac = fd_jacobian(&func, &x, opts.exec);
        let Some(step) = jac.clone().lu().solve(&(-&fx)) else {
            return Err(Error::SingularJacobian { sigma_min: smallest_singular_value(&jac) });
        };
        if !step.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularJacobian { sigma_min: smallest_singular_value(&jac) });
        }
        let mut lambda = 1.0;
        loop {
            let trial = &x + &step * lambda;
            let ft = func(&trial);
            let nt = ft.amax();
            if nt < norm || lambda < 1.0 / 64.0 {
                x = trial;
                fx = ft;
                norm = nt;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm < opts.tol {
        return Ok(NewtonReport { state: unpack(&x), iterations: opts.max_iter, residual: norm });
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: norm })
}

#[derive(Clone, Debug)]
pub struct SeededState {
    pub state: GalerkinState,
    /// Set when the last retained order still contributes more than 1% of
    /// the fundamental amplitude, a sign that `eps` is beyond the series'
    /// useful range.
    pub warning: bool,
}

/// Evaluates the series at `eps`, applies the `sqrt(eps)` amplitude factor
/// and truncates to the grid.
pub fn seed_from_series(sol: &SeriesSolution, eps: f64, cfg: &GalerkinConfig) -> Result<SeededState> {
    let mode = sol.mode();
    let matches = match cfg.class {
        ParityClass::Even => mode % 2 == 0,
        ParityClass::Odd => mode % 2 == 1,
    };
    if !matches || cfg.spatial_index(mode).is_none() {
        return Err(Error::Domain(format!("mode {mode} is not representable on this grid")));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    let amp = eps.sqrt();
    let mut u = DMatrix::zeros(cfg.m_tau, cfg.m_x);
    for m in 0..cfg.m_tau {
        for n in 0..cfg.m_x {
            let p = coefficient_series(sol, 2 * m as u32 + 1, cfg.wavenumber(n));
            if !p.is_zero() {
                u[(m, n)] = amp * p.eval(eps);
            }
        }
    }
    let om2 = omega_series(sol).eval(eps);
    let fund = coefficient_series(sol, 1, mode);
    let last = sol.n_max();
    let tail = crate::algebra::to_f64(&fund.coeff(last)).abs() * eps.powi(last as i32);
    let warning = last > 0 && tail > 1e-2 * fund.eval(eps).abs();
    Ok(SeededState { state: GalerkinState { u_hat: u, omega: om2.sqrt() }, warning })
}
