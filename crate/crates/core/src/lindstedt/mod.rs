//! Poincaré-Lindstedt construction of time-periodic solutions bifurcating
//! from the linear mode `cos tau sin Nx`.
//!
//! The rescaled equation is
//! `Omega^2 u_tt - u_xx + eps u^3 / sin^2 x = 0` with
//! `Omega^2 = N^2 + sum_n eps^n omega_n` and `u = sum_n eps^n u_n`.
//! Order `n` solves `L u_n = -sum_i omega_i d_tt u_{n-i} - W_{n-1}` where
//! `L (cos j tau sin kx) = (k^2 - j^2 N^2) cos j tau sin kx` and `W_{n-1}`
//! collects the cubic terms of total order `n - 1`.

mod archive;
mod engine;

pub use archive::{read_archive, write_archive};
pub use engine::{build_series, residual_series_fast, SeriesBuilder};

use crate::algebra::{rat, to_f64, trig_add, trig_triple_product, EpsPolynomial, Rational, TrigPoly};
use crate::error::{Error, Result};
use crate::interaction::{s_coeff, InteractionTable};
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSolution {
    mode: u32,
    omega_sq: Vec<Rational>,
    orders: Vec<TrigPoly>,
}

impl SeriesSolution {
    /// The linear solution `cos tau sin Nx` with `Omega^2 = N^2`.
    pub fn leading(mode: u32) -> Result<Self> {
        if mode == 0 {
            return Err(Error::Domain("mode must be at least 1".into()));
        }
        Ok(SeriesSolution {
            mode,
            omega_sq: vec![rat((mode * mode) as i64, 1)],
            orders: vec![TrigPoly::monomial(1, mode, Rational::one())],
        })
    }

    pub(crate) fn from_parts(mode: u32, omega_sq: Vec<Rational>, orders: Vec<TrigPoly>) -> Self {
        assert_eq!(omega_sq.len(), orders.len());
        SeriesSolution { mode, omega_sq, orders }
    }

    pub fn mode(&self) -> u32 {
        self.mode
    }

    pub fn n_max(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn omega_sq(&self) -> &[Rational] {
        &self.omega_sq
    }

    pub fn orders(&self) -> &[TrigPoly] {
        &self.orders
    }

    pub fn order(&self, n: usize) -> &TrigPoly {
        &self.orders[n]
    }

    /// Whether the top order still has resonant amplitudes awaiting the next
    /// order's solvability conditions.
    pub fn provisional(&self) -> bool {
        self.n_max() >= 1
    }

    /// Resonant slots `(2m+1, (2m+1)N)`, `m >= 1`, of the top order that are
    /// held at zero until the next extension fixes them.
    pub fn pending_resonant(&self) -> Vec<(u32, u32)> {
        let n = self.n_max() as u32;
        (1..=n).map(|m| (2 * m + 1, (2 * m + 1) * self.mode)).collect()
    }
}

/// One more order through the interaction-table route.
pub fn extend_order(sol: SeriesSolution, table: &InteractionTable) -> Result<SeriesSolution> {
    let n = sol.n_max() + 1;
    let mut w = TrigPoly::new();
    let u = &sol.orders;
    // sum over a <= b <= c with a + b + c = n - 1, weighted by multiplicity
    for a in 0..n {
        for b in a..n {
            if a + b > n - 1 {
                break;
            }
            let c = n - 1 - a - b;
            if c < b {
                continue;
            }
            let mult = match (a == b, b == c) {
                (true, true) => 1,
                (false, false) => 6,
                _ => 3,
            };
            let t = trig_triple_product(&u[a], &u[b], &u[c], table)?;
            for (j, k, coef) in t.iter() {
                w.add_term(j, k, coef * rat(mult, 1));
            }
        }
    }
    let mut sol = sol;
    advance(&mut sol, &w);
    Ok(sol)
}

/// `cos j1 tau sin k1 x * cos j2 tau sin k2 x * cos j3 tau sin k3 x / sin^2 x`.
fn monomial_cube(t1: (u32, u32), t2: (u32, u32), t3: (u32, u32)) -> TrigPoly {
    let (a, b, c) = (t1.0 as i64, t2.0 as i64, t3.0 as i64);
    let freqs = [a + b + c, (a + b - c).abs(), (a - b + c).abs(), (-a + b + c).abs()];
    let top = t1.1 + t2.1 + t3.1;
    let mut out = TrigPoly::new();
    for m in 1..top.saturating_sub(1) {
        let s = s_coeff(t1.1, t2.1, t3.1, m);
        if s.is_zero() {
            continue;
        }
        let s = s * rat(1, 4);
        for &f in &freqs {
            out.add_term(f as u32, m, s.clone());
        }
    }
    out
}

fn solve_dense(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Vec<Rational> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("singular resonance system");
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
            let d = &f * &b[col];
            b[r] -= d;
        }
    }
    (0..n).map(|i| &b[i] / &a[i][i]).collect()
}

/// Shared order step. `w` is the cubic source of total order `n - 1`
/// computed with the previous order's pending amplitudes at zero. Fixes
/// those amplitudes and `omega_n`, appends `u_n`, and returns the fixed
/// amplitudes as a TrigPoly.
pub(crate) fn advance(sol: &mut SeriesSolution, w: &TrigPoly) -> TrigPoly {
    let n = sol.n_max() + 1;
    let big_n = sol.mode;
    let nn = rat((big_n * big_n) as i64, 1);

    // K = sum_{i=1}^{n-1} omega_i j^2 u_{n-i} - W
    let mut k_src = w.neg();
    for i in 1..n {
        let om = &sol.omega_sq[i];
        for (j, k, c) in sol.orders[n - i].iter() {
            k_src.add_term(j, k, om * c * rat((j * j) as i64, 1));
        }
    }

    // responses of the pending amplitudes of u_{n-1}
    let pending: Vec<(u32, u32)> = if n >= 2 {
        (1..n as u32).map(|m| (2 * m + 1, (2 * m + 1) * big_n)).collect()
    } else {
        Vec::new()
    };
    let om1 = sol.omega_sq.get(1).cloned().unwrap_or_else(|| rat(3 * big_n as i64, 4));
    let responses: Vec<TrigPoly> = pending
        .iter()
        .map(|&e| {
            let mut r = monomial_cube((1, big_n), (1, big_n), e).scale(&rat(-3, 1));
            r.add_term(e.0, e.1, &om1 * rat((e.0 * e.0) as i64, 1));
            r
        })
        .collect();
    let amps = if pending.is_empty() {
        Vec::new()
    } else {
        let mat = pending
            .iter()
            .map(|&(j, k)| responses.iter().map(|r| r.coeff(j, k)).collect())
            .collect();
        let rhs = pending.iter().map(|&(j, k)| -k_src.coeff(j, k)).collect();
        solve_dense(mat, rhs)
    };
    let mut fixed = TrigPoly::new();
    let mut rhs = k_src;
    for ((e, r), a) in pending.iter().zip(&responses).zip(&amps) {
        fixed.add_term(e.0, e.1, a.clone());
        for (j, k, c) in r.iter() {
            rhs.add_term(j, k, c * a);
        }
    }

    let omega_n = -rhs.coeff(1, big_n);
    rhs.add_term(1, big_n, omega_n.clone());
    for (j, k, _) in rhs.iter() {
        assert!(k != j * big_n, "unremoved resonance at ({j}, {k}) in order {n}");
    }

    let mut un = TrigPoly::new();
    for (j, k, c) in rhs.iter() {
        let d = rat((k * k) as i64, 1) - &nn * rat((j * j) as i64, 1);
        assert!(!d.is_zero(), "zero divisor at ({j}, {k})");
        assert!(j % 2 == 1 && k % 2 == big_n % 2, "parity violation at ({j}, {k})");
        un.add_term(j, k, c / d);
    }
    let mut a1 = Rational::zero();
    for (j, k, c) in un.iter() {
        if k == big_n && j >= 3 {
            a1 -= c;
        }
    }
    un.add_term(1, big_n, a1);

    for (j, k, c) in fixed.iter() {
        sol.orders[n - 1].add_term(j, k, c.clone());
    }
    sol.orders.push(un);
    sol.omega_sq.push(omega_n);
    fixed
}

/// PDE residual of the truncated series, order by order, with the cubic
/// terms assembled through the interaction table.
pub fn residual_series(
    sol: &SeriesSolution,
    table: &InteractionTable,
    through_order: usize,
) -> Result<Vec<TrigPoly>> {
    if through_order > sol.n_max() {
        return Err(Error::InsufficientOrder { available: sol.n_max(), required: through_order });
    }
    let u = &sol.orders;
    let mut out = Vec::with_capacity(through_order + 1);
    for n in 0..=through_order {
        let mut r = linear_part(sol, n);
        if n >= 1 {
            for a in 0..n {
                for b in 0..n - a {
                    let c = n - 1 - a - b;
                    r = trig_add(&r, &trig_triple_product(&u[a], &u[b], &u[c], table)?);
                }
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// `sum_{i=0}^{n} Omega_i d_tt u_{n-i} - d_xx u_n`.
pub(crate) fn linear_part(sol: &SeriesSolution, n: usize) -> TrigPoly {
    let mut r = sol.orders[n].d_x2().neg();
    for i in 0..=n {
        let om = &sol.omega_sq[i];
        for (j, k, c) in sol.orders[n - i].iter() {
            r.add_term(j, k, -(om * c * rat((j * j) as i64, 1)));
        }
    }
    r
}

/// eps-series of the `(j, k)` Fourier coefficient of the rescaled solution.
pub fn coefficient_series(sol: &SeriesSolution, j: u32, k: u32) -> EpsPolynomial {
    EpsPolynomial::new(sol.orders.iter().map(|u| u.coeff(j, k)).collect())
}

/// `Omega^2` as a polynomial in eps.
pub fn omega_series(sol: &SeriesSolution) -> EpsPolynomial {
    EpsPolynomial::new(sol.omega_sq.clone())
}

/// `Omega` itself, the exact square root of `omega_series` truncated at
/// `n_max`.
pub fn frequency_series(sol: &SeriesSolution) -> EpsPolynomial {
    omega_series(sol).sqrt_series(&rat(sol.mode as i64, 1), sol.n_max())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesTarget {
    Omega,
    Coeff(u32, u32),
}

/// `|c_n|` as floats for every nonzero coefficient of the chosen series.
pub fn coefficient_growth(sol: &SeriesSolution, target: SeriesTarget) -> Vec<(usize, f64)> {
    let p = match target {
        SeriesTarget::Omega => omega_series(sol),
        SeriesTarget::Coeff(j, k) => coefficient_series(sol, j, k),
    };
    p.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(n, c)| (n, to_f64(&c.abs())))
        .collect()
}
