//! Lattice-backed order extension.
//!
//! With `v_i = u_i / sin x` the cubic source factors as
//! `W_{n-1} = sum_c Q_{n-1-c} u_c`, `Q_s = sum_{a+b=s} v_a v_b`, so each
//! order costs two families of dense integer products and the `Q_s` are
//! cached between orders.

use super::{advance, linear_part, SeriesSolution};
use crate::algebra::{rat, trig_add, Lattice, Rational, Spatial, TrigPoly};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub struct SeriesBuilder {
    sol: SeriesSolution,
    exec: Exec,
    u: Vec<Lattice>,
    v: Vec<Lattice>,
    q: Vec<Lattice>,
}

fn sum_lattices(parts: Vec<Lattice>, spatial: Spatial) -> Lattice {
    let one = Rational::from_integer(1.into());
    let mut acc = Lattice::zeros(spatial, 0, 0, 0, 0);
    for p in &parts {
        acc.add_scaled(p, &one);
    }
    acc.normalize();
    acc
}

impl SeriesBuilder {
    pub fn new(mode: u32, exec: Exec) -> Result<Self> {
        Ok(Self::from_solution(SeriesSolution::leading(mode)?, exec))
    }

    /// Resumes from an existing solution; the pair cache is rebuilt.
    pub fn from_solution(sol: SeriesSolution, exec: Exec) -> Self {
        let kpar = sol.mode() % 2;
        let u: Vec<Lattice> = sol.orders().iter().map(|p| Lattice::from_trig(p, 1, kpar)).collect();
        let v: Vec<Lattice> = u.iter().map(Lattice::div_sin).collect();
        let mut b = SeriesBuilder { sol, exec, u, v, q: Vec::new() };
        // Q_s for s < n_max are final; Q_{n_max} is built on the next step
        for s in 0..b.sol.n_max() {
            let qs = b.pair_sum(s);
            b.q.push(qs);
        }
        b
    }

    pub fn solution(&self) -> &SeriesSolution {
        &self.sol
    }

    pub fn into_solution(self) -> SeriesSolution {
        self.sol
    }

    fn pair_sum(&self, s: usize) -> Lattice {
        let pairs: Vec<(usize, usize)> = (0..=s / 2).map(|a| (a, s - a)).collect();
        let two = rat(2, 1);
        let parts = self.exec.map(&pairs, |&(a, b)| {
            let mut p = self.v[a].mul(&self.v[b]);
            if a != b {
                p.scale(&two);
            }
            p
        });
        sum_lattices(parts, Spatial::Cos)
    }

    fn cubic_source(&self, s: usize) -> TrigPoly {
        let parts = self.exec.map_range(s + 1, |c| self.q[s - c].mul(&self.u[c]));
        sum_lattices(parts, Spatial::Sin).to_trig()
    }

    /// Adds one order.
    pub fn extend(&mut self) {
        let s = self.sol.n_max();
        let qs = self.pair_sum(s);
        self.q.push(qs);
        let w = self.cubic_source(s);
        let fixed = advance(&mut self.sol, &w);

        let kpar = self.sol.mode() % 2;
        if !fixed.is_empty() {
            self.u[s] = Lattice::from_trig(self.sol.order(s), 1, kpar);
            self.v[s] = self.u[s].div_sin();
            let dv = Lattice::from_trig(&fixed, 1, kpar).div_sin();
            let mut corr = self.v[0].mul(&dv);
            corr.normalize();
            self.q[s].add_scaled(&corr, &rat(2, 1));
            self.q[s].normalize();
        }
        let un = Lattice::from_trig(self.sol.order(s + 1), 1, kpar);
        self.v.push(un.div_sin());
        self.u.push(un);
    }

    pub fn extend_to(&mut self, n_max: usize) {
        while self.sol.n_max() < n_max {
            self.extend();
        }
    }
}

/// Series for `mode` through order `n_max`.
pub fn build_series(mode: u32, n_max: usize, exec: Exec) -> Result<SeriesSolution> {
    let mut b = SeriesBuilder::new(mode, exec)?;
    b.extend_to(n_max);
    Ok(b.into_solution())
}

/// Same contract as `residual_series`, with the cubic terms recomputed from
/// the stored orders by lattice products instead of the interaction table.
pub fn residual_series_fast(
    sol: &SeriesSolution,
    through_order: usize,
    exec: Exec,
) -> Result<Vec<TrigPoly>> {
    if through_order > sol.n_max() {
        return Err(Error::InsufficientOrder { available: sol.n_max(), required: through_order });
    }
    let kpar = sol.mode() % 2;
    let u: Vec<Lattice> = sol.orders()[..through_order.max(1)]
        .iter()
        .map(|p| Lattice::from_trig(p, 1, kpar))
        .collect();
    let v: Vec<Lattice> = u.iter().map(Lattice::div_sin).collect();
    let mut q: Vec<Lattice> = Vec::new();
    let two = rat(2, 1);
    let mut out = Vec::with_capacity(through_order + 1);
    for n in 0..=through_order {
        let mut r = linear_part(sol, n);
        if n >= 1 {
            let s = n - 1;
            let pairs: Vec<(usize, usize)> = (0..=s / 2).map(|a| (a, s - a)).collect();
            let parts = exec.map(&pairs, |&(a, b)| {
                let mut p = v[a].mul(&v[b]);
                if a != b {
                    p.scale(&two);
                }
                p
            });
            q.push(sum_lattices(parts, Spatial::Cos));
            let parts = exec.map_range(s + 1, |c| q[s - c].mul(&u[c]));
            r = trig_add(&r, &sum_lattices(parts, Spatial::Sin).to_trig());
        }
        out.push(r);
    }
    Ok(out)
}
