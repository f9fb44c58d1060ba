//! Interaction coefficients `S_jklm`, the expansion coefficients of
//! `sin jx sin kx sin lx / sin^2 x` in the sine basis.

use crate::algebra::{rat, Rational};
use crate::error::{Error, Result};
use crate::exec::Exec;
use num_traits::Zero;
use std::collections::HashMap;
use std::f64::consts::PI;

/// `sgn j sgn k min(|j|, |k|) / 2`.
pub fn m_func(j: i64, k: i64) -> Rational {
    rat(j.signum() * k.signum() * j.abs().min(k.abs()), 2)
}

pub fn s_coeff(j: u32, k: u32, l: u32, m: u32) -> Rational {
    assert!(j >= 1 && k >= 1 && l >= 1 && m >= 1, "interaction indices start at 1");
    if (j + k + l + m) % 2 == 1 {
        return Rational::zero();
    }
    let (j, k, l, m) = (j as i64, k as i64, l as i64, m as i64);
    m_func(j + k - l, m) + m_func(j - k + l, m) + m_func(-j + k + l, m) - m_func(j + k + l, m)
}

/// `(2/pi) int_0^pi sin jx sin kx sin lx sin mx / sin^2 x dx` by the
/// composite midpoint rule, which never touches the removable endpoint
/// singularities. The integrand is a trigonometric polynomial of degree
/// below `j + k + l + m`, so the rule is exact up to rounding once the
/// node count exceeds half that degree.
pub fn s_quadrature_oracle(j: u32, k: u32, l: u32, m: u32) -> f64 {
    assert!(j >= 1 && k >= 1 && l >= 1 && m >= 1, "interaction indices start at 1");
    let nodes = 4 * (j + k + l + m) as usize + 16;
    let h = PI / nodes as f64;
    let (jf, kf, lf, mf) = (j as f64, k as f64, l as f64, m as f64);
    let sum: f64 = (0..nodes)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let s = x.sin();
            (jf * x).sin() * (kf * x).sin() * (lf * x).sin() * (mf * x).sin() / (s * s)
        })
        .sum();
    2.0 / PI * sum * h
}

/// Lookup of `S_jklm` for all spatial index triples up to `max_index`.
/// Entries are stored once per sorted triple `j <= k <= l`, with the full
/// row over `m = 1 ..= j + k + l - 2`.
#[derive(Clone, Debug)]
pub struct InteractionTable {
    max_index: u32,
    rows: HashMap<(u32, u32, u32), Vec<Rational>>,
}

impl InteractionTable {
    pub fn max_index(&self) -> u32 {
        self.max_index
    }

    /// `S_{jklm}` for `m = 1 ..= j + k + l - 2` (index 0 holds `m = 1`).
    pub fn row(&self, j: u32, k: u32, l: u32) -> Result<&[Rational]> {
        let key = sorted3(j, k, l);
        if key.2 > self.max_index || key.0 == 0 {
            return Err(Error::TableTooSmall {
                needed: key.2,
                max_index: self.max_index,
            });
        }
        Ok(&self.rows[&key])
    }

    pub fn get(&self, j: u32, k: u32, l: u32, m: u32) -> Result<Rational> {
        if m == 0 {
            return Err(Error::Domain("interaction index m must be >= 1".into()));
        }
        // any index may play the role of m; pick the largest as the free one
        let mut idx = [j, k, l, m];
        idx.sort_unstable();
        let row = self.row(idx[0], idx[1], idx[2])?;
        Ok(row
            .get(idx[3] as usize - 1)
            .cloned()
            .unwrap_or_else(Rational::zero))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn sorted3(j: u32, k: u32, l: u32) -> (u32, u32, u32) {
    let mut v = [j, k, l];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

pub fn build_table(max_index: u32) -> InteractionTable {
    build_table_with(max_index, Exec::default())
}

pub fn build_table_with(max_index: u32, exec: Exec) -> InteractionTable {
    assert!(max_index >= 1, "table needs max_index >= 1");
    let mut keys = Vec::new();
    for j in 1..=max_index {
        for k in j..=max_index {
            for l in k..=max_index {
                keys.push((j, k, l));
            }
        }
    }
    let rows = exec.map(&keys, |&(j, k, l)| {
        let len = (j + k + l).saturating_sub(2);
        (1..=len).map(|m| s_coeff(j, k, l, m)).collect::<Vec<_>>()
    });
    InteractionTable {
        max_index,
        rows: keys.into_iter().zip(rows).collect(),
    }
}
