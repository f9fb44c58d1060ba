//! Few-mode truncations with closed-form solutions.
//!
//! The one-mode system `A cos tau sin Nx` gives the trunk
//! `A (3N A^2 - 4 Omega^2 + 4 N^2) = 0`. Adding `B cos m tau sin nx` gives
//!
//! ```text
//! A (3N A^2 + 6N B^2 - 4 Omega^2 + 4 N^2) = 0
//! B (6N A^2 + 3n B^2 - 4 Omega^2 m^2 + 4 n^2) = 0
//! ```
//!
//! whose nontrivial branch leaves the trunk where `B` vanishes.

use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeBranch {
    pub mode: u32,
    pub m: u32,
    pub n: u32,
    pub omega_bif: f64,
    /// `n = 4N`: the pair only has solutions at a single frequency.
    pub special_case: bool,
}

pub fn trunk_amplitude(mode: u32, omega: f64) -> Result<f64> {
    let nn = mode as f64;
    if !(omega > nn) {
        return Err(Error::Domain(format!("trunk of mode {mode} needs Omega > {mode}, got {omega}")));
    }
    Ok(2.0 * ((omega * omega - nn * nn) / (3.0 * nn)).sqrt())
}

pub fn trunk_energy(mode: u32, omega: f64) -> Result<f64> {
    let a = trunk_amplitude(mode, omega)?;
    Ok(0.25 * PI * omega * omega * a * a)
}

pub fn two_mode_energy(m: u32, omega: f64, a: f64, b: f64) -> f64 {
    let m = m as f64;
    0.25 * PI * omega * omega * (a * a + m * m * b * b)
}

/// Pairs `(m, n)` coupling to `cos tau sin Nx` as a two-mode reducible
/// system: `m` odd and at least 3, `n` of the parity of `N`, `n >= mN + 2`.
pub fn admissible(mode: u32, m: u32, n: u32) -> bool {
    mode >= 1 && m >= 3 && m % 2 == 1 && n % 2 == mode % 2 && n >= m * mode + 2
}

impl TwoModeBranch {
    pub fn new(mode: u32, m: u32, n: u32) -> Result<Self> {
        if !admissible(mode, m, n) {
            return Err(Error::Inadmissible { mode, m, n });
        }
        let special_case = n == 4 * mode;
        let (nn, mf, nf) = (mode as f64, m as f64, n as f64);
        let omega_bif = ((nf * nf - 2.0 * nn * nn) / (mf * mf - 2.0)).sqrt();
        Ok(TwoModeBranch { mode, m, n, omega_bif, special_case })
    }

    /// `(A^2, B^2)` as affine functions of `Omega^2`: `(c0 + c1 W) / d`.
    fn radicands(&self) -> [(f64, f64, f64); 2] {
        let (nn, mf, nf) = (self.mode as f64, self.m as f64, self.n as f64);
        [
            ((2.0 * nf - nn) * nf * nn, nf - 2.0 * mf * mf * nn, 3.0 * (nf - 4.0 * nn) * nn / 4.0),
            (2.0 * nn * nn - nf * nf, mf * mf - 2.0, 3.0 * (nf - 4.0 * nn) / 4.0),
        ]
    }

    /// Range of `Omega` on which both amplitudes are real; `hi` may be
    /// infinite. For the special case the range collapses to `omega_bif`.
    pub fn real_interval(&self) -> Option<(f64, f64)> {
        if self.special_case {
            return Some((self.omega_bif, self.omega_bif));
        }
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for (c0, c1, d) in self.radicands() {
            // sign(d) (c0 + c1 W) >= 0
            let (c0, c1) = if d < 0.0 { (-c0, -c1) } else { (c0, c1) };
            if c1 > 0.0 {
                lo = lo.max(-c0 / c1);
            } else if c1 < 0.0 {
                hi = hi.min(-c0 / c1);
            } else if c0 < 0.0 {
                return None;
            }
        }
        (lo <= hi).then(|| (lo.sqrt(), hi.sqrt()))
    }
}

/// Closed-form `(A, B)` at `omega`, or `None` when either is not real.
pub fn two_mode_amplitudes(b: &TwoModeBranch, omega: f64) -> Result<Option<(f64, f64)>> {
    if b.special_case {
        return Err(Error::SpecialCase);
    }
    let w = omega * omega;
    let mut out = [0.0; 2];
    for (slot, (c0, c1, d)) in out.iter_mut().zip(b.radicands()) {
        let r = (c0 + c1 * w) / d;
        if r < 0.0 {
            return Ok(None);
        }
        *slot = r.sqrt();
    }
    Ok(Some((out[0], out[1])))
}

/// For `n = 4N` the pair only solves the system at `Omega = N sqrt(14/(m^2-2))`,
/// along the segment `3 A^2 + 6 B^2 = 56N/(m^2-2) - 4N`. Returns the
/// frequency and the right-hand side.
pub fn special_case_relation(b: &TwoModeBranch) -> Result<(f64, f64)> {
    if !b.special_case {
        return Err(Error::Domain("pair is not the n = 4N case".into()));
    }
    let (nn, mf) = (b.mode as f64, b.m as f64);
    let omega = nn * (14.0 / (mf * mf - 2.0)).sqrt();
    Ok((omega, 56.0 * nn / (mf * mf - 2.0) - 4.0 * nn))
}

pub fn bifurcation_frequency(b: &TwoModeBranch) -> f64 {
    b.omega_bif
}

/// Left-hand sides of the two-mode system.
pub fn two_mode_residual(b: &TwoModeBranch, omega: f64, a: f64, bb: f64) -> (f64, f64) {
    let (nn, mf, nf) = (b.mode as f64, b.m as f64, b.n as f64);
    let w = omega * omega;
    (
        a * (3.0 * nn * a * a + 6.0 * nn * bb * bb - 4.0 * w + 4.0 * nn * nn),
        bb * (6.0 * nn * a * a + 3.0 * nf * bb * bb - 4.0 * w * mf * mf + 4.0 * nf * nf),
    )
}

/// Every admissible pair with `m <= m_max`, `n <= n_max`, sorted by
/// bifurcation frequency.
pub fn enumerate_branches(mode: u32, m_max: u32, n_max: u32) -> Vec<TwoModeBranch> {
    let mut out: Vec<TwoModeBranch> = (3..=m_max)
        .step_by(2)
        .flat_map(|m| (1..=n_max).filter_map(move |n| TwoModeBranch::new(mode, m, n).ok()))
        .collect();
    out.sort_by(|a, b| a.omega_bif.partial_cmp(&b.omega_bif).unwrap().then((a.m, a.n).cmp(&(b.m, b.n))));
    out
}
