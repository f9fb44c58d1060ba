//! Dense integer lattices for exact Fourier products.
//!
//! A lattice stores `sum c_{ab} cos((jp + 2a) tau) X((kp + 2b) x) / den`
//! with `X` either `sin` or `cos`, integer `c_{ab}` and one shared
//! denominator. Products then run entirely in integer arithmetic; rational
//! normalisation happens once per lattice instead of once per term.

use super::rational::Rational;
use super::trig::TrigPoly;
use crate::exec::Exec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spatial {
    Sin,
    Cos,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    spatial: Spatial,
    jpar: u32,
    kpar: u32,
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
    den: BigInt,
}

impl Lattice {
    pub fn zeros(spatial: Spatial, jpar: u32, kpar: u32, rows: usize, cols: usize) -> Self {
        Lattice {
            spatial,
            jpar: jpar % 2,
            kpar: kpar % 2,
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
            den: BigInt::one(),
        }
    }

    /// Sine lattice holding `p`. Panics if a term violates the parity class.
    pub fn from_trig(p: &TrigPoly, jpar: u32, kpar: u32) -> Self {
        let rows = ((p.max_j() + 2 - jpar % 2) / 2) as usize;
        let cols = ((p.max_k() + 2 - kpar % 2) / 2) as usize;
        let mut den = BigInt::one();
        for (_, _, c) in p.iter() {
            den = den.lcm(c.denom());
        }
        let mut out = Lattice::zeros(Spatial::Sin, jpar, kpar, rows, cols);
        for (j, k, c) in p.iter() {
            assert!(
                j % 2 == out.jpar && k % 2 == out.kpar,
                "term ({j}, {k}) outside parity class ({jpar}, {kpar})"
            );
            let idx = out.index(j, k);
            out.data[idx] = c.numer() * (&den / c.denom());
        }
        out.den = den;
        out
    }

    pub fn to_trig(&self) -> TrigPoly {
        assert_eq!(self.spatial, Spatial::Sin, "only sine lattices map to TrigPoly");
        let mut p = TrigPoly::new();
        for a in 0..self.rows {
            for b in 0..self.cols {
                let c = &self.data[a * self.cols + b];
                if !c.is_zero() {
                    let (j, k) = self.freq(a, b);
                    p.add_term(j, k, Rational::new(c.clone(), self.den.clone()));
                }
            }
        }
        p
    }

    pub fn spatial(&self) -> Spatial {
        self.spatial
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    fn freq(&self, a: usize, b: usize) -> (u32, u32) {
        (self.jpar + 2 * a as u32, self.kpar + 2 * b as u32)
    }

    fn index(&self, j: u32, k: u32) -> usize {
        ((j - self.jpar) / 2) as usize * self.cols + ((k - self.kpar) / 2) as usize
    }

    pub fn coeff(&self, j: u32, k: u32) -> Rational {
        if j % 2 != self.jpar || k % 2 != self.kpar {
            return Rational::zero();
        }
        let (a, b) = (((j - self.jpar) / 2) as usize, ((k - self.kpar) / 2) as usize);
        if a >= self.rows || b >= self.cols {
            return Rational::zero();
        }
        Rational::new(self.data[a * self.cols + b].clone(), self.den.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }

    /// Divides numerators and denominator by their common factor.
    pub fn normalize(&mut self) {
        let mut g = self.den.clone();
        for c in &self.data {
            if g.is_one() {
                return;
            }
            if !c.is_zero() {
                g = g.gcd(c);
            }
        }
        if !g.is_one() {
            for c in &mut self.data {
                *c /= &g;
            }
            self.den /= &g;
        }
    }

    fn resized(&self, rows: usize, cols: usize) -> Self {
        let mut out = Lattice::zeros(self.spatial, self.jpar, self.kpar, rows, cols);
        out.den = self.den.clone();
        for a in 0..self.rows.min(rows) {
            for b in 0..self.cols.min(cols) {
                out.data[a * cols + b] = self.data[a * self.cols + b].clone();
            }
        }
        out
    }

    /// `self += factor * other` over a common denominator.
    pub fn add_scaled(&mut self, other: &Lattice, factor: &Rational) {
        assert_eq!(self.spatial, other.spatial);
        if factor.is_zero() || other.is_zero() {
            return;
        }
        if self.is_zero() {
            // adopt the other's parity class and shape outright
            *self = other.clone();
            self.scale(factor);
            return;
        }
        assert!(self.jpar == other.jpar && self.kpar == other.kpar, "parity mismatch");
        if other.rows > self.rows || other.cols > self.cols {
            *self = self.resized(self.rows.max(other.rows), self.cols.max(other.cols));
        }
        let other_den = &other.den * factor.denom();
        let l = self.den.lcm(&other_den);
        let s_self = &l / &self.den;
        let s_other = (&l / &other_den) * factor.numer();
        if !s_self.is_one() {
            for c in &mut self.data {
                *c *= &s_self;
            }
        }
        for a in 0..other.rows {
            for b in 0..other.cols {
                let c = &other.data[a * other.cols + b];
                if !c.is_zero() {
                    self.data[a * self.cols + b] += c * &s_other;
                }
            }
        }
        self.den = l;
    }

    pub fn scale(&mut self, factor: &Rational) {
        if factor.is_zero() {
            self.data.iter_mut().for_each(|c| *c = BigInt::zero());
            self.den = BigInt::one();
            return;
        }
        for c in &mut self.data {
            *c *= factor.numer();
        }
        self.den *= factor.denom();
        if self.den.is_negative() {
            self.den = -&self.den;
            for c in &mut self.data {
                *c = -&*c;
            }
        }
    }

    /// `u / sin x` for a sine lattice, using
    /// `sin kx / sin x = sum_{m = k-1, k-3, ...} w_m cos mx`, `w_0 = 1`, else 2.
    pub fn div_sin(&self) -> Lattice {
        assert_eq!(self.spatial, Spatial::Sin);
        let kpar = (self.kpar + 1) % 2;
        let kmax = self.kpar + 2 * self.cols.saturating_sub(1) as u32;
        let cols = if kmax == 0 { 1 } else { ((kmax - 1 - kpar) / 2 + 1) as usize };
        let mut out = Lattice::zeros(Spatial::Cos, self.jpar, kpar, self.rows, cols);
        out.den = self.den.clone();
        for a in 0..self.rows {
            for b in 0..self.cols {
                let c = &self.data[a * self.cols + b];
                let k = self.kpar + 2 * b as u32;
                if c.is_zero() || k == 0 {
                    continue;
                }
                let twice = c * 2u32;
                let mut m = k - 1;
                loop {
                    let idx = a * cols + ((m - kpar) / 2) as usize;
                    if m == 0 {
                        out.data[idx] += c;
                    } else {
                        out.data[idx] += &twice;
                    }
                    if m < 2 {
                        break;
                    }
                    m -= 2;
                }
            }
        }
        out
    }

    /// Exact product. Temporal factors are cosines throughout; the spatial
    /// kind of the result follows `cos*cos = cos`, `cos*sin = sin`,
    /// `sin*sin = cos`.
    pub fn mul(&self, other: &Lattice) -> Lattice {
        self.mul_rows(other, 0..self.rows)
    }

    /// Product split over rows of `self` and reduced, with `exec` deciding
    /// whether row blocks run concurrently.
    pub fn mul_with(&self, other: &Lattice, exec: Exec) -> Lattice {
        if !exec.is_parallel() || self.rows < 2 {
            return self.mul(other);
        }
        let blocks = self.rows.min(8);
        let parts = exec.map_range(blocks, |i| {
            let lo = i * self.rows / blocks;
            let hi = (i + 1) * self.rows / blocks;
            self.mul_rows(other, lo..hi)
        });
        let mut it = parts.into_iter();
        let mut acc = it.next().expect("at least one block");
        for p in it {
            for (x, y) in acc.data.iter_mut().zip(p.data) {
                *x += y;
            }
        }
        acc
    }

    fn mul_rows(&self, other: &Lattice, rows: std::ops::Range<usize>) -> Lattice {
        let spatial = match (self.spatial, other.spatial) {
            (Spatial::Cos, Spatial::Cos) | (Spatial::Sin, Spatial::Sin) => Spatial::Cos,
            _ => Spatial::Sin,
        };
        let jpar = (self.jpar + other.jpar) % 2;
        let kpar = (self.kpar + other.kpar) % 2;
        let jmax = self.jpar + other.jpar + 2 * (self.rows + other.rows).saturating_sub(2) as u32;
        let kmax = self.kpar + other.kpar + 2 * (self.cols + other.cols).saturating_sub(2) as u32;
        let out_rows = ((jmax - jpar) / 2 + 1) as usize;
        let out_cols = ((kmax - kpar) / 2 + 1) as usize;
        let mut out = Lattice::zeros(spatial, jpar, kpar, out_rows, out_cols);
        out.den = &self.den * &other.den * 4u32;

        // spatial targets per (b1, b2): two (index, sign) pairs
        let mut targets = Vec::with_capacity(self.cols * other.cols);
        for b1 in 0..self.cols {
            let k1 = (self.kpar + 2 * b1 as u32) as i64;
            for b2 in 0..other.cols {
                let k2 = (other.kpar + 2 * b2 as u32) as i64;
                let (sum, diff) = (k1 + k2, k1 - k2);
                let t = match (self.spatial, other.spatial) {
                    (Spatial::Cos, Spatial::Cos) => [(sum, 1i8), (diff.abs(), 1)],
                    (Spatial::Sin, Spatial::Sin) => [(diff.abs(), 1), (sum, -1)],
                    (Spatial::Sin, Spatial::Cos) => [(sum, 1), (diff.abs(), diff.signum() as i8)],
                    (Spatial::Cos, Spatial::Sin) => [(sum, 1), (diff.abs(), -diff.signum() as i8)],
                };
                let conv = |(k, s): (i64, i8)| {
                    let s = if spatial == Spatial::Sin && k == 0 { 0 } else { s };
                    (((k as u32 - kpar) / 2) as usize, s)
                };
                targets.push([conv(t[0]), conv(t[1])]);
            }
        }

        for a1 in rows {
            let j1 = (self.jpar + 2 * a1 as u32) as i64;
            for a2 in 0..other.rows {
                let j2 = (other.jpar + 2 * a2 as u32) as i64;
                let tp = ((j1 + j2) as u32 - jpar) as usize / 2;
                let tm = (((j1 - j2).abs()) as u32 - jpar) as usize / 2;
                for b1 in 0..self.cols {
                    let c1 = &self.data[a1 * self.cols + b1];
                    if c1.is_zero() {
                        continue;
                    }
                    for b2 in 0..other.cols {
                        let c2 = &other.data[a2 * other.cols + b2];
                        if c2.is_zero() {
                            continue;
                        }
                        let prod = c1 * c2;
                        for &(s_idx, sign) in &targets[b1 * other.cols + b2] {
                            if sign == 0 {
                                continue;
                            }
                            for t in [tp, tm] {
                                let cell = &mut out.data[t * out_cols + s_idx];
                                if sign > 0 {
                                    *cell += &prod;
                                } else {
                                    *cell -= &prod;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::rat;
    use super::*;
    use crate::algebra::trig_triple_product;
    use crate::interaction::build_table;

    fn sample(jp: u32, kp: u32) -> TrigPoly {
        TrigPoly::from_terms([
            ((jp + 0, kp + 2), rat(1, 3)),
            ((jp + 2, kp + 4), rat(-2, 5)),
            ((jp + 4, kp + 2), rat(7, 2)),
            ((jp + 2, kp + 6), rat(1, 1)),
        ])
    }

    #[test]
    fn trig_round_trip() {
        let p = sample(1, 0);
        assert_eq!(Lattice::from_trig(&p, 1, 0).to_trig(), p);
    }

    #[test]
    fn cube_matches_interaction_route() {
        let table = build_table(12);
        for (jp, kp) in [(1, 0), (1, 1)] {
            let p = sample(jp, kp);
            let q = TrigPoly::from_terms([((1, kp + 2), rat(1, 1)), ((3, kp + 4), rat(-1, 7))]);
            let r = TrigPoly::monomial(1, kp + 2, rat(2, 3));
            let exact = trig_triple_product(&p, &q, &r, &table).unwrap();
            let lp = Lattice::from_trig(&p, jp, kp);
            let lq = Lattice::from_trig(&q, 1, kp);
            let lr = Lattice::from_trig(&r, 1, kp);
            // p q r / sin^2 = (p / sin)(q / sin) r
            let fast = lp.div_sin().mul(&lq.div_sin()).mul(&lr);
            let mut fast = fast;
            fast.normalize();
            assert_eq!(fast.to_trig(), exact);
        }
    }

    #[test]
    fn scaled_addition() {
        let p = sample(1, 0);
        let q = TrigPoly::from_terms([((1, 2), rat(1, 7)), ((9, 10), rat(3, 11))]);
        let mut l = Lattice::from_trig(&p, 1, 0);
        l.add_scaled(&Lattice::from_trig(&q, 1, 0), &rat(-3, 4));
        l.normalize();
        let expect = crate::algebra::trig_add(&p, &q.scale(&rat(-3, 4)));
        assert_eq!(l.to_trig(), expect);
    }

    #[test]
    fn parallel_product_agrees() {
        let p = Lattice::from_trig(&sample(1, 0), 1, 0).div_sin();
        let q = Lattice::from_trig(&sample(1, 0), 1, 0);
        let mut a = p.mul(&q);
        let mut b = p.mul_with(&q, Exec::Parallel);
        a.normalize();
        b.normalize();
        assert_eq!(a.to_trig(), b.to_trig());
    }

    fn arb_poly(jp: u32, kp: u32) -> impl proptest::strategy::Strategy<Value = TrigPoly> {
        use proptest::prelude::*;
        proptest::collection::vec(((0u32..5, 0u32..5), -20i64..20, 1i64..9), 1..6).prop_map(move |terms| {
            TrigPoly::from_terms(
                terms.into_iter().map(|((a, b), p, q)| ((2 * a + jp, 2 * b + kp + 2), rat(p, q))),
            )
        })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn lattice_cube_equals_triple_product(p in arb_poly(1, 0), q in arb_poly(1, 0), r in arb_poly(1, 0)) {
            static TABLE: std::sync::OnceLock<crate::interaction::InteractionTable> = std::sync::OnceLock::new();
            let table = TABLE.get_or_init(|| build_table(40));
            let exact = trig_triple_product(&p, &q, &r, table).unwrap();
            let lp = Lattice::from_trig(&p, 1, 0).div_sin();
            let lq = Lattice::from_trig(&q, 1, 0).div_sin();
            let mut fast = lp.mul(&lq).mul(&Lattice::from_trig(&r, 1, 0));
            fast.normalize();
            proptest::prop_assert_eq!(fast.to_trig(), exact);
        }

        #[test]
        fn product_commutes(p in arb_poly(1, 1), q in arb_poly(1, 1)) {
            let (a, b) = (Lattice::from_trig(&p, 1, 1).div_sin(), Lattice::from_trig(&q, 1, 1).div_sin());
            let r = Lattice::from_trig(&q, 1, 1);
            let (mut x, mut y) = (a.mul(&b).mul(&r), b.mul(&a).mul(&r));
            x.normalize();
            y.normalize();
            proptest::prop_assert_eq!(x.to_trig(), y.to_trig());
        }
    }
}
