use super::rational::{format_rational, parse_rational, Rational};
use crate::error::Result;
use crate::interaction::InteractionTable;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Finite sum `sum c_{jk} cos(j tau) sin(k x)` with exact coefficients,
/// `j >= 0`, `k >= 1`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrigPoly {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl TrigPoly {
    pub fn new() -> Self {
        TrigPoly::default()
    }

    pub fn monomial(j: u32, k: u32, c: Rational) -> Self {
        let mut p = TrigPoly::new();
        p.add_term(j, k, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), Rational)>>(terms: I) -> Self {
        let mut p = TrigPoly::new();
        for ((j, k), c) in terms {
            p.add_term(j, k, c);
        }
        p
    }

    /// Adds `c cos(j tau) sin(k x)`; `k = 0` terms vanish identically and are dropped.
    pub fn add_term(&mut self, j: u32, k: u32, c: Rational) {
        if k == 0 || c.is_zero() {
            return;
        }
        match self.terms.entry((j, k)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn coeff(&self, j: u32, k: u32) -> Rational {
        self.terms.get(&(j, k)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.terms.iter().map(|(&(j, k), c)| (j, k, c))
    }

    pub fn max_j(&self) -> u32 {
        self.terms.keys().map(|&(j, _)| j).max().unwrap_or(0)
    }

    pub fn max_k(&self) -> u32 {
        self.terms.keys().map(|&(_, k)| k).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return TrigPoly::new();
        }
        TrigPoly {
            terms: self.terms.iter().map(|(&key, c)| (key, c * s)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        TrigPoly {
            terms: self.terms.iter().map(|(&key, c)| (key, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        trig_add(self, &other.neg())
    }

    /// `d^2/dtau^2`.
    pub fn d_tau2(&self) -> Self {
        self.map_coeffs(|j, _, c| -c * Rational::from_integer((j as i64 * j as i64).into()))
    }

    /// `d^2/dx^2`.
    pub fn d_x2(&self) -> Self {
        self.map_coeffs(|_, k, c| -c * Rational::from_integer((k as i64 * k as i64).into()))
    }

    fn map_coeffs<F: Fn(u32, u32, &Rational) -> Rational>(&self, f: F) -> Self {
        TrigPoly::from_terms(self.terms.iter().map(|(&(j, k), c)| ((j, k), f(j, k, c))))
    }

    /// Text form: one `j k p/q` line per term, ordered by `(j, k)`.
    pub fn to_lines(&self) -> Vec<String> {
        self.iter()
            .map(|(j, k, c)| format!("{j} {k} {}", format_rational(c)))
            .collect()
    }

    pub fn parse_line(line: &str) -> Option<(u32, u32, Rational)> {
        let mut it = line.split_whitespace();
        let j = it.next()?.parse().ok()?;
        let k = it.next()?.parse().ok()?;
        let c = parse_rational(it.next()?)?;
        if it.next().is_some() {
            return None;
        }
        Some((j, k, c))
    }
}

pub fn trig_add(p: &TrigPoly, q: &TrigPoly) -> TrigPoly {
    let mut out = p.clone();
    for (j, k, c) in q.iter() {
        out.add_term(j, k, c.clone());
    }
    out
}

/// `p q r / sin^2 x`, linearising `cos a cos b cos c` over the four signed
/// frequency sums and the spatial triple product through the interaction
/// coefficients.
pub fn trig_triple_product(
    p: &TrigPoly,
    q: &TrigPoly,
    r: &TrigPoly,
    table: &InteractionTable,
) -> Result<TrigPoly> {
    let mut out = TrigPoly::new();
    if p.is_empty() || q.is_empty() || r.is_empty() {
        return Ok(out);
    }
    let quarter = Rational::new(1.into(), 4.into());
    for (j1, k1, c1) in p.iter() {
        for (j2, k2, c2) in q.iter() {
            let c12 = c1 * c2 * &quarter;
            for (j3, k3, c3) in r.iter() {
                let row = table.row(k1, k2, k3)?;
                let c = &c12 * c3;
                let (a, b, d) = (j1 as i64, j2 as i64, j3 as i64);
                let freqs = [a + b + d, (a + b - d).abs(), (a - b + d).abs(), (-a + b + d).abs()];
                for (mi, s) in row.iter().enumerate() {
                    if s.is_zero() {
                        continue;
                    }
                    let cs = &c * s;
                    for &f in &freqs {
                        out.add_term(f as u32, mi as u32 + 1, cs.clone());
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Splits `p` into its resonant part (terms with `k = j N`) and the rest.
pub fn resonant_split(p: &TrigPoly, mode: u32) -> (TrigPoly, TrigPoly) {
    let mut res = TrigPoly::new();
    let mut non = TrigPoly::new();
    for (j, k, c) in p.iter() {
        if k == j * mode {
            res.add_term(j, k, c.clone());
        } else {
            non.add_term(j, k, c.clone());
        }
    }
    (res, non)
}

#[cfg(test)]
mod tests {
    use super::super::rat;
    use super::*;
    use crate::interaction::build_table;
    use crate::error::Error;

    #[test]
    fn add_identity_and_cancellation() {
        let p = TrigPoly::from_terms([((1, 2), rat(1, 2)), ((3, 8), rat(1, 3))]);
        assert_eq!(trig_add(&p, &TrigPoly::new()), p);
        assert_eq!(p.len(), 2);
        let a = TrigPoly::monomial(1, 2, rat(1, 1));
        let b = TrigPoly::monomial(1, 2, rat(-1, 1));
        assert!(trig_add(&a, &b).is_empty());
    }

    #[test]
    fn cube_of_fundamental_mode_two() {
        let t = build_table(8);
        let u = TrigPoly::monomial(1, 2, rat(1, 1));
        let w = trig_triple_product(&u, &u, &u, &t).unwrap();
        // sin^3 2x / sin^2 x = 2 sin 2x + sin 4x
        let expect = TrigPoly::from_terms([
            ((1, 2), rat(3, 2)),
            ((3, 2), rat(1, 2)),
            ((1, 4), rat(3, 4)),
            ((3, 4), rat(1, 4)),
        ]);
        assert_eq!(w, expect);
    }

    #[test]
    fn cube_of_sin_x_is_exact() {
        let t = build_table(4);
        let u = TrigPoly::monomial(1, 1, rat(1, 1));
        let w = trig_triple_product(&u, &u, &u, &t).unwrap();
        assert_eq!(w, TrigPoly::from_terms([((1, 1), rat(3, 4)), ((3, 1), rat(1, 4))]));
    }

    #[test]
    fn zero_argument() {
        let t = build_table(4);
        let u = TrigPoly::monomial(1, 1, rat(1, 1));
        assert!(trig_triple_product(&u, &TrigPoly::new(), &u, &t).unwrap().is_empty());
    }

    #[test]
    fn missing_table_entry_faults() {
        let t = build_table(2);
        let u = TrigPoly::monomial(1, 3, rat(1, 1));
        assert!(matches!(
            trig_triple_product(&u, &u, &u, &t),
            Err(Error::TableTooSmall { .. })
        ));
    }

    #[test]
    fn resonant_split_cases() {
        let p = TrigPoly::from_terms([((3, 6), rat(1, 5)), ((3, 2), rat(2, 7))]);
        let (r, n) = resonant_split(&p, 2);
        assert_eq!(r, TrigPoly::monomial(3, 6, rat(1, 5)));
        assert_eq!(n, TrigPoly::monomial(3, 2, rat(2, 7)));
        let (r, n) = resonant_split(&TrigPoly::monomial(1, 2, rat(1, 1)), 3);
        assert!(r.is_empty());
        assert_eq!(n.len(), 1);
        let (r2, n2) = resonant_split(&r, 3);
        assert_eq!(r2, r);
        assert!(n2.is_empty());
    }

    #[test]
    fn derivatives() {
        let p = TrigPoly::monomial(3, 2, rat(1, 1));
        assert_eq!(p.d_tau2(), TrigPoly::monomial(3, 2, rat(-9, 1)));
        assert_eq!(p.d_x2(), TrigPoly::monomial(3, 2, rat(-4, 1)));
    }

    #[test]
    fn line_format() {
        let p = TrigPoly::from_terms([((3, 8), rat(1, 80)), ((1, 4), rat(-1, 16))]);
        assert_eq!(p.to_lines(), vec!["1 4 -1/16".to_string(), "3 8 1/80".to_string()]);
        assert_eq!(TrigPoly::parse_line("1 4 -1/16"), Some((1, 4, rat(-1, 16))));
        assert_eq!(TrigPoly::parse_line("1 4"), None);
    }
}
