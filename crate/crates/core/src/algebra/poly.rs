use super::rational::{to_f64, Rational};
use num_traits::{One, Zero};
use std::fmt;

/// Dense univariate polynomial in the expansion parameter with exact
/// coefficients; index `i` holds the coefficient of `eps^i`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct EpsPolynomial {
    coeffs: Vec<Rational>,
}

impl EpsPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        EpsPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        EpsPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        EpsPolynomial::new(vec![Rational::one()])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        EpsPolynomial::new(coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    /// Degree, or -1 for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: f64) -> f64 {
        poly_eval(self, x)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Keeps the terms of degree `<= order`.
    pub fn truncate(&self, order: usize) -> Self {
        EpsPolynomial::new(self.coeffs.iter().take(order + 1).cloned().collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        EpsPolynomial::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        EpsPolynomial::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        EpsPolynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return EpsPolynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        EpsPolynomial::new(out)
    }

    /// Product truncated at degree `order`.
    pub fn mul_truncated(&self, other: &Self, order: usize) -> Self {
        let mut out = vec![Rational::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] += a * b;
            }
        }
        EpsPolynomial::new(out)
    }

    pub fn derivative(&self) -> Self {
        EpsPolynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    /// Euclidean division over the rationals. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let lead = divisor.leading().expect("division by the zero polynomial").clone();
        let dd = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (EpsPolynomial::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = &rem[i + dd] / &lead;
            if !c.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &c * d;
                }
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (EpsPolynomial::new(quot), EpsPolynomial::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        match a.leading().cloned() {
            Some(l) => a.scale(&(Rational::one() / l)),
            None => a,
        }
    }

    /// Power-series square root through `order`, given the root of the
    /// constant term.
    pub fn sqrt_series(&self, root0: &Rational, order: usize) -> Self {
        assert!(!root0.is_zero(), "square root series needs a nonzero constant term");
        assert_eq!(root0 * root0, self.coeff(0), "root0 must square to the constant term");
        let two_root = root0 * Rational::from_integer(2.into());
        let mut s: Vec<Rational> = vec![root0.clone()];
        for n in 1..=order {
            let mut acc = self.coeff(n);
            for i in 1..n {
                acc -= &s[i] * &s[n - i];
            }
            s.push(acc / &two_root);
        }
        EpsPolynomial::new(s)
    }
}

/// Horner evaluation after converting the coefficients to floats.
pub fn poly_eval(p: &EpsPolynomial, x: f64) -> f64 {
    p.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + to_f64(c))
}

impl fmt::Debug for EpsPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "EpsPolynomial[{}]", terms.join(", "))
    }
}
