use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Exact arbitrary-precision fraction, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` or a bare integer.
pub fn format_rational(r: &Rational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let r = rat(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
        let z = rat(0, 7);
        assert_eq!(z.denom(), &BigInt::from(1));
    }

    #[test]
    fn text_round_trip() {
        for r in [rat(3, 2), rat(-1, 64), rat(5, 1), rat(0, 1)] {
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }

    #[test]
    fn huge_values_convert() {
        let big = Rational::new(BigInt::from(10).pow(400), BigInt::from(10).pow(399) * 3);
        assert!((to_f64(&big) - 10.0 / 3.0).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn text_form_round_trips(p in proptest::prelude::any::<i64>(), q in 1i64..i64::MAX) {
            let r = rat(p, q);
            proptest::prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
    }
}
