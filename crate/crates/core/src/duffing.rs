//! Exact single-mode solution for `N = 1`.
//!
//! With `u = phi(t) sin x` the field equation reduces to the Duffing
//! oscillator `phi'' + phi + phi^3 = 0`, solved by
//! `phi = eps cn(sqrt(1 + eps^2) t, kappa)`.

use crate::algebra::{rat, EpsPolynomial, Rational};
use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuffingSolution {
    pub epsilon: f64,
    pub kappa: f64,
    pub omega: f64,
    pub energy: f64,
}

impl DuffingSolution {
    pub fn new(epsilon: f64) -> Self {
        DuffingSolution {
            epsilon,
            kappa: modulus(epsilon),
            omega: duffing_frequency(epsilon),
            energy: duffing_energy(epsilon),
        }
    }
}

pub fn modulus(epsilon: f64) -> f64 {
    epsilon / (2.0 * (1.0 + epsilon * epsilon)).sqrt()
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    0.5 * (a + b)
}

/// `K(kappa) = pi / (2 agm(1, sqrt(1 - kappa^2)))`.
pub fn complete_elliptic_k(kappa: f64) -> Result<f64> {
    if !(kappa * kappa < 1.0) {
        return Err(Error::Domain(format!("elliptic modulus {kappa} outside [0, 1)")));
    }
    Ok(PI / (2.0 * agm(1.0, (1.0 - kappa * kappa).sqrt())))
}

pub fn duffing_frequency(epsilon: f64) -> f64 {
    let k = complete_elliptic_k(modulus(epsilon)).expect("modulus below 1/sqrt 2");
    0.5 * PI * (1.0 + epsilon * epsilon).sqrt() / k
}

pub fn duffing_energy(epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    PI * e2 * (2.0 + e2) / 8.0
}

/// Jacobi `cn(u, kappa)` by the descending AGM scheme.
pub fn jacobi_cn(u: f64, kappa: f64) -> f64 {
    let m = kappa * kappa;
    if m == 0.0 {
        return u.cos();
    }
    let mut a = vec![1.0];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > 1e-17 && a.len() < 40 {
        let an = *a.last().unwrap();
        c.push(0.5 * (an - b));
        let bn = (an * b).sqrt();
        a.push(0.5 * (an + b));
        b = bn;
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    phi.cos()
}

pub fn duffing_profile(epsilon: f64, t: f64) -> f64 {
    epsilon * jacobi_cn((1.0 + epsilon * epsilon).sqrt() * t, modulus(epsilon))
}

/// Exact Taylor series of `Omega^2` in `s = eps^2` through `order`:
/// `Omega^2 = (1 + s) / F(m)^2` with `m = s / (2 (1 + s))` and
/// `F = 2F1(1/2, 1/2; 1; m) = 2 K / pi`.
pub fn omega_sq_taylor(order: usize) -> EpsPolynomial {
    // m(s) = s/2 - s^2/2 + s^3/2 - ...
    let m = EpsPolynomial::new(
        (0..=order)
            .map(|i| if i == 0 { rat(0, 1) } else { rat(if i % 2 == 1 { 1 } else { -1 }, 2) })
            .collect(),
    );
    let mut f = EpsPolynomial::zero();
    let mut power = EpsPolynomial::one();
    let mut c = Rational::from_integer(1.into());
    for n in 0..=order {
        f = f.add(&power.scale(&c));
        power = power.mul_truncated(&m, order);
        let h = rat(2 * n as i64 + 1, 2 * n as i64 + 2);
        c = &c * &h * &h;
    }
    let f2 = f.mul_truncated(&f, order);
    // 1 / f2 by series inversion
    let mut inv = vec![rat(0, 1); order + 1];
    inv[0] = rat(1, 1);
    for n in 1..=order {
        let mut acc = rat(0, 1);
        for i in 1..=n {
            acc -= f2.coeff(i) * &inv[n - i];
        }
        inv[n] = acc;
    }
    EpsPolynomial::new(inv).mul_truncated(&EpsPolynomial::from_i64(&[1, 1]), order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn k_quadrature(kappa: f64) -> f64 {
        // Gauss-Chebyshev-free form: K = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2)
        let n = 4000;
        let h = 0.5 * PI / n as f64;
        // periodic smooth integrand over a half period: midpoint is spectrally accurate
        (0..n)
            .map(|i| {
                let th = (i as f64 + 0.5) * h;
                h / (1.0 - kappa * kappa * th.sin().powi(2)).sqrt()
            })
            .sum()
    }

    fn rk4_orbit(eps: f64, t_end: f64, steps: usize) -> (f64, f64) {
        let f = |y: f64, v: f64| (v, -y - y * y * y);
        let h = t_end / steps as f64;
        let (mut y, mut v) = (eps, 0.0);
        for _ in 0..steps {
            let (k1y, k1v) = f(y, v);
            let (k2y, k2v) = f(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
            let (k3y, k3v) = f(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
            let (k4y, k4v) = f(y + h * k3y, v + h * k3v);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (y, v)
    }

    #[test]
    fn elliptic_k_values() {
        assert!((complete_elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        for kappa in [0.1, 0.5, 1.0 / 2f64.sqrt()] {
            let k = complete_elliptic_k(kappa).unwrap();
            assert!((k - k_quadrature(kappa)).abs() < 1e-12, "{kappa}");
        }
        assert!(complete_elliptic_k(1.0).is_err());
    }

    #[test]
    fn frequency_limits() {
        assert_eq!(duffing_frequency(0.0), 1.0);
        assert!((duffing_frequency(0.1) - (1.0 + 3.0 * 0.01 / 8.0)).abs() < 1e-4);
        let asym = (2.0 * PI).sqrt() * 100.0 * gamma(0.75) / gamma(0.25);
        assert!((duffing_frequency(100.0) / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn energy_values() {
        assert_eq!(duffing_energy(0.0), 0.0);
        assert!((duffing_energy(1.0) - 3.0 * PI / 8.0).abs() < 1e-14);
        assert!((duffing_energy(2.0) - 3.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn profile_against_ode() {
        let eps = 0.5;
        assert_eq!(duffing_profile(eps, 0.0), eps);
        let quarter = complete_elliptic_k(modulus(eps)).unwrap() / (1.0f64 + eps * eps).sqrt();
        assert!(duffing_profile(eps, quarter).abs() < 1e-10);
        let (y, _) = rk4_orbit(eps, 1.0, 20000);
        assert!((duffing_profile(eps, 1.0) - y).abs() < 1e-9);
    }

    #[test]
    fn period_matches_ode() {
        for eps in [0.3, 1.0, 2.5] {
            let period = 2.0 * PI / duffing_frequency(eps);
            let (y, v) = rk4_orbit(eps, period, 40000);
            assert!((y - eps).abs() < 1e-9 * eps.max(1.0) && v.abs() < 1e-8 * eps.max(1.0) * eps, "{eps}: {y} {v}");
        }
    }

    #[test]
    fn ode_residual_on_log_grid() {
        for i in 0..50 {
            let eps = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
            let w = (1.0 + eps * eps).sqrt();
            let t = 0.37 / w;
            // Richardson-extrapolated second difference
            let d2 = |h: f64| {
                (duffing_profile(eps, t + h) - 2.0 * duffing_profile(eps, t) + duffing_profile(eps, t - h)) / (h * h)
            };
            let h = 2e-2 / w;
            let acc = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
            let y = duffing_profile(eps, t);
            let res = acc + y + y * y * y;
            let scale = eps * w * w;
            assert!(res.abs() < 1e-8 * scale.max(1.0), "eps {eps}: {res}");
        }
    }

    #[test]
    fn monotone_frequency() {
        let mut last = 1.0;
        for i in 1..2000 {
            let w = duffing_frequency(i as f64 * 0.01);
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn taylor_series_tracks_frequency() {
        let p = omega_sq_taylor(12);
        assert_eq!(p.coeff(0), rat(1, 1));
        assert_eq!(p.coeff(1), rat(3, 4));
        let s: f64 = 0.01;
        assert!((p.eval(s) - duffing_frequency(s.sqrt()).powi(2)).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn frequency_and_energy_increase(a in 1e-3f64..50.0, d in 1e-3f64..5.0) {
            proptest::prop_assert!(duffing_frequency(a + d) > duffing_frequency(a));
            proptest::prop_assert!(duffing_energy(a + d) > duffing_energy(a));
            proptest::prop_assert!(modulus(a) < std::f64::consts::FRAC_1_SQRT_2);
        }
    }
}
