//! Diagonal Padé approximants of eps-series, their real poles, and pole
//! spectra across approximant orders.

use crate::algebra::{to_f64, EpsPolynomial, Rational};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lindstedt::{coefficient_series, frequency_series, SeriesSolution, SeriesTarget};
use nalgebra::DMatrix;
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct PadeApproximant {
    pub num: EpsPolynomial,
    pub den: EpsPolynomial,
    /// Requested type `[n/n]`.
    pub type_n: usize,
    /// Denominator degree actually solved for; below `type_n` when the
    /// Hankel system was singular.
    pub den_degree: usize,
}

impl PadeApproximant {
    /// Highest eps power reproduced exactly.
    pub fn matched_order(&self) -> usize {
        self.type_n + self.den_degree
    }

    /// Value at `eps`, exact up to the final rounding. For many points build
    /// an `evaluator` once.
    pub fn eval(&self, eps: f64) -> f64 {
        self.evaluator().eval(eps)
    }

    pub fn evaluator(&self) -> PadeEvaluator {
        let (num, ns) = integer_form(&self.num);
        let (den, ds) = integer_form(&self.den);
        let scale = ns / ds;
        PadeEvaluator { num, den, scale_num: scale.numer().clone(), scale_den: scale.denom().clone() }
    }

    /// Taylor coefficients of `num / den` through `order`.
    pub fn taylor(&self, order: usize) -> EpsPolynomial {
        let mut out: Vec<Rational> = Vec::with_capacity(order + 1);
        let d0 = self.den.coeff(0);
        for i in 0..=order {
            let mut acc = self.num.coeff(i);
            for j in 1..=i.min(self.den.coeffs().len().saturating_sub(1)) {
                acc -= self.den.coeff(j) * &out[i - j];
            }
            out.push(acc / &d0);
        }
        EpsPolynomial::new(out)
    }
}

/// `num / den` held as integer polynomials and a rational factor, evaluated
/// in integer arithmetic at the binary value of the argument.
#[derive(Clone, Debug)]
pub struct PadeEvaluator {
    num: Vec<BigInt>,
    den: Vec<BigInt>,
    scale_num: BigInt,
    scale_den: BigInt,
}

impl PadeEvaluator {
    pub fn eval(&self, eps: f64) -> f64 {
        let x = Rational::from_float(eps).expect("finite argument");
        let (m, q) = (x.numer(), x.denom());
        let d = homogeneous(&self.den, m, q);
        if d.is_zero() {
            return f64::INFINITY;
        }
        if self.num.is_empty() {
            return 0.0;
        }
        // q^deg p(m/q) for both, then restore the missing powers of q
        let n = homogeneous(&self.num, m, q);
        let (dn, dd) = (self.num.len() - 1, self.den.len() - 1);
        let mut top = n * &self.scale_num;
        let mut bottom = d * &self.scale_den;
        if dd > dn {
            top *= q.pow((dd - dn) as u32);
        } else {
            bottom *= q.pow((dn - dd) as u32);
        }
        if bottom.is_negative() {
            top = -top;
            bottom = -bottom;
        }
        to_f64(&Rational::new_raw(top, bottom))
    }
}

/// `p = scale * ints` with coprime integer coefficients.
fn integer_form(p: &EpsPolynomial) -> (Vec<BigInt>, Rational) {
    let mut l = BigInt::one();
    for c in p.coeffs() {
        l = l.lcm(c.denom());
    }
    let mut ints: Vec<BigInt> = p.coeffs().iter().map(|c| c.numer() * (&l / c.denom())).collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    if g.is_zero() {
        return (Vec::new(), Rational::zero());
    }
    if !g.is_one() {
        ints.iter_mut().for_each(|c| *c /= &g);
    }
    (ints, Rational::new(g, l))
}

/// `den^d P(num/den)` for `P = sum c_i x^i` of degree `d`.
fn homogeneous(c: &[BigInt], num: &BigInt, den: &BigInt) -> BigInt {
    let Some(d) = c.len().checked_sub(1) else {
        return BigInt::zero();
    };
    let mut den_pow = vec![BigInt::one()];
    for i in 1..=d {
        let next = &den_pow[i - 1] * den;
        den_pow.push(next);
    }
    let mut acc = c[d].clone();
    for i in (0..d).rev() {
        acc = acc * num + &c[i] * &den_pow[d - i];
    }
    acc
}

/// Exact solve of a square rational system as `(det x, det)`; `None` when
/// singular. Rows
/// are cleared of denominators and reduced by fraction-free (Bareiss)
/// elimination, so no gcd is taken until back substitution.
fn solve(a: Vec<Vec<Rational>>, b: Vec<Rational>) -> Option<(Vec<BigInt>, BigInt)> {
    let n = b.len();
    let mut m: Vec<Vec<BigInt>> = a
        .into_iter()
        .zip(b)
        .map(|(mut row, rhs)| {
            row.push(rhs);
            let mut l = BigInt::one();
            for c in &row {
                l = l.lcm(c.denom());
            }
            row.iter().map(|c| c.numer() * (&l / c.denom())).collect()
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let piv = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, piv);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    // Cramer numerators y = det * x are integers; divisions below are exact
    let det = if n == 0 { BigInt::one() } else { m[n - 1][n - 1].clone() };
    let mut y = vec![BigInt::zero(); n];
    for i in (0..n).rev() {
        let mut acc = &m[i][n] * &det;
        for j in i + 1..n {
            acc -= &m[i][j] * &y[j];
        }
        y[i] = acc / &m[i][i];
    }
    Some((y, det))
}

/// `[n/n]` approximant from the coefficients through `eps^{2n}`.
pub fn build_pade(series: &EpsPolynomial, n: usize) -> Result<PadeApproximant> {
    if (series.degree() as isize) < 0 {
        return Ok(PadeApproximant {
            num: EpsPolynomial::zero(),
            den: EpsPolynomial::one(),
            type_n: n,
            den_degree: 0,
        });
    }
    build_pade_general(series, n, n)
}

/// `[l/m]` approximant; a singular Hankel block lowers the denominator
/// degree until the system is solvable.
pub fn build_pade_general(series: &EpsPolynomial, l: usize, m: usize) -> Result<PadeApproximant> {
    let c = |i: isize| if i < 0 { Rational::zero() } else { series.coeff(i as usize) };
    for md in (0..=m).rev() {
        // sum_{i=0}^{md} q_i c_{l+k-i} = 0, k = 1..md, q_0 = 1
        let mat: Vec<Vec<Rational>> = (1..=md)
            .map(|k| (1..=md).map(|i| c((l + k) as isize - i as isize)).collect())
            .collect();
        let rhs: Vec<Rational> = (1..=md).map(|k| -c((l + k) as isize)).collect();
        let Some((q, det)) = solve(mat, rhs) else { continue };
        let mut den_int = vec![det.clone()];
        den_int.extend(q);
        // num = den * series through eps^l, on the integer form of the series
        let (ints, scale) = integer_form(&series.truncate(l));
        let num: Vec<Rational> = (0..=l)
            .map(|i| {
                let mut acc = BigInt::zero();
                for (j, qj) in den_int.iter().enumerate().take(i + 1) {
                    if let Some(cv) = ints.get(i - j) {
                        acc += qj * cv;
                    }
                }
                Rational::new(acc, det.clone()) * &scale
            })
            .collect();
        let den: Vec<Rational> = den_int.into_iter().map(|v| Rational::new(v, det.clone())).collect();
        return Ok(PadeApproximant {
            num: EpsPolynomial::new(num),
            den: EpsPolynomial::new(den),
            type_n: l,
            den_degree: md,
        });
    }
    Err(Error::Domain("no solvable Padé block".into()))
}

/// Integer coefficients with the same roots.
fn primitive(p: &EpsPolynomial) -> Vec<BigInt> {
    integer_form(p).0
}

/// Sign of `sum c_i x^i` at a float, evaluated exactly at its binary value.
fn sign_at(c: &[BigInt], x: f64) -> i32 {
    let r = Rational::from_float(x).expect("finite point");
    match homogeneous(c, r.numer(), r.denom()).sign() {
        Sign::Plus => 1,
        Sign::Minus => -1,
        Sign::NoSign => 0,
    }
}

/// Float roots of the polynomial from its companion matrix.
fn companion_roots(c: &[BigInt]) -> Vec<(f64, f64)> {
    let big = c.iter().map(|x| x.abs()).max().unwrap_or_default();
    if big.is_zero() {
        return Vec::new();
    }
    let mut f: Vec<f64> = c.iter().map(|x| to_f64(&Rational::new(x.clone(), big.clone()))).collect();
    while f.len() > 1 && *f.last().unwrap() == 0.0 {
        f.pop();
    }
    let d = f.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = f[d];
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -f[d - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Distinct real roots of `p` in `[lo, hi]`, ascending. Candidates come from
/// the companion eigenvalues and an exact sign scan of a uniform grid; each
/// is confirmed by an exact sign change and bisected to 1e-13 relative.
/// Roots of even multiplicity are confirmed through a low derivative.
pub fn polynomial_real_roots(p: &EpsPolynomial, lo: f64, hi: f64) -> Vec<f64> {
    if p.degree() < 1 || !(lo < hi) {
        return Vec::new();
    }
    let c = primitive(p);
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut exact = Vec::new();

    const GRID: usize = 2048;
    let xs: Vec<f64> = (0..=GRID).map(|i| lo + (hi - lo) * i as f64 / GRID as f64).collect();
    let signs: Vec<i32> = xs.iter().map(|&x| sign_at(&c, x)).collect();
    for i in 0..GRID {
        if signs[i] == 0 {
            exact.push(xs[i]);
        } else if signs[i] * signs[i + 1] < 0 {
            brackets.push((xs[i], xs[i + 1]));
        }
    }
    if signs[GRID] == 0 {
        exact.push(hi);
    }

    // even-multiplicity roots show up as sign changes of a derivative
    let mut derivs = vec![c.clone()];
    let mut d = p.clone();
    for _ in 0..3.min(p.degree()) {
        d = d.derivative();
        derivs.push(primitive(&d));
    }
    let floats: Vec<f64> = {
        let big = c.iter().map(|x| x.abs()).max().unwrap_or_default();
        c.iter().map(|x| to_f64(&Rational::new(x.clone(), big.clone()))).collect()
    };
    let negligible = |x: f64| {
        let (v, s) = floats.iter().rev().fold((0.0f64, 0.0f64), |(v, s), &a| (v * x + a, s * x.abs() + a.abs()));
        v.abs() <= 1e-10 * s
    };

    for (re, im) in companion_roots(&c) {
        let scale = re.abs().max(1e-300);
        if im.abs() > 1e-6 * scale.max(1.0) || re < lo || re > hi {
            continue;
        }
        if sign_at(&c, re) == 0 {
            exact.push(re);
            continue;
        }
        for (order, q) in derivs.iter().enumerate() {
            let Some(x) = bracket_near(q, re, lo, hi) else { continue };
            if order == 0 || negligible(x) {
                exact.push(x);
                break;
            }
        }
    }

    let mut roots: Vec<f64> = exact;
    roots.extend(brackets.into_iter().map(|(a, b)| refine(&c, a, b)));
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * x.abs().max(y.abs()) + 1e-14);
    roots
}

/// Root of `c` next to the estimate `x`, from a sign change found by
/// widening a window around it.
fn bracket_near(c: &[BigInt], x: f64, lo: f64, hi: f64) -> Option<f64> {
    if sign_at(c, x) == 0 {
        return Some(x);
    }
    let scale = x.abs().max(1e-300);
    let mut delta = 1e-13 * scale.max(1e-3);
    while delta < 1e-2 * scale.max(1e-3) {
        let (a, b) = ((x - delta).max(lo), (x + delta).min(hi));
        let (sa, sb) = (sign_at(c, a), sign_at(c, b));
        if sa == 0 {
            return Some(a);
        }
        if sb == 0 {
            return Some(b);
        }
        if sa * sb < 0 {
            return Some(refine(c, a, b));
        }
        delta *= 10.0;
    }
    None
}

fn refine(c: &[BigInt], mut a: f64, mut b: f64) -> f64 {
    let sa = sign_at(c, a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || (b - a) <= 1e-13 * mid.abs() {
            break;
        }
        let sm = sign_at(c, mid);
        if sm == 0 {
            return mid;
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Real roots of the approximant's denominator inside `eps_range`.
pub fn real_poles(p: &PadeApproximant, eps_range: (f64, f64)) -> Vec<f64> {
    polynomial_real_roots(&p.den, eps_range.0, eps_range.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleRow {
    pub coeff: SeriesTarget,
    pub n: usize,
    pub eps_pole: f64,
    pub omega_pole: f64,
    pub clustered: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoleSpectrum {
    pub rows: Vec<PoleRow>,
}

/// Relative window for the cluster tag.
pub const CLUSTER_WINDOW: f64 = 5e-3;
/// Consecutive approximant orders needed for the cluster tag.
pub const CLUSTER_RUN: usize = 3;

fn target_series(sol: &SeriesSolution, t: SeriesTarget) -> EpsPolynomial {
    match t {
        SeriesTarget::Omega => frequency_series(sol),
        SeriesTarget::Coeff(j, k) => coefficient_series(sol, j, k),
    }
}

fn target_key(t: SeriesTarget) -> (u32, u32) {
    match t {
        SeriesTarget::Omega => (0, 0),
        SeriesTarget::Coeff(j, k) => (j, k),
    }
}

/// Poles of the `[n/n]` approximants of each target series, mapped through
/// the `[n/n]` approximant of `Omega`.
pub fn pole_scan(
    sol: &SeriesSolution,
    coeffs: &[SeriesTarget],
    n_list: &[usize],
    eps_range: (f64, f64),
    exec: Exec,
) -> Result<PoleSpectrum> {
    let omega = frequency_series(sol);
    let series: Vec<(SeriesTarget, EpsPolynomial)> =
        coeffs.iter().map(|&t| (t, target_series(sol, t))).collect();
    scan_series(&omega, &series, sol.n_max(), n_list, eps_range, exec)
}

fn scan_series(
    omega: &EpsPolynomial,
    series: &[(SeriesTarget, EpsPolynomial)],
    available: usize,
    n_list: &[usize],
    eps_range: (f64, f64),
    exec: Exec,
) -> Result<PoleSpectrum> {
    if let Some(&top) = n_list.iter().max() {
        if 2 * top > available {
            return Err(Error::InsufficientOrder { available, required: 2 * top });
        }
    }
    if !(eps_range.0 < eps_range.1) || !eps_range.0.is_finite() || !eps_range.1.is_finite() {
        return Err(Error::Domain(format!("bad eps range {eps_range:?}")));
    }
    let mut ns: Vec<usize> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let omega_pade: Vec<PadeApproximant> = exec
        .map(&ns, |&n| build_pade(&omega.truncate(2 * n), n))
        .into_iter()
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..series.len()).flat_map(|s| (0..ns.len()).map(move |i| (s, i))).collect();
    let found = exec.map(&tasks, |&(s, i)| -> Result<Vec<PoleRow>> {
        let (t, p) = &series[s];
        let n = ns[i];
        let approx = build_pade(&p.truncate(2 * n), n)?;
        Ok(real_poles(&approx, eps_range)
            .into_iter()
            .map(|e| PoleRow {
                coeff: *t,
                n,
                eps_pole: e,
                omega_pole: omega_pade[i].eval(e),
                clustered: false,
            })
            .collect())
    });
    let mut rows = Vec::new();
    for f in found {
        rows.extend(f?);
    }
    tag_clusters(&mut rows, &ns);
    rows.sort_by(|a, b| {
        (target_key(a.coeff), a.n)
            .cmp(&(target_key(b.coeff), b.n))
            .then(a.eps_pole.partial_cmp(&b.eps_pole).unwrap())
    });
    Ok(PoleSpectrum { rows })
}

/// Marks rows whose Omega-image recurs within `CLUSTER_WINDOW` across at
/// least `CLUSTER_RUN` consecutive scanned orders.
fn tag_clusters(rows: &mut [PoleRow], ns: &[usize]) {
    let snapshot: Vec<(SeriesTarget, usize, f64)> =
        rows.iter().map(|r| (r.coeff, r.n, r.omega_pole)).collect();
    for r in rows.iter_mut() {
        if !r.omega_pole.is_finite() {
            continue;
        }
        let hit = |n: usize| {
            snapshot.iter().any(|&(t, m, w)| {
                t == r.coeff && m == n && ((w - r.omega_pole) / r.omega_pole).abs() <= CLUSTER_WINDOW
            })
        };
        let pos = ns.iter().position(|&n| n == r.n).expect("scanned order");
        let mut run = 1;
        let mut i = pos;
        while i > 0 && hit(ns[i - 1]) {
            run += 1;
            i -= 1;
        }
        let mut i = pos;
        while i + 1 < ns.len() && hit(ns[i + 1]) {
            run += 1;
            i += 1;
        }
        r.clustered = run >= CLUSTER_RUN;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseReport {
    pub relative_noise: f64,
    /// Median Omega-image of the clustered poles of the unperturbed series.
    pub baseline_median: Option<f64>,
    /// Per-trial cluster medians, `None` where the cluster vanished.
    pub trial_medians: Vec<Option<f64>>,
    /// Largest `|trial - baseline|` over trials that kept the cluster.
    pub max_cluster_shift: f64,
    /// Mean distance from each scattered baseline pole to the nearest pole
    /// of the same order in the perturbed spectrum, averaged over trials.
    pub mean_scattered_shift: f64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median Omega of clustered rows inside `window` (relative) around
/// `center`; with no center, the largest cluster by row count.
fn cluster_median(spectrum: &PoleSpectrum, center: Option<f64>, window: f64) -> Option<f64> {
    let clustered: Vec<f64> =
        spectrum.rows.iter().filter(|r| r.clustered && r.omega_pole.is_finite()).map(|r| r.omega_pole).collect();
    let c = match center {
        Some(c) => c,
        None => {
            // densest clustered value
            let best = clustered.iter().copied().max_by_key(|&w| {
                clustered.iter().filter(|&&x| ((x - w) / w).abs() <= window).count()
            })?;
            best
        }
    };
    median(clustered.into_iter().filter(|&w| ((w - c) / c).abs() <= window).collect())
}

/// Multiplicative uniform noise `c -> c (1 + eta)`, `|eta| <= relative_noise`,
/// applied to the target and Omega series before rescanning.
#[allow(clippy::too_many_arguments)]
pub fn noise_robustness(
    sol: &SeriesSolution,
    coeff: SeriesTarget,
    n_list: &[usize],
    eps_range: (f64, f64),
    target: Option<f64>,
    relative_noise: f64,
    trials: usize,
    seed: u64,
) -> Result<NoiseReport> {
    let omega = frequency_series(sol);
    let series = target_series(sol, coeff);
    let exec = Exec::default();
    let window = 0.02;
    let base = scan_series(&omega, &[(coeff, series.clone())], sol.n_max(), n_list, eps_range, exec)?;
    let baseline = cluster_median(&base, target, window);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |p: &EpsPolynomial| {
        EpsPolynomial::new(
            p.coeffs()
                .iter()
                .map(|c| {
                    let eta: f64 = if relative_noise > 0.0 {
                        rng.random_range(-relative_noise..=relative_noise)
                    } else {
                        0.0
                    };
                    c * Rational::from_float(1.0 + eta).expect("finite")
                })
                .collect(),
        )
    };
    let mut trial_medians = Vec::with_capacity(trials);
    let mut max_shift: f64 = 0.0;
    let mut scattered = Vec::new();
    for _ in 0..trials {
        let noisy_omega = perturb(&omega);
        let noisy = perturb(&series);
        let spectrum = scan_series(&noisy_omega, &[(coeff, noisy)], sol.n_max(), n_list, eps_range, exec)?;
        let m = baseline.and_then(|b| cluster_median(&spectrum, Some(b), window));
        if let (Some(b), Some(m)) = (baseline, m) {
            max_shift = max_shift.max((m - b).abs());
        }
        trial_medians.push(m);
        for r in base.rows.iter().filter(|r| !r.clustered) {
            let d = spectrum
                .rows
                .iter()
                .filter(|s| s.n == r.n)
                .map(|s| (s.omega_pole - r.omega_pole).abs())
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                scattered.push(d);
            }
        }
    }
    let mean_scattered_shift =
        if scattered.is_empty() { 0.0 } else { scattered.iter().sum::<f64>() / scattered.len() as f64 };
    Ok(NoiseReport {
        relative_noise,
        baseline_median: baseline,
        trial_medians,
        max_cluster_shift: max_shift,
        mean_scattered_shift,
    })
}
