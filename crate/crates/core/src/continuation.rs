//! Pseudo-arclength continuation of Galerkin solutions in `(u_hat, Omega)`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::galerkin::{
    energy, fd_jacobian, newton_solve, residual, residual_norm, Fixed, GalerkinConfig, GalerkinState, NewtonOptions,
};
use crate::reducible::trunk_amplitude;
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointTag {
    Fold,
    NearSingular,
}

impl PointTag {
    pub fn label(self) -> &'static str {
        match self {
            PointTag::Fold => "fold",
            PointTag::NearSingular => "near-singular",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiagramPoint {
    pub omega: f64,
    pub energy: f64,
    pub state: GalerkinState,
    pub arclength: f64,
    pub branch_id: usize,
    pub residual: f64,
    pub tags: Vec<PointTag>,
}

impl DiagramPoint {
    pub fn new(state: GalerkinState, cfg: &GalerkinConfig, arclength: f64, branch_id: usize) -> Self {
        DiagramPoint {
            omega: state.omega,
            energy: energy(&state),
            residual: residual_norm(&state, cfg),
            state,
            arclength,
            branch_id,
            tags: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    DetectedSingularity,
    AmplitudeZeroCrossing,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::DetectedSingularity => "detected-singularity",
            EventKind::AmplitudeZeroCrossing => "amplitude-zero-crossing",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchEvent {
    pub omega_est: f64,
    pub kind: EventKind,
    /// `(j, k)` of the dominant mode of the emerging direction.
    pub mode_hint: (u32, u32),
    /// Solution at the located event.
    pub point: DiagramPoint,
    /// Unit tangent of the walked curve at the event.
    pub tangent: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct ContinuationOptions {
    pub steps: usize,
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub tol: f64,
    pub max_newton: usize,
    /// Stop once `Omega` leaves this window.
    pub omega_bounds: (f64, f64),
    /// Coefficient watched for sign changes, normally the fundamental.
    pub monitor: Option<(usize, usize)>,
    pub sigma_threshold: f64,
    /// `+1` walks towards increasing `Omega` at the start, `-1` the other way.
    pub direction: f64,
    pub exec: Exec,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steps: 200,
            ds0: 0.01,
            ds_min: 1e-5,
            ds_max: 0.1,
            tol: 1e-10,
            max_newton: 8,
            omega_bounds: (0.0, f64::INFINITY),
            monitor: Some((0, 0)),
            sigma_threshold: 1e-8,
            direction: 1.0,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BranchWalk {
    pub points: Vec<DiagramPoint>,
    pub events: Vec<BranchEvent>,
}

struct System<'a> {
    cfg: &'a GalerkinConfig,
    exec: Exec,
}

impl System<'_> {
    fn dim(&self) -> usize {
        self.cfg.unknowns()
    }

    fn pack(&self, s: &GalerkinState) -> DVector<f64> {
        let mut v = s.to_vector().resize_vertically(self.dim() + 1, 0.0);
        v[self.dim()] = s.omega;
        v
    }

    fn unpack(&self, y: &DVector<f64>) -> GalerkinState {
        let p = self.dim();
        GalerkinState::from_vector(&y.rows(0, p).into_owned(), self.cfg.m_tau(), self.cfg.m_x(), y[p])
    }

    fn g(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(residual(&self.unpack(y), self.cfg).as_slice())
    }

    fn jac(&self, y: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(&|v: &DVector<f64>| self.g(v), y, self.exec)
    }

    fn bordered(&self, y: &DVector<f64>, t: &DVector<f64>) -> DMatrix<f64> {
        let j = self.jac(y);
        let p = self.dim();
        let mut b = j.resize_vertically(p + 1, 0.0);
        b.row_mut(p).copy_from(&t.transpose());
        b
    }

    /// Null direction of `J_G` with the requested sign of the `Omega` part.
    fn tangent(&self, y: &DVector<f64>, direction: f64) -> DVector<f64> {
        let p = self.dim();
        let padded = self.jac(y).resize_vertically(p + 1, 0.0);
        let svd = padded.svd(false, true);
        let vt = svd.v_t.expect("requested V");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let mut t = vt.row(imin).transpose();
        if t[p] * direction < 0.0 {
            t = -t;
        }
        t.normalize()
    }

    /// Newton on `G = 0`, `t . (y - y0) = ds`.
    fn correct(
        &self,
        y0: &DVector<f64>,
        t: &DVector<f64>,
        ds: f64,
        opts: &ContinuationOptions,
    ) -> Option<(DVector<f64>, usize)> {
        let mut y = y0 + t * ds;
        for it in 0..=opts.max_newton {
            let g = self.g(&y);
            let c = t.dot(&(&y - y0)) - ds;
            let norm = g.amax();
            if !norm.is_finite() {
                return None;
            }
            if norm < opts.tol && c.abs() < opts.tol {
                return Some((y, it));
            }
            if it == opts.max_newton {
                break;
            }
            let b = self.bordered(&y, t);
            let mut rhs = -g.resize_vertically(self.dim() + 1, 0.0);
            rhs[self.dim()] = -c;
            let step = b.lu().solve(&rhs)?;
            y += step;
        }
        None
    }
}

fn det_sign(m: DMatrix<f64>) -> f64 {
    let lu = m.lu();
    let mut s: f64 = lu.p().determinant();
    for d in lu.u().diagonal().iter() {
        if *d == 0.0 {
            return 0.0;
        }
        s *= d.signum();
    }
    s
}

fn sigma_min(m: DMatrix<f64>) -> f64 {
    m.svd(false, false).singular_values.min()
}

fn mode_of(cfg: &GalerkinConfig, idx: usize) -> (u32, u32) {
    let m = idx % cfg.m_tau();
    let n = idx / cfg.m_tau();
    (2 * m as u32 + 1, cfg.wavenumber(n))
}

/// Dominant entry of the fixed-`Omega` null direction, skipping `skip`.
fn null_mode(sys: &System, y: &DVector<f64>, skip: Option<usize>) -> (u32, u32) {
    let p = sys.dim();
    let j = sys.jac(y).columns(0, p).into_owned();
    let svd = j.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let v = vt.row(imin);
    let best = (0..p)
        .filter(|&i| Some(i) != skip)
        .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
        .unwrap_or(0);
    mode_of(sys.cfg, best)
}

fn dominant_other(cfg: &GalerkinConfig, s: &GalerkinState, skip: Option<usize>) -> (u32, u32) {
    let v = s.to_vector();
    let best = (0..v.len())
        .filter(|&i| Some(i) != skip)
        .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
        .unwrap_or(0);
    mode_of(cfg, best)
}

/// Converged trunk state of `mode` at fixed `omega`, seeded by `seed` or by
/// the one-mode amplitude. Below onset the trunk is the zero state.
pub fn trunk_point(
    mode: u32,
    cfg: &GalerkinConfig,
    omega: f64,
    seed: Option<&GalerkinState>,
    opts: &NewtonOptions,
) -> Result<GalerkinState> {
    let (m, n) = cfg
        .mode_index(mode)
        .ok_or_else(|| Error::Domain(format!("mode {mode} is not representable on this grid")))?;
    if omega <= mode as f64 {
        return Ok(GalerkinState::zeros(cfg, omega));
    }
    let mut s = match seed {
        Some(s) => s.resized(cfg.m_tau(), cfg.m_x()),
        None => {
            let mut s = GalerkinState::zeros(cfg, omega);
            s.u_hat[(m, n)] = trunk_amplitude(mode, omega)?;
            s
        }
    };
    s.omega = omega;
    Ok(newton_solve(&s, cfg, Fixed::Omega, opts)?.state)
}

/// Trunk states along `omegas`, each seeded by its predecessor.
pub fn trunk_sweep(
    mode: u32,
    cfg: &GalerkinConfig,
    omegas: &[f64],
    opts: &NewtonOptions,
) -> Vec<(f64, Result<GalerkinState>)> {
    let mut prev: Option<GalerkinState> = None;
    omegas
        .iter()
        .map(|&w| {
            let seed = prev.as_ref().filter(|p| p.u_hat.amax() > 0.0);
            let r = trunk_point(mode, cfg, w, seed, opts);
            if let Ok(s) = &r {
                prev = Some(s.clone());
            }
            (w, r)
        })
        .collect()
}

/// Walks the solution curve through `start`.
pub fn continue_branch(
    start: &DiagramPoint,
    cfg: &GalerkinConfig,
    opts: &ContinuationOptions,
) -> Result<BranchWalk> {
    continue_with_tangent(start, None, cfg, opts)
}

/// As `continue_branch`, with an explicit initial tangent.
pub fn continue_with_tangent(
    start: &DiagramPoint,
    tangent: Option<DVector<f64>>,
    cfg: &GalerkinConfig,
    opts: &ContinuationOptions,
) -> Result<BranchWalk> {
    let sys = System { cfg, exec: opts.exec };
    let p = sys.dim();
    if start.state.u_hat.shape() != (cfg.m_tau(), cfg.m_x()) {
        return Err(Error::Domain("start state does not match the configuration".into()));
    }
    if start.residual > 1e-8 {
        return Err(Error::Domain(format!("start point not converged (residual {:e})", start.residual)));
    }
    let monitor = opts.monitor.map(|(m, n)| n * cfg.m_tau() + m);
    let mut y = sys.pack(&start.state);
    let mut t = match tangent {
        Some(t) => t.normalize(),
        None => sys.tangent(&y, opts.direction),
    };
    let mut walk = BranchWalk { points: vec![start.clone()], events: Vec::new() };
    let mut det = det_sign(sys.bordered(&y, &t));
    let mut ds = opts.ds0.clamp(opts.ds_min, opts.ds_max);
    let mut arclength = start.arclength;
    let mut fast = 0;
    let mut halvings = 0;

    for _ in 0..opts.steps {
        let Some((y_new, iters)) = sys.correct(&y, &t, ds, opts) else {
            halvings += 1;
            ds *= 0.5;
            fast = 0;
            if halvings >= 8 || ds < opts.ds_min {
                return Err(Error::Stall { omega: y[p], halvings });
            }
            continue;
        };
        halvings = 0;
        let secant = (&y_new - &y).normalize();
        let b_new = sys.bordered(&y_new, &secant);
        let det_new = det_sign(b_new.clone());
        let smin = sigma_min(b_new);
        arclength += (&y_new - &y).norm();

        let state = sys.unpack(&y_new);
        let mut point = DiagramPoint::new(state, cfg, arclength, start.branch_id);
        if secant[p] * t[p] < 0.0 {
            point.tags.push(PointTag::Fold);
        }
        if smin < opts.sigma_threshold.sqrt() {
            point.tags.push(PointTag::NearSingular);
        }

        if det * det_new < 0.0 || smin < opts.sigma_threshold {
            let (yb, tb) = locate(&sys, &y, &t, ds, det, opts).unwrap_or((y_new.clone(), secant.clone()));
            let bp = DiagramPoint::new(sys.unpack(&yb), cfg, arclength, start.branch_id);
            walk.events.push(BranchEvent {
                omega_est: yb[p],
                kind: EventKind::DetectedSingularity,
                mode_hint: null_mode(&sys, &yb, monitor),
                point: bp,
                tangent: tb,
            });
        }
        if let Some(i) = monitor {
            let (a0, a1) = (y[i], y_new[i]);
            if a0 != 0.0 && a0 * a1 < 0.0 {
                let yz = locate_zero(&sys, &y, &t, ds, i, opts).unwrap_or_else(|| {
                    let f = a0 / (a0 - a1);
                    &y + (&y_new - &y) * f
                });
                let zp = DiagramPoint::new(sys.unpack(&yz), cfg, arclength, start.branch_id);
                walk.events.push(BranchEvent {
                    omega_est: yz[p],
                    kind: EventKind::AmplitudeZeroCrossing,
                    mode_hint: dominant_other(cfg, &zp.state, monitor),
                    point: zp,
                    tangent: secant.clone(),
                });
            }
        }

        walk.points.push(point);
        y = y_new;
        t = secant;
        det = det_new;
        if iters <= 3 {
            fast += 1;
            if fast >= 4 {
                ds = (ds * 2.0).min(opts.ds_max);
                fast = 0;
            }
        } else {
            fast = 0;
        }
        if y[p] < opts.omega_bounds.0 || y[p] > opts.omega_bounds.1 {
            break;
        }
    }
    Ok(walk)
}

/// Bisects the step `(y, t, ds)` for the sign change of the bordered
/// determinant.
fn locate(
    sys: &System,
    y: &DVector<f64>,
    t: &DVector<f64>,
    ds: f64,
    det0: f64,
    opts: &ContinuationOptions,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let (mut lo, mut hi) = (0.0, ds);
    let mut best = None;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = sys.correct(y, t, mid, opts)?;
        let tm = (&ym - y).normalize();
        let d = det_sign(sys.bordered(&ym, &tm));
        best = Some((ym, tm));
        if d * det0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-7 {
            break;
        }
    }
    best
}

/// Arclength root of component `i` on `[0, ds]` by regula falsi with the
/// Illinois correction, each trial point corrected back onto the curve.
fn locate_zero(
    sys: &System,
    y: &DVector<f64>,
    t: &DVector<f64>,
    ds: f64,
    i: usize,
    opts: &ContinuationOptions,
) -> Option<DVector<f64>> {
    let (mut lo, mut hi) = (0.0, ds);
    let (mut flo, mut fhi) = (y[i], sys.correct(y, t, ds, opts)?.0[i]);
    let mut side = 0;
    let mut best = None;
    for _ in 0..60 {
        let mid = (lo * fhi - hi * flo) / (fhi - flo);
        let (ym, _) = sys.correct(y, t, mid, opts)?;
        let fm = ym[i];
        let done = fm.abs() < 1e-13 || (hi - lo) < 1e-13;
        best = Some(ym);
        if done {
            break;
        }
        if fm * flo > 0.0 {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    best
}

/// Leaves the walked curve at `event` along the second null direction of
/// the bordered Jacobian, trying both signs.
pub fn switch_branch(event: &BranchEvent, cfg: &GalerkinConfig, opts: &ContinuationOptions) -> Result<(DiagramPoint, DVector<f64>)> {
    let sys = System { cfg, exec: opts.exec };
    let p = sys.dim();
    let y = sys.pack(&event.point.state);
    let t = &event.tangent;
    let padded = sys.jac(&y).resize_vertically(p + 1, 0.0);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    // of the two smallest directions, keep the one least aligned with t
    let cands: Vec<DVector<f64>> = order.iter().take(2).map(|&i| vt.row(i).transpose()).collect();
    let mut phi = cands
        .iter()
        .min_by(|a, b| a.dot(t).abs().partial_cmp(&b.dot(t).abs()).unwrap())
        .unwrap()
        .clone();
    phi -= t * phi.dot(t);
    let phi = phi.normalize();
    let ds = opts.ds0.clamp(opts.ds_min, opts.ds_max);
    for sign in [1.0, -1.0] {
        let dir = &phi * sign;
        if let Some((yn, _)) = sys.correct(&y, &dir, ds, opts) {
            let d = &yn - &y;
            let along_trunk = d.dot(t).abs() / d.norm();
            if along_trunk < 0.9 {
                let state = sys.unpack(&yn);
                let mut pt = DiagramPoint::new(state, cfg, event.point.arclength, event.point.branch_id + 1);
                pt.arclength = 0.0;
                return Ok((pt, d.normalize()));
            }
        }
    }
    Err(Error::FallbackToTrunk)
}

/// `Omega -> Omega / q` with temporal harmonics `j -> q j`; the energy is
/// unchanged.
pub fn rescale_family(points: &[DiagramPoint], q: usize, cfg_out: &GalerkinConfig) -> Result<Vec<DiagramPoint>> {
    if q == 0 || q % 2 == 0 {
        return Err(Error::Domain(format!("rescaling factor must be odd, got {q}")));
    }
    points
        .iter()
        .map(|pt| {
            let (mt, mx) = pt.state.u_hat.shape();
            if mx > cfg_out.m_x() || (q * (2 * mt - 1) + 1) / 2 > cfg_out.m_tau() {
                return Err(Error::Domain("target grid too small for the rescaled state".into()));
            }
            let mut u = DMatrix::zeros(cfg_out.m_tau(), cfg_out.m_x());
            for m in 0..mt {
                let target = (q * (2 * m + 1) - 1) / 2;
                for n in 0..mx {
                    u[(target, n)] = pt.state.u_hat[(m, n)];
                }
            }
            let state = GalerkinState { u_hat: u, omega: pt.omega / q as f64 };
            let mut out = DiagramPoint::new(state, cfg_out, pt.arclength, pt.branch_id);
            out.tags = pt.tags.clone();
            Ok(out)
        })
        .collect()
}
