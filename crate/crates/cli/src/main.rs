mod output;

use clap::{Parser, Subcommand};
use conformal::continuation::{
    continue_branch, continue_with_tangent, switch_branch, trunk_point, trunk_sweep, BranchWalk, ContinuationOptions,
    DiagramPoint, EventKind,
};
use conformal::duffing::DuffingSolution;
use conformal::galerkin::{GalerkinConfig, GalerkinState, NewtonOptions};
use conformal::interaction::{s_coeff, s_quadrature_oracle};
use conformal::lindstedt::{
    coefficient_growth, coefficient_series, frequency_series, read_archive, write_archive, SeriesBuilder,
    SeriesTarget,
};
use conformal::pade::{build_pade, pole_scan, real_poles};
use conformal::reducible::enumerate_branches;
use conformal::{Error, Exec};
use output::{float, write_atomic, write_csv};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "conformal", version, about = "Time-periodic solutions of the cubic conformal wave equation")]
struct Cli {
    /// Worker threads for the parallel kernels (0 = all cores).
    #[arg(long, global = true, env = "CONFORMAL_THREADS", default_value_t = 0)]
    threads: usize,

    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print interaction coefficients S_jklm.
    Interactions {
        /// Index quadruples "j,k,l,m", repeatable.
        #[arg(long = "index", value_parser = parse_quad)]
        indices: Vec<[u32; 4]>,
        /// Compare every index up to --max against quadrature.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 12)]
        max: u32,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact mode-one trunk (eps, Omega, E).
    Duffing {
        #[arg(long, value_parser = parse_pair, default_value = "0.1,3")]
        eps_range: (f64, f64),
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the perturbative series and write it as an archive.
    Series {
        #[arg(long)]
        mode: u32,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write |c_n| of Omega^2 and the fundamental coefficient.
        #[arg(long)]
        growth_out: Option<PathBuf>,
    },
    /// Real poles of diagonal Pade approximants of archived series.
    PadeScan {
        #[arg(long)]
        archive: PathBuf,
        /// Coefficients "j1,k1;j2,k2"; "omega" selects Omega itself.
        #[arg(long, value_parser = parse_targets)]
        coeffs: Targets,
        /// Largest approximant index; needs series order >= 2 nmax.
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 1)]
        nmin: usize,
        #[arg(long, value_parser = parse_pair, default_value = "0,20")]
        eps_range: (f64, f64),
        #[arg(long)]
        out: PathBuf,
        /// Parametric (|a|, Omega) curve from the [nmax/nmax] approximants.
        #[arg(long)]
        curve_out: Option<PathBuf>,
        /// Coefficient "j,k" for the curve; defaults to the fundamental.
        #[arg(long, value_parser = parse_coeff)]
        curve_coeff: Option<(u32, u32)>,
        #[arg(long, default_value_t = 400)]
        curve_points: usize,
        /// Curve samples closer than this in eps to a real pole are dropped.
        #[arg(long, default_value_t = 0.0)]
        exclusion_radius: f64,
    },
    /// Galerkin trunk over a frequency grid.
    Trunk {
        #[arg(long)]
        mode: u32,
        #[arg(long = "M")]
        m: usize,
        #[arg(long, value_parser = parse_pair)]
        omega_range: (f64, f64),
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
        /// Append the coefficients, column-major.
        #[arg(long)]
        u_hat: bool,
    },
    /// Pseudo-arclength continuation from a trunk point.
    Continue {
        #[arg(long)]
        mode: u32,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        from_omega: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        ds: f64,
        #[arg(long, default_value_t = 0.1)]
        ds_max: f64,
        /// Upper frequency bound; defaults to 1.6 N.
        #[arg(long)]
        omega_max: Option<f64>,
        /// Switch onto every detected branch and walk it both ways.
        #[arg(long)]
        branches: bool,
        #[arg(long, default_value_t = 300)]
        branch_steps: usize,
        #[arg(long)]
        events_out: PathBuf,
        #[arg(long)]
        points_out: PathBuf,
        /// Append the coefficients to the points file, column-major.
        #[arg(long)]
        u_hat: bool,
    },
    /// Two-mode branches of the reducible system.
    Reducible {
        #[arg(long)]
        mode: u32,
        #[arg(long)]
        m_max: u32,
        #[arg(long)]
        n_max: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct Targets(Vec<SeriesTarget>);

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a < b) {
        return Err(format!("empty range {a},{b}"));
    }
    Ok((a, b))
}

fn parse_coeff(s: &str) -> Result<(u32, u32), String> {
    let (j, k) = s.split_once(',').ok_or("expected j,k")?;
    Ok((j.trim().parse().map_err(|e| format!("{e}"))?, k.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_targets(s: &str) -> Result<Targets, String> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        if item.eq_ignore_ascii_case("omega") {
            out.push(SeriesTarget::Omega);
        } else {
            let (j, k) = parse_coeff(item)?;
            out.push(SeriesTarget::Coeff(j, k));
        }
    }
    if out.is_empty() {
        return Err("no coefficients given".into());
    }
    Ok(Targets(out))
}

fn parse_quad(s: &str) -> Result<[u32; 4], String> {
    let v: Vec<u32> = s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{e}"))).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected j,k,l,m".to_string())
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InsufficientOrder { .. }
            | Error::Inadmissible { .. }
            | Error::Archive { .. }
            | Error::TableTooSmall { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        conformal::exec::configure_threads(cli.threads);
    }
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match run(cli.cmd, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd, exec: Exec) -> Outcome {
    match cmd {
        Cmd::Interactions { indices, check, max, tol, out } => interactions(&indices, check, max, tol, out),
        Cmd::Duffing { eps_range, count, out } => duffing(eps_range, count, &out),
        Cmd::Series { mode, order, out, growth_out } => series(mode, order, &out, growth_out, exec),
        Cmd::PadeScan {
            archive,
            coeffs,
            nmax,
            nmin,
            eps_range,
            out,
            curve_out,
            curve_coeff,
            curve_points,
            exclusion_radius,
        } => {
            let file = std::fs::File::open(&archive)?;
            let sol = read_archive(std::io::BufReader::new(file))?;
            if nmin < 1 || nmin > nmax {
                return Err(Failure::Usage(format!("need 1 <= nmin <= nmax, got {nmin}, {nmax}")));
            }
            let ns: Vec<usize> = (nmin..=nmax).collect();
            let spectrum = pole_scan(&sol, &coeffs.0, &ns, eps_range, exec)?;
            let rows: Vec<Vec<String>> = spectrum
                .rows
                .iter()
                .map(|r| {
                    let (j, k) = match r.coeff {
                        SeriesTarget::Coeff(j, k) => (j.to_string(), k.to_string()),
                        SeriesTarget::Omega => ("omega".into(), "omega".into()),
                    };
                    let tag = if r.clustered { "clustered" } else { "scattered" };
                    vec![j, k, r.n.to_string(), float(r.eps_pole), float(r.omega_pole), tag.into()]
                })
                .collect();
            write_csv(&out, &["coeff_j", "coeff_k", "n", "eps_pole", "omega_pole", "cluster_tag"], &rows)?;
            if let Some(path) = curve_out {
                let (j, k) = curve_coeff.unwrap_or((1, sol.mode()));
                pade_curve(&sol, (j, k), nmax, eps_range, curve_points, exclusion_radius, &path)?;
            }
            Ok(())
        }
        Cmd::Trunk { mode, m, omega_range, step, out, u_hat } => trunk(mode, m, omega_range, step, &out, u_hat, exec),
        Cmd::Continue {
            mode,
            m,
            from_omega,
            steps,
            ds,
            ds_max,
            omega_max,
            branches,
            branch_steps,
            events_out,
            points_out,
            u_hat,
        } => {
            let cfg = GalerkinConfig::for_mode(mode, m, m)?;
            let opts = ContinuationOptions {
                steps,
                ds0: ds,
                ds_max,
                omega_bounds: (mode as f64, omega_max.unwrap_or(1.6 * mode as f64)),
                exec,
                ..Default::default()
            };
            let newton = NewtonOptions { exec, ..Default::default() };
            let state = trunk_point(mode, &cfg, from_omega, None, &newton)?;
            if state.u_hat.amax() == 0.0 {
                return Err(Failure::Usage(format!("Omega = {from_omega} is below the trunk onset {mode}")));
            }
            let start = DiagramPoint::new(state, &cfg, 0.0, 0);
            let trunk = continue_branch(&start, &cfg, &opts)?;
            let mut walks: Vec<BranchWalk> = Vec::new();
            if branches {
                let sub = ContinuationOptions { steps: branch_steps, ..opts.clone() };
                let mut id = 1;
                for ev in trunk.events.iter().filter(|e| e.kind == EventKind::DetectedSingularity) {
                    let Ok((p0, t0)) = switch_branch(ev, &cfg, &sub) else {
                        eprintln!("note: no branch entered at Omega = {:.6}", ev.omega_est);
                        continue;
                    };
                    for dir in [1.0, -1.0] {
                        let mut p = p0.clone();
                        p.branch_id = id;
                        match continue_with_tangent(&p, Some(&t0 * dir), &cfg, &sub) {
                            Ok(mut w) => {
                                w.points.iter_mut().for_each(|q| q.branch_id = id);
                                w.events.iter_mut().for_each(|e| e.point.branch_id = id);
                                walks.push(w);
                            }
                            Err(e) => eprintln!("note: branch {id} stopped: {e}"),
                        }
                        id += 1;
                    }
                }
            }
            walks.insert(0, trunk);
            write_walks(&walks, &cfg, &points_out, &events_out, u_hat)
        }
        Cmd::Reducible { mode, m_max, n_max, out } => {
            if mode == 0 {
                return Err(Failure::Usage("mode must be positive".into()));
            }
            let rows: Vec<Vec<String>> = enumerate_branches(mode, m_max, n_max)
                .iter()
                .map(|b| {
                    let (lo, hi) = b.real_interval().unwrap_or((f64::NAN, f64::NAN));
                    vec![
                        b.m.to_string(),
                        b.n.to_string(),
                        float(b.omega_bif),
                        u8::from(b.special_case).to_string(),
                        float(lo),
                        float(hi),
                    ]
                })
                .collect();
            write_csv(&out, &["m", "n", "omega_bif", "special_case", "real_interval_lo", "real_interval_hi"], &rows)?;
            Ok(())
        }
    }
}

fn interactions(indices: &[[u32; 4]], check: bool, max: u32, tol: f64, out: Option<PathBuf>) -> Outcome {
    let mut rows = Vec::new();
    for &[j, k, l, m] in indices {
        if j.min(k).min(l).min(m) == 0 {
            return Err(Failure::Usage("indices start at 1".into()));
        }
        let s = s_coeff(j, k, l, m);
        println!("S({j},{k},{l},{m}) = {}", conformal::algebra::format_rational(&s));
        rows.push(vec![
            j.to_string(),
            k.to_string(),
            l.to_string(),
            m.to_string(),
            conformal::algebra::format_rational(&s),
            float(conformal::algebra::to_f64(&s)),
        ]);
    }
    if let Some(path) = out {
        write_csv(&path, &["j", "k", "l", "m", "exact", "value"], &rows)?;
    }
    if check {
        let mut worst = (0.0f64, [0; 4]);
        for j in 1..=max {
            for k in j..=max {
                for l in k..=max {
                    for m in l..=max {
                        let d = (conformal::algebra::to_f64(&s_coeff(j, k, l, m)) - s_quadrature_oracle(j, k, l, m)).abs();
                        if d > worst.0 {
                            worst = (d, [j, k, l, m]);
                        }
                    }
                }
            }
        }
        println!("max |S - quadrature| = {:.3e} at {:?}", worst.0, worst.1);
        if worst.0 > tol {
            return Err(Failure::Numeric(format!("oracle mismatch {:.3e} exceeds {tol:.1e}", worst.0)));
        }
    }
    Ok(())
}

fn duffing(eps_range: (f64, f64), count: usize, out: &std::path::Path) -> Outcome {
    if count < 2 || eps_range.0 < 0.0 {
        return Err(Failure::Usage("need count >= 2 and a nonnegative eps range".into()));
    }
    let rows: Vec<Vec<String>> = (0..count)
        .map(|i| {
            let e = eps_range.0 + (eps_range.1 - eps_range.0) * i as f64 / (count - 1) as f64;
            let d = DuffingSolution::new(e);
            vec![float(e), float(d.omega), float(d.energy)]
        })
        .collect();
    write_csv(out, &["eps", "Omega", "E"], &rows)?;
    Ok(())
}

fn series(mode: u32, order: usize, out: &std::path::Path, growth_out: Option<PathBuf>, exec: Exec) -> Outcome {
    let mut b = SeriesBuilder::new(mode, exec)?;
    for n in 1..=order {
        b.extend();
        eprintln!("order {n}/{order}");
    }
    let sol = b.into_solution();
    write_atomic(out, |w| write_archive(&sol, w).map_err(std::io::Error::other))?;
    if let Some(path) = growth_out {
        let mut rows = Vec::new();
        for (name, t) in [("omega_sq", SeriesTarget::Omega), ("a1", SeriesTarget::Coeff(1, mode))] {
            for (n, c) in coefficient_growth(&sol, t) {
                rows.push(vec![name.to_string(), n.to_string(), float(c)]);
            }
        }
        write_csv(&path, &["series", "n", "abs_coeff"], &rows)?;
    }
    Ok(())
}

fn pade_curve(
    sol: &conformal::lindstedt::SeriesSolution,
    (j, k): (u32, u32),
    n: usize,
    eps_range: (f64, f64),
    points: usize,
    radius: f64,
    path: &std::path::Path,
) -> Outcome {
    let a = coefficient_series(sol, j, k);
    let om = frequency_series(sol);
    let pa = build_pade(&a, n)?;
    let po = build_pade(&om, n)?;
    let mut poles = real_poles(&pa, eps_range);
    poles.extend(real_poles(&po, eps_range));
    let (pa, po) = (pa.evaluator(), po.evaluator());
    let truncate = |p: &conformal::algebra::EpsPolynomial| p.truncate(2 * n);
    let (at, ot) = (truncate(&a), truncate(&om));
    let mut rows = Vec::new();
    for i in 0..points.max(2) {
        let e = eps_range.0 + (eps_range.1 - eps_range.0) * i as f64 / (points.max(2) - 1) as f64;
        if radius > 0.0 && poles.iter().any(|&p| (p - e).abs() < radius) {
            continue;
        }
        let av = pa.eval(e).abs();
        let sa = at.eval(e).abs();
        rows.push(vec![
            float(e),
            float(av),
            float(av * e.sqrt()),
            float(po.eval(e)),
            float(sa * e.sqrt()),
            float(ot.eval(e)),
        ]);
    }
    write_csv(
        path,
        &["eps", "pade_abs_a", "pade_abs_a_times_sqrt_eps", "pade_Omega", "series_abs_a_times_sqrt_eps", "series_Omega"],
        &rows,
    )?;
    Ok(())
}

fn u_hat_header(cfg: &GalerkinConfig) -> Vec<String> {
    let mut h = Vec::new();
    for n in 0..cfg.m_x() {
        for m in 0..cfg.m_tau() {
            h.push(format!("u_{}_{}", 2 * m + 1, cfg.wavenumber(n)));
        }
    }
    h
}

fn u_hat_cells(s: &GalerkinState) -> impl Iterator<Item = String> + '_ {
    s.u_hat.iter().map(|&x| float(x))
}

fn trunk(
    mode: u32,
    m: usize,
    (lo, hi): (f64, f64),
    step: f64,
    out: &std::path::Path,
    with_u: bool,
    exec: Exec,
) -> Outcome {
    if !(step > 0.0) {
        return Err(Failure::Usage("step must be positive".into()));
    }
    let cfg = GalerkinConfig::for_mode(mode, m, m)?;
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let omegas: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    let opts = NewtonOptions { exec, ..Default::default() };
    let mut header: Vec<String> = ["Omega", "E", "residual_norm"].map(String::from).to_vec();
    if with_u {
        header.extend(u_hat_header(&cfg));
    }
    let mut rows = Vec::new();
    for (w, r) in trunk_sweep(mode, &cfg, &omegas, &opts) {
        match r {
            Ok(s) => {
                let mut row = vec![
                    float(w),
                    float(conformal::galerkin::energy(&s)),
                    float(conformal::galerkin::residual_norm(&s, &cfg)),
                ];
                if with_u {
                    row.extend(u_hat_cells(&s));
                }
                rows.push(row);
            }
            Err(e) => eprintln!("note: no trunk solution at Omega = {w}: {e}"),
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(out, &header, &rows)?;
    Ok(())
}

fn write_walks(
    walks: &[BranchWalk],
    cfg: &GalerkinConfig,
    points_out: &std::path::Path,
    events_out: &std::path::Path,
    with_u: bool,
) -> Outcome {
    let mut header: Vec<String> =
        ["branch_id", "arclength", "Omega", "E", "residual_norm", "tags"].map(String::from).to_vec();
    if with_u {
        header.extend(u_hat_header(cfg));
    }
    let mut rows = Vec::new();
    let mut events = Vec::new();
    for w in walks {
        for p in &w.points {
            let tags: Vec<&str> = p.tags.iter().map(|t| t.label()).collect();
            let mut row = vec![
                p.branch_id.to_string(),
                float(p.arclength),
                float(p.omega),
                float(p.energy),
                float(p.residual),
                tags.join("|"),
            ];
            if with_u {
                row.extend(u_hat_cells(&p.state));
            }
            rows.push(row);
        }
        for e in &w.events {
            events.push(vec![
                float(e.omega_est),
                e.kind.label().to_string(),
                format!("{}:{}", e.mode_hint.0, e.mode_hint.1),
                e.point.branch_id.to_string(),
                float(e.point.energy),
            ]);
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(points_out, &header, &rows)?;
    write_csv(events_out, &["omega_est", "kind", "mode_hint", "branch_id", "E"], &events)?;
    Ok(())
}
