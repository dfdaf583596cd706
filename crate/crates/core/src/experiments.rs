//! Experiment drivers behind the command-line front end: convergence
//! studies, long-time error growth, `mu` field diagnostics, single pathline
//! traces and ellipticity margins. Each driver writes CSV tables (headed by
//! the resolved configuration as `#` comments) and returns a summary plus the
//! threshold checks requested in the `[assert]` section.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::catalog;
use crate::config::{MeshConfig, RunConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::field::DgSpace;
use crate::flow::{Domain, FlowProblem};
use crate::mesh::{Grading, Mesh, Point};
use crate::metrics::{eoc, face_norms, l2_error, ErrorSample, ErrorSeries, Order};
use crate::operator::DgOperator;
use crate::pathline::{
    build_mu, ellipticity_margin, exact_solution, lipschitz_estimates, residence_time, trace_backward,
    EllipticityMargin, LipschitzEstimates, LipschitzSampling, MarginSampling, MuField, MuSampling, PathlineOrigin,
    ResidenceTime, SpaceScaling, TimeScaling, TraceOptions, ZeroScaling,
};
use crate::time::{cfl_dt, evolve, uniform_samples, EvolveConfig};

/// One `--assert` threshold and whether it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

/// What a driver produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub checks: Vec<Check>,
    /// A numerical failure occurred but the driver still wrote its tables.
    pub numerical_failure: bool,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_table(dir: &Path, name: &str, cfg: &RunConfig, header: &str, rows: &[String]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = cfg.echo();
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(&path, text)?;
    Ok(path)
}

pub fn build_mesh(domain: &Domain, n: usize, mesh: &MeshConfig) -> Result<Mesh> {
    match *domain {
        Domain::Interval { lo, hi } => {
            let grading = if mesh.grading_ratio == 1.0 {
                Grading::Uniform
            } else {
                Grading::Geometric(mesh.grading_ratio)
            };
            Mesh::interval(lo, hi, n, grading)
        }
        Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => Mesh::rectangle(x_lo, y_lo, x_hi, y_hi, n, n, mesh.pattern),
    }
}

/// Solves on one mesh and records the error history against the
/// characteristic solution.
pub fn error_history(
    flow: Arc<FlowProblem>,
    mesh: Arc<Mesh>,
    degree: usize,
    solver: &SolverConfig,
    t_end: f64,
) -> Result<ErrorSeries> {
    let space = DgSpace::new(mesh, degree)?;
    let op = DgOperator::new(space, Arc::clone(&flow))?;
    let tol = solver.trace_tol;
    let exact = |x: &Point, t: f64| exact_solution(&flow, x, t, tol).unwrap_or(f64::NAN);
    let interval = solver.sample_every as f64 * cfl_dt(&op, solver.cfl, 0.0, f64::INFINITY);
    let config =
        EvolveConfig::new(solver.scheme, solver.cfl, t_end).with_samples(uniform_samples(interval, t_end));
    let mut series = ErrorSeries::new();
    evolve(&op, &config, |t, u| {
        let faces = face_norms(&op, u, Some(&exact), t)?;
        series.accumulate(ErrorSample {
            t,
            l2_error: l2_error(u, &exact, t)?,
            jump_sq: faces.jump_sq,
            boundary_sq: faces.boundary_sq,
            solution_l2: u.l2_norm(),
        })
    })?;
    Ok(series)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub p: usize,
    pub n: usize,
    pub h: f64,
    pub linf_l2: f64,
    pub l2_l2: f64,
    pub eoc_linf: Option<Order>,
    pub eoc_l2: Option<Order>,
    pub status: String,
}

/// Runs every `(degree, size)` pair (concurrently) to `solver.t_end` and
/// tabulates the `L∞(L²)` and `L²(L²)` errors with observed orders.
pub fn converge_table(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let flow = Arc::new(cfg.problem.build()?);
    let mut sizes = cfg.mesh.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let meshes: Vec<Arc<Mesh>> = sizes
        .iter()
        .map(|&n| build_mesh(flow.domain(), n, &cfg.mesh).map(Arc::new))
        .collect::<Result<_>>()?;
    let mut degrees = cfg.solver.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let jobs: Vec<(usize, usize)> = degrees.iter().flat_map(|&p| (0..sizes.len()).map(move |i| (p, i))).collect();

    let results: Vec<Result<ConvergenceRow>> = jobs
        .par_iter()
        .map(|&(p, i)| {
            let mesh = Arc::clone(&meshes[i]);
            let h = mesh.h();
            let row = |linf, l2, status: &str| ConvergenceRow {
                p,
                n: sizes[i],
                h,
                linf_l2: linf,
                l2_l2: l2,
                eoc_linf: None,
                eoc_l2: None,
                status: status.to_string(),
            };
            match error_history(Arc::clone(&flow), mesh, p, &cfg.solver, cfg.solver.t_end) {
                Ok(s) => Ok(row(s.linf_l2(), s.l2_l2(), "ok")),
                Err(Error::Instability { t, .. }) => {
                    log::error!("p = {p}, n = {}: unstable at t = {t}", sizes[i]);
                    Ok(row(f64::NAN, f64::NAN, "unstable"))
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = results.into_iter().collect::<Result<_>>()?;

    for p in degrees {
        let idx: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].p == p).collect();
        for w in idx.windows(2) {
            let (a, b) = (&rows[w[0]], &rows[w[1]]);
            if a.status == "unstable" || b.status == "unstable" {
                continue;
            }
            let linf = eoc(&[(a.h, a.linf_l2), (b.h, b.linf_l2)])?[0];
            let l2 = eoc(&[(a.h, a.l2_l2), (b.h, b.l2_l2)])?[0];
            let r = &mut rows[w[1]];
            r.eoc_linf = Some(linf);
            r.eoc_l2 = Some(l2);
            if linf.noise_floor {
                r.status = "noise_floor".into();
            }
        }
        if let Some(&first) = idx.first() {
            if rows[first].linf_l2 < crate::metrics::NOISE_FLOOR && rows[first].status == "ok" {
                rows[first].status = "noise_floor".into();
            }
        }
    }
    Ok(rows)
}

pub fn cmd_converge(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let rows = converge_table(cfg)?;
    let fmt_order = |o: Option<Order>| o.map_or(String::new(), |o| format!("{:.4}", o.order));
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.p,
                r.n,
                fmt_f(r.h),
                fmt_f(r.linf_l2),
                fmt_f(r.l2_l2),
                fmt_order(r.eoc_linf),
                fmt_order(r.eoc_l2),
                r.status
            )
        })
        .collect();
    let file = write_table(out, "converge.csv", cfg, "p,n,h,linf_l2,l2_l2,eoc_linf,eoc_l2,status", &lines)?;

    let mut summary = format!(
        "convergence study: {} to t = {}\n{:>2} {:>5} {:>12} {:>12} {:>8} {:>8}  status\n",
        cfg.problem.label(),
        cfg.solver.t_end,
        "p",
        "n",
        "Linf(L2)",
        "L2(L2)",
        "eoc",
        "eoc_L2"
    );
    for r in &rows {
        let _ = writeln!(
            summary,
            "{:>2} {:>5} {:>12.4e} {:>12.4e} {:>8} {:>8}  {}",
            r.p,
            r.n,
            r.linf_l2,
            r.l2_l2,
            fmt_order(r.eoc_linf),
            fmt_order(r.eoc_l2),
            r.status
        );
    }

    let a = &cfg.assert;
    let mut checks = Vec::new();
    let mut first_of_degree = std::collections::BTreeSet::new();
    for r in &rows {
        let Some(o) = r.eoc_linf else { continue };
        let coarsest_pair = first_of_degree.insert(r.p);
        if coarsest_pair && a.skip_coarsest {
            continue;
        }
        let mut floor = f64::NEG_INFINITY;
        if let Some(m) = a.min_order {
            floor = floor.max(m);
        }
        if let Some(m) = a.order_margin {
            floor = floor.max(r.p as f64 + m);
        }
        if floor > f64::NEG_INFINITY {
            checks.push(Check::new(
                "order",
                o.noise_floor || o.order >= floor,
                format!("p = {}, n = {}: order {:.4} (need >= {floor:.2})", r.p, r.n, o.order),
            ));
        }
    }
    if let Some(m) = a.max_error {
        let worst = rows.iter().map(|r| r.linf_l2).fold(0.0, f64::max);
        checks.push(Check::new("max_error", worst <= m, format!("largest Linf(L2) error {worst:.3e} (limit {m:e})")));
    }
    Ok(Outcome {
        files: vec![file],
        summary,
        checks,
        numerical_failure: rows.iter().any(|r| r.status == "unstable"),
    })
}

#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub series: ErrorSeries,
    /// `max ‖e‖` over the second half of the run divided by that over the first.
    pub ratio: f64,
    /// `exp(sup|c - div(a)/2| t_end / 2)`, the factor a Gronwall argument allows.
    pub gronwall_factor: f64,
    pub residence: ResidenceTime,
}

pub fn growth_report(cfg: &RunConfig) -> Result<GrowthReport> {
    let flow = Arc::new(cfg.problem.build()?);
    let g = &cfg.growth;
    let residence = residence_time(&flow, cfg.mu.t_max, cfg.mu.n_residence, cfg.mu.tol)?;
    if residence.possibly_unbounded {
        log::warn!("{}: residence time possibly unbounded; error growth is not expected to stay bounded", flow.name());
    }
    let mesh = Arc::new(build_mesh(flow.domain(), g.n, &cfg.mesh)?);
    let series = error_history(Arc::clone(&flow), mesh, g.degree, &cfg.solver, g.t_end)?;
    let half = 0.5 * g.t_end;
    let (mut early, mut late) = (0.0f64, 0.0f64);
    for s in series.samples() {
        if s.t <= half {
            early = early.max(s.l2_error);
        }
        if s.t >= half {
            late = late.max(s.l2_error);
        }
    }
    let times: Vec<f64> = (0..=16).map(|k| g.t_end * k as f64 / 16.0).collect();
    let sup = flow.diagnose(64, &times).max_abs_effective_reaction;
    Ok(GrowthReport {
        ratio: late / early,
        gronwall_factor: (sup * half).exp(),
        series,
        residence,
    })
}

fn series_rows(series: &ErrorSeries) -> Vec<String> {
    let mut out = Vec::with_capacity(series.samples().len());
    let mut acc = ErrorSeries::new();
    for s in series.samples() {
        // replaying gives the running accumulations at each sample
        let _ = acc.accumulate(*s);
        out.push(format!(
            "{},{},{},{},{},{},{}",
            fmt_f(s.t),
            fmt_f(s.l2_error),
            fmt_f(s.jump_sq),
            fmt_f(s.boundary_sq),
            fmt_f(acc.linf_l2()),
            fmt_f(acc.l2_l2()),
            fmt_f(acc.face_integral_sq())
        ));
    }
    out
}

pub const SERIES_HEADER: &str = "t,l2_error,jump_sq,boundary_sq,linf_l2,l2_l2,face_int";

pub fn cmd_growth(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let r = growth_report(cfg)?;
    let series_file = write_table(out, "growth.csv", cfg, SERIES_HEADER, &series_rows(&r.series))?;
    let summary_file = write_table(
        out,
        "growth_summary.csv",
        cfg,
        "ratio,gronwall_factor,linf_l2,residence_time,possibly_unbounded",
        &[format!(
            "{},{},{},{},{}",
            fmt_f(r.ratio),
            fmt_f(r.gronwall_factor),
            fmt_f(r.series.linf_l2()),
            fmt_f(r.residence.estimate),
            r.residence.possibly_unbounded
        )],
    )?;
    let summary = format!(
        "error growth: {} (p = {}, n = {}) to t = {}\n  late/early error ratio  {:.4}\n  Gronwall factor         {:.4e}\n  Linf(L2) error          {:.4e}\n  residence time          {:.6}{}\n",
        cfg.problem.label(),
        cfg.growth.degree,
        cfg.growth.n,
        cfg.growth.t_end,
        r.ratio,
        r.gronwall_factor,
        r.series.linf_l2(),
        r.residence.estimate,
        if r.residence.possibly_unbounded { " (possibly unbounded)" } else { "" }
    );
    let mut checks = Vec::new();
    if let Some(m) = cfg.assert.max_ratio {
        checks.push(Check::new("max_ratio", r.ratio <= m, format!("ratio {:.4} (limit {m})", r.ratio)));
    }
    if let Some(m) = cfg.assert.max_error {
        let e = r.series.linf_l2();
        checks.push(Check::new("max_error", e <= m, format!("Linf(L2) error {e:.3e} (limit {m:e})")));
    }
    Ok(Outcome { files: vec![series_file, summary_file], summary, checks, numerical_failure: false })
}

#[derive(Debug, Clone)]
pub struct MuReport {
    pub field: MuField,
    pub origins: Vec<PathlineOrigin>,
    pub margin: EllipticityMargin,
    pub lipschitz: LipschitzEstimates,
    /// Largest deviation from the closed form, for catalog flows that have one.
    pub mu1_error: Option<f64>,
}

fn mu_sampling(cfg: &RunConfig, tol: f64) -> MuSampling {
    MuSampling {
        n_space: cfg.mu.n_space,
        n_time: cfg.mu.n_time,
        t_max: cfg.mu.t_max,
        tol,
        n_residence: cfg.mu.n_residence,
    }
}

/// Cell-centred `(x, t)` grid with `n` points per axis over `Ω × (0, t_max)`.
pub fn space_time_grid(domain: &Domain, n: usize, t_max: f64) -> Vec<(Point, f64)> {
    let points = domain.interior_grid(n);
    (0..n)
        .flat_map(|j| {
            let t = t_max * (j as f64 + 0.5) / n as f64;
            points.iter().map(move |&x| (x, t))
        })
        .collect()
}

pub fn mu_report(cfg: &RunConfig) -> Result<MuReport> {
    let flow = Arc::new(cfg.problem.build()?);
    let field = build_mu(Arc::clone(&flow), cfg.mu.gamma0, &mu_sampling(cfg, cfg.mu.tol))?;
    let grid = space_time_grid(flow.domain(), cfg.mu.grid, cfg.mu.t_max);
    let opts = TraceOptions::with_tol(cfg.mu.tol);
    let origins: Vec<PathlineOrigin> =
        grid.par_iter().map(|(x, t)| trace_backward(&flow, x, *t, &opts)).collect::<Result<_>>()?;
    let mu1_error = cfg.problem.name.as_deref().and_then(catalog::analytic_mu1).map(|m| {
        origins.iter().map(|o| (o.mu1() - m(&o.x, o.t)).abs()).fold(0.0, f64::max)
    });

    let e = &cfg.ellipticity;
    let fine = build_mu(Arc::clone(&flow), cfg.mu.gamma0, &mu_sampling(cfg, e.tol))?;
    let margin = ellipticity_margin(
        &fine,
        &flow,
        &MarginSampling { n_space: e.n_space, n_time: e.n_time, t_max: e.t_max },
    )?;
    let lipschitz = lipschitz_estimates(
        &field,
        &LipschitzSampling { n_pairs: cfg.mu.n_pairs, seed: cfg.run.seed, ..LipschitzSampling::new(cfg.mu.t_max) },
    )?;
    Ok(MuReport { field, origins, margin, lipschitz, mu1_error })
}

pub fn cmd_mu(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let r = mu_report(cfg)?;
    let two_d = r.field.flow().dim() == 2;
    let header = if two_d { "x,y,t,mu1,kind,t0,x0,y0,status" } else { "x,t,mu1,kind,t0,x0,status" };
    let rows: Vec<String> = r
        .origins
        .iter()
        .map(|o| {
            let x = if two_d { format!("{},{}", fmt_f(o.x[0]), fmt_f(o.x[1])) } else { fmt_f(o.x[0]) };
            let x0 = if two_d { format!("{},{}", fmt_f(o.x0[0]), fmt_f(o.x0[1])) } else { fmt_f(o.x0[0]) };
            format!("{x},{},{},{},{},{x0},{}", fmt_f(o.t), fmt_f(o.mu1()), o.kind, fmt_f(o.t0), o.status)
        })
        .collect();
    let mu_file = write_table(out, "mu.csv", cfg, header, &rows)?;

    let res = r.field.residence();
    let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f);
    let entries = [
        ("lambda", fmt_f(r.field.lambda())),
        ("gamma0", fmt_f(r.field.gamma0())),
        ("min_effective_reaction", fmt_f(r.field.min_effective_reaction())),
        ("ellipticity_margin", fmt_f(r.margin.margin)),
        ("margin_excluded", r.margin.excluded.len().to_string()),
        ("l_space", fmt_f(r.lipschitz.l_space)),
        ("l_time", fmt_f(r.lipschitz.l_time)),
        ("lipschitz_pairs", r.lipschitz.space_pairs.to_string()),
        ("lipschitz_reliable", r.lipschitz.reliable.to_string()),
        ("inlet_a_min", opt(r.lipschitz.inlet_a_min)),
        ("residence_time", fmt_f(res.estimate)),
        ("possibly_unbounded", res.possibly_unbounded.to_string()),
        ("mu_max", fmt_f(r.field.mu_max())),
        ("mu1_error", opt(r.mu1_error)),
        ("divergence_approximate", r.field.flow().divergence_is_approximate().to_string()),
    ];
    let lines: Vec<String> = entries.iter().map(|(k, v)| format!("{k},{v}")).collect();
    let summary_file = write_table(out, "mu_summary.csv", cfg, "key,value", &lines)?;

    let mut summary = format!("mu diagnostics: {}\n", cfg.problem.label());
    for (k, v) in &entries {
        let _ = writeln!(summary, "  {k:<24} {v}");
    }
    let a = &cfg.assert;
    let mut checks = Vec::new();
    if let Some(m) = a.max_mu1_error {
        match r.mu1_error {
            Some(e) => checks.push(Check::new("max_mu1_error", e <= m, format!("mu1 error {e:.3e} (limit {m:e})"))),
            None => checks.push(Check::new("max_mu1_error", false, "no closed-form mu1 for this problem".into())),
        }
    }
    if let Some(expect) = a.residence_time {
        let d = (res.estimate - expect).abs();
        checks.push(Check::new(
            "residence_time",
            d <= a.residence_tol && !res.possibly_unbounded,
            format!("estimate {:.9} vs {expect:.9} (tol {:e})", res.estimate, a.residence_tol),
        ));
    }
    if let Some(m) = a.min_margin {
        checks.push(Check::new("min_margin", r.margin.margin >= m, format!("margin {:.6} (need >= {m})", r.margin.margin)));
    }
    Ok(Outcome { files: vec![mu_file, summary_file], summary, checks, numerical_failure: false })
}

pub fn cmd_pathline(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let flow = cfg.problem.build()?;
    let p = &cfg.pathline;
    if p.x.len() != flow.dim() {
        return Err(Error::Config(format!("pathline.x needs {} coordinate(s), got {}", flow.dim(), p.x.len())));
    }
    let x = [p.x[0], p.x.get(1).copied().unwrap_or(0.0)];
    let opts = TraceOptions { tol: p.tol, record_path: p.record, ..Default::default() };
    let o = trace_backward(&flow, &x, p.t, &opts)?;
    let mut files = Vec::new();
    if p.record {
        let two_d = flow.dim() == 2;
        let rows: Vec<String> = o
            .path
            .iter()
            .map(|(t, y)| {
                if two_d {
                    format!("{},{},{}", fmt_f(*t), fmt_f(y[0]), fmt_f(y[1]))
                } else {
                    format!("{},{}", fmt_f(*t), fmt_f(y[0]))
                }
            })
            .collect();
        files.push(write_table(out, "pathline.csv", cfg, if two_d { "t,x,y" } else { "t,x" }, &rows)?);
    }
    let coords = |v: &Point| if flow.dim() == 2 { format!("({}, {})", v[0], v[1]) } else { format!("{}", v[0]) };
    let summary = format!(
        "pathline through x = {}, t = {}\n  origin  x0 = {}, t0 = {}\n  kind    {}\n  mu1     {}\n  status  {}\n  steps   {}\n  points  {}\n",
        coords(&o.x),
        o.t,
        coords(&o.x0),
        o.t0,
        o.kind,
        o.mu1(),
        o.status,
        o.steps,
        o.path.len()
    );
    Ok(Outcome {
        files,
        summary,
        checks: Vec::new(),
        numerical_failure: o.status != crate::pathline::TraceStatus::Ok,
    })
}

/// Margins for `mu = 0`, `mu = alpha t`, `mu = alpha x` (1D) and the pathline
/// `mu`, paired with their rate parameters.
pub fn ellipticity_report(cfg: &RunConfig) -> Result<Vec<(f64, EllipticityMargin)>> {
    let flow = Arc::new(cfg.problem.build()?);
    let e = &cfg.ellipticity;
    let sampling = MarginSampling { n_space: e.n_space, n_time: e.n_time, t_max: e.t_max };
    let field = build_mu(Arc::clone(&flow), cfg.mu.gamma0, &mu_sampling(cfg, e.tol))?;
    let lambda = field.lambda();
    let alpha_t = e.alpha_t.unwrap_or(lambda);
    let alpha_x = e.alpha_x.unwrap_or(lambda);
    let mut out = vec![
        (0.0, ellipticity_margin(&ZeroScaling, &flow, &sampling)?),
        (alpha_t, ellipticity_margin(&TimeScaling { alpha: alpha_t }, &flow, &sampling)?),
    ];
    if flow.dim() == 1 {
        out.push((alpha_x, ellipticity_margin(&SpaceScaling { alpha: alpha_x }, &flow, &sampling)?));
    }
    out.push((lambda, ellipticity_margin(&field, &flow, &sampling)?));
    Ok(out)
}

pub fn cmd_ellipticity(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let margins = ellipticity_report(cfg)?;
    let two_d = cfg.problem.build()?.dim() == 2;
    let header = if two_d { "variant,scale,margin,x_min,y_min,t_min,excluded" } else { "variant,scale,margin,x_min,t_min,excluded" };
    let rows: Vec<String> = margins
        .iter()
        .map(|(scale, m)| {
            let (x, t) = m.location;
            let x = if two_d { format!("{},{}", fmt_f(x[0]), fmt_f(x[1])) } else { fmt_f(x[0]) };
            format!("{},{},{},{x},{},{}", m.label, fmt_f(*scale), fmt_f(m.margin), fmt_f(t), m.excluded.len())
        })
        .collect();
    let file = write_table(out, "ellipticity.csv", cfg, header, &rows)?;
    let mut summary = format!("ellipticity margins: {}\n", cfg.problem.label());
    for (scale, m) in &margins {
        let _ = writeln!(
            summary,
            "  {:<10} scale {:>9.4}  margin {:>10.6}  excluded {}",
            m.label,
            scale,
            m.margin,
            m.excluded.len()
        );
    }
    let mut checks = Vec::new();
    if let Some(min) = cfg.assert.min_margin {
        if let Some((_, m)) = margins.iter().find(|(_, m)| m.label == "pathline") {
            checks.push(Check::new("min_margin", m.margin >= min, format!("pathline margin {:.6} (need >= {min})", m.margin)));
        }
    }
    Ok(Outcome { files: vec![file], summary, checks, numerical_failure: false })
}
