//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use advection_dg::catalog;
use advection_dg::config::RunConfig;
use advection_dg::experiments::{converge_table, ellipticity_report, growth_report};
use advection_dg::field::DgSpace;
use advection_dg::mesh::{Grading, Mesh};
use advection_dg::operator::DgOperator;
use advection_dg::pathline::{mu1, residence_time};
use advection_dg::time::{evolve, uniform_samples, EvolveConfig, Scheme};
use common::*;

struct Verdict {
    passed: bool,
    detail: String,
}

fn config(name: &str) -> RunConfig {
    let path = format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn mu1_oracle() -> Verdict {
    let flow = catalog::problem("stretch1d").unwrap();
    let n = 64;
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let t = 5.0 * (j as f64 + 0.5) / n as f64;
            let m = mu1(&flow, &[x, 0.0], t, 1e-8).unwrap();
            worst = worst.max((m - t.min(x.ln_1p())).abs());
        }
    }
    Verdict { passed: worst <= 1e-6, detail: format!("max |mu1 - min(t, ln(1+x))| = {worst:.3e} (<= 1e-6)") }
}

fn residence_times() -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, expect) in [("stretch1d", 2f64.ln()), ("translate1d", 1.0)] {
        let flow = catalog::problem(name).unwrap();
        let r = residence_time(&flow, 5.0, 16, 1e-8).unwrap();
        let err = (r.estimate - expect).abs();
        passed &= err <= 1e-6 && !r.possibly_unbounded;
        parts.push(format!("{name} T = {:.10} (err {err:.1e})", r.estimate));
    }
    Verdict { passed, detail: parts.join(", ") }
}

/// EOCs of the `L∞(L²)` error, excluding the coarsest pair if asked.
fn orders(cfg: &RunConfig, skip_coarsest: bool) -> Vec<(usize, usize, f64)> {
    let rows = converge_table(cfg).unwrap();
    let mut out = Vec::new();
    for p in &cfg.solver.degrees {
        let mine: Vec<_> = rows.iter().filter(|r| r.p == *p && r.eoc_linf.is_some()).collect();
        for (i, r) in mine.iter().enumerate() {
            if i == 0 && skip_coarsest {
                continue;
            }
            out.push((r.p, r.n, r.eoc_linf.unwrap().order));
        }
    }
    out
}

fn spatial_convergence_1d() -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in ["converge_translate1d", "converge_stretch1d"] {
        let cfg = config(name);
        for (p, n, q) in orders(&cfg, true) {
            passed &= q >= p as f64 + 0.4;
            parts.push(format!("{} p={p} n={n}: {q:.3}", cfg.problem.name.as_deref().unwrap_or("?")));
        }
    }
    Verdict { passed, detail: format!("EOC >= p + 0.4; {}", parts.join(", ")) }
}

fn spatial_convergence_2d() -> Verdict {
    let cfg = config("converge_diag2d");
    let o = orders(&cfg, false);
    let passed = !o.is_empty() && o.iter().all(|&(_, _, q)| q >= 1.4);
    let list: Vec<String> = o.iter().map(|(_, n, q)| format!("n={n}: {q:.3}")).collect();
    Verdict { passed, detail: format!("EOC >= 1.4; {}", list.join(", ")) }
}

fn long_time_boundedness() -> Verdict {
    let r = growth_report(&config("growth_negdiv1d")).unwrap();
    Verdict {
        passed: r.ratio <= 2.0 && r.gronwall_factor > 2e5,
        detail: format!(
            "late/early max error ratio = {:.4} (<= 2), Gronwall factor = {:.3e} (> 2e5), T = {:.6}",
            r.ratio, r.gronwall_factor, r.residence.estimate
        ),
    }
}

fn discrete_stability() -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (p, n) in [(1, 32), (2, 16), (3, 8)] {
        let flow = Arc::new(catalog::problem("decay1d").unwrap().with_inflow(|_, _| 0.0));
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, n, Grading::Uniform).unwrap());
        let op = DgOperator::new(DgSpace::new(mesh, p).unwrap(), flow).unwrap();
        let cfg = EvolveConfig::new(Scheme::Rk4, 0.2, 10.0).with_samples(uniform_samples(0.05, 10.0));
        let (mut last, mut worst, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        evolve(&op, &cfg, |_, u| {
            let norm = u.l2_norm();
            if last.is_finite() {
                worst = worst.max(norm - last);
            }
            last = norm;
            count += 1;
            Ok(())
        })
        .unwrap();
        passed &= worst <= 1e-8;
        parts.push(format!("p={p} n={n}: max increase {worst:.2e} over {count} samples"));
    }
    Verdict { passed, detail: parts.join(", ") }
}

fn ellipticity_margins() -> Verdict {
    let report = ellipticity_report(&config("ellipticity_negdiv1d")).unwrap();
    let zero = &report[0].1;
    let path = &report.last().unwrap().1;
    Verdict {
        passed: path.margin >= 0.499 && (zero.margin + 0.5).abs() <= 1e-10,
        detail: format!(
            "pathline margin = {:.8} (>= 0.499, {} excluded), zero margin = {:.12} (-0.5 +- 1e-10), {} samples",
            path.margin,
            path.excluded.len(),
            zero.margin,
            path.n_samples
        ),
    }
}

fn structural_identities() -> Verdict {
    let n_fields = 50;
    let mut r = rng(0x1de7);
    let mut worst = [0.0f64; 4];
    for i in 0..n_fields {
        let mesh = Arc::new(mesh_variant(i));
        let flow = Arc::new(flow_for(&mesh));
        let p = i % 5;
        let space = DgSpace::new(mesh, p).unwrap();
        let op = DgOperator::new(Arc::clone(&space), Arc::clone(&flow)).unwrap();
        let u = random_field(&space, &mut r);
        let t = 0.37 * (i % 3) as f64;
        worst[0] = worst[0].max((volume_advection(&u, &flow, t) - green_rhs(&u, &flow, t)).abs());
        worst[1] = worst[1].max(telescoping_sum(&u, &flow, t).abs());
        worst[2] = worst[2].max(projection_defect(&u));
        worst[3] = worst[3].max(energy_defect(&op, &u, t));
    }
    let tol = [1e-10, 1e-10, 1e-12, 1e-10];
    let names = ["green", "telescoping", "projection", "energy"];
    let passed = worst.iter().zip(tol).all(|(w, t)| *w <= t);
    let parts: Vec<String> =
        names.iter().zip(worst).zip(tol).map(|((n, w), t)| format!("{n} {w:.1e} (<= {t:.0e})")).collect();
    Verdict { passed, detail: format!("{n_fields} fields each: {}", parts.join(", ")) }
}

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "mu1 oracle", Duration::from_secs(5), mu1_oracle),
        (2, "residence time", Duration::from_secs(5), residence_times),
        (3, "spatial convergence 1D", Duration::from_secs(120), spatial_convergence_1d),
        (4, "spatial convergence 2D", Duration::from_secs(180), spatial_convergence_2d),
        (5, "long-time boundedness", Duration::from_secs(120), long_time_boundedness),
        (6, "discrete stability", Duration::from_secs(120), discrete_stability),
        (7, "ellipticity margin", Duration::from_secs(120), ellipticity_margins),
        (8, "structural identities", Duration::from_secs(30), structural_identities),
    ];
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let passed = v.passed && took <= limit;
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{id}] {name}: {} [{:.2} s, limit {} s]",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
