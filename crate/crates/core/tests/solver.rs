use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use advection_dg::catalog;
use advection_dg::field::{DgField, DgSpace};
use advection_dg::flow::{Domain, FlowProblem};
use advection_dg::mesh::{Grading, Mesh, Point};
use advection_dg::metrics::l2_error;
use advection_dg::operator::DgOperator;
use advection_dg::pathline::exact_solution;
use advection_dg::time::{evolve, uniform_samples, EvolveConfig, Scheme};

fn operator(flow: FlowProblem, n: usize, p: usize) -> DgOperator {
    let mesh = Arc::new(Mesh::interval(0.0, 1.0, n, Grading::Uniform).unwrap());
    DgOperator::new(DgSpace::new(mesh, p).unwrap(), Arc::new(flow)).unwrap()
}

fn run(op: &DgOperator, cfg: &EvolveConfig) -> DgField {
    evolve(op, cfg, |_, _| Ok(())).unwrap()
}

fn temporal_order(scheme: Scheme) -> f64 {
    let op = operator(catalog::problem("translate1d").unwrap(), 16, 2);
    let t_end = 0.25;
    let dt = 1.0 / 256.0;
    let at = |dt: f64| run(&op, &EvolveConfig::new(scheme, 0.2, t_end).with_fixed_dt(dt));
    let reference = at(dt / 8.0);
    let deviation = |dt: f64| {
        let mut u = at(dt);
        u.axpy(-1.0, &reference).unwrap();
        u.l2_norm()
    };
    (deviation(dt) / deviation(dt / 2.0)).log2()
}

#[test]
fn ssprk3_is_third_order_in_time() {
    let q = temporal_order(Scheme::Ssprk3);
    assert!((q - 3.0).abs() <= 0.4, "{q}");
}

#[test]
fn rk4_is_fourth_order_in_time() {
    let q = temporal_order(Scheme::Rk4);
    assert!((q - 4.0).abs() <= 0.4, "{q}");
}

#[test]
fn norm_decays_with_homogeneous_inflow() {
    let flow = catalog::problem("decay1d").unwrap().with_inflow(|_, _| 0.0);
    let op = operator(flow, 32, 2);
    let cfg = EvolveConfig::new(Scheme::Ssprk3, 0.2, 2.0).with_samples(uniform_samples(0.05, 2.0));
    let mut last = f64::INFINITY;
    evolve(&op, &cfg, |t, u| {
        let n = u.l2_norm();
        assert!(n <= last + 1e-8, "norm grew at t = {t}: {last} -> {n}");
        last = n;
        Ok(())
    })
    .unwrap();
}

fn centre_of_mass(u: &DgField) -> f64 {
    let mesh = u.space().mesh();
    let (mut m, mut mx) = (0.0, 0.0);
    for k in 0..mesh.n_elements() {
        let g = mesh.geometry(k);
        for (xi, w) in u.space().volume_rule().iter() {
            let v = w * g.det * u.value_at(k, xi);
            m += v;
            mx += v * g.to_physical(xi)[0];
        }
    }
    mx / m
}

#[test]
fn bump_translates_at_unit_speed() {
    let bump = |x: &Point| {
        let s = (x[0] - 0.3) / 0.1;
        if s.abs() < 1.0 {
            (0.5 * PI * s).cos().powi(2)
        } else {
            0.0
        }
    };
    let flow = FlowProblem::new("bump", Domain::unit_interval(), |_, _| [1.0, 0.0])
        .with_divergence(|_, _| 0.0)
        .with_initial(bump);
    let n = 64;
    let op = operator(flow, n, 1);
    let start = centre_of_mass(&op.space().project(|x, _| bump(x), 0.0));
    let end = centre_of_mass(&run(&op, &EvolveConfig::new(Scheme::Rk4, 0.2, 0.3)));
    let h = 1.0 / n as f64;
    assert!((end - start - 0.3).abs() <= 2.0 * h, "{start} -> {end}");
}

#[test]
fn stretching_flow_matches_characteristics() {
    let flow = catalog::problem("stretch1d").unwrap().with_initial(|x| (TAU * x[0]).cos());
    let reference = flow.clone();
    let op = operator(flow, 64, 2);
    let u = run(&op, &EvolveConfig::new(Scheme::Rk4, 0.2, 1.0));
    let exact = move |x: &Point, t: f64| exact_solution(&reference, x, t, 1e-10).unwrap();
    let e = l2_error(&u, &exact, 1.0).unwrap();
    assert!(e <= 1e-3, "{e}");
}

#[test]
fn translation_error_is_small_on_a_fine_mesh() {
    let op = operator(catalog::problem("translate1d").unwrap(), 64, 3);
    let u = run(&op, &EvolveConfig::new(Scheme::Rk4, 0.2, 0.5));
    let exact = catalog::analytic_solution("translate1d").unwrap();
    let e = l2_error(&u, &exact, 0.5).unwrap();
    assert!(e <= 1e-6, "{e}");
}
