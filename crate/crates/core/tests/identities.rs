mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use advection_dg::field::DgSpace;
use advection_dg::flow::{Domain, FlowProblem};
use advection_dg::mesh::{Grading, Mesh, TrianglePattern};
use advection_dg::operator::DgOperator;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn setup(variant: usize, p: usize, flow: Option<FlowProblem>) -> (Arc<DgSpace>, DgOperator, Arc<FlowProblem>) {
    let mesh = Arc::new(mesh_variant(variant));
    let flow = Arc::new(flow.unwrap_or_else(|| flow_for(&mesh)));
    let space = DgSpace::new(mesh, p).unwrap();
    let op = DgOperator::new(Arc::clone(&space), Arc::clone(&flow)).unwrap();
    (space, op, flow)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn green_identity(seed in any::<u64>(), variant in 0usize..4, p in 0usize..=4, t in 0.0..2.0f64) {
        let (space, _, flow) = setup(variant, p, None);
        let u = random_field(&space, &mut rng(seed));
        let lhs = volume_advection(&u, &flow, t);
        let rhs = green_rhs(&u, &flow, t);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn interior_faces_telescope(seed in any::<u64>(), variant in 0usize..4, p in 0usize..=4) {
        let (space, _, flow) = setup(variant, p, None);
        let u = random_field(&space, &mut rng(seed));
        let s = telescoping_sum(&u, &flow, 0.3);
        prop_assert!(s.abs() <= 1e-10, "{s}");
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), variant in 0usize..4, p in 0usize..=4) {
        let (space, _, _) = setup(variant, p, None);
        let u = random_field(&space, &mut rng(seed));
        let d = projection_defect(&u);
        prop_assert!(d <= 1e-12, "{d}");
    }

    #[test]
    fn energy_rate_decomposes_the_forms(seed in any::<u64>(), variant in 0usize..4, p in 0usize..=4, t in 0.0..2.0f64) {
        let (space, op, _) = setup(variant, p, None);
        let u = random_field(&space, &mut rng(seed));
        let d = energy_defect(&op, &u, t);
        prop_assert!(d <= 1e-10, "{d}");
    }

    #[test]
    fn forms_are_coercive_with_nonnegative_effective_reaction(
        seed in any::<u64>(), variant in 0usize..4, p in 0usize..=4, c in 0.0..2.0f64,
    ) {
        let mesh = mesh_variant(variant);
        // c - ½div a = c ≥ 0 after shifting the reaction by ½div a
        let base = flow_for(&mesh);
        let half_div = 0.5 * base.divergence(&[0.5, 0.5], 0.0);
        let flow = base.with_reaction(move |_, _| half_div + c);
        let (space, op, _) = setup(variant, p, Some(flow));
        let u = random_field(&space, &mut rng(seed));
        let form = op.apply_advection(&u, &u, 0.0).unwrap() + op.apply_reaction(&u, &u, 0.0).unwrap();
        prop_assert!(form >= -1e-10, "{form}");
    }

    #[test]
    fn projection_is_the_best_approximation(
        seed in any::<u64>(), variant in 0usize..4, p in 0usize..=3,
        k in prop::array::uniform3(-3.0..3.0f64),
    ) {
        let mesh = Arc::new(mesh_variant(variant));
        let space = DgSpace::with_exactness(mesh, p, 2 * p + 3).unwrap();
        let f = move |x: &[f64; 2]| (k[0] * x[0] + k[1] * x[1] + k[2]).sin() + x[0] * x[1];
        let pf = space.project(|x, _| f(x), 0.0);
        let best = volume_integral(&pf, |x, v| (f(x) - v).powi(2)).sqrt();
        let mut r = rng(seed);
        for _ in 0..20 {
            let mut w = random_field(&space, &mut r);
            w.scale(r.gen_range(1e-3..1.0));
            w.axpy(1.0, &pf).unwrap();
            let other = volume_integral(&w, |x, v| (f(x) - v).powi(2)).sqrt();
            prop_assert!(best <= other + 1e-10, "{best} > {other}");
        }
    }
}

/// `max |v|_{H¹(K)} h_K / ‖v‖_{L²(K)}` over elements and a fixed family of
/// reference polynomials.
fn inverse_constant(mesh: Mesh, p: usize, seed: u64) -> f64 {
    let space = DgSpace::with_exactness(Arc::new(mesh), p, 2 * p + 1).unwrap();
    let m = space.n_modes();
    let mut r = rng(seed);
    let family: Vec<Vec<f64>> = (0..20).map(|_| (0..m).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let mesh = Arc::clone(space.mesh());
    let mut worst = 0.0f64;
    for v in &family {
        let coeffs = (0..mesh.n_elements()).flat_map(|_| v.iter().copied()).collect();
        let u = advection_dg::field::DgField::from_coefficients(&space, coeffs, 0.0).unwrap();
        for k in 0..mesh.n_elements() {
            let g = mesh.geometry(k);
            let (mut h1, mut l2) = (0.0, 0.0);
            for (xi, w) in space.volume_rule().iter() {
                let d = u.gradient_at(k, xi);
                h1 += w * g.det * (d[0] * d[0] + d[1] * d[1]);
                l2 += w * g.det * u.value_at(k, xi).powi(2);
            }
            worst = worst.max(h1.sqrt() * g.diameter / l2.sqrt());
        }
    }
    worst
}

#[test]
fn inverse_inequality_constant_is_mesh_independent() {
    for p in 1..=4 {
        for dim in [1, 2] {
            let c: Vec<f64> = [2, 4, 8]
                .iter()
                .map(|&n| {
                    let mesh = if dim == 1 {
                        Mesh::interval(0.0, 1.0, n, Grading::Uniform).unwrap()
                    } else {
                        Mesh::rectangle(0.0, 0.0, 1.0, 1.0, n, n, TrianglePattern::Diagonal).unwrap()
                    };
                    inverse_constant(mesh, p, 11)
                })
                .collect();
            let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi / lo < 1.05, "p={p} dim={dim}: {c:?}");
        }
    }
}

/// `‖rhs(Π_h u) - Π_h(u_t)‖` for `u = sin(π(x - t))` transported at unit
/// speed, at `t = 0`.
fn consistency_defect(n: usize, p: usize) -> (f64, f64) {
    let flow = Arc::new(
        FlowProblem::new("unit", Domain::unit_interval(), |_, _| [1.0, 0.0])
            .with_divergence(|_, _| 0.0)
            .with_initial(|x| (PI * x[0]).sin())
            .with_inflow(|x, t| (PI * (x[0] - t)).sin()),
    );
    let mesh = Arc::new(Mesh::interval(0.0, 1.0, n, Grading::Uniform).unwrap());
    let h = mesh.h();
    let space = DgSpace::new(mesh, p).unwrap();
    let op = DgOperator::new(Arc::clone(&space), flow).unwrap();
    let u = space.project(|x, _| (PI * x[0]).sin(), 0.0);
    let mut r = op.rhs(&u, 0.0).unwrap();
    r.axpy(-1.0, &space.project(|x, _| -PI * (PI * x[0]).cos(), 0.0)).unwrap();
    (h, r.l2_norm())
}

#[test]
fn weak_residual_converges_at_rate_p() {
    for p in 1..=3 {
        let e: Vec<(f64, f64)> = [8, 16, 32, 64].iter().map(|&n| consistency_defect(n, p)).collect();
        for w in e.windows(2) {
            let rate = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
            assert!(rate >= p as f64 - 0.05, "p={p}: {e:?} rate {rate}");
        }
    }
}
