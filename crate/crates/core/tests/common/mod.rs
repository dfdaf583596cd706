//! Helpers shared by the property suites and the acceptance runner. Every
//! quantity here is computed directly from the mesh, the basis and fresh
//! quadrature rules, independently of the operator's precomputed tables.

#![allow(dead_code)]

use std::sync::Arc;

use advection_dg::field::{DgField, DgSpace};
use advection_dg::flow::{Domain, FlowProblem};
use advection_dg::mesh::{FaceSide, Grading, Mesh, Point, TrianglePattern};
use advection_dg::operator::DgOperator;
use advection_dg::quadrature::make_quadrature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Affine, divergence-carrying velocity fields (polynomial, so all
/// identities below hold to round-off with exact quadrature).
pub fn affine_flow_1d() -> FlowProblem {
    FlowProblem::new("affine1d", Domain::unit_interval(), |x, _| [x[0] + 1.0, 0.0])
        .with_divergence(|_, _| 1.0)
        .with_jacobian(|_, _| [[1.0, 0.0], [0.0, 0.0]])
}

pub fn affine_flow_2d() -> FlowProblem {
    FlowProblem::new("affine2d", Domain::unit_square(), |x, _| [1.0 + 0.5 * x[0] - x[1], 0.3 + x[0] + 0.25 * x[1]])
        .with_divergence(|_, _| 0.75)
        .with_jacobian(|_, _| [[0.5, -1.0], [1.0, 0.25]])
}

/// A mesh from a small family: graded/uniform intervals and both triangle
/// patterns.
pub fn mesh_variant(i: usize) -> Mesh {
    match i % 4 {
        0 => Mesh::interval(0.0, 1.0, 5, Grading::Uniform).unwrap(),
        1 => Mesh::interval(0.0, 1.0, 6, Grading::Geometric(1.4)).unwrap(),
        2 => Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 3, 2, TrianglePattern::Diagonal).unwrap(),
        _ => Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 2, 2, TrianglePattern::Crisscross).unwrap(),
    }
}

pub fn flow_for(mesh: &Mesh) -> FlowProblem {
    if mesh.dim() == 1 {
        affine_flow_1d()
    } else {
        affine_flow_2d()
    }
}

pub fn random_field(space: &Arc<DgSpace>, rng: &mut ChaCha8Rng) -> DgField {
    let coeffs = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DgField::from_coefficients(space, coeffs, 0.0).unwrap()
}

/// `Σ_K ∫_K (a·∇u) u` by a volume rule of exactness `2p + 3`.
pub fn volume_advection(u: &DgField, flow: &FlowProblem, t: f64) -> f64 {
    let space = u.space();
    let mesh = space.mesh();
    let rule = make_quadrature(mesh.dim(), 2 * space.degree() + 3).unwrap();
    (0..mesh.n_elements())
        .map(|k| {
            let g = mesh.geometry(k);
            rule.iter()
                .map(|(xi, w)| {
                    let x = g.to_physical(xi);
                    let a = flow.velocity(&x, t);
                    let du = u.gradient_at(k, xi);
                    w * g.det * (a[0] * du[0] + a[1] * du[1]) * u.value_at(k, xi)
                })
                .sum::<f64>()
        })
        .sum()
}

/// `∫ f(x, u(x)) dx` over `Ω` with a rule of exactness `2p + 3`.
pub fn volume_integral(u: &DgField, f: impl Fn(&Point, f64) -> f64) -> f64 {
    let space = u.space();
    let mesh = space.mesh();
    let rule = make_quadrature(mesh.dim(), 2 * space.degree() + 3).unwrap();
    (0..mesh.n_elements())
        .map(|k| {
            let g = mesh.geometry(k);
            rule.iter().map(|(xi, w)| w * g.det * f(&g.to_physical(xi), u.value_at(k, xi))).sum::<f64>()
        })
        .sum()
}

/// Quadrature on face `f`: physical points and weights (exactness `e`).
pub fn face_rule(mesh: &Mesh, f: usize, exactness: usize) -> Vec<(Point, f64)> {
    let face = &mesh.faces()[f];
    if mesh.dim() == 1 {
        return vec![(mesh.face_point(f, 0.0), 1.0)];
    }
    let r = make_quadrature(1, exactness).unwrap();
    r.iter().map(|(s, w)| (mesh.face_point(f, s[0]), w * face.measure)).collect()
}

/// Value of `u` restricted to element `k` at physical point `x`.
pub fn trace(u: &DgField, k: usize, x: &Point) -> f64 {
    let g = u.space().mesh().geometry(k);
    u.value_at(k, &g.to_reference(x))
}

/// Right side of the elementwise Green identity:
/// `-½ ∫ div a u² + ½ Σ_K ∫_{∂K} (a·n) u²`.
pub fn green_rhs(u: &DgField, flow: &FlowProblem, t: f64) -> f64 {
    let mesh = u.space().mesh();
    let p = u.space().degree();
    let volume = -0.5 * volume_integral(u, |x, v| flow.divergence(x, t) * v * v);
    let mut faces = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        for (x, w) in face_rule(mesh, f, 2 * p + 3) {
            let a = flow.velocity(&x, t);
            let an = a[0] * face.normal[0] + a[1] * face.normal[1];
            faces += 0.5 * w * an * trace(u, face.left, &x).powi(2);
            if let Some(r) = face.right() {
                faces -= 0.5 * w * an * trace(u, r, &x).powi(2);
            }
        }
    }
    volume + faces
}

/// `Σ_K ∫_{∂K⁺\∂Ω} (a·n) u² + Σ_K ∫_{∂K⁻\∂Ω} (a·n) (u⁻)²` with the inflow
/// side decided per point from each element's own normal.
pub fn telescoping_sum(u: &DgField, flow: &FlowProblem, t: f64) -> f64 {
    let mesh = u.space().mesh();
    let p = u.space().degree();
    let mut sum = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        let Some(r) = face.right() else { continue };
        for (x, w) in face_rule(mesh, f, 2 * p + 3) {
            let a = flow.velocity(&x, t);
            let an_left = a[0] * face.normal[0] + a[1] * face.normal[1];
            let (ul, ur) = (trace(u, face.left, &x), trace(u, r, &x));
            for (an, own, other) in [(an_left, ul, ur), (-an_left, ur, ul)] {
                sum += w * an
                    * match FaceSide::classify(an) {
                        FaceSide::Outflow => own * own,
                        FaceSide::Inflow => other * other,
                    };
            }
        }
    }
    sum
}

/// Index of an element containing `x` (first match).
pub fn locate(mesh: &Mesh, x: &Point) -> usize {
    (0..mesh.n_elements())
        .find(|&k| {
            let xi = mesh.geometry(k).to_reference(x);
            let eps = 1e-12;
            if mesh.dim() == 1 {
                xi[0] >= -eps && xi[0] <= 1.0 + eps
            } else {
                xi[0] >= -eps && xi[1] >= -eps && xi[0] + xi[1] <= 1.0 + eps
            }
        })
        .expect("point outside mesh")
}

/// Evaluates `u` at a physical point.
pub fn evaluate_anywhere(u: &DgField, x: &Point) -> f64 {
    let k = locate(u.space().mesh(), x);
    trace(u, k, x)
}

/// Max coefficient deviation of `Π_h(u) - u`.
pub fn projection_defect(u: &DgField) -> f64 {
    let space = u.space();
    let mesh = Arc::clone(space.mesh());
    // Interior quadrature points of the projection fall in a unique element;
    // evaluating by location exercises the projection as a black box.
    let again = space.project(|x, _| trace(u, locate(&mesh, x), x), 0.0);
    again
        .coefficients()
        .iter()
        .zip(u.coefficients())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `|(volume + jumps + boundary) - (b_h(u,u) + c_h(u,u))|`.
pub fn energy_defect(op: &DgOperator, u: &DgField, t: f64) -> f64 {
    let rate = op.energy_rate(u, t).unwrap();
    let direct = op.apply_advection(u, u, t).unwrap() + op.apply_reaction(u, u, t).unwrap();
    (rate.volume + rate.jumps + rate.boundary - direct).abs()
}
