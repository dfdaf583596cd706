//! Error norms, their time accumulation and observed convergence orders.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{dot, DgField};
use crate::mesh::Point;
use crate::operator::DgOperator;
use crate::quadrature::make_quadrature;

/// Errors below this are indistinguishable from round-off in order estimates.
pub const NOISE_FLOOR: f64 = 1e-13;

/// An exact solution `(x, t) -> u`.
pub type Exact<'a> = &'a (dyn Fn(&Point, f64) -> f64 + Sync);

/// `‖u_h - exact‖_{L²(Ω)}` by quadrature of exactness `2p + 4`.
pub fn l2_error(u_h: &DgField, exact: Exact<'_>, t: f64) -> Result<f64> {
    let space = u_h.space();
    let mesh = space.mesh();
    let rule = make_quadrature(space.dim(), 2 * space.degree() + 4)?;
    let table = space.basis().tabulate(rule.points());
    let parts: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let g = mesh.geometry(k);
            let c = u_h.block(k);
            rule.points()
                .iter()
                .zip(rule.weights())
                .zip(&table.values)
                .map(|((xi, w), phi)| {
                    let e = dot(c, phi) - exact(&g.to_physical(xi), t);
                    w * e * e
                })
                .sum::<f64>()
                * g.det
        })
        .collect();
    let total: f64 = parts.iter().sum();
    if !total.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite L2 error at t = {t}")));
    }
    Ok(total.sqrt())
}

/// Squared `|a·n|`-weighted face norms of the error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaceNorms {
    /// `Σ |a·n| (u_L - u_R)²` over interior faces (the jump of the error
    /// equals minus the jump of `u_h` for a smooth exact solution).
    pub jump_sq: f64,
    /// `Σ |a·n| (exact - u_h)²` over boundary faces; `u_h²` without `exact`.
    pub boundary_sq: f64,
}

pub fn face_norms(op: &DgOperator, u_h: &DgField, exact: Option<Exact<'_>>, t: f64) -> Result<FaceNorms> {
    if !u_h.space().compatible(op.space()) {
        return Err(Error::MismatchedSpace);
    }
    let flow = op.flow();
    let mut out = FaceNorms::default();
    for face in op.face_quadrature() {
        for (q, x) in face.points.iter().enumerate() {
            let a = flow.velocity(x, t);
            let an = (a[0] * face.normal[0] + a[1] * face.normal[1]).abs();
            let ul = dot(u_h.block(face.left), &face.left_values[q]);
            match face.right {
                Some(r) => {
                    let ur = dot(u_h.block(r), &face.right_values[q]);
                    out.jump_sq += face.weights[q] * an * (ul - ur).powi(2);
                }
                None => {
                    let e = exact.map_or(0.0, |f| f(x, t)) - ul;
                    out.boundary_sq += face.weights[q] * an * e * e;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    pub l2_error: f64,
    pub jump_sq: f64,
    pub boundary_sq: f64,
    pub solution_l2: f64,
}

/// Time history of errors with running `L∞(L²)` and trapezoidal `L²(L²)`
/// and face-norm integrals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    samples: Vec<ErrorSample>,
    linf_l2: f64,
    l2_l2_sq: f64,
    face_integral_sq: f64,
}

impl ErrorSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, sample: ErrorSample) -> Result<()> {
        let values = [sample.t, sample.l2_error, sample.jump_sq, sample.boundary_sq, sample.solution_l2];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite error sample at t = {}", sample.t)));
        }
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(Error::NonMonotoneTime { t: sample.t, last: last.t });
            }
            let dt = sample.t - last.t;
            self.l2_l2_sq += 0.5 * dt * (last.l2_error.powi(2) + sample.l2_error.powi(2));
            self.face_integral_sq +=
                0.5 * dt * (last.jump_sq + last.boundary_sq + sample.jump_sq + sample.boundary_sq);
        }
        self.linf_l2 = self.linf_l2.max(sample.l2_error);
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[ErrorSample] {
        &self.samples
    }

    pub fn linf_l2(&self) -> f64 {
        self.linf_l2
    }

    pub fn l2_l2_sq(&self) -> f64 {
        self.l2_l2_sq
    }

    pub fn l2_l2(&self) -> f64 {
        self.l2_l2_sq.sqrt()
    }

    pub fn face_integral_sq(&self) -> f64 {
        self.face_integral_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub order: f64,
    /// Both errors were below [`NOISE_FLOOR`]; `order` is 0.
    pub noise_floor: bool,
}

/// Observed orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive
/// `(h, error)` pairs.
pub fn eoc(errors: &[(f64, f64)]) -> Result<Vec<Order>> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (h, error) pairs".into()));
    }
    errors
        .windows(2)
        .map(|w| {
            let ((h0, e0), (h1, e1)) = (w[0], w[1]);
            if !(h1 < h0 && h1 > 0.0) {
                return Err(Error::InvalidArgument(format!("h must decrease strictly: {h0} then {h1}")));
            }
            if e0 < NOISE_FLOOR && e1 < NOISE_FLOOR {
                return Ok(Order { order: 0.0, noise_floor: true });
            }
            let order = if e1 == 0.0 { f64::INFINITY } else { (e0 / e1).ln() / (h0 / h1).ln() };
            Ok(Order { order, noise_floor: false })
        })
        .collect()
}
