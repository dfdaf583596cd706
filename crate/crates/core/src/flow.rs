//! Coefficients of the advection-reaction problem
//! `u_t + a·∇u + c u = 0` with inflow data `u_D` and initial data `u0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::Point;

pub type ScalarField = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&Point, f64) -> Point + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&Point, f64) -> [[f64; 2]; 2] + Send + Sync>;
pub type InitialData = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Spatial domain of a problem: an interval or an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rectangle { x_lo: f64, y_lo: f64, x_hi: f64, y_hi: f64 },
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle { x_lo: 0.0, y_lo: 0.0, x_hi: 1.0, y_hi: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => (x_hi - x_lo).hypot(y_hi - y_lo),
        }
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => (x[0] - x_lo)
                .min(x_hi - x[0])
                .min(x[1] - y_lo)
                .min(y_hi - x[1]),
        }
    }

    /// Moves `x` onto the nearest boundary piece (clamping first).
    pub fn snap_to_boundary(&self, x: &Point) -> Point {
        match *self {
            Domain::Interval { lo, hi } => {
                let v = if (x[0] - lo).abs() <= (hi - x[0]).abs() { lo } else { hi };
                [v, 0.0]
            }
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
                let mut p = [x[0].clamp(x_lo, x_hi), x[1].clamp(y_lo, y_hi)];
                let d = [p[0] - x_lo, x_hi - p[0], p[1] - y_lo, y_hi - p[1]];
                let (side, _) = d
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
                match side {
                    0 => p[0] = x_lo,
                    1 => p[0] = x_hi,
                    2 => p[1] = y_lo,
                    _ => p[1] = y_hi,
                }
                p
            }
        }
    }

    /// `n` evenly spaced points along each boundary piece paired with the
    /// outward normal there. Corners are excluded.
    pub fn boundary_samples(&self, n: usize) -> Vec<(Point, Point)> {
        match *self {
            Domain::Interval { lo, hi } => vec![([lo, 0.0], [-1.0, 0.0]), ([hi, 0.0], [1.0, 0.0])],
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
                let mut out = Vec::with_capacity(4 * n);
                for i in 0..n {
                    let s = (i as f64 + 0.5) / n as f64;
                    let x = x_lo + s * (x_hi - x_lo);
                    let y = y_lo + s * (y_hi - y_lo);
                    out.push(([x_lo, y], [-1.0, 0.0]));
                    out.push(([x_hi, y], [1.0, 0.0]));
                    out.push(([x, y_lo], [0.0, -1.0]));
                    out.push(([x, y_hi], [0.0, 1.0]));
                }
                out
            }
        }
    }

    /// Cell-centred grid with `n` points per axis, strictly inside the domain.
    pub fn interior_grid(&self, n: usize) -> Vec<Point> {
        let axis = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        match *self {
            Domain::Interval { lo, hi } => (0..n).map(|i| [axis(lo, hi, i), 0.0]).collect(),
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => (0..n)
                .flat_map(|j| (0..n).map(move |i| [axis(x_lo, x_hi, i), axis(y_lo, y_hi, j)]))
                .collect(),
        }
    }
}

/// The coefficient functions of a flow problem.
#[derive(Clone)]
pub struct FlowProblem {
    name: String,
    domain: Domain,
    velocity: VectorField,
    jacobian: Option<MatrixField>,
    divergence: Option<ScalarField>,
    reaction: ScalarField,
    inflow: ScalarField,
    initial: InitialData,
}

impl fmt::Debug for FlowProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("analytic_divergence", &self.divergence.is_some())
            .finish()
    }
}

impl FlowProblem {
    /// A problem with velocity `a`; reaction, inflow data and initial data
    /// default to zero.
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        velocity: impl Fn(&Point, f64) -> Point + Send + Sync + 'static,
    ) -> Self {
        FlowProblem {
            name: name.into(),
            domain,
            velocity: Arc::new(velocity),
            jacobian: None,
            divergence: None,
            reaction: Arc::new(|_, _| 0.0),
            inflow: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
        }
    }

    pub fn with_jacobian(mut self, f: impl Fn(&Point, f64) -> [[f64; 2]; 2] + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(f));
        self
    }

    pub fn with_divergence(mut self, f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.divergence = Some(Arc::new(f));
        self
    }

    pub fn with_reaction(mut self, f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.reaction = Arc::new(f);
        self
    }

    pub fn with_inflow(mut self, f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inflow = Arc::new(f);
        self
    }

    pub fn with_initial(mut self, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(f);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    #[inline]
    pub fn velocity(&self, x: &Point, t: f64) -> Point {
        let mut a = (self.velocity)(x, t);
        if self.dim() == 1 {
            a[1] = 0.0;
        }
        a
    }

    #[inline]
    pub fn reaction(&self, x: &Point, t: f64) -> f64 {
        (self.reaction)(x, t)
    }

    #[inline]
    pub fn inflow_value(&self, x: &Point, t: f64) -> f64 {
        (self.inflow)(x, t)
    }

    #[inline]
    pub fn initial_value(&self, x: &Point) -> f64 {
        (self.initial)(x)
    }

    /// True when `div a` comes from the finite-difference fallback.
    pub fn divergence_is_approximate(&self) -> bool {
        self.divergence.is_none() && self.jacobian.is_none()
    }

    fn fd_step(&self) -> f64 {
        1e-6 * self.domain.diameter()
    }

    /// `∇a` (rows are components of `a`), analytic when supplied, otherwise
    /// by central differences with step `1e-6·diam(Ω)`.
    pub fn jacobian(&self, x: &Point, t: f64) -> [[f64; 2]; 2] {
        if let Some(j) = &self.jacobian {
            return j(x, t);
        }
        let h = self.fd_step();
        let mut out = [[0.0; 2]; 2];
        for axis in 0..self.dim() {
            let mut xp = *x;
            let mut xm = *x;
            xp[axis] += h;
            xm[axis] -= h;
            let (ap, am) = (self.velocity(&xp, t), self.velocity(&xm, t));
            for comp in 0..self.dim() {
                out[comp][axis] = (ap[comp] - am[comp]) / (2.0 * h);
            }
        }
        out
    }

    pub fn divergence(&self, x: &Point, t: f64) -> f64 {
        if let Some(d) = &self.divergence {
            return d(x, t);
        }
        let j = self.jacobian(x, t);
        (0..self.dim()).map(|i| j[i][i]).sum()
    }

    /// `c - ½ div a`.
    pub fn effective_reaction(&self, x: &Point, t: f64) -> f64 {
        self.reaction(x, t) - 0.5 * self.divergence(x, t)
    }

    /// Samples the coefficients on an `n`-per-axis grid (plus domain corners)
    /// at the given times and reports the quantities the problem's standing
    /// hypotheses rest on.
    pub fn diagnose(&self, n: usize, times: &[f64]) -> FlowDiagnostics {
        let mut points = self.domain.interior_grid(n);
        match *self.domain() {
            Domain::Interval { lo, hi } => points.extend([[lo, 0.0], [hi, 0.0]]),
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
                points.extend([[x_lo, y_lo], [x_hi, y_lo], [x_hi, y_hi], [x_lo, y_hi]])
            }
        }
        let mut diag = FlowDiagnostics {
            lipschitz_estimate: 0.0,
            sup_velocity: 0.0,
            min_effective_reaction: f64::INFINITY,
            max_abs_effective_reaction: 0.0,
            divergence_mismatch: None,
            divergence_approximate: self.divergence_is_approximate(),
            all_finite: true,
        };
        let check_div = self.divergence.is_some() && self.jacobian.is_some();
        let mut mismatch: f64 = 0.0;
        for &t in times {
            for x in &points {
                let a = self.velocity(x, t);
                let j = self.jacobian(x, t);
                let c = self.reaction(x, t);
                let div = self.divergence(x, t);
                let values = [a[0], a[1], c, div, self.inflow_value(x, t), self.initial_value(x)];
                if values.iter().any(|v| !v.is_finite()) {
                    diag.all_finite = false;
                    continue;
                }
                let frob = j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                diag.lipschitz_estimate = diag.lipschitz_estimate.max(frob);
                diag.sup_velocity = diag.sup_velocity.max(a[0].hypot(a[1]));
                let eff = c - 0.5 * div;
                diag.min_effective_reaction = diag.min_effective_reaction.min(eff);
                diag.max_abs_effective_reaction = diag.max_abs_effective_reaction.max(eff.abs());
                if check_div {
                    let tr: f64 = (0..self.dim()).map(|i| j[i][i]).sum();
                    mismatch = mismatch.max((tr - div).abs());
                }
            }
        }
        if check_div {
            diag.divergence_mismatch = Some(mismatch);
        }
        diag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowDiagnostics {
    /// Sampled `max |∇a|` (Frobenius), an estimate of the Lipschitz constant of `a` in `x`.
    pub lipschitz_estimate: f64,
    pub sup_velocity: f64,
    pub min_effective_reaction: f64,
    pub max_abs_effective_reaction: f64,
    /// `max |div a - tr ∇a|` when both are analytic.
    pub divergence_mismatch: Option<f64>,
    pub divergence_approximate: bool,
    pub all_finite: bool,
}

impl FlowDiagnostics {
    /// Finite coefficients and, when checkable, `div a` consistent with `∇a` to 1e-10.
    pub fn is_consistent(&self) -> bool {
        self.all_finite && self.divergence_mismatch.is_none_or(|m| m <= 1e-10)
    }
}
