//! Pathline tracing and the residence-time scaling function.
//!
//! A particle passing through `(x, t)` entered the space-time cylinder either
//! through the initial slice (`t0 = 0`) or through the inflow boundary at some
//! `t0 > 0`. The time it has spent in the domain, `mu1 = t - t0`, is the
//! building block for the weight `mu = lambda * mu1` that turns a negative
//! effective reaction `c - div(a)/2` into a coercive one.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{Domain, FlowProblem};
use crate::mesh::Point;

/// Default ODE tolerance (per unit step) for pathline traces.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on accepted + rejected steps per trace.
pub const DEFAULT_MAX_STEPS: usize = 200_000;
/// Inflow with `-a·n` below this fraction of `sup |a|` counts as tangential.
pub const TANGENTIAL_INFLOW: f64 = 0.05;
/// Exit points are located to this fraction of the domain diameter.
pub const BOUNDARY_TOL_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginKind {
    /// The particle was already in the domain at `t = 0`.
    Initial,
    /// The particle entered through the inflow boundary at `t0 > 0`.
    Inlet,
}

impl OriginKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OriginKind::Initial => "initial",
            OriginKind::Inlet => "inlet",
        }
    }
}

impl fmt::Display for OriginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Ok,
    /// The step budget ran out; the origin is the last point reached.
    MaxSteps,
    /// The exit bisection stalled before reaching the boundary tolerance.
    LeftDomainTolerance,
}

impl TraceStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceStatus::Ok => "ok",
            TraceStatus::MaxSteps => "max_steps",
            TraceStatus::LeftDomainTolerance => "left_domain_tolerance",
        }
    }
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMethod {
    /// Dormand–Prince 5(4) with step-size control.
    #[default]
    Adaptive,
    /// Classical RK4 with step `tol^(1/4) * diam`, for expensive flows.
    FixedRk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub method: TraceMethod,
    /// Keep every accepted point in [`PathlineOrigin::path`].
    pub record_path: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            tol: DEFAULT_TOL,
            max_steps: DEFAULT_MAX_STEPS,
            method: TraceMethod::Adaptive,
            record_path: false,
        }
    }
}

impl TraceOptions {
    pub fn with_tol(tol: f64) -> Self {
        TraceOptions { tol, ..Default::default() }
    }
}

/// Where the pathline through `(x, t)` started.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlineOrigin {
    pub x: Point,
    pub t: f64,
    pub x0: Point,
    pub t0: f64,
    pub kind: OriginKind,
    pub status: TraceStatus,
    /// `∫ c ds` along the pathline from `t0` to `t`.
    pub reaction_integral: f64,
    pub steps: usize,
    /// `(time, point)` pairs from `(x, t)` back to the origin, if recorded.
    pub path: Vec<(f64, Point)>,
}

impl PathlineOrigin {
    pub fn mu1(&self) -> f64 {
        self.t - self.t0
    }
}

/// End state of a forward trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub x: Point,
    pub t: f64,
    pub elapsed: f64,
    pub exited: bool,
    pub status: TraceStatus,
    pub steps: usize,
}

struct Outcome {
    state: [f64; 3],
    elapsed: f64,
    exited: bool,
    status: TraceStatus,
    steps: usize,
    path: Vec<(f64, Point)>,
}

/// Integrates `dX/ds = sign * a(X, t_start + sign * s)` together with
/// `dI/ds = c(X, t_start + sign * s)` for `s` in `[0, duration]`, stopping early
/// when `X` leaves the domain.
struct Tracer<'a> {
    flow: &'a FlowProblem,
    domain: Domain,
    t_start: f64,
    sign: f64,
    opts: &'a TraceOptions,
    boundary_tol: f64,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<'a> Tracer<'a> {
    fn new(flow: &'a FlowProblem, t_start: f64, sign: f64, opts: &'a TraceOptions) -> Self {
        let domain = *flow.domain();
        Tracer {
            flow,
            domain,
            t_start,
            sign,
            opts,
            boundary_tol: BOUNDARY_TOL_FACTOR * domain.diameter(),
        }
    }

    fn rhs(&self, s: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        let tau = self.t_start + self.sign * s;
        let x = [y[0], y[1]];
        let a = self.flow.velocity(&x, tau);
        let c = self.flow.reaction(&x, tau);
        if !(a[0].is_finite() && a[1].is_finite() && c.is_finite()) {
            return Err(Error::FlowEvaluation { x: x[0], y: x[1], t: tau });
        }
        Ok([self.sign * a[0], self.sign * a[1], c])
    }

    /// One step of length `h`; returns the new state and an error estimate
    /// (zero for the fixed-step method).
    fn step(&self, s: f64, y: &[f64; 3], h: f64) -> Result<([f64; 3], f64)> {
        match self.opts.method {
            TraceMethod::Adaptive => {
                let mut k = [[0.0; 3]; 7];
                for i in 0..7 {
                    let mut yi = *y;
                    for (j, kj) in k.iter().enumerate().take(i) {
                        for d in 0..3 {
                            yi[d] += h * A[i][j] * kj[d];
                        }
                    }
                    k[i] = self.rhs(s + C[i] * h, &yi)?;
                }
                let mut out = *y;
                let mut err: f64 = 0.0;
                for d in 0..3 {
                    let mut e = 0.0;
                    for i in 0..7 {
                        out[d] += h * B5[i] * k[i][d];
                        e += h * (B5[i] - B4[i]) * k[i][d];
                    }
                    err = err.max(e.abs());
                }
                Ok((out, err))
            }
            TraceMethod::FixedRk4 => {
                let add = |y: &[f64; 3], k: &[f64; 3], f: f64| [y[0] + f * k[0], y[1] + f * k[1], y[2] + f * k[2]];
                let k1 = self.rhs(s, y)?;
                let k2 = self.rhs(s + 0.5 * h, &add(y, &k1, 0.5 * h))?;
                let k3 = self.rhs(s + 0.5 * h, &add(y, &k2, 0.5 * h))?;
                let k4 = self.rhs(s + h, &add(y, &k3, h))?;
                let mut out = *y;
                for d in 0..3 {
                    out[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
                }
                Ok((out, 0.0))
            }
        }
    }

    fn distance(&self, y: &[f64; 3]) -> f64 {
        self.domain.signed_distance(&[y[0], y[1]])
    }

    /// True when `x` sits on the boundary and the traced direction points out.
    fn leaving_at(&self, s: f64, y: &[f64; 3]) -> Result<bool> {
        let x = [y[0], y[1]];
        if self.distance(y) > self.boundary_tol {
            return Ok(false);
        }
        let v = self.rhs(s, y)?;
        let speed = v[0].hypot(v[1]);
        let outward = |n: Point| v[0] * n[0] + v[1] * n[1] > 1e-14 * speed.max(1e-300);
        Ok(match self.domain {
            Domain::Interval { lo, hi } => {
                ((x[0] - lo).abs() <= self.boundary_tol && outward([-1.0, 0.0]))
                    || ((hi - x[0]).abs() <= self.boundary_tol && outward([1.0, 0.0]))
            }
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
                let bt = self.boundary_tol;
                ((x[0] - x_lo).abs() <= bt && outward([-1.0, 0.0]))
                    || ((x_hi - x[0]).abs() <= bt && outward([1.0, 0.0]))
                    || ((x[1] - y_lo).abs() <= bt && outward([0.0, -1.0]))
                    || ((y_hi - x[1]).abs() <= bt && outward([0.0, 1.0]))
            }
        })
    }

    fn initial_step(&self, y: &[f64; 3], remaining: f64) -> Result<f64> {
        let diam = self.domain.diameter();
        let h = match self.opts.method {
            TraceMethod::FixedRk4 => self.opts.tol.powf(0.25) * diam,
            TraceMethod::Adaptive => {
                let v = self.rhs(0.0, y)?;
                let speed = v[0].hypot(v[1]);
                0.01 * diam / speed.max(1e-3)
            }
        };
        Ok(h.min(remaining))
    }

    fn run(&self, x: Point, duration: f64) -> Result<Outcome> {
        let mut y = [x[0], x[1], 0.0];
        let mut s = 0.0;
        let mut steps = 0;
        let mut path = Vec::new();
        let record = |path: &mut Vec<(f64, Point)>, s: f64, y: &[f64; 3]| {
            if self.opts.record_path {
                path.push((self.t_start + self.sign * s, [y[0], y[1]]));
            }
        };
        record(&mut path, s, &y);
        let done = |state: [f64; 3], elapsed, exited, status, steps, path| Outcome {
            state,
            elapsed,
            exited,
            status,
            steps,
            path,
        };
        if duration <= 0.0 {
            return Ok(done(y, 0.0, false, TraceStatus::Ok, 0, path));
        }
        if self.leaving_at(0.0, &y)? {
            return Ok(done(y, 0.0, true, TraceStatus::Ok, 0, path));
        }
        let mut h = self.initial_step(&y, duration)?;
        let tol = self.opts.tol;
        loop {
            if steps >= self.opts.max_steps {
                return Ok(done(y, s, false, TraceStatus::MaxSteps, steps, path));
            }
            let remaining = duration - s;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let (trial, err) = self.step(s, &y, h)?;
            steps += 1;
            if self.opts.method == TraceMethod::Adaptive && err > tol * h {
                let factor = 0.9 * (tol * h / err).powf(0.25);
                h *= factor.clamp(0.1, 0.9);
                continue;
            }
            if self.distance(&trial) < -self.boundary_tol {
                let (sub, exit, status) = self.bisect_exit(s, &y, h)?;
                let mut exit = exit;
                let snapped = self.domain.snap_to_boundary(&[exit[0], exit[1]]);
                exit[0] = snapped[0];
                exit[1] = if self.domain.dim() == 1 { 0.0 } else { snapped[1] };
                record(&mut path, s + sub, &exit);
                return Ok(done(exit, s + sub, true, status, steps, path));
            }
            y = trial;
            s = if last { duration } else { s + h };
            record(&mut path, s, &y);
            if last {
                return Ok(done(y, duration, false, TraceStatus::Ok, steps, path));
            }
            if self.distance(&y) <= self.boundary_tol && self.leaving_at(s, &y)? {
                return Ok(done(y, s, true, TraceStatus::Ok, steps, path));
            }
            if self.opts.method == TraceMethod::Adaptive {
                let factor = if err == 0.0 { 5.0 } else { 0.9 * (tol * h / err).powf(0.25) };
                h *= factor.clamp(0.2, 5.0);
            }
        }
    }

    /// Finds a sub-step of `[0, h]` from `(s, y)` landing within the boundary
    /// tolerance. The full step is known to end outside.
    fn bisect_exit(&self, s: f64, y: &[f64; 3], h: f64) -> Result<(f64, [f64; 3], TraceStatus)> {
        if self.distance(y) <= self.boundary_tol {
            return Ok((0.0, *y, TraceStatus::Ok));
        }
        let (mut lo, mut hi) = (0.0, h);
        let mut inside = (0.0, *y);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (ym, _) = self.step(s, y, mid)?;
            let d = self.distance(&ym);
            if d.abs() <= self.boundary_tol {
                return Ok((mid, ym, TraceStatus::Ok));
            }
            if d > 0.0 {
                lo = mid;
                inside = (mid, ym);
            } else {
                hi = mid;
            }
        }
        Ok((inside.0, inside.1, TraceStatus::LeftDomainTolerance))
    }
}

fn check_start(flow: &FlowProblem, x: &Point, t: f64) -> Result<()> {
    let domain = flow.domain();
    if !(x[0].is_finite() && x[1].is_finite())
        || domain.signed_distance(x) < -BOUNDARY_TOL_FACTOR * domain.diameter()
    {
        return Err(Error::OutsideDomain { x: x[0], y: x[1] });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("trace time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Follows the pathline through `(x, t)` backward to where it entered.
pub fn trace_backward(flow: &FlowProblem, x: &Point, t: f64, opts: &TraceOptions) -> Result<PathlineOrigin> {
    check_start(flow, x, t)?;
    let tracer = Tracer::new(flow, t, -1.0, opts);
    let out = tracer.run(*x, t)?;
    let x0 = [out.state[0], out.state[1]];
    let (kind, t0) = if out.exited && out.elapsed < t {
        (OriginKind::Inlet, t - out.elapsed)
    } else if out.status == TraceStatus::MaxSteps {
        (OriginKind::Initial, t - out.elapsed)
    } else {
        (OriginKind::Initial, 0.0)
    };
    Ok(PathlineOrigin {
        x: *x,
        t,
        x0,
        t0,
        kind,
        status: out.status,
        reaction_integral: out.state[2],
        steps: out.steps,
        path: out.path,
    })
}

/// Follows the pathline from `(x0, t0)` forward for at most `duration`.
pub fn trace_forward(
    flow: &FlowProblem,
    x0: &Point,
    t0: f64,
    duration: f64,
    opts: &TraceOptions,
) -> Result<ForwardTrace> {
    check_start(flow, x0, t0)?;
    let tracer = Tracer::new(flow, t0, 1.0, opts);
    let out = tracer.run(*x0, duration)?;
    Ok(ForwardTrace {
        x: [out.state[0], out.state[1]],
        t: t0 + out.elapsed,
        elapsed: out.elapsed,
        exited: out.exited,
        status: out.status,
        steps: out.steps,
    })
}

/// Time the particle at `(x, t)` has spent inside the domain.
pub fn mu1(flow: &FlowProblem, x: &Point, t: f64, tol: f64) -> Result<f64> {
    Ok(trace_backward(flow, x, t, &TraceOptions::with_tol(tol))?.mu1())
}

/// Solution of the transport problem by characteristics: the data at the
/// pathline origin damped by `exp(-∫ c)`.
pub fn exact_solution(flow: &FlowProblem, x: &Point, t: f64, tol: f64) -> Result<f64> {
    let origin = trace_backward(flow, x, t, &TraceOptions::with_tol(tol))?;
    let data = match origin.kind {
        OriginKind::Initial => flow.initial_value(&origin.x0),
        OriginKind::Inlet => flow.inflow_value(&origin.x0, origin.t0),
    };
    Ok(data * (-origin.reaction_integral).exp())
}

/// Sampled estimate of the longest time any particle stays in the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidenceTime {
    pub estimate: f64,
    /// Some forward trace had not left the domain after `t_max`.
    pub possibly_unbounded: bool,
    pub t_max: f64,
    pub n_samples: usize,
    pub forward_traces: usize,
    pub backward_traces: usize,
    pub unexited: usize,
    /// Traces that hit the step budget or a stalled exit search.
    pub failed_traces: usize,
}

/// Estimates the residence time by seeding forward traces on the inflow
/// boundary (at `n_samples` seed times in `[0, t_max)`) and on the initial
/// slice, each followed for `t_max`, plus backward traces from an interior
/// space-time grid.
pub fn residence_time(flow: &FlowProblem, t_max: f64, n_samples: usize, tol: f64) -> Result<ResidenceTime> {
    if !(t_max.is_finite() && t_max > 0.0) || n_samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "residence time needs finite t_max > 0 and n_samples > 0 (got {t_max}, {n_samples})"
        )));
    }
    let domain = *flow.domain();
    let opts = TraceOptions::with_tol(tol);
    let seed_times: Vec<f64> = (0..n_samples).map(|k| t_max * k as f64 / n_samples as f64).collect();
    let mut forward: Vec<(Point, f64)> = Vec::new();
    for &(x, n) in &domain.boundary_samples(n_samples) {
        for &t in &seed_times {
            let a = flow.velocity(&x, t);
            if a[0] * n[0] + a[1] * n[1] < 0.0 {
                forward.push((x, t));
            }
        }
    }
    forward.extend(domain.interior_grid(n_samples).into_iter().map(|x| (x, 0.0)));

    let fwd: Vec<ForwardTrace> = forward
        .par_iter()
        .map(|(x, t)| trace_forward(flow, x, *t, t_max, &opts))
        .collect::<Result<_>>()?;

    let backward: Vec<(Point, f64)> = domain
        .interior_grid(n_samples)
        .into_iter()
        .flat_map(|x| (1..=n_samples).map(move |j| (x, t_max * j as f64 / n_samples as f64)))
        .collect();
    let bwd: Vec<PathlineOrigin> = backward
        .par_iter()
        .map(|(x, t)| trace_backward(flow, x, *t, &opts))
        .collect::<Result<_>>()?;

    let mut estimate: f64 = 0.0;
    let mut unexited = 0;
    let mut failed = 0;
    for tr in &fwd {
        estimate = estimate.max(tr.elapsed);
        if !tr.exited {
            unexited += 1;
        }
        if tr.status != TraceStatus::Ok {
            failed += 1;
        }
    }
    for o in &bwd {
        estimate = estimate.max(o.mu1());
        if o.status != TraceStatus::Ok {
            failed += 1;
        }
    }
    Ok(ResidenceTime {
        estimate,
        possibly_unbounded: unexited > 0,
        t_max,
        n_samples,
        forward_traces: fwd.len(),
        backward_traces: bwd.len(),
        unexited,
        failed_traces: failed,
    })
}

/// Space-time sampling used for infima, residence times and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSampling {
    pub n_space: usize,
    pub n_time: usize,
    pub t_max: f64,
    pub tol: f64,
    /// Seeding density for [`residence_time`].
    pub n_residence: usize,
}

impl MuSampling {
    pub fn new(t_max: f64) -> Self {
        MuSampling {
            n_space: 64,
            n_time: 64,
            t_max,
            tol: DEFAULT_TOL,
            n_residence: 16,
        }
    }

    /// Grid points of `Ω` (cell centres plus corners) and times `0..=t_max`.
    fn closed_grid(&self, domain: &Domain) -> (Vec<Point>, Vec<f64>) {
        let mut points = domain.interior_grid(self.n_space);
        match *domain {
            Domain::Interval { lo, hi } => points.extend([[lo, 0.0], [hi, 0.0]]),
            Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
                points.extend([[x_lo, y_lo], [x_hi, y_lo], [x_hi, y_hi], [x_lo, y_hi]])
            }
        }
        let nt = self.n_time.max(1);
        let times = (0..=nt).map(|j| self.t_max * j as f64 / nt as f64).collect();
        (points, times)
    }
}

/// The scaling `mu = lambda * mu1` with `lambda = |min(c - div(a)/2)^-| + gamma0`.
#[derive(Debug, Clone)]
pub struct MuField {
    flow: Arc<FlowProblem>,
    gamma0: f64,
    lambda: f64,
    min_effective_reaction: f64,
    sampling: MuSampling,
    residence: ResidenceTime,
}

pub fn build_mu(flow: Arc<FlowProblem>, gamma0: f64, sampling: &MuSampling) -> Result<MuField> {
    if !(gamma0.is_finite() && gamma0 > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma0 must be positive, got {gamma0}")));
    }
    let (points, times) = sampling.closed_grid(flow.domain());
    let mut min_eff = f64::INFINITY;
    for &t in &times {
        for x in &points {
            min_eff = min_eff.min(flow.effective_reaction(x, t));
        }
    }
    if !min_eff.is_finite() {
        return Err(Error::FlowEvaluation { x: f64::NAN, y: f64::NAN, t: f64::NAN });
    }
    let lambda = min_eff.min(0.0).abs() + gamma0;
    let residence = residence_time(&flow, sampling.t_max, sampling.n_residence, sampling.tol)?;
    if residence.possibly_unbounded {
        log::warn!(
            "{}: {} of {} forward traces still inside after t = {}; residence time possibly unbounded",
            flow.name(),
            residence.unexited,
            residence.forward_traces,
            sampling.t_max
        );
    }
    Ok(MuField {
        flow,
        gamma0,
        lambda,
        min_effective_reaction: min_eff,
        sampling: sampling.clone(),
        residence,
    })
}

impl MuField {
    pub fn flow(&self) -> &Arc<FlowProblem> {
        &self.flow
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Sampled minimum of `c - div(a)/2` that fixed `lambda`.
    pub fn min_effective_reaction(&self) -> f64 {
        self.min_effective_reaction
    }

    pub fn sampling(&self) -> &MuSampling {
        &self.sampling
    }

    pub fn residence(&self) -> &ResidenceTime {
        &self.residence
    }

    pub fn mu1(&self, x: &Point, t: f64) -> Result<f64> {
        mu1(&self.flow, x, t, self.sampling.tol)
    }

    pub fn mu(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(self.lambda * self.mu1(x, t)?)
    }

    /// Upper bound `lambda * T` implied by the residence time estimate.
    pub fn mu_max(&self) -> f64 {
        self.lambda * self.residence.estimate
    }
}

/// A weight `mu(x, t)` for the exponentially scaled energy argument.
pub trait Scaling: Sync {
    fn value(&self, x: &Point, t: f64) -> Result<f64>;

    fn label(&self) -> String;

    /// Divided differences whose magnitude exceeds this are treated as a
    /// discontinuity of `mu` and excluded from the margin.
    fn blowup_threshold(&self, _flow_lipschitz: f64) -> f64 {
        f64::INFINITY
    }
}

/// `mu ≡ 0`: the unscaled problem.
#[derive(Debug, Clone, Copy)]
pub struct ZeroScaling;

/// `mu = alpha * t`.
#[derive(Debug, Clone, Copy)]
pub struct TimeScaling {
    pub alpha: f64,
}

/// `mu = alpha * x` (1D).
#[derive(Debug, Clone, Copy)]
pub struct SpaceScaling {
    pub alpha: f64,
}

impl Scaling for ZeroScaling {
    fn value(&self, _x: &Point, _t: f64) -> Result<f64> {
        Ok(0.0)
    }

    fn label(&self) -> String {
        "zero".into()
    }
}

impl Scaling for TimeScaling {
    fn value(&self, _x: &Point, t: f64) -> Result<f64> {
        Ok(self.alpha * t)
    }

    fn label(&self) -> String {
        "alpha_t".into()
    }
}

impl Scaling for SpaceScaling {
    fn value(&self, x: &Point, _t: f64) -> Result<f64> {
        Ok(self.alpha * x[0])
    }

    fn label(&self) -> String {
        "alpha_x".into()
    }
}

impl Scaling for MuField {
    fn value(&self, x: &Point, t: f64) -> Result<f64> {
        self.mu(x, t)
    }

    fn label(&self) -> String {
        "pathline".into()
    }

    fn blowup_threshold(&self, flow_lipschitz: f64) -> f64 {
        10.0 * self.lambda * (1.0 + flow_lipschitz * self.residence.estimate)
    }
}

/// Cell-centred space-time grid strictly inside `Ω × (0, t_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginSampling {
    pub n_space: usize,
    pub n_time: usize,
    pub t_max: f64,
}

impl MarginSampling {
    pub fn samples(&self, domain: &Domain) -> Vec<(Point, f64)> {
        let points = domain.interior_grid(self.n_space);
        let mut out = Vec::with_capacity(points.len() * self.n_time);
        for j in 0..self.n_time {
            let t = self.t_max * (j as f64 + 0.5) / self.n_time as f64;
            out.extend(points.iter().map(|&x| (x, t)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityMargin {
    pub label: String,
    /// `min (mu_t + a·∇mu + c - div(a)/2)` over the retained samples.
    pub margin: f64,
    pub location: (Point, f64),
    pub n_samples: usize,
    pub excluded: Vec<(Point, f64)>,
}

/// Minimum over samples of `∂mu/∂t + a·∇mu + c - div(a)/2`, with `mu`
/// differentiated by central differences.
pub fn ellipticity_margin<S: Scaling + ?Sized>(
    mu: &S,
    flow: &FlowProblem,
    sampling: &MarginSampling,
) -> Result<EllipticityMargin> {
    let domain = flow.domain();
    let hx = 1e-5 * domain.diameter();
    let ht = 1e-5;
    let samples = sampling.samples(domain);
    let lip = flow.diagnose(8, &[0.0, 0.5 * sampling.t_max, sampling.t_max]).lipschitz_estimate;
    let threshold = mu.blowup_threshold(lip);
    let dim = flow.dim();

    let rows: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|(x, t)| {
            let mt = (mu.value(x, t + ht)? - mu.value(x, t - ht)?) / (2.0 * ht);
            let mut grad = [0.0; 2];
            for (d, g) in grad.iter_mut().enumerate().take(dim) {
                let mut xp = *x;
                let mut xm = *x;
                xp[d] += hx;
                xm[d] -= hx;
                *g = (mu.value(&xp, *t)? - mu.value(&xm, *t)?) / (2.0 * hx);
            }
            let a = flow.velocity(x, *t);
            let transport = a[0] * grad[0] + a[1] * grad[1];
            let blowup = mt.abs() + a[0].hypot(a[1]) * grad[0].hypot(grad[1]);
            Ok((mt + transport + flow.effective_reaction(x, *t), blowup > threshold))
        })
        .collect::<Result<_>>()?;

    let mut margin = f64::INFINITY;
    let mut location = ([f64::NAN; 2], f64::NAN);
    let mut excluded = Vec::new();
    for ((x, t), (value, blown)) in samples.iter().zip(&rows) {
        if *blown {
            excluded.push((*x, *t));
        } else if *value < margin {
            margin = *value;
            location = (*x, *t);
        }
    }
    if !excluded.is_empty() {
        log::warn!(
            "{} samples excluded as discontinuities of mu (tangential inflow or vortex touching the inlet?)",
            excluded.len()
        );
    }
    Ok(EllipticityMargin {
        label: mu.label(),
        margin,
        location,
        n_samples: samples.len(),
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSampling {
    pub n_pairs: usize,
    pub seed: u64,
    pub t_max: f64,
    /// Maximal pair separation as a fraction of the diameter (space) or of `t_max` (time).
    pub spacing: f64,
}

impl LipschitzSampling {
    pub fn new(t_max: f64) -> Self {
        LipschitzSampling { n_pairs: 2000, seed: 0x5eed, t_max, spacing: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimates {
    pub l_space: f64,
    pub l_time: f64,
    pub space_pairs: usize,
    pub time_pairs: usize,
    /// `min(-a·n)` over sampled inflow points, if any inflow was seen.
    pub inlet_a_min: Option<f64>,
    /// False when the inflow is nearly tangential somewhere.
    pub reliable: bool,
}

fn uniform_point(rng: &mut ChaCha8Rng, domain: &Domain) -> Point {
    match *domain {
        Domain::Interval { lo, hi } => [rng.gen_range(lo..hi), 0.0],
        Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => [rng.gen_range(x_lo..x_hi), rng.gen_range(y_lo..y_hi)],
    }
}

/// Difference-quotient estimates of the Lipschitz constants of `mu` in space
/// and time from seeded random pairs of nearby samples.
pub fn lipschitz_estimates(mu: &MuField, sampling: &LipschitzSampling) -> Result<LipschitzEstimates> {
    let flow = mu.flow();
    let domain = *flow.domain();
    let diam = domain.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut space_pairs = Vec::with_capacity(sampling.n_pairs);
    while space_pairs.len() < sampling.n_pairs {
        let x = uniform_point(&mut rng, &domain);
        let t = rng.gen_range(0.0..sampling.t_max);
        let r = rng.gen_range(0.0..sampling.spacing) * diam;
        let dir = if domain.dim() == 1 {
            [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0]
        } else {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            [th.cos(), th.sin()]
        };
        let y = [x[0] + r * dir[0], x[1] + r * dir[1]];
        if r > 0.0 && domain.signed_distance(&y) >= 0.0 {
            space_pairs.push((x, y, t));
        }
    }
    let mut time_pairs = Vec::with_capacity(sampling.n_pairs);
    while time_pairs.len() < sampling.n_pairs {
        let x = uniform_point(&mut rng, &domain);
        let t = rng.gen_range(0.0..sampling.t_max);
        let s = t + rng.gen_range(0.0..sampling.spacing) * sampling.t_max;
        if s > t && s <= sampling.t_max {
            time_pairs.push((x, t, s));
        }
    }

    let l_space = space_pairs
        .par_iter()
        .map(|(x, y, t)| {
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            Ok((mu.mu(x, *t)? - mu.mu(y, *t)?).abs() / d)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let l_time = time_pairs
        .par_iter()
        .map(|(x, t, s)| Ok((mu.mu(x, *t)? - mu.mu(x, *s)?).abs() / (s - t)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let (inlet_a_min, sup_speed) = inflow_speed(flow, mu.sampling());
    let reliable = inlet_a_min.is_none_or(|a| a >= TANGENTIAL_INFLOW * sup_speed);
    Ok(LipschitzEstimates {
        l_space,
        l_time,
        space_pairs: space_pairs.len(),
        time_pairs: time_pairs.len(),
        inlet_a_min,
        reliable,
    })
}

/// `min(-a·n)` over sampled inflow boundary points, and `sup |a|` there.
pub fn inflow_speed(flow: &FlowProblem, sampling: &MuSampling) -> (Option<f64>, f64) {
    let nt = sampling.n_time.max(1);
    let mut a_min: Option<f64> = None;
    let mut sup: f64 = 0.0;
    for j in 0..=nt {
        let t = sampling.t_max * j as f64 / nt as f64;
        for (x, n) in flow.domain().boundary_samples(sampling.n_space) {
            let a = flow.velocity(&x, t);
            sup = sup.max(a[0].hypot(a[1]));
            let an = a[0] * n[0] + a[1] * n[1];
            if an < 0.0 {
                a_min = Some(a_min.map_or(-an, |m| m.min(-an)));
            }
        }
    }
    (a_min, sup)
}
