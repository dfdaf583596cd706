//! Explicit method-of-lines time stepping for the semi-discrete DG system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DgField;
use crate::operator::DgOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Shu–Osher three-stage strong-stability-preserving Runge–Kutta.
    Ssprk3,
    /// Classical fourth-order Runge–Kutta.
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub scheme: Scheme,
    pub cfl: f64,
    pub t_end: f64,
    /// Output times in `[0, t_end]`, sorted ascending.
    pub sample_times: Vec<f64>,
    pub deterministic: bool,
    /// Overrides the CFL step (still shortened to land on sample times).
    pub fixed_dt: Option<f64>,
}

impl EvolveConfig {
    pub fn new(scheme: Scheme, cfl: f64, t_end: f64) -> Self {
        EvolveConfig {
            scheme,
            cfl,
            t_end,
            sample_times: Vec::new(),
            deterministic: true,
            fixed_dt: None,
        }
    }

    pub fn with_samples(mut self, sample_times: Vec<f64>) -> Self {
        self.sample_times = sample_times;
        self
    }

    pub fn with_fixed_dt(mut self, dt: f64) -> Self {
        self.fixed_dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be finite and non-negative, got {}", self.t_end)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
        }
        let mut prev = 0.0;
        for &s in &self.sample_times {
            if !(s >= prev && s <= self.t_end) {
                return Err(Error::Config(format!(
                    "sample times must be sorted within [0, {}]; offending value {s}",
                    self.t_end
                )));
            }
            prev = s;
        }
        Ok(())
    }
}

/// Evenly spaced sample times `interval, 2·interval, …` up to and including `t_end`.
pub fn uniform_samples(interval: f64, t_end: f64) -> Vec<f64> {
    if !(interval > 0.0) || t_end <= 0.0 {
        return vec![];
    }
    let n = (t_end / interval).floor() as usize;
    let mut out: Vec<f64> = (1..=n).map(|i| i as f64 * interval).filter(|&s| s < t_end).collect();
    out.push(t_end);
    out
}

/// `dt = cfl · min_K h_K / (‖a‖_{∞,K} (2p + 1))`. When the velocity vanishes on
/// every element the step is `remaining`.
pub fn cfl_dt(op: &DgOperator, cfl: f64, t: f64, remaining: f64) -> f64 {
    let mesh = op.space().mesh();
    let p = op.space().degree() as f64;
    let speeds = op.max_speed_per_element(t);
    let dt = speeds
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1e-300)
        .map(|(k, &s)| mesh.geometry(k).diameter / (s * (2.0 * p + 1.0)))
        .fold(f64::INFINITY, f64::min);
    if dt.is_finite() {
        cfl * dt
    } else {
        remaining
    }
}

fn combine(base: &DgField, terms: &[(f64, &DgField)]) -> DgField {
    let mut out = base.clone();
    for (alpha, f) in terms {
        for (o, v) in out.coefficients_mut().iter_mut().zip(f.coefficients()) {
            *o += alpha * v;
        }
    }
    out
}

/// One step of `du/dt = rhs(u, t)` from `t` to `t + dt`.
pub fn step(op: &DgOperator, u: &DgField, t: f64, dt: f64, scheme: Scheme) -> Result<DgField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let mut next = match scheme {
        Scheme::Ssprk3 => {
            let l0 = op.rhs(u, t)?;
            let u1 = combine(u, &[(dt, &l0)]);
            let l1 = op.rhs(&u1, t + dt)?;
            let mut u2 = combine(u, &[]);
            u2.scale(0.75);
            let u2 = combine(&u2, &[(0.25, &u1), (0.25 * dt, &l1)]);
            let l2 = op.rhs(&u2, t + 0.5 * dt)?;
            let mut u3 = u.clone();
            u3.scale(1.0 / 3.0);
            combine(&u3, &[(2.0 / 3.0, &u2), (2.0 / 3.0 * dt, &l2)])
        }
        Scheme::Rk4 => {
            let k1 = op.rhs(u, t)?;
            let k2 = op.rhs(&combine(u, &[(0.5 * dt, &k1)]), t + 0.5 * dt)?;
            let k3 = op.rhs(&combine(u, &[(0.5 * dt, &k2)]), t + 0.5 * dt)?;
            let k4 = op.rhs(&combine(u, &[(dt, &k3)]), t + dt)?;
            combine(
                u,
                &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
            )
        }
    };
    if !next.is_finite() {
        return Err(Error::Instability { t, dt });
    }
    next.set_time(t + dt);
    Ok(next)
}

/// Integrates from `u_h(0) = Π_h u⁰` to `t_end`, landing exactly on every
/// sample time. The observer sees `t = 0`, each sample time and `t_end`.
pub fn evolve<F>(op: &DgOperator, config: &EvolveConfig, mut observer: F) -> Result<DgField>
where
    F: FnMut(f64, &DgField) -> Result<()>,
{
    config.validate()?;
    let flow = op.flow();
    let mut u = op.space().project(|x, _| flow.initial_value(x), 0.0);
    observer(0.0, &u)?;

    let mut targets: Vec<f64> = config.sample_times.iter().copied().filter(|&s| s > 0.0).collect();
    if config.t_end > 0.0 {
        targets.push(config.t_end);
    }
    targets.dedup();

    let mut t = 0.0;
    for &target in &targets {
        while t < target {
            let remaining = target - t;
            let mut dt = match config.fixed_dt {
                Some(dt) => dt,
                None => cfl_dt(op, config.cfl, t, config.t_end - t),
            };
            let lands = dt >= remaining * (1.0 - 1e-12);
            if lands {
                dt = remaining;
            }
            u = step(op, &u, t, dt, config.scheme)?;
            t = if lands { target } else { t + dt };
            u.set_time(t);
        }
        observer(target, &u)?;
    }
    Ok(u)
}
