//! Named test problems with analytic coefficients and, where available,
//! closed-form solutions.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};
use crate::flow::{Domain, FlowProblem};
use crate::mesh::Point;

pub const NAMES: [&str; 5] = ["translate1d", "stretch1d", "decay1d", "diag2d", "negdiv1d"];

/// Closed-form solution `(x, t) -> u`.
pub type Analytic = fn(&Point, f64) -> f64;

pub fn problem(name: &str) -> Result<FlowProblem> {
    let interval = Domain::unit_interval();
    let p = match name {
        // u = sin(2π(x - t))
        "translate1d" => FlowProblem::new(name, interval, |_, _| [1.0, 0.0])
            .with_jacobian(|_, _| [[0.0; 2]; 2])
            .with_divergence(|_, _| 0.0)
            .with_initial(|x| (TAU * x[0]).sin())
            .with_inflow(|x, t| (TAU * (x[0] - t)).sin()),
        // u = sin(π((x + 1)e^{-t} - 1))
        "stretch1d" => FlowProblem::new(name, interval, |x, _| [x[0] + 1.0, 0.0])
            .with_jacobian(|_, _| [[1.0, 0.0], [0.0, 0.0]])
            .with_divergence(|_, _| 1.0)
            .with_initial(|x| (PI * x[0]).sin())
            .with_inflow(|x, t| (PI * ((x[0] + 1.0) * (-t).exp() - 1.0)).sin()),
        // u = e^{-t} sin(2π(x - t))
        "decay1d" => FlowProblem::new(name, interval, |_, _| [1.0, 0.0])
            .with_jacobian(|_, _| [[0.0; 2]; 2])
            .with_divergence(|_, _| 0.0)
            .with_reaction(|_, _| 1.0)
            .with_initial(|x| (TAU * x[0]).sin())
            .with_inflow(|x, t| (-t).exp() * (TAU * (x[0] - t)).sin()),
        // u = e^{0.3t} sin(π(x - t/√2)) sin(π(y - t/√2))
        "diag2d" => FlowProblem::new(name, Domain::unit_square(), |_, _| [FRAC_1_SQRT_2, FRAC_1_SQRT_2])
            .with_jacobian(|_, _| [[0.0; 2]; 2])
            .with_divergence(|_, _| 0.0)
            .with_reaction(|_, _| -0.3)
            .with_initial(|x| (PI * x[0]).sin() * (PI * x[1]).sin())
            .with_inflow(diag2d_solution),
        // u = sin(2π(t - ln(1 + x))), time-periodic inflow
        "negdiv1d" => FlowProblem::new(name, interval, |x, _| [x[0] + 1.0, 0.0])
            .with_jacobian(|_, _| [[1.0, 0.0], [0.0, 0.0]])
            .with_divergence(|_, _| 1.0)
            .with_initial(|x| (-TAU * x[0].ln_1p()).sin())
            .with_inflow(|x, t| (TAU * (t - x[0].ln_1p())).sin()),
        other => {
            return Err(Error::Config(format!(
                "unknown problem '{other}' (catalog: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

fn diag2d_solution(x: &Point, t: f64) -> f64 {
    let s = t * FRAC_1_SQRT_2;
    (0.3 * t).exp() * (PI * (x[0] - s)).sin() * (PI * (x[1] - s)).sin()
}

pub fn analytic_solution(name: &str) -> Option<Analytic> {
    Some(match name {
        "translate1d" => |x, t| (TAU * (x[0] - t)).sin(),
        "stretch1d" => |x, t| (PI * ((x[0] + 1.0) * (-t).exp() - 1.0)).sin(),
        "decay1d" => |x, t| (-t).exp() * (TAU * (x[0] - t)).sin(),
        "diag2d" => diag2d_solution,
        "negdiv1d" => |x, t| (TAU * (t - x[0].ln_1p())).sin(),
        _ => return None,
    })
}

/// Closed-form time-in-domain `t - t0` for the 1D catalog flows.
pub fn analytic_mu1(name: &str) -> Option<Analytic> {
    Some(match name {
        "translate1d" | "decay1d" => |x, t| t.min(x[0]),
        "stretch1d" | "negdiv1d" => |x, t| t.min(x[0].ln_1p()),
        _ => return None,
    })
}

/// Closed-form residence time of the catalog flows.
pub fn analytic_residence_time(name: &str) -> Option<f64> {
    match name {
        "translate1d" | "decay1d" => Some(1.0),
        "stretch1d" | "negdiv1d" => Some(2f64.ln()),
        // longest chord along (1,1) is the diagonal, length √2 at unit speed
        "diag2d" => Some(2f64.sqrt()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_is_consistent() {
        for name in NAMES {
            let p = problem(name).unwrap();
            assert_eq!(p.name(), name);
            let d = p.diagnose(9, &[0.0, 0.7, 3.0]);
            assert!(d.is_consistent(), "{name}: {d:?}");
        }
        assert!(problem("nope").is_err());
    }

    /// The closed forms satisfy `u_t + a·∇u + c u = 0` and match the data.
    #[test]
    fn analytic_solutions_solve_the_equation() {
        let h = 1e-5;
        for name in NAMES {
            let p = problem(name).unwrap();
            let u = analytic_solution(name).unwrap();
            for &(x, y, t) in &[(0.3, 0.4, 0.2), (0.8, 0.1, 1.3), (0.05, 0.9, 2.0)] {
                let pt = if p.dim() == 1 { [x, 0.0] } else { [x, y] };
                let a = p.velocity(&pt, t);
                let ut = (u(&pt, t + h) - u(&pt, t - h)) / (2.0 * h);
                let ux = (u(&[pt[0] + h, pt[1]], t) - u(&[pt[0] - h, pt[1]], t)) / (2.0 * h);
                let uy = (u(&[pt[0], pt[1] + h], t) - u(&[pt[0], pt[1] - h], t)) / (2.0 * h);
                let r = ut + a[0] * ux + a[1] * uy + p.reaction(&pt, t) * u(&pt, t);
                assert!(r.abs() < 1e-7, "{name} at {pt:?},{t}: {r}");
                assert!((p.inflow_value(&pt, t) - u(&pt, t)).abs() < 1e-14, "{name}");
                assert!((p.initial_value(&pt) - u(&pt, 0.0)).abs() < 1e-14, "{name}");
            }
        }
    }
}
