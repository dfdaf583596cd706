//! Run configuration for the experiment drivers.
//!
//! Files are TOML: `key = value` lines grouped under `[section]` headers.
//! Every key has a default, so an empty file is a valid (if dull) run.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::flow::{Domain, FlowProblem};
use crate::mesh::TrianglePattern;
use crate::time::Scheme;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub growth: GrowthConfig,
    pub mu: MuConfig,
    pub ellipticity: EllipticityConfig,
    pub pathline: PathlineConfig,
    pub assert: AssertConfig,
    pub run: RunSection,
}

/// A catalog problem by `name`, or an inline problem from expressions in
/// `x`, `y`, `t`. With a name, `reaction`, `initial` and `inflow` override the
/// catalog data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: Option<String>,
    /// `[lo, hi]` for an interval, `[x_lo, y_lo, x_hi, y_hi]` for a rectangle.
    pub domain: Option<Vec<f64>>,
    pub velocity: Option<Vec<String>>,
    pub divergence: Option<String>,
    pub reaction: Option<String>,
    pub initial: Option<String>,
    pub inflow: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Cells per axis, coarsest first.
    pub sizes: Vec<usize>,
    pub pattern: TrianglePattern,
    /// Ratio between consecutive cell widths (1 = uniform; 1D only).
    pub grading_ratio: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { sizes: vec![8, 16, 32, 64], pattern: TrianglePattern::Diagonal, grading_ratio: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub degrees: Vec<usize>,
    pub scheme: Scheme,
    pub cfl: f64,
    pub t_end: f64,
    /// Error samples are taken every this many initial CFL steps.
    pub sample_every: usize,
    /// Tolerance of the characteristic traces behind the exact solution.
    pub trace_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            degrees: vec![1],
            scheme: Scheme::Rk4,
            cfl: 0.2,
            t_end: 0.5,
            sample_every: 10,
            trace_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub degree: usize,
    pub n: usize,
    pub t_end: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { degree: 1, n: 32, t_end: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuConfig {
    pub gamma0: f64,
    pub t_max: f64,
    /// Grid for the sampled infimum of `c - div(a)/2`.
    pub n_space: usize,
    pub n_time: usize,
    /// Seeding density of the residence-time traces.
    pub n_residence: usize,
    pub tol: f64,
    /// Points per axis of the written `mu1` grid.
    pub grid: usize,
    pub n_pairs: usize,
}

impl Default for MuConfig {
    fn default() -> Self {
        MuConfig {
            gamma0: 0.5,
            t_max: 5.0,
            n_space: 64,
            n_time: 64,
            n_residence: 16,
            tol: 1e-8,
            grid: 64,
            n_pairs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticityConfig {
    pub n_space: usize,
    pub n_time: usize,
    pub t_max: f64,
    /// Rate of `mu = alpha t`; defaults to the pathline scale `lambda`.
    pub alpha_t: Option<f64>,
    /// Rate of `mu = alpha x` (1D); defaults to `lambda`.
    pub alpha_x: Option<f64>,
    /// Tolerance of the traces behind the pathline `mu`.
    pub tol: f64,
}

impl Default for EllipticityConfig {
    fn default() -> Self {
        EllipticityConfig { n_space: 50, n_time: 50, t_max: 5.0, alpha_t: None, alpha_x: None, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlineConfig {
    pub x: Vec<f64>,
    pub t: f64,
    pub tol: f64,
    /// Write the traced points.
    pub record: bool,
}

impl Default for PathlineConfig {
    fn default() -> Self {
        PathlineConfig { x: vec![0.5], t: 1.0, tol: 1e-8, record: true }
    }
}

/// Thresholds checked under `--assert`; unset entries are not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssertConfig {
    /// Every `L∞(L²)` order must reach this.
    pub min_order: Option<f64>,
    /// Every `L∞(L²)` order must reach `p + order_margin`.
    pub order_margin: Option<f64>,
    /// Ignore the order between the two coarsest meshes.
    pub skip_coarsest: bool,
    pub max_error: Option<f64>,
    pub max_ratio: Option<f64>,
    pub min_margin: Option<f64>,
    pub max_mu1_error: Option<f64>,
    pub residence_time: Option<f64>,
    pub residence_tol: f64,
}

impl Default for AssertConfig {
    fn default() -> Self {
        AssertConfig {
            min_order: None,
            order_margin: None,
            skip_coarsest: true,
            max_error: None,
            max_ratio: None,
            min_margin: None,
            max_mu1_error: None,
            residence_time: None,
            residence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub deterministic: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// The resolved configuration as `#`-prefixed comment lines.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for line in self.to_toml().lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.mesh.sizes.is_empty() || self.mesh.sizes.contains(&0) {
            return bad("mesh.sizes must be a non-empty list of positive integers".into());
        }
        if !(self.mesh.grading_ratio > 0.0) {
            return bad(format!("mesh.grading_ratio must be positive, got {}", self.mesh.grading_ratio));
        }
        let s = &self.solver;
        if s.degrees.is_empty() || s.degrees.iter().any(|&p| p > 4) {
            return bad("solver.degrees must be a non-empty list with entries in 0..=4".into());
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return bad(format!("solver.cfl must lie in (0, 1], got {}", s.cfl));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) || !(self.growth.t_end > 0.0 && self.growth.t_end.is_finite()) {
            return bad("end times must be finite and non-negative".into());
        }
        if s.sample_every == 0 || !(s.trace_tol > 0.0) {
            return bad("solver.sample_every and solver.trace_tol must be positive".into());
        }
        if self.growth.degree > 4 || self.growth.n == 0 {
            return bad("growth.degree must be in 0..=4 and growth.n positive".into());
        }
        let m = &self.mu;
        if !(m.gamma0 > 0.0) || !(m.t_max > 0.0) || !(m.tol > 0.0) {
            return bad("mu.gamma0, mu.t_max and mu.tol must be positive".into());
        }
        if m.n_space == 0 || m.n_time == 0 || m.n_residence == 0 || m.grid == 0 || m.n_pairs == 0 {
            return bad("mu sampling counts must be positive".into());
        }
        let e = &self.ellipticity;
        if e.n_space == 0 || e.n_time == 0 || !(e.t_max > 0.0) || !(e.tol > 0.0) {
            return bad("ellipticity sampling must be positive".into());
        }
        if !(self.pathline.tol > 0.0) || !(self.pathline.t >= 0.0) {
            return bad("pathline.tol must be positive and pathline.t non-negative".into());
        }
        Ok(())
    }
}

impl ProblemConfig {
    pub fn named(name: &str) -> Self {
        ProblemConfig { name: Some(name.to_string()), ..Default::default() }
    }

    /// Label used in summaries and file metadata.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "inline".into())
    }

    pub fn build(&self) -> Result<FlowProblem> {
        let mut problem = match &self.name {
            Some(name) => {
                if self.velocity.is_some() || self.domain.is_some() || self.divergence.is_some() {
                    return Err(Error::Config(
                        "catalog problems take only reaction/initial/inflow overrides".into(),
                    ));
                }
                catalog::problem(name)?
            }
            None => self.inline()?,
        };
        if let Some(src) = &self.reaction {
            let e = parse("reaction", src)?;
            problem = problem.with_reaction(move |x, t| e.eval(x[0], x[1], t));
        }
        if let Some(src) = &self.initial {
            let e = parse("initial", src)?;
            problem = problem.with_initial(move |x| e.eval(x[0], x[1], 0.0));
        }
        if let Some(src) = &self.inflow {
            let e = parse("inflow", src)?;
            problem = problem.with_inflow(move |x, t| e.eval(x[0], x[1], t));
        }
        check_corners(&problem)?;
        Ok(problem)
    }

    fn inline(&self) -> Result<FlowProblem> {
        let domain = match self.domain.as_deref() {
            Some(&[lo, hi]) if lo < hi => Domain::Interval { lo, hi },
            Some(&[x_lo, y_lo, x_hi, y_hi]) if x_lo < x_hi && y_lo < y_hi => {
                Domain::Rectangle { x_lo, y_lo, x_hi, y_hi }
            }
            Some(d) => return Err(Error::Config(format!("problem.domain must be [lo, hi] or [x_lo, y_lo, x_hi, y_hi], got {d:?}"))),
            None => return Err(Error::Config("inline problems need problem.domain".into())),
        };
        let velocity = self
            .velocity
            .as_ref()
            .ok_or_else(|| Error::Config("inline problems need problem.velocity".into()))?;
        if velocity.len() != domain.dim() {
            return Err(Error::Config(format!(
                "problem.velocity needs {} component(s), got {}",
                domain.dim(),
                velocity.len()
            )));
        }
        let comps: Vec<Expr> = velocity
            .iter()
            .enumerate()
            .map(|(i, s)| parse(&format!("velocity[{i}]"), s))
            .collect::<Result<_>>()?;
        let comps = Arc::new(comps);
        let mut problem = FlowProblem::new("inline", domain, move |x, t| {
            let ax = comps[0].eval(x[0], x[1], t);
            let ay = comps.get(1).map_or(0.0, |e| e.eval(x[0], x[1], t));
            [ax, ay]
        });
        if let Some(src) = &self.divergence {
            let e = parse("divergence", src)?;
            problem = problem.with_divergence(move |x, t| e.eval(x[0], x[1], t));
        } else {
            log::warn!("problem.divergence not given; using central differences of the velocity");
        }
        Ok(problem)
    }
}

fn parse(key: &str, src: &str) -> Result<Expr> {
    Expr::parse(src).map_err(|e| Error::Config(format!("problem.{key} = \"{src}\": {e}")))
}

/// Coefficients and data must evaluate to finite numbers at the domain corners.
fn check_corners(p: &FlowProblem) -> Result<()> {
    let corners: Vec<[f64; 2]> = match *p.domain() {
        Domain::Interval { lo, hi } => vec![[lo, 0.0], [hi, 0.0]],
        Domain::Rectangle { x_lo, y_lo, x_hi, y_hi } => {
            vec![[x_lo, y_lo], [x_hi, y_lo], [x_hi, y_hi], [x_lo, y_hi]]
        }
    };
    for x in &corners {
        let a = p.velocity(x, 0.0);
        let values = [a[0], a[1], p.reaction(x, 0.0), p.divergence(x, 0.0), p.initial_value(x), p.inflow_value(x, 0.0)];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "problem '{}' does not evaluate to finite values at corner {x:?}",
                p.name()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mesh.sizes, vec![8, 16, 32, 64]);
        assert_eq!(c.solver.scheme, Scheme::Rk4);
    }

    #[test]
    fn round_trip_through_echo() {
        let text = "[problem]\nname = \"stretch1d\"\n[solver]\ndegrees = [1, 2]\nscheme = \"ssprk3\"\n[assert]\norder_margin = 0.4\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.solver.degrees, vec![1, 2]);
        assert_eq!(c.solver.scheme, Scheme::Ssprk3);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(c.echo().lines().all(|l| l.starts_with('#')));
        assert!(c.echo().contains("name = \"stretch1d\""));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_toml("[mesh]\nsizes = []\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[solver]\ncfl = 2.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[solver]\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[solver]\ndegrees = [5]\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[solver\n"), Err(Error::Config(_))));
    }

    #[test]
    fn inline_problem() {
        let text = r#"
[problem]
domain = [0.0, 0.0, 1.0, 1.0]
velocity = ["0.5 - y", "x - 0.5"]
divergence = "0"
initial = "exp(-20*((x-0.3)^2 + (y-0.5)^2))"
"#;
        let c = RunConfig::from_toml(text).unwrap();
        let p = c.problem.build().unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.velocity(&[1.0, 0.0], 0.0), [0.5, 0.5]);
        assert!((p.initial_value(&[0.3, 0.5]) - 1.0).abs() < 1e-15);
        assert!(p.diagnose(5, &[0.0]).is_consistent());
    }

    #[test]
    fn catalog_with_override() {
        let mut pc = ProblemConfig::named("decay1d");
        pc.inflow = Some("0".into());
        let p = pc.build().unwrap();
        assert_eq!(p.inflow_value(&[0.0, 0.0], 0.3), 0.0);
        assert_eq!(p.reaction(&[0.5, 0.0], 0.0), 1.0);
        pc.velocity = Some(vec!["1".into()]);
        assert!(pc.build().is_err());
    }

    #[test]
    fn inline_errors() {
        let bad = |t: &str| toml::from_str::<RunConfig>(t).unwrap().problem.build();
        assert!(bad("[problem]\nvelocity = [\"1\"]\n").is_err());
        assert!(bad("[problem]\ndomain = [0.0, 1.0]\nvelocity = [\"1\", \"2\"]\n").is_err());
        assert!(bad("[problem]\ndomain = [0.0, 1.0]\nvelocity = [\"1 +\"]\n").is_err());
        assert!(bad("[problem]\ndomain = [0.0, 1.0]\nvelocity = [\"ln(x)\"]\n").is_err());
    }
}
