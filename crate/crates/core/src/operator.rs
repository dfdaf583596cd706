//! Semi-discrete upwind DG operator.
//!
//! For test functions `φ` in `S_h` the operator evaluates the advection form
//!
//! ```text
//! b_h(u, φ) = Σ_K ∫_K (a·∇u) φ − Σ_K ∫_{∂K⁻\∂Ω} (a·n)[u] φ − Σ_K ∫_{∂K⁻∩∂Ω} (a·n) u φ
//! ```
//!
//! the reaction form `c_h(u, φ) = ∫ c u φ` and the inflow source
//! `l_h(φ) = −Σ_K ∫_{∂K⁻∩∂Ω} (a·n) u_D φ`, with `[u] = u − u⁻` and the sign of
//! `a·n` decided at every face quadrature point.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{dot, DgField, DgSpace};
use crate::flow::FlowProblem;
use crate::mesh::{FaceSide, Point};
use crate::quadrature::make_quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorOptions {
    pub volume_exactness: usize,
    pub face_exactness: usize,
}

impl OperatorOptions {
    pub fn for_degree(p: usize) -> Self {
        OperatorOptions {
            volume_exactness: 2 * p + 2,
            face_exactness: 2 * p + 2,
        }
    }
}

/// Volume quadrature of one element in physical form.
#[derive(Debug, Clone)]
pub struct ElementQuadrature {
    pub points: Vec<Point>,
    /// Reference weight times `|det J|`.
    pub weights: Vec<f64>,
    /// `values[q][m]`
    pub values: Vec<Vec<f64>>,
    /// Physical gradients, `grads[q][m]`.
    pub grads: Vec<Vec<Point>>,
}

/// Quadrature on one face with traces of both neighbours.
#[derive(Debug, Clone)]
pub struct FaceQuadrature {
    pub left: usize,
    pub right: Option<usize>,
    /// Outward normal of `left`.
    pub normal: Point,
    pub points: Vec<Point>,
    /// Reference weight times face measure.
    pub weights: Vec<f64>,
    pub left_values: Vec<Vec<f64>>,
    pub right_values: Vec<Vec<f64>>,
}

impl FaceQuadrature {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// The three addends of `b_h(u,u) + c_h(u,u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRate {
    /// `∫ (c − ½ div a) u²`
    pub volume: f64,
    /// `½ Σ_K ‖[u]‖²_{a,∂K⁻\∂Ω}`
    pub jumps: f64,
    /// `½ Σ_K ‖u‖²_{a,∂K∩∂Ω}`
    pub boundary: f64,
}

impl EnergyRate {
    pub fn total(&self) -> f64 {
        self.volume + self.jumps + self.boundary
    }
}

/// Precomputed geometry and basis tables for applying the DG forms on one
/// space. Coefficients are evaluated on every application since they may
/// depend on time.
#[derive(Debug)]
pub struct DgOperator {
    space: Arc<DgSpace>,
    flow: Arc<FlowProblem>,
    options: OperatorOptions,
    elements: Vec<ElementQuadrature>,
    faces: Vec<FaceQuadrature>,
}

impl DgOperator {
    pub fn new(space: Arc<DgSpace>, flow: Arc<FlowProblem>) -> Result<Self> {
        let options = OperatorOptions::for_degree(space.degree());
        Self::with_options(space, flow, options)
    }

    pub fn with_options(space: Arc<DgSpace>, flow: Arc<FlowProblem>, options: OperatorOptions) -> Result<Self> {
        let mesh = Arc::clone(space.mesh());
        if flow.dim() != mesh.dim() {
            return Err(Error::InvalidArgument(format!(
                "flow problem is {}D but mesh is {}D",
                flow.dim(),
                mesh.dim()
            )));
        }
        let basis = space.basis();
        let vol = make_quadrature(mesh.dim(), options.volume_exactness)?;
        let table = basis.tabulate(vol.points());
        let elements = (0..mesh.n_elements())
            .map(|k| {
                let g = mesh.geometry(k);
                ElementQuadrature {
                    points: vol.points().iter().map(|xi| g.to_physical(xi)).collect(),
                    weights: vol.weights().iter().map(|w| w * g.det).collect(),
                    values: table.values.clone(),
                    grads: table
                        .grads
                        .iter()
                        .map(|row| row.iter().map(|gr| g.physical_gradient(gr)).collect())
                        .collect(),
                }
            })
            .collect();

        let (face_s, face_w): (Vec<f64>, Vec<f64>) = if mesh.dim() == 1 {
            (vec![0.0], vec![1.0])
        } else {
            let r = make_quadrature(1, options.face_exactness)?;
            (r.points().iter().map(|p| p[0]).collect(), r.weights().to_vec())
        };
        let faces = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(f, face)| {
                let points: Vec<Point> = face_s.iter().map(|&s| mesh.face_point(f, s)).collect();
                let trace = |k: usize| -> Vec<Vec<f64>> {
                    let g = mesh.geometry(k);
                    points.iter().map(|x| basis.values(&g.to_reference(x))).collect()
                };
                FaceQuadrature {
                    left: face.left,
                    right: face.right(),
                    normal: face.normal,
                    weights: face_w.iter().map(|w| w * face.measure).collect(),
                    left_values: trace(face.left),
                    right_values: face.right().map(trace).unwrap_or_default(),
                    points,
                }
            })
            .collect();
        Ok(DgOperator {
            space,
            flow,
            options,
            elements,
            faces,
        })
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn flow(&self) -> &Arc<FlowProblem> {
        &self.flow
    }

    pub fn options(&self) -> OperatorOptions {
        self.options
    }

    pub fn element_quadrature(&self) -> &[ElementQuadrature] {
        &self.elements
    }

    pub fn face_quadrature(&self) -> &[FaceQuadrature] {
        &self.faces
    }

    fn check(&self, u: &DgField) -> Result<()> {
        if self.space.compatible(u.space()) {
            Ok(())
        } else {
            Err(Error::MismatchedSpace)
        }
    }

    fn a_dot_n(&self, face: &FaceQuadrature, x: &Point, t: f64) -> f64 {
        let a = self.flow.velocity(x, t);
        a[0] * face.normal[0] + a[1] * face.normal[1]
    }

    /// Accumulates `b_h(u, φ_i)` for every basis function `φ_i` into `out`.
    fn advection_residual(&self, u: &DgField, t: f64, out: &mut [f64]) {
        let nm = self.space.n_modes();
        for (k, eq) in self.elements.iter().enumerate() {
            let c = u.block(k);
            let r = &mut out[k * nm..(k + 1) * nm];
            for q in 0..eq.points.len() {
                let a = self.flow.velocity(&eq.points[q], t);
                let mut grad = [0.0, 0.0];
                for (cm, g) in c.iter().zip(&eq.grads[q]) {
                    grad[0] += cm * g[0];
                    grad[1] += cm * g[1];
                }
                let s = eq.weights[q] * (a[0] * grad[0] + a[1] * grad[1]);
                for (ri, phi) in r.iter_mut().zip(&eq.values[q]) {
                    *ri += s * phi;
                }
            }
        }
        for face in &self.faces {
            let l = face.left;
            for q in 0..face.points.len() {
                let an = self.a_dot_n(face, &face.points[q], t);
                let ul = dot(u.block(l), &face.left_values[q]);
                let w = face.weights[q];
                match face.right {
                    Some(r) => {
                        let ur = dot(u.block(r), &face.right_values[q]);
                        match FaceSide::classify(an) {
                            // inflow for the left element
                            FaceSide::Inflow => {
                                let s = -w * an * (ul - ur);
                                axpy_block(&mut out[l * nm..(l + 1) * nm], s, &face.left_values[q]);
                            }
                            // inflow for the right element when an > 0 (a·n_right < 0)
                            FaceSide::Outflow if an > 0.0 => {
                                let s = w * an * (ur - ul);
                                axpy_block(&mut out[r * nm..(r + 1) * nm], s, &face.right_values[q]);
                            }
                            FaceSide::Outflow => {}
                        }
                    }
                    None => {
                        if FaceSide::classify(an) == FaceSide::Inflow {
                            let s = -w * an * ul;
                            axpy_block(&mut out[l * nm..(l + 1) * nm], s, &face.left_values[q]);
                        }
                    }
                }
            }
        }
    }

    fn reaction_residual(&self, u: &DgField, t: f64, out: &mut [f64]) {
        let nm = self.space.n_modes();
        for (k, eq) in self.elements.iter().enumerate() {
            let c = u.block(k);
            let r = &mut out[k * nm..(k + 1) * nm];
            for q in 0..eq.points.len() {
                let s = eq.weights[q] * self.flow.reaction(&eq.points[q], t) * dot(c, &eq.values[q]);
                axpy_block(r, s, &eq.values[q]);
            }
        }
    }

    fn source_vector(&self, t: f64, out: &mut [f64]) {
        let nm = self.space.n_modes();
        for face in self.faces.iter().filter(|f| f.is_boundary()) {
            let l = face.left;
            for q in 0..face.points.len() {
                let x = &face.points[q];
                let an = self.a_dot_n(face, x, t);
                if FaceSide::classify(an) == FaceSide::Inflow {
                    let s = -face.weights[q] * an * self.flow.inflow_value(x, t);
                    axpy_block(&mut out[l * nm..(l + 1) * nm], s, &face.left_values[q]);
                }
            }
        }
    }

    /// `b_h(u, v)`
    pub fn apply_advection(&self, u: &DgField, v: &DgField, t: f64) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let mut r = vec![0.0; self.space.n_dofs()];
        self.advection_residual(u, t, &mut r);
        Ok(dot(&r, v.coefficients()))
    }

    /// `c_h(u, v)`
    pub fn apply_reaction(&self, u: &DgField, v: &DgField, t: f64) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let mut r = vec![0.0; self.space.n_dofs()];
        self.reaction_residual(u, t, &mut r);
        Ok(dot(&r, v.coefficients()))
    }

    /// `l_h(v)`
    pub fn apply_boundary_source(&self, v: &DgField, t: f64) -> Result<f64> {
        self.check(v)?;
        let mut r = vec![0.0; self.space.n_dofs()];
        self.source_vector(t, &mut r);
        Ok(dot(&r, v.coefficients()))
    }

    /// `du/dt` of the semi-discrete system at time `t`.
    pub fn rhs(&self, u: &DgField, t: f64) -> Result<DgField> {
        let mut out = self.space.zero(t);
        self.rhs_into(u, t, &mut out)?;
        Ok(out)
    }

    /// Writes `du/dt` into `out`, reusing its storage.
    pub fn rhs_into(&self, u: &DgField, t: f64, out: &mut DgField) -> Result<()> {
        self.check(u)?;
        self.check(out)?;
        out.set_time(t);
        let nm = self.space.n_modes();
        let mut residual = vec![0.0; self.space.n_dofs()];
        self.advection_residual(u, t, &mut residual);
        self.reaction_residual(u, t, &mut residual);
        let mut source = vec![0.0; self.space.n_dofs()];
        self.source_vector(t, &mut source);
        let mesh = self.space.mesh();
        let coeffs = out.coefficients_mut();
        for k in 0..mesh.n_elements() {
            let inv_mass = 1.0 / mesh.geometry(k).det;
            for i in k * nm..(k + 1) * nm {
                coeffs[i] = (source[i] - residual[i]) * inv_mass;
            }
        }
        Ok(())
    }

    /// Direct evaluation of the terms of `b_h(u,u) + c_h(u,u)` after Green's
    /// identity.
    pub fn energy_rate(&self, u: &DgField, t: f64) -> Result<EnergyRate> {
        self.check(u)?;
        let mut volume = 0.0;
        for (k, eq) in self.elements.iter().enumerate() {
            let c = u.block(k);
            for q in 0..eq.points.len() {
                let uq = dot(c, &eq.values[q]);
                volume += eq.weights[q] * self.flow.effective_reaction(&eq.points[q], t) * uq * uq;
            }
        }
        let mut jumps = 0.0;
        let mut boundary = 0.0;
        for face in &self.faces {
            for q in 0..face.points.len() {
                let an = self.a_dot_n(face, &face.points[q], t);
                let ul = dot(u.block(face.left), &face.left_values[q]);
                match face.right {
                    Some(r) => {
                        let ur = dot(u.block(r), &face.right_values[q]);
                        jumps += 0.5 * face.weights[q] * an.abs() * (ul - ur).powi(2);
                    }
                    None => boundary += 0.5 * face.weights[q] * an.abs() * ul * ul,
                }
            }
        }
        Ok(EnergyRate { volume, jumps, boundary })
    }

    /// Largest `|a|` per element at time `t`, sampled at the quadrature points
    /// and the vertices.
    pub fn max_speed_per_element(&self, t: f64) -> Vec<f64> {
        let mesh = self.space.mesh();
        self.elements
            .iter()
            .enumerate()
            .map(|(k, eq)| {
                let verts = mesh.elements()[k].iter().map(|&v| mesh.vertices()[v]);
                eq.points
                    .iter()
                    .copied()
                    .chain(verts)
                    .map(|x| {
                        let a = self.flow.velocity(&x, t);
                        a[0].hypot(a[1])
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

#[inline]
fn axpy_block(out: &mut [f64], s: f64, phi: &[f64]) {
    for (o, p) in out.iter_mut().zip(phi) {
        *o += s * p;
    }
}
