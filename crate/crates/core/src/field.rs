//! The broken polynomial space `S_h` and its members.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use crate::basis::{Basis, BasisTable};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{make_quadrature, QuadratureRule};

/// Piecewise polynomials of degree `p` on a mesh, with the volume quadrature
/// used for projection tabulated once.
#[derive(Debug)]
pub struct DgSpace {
    mesh: Arc<Mesh>,
    basis: Basis,
    volume_rule: QuadratureRule,
    volume_table: BasisTable,
}

impl DgSpace {
    /// Space of degree `degree` with volume quadrature exact to `2p + 2`.
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Arc<Self>> {
        Self::with_exactness(mesh, degree, 2 * degree + 2)
    }

    pub fn with_exactness(mesh: Arc<Mesh>, degree: usize, exactness: usize) -> Result<Arc<Self>> {
        let basis = Basis::new(mesh.dim(), degree)?;
        let volume_rule = make_quadrature(mesh.dim(), exactness)?;
        let volume_table = basis.tabulate(volume_rule.points());
        Ok(Arc::new(DgSpace {
            mesh,
            basis,
            volume_rule,
            volume_table,
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_modes() * self.n_elements()
    }

    pub fn volume_rule(&self) -> &QuadratureRule {
        &self.volume_rule
    }

    pub fn volume_table(&self) -> &BasisTable {
        &self.volume_table
    }

    /// Same mesh instance and degree.
    pub fn compatible(&self, other: &DgSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) && self.degree() == other.degree()
    }

    pub fn zero(self: &Arc<Self>, time: f64) -> DgField {
        DgField {
            space: Arc::clone(self),
            coeffs: vec![0.0; self.n_dofs()],
            time,
        }
    }

    /// Elementwise L² projection of `f(·, t)`. With an orthonormal basis the
    /// local mass matrix is `|det J| I`, so each coefficient is a single
    /// quadrature sum on the reference element.
    pub fn project<F: Fn(&Point, f64) -> f64>(self: &Arc<Self>, f: F, t: f64) -> DgField {
        let mut out = self.zero(t);
        let nm = self.n_modes();
        for k in 0..self.n_elements() {
            let g = self.mesh.geometry(k);
            let block = &mut out.coeffs[k * nm..(k + 1) * nm];
            for (q, (xi, w)) in self.volume_rule.iter().enumerate() {
                let fx = f(&g.to_physical(xi), t);
                for (b, phi) in block.iter_mut().zip(&self.volume_table.values[q]) {
                    *b += w * fx * phi;
                }
            }
        }
        out
    }
}

/// `Π_h f` at time `t`.
pub fn l2_project<F: Fn(&Point, f64) -> f64>(f: F, t: f64, space: &Arc<DgSpace>) -> DgField {
    space.project(f, t)
}

/// A member of `S_h` at one time instant: one coefficient block per element.
#[derive(Debug, Clone)]
pub struct DgField {
    space: Arc<DgSpace>,
    coeffs: Vec<f64>,
    time: f64,
}

impl DgField {
    pub fn from_coefficients(space: &Arc<DgSpace>, coeffs: Vec<f64>, time: f64) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                space.n_dofs(),
                coeffs.len()
            )));
        }
        Ok(DgField {
            space: Arc::clone(space),
            coeffs,
            time,
        })
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn block(&self, k: usize) -> &[f64] {
        let nm = self.space.n_modes();
        &self.coeffs[k * nm..(k + 1) * nm]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [f64] {
        let nm = self.space.n_modes();
        &mut self.coeffs[k * nm..(k + 1) * nm]
    }

    pub fn same_space(&self, other: &DgField) -> bool {
        self.space.compatible(&other.space)
    }

    pub fn check_same_space(&self, other: &DgField) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::MismatchedSpace)
        }
    }

    fn check_element(&self, k: usize) -> Result<()> {
        let n = self.space.n_elements();
        if k < n {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange { index: k, n_elements: n })
        }
    }

    /// Values in element `k` at reference points.
    pub fn evaluate(&self, k: usize, reference_points: &[Point]) -> Result<Vec<f64>> {
        self.check_element(k)?;
        Ok(reference_points.iter().map(|xi| self.value_at(k, xi)).collect())
    }

    #[inline]
    pub fn value_at(&self, k: usize, xi: &Point) -> f64 {
        dot(self.block(k), &self.space.basis().values(xi))
    }

    /// Physical gradient in element `k` at reference point `xi`.
    pub fn gradient_at(&self, k: usize, xi: &Point) -> Point {
        let g = self.space.mesh().geometry(k);
        let mut r = [0.0, 0.0];
        for (c, grad) in self.block(k).iter().zip(self.space.basis().gradients(xi)) {
            r[0] += c * grad[0];
            r[1] += c * grad[1];
        }
        g.physical_gradient(&r)
    }

    /// `‖u‖_{L²(Ω)}`, exact for the orthonormal basis.
    pub fn l2_norm(&self) -> f64 {
        let mesh = self.space.mesh();
        (0..mesh.n_elements())
            .map(|k| mesh.geometry(k).det * self.block(k).iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &DgField) -> Result<()> {
        self.check_same_space(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Text serialization: a `dgfield p=.. dim=.. n_elems=..` header and one
    /// line of coefficients per element.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "dgfield p={} dim={} n_elems={}",
            self.space.degree(),
            self.space.dim(),
            self.space.n_elements()
        );
        for k in 0..self.space.n_elements() {
            let line: Vec<String> = self.block(k).iter().map(|c| format!("{c:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(space: &Arc<DgSpace>, reader: R, time: f64) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: "<dgfield>".into(),
            line,
            message,
        };
        let mut lines = BufReader::new(reader).lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty input".into()))?;
        let header = header?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("dgfield") {
            return Err(perr(1, "missing `dgfield` header".into()));
        }
        let mut p = None;
        let mut dim = None;
        let mut n = None;
        for kv in fields {
            let (k, v) = kv.split_once('=').ok_or_else(|| perr(1, format!("bad header field `{kv}`")))?;
            let v: usize = v.parse().map_err(|e| perr(1, format!("bad value in `{kv}`: {e}")))?;
            match k {
                "p" => p = Some(v),
                "dim" => dim = Some(v),
                "n_elems" => n = Some(v),
                _ => return Err(perr(1, format!("unknown header field `{k}`"))),
            }
        }
        if p != Some(space.degree()) || dim != Some(space.dim()) || n != Some(space.n_elements()) {
            return Err(Error::MismatchedSpace);
        }
        let nm = space.n_modes();
        let mut coeffs = Vec::with_capacity(space.n_dofs());
        for _ in 0..space.n_elements() {
            let (i, line) = lines.next().ok_or_else(|| perr(0, "missing coefficient lines".into()))?;
            let line = line?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(i + 1, format!("bad coefficient: {e}")))?;
            if row.len() != nm {
                return Err(perr(i + 1, format!("expected {nm} coefficients, got {}", row.len())));
            }
            coeffs.extend(row);
        }
        DgField::from_coefficients(space, coeffs, time)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grading, TrianglePattern};
    use crate::quadrature::make_quadrature;

    fn interval_space(n: usize, p: usize) -> Arc<DgSpace> {
        DgSpace::new(Arc::new(Mesh::interval(0.0, 1.0, n, Grading::Uniform).unwrap()), p).unwrap()
    }

    fn l2_distance<F: Fn(&Point) -> f64>(u: &DgField, f: F) -> f64 {
        let q = make_quadrature(u.space().dim(), 16).unwrap();
        let mesh = u.space().mesh();
        let mut s = 0.0;
        for k in 0..mesh.n_elements() {
            let g = mesh.geometry(k);
            for (xi, w) in q.iter() {
                let e = u.value_at(k, xi) - f(&g.to_physical(xi));
                s += w * g.det * e * e;
            }
        }
        s.sqrt()
    }

    #[test]
    fn reproduces_linear_function() {
        let space = DgSpace::new(
            Arc::new(Mesh::interval(0.0, 1.0, 3, Grading::Geometric(1.7)).unwrap()),
            1,
        )
        .unwrap();
        let u = space.project(|x, _| 3.0 * x[0] - 1.0, 0.0);
        for k in 0..3 {
            let g = space.mesh().geometry(k);
            for xi in space.volume_rule().points() {
                let x = g.to_physical(xi);
                assert!((u.value_at(k, xi) - (3.0 * x[0] - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_projection() {
        let space = interval_space(5, 0);
        let u = space.project(|_, _| 1.0, 0.0);
        for k in 0..5 {
            assert!((u.block(k)[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_projection_error_ratio() {
        let f = |x: &Point| (std::f64::consts::PI * x[0]).sin();
        let e8 = l2_distance(&interval_space(8, 1).project(|x, _| f(x), 0.0), f);
        let e16 = l2_distance(&interval_space(16, 1).project(|x, _| f(x), 0.0), f);
        let ratio = e8 / e16;
        assert!((3.7..=4.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn evaluate_cases() {
        let space = interval_space(4, 2);
        let zero = space.zero(0.0);
        assert_eq!(zero.evaluate(2, &[[0.1, 0.0], [0.9, 0.0]]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(zero.evaluate(4, &[[0.5, 0.0]]), Err(Error::ElementOutOfRange { .. })));

        let id = space.project(|x, _| x[0], 0.0);
        for k in 0..4 {
            let mid = id.evaluate(k, &[[0.5, 0.0]]).unwrap()[0];
            assert!((mid - (k as f64 + 0.5) / 4.0).abs() < 1e-14);
        }

        let mut single = space.zero(0.0);
        single.block_mut(1)[2] = 1.0;
        let pts = [[0.2, 0.0], [0.7, 0.0]];
        let vals = single.evaluate(1, &pts).unwrap();
        for (v, p) in vals.iter().zip(&pts) {
            assert_eq!(*v, space.basis().values(p)[2]);
        }
    }

    #[test]
    fn norm_matches_quadrature() {
        let mesh = Arc::new(Mesh::rectangle(0.0, 0.0, 1.0, 1.0, 3, 3, TrianglePattern::Crisscross).unwrap());
        let space = DgSpace::new(mesh, 2).unwrap();
        let u = space.project(|x, _| (x[0] * 3.0).sin() + x[1] * x[1], 0.0);
        let quad = l2_distance(&u, |_| 0.0);
        assert!((u.l2_norm() - quad).abs() < 1e-13);
    }

    #[test]
    fn text_round_trip_and_mismatch() {
        let space = interval_space(3, 2);
        let u = space.project(|x, _| (x[0] * 5.0).cos(), 0.0);
        let mut buf = Vec::new();
        u.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dgfield p=2 dim=1 n_elems=3\n"));
        let back = DgField::read_from(&space, &buf[..], 0.0).unwrap();
        assert_eq!(back.coefficients(), u.coefficients());

        let other = interval_space(3, 1);
        assert!(matches!(DgField::read_from(&other, &buf[..], 0.0), Err(Error::MismatchedSpace)));
        let mut w = other.zero(0.0);
        assert!(w.axpy(1.0, &u).is_err());
    }
}
