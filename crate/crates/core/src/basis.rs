//! Orthonormal modal bases on the reference simplices.
//!
//! In 1D the modes are scaled shifted Legendre polynomials on `[0, 1]`; on the
//! reference triangle they are the collapsed-coordinate Jacobi (Dubiner)
//! polynomials. Both are built symbolically in the monomial basis and
//! normalized with exact monomial integrals, so the Gram matrix is the
//! identity up to rounding.

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::quadrature::make_quadrature;

pub const MAX_DEGREE: usize = 4;

/// Univariate polynomial, coefficient `k` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
struct Poly1(Vec<f64>);

impl Poly1 {
    fn constant(c: f64) -> Self {
        Poly1(vec![c])
    }

    fn add(&self, o: &Poly1) -> Poly1 {
        let n = self.0.len().max(o.0.len());
        Poly1(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + o.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    fn scale(&self, s: f64) -> Poly1 {
        Poly1(self.0.iter().map(|c| c * s).collect())
    }

    fn mul(&self, o: &Poly1) -> Poly1 {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1(out)
    }
}

/// Jacobi polynomial `P_n^{(alpha, 0)}` in its own variable.
fn jacobi(n: usize, alpha: f64) -> Poly1 {
    let x = Poly1(vec![0.0, 1.0]);
    let mut p0 = Poly1::constant(1.0);
    if n == 0 {
        return p0;
    }
    let mut p1 = Poly1(vec![(alpha + 1.0) - 0.5 * (alpha + 2.0), 0.5 * (alpha + 2.0)]);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + alpha;
        let denom = 2.0 * k * (k + alpha) * (s - 2.0);
        let lin = x.scale((s - 1.0) * s * (s - 2.0)).add(&Poly1::constant((s - 1.0) * alpha * alpha));
        let next = lin
            .mul(&p1)
            .add(&p0.scale(-2.0 * (k + alpha - 1.0) * (k - 1.0) * s))
            .scale(1.0 / denom);
        p0 = p1;
        p1 = next;
    }
    p1
}

/// Bivariate polynomial, `c[i][j]` multiplies `xi^i eta^j`. The coefficient
/// array is square with side `deg + 1`.
#[derive(Debug, Clone, PartialEq)]
struct Poly2 {
    c: Vec<Vec<f64>>,
}

impl Poly2 {
    fn zero(deg: usize) -> Self {
        Poly2 { c: vec![vec![0.0; deg + 1]; deg + 1] }
    }

    fn constant(v: f64) -> Self {
        Poly2 { c: vec![vec![v]] }
    }

    /// `l0 + l1 xi + l2 eta`
    fn linear(l: [f64; 3]) -> Self {
        let mut q = Poly2::zero(1);
        q.c[0][0] = l[0];
        q.c[1][0] = l[1];
        q.c[0][1] = l[2];
        q
    }

    fn deg(&self) -> usize {
        self.c.len() - 1
    }

    /// Re-sizes the coefficient array to side `deg + 1`; dropped entries must be zero.
    fn resized(&self, deg: usize) -> Poly2 {
        let mut out = Poly2::zero(deg);
        for (i, row) in self.c.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if i <= deg && j <= deg {
                    out.c[i][j] = a;
                } else {
                    debug_assert!(a == 0.0, "dropping non-zero coefficient");
                }
            }
        }
        out
    }

    /// `p(l(xi, eta))` for a univariate `p` and linear form `l`.
    fn compose_linear(p: &Poly1, l: [f64; 3]) -> Self {
        let lin = Poly2::linear(l);
        let mut acc = Poly2::constant(0.0);
        for &coef in p.0.iter().rev() {
            acc = acc.mul(&lin);
            acc.c[0][0] += coef;
        }
        acc
    }

    fn add(&self, o: &Poly2) -> Poly2 {
        let deg = self.deg().max(o.deg());
        let mut out = self.resized(deg);
        for (i, row) in o.c.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                out.c[i][j] += b;
            }
        }
        out
    }

    fn mul(&self, o: &Poly2) -> Poly2 {
        let mut out = Poly2::zero(self.deg() + o.deg());
        for (i, row) in self.c.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (k, orow) in o.c.iter().enumerate() {
                    for (l, &b) in orow.iter().enumerate() {
                        out.c[i + k][j + l] += a * b;
                    }
                }
            }
        }
        out
    }

    fn scale(&mut self, s: f64) {
        self.c.iter_mut().flatten().for_each(|v| *v *= s);
    }

    fn d_xi(&self) -> Poly2 {
        let mut out = Poly2::zero(self.deg());
        for i in 1..self.c.len() {
            for j in 0..self.c.len() {
                out.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        out
    }

    fn d_eta(&self) -> Poly2 {
        let mut out = Poly2::zero(self.deg());
        for i in 0..self.c.len() {
            for j in 1..self.c.len() {
                out.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        out
    }

    fn eval(&self, xp: &[f64], ep: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.c.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    s += a * xp[i] * ep[j];
                }
            }
        }
        s
    }
}

fn powers(degree: usize, xi: &Point) -> (Vec<f64>, Vec<f64>) {
    let mut xp = vec![1.0; degree + 1];
    let mut ep = vec![1.0; degree + 1];
    for k in 1..=degree {
        xp[k] = xp[k - 1] * xi[0];
        ep[k] = ep[k - 1] * xi[1];
    }
    (xp, ep)
}

#[cfg(test)]
fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Values and reference gradients of all modes at a set of reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTable {
    /// `values[q][m]`
    pub values: Vec<Vec<f64>>,
    /// `grads[q][m]`, reference gradients.
    pub grads: Vec<Vec<Point>>,
}

/// Orthonormal polynomial basis of `P^p` on the reference simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim: usize,
    degree: usize,
    modes: Vec<Poly2>,
    d_xi: Vec<Poly2>,
    d_eta: Vec<Poly2>,
}

impl Basis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(dim));
        }
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let mut modes = Vec::new();
        if dim == 1 {
            for k in 0..=degree {
                // P_k(2 xi - 1)
                modes.push(Poly2::compose_linear(&jacobi(k, 0.0), [-1.0, 2.0, 0.0]));
            }
        } else {
            // collapsed coordinate a = (2 xi - 1 + eta) / (1 - eta)
            let num = Poly2::linear([-1.0, 2.0, 1.0]);
            let den = Poly2::linear([1.0, 0.0, -1.0]);
            for n in 0..=degree {
                for j in 0..=n {
                    let i = n - j;
                    // P_i(a) (1 - eta)^i, expanded term by term
                    let mut first = Poly2::constant(0.0);
                    for (k, &lk) in jacobi(i, 0.0).0.iter().enumerate() {
                        let mut term = Poly2::constant(lk);
                        for _ in 0..k {
                            term = term.mul(&num);
                        }
                        for _ in 0..(i - k) {
                            term = term.mul(&den);
                        }
                        first = first.add(&term);
                    }
                    // P_j^{(2i+1,0)}(2 eta - 1)
                    let second = Poly2::compose_linear(&jacobi(j, 2.0 * i as f64 + 1.0), [-1.0, 0.0, 2.0]);
                    modes.push(first.mul(&second));
                }
            }
        }
        let mut modes: Vec<Poly2> = modes.iter().map(|m| m.resized(degree)).collect();
        // Norms from a positive-weight rule: summing squares avoids the
        // cancellation of exact monomial moments at higher degree.
        let rule = make_quadrature(dim, 2 * degree)?;
        for m in modes.iter_mut() {
            let norm = rule
                .integrate(|xi| {
                    let (xp, ep) = powers(degree, xi);
                    m.eval(&xp, &ep).powi(2)
                })
                .sqrt();
            m.scale(1.0 / norm);
        }
        let d_xi = modes.iter().map(Poly2::d_xi).collect();
        let d_eta = modes.iter().map(Poly2::d_eta).collect();
        Ok(Basis { dim, degree, modes, d_xi, d_eta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    fn powers(&self, xi: &Point) -> (Vec<f64>, Vec<f64>) {
        powers(self.degree, xi)
    }

    pub fn values(&self, xi: &Point) -> Vec<f64> {
        let (xp, ep) = self.powers(xi);
        self.modes.iter().map(|m| m.eval(&xp, &ep)).collect()
    }

    pub fn gradients(&self, xi: &Point) -> Vec<Point> {
        let (xp, ep) = self.powers(xi);
        self.d_xi
            .iter()
            .zip(&self.d_eta)
            .map(|(dx, de)| {
                let g0 = dx.eval(&xp, &ep);
                let g1 = if self.dim == 2 { de.eval(&xp, &ep) } else { 0.0 };
                [g0, g1]
            })
            .collect()
    }

    pub fn tabulate(&self, points: &[Point]) -> BasisTable {
        BasisTable {
            values: points.iter().map(|p| self.values(p)).collect(),
            grads: points.iter().map(|p| self.gradients(p)).collect(),
        }
    }
}

/// Convenience constructor mirroring [`Basis::new`].
pub fn make_basis(dim: usize, degree: usize) -> Result<Basis> {
    Basis::new(dim, degree)
}
