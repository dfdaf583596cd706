//! Quadrature rules on the reference simplices.
//!
//! The reference interval is `[0, 1]` and the reference triangle has vertices
//! `(0,0)`, `(1,0)`, `(0,1)`. Weights sum to the reference measure (1 and 1/2).

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Highest exactness served in 1D (Gauss–Legendre with 31 points).
pub const MAX_EXACTNESS_1D: usize = 61;
/// Highest exactness served on triangles (collapsed tensor fallback).
pub const MAX_EXACTNESS_2D: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Builds a rule of at least the requested exactness on the reference simplex
/// of dimension `dim`.
pub fn make_quadrature(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    match dim {
        1 => {
            if exactness > MAX_EXACTNESS_1D {
                return Err(Error::QuadratureUnavailable { dim, exactness });
            }
            let n = exactness / 2 + 1;
            let (x, w) = gauss_legendre_unit(n);
            Ok(QuadratureRule {
                dim,
                points: x.into_iter().map(|x| [x, 0.0]).collect(),
                weights: w,
                exactness: 2 * n - 1,
            })
        }
        2 => triangle_rule(exactness),
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn push_orbit3(points: &mut Vec<Point>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a], [b, a], [a, b]] {
        points.push(p);
        weights.push(w);
    }
}

fn triangle_rule(exactness: usize) -> Result<QuadratureRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let achieved = match exactness {
        0 | 1 => {
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.5);
            1
        }
        2 => {
            push_orbit3(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 6.0);
            2
        }
        3 | 4 => {
            push_orbit3(
                &mut points,
                &mut weights,
                0.445_948_490_915_964_886_32,
                0.5 * 0.223_381_589_678_011_465_70,
            );
            push_orbit3(
                &mut points,
                &mut weights,
                0.091_576_213_509_770_743_46,
                0.5 * 0.109_951_743_655_321_867_64,
            );
            4
        }
        5 => {
            let s15 = 15f64.sqrt();
            points.push([1.0 / 3.0, 1.0 / 3.0]);
            weights.push(0.5 * 9.0 / 40.0);
            push_orbit3(
                &mut points,
                &mut weights,
                (6.0 - s15) / 21.0,
                0.5 * (155.0 - s15) / 1200.0,
            );
            push_orbit3(
                &mut points,
                &mut weights,
                (6.0 + s15) / 21.0,
                0.5 * (155.0 + s15) / 1200.0,
            );
            5
        }
        e if e <= MAX_EXACTNESS_2D => {
            // Collapsed (Duffy) tensor rule: xi = u (1 - v), eta = v, jacobian (1 - v).
            let n = (e + 3) / 2;
            let (x, w) = gauss_legendre_unit(n);
            for (v, wv) in x.iter().zip(&w) {
                for (u, wu) in x.iter().zip(&w) {
                    points.push([u * (1.0 - v), *v]);
                    weights.push(wu * wv * (1.0 - v));
                }
            }
            2 * n - 2
        }
        e => return Err(Error::QuadratureUnavailable { dim: 2, exactness: e }),
    };
    Ok(QuadratureRule {
        dim: 2,
        points,
        weights,
        exactness: achieved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of xi^a eta^b over the reference triangle.
    fn triangle_monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn gauss_two_point_integrates_cubic() {
        let q = make_quadrature(1, 3).unwrap();
        assert_eq!(q.len(), 2);
        let v = q.integrate(|p| p[0].powi(3));
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn centroid_rule_for_degree_one() {
        let q = make_quadrature(2, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights()[0], 0.5);
        assert_eq!(q.points()[0], [1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn degree_five_rule_on_x2y3() {
        let q = make_quadrature(2, 5).unwrap();
        let v = q.integrate(|p| p[0].powi(2) * p[1].powi(3));
        // 2! 3! / 7! = 1/420
        assert!((triangle_monomial(2, 3) - 1.0 / 420.0).abs() < 1e-17);
        assert!((v - 1.0 / 420.0).abs() < 1e-12);
    }

    #[test]
    fn all_rules_positive_and_exact() {
        for e in 0..=MAX_EXACTNESS_2D {
            let q = make_quadrature(2, e).unwrap();
            assert!(q.exactness() >= e);
            assert!(q.weights().iter().all(|&w| w > 0.0), "exactness {e}");
            let total: f64 = q.weights().iter().sum();
            assert!((total - 0.5).abs() < 1e-14, "exactness {e}: {total}");
            for a in 0..=q.exactness() as u32 {
                for b in 0..=(q.exactness() as u32 - a) {
                    let v = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let exact = triangle_monomial(a, b);
                    assert!((v - exact).abs() < 1e-12, "e={e} a={a} b={b}: {v} vs {exact}");
                }
            }
        }
        for e in 0..=40 {
            let q = make_quadrature(1, e).unwrap();
            let total: f64 = q.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            for k in 0..=q.exactness() as i32 {
                let v = q.integrate(|p| p[0].powi(k));
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-12, "e={e} k={k}");
            }
        }
    }

    #[test]
    fn out_of_range_requests() {
        assert!(matches!(
            make_quadrature(2, MAX_EXACTNESS_2D + 1),
            Err(Error::QuadratureUnavailable { .. })
        ));
        assert!(matches!(make_quadrature(3, 2), Err(Error::UnsupportedDim(3))));
    }
}
