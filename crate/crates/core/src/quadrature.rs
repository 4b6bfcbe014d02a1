//! Gauss–Legendre rules and a product rule on the unit sphere.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::{Error, Result, C64};

/// n-point Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("Gauss-Legendre order must be ≥ 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre in cos θ times the trapezoid rule in φ.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    polar: GaussLegendre,
    n_phi: usize,
}

/// One node of a [`SphereQuadrature`].
#[derive(Clone, Copy, Debug)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
    pub direction: Vector3<f64>,
    pub weight: f64,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_phi == 0 {
            return Err(Error::InvalidGrid("azimuthal point count must be ≥ 1".into()));
        }
        Ok(Self {
            polar: GaussLegendre::new(n_theta)?,
            n_phi,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.polar.len()
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn points(&self) -> impl Iterator<Item = SpherePoint> + '_ {
        let dphi = TAU / self.n_phi as f64;
        self.polar
            .nodes()
            .iter()
            .zip(self.polar.weights())
            .flat_map(move |(&u, &wu)| {
                let theta = u.acos();
                let s = (1.0 - u * u).max(0.0).sqrt();
                (0..self.n_phi).map(move |j| {
                    let phi = j as f64 * dphi;
                    SpherePoint {
                        theta,
                        phi,
                        direction: Vector3::new(s * phi.cos(), s * phi.sin(), u),
                        weight: wu * dphi,
                    }
                })
            })
    }

    pub fn integrate<F: Fn(&SpherePoint) -> f64>(&self, f: F) -> f64 {
        self.points().map(|p| p.weight * f(&p)).sum()
    }

    pub fn integrate_complex<F: Fn(&SpherePoint) -> C64>(&self, f: F) -> C64 {
        self.points().map(|p| f(&p) * p.weight).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        for n in 1..12 {
            let gl = GaussLegendre::new(n).unwrap();
            assert!((gl.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..2 * n {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = gl.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn high_order_nodes_are_sorted_and_inside() {
        let gl = GaussLegendre::new(128).unwrap();
        assert!(gl.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(gl.nodes().iter().all(|x| x.abs() < 1.0));
        let got = gl.integrate(|x| (3.0 * x).cos());
        assert!((got - 2.0 * 3f64.sin() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_area_and_moments() {
        let q = SphereQuadrature::new(16, 32).unwrap();
        assert!((q.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        let zz = q.integrate(|p| p.direction.z * p.direction.z);
        let xx = q.integrate(|p| p.direction.x * p.direction.x);
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((xx - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
