//! Normalized far-field scattering Ω_f(θ, φ) of an HPI state.
//!
//! For the observation direction R̂ with k_R = |k_L| R̂,
//!
//! ```text
//! Ω_f = (1/N) Σ_{α,β} P_αβ(R̂) e^{i(k_R − k_L)·(r_α − r_β)} e^{i2πl(β_φ − α_φ)/N_φ}
//! P_αβ = (p_β*·p_α) − (p_β*·R̂)(p_α·R̂)
//! ```
//!
//! With `a_α = e^{−i(k_R − k_L)·r_α} e^{i2πl(α_φ−1)/N_φ}` and
//! `u = Σ_α a_α* p_α` the double sum factorizes into
//! `Ω_f = (|u|² − |R̂·u|²)/N`, which is what [`FarField::omega`] evaluates.
//! [`FarField::omega_pairwise`] keeps the literal double sum.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::geometry::AtomArray;
use crate::polarization::DipoleField;
use crate::quadrature::SphereQuadrature;
use crate::units::{self, K_L};
use crate::{CVec3, Error, Result, C64};

/// Largest imaginary residue tolerated in the pairwise double sum.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-9;

/// Negative values down to this are rounding noise and clamp to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

pub fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Emission pattern of one HPI state on one array.
#[derive(Clone, Debug)]
pub struct FarField<'a> {
    array: &'a AtomArray,
    field: &'a DipoleField,
    l: i64,
    imprint: Vec<C64>,
}

impl<'a> FarField<'a> {
    pub fn new(array: &'a AtomArray, field: &'a DipoleField, l: i64) -> Result<Self> {
        if field.len() != array.len() {
            return Err(Error::DimensionMismatch {
                what: "dipole field",
                got: field.len(),
                expected: array.len(),
            });
        }
        let n_phi = array.n_phi();
        let l_reduced = l.rem_euclid(n_phi as i64) as usize;
        let imprint = array
            .sites()
            .iter()
            .map(|s| {
                let k = (l_reduced * s.azimuth) % n_phi;
                C64::from_polar(1.0, TAU * k as f64 / n_phi as f64)
            })
            .collect();
        Ok(Self {
            array,
            field,
            l,
            imprint,
        })
    }

    pub fn array(&self) -> &AtomArray {
        self.array
    }

    pub fn field(&self) -> &DipoleField {
        self.field
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    fn radiated_vector(&self, r_hat: &Vector3<f64>) -> CVec3 {
        let dk = r_hat * K_L - units::k_l();
        let mut u = CVec3::zeros();
        for (idx, pos) in self.array.positions().iter().enumerate() {
            // conj(a_α) = e^{+i(k_R − k_L)·r_α} e^{−i2πl(α_φ−1)/N_φ}
            let weight = C64::from_polar(1.0, dk.dot(pos)) * self.imprint[idx].conj();
            u += self.field.orientation(idx) * weight;
        }
        u
    }

    /// Ω_f along the unit vector `r_hat`.
    pub fn omega_dir(&self, r_hat: &Vector3<f64>) -> f64 {
        let u = self.radiated_vector(r_hat);
        let r = r_hat.map(|x| C64::new(x, 0.0));
        let value = (u.norm_squared() - u.dot(&r).norm_sqr()) / self.array.len() as f64;
        if value < 0.0 {
            if value < -NEGATIVE_CLAMP {
                log::warn!("far-field value {value:e} below clamp threshold");
            }
            return 0.0;
        }
        value
    }

    pub fn omega(&self, theta: f64, phi: f64) -> f64 {
        self.omega_dir(&direction(theta, phi))
    }

    /// Literal double sum; fails if its imaginary part exceeds
    /// [`IMAGINARY_RESIDUE_LIMIT`].
    pub fn omega_pairwise(&self, theta: f64, phi: f64) -> Result<f64> {
        let r_hat = direction(theta, phi);
        let r = r_hat.map(|x| C64::new(x, 0.0));
        let dk = r_hat * K_L - units::k_l();
        let n = self.array.len();
        let mut total = C64::new(0.0, 0.0);
        for alpha in 0..n {
            let pa = self.field.orientation(alpha);
            let pa_r = pa.dot(&r);
            for beta in 0..n {
                let pb = self.field.orientation(beta);
                let p_factor = pb.dotc(pa) - pb.dotc(&r) * pa_r;
                let r_ab = self.array.position(alpha) - self.array.position(beta);
                let spatial = C64::from_polar(1.0, dk.dot(&r_ab));
                let helical = self.imprint[beta] * self.imprint[alpha].conj();
                total += p_factor * spatial * helical;
            }
        }
        total /= n as f64;
        if total.im.abs() > IMAGINARY_RESIDUE_LIMIT {
            return Err(Error::Consistency(format!(
                "far-field double sum has imaginary residue {:e} at θ={theta}, φ={phi}",
                total.im
            )));
        }
        Ok(total.re)
    }

    /// Dense evaluation on `n_theta` polar angles spanning [0, π] and
    /// `n_phi` azimuths 2πj/n_phi.
    pub fn map(&self, n_theta: usize, n_phi: usize) -> Result<FarFieldMap> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::InvalidGrid(format!(
                "far-field grid must be at least 2x2, got {n_theta}x{n_phi}"
            )));
        }
        let theta: Vec<f64> = (0..n_theta)
            .map(|i| PI * i as f64 / (n_theta - 1) as f64)
            .collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| TAU * j as f64 / n_phi as f64).collect();
        let values = (0..n_theta * n_phi)
            .into_par_iter()
            .map(|k| self.omega(theta[k / n_phi], phi[k % n_phi]))
            .collect();
        Ok(FarFieldMap { theta, phi, values })
    }

    /// ∮ Ω_f dΩ by the given product rule.
    pub fn total_power(&self, quad: &SphereQuadrature) -> f64 {
        quad.integrate(|p| self.omega_dir(&p.direction))
    }

    /// (forward, backward) hemisphere-integrated power, split at θ = π/2.
    pub fn hemisphere_powers(&self, quad: &SphereQuadrature) -> (f64, f64) {
        quad.points().fold((0.0, 0.0), |(fw, bw), p| {
            let value = p.weight * self.omega_dir(&p.direction);
            if p.direction.z > 0.0 {
                (fw + value, bw)
            } else if p.direction.z < 0.0 {
                (fw, bw + value)
            } else {
                (fw + 0.5 * value, bw + 0.5 * value)
            }
        })
    }
}

/// Ω_f for one direction.
pub fn omega_f(array: &AtomArray, field: &DipoleField, l: i64, theta: f64, phi: f64) -> Result<f64> {
    Ok(FarField::new(array, field, l)?.omega(theta, phi))
}

/// (3/8π) ∮ [(p_b*·p_a) − (p_b*·R̂)(p_a·R̂)] e^{i k R̂·r_ab} dΩ, which equals
/// the pair decay kernel f(p_a, p_b, r_ab)/Γ.
pub fn pair_angular_integral(
    p_a: &CVec3,
    p_b: &CVec3,
    r_ab: &Vector3<f64>,
    quad: &SphereQuadrature,
) -> C64 {
    let pb_pa = p_b.dotc(p_a);
    quad.integrate_complex(|p| {
        let r = p.direction.map(|x| C64::new(x, 0.0));
        let factor = pb_pa - p_b.dotc(&r) * p_a.dot(&r);
        factor * C64::from_polar(1.0, K_L * p.direction.dot(r_ab))
    }) * (3.0 / (8.0 * PI))
}

/// Ω_f sampled on a regular (θ, φ) grid, row-major in θ.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldMap {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
}

impl FarFieldMap {
    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn get(&self, i_theta: usize, j_phi: usize) -> f64 {
        self.values[i_theta * self.n_phi() + j_phi]
    }

    pub fn row(&self, i_theta: usize) -> &[f64] {
        let n = self.n_phi();
        &self.values[i_theta * n..(i_theta + 1) * n]
    }

    /// Grid indices and value of the global maximum (first in row-major order).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
        (k / self.n_phi(), k % self.n_phi(), v)
    }

    pub fn max_abs_diff(&self, other: &FarFieldMap) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// max |Ω(θ, φ + shift·Δφ) − other(θ, φ)|, with `shift` in grid steps.
    pub fn shifted_diff(&self, other: &FarFieldMap, shift: usize) -> f64 {
        let n = self.n_phi();
        let mut worst: f64 = 0.0;
        for i in 0..self.n_theta() {
            for j in 0..n {
                worst = worst.max((self.get(i, (j + shift) % n) - other.get(i, j)).abs());
            }
        }
        worst
    }

    /// ∮ Ω dΩ from the grid (trapezoid in θ with sin θ weight and in φ).
    pub fn integrate(&self) -> f64 {
        let dphi = TAU / self.n_phi() as f64;
        let mut total = 0.0;
        for i in 0..self.n_theta() {
            let w_theta = if i == 0 {
                0.5 * (self.theta[1] - self.theta[0])
            } else if i + 1 == self.n_theta() {
                0.5 * (self.theta[i] - self.theta[i - 1])
            } else {
                0.5 * (self.theta[i + 1] - self.theta[i - 1])
            };
            let row_sum: f64 = self.row(i).iter().sum();
            total += w_theta * self.theta[i].sin() * row_sum * dphi;
        }
        total
    }

    /// Full width at half maximum along φ through the global maximum, in
    /// radians; 2π when the row never drops to half maximum.
    pub fn fwhm_phi(&self) -> f64 {
        let (i, j, peak) = self.argmax();
        let row = self.row(i);
        let n = row.len();
        let half = 0.5 * peak;
        let dphi = TAU / n as f64;
        let crossing = |dir: isize| -> Option<f64> {
            let mut prev = peak;
            for step in 1..n {
                let idx = (j as isize + dir * step as isize).rem_euclid(n as isize) as usize;
                let v = row[idx];
                if v < half {
                    let frac = (prev - half) / (prev - v);
                    return Some((step as f64 - 1.0 + frac) * dphi);
                }
                prev = v;
            }
            None
        };
        match (crossing(-1), crossing(1)) {
            (Some(a), Some(b)) => (a + b).min(TAU),
            _ => TAU,
        }
    }

    /// Full width at half maximum along θ through the global maximum, in
    /// radians; a side that never drops to half maximum extends to the pole.
    pub fn fwhm_theta(&self) -> f64 {
        let (i, j, peak) = self.argmax();
        let half = 0.5 * peak;
        let column: Vec<f64> = (0..self.n_theta()).map(|k| self.get(k, j)).collect();
        let edge = |dir: isize| -> f64 {
            let mut prev = peak;
            let mut k = i as isize;
            loop {
                let next = k + dir;
                if next < 0 || next >= column.len() as isize {
                    return self.theta[k as usize];
                }
                let v = column[next as usize];
                if v < half {
                    let frac = (prev - half) / (prev - v);
                    let (t0, t1) = (self.theta[k as usize], self.theta[next as usize]);
                    return t0 + frac * (t1 - t0);
                }
                prev = v;
                k = next;
            }
        };
        edge(1) - edge(-1)
    }

    /// Strict local maxima of row `i_theta` (periodic in φ), as
    /// `(phi index, value)`. Plateaus count once, at their first index.
    pub fn azimuthal_maxima(&self, i_theta: usize) -> Vec<(usize, f64)> {
        let row = self.row(i_theta);
        let n = row.len();
        if row.iter().all(|&v| v == row[0]) {
            return Vec::new();
        }
        let mut peaks = Vec::new();
        for j in 0..n {
            let v = row[j];
            if v <= row[(j + n - 1) % n] {
                continue;
            }
            // walk across a plateau
            let mut k = 1;
            while k < n && row[(j + k) % n] == v {
                k += 1;
            }
            if row[(j + k) % n] < v {
                peaks.push((j, v));
            }
        }
        peaks
    }

    /// `theta,phi,omega_f`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta,phi,omega_f")?;
        for (i, t) in self.theta.iter().enumerate() {
            for (j, p) in self.phi.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", t, p, self.get(i, j))?;
            }
        }
        Ok(())
    }
}
