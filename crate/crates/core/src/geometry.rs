//! Atomic position arrays on rings.
//!
//! Every array is a set of rings with the same number of atoms `n_phi`.
//! Atoms are addressed by a flat index `ring * n_phi + azimuth` (both
//! zero-based), the zero-based form of μ = (μ_z − 1)·N_φ + μ_φ. Atom
//! `azimuth` of every ring sits at angle 2π·azimuth/n_phi, so the first atom
//! of each ring lies on the +x̂ axis.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest allowed interatomic distance, in λ.
pub const DEFAULT_MIN_SEPARATION: f64 = 1e-6;

/// How copies of the base ring are arranged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stack {
    Single,
    /// `n_z` rings spaced `d_z` along ẑ, centered on z = 0.
    ZStack { n_z: usize, d_z: f64 },
    /// `s` concentric coplanar rings of radii r, 2r, …, s·r.
    RStack { s: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub n_phi: usize,
    pub radius: f64,
    pub stack: Stack,
}

impl RingSpec {
    pub fn single(n_phi: usize, radius: f64) -> Self {
        Self {
            n_phi,
            radius,
            stack: Stack::Single,
        }
    }

    pub fn z_stack(n_phi: usize, radius: f64, n_z: usize, d_z: f64) -> Self {
        Self {
            n_phi,
            radius,
            stack: Stack::ZStack { n_z, d_z },
        }
    }

    pub fn r_stack(n_phi: usize, radius: f64, s: usize) -> Self {
        Self {
            n_phi,
            radius,
            stack: Stack::RStack { s },
        }
    }

    pub fn n_rings(&self) -> usize {
        match self.stack {
            Stack::Single => 1,
            Stack::ZStack { n_z, .. } => n_z,
            Stack::RStack { s } => s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_phi == 0 {
            return Err(Error::InvalidSpec("n_phi must be at least 1".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "ring radius must be positive, got {}",
                self.radius
            )));
        }
        match self.stack {
            Stack::Single => {}
            Stack::ZStack { n_z, d_z } => {
                if n_z == 0 {
                    return Err(Error::InvalidSpec("n_z must be at least 1".into()));
                }
                if !(d_z.is_finite() && d_z > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "ring spacing d_z must be positive, got {d_z}"
                    )));
                }
            }
            Stack::RStack { s } => {
                if s == 0 {
                    return Err(Error::InvalidSpec("s must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<AtomArray> {
        self.build_with_min_separation(DEFAULT_MIN_SEPARATION)
    }

    /// Builds the array, rejecting any pair of atoms closer than `min_separation`.
    pub fn build_with_min_separation(&self, min_separation: f64) -> Result<AtomArray> {
        self.validate()?;
        let n_rings = self.n_rings();
        let mut positions = Vec::with_capacity(n_rings * self.n_phi);
        let mut sites = Vec::with_capacity(n_rings * self.n_phi);
        for ring in 0..n_rings {
            let (radius, z) = match self.stack {
                Stack::Single => (self.radius, 0.0),
                Stack::ZStack { n_z, d_z } => {
                    (self.radius, (ring as f64 - (n_z as f64 - 1.0) / 2.0) * d_z)
                }
                Stack::RStack { .. } => (self.radius * (ring + 1) as f64, 0.0),
            };
            for azimuth in 0..self.n_phi {
                let angle = TAU * azimuth as f64 / self.n_phi as f64;
                positions.push(Vector3::new(radius * angle.cos(), radius * angle.sin(), z));
                sites.push(Site { ring, azimuth });
            }
        }
        let array = AtomArray {
            positions,
            sites,
            n_phi: self.n_phi,
            n_rings,
        };
        if let Some((a, b, distance)) = array.closest_pair() {
            if distance < min_separation {
                return Err(Error::SingularKernel {
                    a,
                    b,
                    distance,
                    min: min_separation,
                });
            }
        }
        Ok(array)
    }
}

/// Ring and azimuthal slot of one atom (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub ring: usize,
    pub azimuth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomArray {
    positions: Vec<Vector3<f64>>,
    sites: Vec<Site>,
    n_phi: usize,
    n_rings: usize,
}

impl AtomArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn position(&self, index: usize) -> Vector3<f64> {
        self.positions[index]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        (site.ring < self.n_rings && site.azimuth < self.n_phi)
            .then(|| site.ring * self.n_phi + site.azimuth)
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    /// True when every atom lies in the z = 0 plane.
    pub fn is_planar(&self) -> bool {
        self.positions.iter().all(|p| p.z == 0.0)
    }

    /// Closest pair `(a, b, distance)`, or `None` for a single atom.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let d = (self.positions[a] - self.positions[b]).norm();
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        best
    }
}
