//! Per-atom dipole orientations for the supported excitation polarizations.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::AtomArray;
use crate::{CVec3, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    LinearX,
    LinearY,
    CircularPlus,
    CircularMinus,
    Radial,
    Azimuthal,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Self::LinearX,
        Self::LinearY,
        Self::CircularPlus,
        Self::CircularMinus,
        Self::Radial,
        Self::Azimuthal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LinearX => "linear_x",
            Self::LinearY => "linear_y",
            Self::CircularPlus => "circular_plus",
            Self::CircularMinus => "circular_minus",
            Self::Radial => "radial",
            Self::Azimuthal => "azimuthal",
        }
    }

    /// Same orientation on every atom.
    pub fn is_uniform(self) -> bool {
        !matches!(self, Self::Radial | Self::Azimuthal)
    }

    /// Family obtained by rotating every dipole by +π/2 about ẑ, up to a
    /// global phase.
    pub fn quarter_turn(self) -> Self {
        match self {
            Self::LinearX => Self::LinearY,
            Self::LinearY => Self::LinearX,
            other => other,
        }
    }

    fn uniform_vector(self) -> Option<CVec3> {
        let re = |x: f64| C64::new(x, 0.0);
        let s = FRAC_1_SQRT_2;
        match self {
            Self::LinearX => Some(CVec3::new(re(1.0), re(0.0), re(0.0))),
            Self::LinearY => Some(CVec3::new(re(0.0), re(1.0), re(0.0))),
            Self::CircularPlus => Some(CVec3::new(re(s), C64::new(0.0, s), re(0.0))),
            Self::CircularMinus => Some(CVec3::new(re(s), C64::new(0.0, -s), re(0.0))),
            Self::Radial | Self::Azimuthal => None,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown polarization {s:?}"))
    }
}

/// Unit dipole orientation of every atom in an array.
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleField {
    orientations: Vec<CVec3>,
    family: Polarization,
}

impl DipoleField {
    /// Field of any family on `array`.
    pub fn new(array: &AtomArray, family: Polarization) -> Self {
        if family.is_uniform() {
            uniform_field(array, family).expect("uniform family")
        } else {
            spatial_field(array, family).expect("spatial family")
        }
    }

    pub fn family(&self) -> Polarization {
        self.family
    }

    pub fn orientations(&self) -> &[CVec3] {
        &self.orientations
    }

    pub fn orientation(&self, index: usize) -> &CVec3 {
        &self.orientations[index]
    }

    pub fn len(&self) -> usize {
        self.orientations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orientations.is_empty()
    }
}

pub fn uniform_field(array: &AtomArray, family: Polarization) -> Result<DipoleField> {
    let p = family
        .uniform_vector()
        .ok_or(Error::WrongFamily(family.as_str(), "expected a uniform polarization"))?;
    Ok(DipoleField {
        orientations: vec![p; array.len()],
        family,
    })
}

/// Radial or azimuthal field. The orientation of atom α is evaluated at
/// φ(α) = 2π·α_φ/N_φ with the one-based azimuthal index α_φ, i.e. one slot
/// ahead of the atom's own angle.
pub fn spatial_field(array: &AtomArray, family: Polarization) -> Result<DipoleField> {
    if family.is_uniform() {
        return Err(Error::WrongFamily(
            family.as_str(),
            "expected radial or azimuthal polarization",
        ));
    }
    let n_phi = array.n_phi() as f64;
    let orientations = array
        .sites()
        .iter()
        .map(|site| {
            let phi = TAU * (site.azimuth + 1) as f64 / n_phi;
            let (s, c) = phi.sin_cos();
            let (x, y) = match family {
                Polarization::Radial => (c, s),
                _ => (-s, c),
            };
            CVec3::new(C64::new(x, 0.0), C64::new(y, 0.0), C64::new(0.0, 0.0))
        })
        .collect();
    Ok(DipoleField {
        orientations,
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RingSpec;

    fn hermitian_norm(p: &CVec3) -> f64 {
        p.iter().map(|c| c.norm_sqr()).sum()
    }

    #[test]
    fn linear_x_on_two_atoms() {
        let array = RingSpec::single(2, 0.15).build().unwrap();
        let field = uniform_field(&array, Polarization::LinearX).unwrap();
        for p in field.orientations() {
            assert_eq!(p.map(|c| c.re), nalgebra::Vector3::new(1.0, 0.0, 0.0));
            assert!(p.iter().all(|c| c.im == 0.0));
        }
    }

    #[test]
    fn circular_is_normalized() {
        let array = RingSpec::r_stack(7, 0.3, 2).build().unwrap();
        for family in [Polarization::CircularPlus, Polarization::CircularMinus] {
            let field = uniform_field(&array, family).unwrap();
            for p in field.orientations() {
                assert!((hermitian_norm(p) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spatial_angles() {
        let array = RingSpec::single(4, 0.2).build().unwrap();
        let radial = spatial_field(&array, Polarization::Radial).unwrap();
        // α_φ = 1 → φ = π/2
        let p = radial.orientation(0).map(|c| c.re);
        assert!((p - nalgebra::Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);

        let azimuthal = spatial_field(&array, Polarization::Azimuthal).unwrap();
        // α_φ = 4 → φ = 2π
        let p = azimuthal.orientation(3).map(|c| c.re);
        assert!((p - nalgebra::Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn radial_plus_i_azimuthal_is_circular() {
        let array = RingSpec::z_stack(9, 0.4, 2, 0.3).build().unwrap();
        let er = spatial_field(&array, Polarization::Radial).unwrap();
        let ephi = spatial_field(&array, Polarization::Azimuthal).unwrap();
        let i = C64::new(0.0, 1.0);
        for (idx, site) in array.sites().iter().enumerate() {
            let phi = TAU * (site.azimuth + 1) as f64 / 9.0;
            let phase = C64::from_polar(1.0, -phi);
            for (sign, expected_y) in [(1.0, i), (-1.0, -i)] {
                let lhs = er.orientation(idx) + ephi.orientation(idx) * (i * sign);
                let phase = if sign > 0.0 { phase } else { phase.conj() };
                let rhs = CVec3::new(C64::new(1.0, 0.0), expected_y, C64::new(0.0, 0.0)) * phase;
                assert!((lhs - rhs).norm() < 1e-14);
            }
            let dot: C64 = er.orientation(idx).dot(ephi.orientation(idx));
            assert!(dot.norm() < 1e-15);
            assert!((hermitian_norm(er.orientation(idx)) - 1.0).abs() < 1e-12);
            assert_eq!(er.orientation(idx).z, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn family_checks() {
        let array = RingSpec::single(3, 0.2).build().unwrap();
        assert!(uniform_field(&array, Polarization::Radial).is_err());
        assert!(spatial_field(&array, Polarization::LinearX).is_err());
        assert_eq!("circular_minus".parse::<Polarization>(), Ok(Polarization::CircularMinus));
        assert!("elliptic".parse::<Polarization>().is_err());
        assert_eq!(Polarization::LinearX.quarter_turn(), Polarization::LinearY);
        assert_eq!(Polarization::Radial.quarter_turn(), Polarization::Radial);
    }
}
