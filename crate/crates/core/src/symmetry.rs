//! Symmetry and directionality diagnostics of a far-field map.

use serde::Serialize;

use crate::farfield::{FarField, FarFieldMap};
use crate::geometry::AtomArray;
use crate::polarization::{DipoleField, Polarization};
use crate::quadrature::SphereQuadrature;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SymmetryReport {
    pub l: i64,
    pub polarization: Polarization,
    /// max |Ω_p(θ, φ + π/2) − Ω_p'(θ, φ)| with p' the quarter-turned family;
    /// absent when N_φ is not a multiple of 4.
    pub c4_deviation: Option<f64>,
    /// max |Ω(θ, φ + 2π/N_φ) − Ω(θ, φ)|; absent for linear polarization or
    /// when the grid cannot represent the rotation.
    pub cn_deviation: Option<f64>,
    /// max |Ω_l − Ω_{N_φ−l}|.
    pub l_mirror_deviation: f64,
    /// max |Ω_{σ+} − Ω_{σ−}| for circular polarization.
    pub handedness_deviation: Option<f64>,
    pub forward_power: f64,
    pub backward_power: f64,
    pub forward_backward_ratio: f64,
    pub omega_forward: f64,
    pub omega_backward: f64,
    pub peak_theta: f64,
    pub peak_phi: f64,
    pub peak_value: f64,
    pub fwhm_theta: f64,
    pub fwhm_phi: f64,
    pub azimuthal_peak_count: usize,
    pub azimuthal_peak_heights: Vec<f64>,
    /// max − min of Ω along φ at the peak θ.
    pub azimuthal_spread: f64,
}

/// Builds the report for the state `l` on `array`, given its already computed
/// `map`. Extra maps needed for the comparisons reuse the grid size of `map`.
pub fn symmetry_report(
    array: &AtomArray,
    field: &DipoleField,
    l: i64,
    map: &FarFieldMap,
    quad: &SphereQuadrature,
) -> Result<SymmetryReport> {
    let (n_theta, n_grid) = (map.n_theta(), map.n_phi());
    let n_phi = array.n_phi();
    let family = field.family();
    let ff = FarField::new(array, field, l)?;

    let c4_deviation = if n_phi.is_multiple_of(4) {
        if !n_grid.is_multiple_of(4) {
            return Err(Error::IncompatibleGrid { n_phi: n_grid, order: 4 });
        }
        let turned = DipoleField::new(array, family.quarter_turn());
        let turned_map = FarField::new(array, &turned, l)?.map(n_theta, n_grid)?;
        Some(map.shifted_diff(&turned_map, n_grid / 4))
    } else {
        None
    };

    let cn_deviation = match family {
        Polarization::LinearX | Polarization::LinearY => None,
        _ if !n_grid.is_multiple_of(n_phi) => {
            log::debug!("grid of {n_grid} azimuths cannot represent C{n_phi}");
            None
        }
        _ => Some(map.shifted_diff(map, n_grid / n_phi)),
    };

    let mirrored = FarField::new(array, field, n_phi as i64 - l)?.map(n_theta, n_grid)?;
    let l_mirror_deviation = map.max_abs_diff(&mirrored);

    let handedness_deviation = match family {
        Polarization::CircularPlus | Polarization::CircularMinus => {
            let other = if family == Polarization::CircularPlus {
                Polarization::CircularMinus
            } else {
                Polarization::CircularPlus
            };
            let other_field = DipoleField::new(array, other);
            let other_map = FarField::new(array, &other_field, l)?.map(n_theta, n_grid)?;
            Some(map.max_abs_diff(&other_map))
        }
        _ => None,
    };

    let (forward_power, backward_power) = ff.hemisphere_powers(quad);
    let forward_backward_ratio = if backward_power > 0.0 {
        forward_power / backward_power
    } else {
        f64::INFINITY
    };

    let (i_peak, j_peak, peak_value) = map.argmax();
    let row = map.row(i_peak);
    let maxima = map.azimuthal_maxima(i_peak);
    let (row_min, row_max) = row
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    Ok(SymmetryReport {
        l,
        polarization: family,
        c4_deviation,
        cn_deviation,
        l_mirror_deviation,
        handedness_deviation,
        forward_power,
        backward_power,
        forward_backward_ratio,
        omega_forward: ff.omega(0.0, 0.0),
        omega_backward: ff.omega(std::f64::consts::PI, 0.0),
        peak_theta: map.theta[i_peak],
        peak_phi: map.phi[j_peak],
        peak_value,
        fwhm_theta: map.fwhm_theta(),
        fwhm_phi: map.fwhm_phi(),
        azimuthal_peak_count: maxima.len(),
        azimuthal_peak_heights: maxima.into_iter().map(|(_, v)| v).collect(),
        azimuthal_spread: row_max - row_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RingSpec;

    fn report(spec: RingSpec, pol: Polarization, l: i64, grid: (usize, usize)) -> SymmetryReport {
        let array = spec.build().unwrap();
        let field = DipoleField::new(&array, pol);
        let map = FarField::new(&array, &field, l).unwrap().map(grid.0, grid.1).unwrap();
        let quad = SphereQuadrature::new(48, 96).unwrap();
        symmetry_report(&array, &field, l, &map, &quad).unwrap()
    }

    #[test]
    fn linear_quarter_turn_covariance() {
        for n in [4, 8, 20] {
            let r = report(RingSpec::single(n, 0.5), Polarization::LinearX, 3, (61, 120));
            assert!(r.c4_deviation.unwrap() < 1e-9, "N={n}");
            assert!(r.cn_deviation.is_none());
        }
        let r = report(RingSpec::single(6, 0.5), Polarization::LinearX, 3, (61, 120));
        assert!(r.c4_deviation.is_none());
    }

    #[test]
    fn circular_cn_and_handedness() {
        let r = report(RingSpec::single(3, 0.2), Polarization::CircularPlus, 1, (91, 360));
        assert!(r.cn_deviation.unwrap() < 1e-12);
        assert!(r.handedness_deviation.unwrap() < 1e-12);
        assert_eq!(r.azimuthal_peak_count, 3);
    }

    #[test]
    fn single_planar_ring_is_forward_backward_symmetric() {
        let r = report(RingSpec::single(5, 0.3), Polarization::LinearY, 5, (31, 60));
        assert!((r.forward_backward_ratio - 1.0).abs() < 1e-10);
        assert!((r.omega_forward - r.omega_backward).abs() < 1e-10);
    }

    #[test]
    fn incompatible_grid() {
        let array = RingSpec::single(4, 0.5).build().unwrap();
        let field = DipoleField::new(&array, Polarization::LinearX);
        let map = FarField::new(&array, &field, 1).unwrap().map(11, 30).unwrap();
        let quad = SphereQuadrature::new(8, 16).unwrap();
        let err = symmetry_report(&array, &field, 1, &map, &quad).unwrap_err();
        assert!(matches!(err, Error::IncompatibleGrid { order: 4, .. }));
    }

    #[test]
    fn serializes() {
        let r = report(RingSpec::single(4, 0.5), Polarization::Radial, 2, (21, 40));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"polarization\":\"radial\""));
    }
}
