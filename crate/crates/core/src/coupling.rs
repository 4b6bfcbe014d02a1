//! Resonant dipole-dipole kernels and the single-excitation coupling matrix.
//!
//! For two atoms separated by `r_ab` with orientations `p_a`, `p_b` and
//! ξ = |k_L|·|r_ab|:
//!
//! ```text
//! f = (3Γ/2) { A sinξ/ξ + B (cosξ/ξ² − sinξ/ξ³) }
//! g = (3Γ/4) { −A cosξ/ξ + B (sinξ/ξ² + cosξ/ξ³) }
//! A = (p_b*·p_a) − (p_b*·r̂)(p_a·r̂)
//! B = (p_b*·p_a) − 3 (p_b*·r̂)(p_a·r̂)
//! ```
//!
//! The coupling matrix is
//! `M_μν = (−F_μν + 2i G_μν [μ≠ν]) e^{−i k_L·(r_μ − r_ν)} / 2` with
//! `F_μμ = Γ`, where `F_μν, G_μν` come from `pair_kernel(p_ν, p_μ, r_μ − r_ν)`
//! so that F is Hermitian for complex orientations.

use std::io::{self, Write};

use faer::{Mat, Side};
use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use crate::geometry::AtomArray;
use crate::polarization::DipoleField;
use crate::units::{self, GAMMA, K_L};
use crate::{CVec3, Error, Result, C64};

/// Lowest eigenvalue of F tolerated before the build is rejected.
pub const DECAY_PSD_TOLERANCE: f64 = 1e-9;

/// Below this ξ the ξ⁻² − ξ⁻³ combination in `f` is evaluated by series.
const SERIES_CUTOFF: f64 = 0.05;

/// Dissipative (`f`) and dispersive (`g`) pair couplings, in units of Γ.
///
/// Both are real for identical orientations and for real fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairKernel {
    pub f: C64,
    pub g: C64,
}

/// (sin ξ − ξ cos ξ)/ξ³, which equals −(cos ξ/ξ² − sin ξ/ξ³).
fn j1_over_xi(xi: f64) -> f64 {
    if xi < SERIES_CUTOFF {
        let x2 = xi * xi;
        1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45_360.0
    } else {
        (xi.sin() - xi * xi.cos()) / (xi * xi * xi)
    }
}

fn sinc(xi: f64) -> f64 {
    if xi < SERIES_CUTOFF {
        let x2 = xi * xi;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    } else {
        xi.sin() / xi
    }
}

/// Orientation factors (A, B) of the generalized kernel.
pub fn geometry_factors(p_a: &CVec3, p_b: &CVec3, r_hat: &Vector3<f64>) -> (C64, C64) {
    let r = r_hat.map(|x| C64::new(x, 0.0));
    let pb_pa = p_b.dotc(p_a);
    let pb_r = p_b.dotc(&r);
    let pa_r = p_a.dot(&r);
    (pb_pa - pb_r * pa_r, pb_pa - pb_r * pa_r * 3.0)
}

pub fn pair_kernel(p_a: &CVec3, p_b: &CVec3, r_ab: &Vector3<f64>) -> Result<PairKernel> {
    let distance = r_ab.norm();
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::SingularKernel {
            a: 0,
            b: 1,
            distance,
            min: 0.0,
        });
    }
    let xi = K_L * distance;
    let (a, b) = geometry_factors(p_a, p_b, &(r_ab / distance));
    let (s, c) = xi.sin_cos();
    let f = (a * sinc(xi) - b * j1_over_xi(xi)) * (1.5 * GAMMA);
    let g = (-a * (c / xi) + b * (s / (xi * xi) + c / (xi * xi * xi))) * (0.75 * GAMMA);
    Ok(PairKernel { f, g })
}

/// Non-Hermitian generator of single-excitation dynamics, together with the
/// decay (F) and shift (G) matrices it was built from.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    m: DMatrix<C64>,
    decay: DMatrix<C64>,
    shift: DMatrix<C64>,
    min_decay_eigenvalue: f64,
}

pub fn build_matrix(array: &AtomArray, field: &DipoleField) -> Result<CouplingMatrix> {
    let n = array.len();
    if field.len() != n {
        return Err(Error::DimensionMismatch {
            what: "dipole field",
            got: field.len(),
            expected: n,
        });
    }
    let k_l = units::k_l();
    let rows: Vec<Vec<(C64, C64)>> = (0..n)
        .into_par_iter()
        .map(|mu| {
            (0..n)
                .map(|nu| {
                    if mu == nu {
                        return Ok((C64::new(GAMMA, 0.0), C64::new(0.0, 0.0)));
                    }
                    let r = array.position(mu) - array.position(nu);
                    pair_kernel(field.orientation(nu), field.orientation(mu), &r)
                        .map(|k| (k.f, k.g))
                        .map_err(|_| Error::SingularKernel {
                            a: mu,
                            b: nu,
                            distance: r.norm(),
                            min: 0.0,
                        })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let decay = DMatrix::from_fn(n, n, |mu, nu| rows[mu][nu].0);
    let shift = DMatrix::from_fn(n, n, |mu, nu| rows[mu][nu].1);
    let m = DMatrix::from_fn(n, n, |mu, nu| {
        let gauge = C64::from_polar(1.0, -k_l.dot(&(array.position(mu) - array.position(nu))));
        let coherent = if mu == nu {
            C64::new(0.0, 0.0)
        } else {
            shift[(mu, nu)] * C64::new(0.0, 2.0)
        };
        (coherent - decay[(mu, nu)]) * gauge * 0.5
    });

    let min_decay_eigenvalue = smallest_hermitian_eigenvalue(&decay)?;
    if min_decay_eigenvalue < -DECAY_PSD_TOLERANCE * GAMMA {
        return Err(Error::NonPhysicalDecay(min_decay_eigenvalue));
    }
    Ok(CouplingMatrix {
        m,
        decay,
        shift,
        min_decay_eigenvalue,
    })
}

fn smallest_hermitian_eigenvalue(a: &DMatrix<C64>) -> Result<f64> {
    let n = a.nrows();
    let mat = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let values = mat
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Consistency("Hermitian eigensolver for F did not converge".into()))?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// F, with Γ on the diagonal.
    pub fn decay(&self) -> &DMatrix<C64> {
        &self.decay
    }

    /// G, with zero diagonal (no self-shift).
    pub fn shift(&self) -> &DMatrix<C64> {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn k_l(&self) -> Vector3<f64> {
        units::k_l()
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn min_decay_eigenvalue(&self) -> f64 {
        self.min_decay_eigenvalue
    }

    /// `row,col,re,im` with one-based indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        for mu in 0..self.dim() {
            for nu in 0..self.dim() {
                let z = self.m[(mu, nu)];
                writeln!(out, "{},{},{:.16e},{:.16e}", mu + 1, nu + 1, z.re, z.im)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RingSpec;
    use crate::polarization::{DipoleField, Polarization};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn real(v: [f64; 3]) -> CVec3 {
        CVec3::new(C64::new(v[0], 0.0), C64::new(v[1], 0.0), C64::new(v[2], 0.0))
    }

    #[test]
    fn small_separation_limit() {
        let x = real([1.0, 0.0, 0.0]);
        for dir in [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.6, 0.8]] {
            let r = Vector3::from(dir) * (1e-4 / K_L);
            let k = pair_kernel(&x, &x, &r).unwrap();
            assert!((k.f.re - 1.0).abs() < 1e-8, "f = {}", k.f);
            assert_eq!(k.f.im, 0.0);
        }
    }

    #[test]
    fn transverse_pair_at_half_period() {
        // ξ = π, A = B = 1: f = (3/2)(0 − 1/π²)
        let x = real([1.0, 0.0, 0.0]);
        let r = Vector3::new(0.0, PI / K_L, 0.0);
        let k = pair_kernel(&x, &x, &r).unwrap();
        let expected = -3.0 / (2.0 * PI * PI);
        assert!((k.f.re - expected).abs() < 1e-15);
        assert!((k.f.re + 0.15198).abs() < 1e-5);
    }

    #[test]
    fn orthogonal_transverse_dipoles_decouple() {
        let k = pair_kernel(
            &real([1.0, 0.0, 0.0]),
            &real([0.0, 1.0, 0.0]),
            &Vector3::new(0.0, 0.0, 0.37),
        )
        .unwrap();
        assert_eq!(k.f, C64::new(0.0, 0.0));
        assert_eq!(k.g, C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_separation_is_rejected() {
        let x = real([1.0, 0.0, 0.0]);
        assert!(matches!(
            pair_kernel(&x, &x, &Vector3::zeros()),
            Err(Error::SingularKernel { .. })
        ));
    }

    #[test]
    fn series_matches_closed_form_at_cutoff() {
        let xi = SERIES_CUTOFF * (1.0 - 1e-12);
        let direct = (xi.sin() - xi * xi.cos()) / xi.powi(3);
        assert!((j1_over_xi(xi) - direct).abs() < 1e-12);
        assert!((sinc(xi) - xi.sin() / xi).abs() < 1e-15);
    }

    #[test]
    fn single_atom_matrix() {
        let array = RingSpec::single(1, 1.0).build().unwrap();
        let field = DipoleField::new(&array, Polarization::LinearX);
        let m = build_matrix(&array, &field).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.matrix()[(0, 0)], C64::new(-0.5, 0.0));
    }

    #[test]
    fn planar_arrays_have_no_gauge_phase() {
        let array = RingSpec::r_stack(6, 0.3, 2).build().unwrap();
        let field = DipoleField::new(&array, Polarization::LinearY);
        let m = build_matrix(&array, &field).unwrap();
        for mu in 0..m.dim() {
            for nu in 0..m.dim() {
                let coherent = if mu == nu { 0.0 } else { 2.0 };
                let expected =
                    (m.shift()[(mu, nu)] * C64::new(0.0, coherent) - m.decay()[(mu, nu)]) * 0.5;
                assert_eq!(m.matrix()[(mu, nu)], expected);
            }
        }
    }

    #[test]
    fn csv_dump_shape() {
        let array = RingSpec::single(2, 0.2).build().unwrap();
        let m = build_matrix(&array, &DipoleField::new(&array, Polarization::LinearX)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row,col,re,im");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,1,-5.0000000000000000e-1,"));
    }

    fn family() -> impl Strategy<Value = Polarization> {
        prop::sample::select(Polarization::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn matrix_invariants(n_phi in 1usize..12, radius in 0.05f64..1.5, n_z in 1usize..3, d_z in 0.1f64..0.8, pol in family()) {
            let array = RingSpec::z_stack(n_phi, radius, n_z, d_z).build().unwrap();
            let field = DipoleField::new(&array, pol);
            let m = build_matrix(&array, &field).unwrap();
            let n = array.len();
            for mu in 0..n {
                prop_assert_eq!(m.matrix()[(mu, mu)], C64::new(-0.5, 0.0));
                for nu in 0..n {
                    let d = m.decay()[(mu, nu)] - m.decay()[(nu, mu)].conj();
                    prop_assert!(d.norm() < 1e-14);
                    if !pol.is_uniform() || pol == Polarization::LinearX || pol == Polarization::LinearY {
                        prop_assert!(m.decay()[(mu, nu)].im.abs() < 1e-15);
                    }
                }
            }
            let tr = m.trace();
            prop_assert!((tr.re + 0.5 * n as f64).abs() < 1e-12 && tr.im.abs() < 1e-12);
            prop_assert!(m.min_decay_eigenvalue() >= -DECAY_PSD_TOLERANCE);
        }

        #[test]
        fn kernel_swap_symmetry(ax in -1.0f64..1.0, ay in -1.0f64..1.0, bx in -1.0f64..1.0, by in -1.0f64..1.0,
                                rx in -1.0f64..1.0, ry in -1.0f64..1.0, rz in -1.0f64..1.0) {
            let r = Vector3::new(rx, ry, rz);
            prop_assume!(r.norm() > 1e-3);
            let pa = CVec3::new(C64::new(ax, ay), C64::new(bx, 0.3), C64::new(by, -0.2));
            let pb = CVec3::new(C64::new(by, bx), C64::new(0.1, ax), C64::new(ay, 0.0));
            let k_ab = pair_kernel(&pa, &pb, &r).unwrap();
            let k_ba = pair_kernel(&pb, &pa, &(-r)).unwrap();
            prop_assert!((k_ab.f - k_ba.f.conj()).norm() < 1e-12 * (1.0 + k_ab.f.norm()));
            prop_assert!((k_ab.g - k_ba.g.conj()).norm() < 1e-12 * (1.0 + k_ab.g.norm()));
        }
    }
}
