//! Helical-phase-imprinted (HPI) states and their fluorescence dynamics.
//!
//! An HPI state with OAM index `l` has bare-state amplitudes
//! `c_μ = e^{i k_L·r_μ} e^{i 2π l (μ_φ − 1)/N_φ} / √N`. The coupling matrix is
//! written in the gauge that strips the traveling phase, so the dynamics act
//! on the imprint vector `φ_μ = e^{i 2π l (μ_φ − 1)/N_φ} / √N` alone and the
//! fluorescence amplitude is the overlap `h_l(t) = ⟨φ| e^{M t} |φ⟩`.
//!
//! Two independent routes evaluate it: the eigenmode expansion
//! `h_l(t) = Σ_m v_m e^{λ_m t} w_m` ([`evolve`]) and direct integration of
//! `d' = M d` ([`propagate_oracle`]).

use std::f64::consts::TAU;
use std::io::{self, Write};

use crate::coupling::CouplingMatrix;
use crate::geometry::AtomArray;
use crate::ode::{self, Tolerance};
use crate::spectrum::EigenSystem;
use crate::units;
use crate::{Error, Result, C64};

/// Relative and absolute tolerance of the propagator oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Projections {
    pub v: Vec<C64>,
    pub w: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HpiState {
    l: i64,
    l_reduced: usize,
    n_phi: usize,
    imprint: Vec<C64>,
    amplitudes: Vec<C64>,
    projections: Option<Projections>,
}

/// Imprinted phase e^{i 2π l a / n} with the product reduced exactly mod n.
fn imprint_phase(l_reduced: usize, azimuth: usize, n_phi: usize) -> C64 {
    let k = (l_reduced * azimuth) % n_phi;
    C64::from_polar(1.0, TAU * k as f64 / n_phi as f64)
}

pub fn hpi_state(array: &AtomArray, l: i64) -> HpiState {
    let n_phi = array.n_phi();
    let l_reduced = l.rem_euclid(n_phi as i64) as usize;
    let norm = 1.0 / (array.len() as f64).sqrt();
    let k_l = units::k_l();
    let imprint: Vec<C64> = array
        .sites()
        .iter()
        .map(|site| imprint_phase(l_reduced, site.azimuth, n_phi) * norm)
        .collect();
    let amplitudes = imprint
        .iter()
        .zip(array.positions())
        .map(|(c, r)| c * C64::from_polar(1.0, k_l.dot(r)))
        .collect();
    HpiState {
        l,
        l_reduced,
        n_phi,
        imprint,
        amplitudes,
        projections: None,
    }
}

impl HpiState {
    pub fn l(&self) -> i64 {
        self.l
    }

    /// `l` reduced into `[0, N_φ)`.
    pub fn l_reduced(&self) -> usize {
        self.l_reduced
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Bare-state amplitudes including the traveling phase.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitudes in the gauge of the coupling matrix (imprinted phase only).
    pub fn imprint(&self) -> &[C64] {
        &self.imprint
    }

    pub fn projections(&self) -> Option<&Projections> {
        self.projections.as_ref()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// ⟨self|other⟩ on the bare-state amplitudes.
    pub fn overlap(&self, other: &HpiState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Σ_m v_m w_m, which is h_l(0) and equals one.
    pub fn completeness(&self) -> Option<C64> {
        self.projections
            .as_ref()
            .map(|p| p.v.iter().zip(&p.w).map(|(v, w)| v * w).sum())
    }

    fn require_projections(&self) -> Result<&Projections> {
        self.projections.as_ref().ok_or(Error::NotProjected)
    }
}

/// Projects the state on the eigenmodes:
/// `v_m = Σ_μ U_μm e^{−i2πl(μ_φ−1)/N_φ}/√N`, `w_m = Σ_ν U⁻¹_mν e^{i2πl(ν_φ−1)/N_φ}/√N`.
pub fn project(state: &HpiState, eig: &EigenSystem) -> Result<HpiState> {
    if eig.len() != state.len() {
        return Err(Error::DimensionMismatch {
            what: "eigensystem",
            got: eig.len(),
            expected: state.len(),
        });
    }
    if eig.is_ill_conditioned() {
        return Err(Error::IllConditioned(eig.condition_number()));
    }
    let u = eig.eigenvectors();
    let u_inv = eig.inverse();
    let n = state.len();
    let v = (0..n)
        .map(|m| (0..n).map(|mu| u[(mu, m)] * state.imprint[mu].conj()).sum())
        .collect();
    let w = (0..n)
        .map(|m| (0..n).map(|nu| u_inv[(m, nu)] * state.imprint[nu]).sum())
        .collect();
    Ok(HpiState {
        projections: Some(Projections { v, w }),
        ..state.clone()
    })
}

/// Evaluates h_l(t) through the eigenmode expansion.
pub fn evolve(state: &HpiState, eig: &EigenSystem, times: &TimeGrid) -> Result<DecayTrace> {
    let p = state.require_projections()?;
    if eig.len() != p.v.len() {
        return Err(Error::DimensionMismatch {
            what: "eigensystem",
            got: eig.len(),
            expected: p.v.len(),
        });
    }
    let h = times
        .times()
        .iter()
        .map(|&t| {
            eig.lambdas()
                .iter()
                .zip(p.v.iter().zip(&p.w))
                .map(|(lambda, (v, w))| v * (lambda * t).exp() * w)
                .sum()
        })
        .collect();
    Ok(DecayTrace::new(times.times().to_vec(), h))
}

/// Normalized weightings |v_m w_m|² / Σ |v_m w_m|² in mode order.
pub fn weightings(state: &HpiState) -> Result<Vec<f64>> {
    let p = state.require_projections()?;
    let raw: Vec<f64> = p.v.iter().zip(&p.w).map(|(v, w)| (v * w).norm_sqr()).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroProjections);
    }
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// h_l(t) by adaptive integration of `d' = M d` from `d(0) = φ`.
pub fn propagate_oracle(
    coupling: &CouplingMatrix,
    state: &HpiState,
    times: &TimeGrid,
) -> Result<DecayTrace> {
    propagate_oracle_with_tolerance(coupling, state, times, ORACLE_TOLERANCE)
}

pub fn propagate_oracle_with_tolerance(
    coupling: &CouplingMatrix,
    state: &HpiState,
    times: &TimeGrid,
    tolerance: f64,
) -> Result<DecayTrace> {
    let m = coupling.matrix();
    let n = m.nrows();
    if n != state.len() {
        return Err(Error::DimensionMismatch {
            what: "coupling matrix",
            got: n,
            expected: state.len(),
        });
    }
    let tol = Tolerance {
        rtol: tolerance,
        atol: tolerance,
        ..Tolerance::default()
    };
    let rhs = |_t: f64, y: &[C64], dy: &mut [C64]| {
        for (i, out) in dy.iter_mut().enumerate() {
            *out = m.row(i).iter().zip(y).map(|(a, b)| a * b).sum();
        }
    };
    let states = ode::integrate(rhs, 0.0, &state.imprint, times.times(), tol)?;
    let h = states
        .iter()
        .map(|d| state.imprint.iter().zip(d).map(|(p, x)| p.conj() * x).sum())
        .collect();
    Ok(DecayTrace::new(times.times().to_vec(), h))
}

/// Sampling times, in 1/Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    /// `n` log-spaced points over `[t_min, t_max]`.
    pub fn log_spaced(n: usize, t_min: f64, t_max: f64) -> Result<Self> {
        if n < 2 || !(t_min > 0.0) || !(t_max > t_min) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "log grid needs n ≥ 2 and 0 < t_min < t_max (got n={n}, [{t_min}, {t_max}])"
            )));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let mut times: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        times[0] = t_min;
        times[n - 1] = t_max;
        Ok(Self(times))
    }

    pub fn linear(n: usize, t_max: f64) -> Result<Self> {
        if n < 2 || !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "linear grid needs n ≥ 2 and t_max > 0 (got n={n}, t_max={t_max})"
            )));
        }
        Ok(Self((0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()))
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        let ok = times.iter().all(|t| t.is_finite() && *t >= 0.0)
            && times.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(Error::InvalidGrid(
                "times must be finite, non-negative and non-decreasing".into(),
            ));
        }
        Ok(Self(times))
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }
}

impl Default for TimeGrid {
    /// 200 log-spaced points over [10⁻³, 20]/Γ.
    fn default() -> Self {
        Self::log_spaced(200, 1e-3, 20.0).expect("valid default grid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub h: Vec<C64>,
    pub intensity: Vec<f64>,
}

impl DecayTrace {
    pub fn new(times: Vec<f64>, h: Vec<C64>) -> Self {
        let intensity = h.iter().map(|z| z.norm_sqr()).collect();
        Self { times, h, intensity }
    }

    /// max_t |h_self(t) − h_other(t)|.
    pub fn max_abs_diff(&self, other: &DecayTrace) -> f64 {
        self.h
            .iter()
            .zip(&other.h)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `t,re_h,im_h,intensity`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,re_h,im_h,intensity")?;
        for ((t, h), i) in self.times.iter().zip(&self.h).zip(&self.intensity) {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", t, h.re, h.im, i)?;
        }
        Ok(())
    }
}

/// `mode_index,weighting`, one-based modes.
pub fn write_weightings_csv<W: Write>(weights: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "mode_index,weighting")?;
    for (m, w) in weights.iter().enumerate() {
        writeln!(out, "{},{:.16e}", m + 1, w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_matrix;
    use crate::geometry::RingSpec;
    use crate::polarization::{DipoleField, Polarization};
    use crate::spectrum::eigendecompose;

    fn setup(spec: RingSpec, pol: Polarization) -> (AtomArray, CouplingMatrix, EigenSystem) {
        let array = spec.build().unwrap();
        let m = build_matrix(&array, &DipoleField::new(&array, pol)).unwrap();
        let e = eigendecompose(&m).unwrap();
        (array, m, e)
    }

    #[test]
    fn two_atom_states() {
        let array = RingSpec::single(2, 0.15).build().unwrap();
        let s = 1.0 / 2f64.sqrt();
        let odd = hpi_state(&array, 1);
        assert!((odd.amplitudes()[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((odd.amplitudes()[1] - C64::new(-s, 0.0)).norm() < 1e-15);
        let even = hpi_state(&array, 2);
        assert!((even.amplitudes()[1] - C64::new(s, 0.0)).norm() < 1e-15);
        assert_eq!(even.l_reduced(), 0);
    }

    #[test]
    fn l_wraps_to_symmetric_state() {
        let array = RingSpec::single(20, 0.5).build().unwrap();
        for l in [0, 20, -20, 40] {
            let state = hpi_state(&array, l);
            for c in state.amplitudes() {
                assert!((c - C64::new(1.0 / 20f64.sqrt(), 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(hpi_state(&array, 25).l_reduced(), 5);
        assert_eq!(hpi_state(&array, -1).l_reduced(), 19);
    }

    #[test]
    fn traveling_phase_on_stacks() {
        let array = RingSpec::z_stack(4, 0.3, 2, 0.25).build().unwrap();
        let state = hpi_state(&array, 1);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        for (mu, c) in state.amplitudes().iter().enumerate() {
            let phase = C64::from_polar(1.0, units::K_L * array.position(mu).z);
            assert!((c - state.imprint()[mu] * phase).norm() < 1e-15);
        }
    }

    #[test]
    fn de_moivre_orthogonality() {
        let array = RingSpec::single(7, 0.2).build().unwrap();
        for l in 1..=7 {
            for lp in 1..=7 {
                let o = hpi_state(&array, l).overlap(&hpi_state(&array, lp));
                let expected = if l == lp { 1.0 } else { 0.0 };
                assert!((o - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_atom_dynamics() {
        let (array, m, e) = setup(RingSpec::single(1, 1.0), Polarization::LinearX);
        let state = project(&hpi_state(&array, 0), &e).unwrap();
        let p = state.projections().unwrap();
        assert!((p.v[0].norm() - 1.0).abs() < 1e-15);
        assert!((p.v[0] * p.w[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let grid = TimeGrid::default();
        let trace = evolve(&state, &e, &grid).unwrap();
        let oracle = propagate_oracle(&m, &state, &grid).unwrap();
        for (i, &t) in grid.times().iter().enumerate() {
            assert!((trace.h[i] - C64::new((-0.5 * t).exp(), 0.0)).norm() < 1e-14);
            assert!((trace.intensity[i] - (-t).exp()).abs() < 1e-14);
            assert!((oracle.h[i] - trace.h[i]).norm() < 1e-9);
        }
        assert_eq!(weightings(&state).unwrap(), vec![1.0]);
    }

    #[test]
    fn antisymmetric_pair_is_single_pole() {
        let (array, m, e) = setup(RingSpec::single(2, 0.15), Polarization::LinearX);
        let state = project(&hpi_state(&array, 1), &e).unwrap();
        let f12 = m.decay()[(0, 1)].re;
        let grid = TimeGrid::linear(50, 10.0).unwrap();
        let trace = evolve(&state, &e, &grid).unwrap();
        for (t, i) in grid.times().iter().zip(&trace.intensity) {
            let expected = (-(1.0 - f12) * t).exp();
            assert!((i - expected).abs() < 1e-12 * expected.max(1e-300) + 1e-14);
        }
        let w = weightings(&state).unwrap();
        // subradiant mode comes first
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1] < 1e-12);
    }

    #[test]
    fn symmetric_pair_oracle_decay_rate() {
        let (array, m, _) = setup(RingSpec::single(2, 0.15), Polarization::LinearX);
        let state = hpi_state(&array, 2);
        let grid = TimeGrid::linear(11, 5.0).unwrap();
        let trace = propagate_oracle(&m, &state, &grid).unwrap();
        let f12 = m.decay()[(0, 1)].re;
        let slope = -(trace.intensity[10].ln() - trace.intensity[5].ln()) / 2.5;
        assert!((slope - (1.0 + f12)).abs() < 1e-6, "slope {slope} vs {}", 1.0 + f12);
    }

    #[test]
    fn weightings_migrate_to_subradiant_modes() {
        let (array, _, e) = setup(RingSpec::single(20, 0.5), Polarization::LinearX);
        let w10 = weightings(&project(&hpi_state(&array, 10), &e).unwrap()).unwrap();
        let argmax = |w: &[f64]| {
            w.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_eq!(argmax(&w10), 0);
        assert!((w10.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let w5 = weightings(&project(&hpi_state(&array, 5), &e).unwrap()).unwrap();
        let significant: Vec<usize> = (0..20).filter(|&m| w5[m] > 0.05).collect();
        assert!(significant.len() >= 2, "{w5:?}");
        assert!(significant.iter().all(|&m| m > 0 && m < 19));
    }

    #[test]
    fn subradiant_state_outlives_superradiant() {
        let (array, _, e) = setup(RingSpec::single(20, 0.5), Polarization::LinearX);
        let grid = TimeGrid::from_times(vec![10.0]).unwrap();
        let late = |l| {
            let s = project(&hpi_state(&array, l), &e).unwrap();
            evolve(&s, &e, &grid).unwrap().intensity[0]
        };
        assert!(late(10) > late(1));
    }

    #[test]
    fn missing_projection_is_an_error() {
        let (array, _, e) = setup(RingSpec::single(3, 0.2), Polarization::LinearX);
        let state = hpi_state(&array, 1);
        assert!(matches!(weightings(&state), Err(Error::NotProjected)));
        assert!(matches!(
            evolve(&state, &e, &TimeGrid::default()),
            Err(Error::NotProjected)
        ));
    }

    #[test]
    fn time_grids() {
        let g = TimeGrid::default();
        assert_eq!(g.times().len(), 200);
        assert_eq!(g.times()[0], 1e-3);
        assert_eq!(g.times()[199], 20.0);
        assert!(g.times().windows(2).all(|w| w[0] < w[1]));
        assert!(TimeGrid::log_spaced(1, 1.0, 2.0).is_err());
        assert!(TimeGrid::from_times(vec![1.0, 0.5]).is_err());
    }
}
