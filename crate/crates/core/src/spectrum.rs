//! Collective eigenmodes of the coupling matrix.
//!
//! Modes are sorted by ascending decay rate Γ_m = −2 Re λ_m, ties broken by
//! ascending Im λ_m. The cooperative shift of a mode is reported as Im λ_m;
//! its sign convention is not physically fixed, so comparisons should use
//! |Im λ_m|.

use std::io::{self, Write};

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use nalgebra::DMatrix;

use crate::coupling::CouplingMatrix;
use crate::units::GAMMA;
use crate::{Error, Result, C64};

/// Eigenvector condition numbers above this mark the decomposition as
/// unreliable.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Decay rates in `[-RATE_CLAMP, 0)` are reported as zero.
pub const RATE_CLAMP: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EigenSystem {
    lambdas: Vec<C64>,
    u: DMatrix<C64>,
    u_inv: DMatrix<C64>,
    order: Vec<usize>,
    condition: f64,
    residual: f64,
    inverse_defect: f64,
}

pub fn eigendecompose(coupling: &CouplingMatrix) -> Result<EigenSystem> {
    let m = coupling.matrix();
    let n = m.nrows();
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Consistency("coupling matrix has non-finite entries".into()));
    }
    let mat = Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = mat.eigen().map_err(|_| Error::EigenNoConvergence {
        dump: dump_matrix(m),
    })?;
    let raw_values = evd.S().column_vector();
    let raw_vectors = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (raw_values[a], raw_values[b]);
        (-2.0 * la.re)
            .total_cmp(&(-2.0 * lb.re))
            .then(la.im.total_cmp(&lb.im))
    });

    let lambdas: Vec<C64> = order.iter().map(|&k| raw_values[k]).collect();
    let mut u = DMatrix::from_fn(n, n, |i, j| raw_vectors[(i, order[j])]);
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }

    let u_faer = Mat::<C64>::from_fn(n, n, |i, j| u[(i, j)]);
    let inv = u_faer.partial_piv_lu().inverse();
    let u_inv = DMatrix::from_fn(n, n, |i, j| inv[(i, j)]);

    let condition = one_norm(&u) * one_norm(&u_inv);
    let m_norm = m.norm().max(f64::MIN_POSITIVE);
    let residual = (0..n)
        .map(|k| (m * u.column(k) - u.column(k) * lambdas[k]).norm() / m_norm)
        .fold(0.0, f64::max);
    let inverse_defect = (&u * &u_inv - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let system = EigenSystem {
        lambdas,
        u,
        u_inv,
        order,
        condition,
        residual,
        inverse_defect,
    };
    if system.is_ill_conditioned() {
        log::warn!("eigenvector matrix is near-defective: cond ≈ {condition:e}");
    }
    Ok(system)
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn dump_matrix(m: &DMatrix<C64>) -> String {
    let mut buf = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|z| format!("{:.6e}{:+.6e}i", z.re, z.im)).collect();
        buf.push_str(&line.join(" "));
        buf.push('\n');
    }
    buf
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Eigenvalues in mode order.
    pub fn lambdas(&self) -> &[C64] {
        &self.lambdas
    }

    /// Right eigenvectors as unit-norm columns, in mode order.
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn inverse(&self) -> &DMatrix<C64> {
        &self.u_inv
    }

    /// `order[m]` is the solver's original index of mode `m`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-norm condition number of the eigenvector matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_ill_conditioned(&self) -> bool {
        !(self.condition <= CONDITION_LIMIT)
    }

    /// max_m ‖M u_m − λ_m u_m‖ / ‖M‖_F.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// max |(U U⁻¹ − 1)_ij|.
    pub fn inverse_defect(&self) -> f64 {
        self.inverse_defect
    }

    /// Γ_m = −2 Re λ_m in ascending order.
    pub fn decay_rates(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .enumerate()
            .map(|(m, l)| {
                let rate = -2.0 * l.re;
                if rate < 0.0 {
                    if rate >= -RATE_CLAMP * GAMMA {
                        log::debug!("clamping decay rate {rate:e} of mode {m} to zero");
                        return 0.0;
                    }
                    log::warn!("mode {m} has negative decay rate {rate:e}");
                }
                rate
            })
            .collect()
    }

    /// Im λ_m in mode order.
    pub fn shifts(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.im).collect()
    }

    /// Σ_m Γ_m, which equals N·Γ exactly in theory.
    pub fn decay_sum(&self) -> f64 {
        self.lambdas.iter().map(|l| -2.0 * l.re).sum()
    }

    /// Relative deviation of the decay-rate sum from N·Γ.
    pub fn sum_rule_error(&self) -> f64 {
        let expected = self.len() as f64 * GAMMA;
        (self.decay_sum() - expected).abs() / expected
    }

    /// `mode_index,decay_rate_over_Gamma,shift_over_Gamma`, one-based modes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "mode_index,decay_rate_over_Gamma,shift_over_Gamma")?;
        for (m, (rate, shift)) in self.decay_rates().into_iter().zip(self.shifts()).enumerate() {
            writeln!(out, "{},{:.16e},{:.16e}", m + 1, rate / GAMMA, shift / GAMMA)?;
        }
        Ok(())
    }
}
