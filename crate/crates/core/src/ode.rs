//! Dormand–Prince 5(4) integrator for complex vector ODEs.

use crate::{Error, Result, C64};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights are A[6]; the embedded 4th-order solution uses these.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 10_000_000,
        }
    }
}

/// Integrates `y' = rhs(t, y)` from `(t0, y0)`, returning the state at every
/// time in `outputs` (non-decreasing, all ≥ `t0`). Steps are shortened to land
/// exactly on output times.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    tol: Tolerance,
) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut results = Vec::with_capacity(outputs.len());

    rhs(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], tol);
    let mut steps = 0usize;

    for &target in outputs {
        if target < t {
            return Err(Error::Integration {
                t,
                reason: format!("output time {target} precedes current time"),
            });
        }
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: "step limit exceeded".into(),
                });
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h };

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (step * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                rhs(t + C[s] * step, &stage, &mut k[s]);
            }
            // stage 6 evaluated the 5th-order solution (FSAL)
            y_new.copy_from_slice(&stage);

            // Error is measured on the whole state in the 2-norm, so that any
            // unit-norm projection of it (such as h_l) inherits the tolerance.
            let mut diff_sq = 0.0;
            for i in 0..n {
                let mut y4 = y[i];
                for (j, kj) in k.iter().enumerate() {
                    if B4[j] != 0.0 {
                        y4 += kj[i] * (step * B4[j]);
                    }
                }
                diff_sq += (y_new[i] - y4).norm_sqr();
            }
            let scale = tol.atol + tol.rtol * norm2(&y).max(norm2(&y_new));
            let err = diff_sq.sqrt() / scale;
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a clipped final step says nothing about the natural step size
            if !(last && err <= 1.0) || factor < 1.0 {
                h = step * factor;
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
        }
        results.push(y.clone());
    }
    Ok(results)
}

fn norm2(y: &[C64]) -> f64 {
    y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn initial_step(y: &[C64], dy: &[C64], tol: Tolerance) -> f64 {
    let scale = tol.atol + tol.rtol * norm2(y);
    let d0 = norm2(y) / scale;
    let d1 = norm2(dy) / scale;
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1e-2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let rate = C64::new(-0.5, 2.0);
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let out = integrate(
            |_, y, dy| dy[0] = rate * y[0],
            0.0,
            &[C64::new(1.0, 0.0)],
            &times,
            Tolerance::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&out) {
            let exact = (rate * *t).exp();
            assert!((y[0] - exact).norm() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator() {
        // y0' = y1, y1' = -y0
        let times = [0.0, 1.0, 3.0, 10.0];
        let out = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            &times,
            Tolerance::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&out) {
            assert!((y[0].re - t.cos()).abs() < 1e-9);
            assert!((y[1].re + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_backward_outputs() {
        let err = integrate(
            |_, y, dy| dy[0] = -y[0],
            1.0,
            &[C64::new(1.0, 0.0)],
            &[0.5],
            Tolerance::default(),
        );
        assert!(err.is_err());
    }
}
