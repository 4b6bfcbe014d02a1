//! Unit system: lengths in λ, rates in Γ, time in 1/Γ.

use std::f64::consts::TAU;

/// Single-atom natural decay rate.
pub const GAMMA: f64 = 1.0;

/// Magnitude of the excitation wavevector, 2π/λ.
pub const K_L: f64 = TAU;

/// Excitation wavevector, fixed along +ẑ.
pub fn k_l() -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(0.0, 0.0, K_L)
}
