//! Cooperative single-excitation emission from ring-shaped atomic arrays.
//!
//! The crate follows one pipeline:
//!
//! 1. [`geometry`] places atoms on single, axially stacked or concentric rings.
//! 2. [`polarization`] assigns each atom a (possibly complex) unit dipole.
//! 3. [`coupling`] evaluates the resonant dipole-dipole kernels and assembles
//!    the non-Hermitian coupling matrix of the single-excitation sector.
//! 4. [`spectrum`] diagonalizes it into collective super-/subradiant modes.
//! 5. [`dynamics`] prepares helical-phase-imprinted states and evolves their
//!    fluorescence amplitude, either through the eigenmodes or by direct
//!    integration.
//! 6. [`farfield`] evaluates the normalized far-field scattering pattern and
//!    its symmetry properties.
//!
//! Units: lengths in resonant wavelengths, rates in the single-atom decay
//! rate, times in its inverse.

// NaN-rejecting `!(x > y)` guards are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod dynamics;
mod error;
pub mod farfield;
pub mod geometry;
mod ode;
pub mod polarization;
pub mod quadrature;
pub mod spectrum;
pub mod symmetry;
pub mod units;

pub use coupling::{build_matrix, pair_kernel, CouplingMatrix, PairKernel};
pub use dynamics::{
    evolve, hpi_state, project, propagate_oracle, weightings, DecayTrace, HpiState, TimeGrid,
};
pub use error::{Error, Result};
pub use farfield::{omega_f, pair_angular_integral, FarField, FarFieldMap};
pub use geometry::{AtomArray, RingSpec, Site, Stack};
pub use polarization::{spatial_field, uniform_field, DipoleField, Polarization};
pub use quadrature::{GaussLegendre, SphereQuadrature};
pub use spectrum::{eigendecompose, EigenSystem};
pub use symmetry::{symmetry_report, SymmetryReport};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Complex 3-vector (dipole orientations).
pub type CVec3 = nalgebra::Vector3<C64>;
