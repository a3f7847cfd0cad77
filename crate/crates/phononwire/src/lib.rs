//! Coupled-mode toolkit for a single-mode phononic waveguide read out through
//! an optomechanical cavity.
//!
//! The model is a localized mechanical transducer mode coupled on one side to
//! an optical cavity (linearized, red-detuned drive) and on the other side to
//! a comb of standing-wave waveguide modes. The crate covers four layers:
//!
//! * [`system`]: parameter containers and spectrum grids,
//! * [`response`]: driven reflection, two-tone response and thermal spectra
//!   built from one dynamical matrix,
//! * [`modal`]: eigenvalue reports, sympathetic cooling rates, cooperativities
//!   and waveguide propagation metrics,
//! * [`estimation`]: coherent-response fitting on top of a small simplex
//!   optimizer in [`optimize`],
//! * [`thermometry`]: calibrated conversion of detected power and noise
//!   spectra into phonon occupancies,
//! * [`disorder`]: tight-binding disorder ensembles and dephasing estimates.
//!
//! Every frequency and rate inside the crate is in angular units (rad/s).
//! Conversion to and from Hz happens at the I/O boundary, never here.

pub mod disorder;
pub mod error;
pub mod estimation;
pub mod modal;
pub mod optimize;
pub mod response;
pub mod system;
pub mod thermometry;
mod tridiag;

pub use error::{Error, Result};

/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// 2*pi, handy for Hz <-> rad/s conversions at call sites.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
