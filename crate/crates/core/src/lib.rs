//! Information-propagation bounds for one-dimensional lattices with
//! `1/r^alpha` couplings, and exact quench dynamics of long-range XY and
//! transverse-field Ising chains to test them against.
//!
//! * [`couplings`]: geometry, `J_ij`, and the summed coupling λ.
//! * [`hopseries`]: exact hopping sums `J_n(i,j)` and the bounds on them.
//! * [`bounds`]: hybrid and Hastings-Koma bounds, μ optimization, causal contours.
//! * [`xy`]: XY chain via its single-excitation reduction.
//! * [`tfim`] and [`krylov`]: transverse-field Ising chain by Lanczos time stepping.
//! * [`oracle`]: dense exact diagonalization used as ground truth.
//! * [`grid`]: CSV/JSON result tables.

pub mod bounds;
pub mod couplings;
pub mod error;
pub mod grid;
pub mod hopseries;
pub mod krylov;
pub mod oracle;
pub mod search;
pub mod tfim;
pub mod xy;
pub mod zeta;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
