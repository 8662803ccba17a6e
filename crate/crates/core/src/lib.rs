//! Spectral data of the quarter-lattice Hamiltonian with a corner contact
//! interaction.
//!
//! The operator acts on `l2(Z+^2)` as `H = H0 + V`, where `H0` is `-lambda`
//! times the adjacency of the quarter lattice (boundary rows simply lose
//! their missing neighbours) and `V = mu * |e00><e00|`. In the renormalized
//! energy `nu = E / lambda` the essential spectrum is `[-4, 4]` and there is
//! at most one isolated eigenvalue, which exists iff `|lambda / mu|` is below
//! `c = 2 - 16 / (3 pi)`.
//!
//! Modules:
//!
//! - [`model`]: parameters, wave grids and the action of `H`.
//! - [`curve`]: the algebraic curve `Q(x, y) = 0`, its branch points and
//!   branches on the unit circle.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration.
//! - [`solver`]: the eigenvalue integral, regime classification and the
//!   root finder for the discrete eigenvalue.
//! - [`eigenvector`]: bound-state reconstruction from contour moments and
//!   residual certificates.
//! - [`oracle`]: truncated-lattice matrices and Lanczos / dense eigensolvers
//!   used as independent ground truth.
//! - [`acceptance`]: the end-to-end acceptance checks, shared by the test
//!   suite and the CLI `selftest` command.

pub mod acceptance;
pub mod curve;
pub mod eigenvector;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use model::{ModelParams, RenormalizedEnergy, WaveGrid};
