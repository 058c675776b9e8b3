//! Finite-element simulation of unsaturated flow in heterogeneous poroelastic
//! media.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: compressed sparse rows, dense and banded factorizations and a
//!   dense symmetric generalized eigensolver.
//! * [`constitutive`]: van Genuchten retention and conductivity, water-dependent
//!   stiffness, storage and mobility coefficients, and their per-cell upper
//!   bounds over a pressure interval.
//! * [`mesh`] and [`assembly`]: structured triangulation of a square, P1 spaces
//!   for pressure and displacement, block operators and boundary conditions.
//! * [`problem`]: a heterogeneous model instance tying the above together.
//! * [`time_integration`]: implicit (Picard), semi-implicit and the
//!   implicit-explicit scheme built on a fixed linear operator.
//! * [`coarse_space`], [`smoothers`], [`two_grid`]: the multiscale two-grid
//!   solver (spectral coarse space, multicolor Vanka smoothing).
//!
//! All numerical code is generic over [`Real`]; the `*64` aliases below fix the
//! scalar to `f64`, which is what the drivers use.

pub mod assembly;
pub mod coarse_space;
pub mod constitutive;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod smoothers;
pub mod time_integration;
pub mod two_grid;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SparseMatrix64 = linalg::SparseMatrix<f64>;
pub type DenseMatrix64 = linalg::DenseMatrix<f64>;
pub type MaterialModel64 = constitutive::MaterialModel<f64>;
pub type Problem64 = problem::Problem<f64>;
pub type State64 = time_integration::State<f64>;
pub type TwoGridSolver64 = two_grid::TwoGridSolver<f64>;
