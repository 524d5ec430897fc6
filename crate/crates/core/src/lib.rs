//! Unitary pentadiagonal band matrices assembled from 2x2 scattering blocks.
//!
//! The operator is `U = U_o U_e`, where `U_e` carries the blocks `S_{2k}` on
//! sites `(2k, 2k+1)` and `U_o` carries `S_{2k+1}` on sites `(2k+1, 2k+2)`.
//! Modules cover window assembly, transfer matrices, realification, Lyapunov
//! exponents, periodic band structure, the half-line problem and a set of
//! finite-size spectral diagnostics.

pub mod angle;
pub mod classify;
pub mod diagnostics;
pub mod error;
pub mod halfline;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod periodic;
pub mod realify;
pub mod report;
pub mod transfer;
pub mod window;

pub use error::{Error, Result};
pub use model::{CouplingPair, PhaseModel, PhaseTriple};
pub use num_complex::Complex64 as C64;
