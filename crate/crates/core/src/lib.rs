//! Analysis of rank-one semidefinite recovery problems for dual-certificate
//! existence.
//!
//! Given measurements `<X, A_i> = b_i` consistent with a rank-one ground truth
//! `X0 = x0 x0*`, this crate can
//!
//! - detect PSD elements of `span{A_i}` orthogonal to `X0` (the face that
//!   breaks Slater's condition),
//! - decide membership in the cone `S = {A*(lam) + Q : Q <= 0, Q x0 = 0}` of
//!   candidate certificate matrices,
//! - check the completeness condition that guarantees strong duality,
//! - regularize incomplete problems by appending implied measurements
//!   `<X, e_j (x) q_k> = 0` until completeness holds, and
//! - construct and verify KKT dual certificates for trace, Frobenius,
//!   l1-plus-trace and linear objectives, including a linear objective that
//!   provably admits no certificate whenever completeness fails.
//!
//! Numerical answers that cannot be decided within tolerance and budget are
//! reported as `Inconclusive`, never silently coerced to a yes or a no.

// index arithmetic over dense matrices reads better with explicit ranges
#![allow(clippy::needless_range_loop)]

pub mod certificate;
pub mod cone;
pub mod config;
pub mod error;
pub mod face;
pub mod harness;
pub mod operator;
pub mod regularize;
pub mod symmat;

mod jacobi;
pub mod linalg;
pub mod rng;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use operator::{GroundTruth, MeasurementSet};
pub use symmat::{EigDecomp, Subspace, SymMat};
