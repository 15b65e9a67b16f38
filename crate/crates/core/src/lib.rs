//! Rank-one convexification of convex quadratics under sign-indicator
//! constraints, and the robust SVM relaxations built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`hull`] evaluates the closed-form convex-hull inequalities for the
//!   epigraph of `(dᵀx)²` with `x_i z_i ≥ 0, x_i (1 − z_i) ≤ 0`, builds their
//!   SOCP representation, and carries an enumeration oracle that computes the
//!   exact mixed-integer optimum of a linear objective over the same set.
//! * [`conic`] is a solver-agnostic conic program IR with validation,
//!   residual checks, and CBF / MPS interchange.
//! * [`solver`] (feature `solver`) adapts the IR to an interior-point conic
//!   solver and hosts the exact 0–1 loss SVM oracle.
//! * [`relaxations`] covers the copositive / SDP inequalities for the
//!   lifted set with matrix variable `X ⪰ xxᵀ`, plus the big-M model.
//! * [`svm`] builds the conic SVM relaxations, the hinge and ℓ1-robust
//!   baselines, and the per-point decomposition relaxation.
//! * [`datagen`] generates seeded synthetic instances.
//! * [`harness`] (feature `solver`) runs bound and cross-validation
//!   experiments.

pub mod conic;
pub mod datagen;
pub mod hull;
pub mod linalg;
pub mod plot;
pub mod relaxations;
pub mod svm;

#[cfg(feature = "solver")]
pub mod harness;
#[cfg(feature = "solver")]
pub mod solver;

// Link the BLAS/LAPACK providers used by the conic backend.
#[cfg(feature = "solver")]
extern crate blas_src;
#[cfg(feature = "solver")]
extern crate lapack_src;
#[cfg(feature = "solver")]
extern crate openblas_src;
