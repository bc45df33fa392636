//! Desk-scale laboratory for vector-valued q-variational inequalities.
//!
//! The crate is organised around five layers:
//!
//! * [`spaces`] — finite-dimensional ℓ^r spaces standing in for a Banach
//!   space, with exact norms and vector arithmetic.
//! * [`variation`] — the q-variation seminorm of a finite sample path,
//!   computed exactly by dynamic programming and cross-checked by
//!   brute-force enumeration.
//! * [`operators`] — closed-form evaluation of averaging operators,
//!   truncated Hilbert transforms and Poisson/conjugate Poisson
//!   convolutions on compactly supported step functions, plus an
//!   adaptive-quadrature oracle.
//! * [`martingale`] — finite Walsh-Paley martingales on {−1,1}^m:
//!   conditional expectations, cotype-q ratios and witness constructions.
//! * [`transference`] — the constructive bridge from Walsh martingales to
//!   trigonometric polynomials on the circle: square-wave lifts, the
//!   certified selection of lacunary frequencies and cut-off times, the
//!   telescoping estimate and the cotype inequality chain.
//!
//! The [`harness`] module drives experiments (best-constant estimation,
//! sweeps, an identity suite) and emits deterministic reports.

// Validation guards use `!(x > 0.0)`-style comparisons on purpose: the
// negation is true for NaN, so malformed inputs are rejected instead of
// sliding through a `<=` that NaN would fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod martingale;
pub mod operators;
pub mod spaces;
pub mod transference;
pub mod variation;

pub use error::{Error, Result};
