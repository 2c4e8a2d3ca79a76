//! Fixed-point iteration and contraction-class verification on metric spaces.
//!
//! The crate is organised around a [`metric::MetricSpace`] trait and
//! [`orbit::SelfMap`]s acting on it:
//!
//! * [`comparison`]: comparison functions `φ`, their axioms, iterate decay
//!   horizons and the series condition `φⁿ(t) ≤ cₙ·t`.
//! * [`metric`]: Euclidean, grid-function (sup) and Hausdorff spaces.
//! * [`orbit`]: orbit prefixes, truncated diameters, boundedness probes and
//!   the a-priori orbit bound for linear quasicontractions.
//! * [`classify`]: Satisfied / Falsified / Inconclusive verdicts for the
//!   Banach, nonlinear, Ćirić, strong and weak contraction classes.
//! * [`solver`]: residual-certified fixed-point iteration, multi-start
//!   uniqueness and ball invariance.
//! * [`apps`]: Picard iteration for IVPs and IFS attractors.
//! * [`gallery`]: bundled example maps with expected verdicts.
//!
//! Data-parallel loops (pair checks, diameter scans, Hutchinson steps,
//! multi-start solves) run on rayon when the default `parallel` feature is
//! on and sequentially otherwise, with identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod classify;
pub mod comparison;
pub mod error;
pub mod exec;
pub mod gallery;
pub mod metric;
pub mod orbit;
pub mod solver;

pub use error::{Error, Result};
