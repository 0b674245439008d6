//! Passivity-based output-feedback control from approximate solutions of
//! the Hamilton–Jacobi–Bellman equation.
//!
//! The pipeline: a [`models::Plant`] is handed to [`hjb::policy_iteration`],
//! which returns a Legendre-series value function `V`. From `V` the
//! [`controllers`] module builds a passive observer-type controller (and an
//! EKF-gain variant) that is coupled to the plant by a power-conserving
//! interconnection. [`integrators`] provides the implicit midpoint rule and a
//! discrete-gradient scheme that reproduces the controller's power balance at
//! the discrete level, and [`diagnostics`] audits the results.
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod controllers;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod galerkin;
pub mod hjb;
pub mod integrators;
pub mod linalg;
pub mod models;

pub use error::{Error, Result};
