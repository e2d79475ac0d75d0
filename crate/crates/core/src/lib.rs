//! High-frequency multiple scattering of a plane wave by sound-hard convex
//! obstacles in the plane: boundary integral solver, broken-ray phases,
//! envelope extraction and the asymptotic checks built on them.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bie;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod multiscatter;
pub mod quad;
pub mod rays;
pub mod specfun;

pub use error::{Error, Result};
