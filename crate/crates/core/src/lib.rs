//! Ping-pong certification for free products of subgroups of SL(d,ℝ) acting
//! on partial flag manifolds, with the limit sets and boundary maps of the
//! resulting groups.
//!
//! Module map:
//! - [`linalg`]: unimodular matrices and the Cartan decomposition.
//! - [`flags`]: flag types, flags, the action, the metric and antipodality.
//! - [`freeprod`]: factors, reduced words and boundary points of free products.
//! - [`pingpong`]: balls of flags, inclusion checks and ping-pong certificates.
//! - [`limits`]: limit points, limit-set samples, the boundary map and
//!   regularity diagnostics.
//! - [`schottky`]: axial data, antipodality scans and the power search.
//! - [`config`], [`cli`]: JSON configuration and the command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod flags;
pub mod freeprod;
pub mod limits;
pub mod linalg;
pub mod pingpong;
pub mod sampling;
pub mod schottky;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
