//! Two competing populations with carrying-capacity driven dispersal under
//! proportional harvesting, on a one-dimensional habitat with closed
//! boundaries.
//!
//! The numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line tool
//! and the acceptance suite use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod operators;
pub mod profiles;
pub mod dynamics;
pub mod spectral;
pub mod analysis;
pub mod sweep;
pub mod cli;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = grid::SpatialGrid<f64>;
pub type Field = grid::Field<f64>;
pub type Environment = profiles::EnvironmentProfile<f64>;
pub type Operator = operators::DiffusionOperator<f64>;
