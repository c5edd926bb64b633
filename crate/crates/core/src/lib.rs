//! Toric plurisubharmonic functions on the unit polydisk, their
//! Monge-Ampère energy, toric condensers and weak geodesics.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod error;
pub mod geodesics;
pub mod monge_ampere;
pub mod toric_sets;
pub mod verify;

pub use error::{Error, Result};
