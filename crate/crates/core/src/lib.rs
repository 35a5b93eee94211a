//! Stability certificates, witnesses and integral criteria for
//! skew-evolution semiflows.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod config;
pub mod error;
pub mod gallery;
pub mod grid;
pub mod integral;
pub mod interp;
pub mod quadrature;
pub mod report;
pub mod semiflow;
pub mod stability;

pub use error::{Error, Result};
