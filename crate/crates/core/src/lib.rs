//! Critical explicit time step sizes for alpha-stabilized finite cell and
//! spectral cell discretizations of the scalar wave equation.
//!
//! The crate covers the whole pipeline from GLL bases and cut-cell
//! quadrature over element/global assembly to generalized eigenvalue
//! solvers, plus closed-form single-DOF results and the parameter studies
//! built on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod assembly;
pub mod basis;
pub mod config;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod studies;

pub use error::{Error, Result};
