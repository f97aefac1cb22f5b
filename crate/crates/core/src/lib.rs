//! Host-pathogen pursuit dynamics in phenotype space.
//!
//! A nonlocal reaction-diffusion model is integrated by the method of lines,
//! and its travelling and stationary pulses are computed semi-analytically.

pub mod analytic;
pub mod config;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod model;
pub mod output;
pub mod par;
pub mod quadrature;
pub mod rk4;
pub mod series;
pub mod solver;
pub mod special;
pub mod sweep;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
