#![no_std]
// `num_traits::Float` supplies f64 math without std; when a dependency links
// std the inherent methods take over and the import goes unused
#![allow(unused_imports)]
//! Numerical toolkit for sign-changing concentrating solutions of
//!
//! ```text
//! Δu + ε²(eᵘ − e⁻ᵘ) = 0 in Ω,    ∂u/∂ν + λu = 0 on ∂Ω
//! ```
//!
//! on planar disks, annuli and x-symmetric star-shaped domains.
//!
//! The crate needs only `alloc`. File formats and the command line live in
//! the `sinhrobin` companion crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ansatz;
pub mod asymptotics;
pub mod band;
pub mod elliptic;
mod error;
pub mod geometry;
pub mod green;
pub mod hamiltonian;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Domain, Grid, Point};
