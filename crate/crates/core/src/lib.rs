//! Numerical toolkit for lattice bump bilinear Fourier multipliers.
//!
//! The library builds multipliers sigma_{A,Phi} from a finitely supported
//! coefficient matrix A and a smooth compactly supported bump Phi, applies the
//! associated bilinear operator to band-limited inputs, measures (L^2, l^q)
//! amalgam norms, estimates the trilinear matrix norm that governs operator
//! boundedness, tests bumps for biorthogonal dual windows, and assembles the
//! extremal witness construction that certifies lower bounds.

pub mod bump;
pub mod condition_a;
pub mod error;
pub mod expansion;
pub mod fourier;
pub mod grid;
pub mod lattice;
pub mod operator;
pub mod seq;
pub mod trilinear;
pub mod witness;

pub use bump::BumpSpec;
pub use error::{Error, Result};
pub use grid::{quad, sample, GridBox, SampledField};
pub use lattice::{LatticeIndex, LatticeMatrix};
pub use seq::LatticeSeq;
