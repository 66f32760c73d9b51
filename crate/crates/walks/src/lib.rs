//! Continuous-time quantum-walk optimisation dynamics.
//!
//! Alternates quality-dependent phase shifts `exp(-i gamma Q)` with walks
//! `exp(-i t A)` starting from the equal superposition. Two families of
//! graphs are covered: complete graphs contracted over groups of equal
//! quality ([`reduced`]), where dimension is the number of groups rather than
//! the number of solutions, and small circulant graphs evolved in their
//! Fourier eigenbasis ([`circulant`]).

pub mod appendix;
pub mod circulant;
pub mod dense;
pub mod error;
pub mod optimise;
pub mod partition;
pub mod reduced;

pub use error::{Error, Result};
