//! Classical simulation of threshold-based amplitude-amplification optimisers.
//!
//! The crate models a truncated Grover search over a solution space through
//! its quality distribution alone: a threshold `T` marks a fraction
//! `rho(T)` of solutions, `r` rotations measure a marked solution with
//! probability `sin((2r+1) asin(sqrt(rho)))^2`, and each preparation plus
//! measurement costs `2r+1` quality-function calls. On top of that model sit
//! the maximum-amplification threshold search ([`algorithms::maoa`]), Grover
//! adaptive search with and without a rotation cap ([`algorithms::gas`]),
//! classical random sampling, and a seeded Monte Carlo harness producing
//! success-probability-versus-effort curves.

pub mod algorithms;
pub mod dist;
pub mod effort;
pub mod error;
pub mod grover;
pub mod harness;
pub mod kv;
pub mod normal;
pub mod problems;

pub use dist::{Draw, FilteredDistribution, FiniteDistribution, MarkingSpec, QualityDistribution, Sense};
pub use effort::EffortLedger;
pub use error::{Error, Result};
