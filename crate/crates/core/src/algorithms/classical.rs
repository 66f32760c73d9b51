//! Classical random sampling with replacement.

use std::convert::Infallible;

use rand::Rng;

use super::session::{Session, Step};

/// Samples uniformly until the session halts, one call per sample.
pub fn classical_run<R: Rng + ?Sized>(s: &mut Session<'_, R>) -> Step<Infallible> {
    loop {
        let level = s.best();
        s.classical_until(level)?;
    }
}
