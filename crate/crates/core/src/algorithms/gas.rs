//! Grover adaptive search with randomised rotation counts, and its variant
//! with a user-restricted rotation cap.

use std::convert::Infallible;

use rand::Rng;

use super::session::{Session, Step};
use crate::error::{invalid, Result};
use crate::grover::complete_convergence_rotations;

pub const DEFAULT_LAMBDA: f64 = 1.34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConfig {
    pub lambda: f64,
    pub r_max: u64,
}

impl GasConfig {
    pub fn new(lambda: f64, r_max: u64) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(invalid(format!("growth factor must exceed 1, got {lambda}")));
        }
        if r_max < 1 {
            return Err(invalid("rotation cap must be at least 1"));
        }
        Ok(Self { lambda, r_max })
    }

    /// Unrestricted search over `n` solutions: the cap is the rotation count
    /// that fully converges onto a single marked solution.
    pub fn unrestricted(n: u64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("empty solution space"));
        }
        let rc = complete_convergence_rotations(1.0 / n as f64)?;
        Self::new(lambda, (rc.round() as u64).max(1))
    }

    pub fn restricted(r_max: u64, lambda: f64) -> Result<Self> {
        Self::new(lambda, r_max)
    }
}

/// Runs until the session halts. The best quality starts from one classical
/// sample; each step draws `r` uniformly from `0..=ceil(m)-1`, measures the
/// state marked by `q < best`, and either adopts the improvement and resets
/// `m` to 1 or grows `m` by `lambda` up to `r_max + 1`.
pub fn gas_run<R: Rng + ?Sized>(s: &mut Session<'_, R>, cfg: &GasConfig) -> Step<Infallible> {
    let mut best = s.classical()?.quality;
    let m_cap = (cfg.r_max + 1) as f64;
    let mut m: f64 = 1.0;
    loop {
        let k = (m.ceil() as u64).saturating_sub(1);
        if k >= cfg.r_max {
            // once capped every failed step looks alike, so jump straight to
            // the next improvement
            let (x, _, _) = s.measure_until(0..=cfg.r_max, best, best)?;
            best = x.quality;
            m = 1.0;
            continue;
        }
        let r = s.rng().random_range(0..=k);
        let x = s.measure(r, best)?;
        if x.quality < best {
            best = x.quality;
            m = 1.0;
        } else {
            m = (cfg.lambda * m).min(m_cap);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config() {
        assert!(GasConfig::new(1.0, 5).is_err());
        assert!(GasConfig::new(1.34, 0).is_err());
        let g = GasConfig::unrestricted(37_633, DEFAULT_LAMBDA).unwrap();
        assert_eq!(g.r_max, 152);
    }
}
