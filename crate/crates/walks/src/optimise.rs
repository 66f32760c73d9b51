//! Multi-start Nelder-Mead maximisation of amplified probabilities.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Converged once the standard deviation of the simplex values falls
    /// below this.
    pub tolerance: f64,
    pub max_iters: u64,
    /// Initial simplex edge as a fraction of each coordinate's sampling
    /// range.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-10,
            max_iters: 10_000,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
    /// Stopped by the iteration cap rather than by convergence.
    pub capped: bool,
}

struct Negated<'a, F: ?Sized>(&'a F);

impl<F: Fn(&[f64]) -> f64 + ?Sized> CostFunction for Negated<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-(self.0)(x))
    }
}

/// Local maximisation of `f` from `x0`; `scale` gives the size of each
/// coordinate's range and sets the initial simplex.
pub fn nelder_mead_max<F>(f: &F, x0: &[f64], scale: &[f64], cfg: &NelderMeadConfig) -> Result<Optimum>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if x0.is_empty() || scale.len() != x0.len() {
        return Err(invalid("start point and scale must be non-empty and the same length"));
    }
    let mut simplex = vec![x0.to_vec()];
    for (i, s) in scale.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += cfg.initial_step * s;
        simplex.push(v);
    }
    let opt = |e: argmin::core::Error| Error::Optimiser(e.to_string());
    let solver = NelderMead::new(simplex)
        .with_alpha(cfg.reflection)
        .and_then(|s| s.with_gamma(cfg.expansion))
        .and_then(|s| s.with_rho(cfg.contraction))
        .and_then(|s| s.with_sigma(cfg.shrink))
        .and_then(|s| s.with_sd_tolerance(cfg.tolerance))
        .map_err(opt)?;
    let res = Executor::new(Negated(f), solver)
        .configure(|s| s.max_iters(cfg.max_iters).counting(true))
        .run()
        .map_err(opt)?;
    let state = res.state();
    let x = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::Optimiser("no parameters returned".into()))?;
    let evaluations = state.get_func_counts().get("cost_count").copied().unwrap_or(0);
    let capped = matches!(state.get_termination_reason(), Some(TerminationReason::MaxItersReached));
    Ok(Optimum {
        value: f(&x),
        x,
        evaluations,
        capped,
    })
}

/// Random starts, the best few refined by Nelder-Mead, the whole repeated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStart {
    pub starts: usize,
    pub refine: usize,
    pub repeats: usize,
    pub nm: NelderMeadConfig,
}

impl MultiStart {
    pub fn new(starts: usize, refine: usize, repeats: usize) -> Result<Self> {
        if starts == 0 || refine == 0 || repeats == 0 || refine > starts {
            return Err(invalid("need 0 < refine <= starts and at least one repeat"));
        }
        Ok(Self {
            starts,
            refine,
            repeats,
            nm: NelderMeadConfig::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub best: Optimum,
    /// Every refined value, ordered by repeat and then by start rank.
    pub refined: Vec<f64>,
}

impl MultiStartResult {
    pub fn mean(&self) -> f64 {
        self.refined.iter().sum::<f64>() / self.refined.len() as f64
    }

    /// Population standard deviation of the refined values.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.refined.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.refined.len() as f64).sqrt()
    }
}

pub(crate) fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maximises `f` over starts drawn uniformly from `[0, ranges[i])`.
///
/// Each repeat draws `starts` points from its own seed and refines the
/// `refine` best. Ties go to the earlier start, so the result does not
/// depend on how the refinements are scheduled.
pub fn multi_start_max<F>(f: &F, ranges: &[f64], protocol: &MultiStart, seed: u64) -> Result<MultiStartResult>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if ranges.is_empty() || ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid("sampling ranges must be positive and finite"));
    }
    let candidates: Vec<Vec<f64>> = (0..protocol.repeats)
        .flat_map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, rep as u64));
            let mut pts: Vec<(f64, Vec<f64>)> = (0..protocol.starts)
                .map(|_| {
                    let x: Vec<f64> = ranges.iter().map(|&r| rng.random::<f64>() * r).collect();
                    (f(&x), x)
                })
                .collect();
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            pts.truncate(protocol.refine);
            pts.into_iter().map(|(_, x)| x)
        })
        .collect();
    let results: Vec<Optimum> = candidates
        .par_iter()
        .map(|x0| nelder_mead_max(f, x0, ranges, &protocol.nm))
        .collect::<Result<_>>()?;
    let refined = results.iter().map(|o| o.value).collect();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one refinement");
    Ok(MultiStartResult { best, refined })
}
