//! Seeded Monte Carlo experiments and success-probability-versus-effort
//! curves.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algorithms::{run_algorithm, Algorithm, RunOutcome, StopRule, Target};
use crate::dist::QualityDistribution;
use crate::error::{invalid, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Grid density of effort axes.
pub const POINTS_PER_DECADE: usize = 64;

/// Seed of run `index` under `master`: two rounds of the splitmix64
/// finaliser, so neighbouring indices give unrelated streams.
pub fn run_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master) ^ index)
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec<'a> {
    pub dist: &'a QualityDistribution,
    pub algorithm: Algorithm,
    pub target: Target,
    pub runs: usize,
    pub effort_cap: u64,
    pub master_seed: u64,
}

impl ExperimentSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(invalid("run count must be at least 1"));
        }
        if let Algorithm::Maoa(c) | Algorithm::MaoaThreshold(c) = &self.algorithm {
            c.validate()?;
        }
        Ok(())
    }
}

/// Per-run outcomes in run order.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub seeds: Vec<u64>,
    pub outcomes: Vec<RunOutcome>,
    /// Fraction of the space counted as a target.
    pub target_ratio: f64,
}

/// Runs every seeded run on a pool of `workers` threads. Results do not
/// depend on the worker count.
pub fn run_experiment(spec: &ExperimentSpec<'_>, workers: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let stop = StopRule::new(spec.target.clone(), spec.effort_cap);
    let seeds: Vec<u64> = (0..spec.runs as u64)
        .map(|i| run_seed(spec.master_seed, i))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let outcomes = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                run_algorithm(&spec.algorithm, spec.dist, &stop, &mut rng, false).0
            })
            .collect()
    });
    Ok(ExperimentResult {
        seeds,
        outcomes,
        target_ratio: spec.target.ratio_in(spec.dist),
    })
}

impl ExperimentResult {
    pub fn success_times(&self) -> Vec<u64> {
        self.outcomes.iter().filter_map(|o| o.found_at).collect()
    }

    pub fn curve(&self, grid: Vec<f64>) -> SuccessCurve {
        SuccessCurve::new(self.success_times(), self.outcomes.len(), grid)
    }

    /// `run,seed,found_at,calls,best,threshold,threshold_calls`, with empty
    /// cells for missing values.
    pub fn write_runs_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "run,seed,found_at,calls,best,threshold,threshold_calls")?;
        for (i, (o, seed)) in self.outcomes.iter().zip(&self.seeds).enumerate() {
            let found = o.found_at.map(|v| v.to_string()).unwrap_or_default();
            let (t, tc) = match &o.trace {
                Some(tr) => (format!("{:.16e}", tr.threshold), tr.calls.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{i},{seed},{found},{},{:.16e},{t},{tc}",
                o.calls, o.best
            )?;
        }
        Ok(())
    }
}

/// Logarithmic grid from `lo` to `hi` inclusive, `per_decade` points per
/// factor of ten.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let steps = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|i| {
            if i == steps {
                hi
            } else {
                lo * 10f64.powf(i as f64 / per_decade as f64)
            }
        })
        .collect()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Half-width of the simultaneous `1 - alpha` band around an empirical CDF
/// of `n` samples (Dvoretzky-Kiefer-Wolfowitz with Massart's constant).
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical CDF of success times over all runs, unsuccessful runs
/// included in the denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    /// Sorted success efforts.
    pub times: Vec<u64>,
    pub runs: usize,
    pub grid: Vec<f64>,
    pub p: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SuccessCurve {
    pub fn new(mut times: Vec<u64>, runs: usize, grid: Vec<f64>) -> Self {
        times.sort_unstable();
        let mut p = Vec::with_capacity(grid.len());
        let mut lo = Vec::with_capacity(grid.len());
        let mut hi = Vec::with_capacity(grid.len());
        for &e in &grid {
            let k = times.partition_point(|&t| t as f64 <= e);
            let (a, b) = wilson(k, runs, Z95);
            p.push(k as f64 / runs as f64);
            lo.push(a);
            hi.push(b);
        }
        Self {
            times,
            runs,
            grid,
            p,
            lo,
            hi,
        }
    }

    /// No run found a target.
    pub fn unreachable(&self) -> bool {
        self.times.is_empty()
    }

    /// Empirical success probability at effort `e`.
    pub fn at(&self, e: f64) -> f64 {
        self.times.partition_point(|&t| t as f64 <= e) as f64 / self.runs as f64
    }

    /// Smallest effort by which a fraction `p` of runs succeeded.
    pub fn effort_at(&self, p: f64) -> Option<u64> {
        let k = ((p * self.runs as f64).ceil() as usize).max(1);
        self.times.get(k - 1).copied()
    }

    /// Largest gap between this curve and `analytic`, checked on the grid
    /// and on both sides of every step.
    pub fn max_deviation(&self, analytic: impl Fn(f64) -> f64) -> f64 {
        let n = self.runs as f64;
        let mut worst: f64 = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            let f = analytic(t as f64);
            // steps can stack on equal times; compare both sides of each
            worst = worst.max((f - (i + 1) as f64 / n).abs());
            worst = worst.max((analytic((t as f64 - 1.0).max(0.0)) - i as f64 / n).abs());
        }
        for (&e, &p) in self.grid.iter().zip(&self.p) {
            worst = worst.max((analytic(e) - p).abs());
        }
        worst
    }

    /// `effort,empirical_p,wilson_lo,wilson_hi,analytic_p`; the last column
    /// is left empty without an overlay.
    pub fn write_csv(&self, out: &mut impl Write, analytic: Option<&dyn Fn(f64) -> f64>) -> Result<()> {
        writeln!(out, "effort,empirical_p,wilson_lo,wilson_hi,analytic_p")?;
        for i in 0..self.grid.len() {
            let e = self.grid[i];
            let a = analytic.map(|f| format!("{:.16e}", f(e))).unwrap_or_default();
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{a}",
                e, self.p[i], self.lo[i], self.hi[i]
            )?;
        }
        Ok(())
    }
}

/// Classical success probability after `e` samples.
pub fn analytic_classical(e: f64, mu: f64) -> f64 {
    if e <= 0.0 {
        return 0.0;
    }
    -(e * (-mu).ln_1p()).exp_m1()
}

/// Sampling-phase success probability after effort `e`, in the small-ratio
/// limit where each measurement finds a target with probability
/// `mu (2r+1)^2`. The flag reports that this rate exceeded 1 and was clamped.
pub fn analytic_maoa(e: f64, mu: f64, r: u64) -> (f64, bool) {
    let k = (2 * r + 1) as f64;
    let q = mu * k * k;
    let clamped = q > 1.0;
    if e <= 0.0 {
        return (0.0, clamped);
    }
    if clamped {
        return (1.0, true);
    }
    (-((e / k) * (-q).ln_1p()).exp_m1(), false)
}

/// Ratio of efforts needed to reach the same success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupEstimate {
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Effort ratio `baseline / candidate` at success probability `p`, with a
/// 95% band from order-statistic confidence intervals of both quantiles.
pub fn speedup_estimate(baseline: &SuccessCurve, candidate: &SuccessCurve, p: f64) -> Result<SpeedupEstimate> {
    let point = |c: &SuccessCurve| {
        c.effort_at(p)
            .ok_or_else(|| invalid(format!("curve never reaches success probability {p}")))
    };
    let band = |c: &SuccessCurve| {
        let n = c.runs as f64;
        let half = Z95 * (n * p * (1.0 - p)).sqrt();
        let at = |q: f64| {
            let k = (q.clamp(1.0, n) as usize).saturating_sub(1);
            c.times.get(k).copied().map(|t| t as f64)
        };
        (at((n * p - half).floor()), at((n * p + half).ceil()))
    };
    let (b, c) = (point(baseline)? as f64, point(candidate)? as f64);
    let (b_lo, b_hi) = band(baseline);
    let (c_lo, c_hi) = band(candidate);
    let lo = match (b_lo, c_hi) {
        (Some(x), Some(y)) => x / y,
        (Some(x), None) => x / f64::INFINITY,
        _ => 0.0,
    };
    let hi = match (b_hi, c_lo) {
        (Some(x), Some(y)) => x / y,
        _ => f64::INFINITY,
    };
    Ok(SpeedupEstimate {
        ratio: b / c,
        lo,
        hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_and_repeat() {
        assert_eq!(run_seed(7, 3), run_seed(7, 3));
        assert_ne!(run_seed(7, 3), run_seed(7, 4));
        assert_ne!(run_seed(7, 3), run_seed(8, 3));
    }

    #[test]
    fn grid_density() {
        let g = log_grid(1.0, 1e3, 64);
        assert_eq!(g.len(), 193);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 1e3);
        assert!((g[64] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        assert_eq!(wilson(0, 10, Z95).0, 0.0);
    }

    #[test]
    fn dkw_band() {
        assert!((dkw_epsilon(10_000, 0.01) - 0.016_276).abs() < 1e-6);
    }

    #[test]
    fn analytic_curves() {
        assert_eq!(analytic_classical(0.0, 0.3), 0.0);
        assert!((analytic_classical(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((analytic_classical(100.0, 0.01) - (1.0 - 0.99f64.powi(100))).abs() < 1e-12);
        let e = 1e8;
        assert!((analytic_classical(e, 1e-8) - (1.0 - (-1.0f64).exp())).abs() < 1e-7);
        assert_eq!(analytic_maoa(5.0, 0.01, 0).0, analytic_classical(5.0, 0.01));
        let (p, flag) = analytic_maoa(1e6, 1e-8, 64);
        assert!((p - 0.72475876464064928).abs() < 1e-12 && !flag);
        let (p, _) = analytic_maoa(129.0 * 1e4, 1e-10, 64);
        assert!((p - 0.016503317038105695).abs() < 1e-13);
        assert!(analytic_maoa(10.0, 0.5, 64).1);
    }

    #[test]
    fn curve_steps() {
        let c = SuccessCurve::new(vec![30, 10], 4, vec![5.0, 10.0, 20.0, 30.0]);
        assert_eq!(c.p, vec![0.0, 0.25, 0.25, 0.5]);
        assert_eq!(c.effort_at(0.5), Some(30));
        assert_eq!(c.effort_at(0.75), None);
        let one = SuccessCurve::new(vec![7], 1, vec![6.0, 7.0]);
        assert_eq!(one.p, vec![0.0, 1.0]);
    }

    #[test]
    fn identical_curves_have_unit_speedup() {
        let times: Vec<u64> = (1..=1000).collect();
        let c = SuccessCurve::new(times, 1000, vec![1.0]);
        let s = speedup_estimate(&c, &c, 0.5).unwrap();
        assert_eq!(s.ratio, 1.0);
        assert!(s.lo < 1.0 && s.hi > 1.0);
    }
}
