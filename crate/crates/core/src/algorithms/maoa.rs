//! Maximum-amplification threshold search and the sampling phase that
//! follows it. Written for minimisation: a measurement succeeds when its
//! quality is strictly below the current threshold.

use std::convert::Infallible;

use rand::Rng;

use super::session::{Halt, Session, Step};
use crate::error::{invalid, Result};
use crate::grover::grover_probability;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaoaConfig {
    /// Final rotation count, a power of two.
    pub r_final: u64,
    pub initial_sample: usize,
    pub streak_target: u32,
    pub steps_per_scan: u32,
    pub stepsize_divisor: f64,
    /// AdaptiveSearch stops once finding an improvement takes this many
    /// measurements.
    pub as_measurements: u64,
    pub weight_power: i32,
}

impl MaoaConfig {
    pub fn new(r_final: u64) -> Result<Self> {
        let cfg = Self {
            r_final,
            initial_sample: 200,
            streak_target: 20,
            steps_per_scan: 20,
            stepsize_divisor: 10.0,
            as_measurements: 40,
            weight_power: 4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r_final.is_power_of_two() {
            return Err(invalid(format!(
                "final rotation count must be a power of two, got {}",
                self.r_final
            )));
        }
        if self.initial_sample == 0
            || self.streak_target == 0
            || self.steps_per_scan == 0
            || self.as_measurements == 0
            || !(self.stepsize_divisor > 0.0)
            || self.weight_power < 1
        {
            return Err(invalid("MAOA counts and divisor must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one peak scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakScan {
    pub threshold: f64,
    /// A full success streak ended the scan early.
    pub streak: bool,
    /// No scanned threshold produced a single success, so there was nothing
    /// to average and the last scanned threshold was returned.
    pub no_weight: bool,
}

/// Scans thresholds downward from `t_start` for the response peak at `r`
/// rotations.
pub fn find_peak<R: Rng + ?Sized>(
    s: &mut Session<'_, R>,
    r: u64,
    t_start: f64,
    stepsize: f64,
    cfg: &MaoaConfig,
) -> Step<PeakScan> {
    let mut sum = 0.0;
    let mut weights = 0.0;
    let mut t = t_start;
    for _ in 0..cfg.steps_per_scan {
        t -= stepsize;
        let mut count = 0;
        while count < cfg.streak_target {
            let x = s.measure(r, t)?;
            if x.quality < t {
                count += 1;
            } else {
                let w = f64::from(count).powi(cfg.weight_power);
                sum += t * w;
                weights += w;
                break;
            }
        }
        if count == cfg.streak_target {
            return Ok(PeakScan {
                threshold: t,
                streak: true,
                no_weight: false,
            });
        }
    }
    if weights == 0.0 {
        return Ok(PeakScan {
            threshold: t,
            streak: false,
            no_weight: true,
        });
    }
    Ok(PeakScan {
        threshold: sum / weights,
        streak: false,
        no_weight: false,
    })
}

/// Lowest quality seen over a short downward scan, used to seed the
/// adaptive search.
pub fn threshold_for_as<R: Rng + ?Sized>(
    s: &mut Session<'_, R>,
    r: u64,
    t_start: f64,
    stepsize: f64,
    cfg: &MaoaConfig,
) -> Step<f64> {
    let mut best = t_start;
    let mut t = t_start;
    for _ in 0..cfg.steps_per_scan {
        t -= stepsize;
        let x = s.measure(r, t)?;
        if x.quality < best {
            best = x.quality;
        }
    }
    Ok(best)
}

/// Lowers the threshold to each newly measured improvement until finding
/// one takes at least `as_measurements` measurements.
pub fn adaptive_search<R: Rng + ?Sized>(
    s: &mut Session<'_, R>,
    r: u64,
    t_start: f64,
    cfg: &MaoaConfig,
) -> Step<f64> {
    let mut t = t_start;
    loop {
        let (x, _, count) = s.measure_until(r..=r, t, t)?;
        t = x.quality;
        if count >= cfg.as_measurements {
            return Ok(t);
        }
    }
}

/// Everything the threshold phase produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTrace {
    pub median: f64,
    pub first_quartile: f64,
    /// `(r, T_r)` for every peak scan, in order.
    pub peaks: Vec<(u64, f64)>,
    /// Seed threshold handed to the adaptive search.
    pub as_start: f64,
    pub threshold: f64,
    pub empty_scans: u32,
    /// Calls spent when the phase ended.
    pub calls: u64,
}

/// Type 7 sample quantile (linear interpolation between order statistics).
pub fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Threshold phase: navigates the response peaks at `r = 1, 2, 4, ...` up to
/// half the final rotation count, then seeds and runs the adaptive search at
/// the final count.
pub fn final_threshold<R: Rng + ?Sized>(
    s: &mut Session<'_, R>,
    cfg: &MaoaConfig,
) -> Step<ThresholdTrace> {
    let mut raw = Vec::with_capacity(cfg.initial_sample);
    let mut qs = Vec::with_capacity(cfg.initial_sample);
    for _ in 0..cfg.initial_sample {
        let d = s.classical()?;
        raw.push(d.raw);
        if d.quality.is_finite() {
            qs.push(d.quality);
        }
    }
    // on a filtered space the spread is estimated within the eligible
    // subspace; too few eligible samples fall back to the raw objective
    if qs.len() < 2 {
        qs = raw;
    }
    qs.sort_by(f64::total_cmp);
    let median = sample_quantile(&qs, 0.5);
    let q1 = sample_quantile(&qs, 0.25);
    let initial_step = (median - q1) / cfg.stepsize_divisor;

    let mut empty_scans = 0;
    let mut scan = |s: &mut Session<'_, R>, r, t, step| -> Step<f64> {
        let p = find_peak(s, r, t, step, cfg)?;
        empty_scans += u32::from(p.no_weight);
        Ok(p.threshold)
    };

    // ts[k] holds T at r = 2^(k-1); ts[0] is the sample median
    let mut ts = vec![median];
    let mut peaks = Vec::new();
    let mut r = 1;
    while r == 1 || r < cfg.r_final {
        let k = ts.len();
        let step = if r <= 2 {
            initial_step
        } else {
            (ts[k - 2] - ts[k - 1]) / cfg.stepsize_divisor
        };
        let t = scan(s, r, ts[k - 1], step)?;
        ts.push(t);
        peaks.push((r, t));
        r *= 2;
    }
    let as_start = if cfg.r_final == 1 {
        ts[1]
    } else {
        let k = ts.len();
        let step = (ts[k - 2] - ts[k - 1]) / cfg.stepsize_divisor;
        threshold_for_as(s, cfg.r_final, ts[k - 1], step, cfg)?
    };
    let threshold = adaptive_search(s, cfg.r_final, as_start, cfg)?;
    Ok(ThresholdTrace {
        median,
        first_quartile: q1,
        peaks,
        as_start,
        threshold,
        empty_scans,
        calls: s.calls(),
    })
}

/// Sampling phase: measures the state amplified about `t` with `r`
/// rotations until the session halts.
pub fn sample_phase<R: Rng + ?Sized>(s: &mut Session<'_, R>, r: u64, t: f64) -> Step<Infallible> {
    loop {
        let level = s.best();
        s.measure_until(r..=r, t, level)?;
    }
}

/// Both phases back to back. Returns the threshold trace when the threshold
/// phase completed, and why the run stopped.
pub fn maoa_run<R: Rng + ?Sized>(
    s: &mut Session<'_, R>,
    cfg: &MaoaConfig,
) -> (Option<ThresholdTrace>, Halt) {
    let trace = match final_threshold(s, cfg) {
        Ok(t) => t,
        Err(h) => return (None, h),
    };
    let halt = match sample_phase(s, cfg.r_final, trace.threshold) {
        Ok(never) => match never {},
        Err(h) => h,
    };
    (Some(trace), halt)
}

/// Marked ratio at which the sampling phase sees successes at the rate
/// `1/40`, in the small-angle limit.
pub fn sampling_ratio(r: u64) -> f64 {
    let k = (2 * r + 1) as f64;
    1.0 / (40.0 * k * k)
}

/// Whether a threshold phase result sits in the low-convergence region.
pub fn is_low_convergence(r: u64, rho: f64) -> bool {
    grover_probability(r, rho) <= crate::grover::LOW_CONVERGENCE_LIMIT
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::session::{StopRule, Target};
    use crate::dist::{FiniteDistribution, QualityDistribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn config_validation() {
        assert!(MaoaConfig::new(64).is_ok());
        assert!(MaoaConfig::new(1).is_ok());
        assert!(MaoaConfig::new(48).is_err());
        assert!(MaoaConfig::new(0).is_err());
    }

    #[test]
    fn quartiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sample_quantile(&xs, 0.5), 2.5);
        assert_eq!(sample_quantile(&xs, 0.25), 1.75);
        assert_eq!(sample_quantile(&[7.0], 0.25), 7.0);
    }

    #[test]
    fn immediate_streak() {
        // r = 1 and a quarter of the space marked gives P = 1
        let d: QualityDistribution = FiniteDistribution::from_qualities((0..100).map(f64::from).collect())
            .unwrap()
            .into();
        let cfg = MaoaConfig::new(1).unwrap();
        let stop = StopRule::new(Target::None, u64::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = Session::new(&d, &stop, &mut rng);
        let p = find_peak(&mut s, 1, 26.0, 1.0, &cfg).unwrap();
        assert_eq!(p.threshold, 25.0);
        assert!(p.streak);
        assert_eq!(s.calls(), 20 * 3);
    }

    #[test]
    fn empty_scan_warns() {
        let d: QualityDistribution = FiniteDistribution::from_qualities(vec![5.0, 6.0])
            .unwrap()
            .into();
        let cfg = MaoaConfig::new(1).unwrap();
        let stop = StopRule::new(Target::None, u64::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = Session::new(&d, &stop, &mut rng);
        let p = find_peak(&mut s, 2, 4.0, 0.5, &cfg).unwrap();
        assert!(p.no_weight);
        assert_eq!(p.threshold, 4.0 - 20.0 * 0.5);
        assert_eq!(s.calls(), 20 * 5);
    }
}
