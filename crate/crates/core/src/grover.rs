//! Closed-form truncated Grover amplification and the simulated measurement
//! of amplified states.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::Rng;

use crate::dist::{Draw, MarkingSpec, QualityDistribution, Sense};
use crate::effort::EffortLedger;
use crate::error::{invalid, Error, Result};

/// Success probability rate above which the low-convergence approximation is
/// no longer trusted.
pub const LOW_CONVERGENCE_LIMIT: f64 = 1.0 / 40.0;

/// Half the rotation angle, `asin(sqrt(rho))`.
pub fn rotation_angle(rho: f64) -> f64 {
    rho.clamp(0.0, 1.0).sqrt().asin()
}

/// `sin((2r+1) asin(sqrt(rho)))^2`.
pub fn grover_probability(r: u64, rho: f64) -> f64 {
    if r == 0 {
        return rho.clamp(0.0, 1.0);
    }
    let s = ((2 * r + 1) as f64 * rotation_angle(rho)).sin();
    s * s
}

/// `rho (2r+1)^2`, the small-angle form of [`grover_probability`].
pub fn low_convergence_probability(r: u64, rho: f64) -> f64 {
    let k = (2 * r + 1) as f64;
    rho * k * k
}

/// Real-valued rotation count reaching probability one.
pub fn complete_convergence_rotations(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("marked ratio must lie in (0, 1], got {rho}")));
    }
    Ok(PI / (4.0 * rotation_angle(rho)) - 0.5)
}

/// [`complete_convergence_rotations`] rounded to the nearest integer.
pub fn complete_convergence_rotations_rounded(rho: f64) -> Result<u64> {
    Ok(complete_convergence_rotations(rho)?.round() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    LowConvergence,
    HighConvergence,
    Chaotic,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Self::LowConvergence => "low_convergence",
            Self::HighConvergence => "high_convergence",
            Self::Chaotic => "chaotic",
        }
    }
}

/// Regime of the response at rotation count `r` and marked ratio `rho`.
///
/// The published intervals are open; exact boundary values go to the later
/// regime in the order low, high, chaotic.
pub fn classify_regime(r: u64, rho: f64) -> Regime {
    let rc = if rho > 0.0 {
        PI / (4.0 * rotation_angle(rho)) - 0.5
    } else {
        f64::INFINITY
    };
    let r = r as f64;
    if r >= 2.0 * rc {
        Regime::Chaotic
    } else if r < 0.1 * rc && grover_probability(r as u64, rho) < LOW_CONVERGENCE_LIMIT {
        Regime::LowConvergence
    } else {
        Regime::HighConvergence
    }
}

#[derive(Clone, Copy)]
enum Side {
    Band(f64, f64),
    AtOrAbove(f64),
}

/// Result of one simulated measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub quality: f64,
    pub id: Option<u64>,
    pub marked: bool,
}

/// A distribution amplified with `r` rotations about a threshold marking.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifiedStateModel<'a> {
    dist: &'a QualityDistribution,
    r: u64,
    mark: MarkingSpec,
    rho: f64,
    success: f64,
}

impl<'a> AmplifiedStateModel<'a> {
    /// Rejects two-threshold markings, which have no one-dimensional band to
    /// sample from.
    pub fn new(dist: &'a QualityDistribution, r: u64, mark: MarkingSpec) -> Result<Self> {
        if mark.secondary.is_some() {
            return Err(invalid("measurement needs a single-threshold marking"));
        }
        if matches!(dist, QualityDistribution::Filtered(_)) && mark.sense == Sense::Maximise {
            return Err(invalid("filtered distributions are minimised"));
        }
        if mark.threshold.is_nan() {
            return Err(invalid("threshold is NaN"));
        }
        let rho = dist.marked_ratio(&mark);
        Ok(Self {
            dist,
            r,
            mark,
            rho,
            success: grover_probability(r, rho),
        })
    }

    /// Minimise-sense marking `q < threshold`.
    pub fn below(dist: &'a QualityDistribution, r: u64, threshold: f64) -> Result<Self> {
        Self::new(dist, r, MarkingSpec::minimise(threshold))
    }

    pub fn rotations(&self) -> u64 {
        self.r
    }

    pub fn marked_ratio(&self) -> f64 {
        self.rho
    }

    pub fn success_probability(&self) -> f64 {
        self.success
    }

    /// Draws one solution without charging effort.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Measurement {
        let t = self.mark.threshold;
        let hit = self.success > 0.0 && rng.random::<f64>() < self.success;
        let (marked, unmarked) = match self.mark.sense {
            Sense::Minimise => (
                Side::Band(f64::NEG_INFINITY, t),
                Side::AtOrAbove(t),
            ),
            Sense::Maximise => {
                let u = t.next_up();
                (Side::Band(u, f64::INFINITY), Side::Band(f64::NEG_INFINITY, u))
            }
        };
        let draw = |side: Side, rng: &mut R| match side {
            Side::Band(lo, hi) => self.dist.draw_band(lo, hi, rng),
            Side::AtOrAbove(lo) => self.dist.draw_at_or_above(lo, rng),
        };
        let d = if hit {
            draw(marked, rng)
        } else {
            // an empty unmarked side means P = 1 up to rounding
            draw(unmarked, rng).or_else(|| draw(marked, rng))
        }
        .unwrap_or(Draw::new(f64::NAN, None));
        Measurement {
            quality: d.quality,
            id: d.id,
            marked: self.mark.marks(d.quality),
        }
    }

    /// Prepares and measures the state, charging `2r+1` calls.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R, ledger: &mut EffortLedger) -> Measurement {
        ledger.charge_amplified(self.r);
        self.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub rho: f64,
    pub probability: f64,
    pub regime: Regime,
}

/// `P(r, rho(T))` over a grid of thresholds (minimise sense).
pub fn threshold_response_curve(
    dist: &QualityDistribution,
    r: u64,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(invalid("empty threshold grid"));
    }
    Ok(grid
        .iter()
        .map(|&t| {
            let rho = dist.ratio_below(t);
            CurvePoint {
                threshold: t,
                rho,
                probability: grover_probability(r, rho),
                regime: classify_regime(r, rho),
            }
        })
        .collect())
}

/// Interior strict local maxima and minima of a sampled series, found from
/// sign changes of consecutive differences. Flat steps are skipped.
pub fn count_extrema(values: &[f64]) -> (usize, usize) {
    let mut maxima = 0;
    let mut minima = 0;
    let mut prev_sign = 0i8;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if prev_sign == 1 && sign == -1 {
            maxima += 1;
        } else if prev_sign == -1 && sign == 1 {
            minima += 1;
        }
        prev_sign = sign;
    }
    (maxima, minima)
}

/// Marked ratios at which `P(r, rho)` has its interior peaks and troughs,
/// ascending, restricted to `rho <= rho_max`.
pub fn extremum_ratios(r: u64, rho_max: f64) -> Vec<f64> {
    let k = (2 * r + 1) as f64;
    (1..)
        .map(|j| j as f64 * FRAC_PI_2 / k)
        .take_while(|&theta| theta < FRAC_PI_2)
        .map(|theta| theta.sin().powi(2))
        .take_while(|&rho| rho <= rho_max)
        .collect()
}

/// Threshold grid over `[lo, hi]` with spacing one eighth of the smallest gap
/// between adjacent extrema of the response curve inside that range.
pub fn response_grid(dist: &QualityDistribution, r: u64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(invalid(format!("empty threshold range [{lo}, {hi}]")));
    }
    let rho_hi = dist.ratio_below(hi);
    let mut ts = vec![lo];
    for rho in extremum_ratios(r, rho_hi) {
        let t = dist.quantile(rho)?;
        if t > lo && t < hi {
            ts.push(t);
        }
    }
    ts.push(hi);
    let gap = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 0.0)
        .fold(hi - lo, f64::min);
    let step = gap / 8.0;
    let n = ((hi - lo) / step).ceil() as usize;
    Ok((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
}

/// Expected measured quality for `r` rotations about threshold `t`
/// (minimise sense).
pub fn expectation_response(dist: &QualityDistribution, r: u64, t: f64) -> f64 {
    let rho = dist.ratio_below(t);
    mixed_mean(dist, t, grover_probability(r, rho))
}

/// As [`expectation_response`] but with the success probability held at its
/// peak once the rotation angle passes a quarter turn, tracing the upper
/// envelope of what a tuned threshold search can reach.
pub fn expectation_envelope(dist: &QualityDistribution, r: u64, t: f64) -> f64 {
    mixed_mean(dist, t, envelope_probability(r, dist.ratio_below(t)))
}

pub fn envelope_probability(r: u64, rho: f64) -> f64 {
    let angle = ((2 * r + 1) as f64 * rotation_angle(rho)).min(FRAC_PI_2);
    angle.sin().powi(2).min(1.0)
}

fn mixed_mean(dist: &QualityDistribution, t: f64, p: f64) -> f64 {
    let marked = dist.band_mean(f64::NEG_INFINITY, t);
    let unmarked = dist.band_mean(t, f64::INFINITY);
    match (marked, unmarked) {
        (Some(m), Some(u)) => p * m + (1.0 - p) * u,
        (Some(m), None) => m,
        (None, Some(u)) => u,
        (None, None) => dist.mean(),
    }
}

/// Threshold on `grid` giving the lowest envelope expectation, with the
/// amplification `P / rho` there as a fraction of `(2r+1)^2`.
pub fn best_envelope_threshold(
    dist: &QualityDistribution,
    r: u64,
    grid: &[f64],
) -> Result<(f64, f64)> {
    let t = grid
        .iter()
        .copied()
        .min_by(|&a, &b| {
            expectation_envelope(dist, r, a).total_cmp(&expectation_envelope(dist, r, b))
        })
        .ok_or_else(|| invalid("empty threshold grid"))?;
    let rho = dist.ratio_below(t);
    if rho == 0.0 {
        return Err(Error::InvalidArgument("optimum has no marked solutions".into()));
    }
    let k = (2 * r + 1) as f64;
    Ok((t, envelope_probability(r, rho) / rho / (k * k)))
}

/// Curve as CSV `T,rho,P,regime`.
pub fn write_curve_csv(points: &[CurvePoint], out: &mut impl Write) -> Result<()> {
    writeln!(out, "T,rho,P,regime")?;
    for p in points {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{}",
            p.threshold,
            p.rho,
            p.probability,
            p.regime.label()
        )?;
    }
    Ok(())
}
