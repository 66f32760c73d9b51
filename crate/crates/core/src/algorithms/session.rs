//! Measurement session shared by all strategies: effort accounting, target
//! detection and the stop rule.
//!
//! Long stretches of uninformative measurements are skipped in one step. When
//! a caller only cares about the first measurement whose quality falls below
//! some level, the number of measurements until that happens is geometric,
//! so it is drawn directly and only the decisive measurement is simulated.
//! This is exact in distribution and makes runs needing 10^9 calls cheap.

use std::ops::RangeInclusive;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dist::{Draw, QualityDistribution};
use crate::effort::{amplified_cost, EffortLedger};
use crate::error::{invalid, Result};
use crate::grover::{grover_probability, AmplifiedStateModel, Measurement};

/// Default hard ceiling on calls per run.
pub const DEFAULT_EFFORT_CAP: u64 = 100_000_000;

/// Which solutions count as a successful find.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Nothing is a target; runs end only at the effort cap or on their own.
    None,
    /// Every solution with quality strictly below the cutoff.
    Below(f64),
    /// Explicit solutions, identified by rank in the sorted distribution.
    /// Sorted and deduplicated.
    Ids(Vec<u64>),
}

impl Target {
    /// Lowest `round(mu N)` solutions, or the fraction `mu` of the continuum.
    pub fn ratio(dist: &QualityDistribution, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(invalid(format!("target ratio must lie in (0, 1), got {mu}")));
        }
        Ok(Self::Below(dist.quantile(mu)?))
    }

    /// Solutions attaining the minimum quality.
    pub fn optimal(dist: &QualityDistribution) -> Result<Self> {
        dist.min()
            .map(|m| Self::Below(m.next_up()))
            .ok_or_else(|| invalid("the continuum has no optimal solution"))
    }

    pub fn ids(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self::Ids(ids)
    }

    fn hit(&self, draw_quality: f64, id: Option<u64>) -> bool {
        match self {
            Self::None => false,
            Self::Below(c) => draw_quality < *c,
            Self::Ids(ids) => id.is_some_and(|i| ids.binary_search(&i).is_ok()),
        }
    }

    /// Fraction of the space that is a target.
    pub fn ratio_in(&self, dist: &QualityDistribution) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Below(c) => dist.ratio_below(*c),
            Self::Ids(ids) => match dist.size() {
                Some(n) => ids.iter().filter(|&&i| i < n).count() as f64 / n as f64,
                None => 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub target: Target,
    pub effort_cap: u64,
}

impl StopRule {
    pub fn new(target: Target, effort_cap: u64) -> Self {
        Self { target, effort_cap }
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    TargetFound,
    EffortCap,
}

pub type Step<T> = std::result::Result<T, Halt>;

pub struct Session<'a, R: Rng + ?Sized> {
    dist: &'a QualityDistribution,
    rng: &'a mut R,
    stop: &'a StopRule,
    ledger: EffortLedger,
    best: f64,
    found_at: Option<u64>,
}

impl<'a, R: Rng + ?Sized> Session<'a, R> {
    pub fn new(dist: &'a QualityDistribution, stop: &'a StopRule, rng: &'a mut R) -> Self {
        Self {
            dist,
            rng,
            stop,
            ledger: EffortLedger::new(),
            best: f64::INFINITY,
            found_at: None,
        }
    }

    /// Keeps every event in the ledger.
    pub fn logged(mut self) -> Self {
        self.ledger = EffortLedger::with_log();
        self
    }

    pub fn dist(&self) -> &'a QualityDistribution {
        self.dist
    }

    pub fn calls(&self) -> u64 {
        self.ledger.calls()
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Effort at which a target was first measured.
    pub fn found_at(&self) -> Option<u64> {
        self.found_at
    }

    pub fn ledger(&self) -> &EffortLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> EffortLedger {
        self.ledger
    }

    pub fn rng(&mut self) -> &mut R {
        self.rng
    }

    fn remaining(&self) -> u64 {
        self.stop.effort_cap.saturating_sub(self.ledger.calls())
    }

    fn finish(&mut self, quality: f64, id: Option<u64>, rotations: Option<u64>, marked: bool) -> Step<()> {
        if quality < self.best {
            self.best = quality;
        }
        self.ledger.record(self.best, rotations, marked);
        if self.found_at.is_none() && self.stop.target.hit(quality, id) {
            self.found_at = Some(self.ledger.calls());
            return Err(Halt::TargetFound);
        }
        Ok(())
    }

    /// Target cutoff usable for skipping, or `None` when targets are given
    /// by identity and every draw must be inspected.
    fn skip_level(&self, level: f64) -> Option<f64> {
        match self.stop.target {
            Target::None => Some(level),
            Target::Below(c) => Some(level.max(c)),
            Target::Ids(_) => None,
        }
    }

    /// One uniform sample, cost 1.
    pub fn classical(&mut self) -> Step<Draw> {
        if self.remaining() < 1 {
            return Err(Halt::EffortCap);
        }
        self.ledger.charge_classical();
        let d = self.dist.sample_uniform(self.rng);
        self.finish(d.quality, d.id, None, false)?;
        Ok(d)
    }

    /// Samples until one falls strictly below `level`; returns it.
    pub fn classical_until(&mut self, level: f64) -> Step<Draw> {
        let Some(e) = self.skip_level(level) else {
            loop {
                let d = self.classical()?;
                if d.quality < level {
                    return Ok(d);
                }
            }
        };
        let p = self.dist.ratio_below(e);
        let n = geometric_trials(p, self.rng);
        let remaining = self.remaining();
        if n > remaining as f64 {
            self.ledger.charge_classical_many(remaining);
            return Err(Halt::EffortCap);
        }
        self.ledger.charge_classical_many(n as u64);
        let d = self
            .dist
            .draw_band(f64::NEG_INFINITY, e, self.rng)
            .expect("positive mass below level");
        self.finish(d.quality, d.id, None, false)?;
        Ok(d)
    }

    /// One amplified measurement with `r` rotations about threshold `t`.
    pub fn measure(&mut self, r: u64, t: f64) -> Step<Measurement> {
        let cost = amplified_cost(r);
        if self.remaining() < cost {
            return Err(Halt::EffortCap);
        }
        self.ledger.charge_amplified(r);
        let m = AmplifiedStateModel::below(self.dist, r, t)
            .expect("single threshold")
            .sample(self.rng);
        self.finish(m.quality, m.id, Some(r), m.marked)?;
        Ok(m)
    }

    /// Repeats amplified measurements about `t`, each with a rotation count
    /// drawn uniformly from `rs`, until one has quality below `level`.
    /// Returns that measurement, its rotation count and the number of
    /// measurements taken.
    pub fn measure_until(
        &mut self,
        rs: RangeInclusive<u64>,
        t: f64,
        level: f64,
    ) -> Step<(Measurement, u64, u64)> {
        let (r_lo, r_hi) = (*rs.start(), *rs.end());
        let Some(e) = self.skip_level(level) else {
            let mut n = 0;
            loop {
                let r = self.rng.random_range(r_lo..=r_hi);
                let m = self.measure(r, t)?;
                n += 1;
                if m.quality < level {
                    return Ok((m, r, n));
                }
            }
        };
        let dist = self.dist;
        let rho = dist.ratio_below(t);
        // fractions of the marked and unmarked sides lying below e
        let a = if rho > 0.0 {
            (dist.ratio_below(t.min(e)) / rho).min(1.0)
        } else {
            0.0
        };
        let b = if rho < 1.0 && e > t {
            (dist.band_mass(t, e) / (1.0 - rho)).min(1.0)
        } else {
            0.0
        };
        let per_r: Vec<(f64, f64)> = (r_lo..=r_hi)
            .map(|r| {
                let pr = grover_probability(r, rho);
                (pr, (pr * a + (1.0 - pr) * b).clamp(0.0, 1.0))
            })
            .collect();
        let k = per_r.len() as f64;
        let p_mean = per_r.iter().map(|x| x.1).sum::<f64>() / k;
        let remaining = self.remaining();
        if p_mean <= 0.0 {
            self.charge_to_cap(r_lo, r_hi, remaining);
            return Err(Halt::EffortCap);
        }
        let failures = geometric_trials(p_mean, self.rng) - 1.0;
        let min_cost = amplified_cost(r_lo) as f64;
        if failures * min_cost >= remaining as f64 {
            self.charge_to_cap(r_lo, r_hi, remaining);
            return Err(Halt::EffortCap);
        }
        let failures = failures as u64;
        let failure_cost = if r_lo == r_hi {
            failures * amplified_cost(r_lo)
        } else {
            self.failure_cost(r_lo, &per_r, failures)
        };
        // the decisive measurement: rotation count weighted by its chance of
        // being interesting, then the side it came from
        let idx = pick_weighted(per_r.iter().map(|x| x.1), self.rng);
        let r = r_lo + idx as u64;
        let total = failure_cost + amplified_cost(r);
        if total > remaining {
            self.charge_to_cap(r_lo, r_hi, remaining);
            return Err(Halt::EffortCap);
        }
        let (pr, pi) = per_r[idx];
        let marked_side = self.rng.random::<f64>() * pi < pr * a;
        let draw = if marked_side {
            dist.draw_band(f64::NEG_INFINITY, t.min(e), self.rng)
        } else {
            dist.draw_band(t, e, self.rng)
        }
        .expect("interesting band has mass");
        self.ledger.charge(total);
        let m = Measurement {
            quality: draw.quality,
            id: draw.id,
            marked: draw.quality < t,
        };
        self.finish(m.quality, m.id, Some(r), m.marked)?;
        if m.quality < level {
            Ok((m, r, failures + 1))
        } else {
            // only reachable through a target hit, which halted above
            unreachable!("interesting draw neither below level nor a target")
        }
    }

    /// Total cost of `failures` uninteresting measurements whose rotation
    /// counts follow `(1 - p_r)` weights: a multinomial split drawn as a
    /// chain of binomials.
    fn failure_cost(&mut self, r_lo: u64, per_r: &[(f64, f64)], failures: u64) -> u64 {
        let weights: Vec<f64> = per_r.iter().map(|x| 1.0 - x.1).collect();
        let mut mass_left: f64 = weights.iter().sum();
        let mut left = failures;
        let mut cost = 0;
        for (i, w) in weights.iter().enumerate() {
            if left == 0 {
                break;
            }
            let n = if i + 1 == weights.len() || mass_left <= *w {
                left
            } else {
                let p = (w / mass_left).clamp(0.0, 1.0);
                Binomial::new(left, p).expect("valid binomial").sample(self.rng)
            };
            cost += n * amplified_cost(r_lo + i as u64);
            left -= n;
            mass_left -= w;
        }
        cost
    }

    fn charge_to_cap(&mut self, r_lo: u64, r_hi: u64, remaining: u64) {
        let charge = if r_lo == r_hi {
            let c = amplified_cost(r_lo);
            remaining / c * c
        } else {
            remaining
        };
        self.ledger.charge(charge);
    }
}

/// Number of Bernoulli(p) trials up to and including the first success, as
/// a float so that astronomically long waits do not overflow.
pub fn geometric_trials<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return f64::INFINITY;
    }
    let u = crate::dist::open_unit(rng);
    1.0 + (u.ln() / (-p).ln_1p()).floor()
}

fn pick_weighted<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let mut x = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if x < w {
                return i;
            }
            x -= w;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FiniteDistribution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hundred() -> QualityDistribution {
        FiniteDistribution::from_qualities((0..100).map(f64::from).collect())
            .unwrap()
            .into()
    }

    #[test]
    fn geometric_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| geometric_trials(0.1, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
        assert_eq!(geometric_trials(1.0, &mut rng), 1.0);
    }

    #[test]
    fn cap_halts_and_clamps() {
        let d = hundred();
        let stop = StopRule::new(Target::None, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = Session::new(&d, &stop, &mut rng);
        // nothing lies below -1, so the wait is infinite
        assert_eq!(s.measure_until(3..=3, 50.0, -1.0), Err(Halt::EffortCap));
        assert_eq!(s.calls(), 994);
        assert_eq!(s.measure(3, 50.0), Err(Halt::EffortCap));
    }

    #[test]
    fn target_hit_records_effort() {
        let d = hundred();
        let stop = StopRule::new(Target::Below(1.0), u64::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = Session::new(&d, &stop, &mut rng);
        let mut halted = false;
        for _ in 0..100_000 {
            if s.classical_until(f64::INFINITY) == Err(Halt::TargetFound) {
                halted = true;
                break;
            }
        }
        assert!(halted);
        assert_eq!(s.found_at(), Some(s.calls()));
        assert_eq!(s.best(), 0.0);
    }

    #[test]
    fn skip_ahead_matches_direct_simulation() {
        // mean effort until the first measurement below 5, threshold 20, r = 2
        let d = hundred();
        let stop = StopRule::new(Target::None, u64::MAX);
        let runs = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut skip = 0u64;
        for _ in 0..runs {
            let mut s = Session::new(&d, &stop, &mut rng);
            s.measure_until(2..=2, 20.0, 5.0).unwrap();
            skip += s.calls();
        }
        let ids = StopRule::new(Target::ids(vec![]), u64::MAX);
        let mut direct = 0u64;
        for _ in 0..runs {
            let mut s = Session::new(&d, &ids, &mut rng);
            s.measure_until(2..=2, 20.0, 5.0).unwrap();
            direct += s.calls();
        }
        // per-measurement success is P(2, 0.2) * 5/20
        let p = grover_probability(2, 0.2) * 0.25;
        let expect = 5.0 / p;
        for total in [skip, direct] {
            let mean = total as f64 / runs as f64;
            assert!((mean / expect - 1.0).abs() < 0.03, "{mean} vs {expect}");
        }
    }

    #[test]
    fn mixed_rotations_cost() {
        // uniform r in 0..=3 about the lower quartile; r = 1 always hits
        let d = hundred();
        let stop = StopRule::new(Target::None, u64::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let runs = 20_000;
        let mut total = 0u64;
        for _ in 0..runs {
            let mut s = Session::new(&d, &stop, &mut rng);
            let (m, _, _) = s.measure_until(0..=3, 25.0, 25.0).unwrap();
            assert!(m.quality < 25.0);
            total += s.calls();
        }
        let ps: Vec<f64> = (0..=3).map(|r| grover_probability(r, 0.25)).collect();
        let p_mean = ps.iter().sum::<f64>() / 4.0;
        let cost_mean = (1.0 + 3.0 + 5.0 + 7.0) / 4.0;
        // Wald: expected cost is the mean trial count times mean cost per trial
        let expect = cost_mean / p_mean;
        let mean = total as f64 / runs as f64;
        assert!((mean / expect - 1.0).abs() < 0.03, "{mean} vs {expect}");
    }
}
