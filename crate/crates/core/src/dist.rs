//! Solution-quality distributions.
//!
//! A distribution stands in for the quality function over a whole solution
//! space. The simulated algorithms only ever ask it three kinds of question:
//! what fraction of solutions lies below a threshold, draw a uniform solution
//! from a quality band, and the inverse of the first. Finite spaces are held
//! as sorted `(value, multiplicity)` runs; the large-problem limit is the
//! standard normal.
//!
//! Solutions of a finite distribution are identified by their rank in sorted
//! order (ties keep the order in which they were supplied), so the marked set
//! for a minimising threshold `T` is always the rank prefix `[0, m(T))`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::normal;

/// Whether lower or higher qualities are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// Marks `q < T`.
    Minimise,
    /// Marks `q > T`.
    Maximise,
}

/// Binary marking function: a strict threshold plus an optional second
/// cutoff on an auxiliary coordinate (only meaningful for two-dimensional
/// tables such as portfolio risk/return, where it marks `aux < cutoff`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkingSpec {
    pub threshold: f64,
    pub sense: Sense,
    pub secondary: Option<f64>,
}

impl MarkingSpec {
    pub fn minimise(threshold: f64) -> Self {
        Self {
            threshold,
            sense: Sense::Minimise,
            secondary: None,
        }
    }

    pub fn maximise(threshold: f64) -> Self {
        Self {
            threshold,
            sense: Sense::Maximise,
            secondary: None,
        }
    }

    pub fn with_secondary(mut self, cutoff: f64) -> Self {
        self.secondary = Some(cutoff);
        self
    }

    /// Whether a single quality value is marked (the secondary cutoff is not
    /// consulted here).
    pub fn marks(&self, quality: f64) -> bool {
        match self.sense {
            Sense::Minimise => quality < self.threshold,
            Sense::Maximise => quality > self.threshold,
        }
    }
}

/// A measured or sampled solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    /// Quality as seen by the marking function; `+inf` for solutions a
    /// filtered distribution excludes.
    pub quality: f64,
    /// Underlying objective value, equal to `quality` except for excluded
    /// solutions of a filtered distribution.
    pub raw: f64,
    /// Sorted rank for finite distributions; `None` for the analytic normal.
    pub id: Option<u64>,
}

impl Draw {
    pub fn new(quality: f64, id: Option<u64>) -> Self {
        Self {
            quality,
            raw: quality,
            id,
        }
    }
}

/// Finite multiset of qualities stored as strictly increasing runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    values: Vec<f64>,
    /// `cumulative[i]` = number of solutions in runs `0..=i`.
    cumulative: Vec<u64>,
    /// `weighted[i]` = sum of `value * multiplicity` over runs `0..=i`.
    weighted: Vec<f64>,
}

impl FiniteDistribution {
    /// Builds from raw (unsorted, possibly repeated) qualities.
    pub fn from_qualities(mut qualities: Vec<f64>) -> Result<Self> {
        if qualities.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some(bad) = qualities.iter().find(|q| !q.is_finite()) {
            return Err(crate::error::invalid(format!("non-finite quality {bad}")));
        }
        qualities.sort_by(f64::total_cmp);
        let mut runs: Vec<(f64, u64)> = Vec::new();
        for q in qualities {
            match runs.last_mut() {
                Some((v, n)) if *v == q => *n += 1,
                _ => runs.push((q, 1)),
            }
        }
        Self::from_runs(runs)
    }

    /// Builds from `(value, multiplicity)` runs, which must have strictly
    /// increasing finite values and positive multiplicities.
    pub fn from_runs(runs: Vec<(f64, u64)>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut values = Vec::with_capacity(runs.len());
        let mut cumulative = Vec::with_capacity(runs.len());
        let mut weighted = Vec::with_capacity(runs.len());
        let mut total = 0u64;
        let mut sum = 0.0;
        for (i, &(v, n)) in runs.iter().enumerate() {
            if !v.is_finite() {
                return Err(crate::error::invalid(format!("non-finite quality {v}")));
            }
            if n == 0 {
                return Err(crate::error::invalid(format!("run {i} has zero multiplicity")));
            }
            if i > 0 && v <= values[i - 1] {
                return Err(Error::Unsorted { index: i });
            }
            total = total
                .checked_add(n)
                .ok_or_else(|| crate::error::invalid("solution count overflows u64"))?;
            sum += v * n as f64;
            values.push(v);
            cumulative.push(total);
            weighted.push(sum);
        }
        Ok(Self {
            values,
            cumulative,
            weighted,
        })
    }

    /// Total number of solutions `N`.
    pub fn len(&self) -> u64 {
        *self.cumulative.last().expect("non-empty")
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn run_count(&self) -> usize {
        self.values.len()
    }

    pub fn runs(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| {
            let before = if i == 0 { 0 } else { self.cumulative[i - 1] };
            (v, self.cumulative[i] - before)
        })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.weighted.last().copied().unwrap_or(0.0) / self.len() as f64
    }

    /// Multiplicity of the best (lowest) quality.
    pub fn optimal_count(&self) -> u64 {
        self.cumulative[0]
    }

    /// Number of solutions with quality strictly below `t`.
    pub fn count_below(&self, t: f64) -> u64 {
        let runs = self.values.partition_point(|&v| v < t);
        if runs == 0 {
            0
        } else {
            self.cumulative[runs - 1]
        }
    }

    /// Number of solutions with quality strictly above `t`.
    pub fn count_above(&self, t: f64) -> u64 {
        let runs = self.values.partition_point(|&v| v <= t);
        let at_or_below = if runs == 0 { 0 } else { self.cumulative[runs - 1] };
        self.len() - at_or_below
    }

    /// Quality of the solution with sorted rank `rank`.
    pub fn quality_at(&self, rank: u64) -> f64 {
        let run = self.cumulative.partition_point(|&c| c <= rank);
        self.values[run.min(self.values.len() - 1)]
    }

    /// Sum of qualities over ranks `[0, count)`, where `count` must fall on a
    /// run boundary produced by [`count_below`](Self::count_below).
    fn weighted_prefix(&self, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        let run = self.cumulative.partition_point(|&c| c < count);
        self.weighted[run]
    }

    /// Writes the binary distribution file.
    ///
    /// Layout: 8-byte magic, version byte, little-endian `u64` run count, then
    /// per run a little-endian `f64` value and `u64` multiplicity.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&FILE_MAGIC)?;
        out.write_all(&[FILE_VERSION])?;
        out.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for (v, n) in self.runs() {
            out.write_all(&v.to_le_bytes())?;
            out.write_all(&n.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        Self::read_from(&mut input)
    }

    pub fn read_from(input: &mut impl Read) -> Result<Self> {
        let d = Self::read_block(input)?;
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(d)
    }

    /// One distribution block, leaving anything after it unread.
    fn read_block(input: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 17];
        let got = read_fully(input, &mut header)?;
        if got < 9 {
            return Err(Error::Format("header shorter than 9 bytes".into()));
        }
        if header[..8] != FILE_MAGIC {
            return Err(Error::Format("magic mismatch".into()));
        }
        if header[8] != FILE_VERSION {
            return Err(Error::Format(format!("unsupported version {}", header[8])));
        }
        if got < 17 {
            return Err(Error::Format("missing run count".into()));
        }
        let runs = u64::from_le_bytes(header[9..17].try_into().expect("8 bytes"));
        let expected = runs
            .checked_mul(16)
            .ok_or_else(|| Error::Format(format!("absurd run count {runs}")))?;
        let mut payload = Vec::new();
        input.take(expected).read_to_end(&mut payload)?;
        if (payload.len() as u64) < expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len() as u64,
            });
        }
        let parsed = payload
            .chunks_exact(16)
            .map(|c| {
                let v = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let n = u64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                (v, n)
            })
            .collect();
        Self::from_runs(parsed)
    }

    /// CSV export with a `value,multiplicity` header.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "value,multiplicity")?;
        for (v, n) in self.runs() {
            writeln!(out, "{v},{n}")?;
        }
        Ok(())
    }
}

fn read_fully(input: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

pub const FILE_MAGIC: [u8; 8] = *b"MAOADIST";
pub const FILTERED_MAGIC: [u8; 8] = *b"MAOAFILT";
pub const FILE_VERSION: u8 = 1;

/// A finite space in which only some solutions are eligible for marking.
///
/// Eligible solutions keep their quality; the rest read as `+inf` to the
/// marking function, so no threshold ever marks them, while still occupying
/// their share of the space for uniform sampling. This is how a fixed second
/// threshold (such as a portfolio risk cutoff) is folded into a
/// one-dimensional search over the full space. Eligible solutions take ranks
/// `[0, M)`, excluded ones `[M, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDistribution {
    eligible: FiniteDistribution,
    excluded: Option<FiniteDistribution>,
}

impl FilteredDistribution {
    /// `excluded` holds the underlying objective values of the excluded
    /// solutions.
    pub fn new(eligible: FiniteDistribution, excluded: Option<FiniteDistribution>) -> Self {
        Self { eligible, excluded }
    }

    pub fn eligible(&self) -> &FiniteDistribution {
        &self.eligible
    }

    pub fn excluded(&self) -> Option<&FiniteDistribution> {
        self.excluded.as_ref()
    }

    pub fn len(&self) -> u64 {
        self.eligible.len() + self.excluded.as_ref().map_or(0, FiniteDistribution::len)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Layout: magic, version byte, the eligible block, a flag byte, and the
    /// excluded block when the flag is 1. Blocks use the plain layout.
    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&FILTERED_MAGIC)?;
        out.write_all(&[FILE_VERSION])?;
        self.eligible.write_to(out)?;
        match &self.excluded {
            Some(x) => {
                out.write_all(&[1])?;
                x.write_to(out)
            }
            None => Ok(out.write_all(&[0])?),
        }
    }

    pub fn read_from(input: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 9];
        if read_fully(input, &mut header)? < 9 || header[..8] != FILTERED_MAGIC {
            return Err(Error::Format("magic mismatch".into()));
        }
        if header[8] != FILE_VERSION {
            return Err(Error::Format(format!("unsupported version {}", header[8])));
        }
        let eligible = FiniteDistribution::read_block(input)?;
        let mut flag = [0u8; 1];
        if read_fully(input, &mut flag)? < 1 {
            return Err(Error::Format("missing excluded-block flag".into()));
        }
        let excluded = match flag[0] {
            0 => None,
            1 => Some(FiniteDistribution::read_block(input)?),
            f => return Err(Error::Format(format!("bad excluded-block flag {f}"))),
        };
        if input.read(&mut flag)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Self { eligible, excluded })
    }
}

/// Quality distribution over a solution space.
#[derive(Debug, Clone, PartialEq)]
pub enum QualityDistribution {
    Finite(FiniteDistribution),
    Filtered(FilteredDistribution),
    /// Continuous standard normal, the limit of an arbitrarily large problem.
    Normal,
}

impl From<FiniteDistribution> for QualityDistribution {
    fn from(d: FiniteDistribution) -> Self {
        Self::Finite(d)
    }
}

impl From<FilteredDistribution> for QualityDistribution {
    fn from(d: FilteredDistribution) -> Self {
        Self::Filtered(d)
    }
}

impl QualityDistribution {
    /// Reads either file layout, chosen by its magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(&FILTERED_MAGIC) {
            Ok(Self::Filtered(FilteredDistribution::read_from(&mut bytes.as_slice())?))
        } else {
            Ok(Self::Finite(FiniteDistribution::read_from(&mut bytes.as_slice())?))
        }
    }

    /// Writes a finite or filtered distribution; the normal has no file form.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        match self {
            Self::Finite(d) => d.write_to(&mut out)?,
            Self::Filtered(d) => d.write_to(&mut out)?,
            Self::Normal => {
                return Err(crate::error::invalid("the analytic normal cannot be saved"))
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Solution count, `None` for the continuous limit.
    pub fn size(&self) -> Option<u64> {
        match self {
            Self::Finite(d) => Some(d.len()),
            Self::Filtered(d) => Some(d.len()),
            Self::Normal => None,
        }
    }

    /// Lowest quality, `None` for the continuous limit.
    pub fn min(&self) -> Option<f64> {
        match self {
            Self::Finite(d) => Some(d.min()),
            Self::Filtered(d) => Some(d.eligible.min()),
            Self::Normal => None,
        }
    }

    /// Fraction of solutions with quality strictly below `t`.
    pub fn ratio_below(&self, t: f64) -> f64 {
        match self {
            Self::Finite(d) => d.count_below(t) as f64 / d.len() as f64,
            Self::Filtered(d) => d.eligible.count_below(t) as f64 / d.len() as f64,
            Self::Normal => normal::cdf(t),
        }
    }

    /// Marked ratio `rho(T)` under a marking function. Excluded solutions
    /// of a filtered distribution are never marked.
    pub fn marked_ratio(&self, mark: &MarkingSpec) -> f64 {
        match (self, mark.sense) {
            (_, Sense::Minimise) => self.ratio_below(mark.threshold),
            (Self::Finite(d), Sense::Maximise) => {
                d.count_above(mark.threshold) as f64 / d.len() as f64
            }
            (Self::Filtered(d), Sense::Maximise) => {
                d.eligible.count_above(mark.threshold) as f64 / d.len() as f64
            }
            (Self::Normal, Sense::Maximise) => normal::sf(mark.threshold),
        }
    }

    /// Fraction of solutions with `lo <= q < hi` (excluded solutions of a
    /// filtered distribution never count).
    pub fn band_mass(&self, lo: f64, hi: f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        match self {
            Self::Finite(d) => {
                (d.count_below(hi) - d.count_below(lo)) as f64 / d.len() as f64
            }
            Self::Filtered(f) => {
                let d = &f.eligible;
                (d.count_below(hi) - d.count_below(lo)) as f64 / f.len() as f64
            }
            Self::Normal => {
                if lo >= 0.0 {
                    normal::sf(lo) - normal::sf(hi)
                } else {
                    normal::cdf(hi) - normal::cdf(lo)
                }
            }
        }
    }

    /// Threshold `T` whose marked ratio (minimise sense) is closest to `p`.
    ///
    /// Finite case: the threshold marking `round(p N)` solutions where ties
    /// allow it (otherwise the largest achievable count below that). A
    /// filtered distribution returns `+inf` once `p` reaches its eligible
    /// share.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        match self {
            Self::Normal => Ok(normal::inverse_cdf(p)),
            Self::Finite(d) => {
                let k = (p * d.len() as f64).round() as u64;
                if k >= d.len() {
                    Ok(d.max().next_up())
                } else {
                    Ok(d.quality_at(k))
                }
            }
            Self::Filtered(f) => {
                let k = (p * f.len() as f64).round() as u64;
                if k >= f.eligible.len() {
                    Ok(f64::INFINITY)
                } else {
                    Ok(f.eligible.quality_at(k))
                }
            }
        }
    }

    /// Uniform draw from the whole solution space.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match self {
            Self::Finite(d) => {
                let rank = rng.random_range(0..d.len());
                Draw::new(d.quality_at(rank), Some(rank))
            }
            Self::Filtered(f) => f.draw_rank(rng.random_range(0..f.len())),
            Self::Normal => Draw::new(normal::inverse_cdf(open_unit(rng)), None),
        }
    }

    /// Uniform draw from the band `lo <= q < hi`, or `None` if it is empty.
    pub fn draw_band<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Option<Draw> {
        match self {
            Self::Finite(d) => {
                let a = d.count_below(lo);
                let b = d.count_below(hi);
                if a >= b {
                    return None;
                }
                let rank = rng.random_range(a..b);
                Some(Draw::new(d.quality_at(rank), Some(rank)))
            }
            Self::Filtered(f) => {
                let a = f.eligible.count_below(lo);
                let b = f.eligible.count_below(hi);
                if a >= b {
                    return None;
                }
                Some(f.draw_rank(rng.random_range(a..b)))
            }
            Self::Normal => {
                if !(lo < hi) {
                    return None;
                }
                let u = open_unit(rng);
                let quality = if lo >= 0.0 {
                    // Work with upper-tail masses so tiny bands stay exact.
                    let (sa, sb) = (normal::sf(lo), normal::sf(hi));
                    if sa <= sb {
                        return None;
                    }
                    normal::inverse_sf(sb + u * (sa - sb))
                } else {
                    let (a, b) = (normal::cdf(lo), normal::cdf(hi));
                    if b <= a {
                        return None;
                    }
                    normal::inverse_cdf(a + u * (b - a))
                };
                Some(Draw::new(quality.clamp(lo, hi.next_down()), None))
            }
        }
    }

    /// Uniform draw from every solution with `q >= lo`, including the
    /// excluded solutions of a filtered distribution.
    pub fn draw_at_or_above<R: Rng + ?Sized>(&self, lo: f64, rng: &mut R) -> Option<Draw> {
        match self {
            Self::Filtered(f) => {
                let a = f.eligible.count_below(lo);
                if a >= f.len() {
                    return None;
                }
                Some(f.draw_rank(rng.random_range(a..f.len())))
            }
            _ => self.draw_band(lo, f64::INFINITY, rng),
        }
    }

    /// Mean quality over the band `lo <= q < hi`, `None` if it is empty.
    /// Filtered distributions average eligible solutions only.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        match self {
            Self::Finite(d) => d.band_mean(lo, hi),
            Self::Filtered(f) => f.eligible.band_mean(lo, hi),
            Self::Normal => {
                if !(lo < hi) {
                    return None;
                }
                match (lo == f64::NEG_INFINITY, hi == f64::INFINITY) {
                    (true, true) => Some(0.0),
                    (true, false) => Some(normal::mean_below(hi)),
                    (false, true) => Some(normal::mean_at_or_above(lo)),
                    (false, false) => {
                        let mass = self.band_mass(lo, hi);
                        (mass > 0.0).then(|| (normal::pdf(lo) - normal::pdf(hi)) / mass)
                    }
                }
            }
        }
    }

    /// Mean quality; filtered distributions average eligible solutions only.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Finite(d) => d.mean(),
            Self::Filtered(f) => f.eligible.mean(),
            Self::Normal => 0.0,
        }
    }
}

impl FilteredDistribution {
    fn draw_rank(&self, rank: u64) -> Draw {
        let m = self.eligible.len();
        if rank < m {
            Draw::new(self.eligible.quality_at(rank), Some(rank))
        } else {
            let raw = self
                .excluded
                .as_ref()
                .expect("rank beyond eligible implies excluded solutions")
                .quality_at(rank - m);
            Draw {
                quality: f64::INFINITY,
                raw,
                id: Some(rank),
            }
        }
    }
}

impl FiniteDistribution {
    fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let a = self.count_below(lo);
        let b = self.count_below(hi);
        if a >= b {
            return None;
        }
        Some((self.weighted_prefix(b) - self.weighted_prefix(a)) / (b - a) as f64)
    }
}


/// Uniform on the open interval `(0, 1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
