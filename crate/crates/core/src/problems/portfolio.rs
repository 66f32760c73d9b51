//! Markowitz portfolio selection over long/short/none positions.
//!
//! A portfolio is `z in {-1, 0, 1}^n` with `sum z = I`. Its return is
//! `sum R_i z_i` and its risk `sum sigma_ij z_i z_j`. The solution space is
//! enumerated exhaustively into a (risk, return) table, from which the
//! one-dimensional objective used by the optimisers is derived: minimise
//! `-return` among the lowest-risk fraction of portfolios.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::binomial;
use crate::dist::{FilteredDistribution, FiniteDistribution, MarkingSpec, QualityDistribution, Sense};
use crate::error::{invalid, Error, Result};
use crate::kv::KvDoc;

/// Risk values are reported in units of one hundredth of the raw
/// percentage-return covariance.
pub const RISK_SCALE: f64 = 0.01;

/// Number of `z` vectors of length `n` with entries in `{-1, 0, 1}` summing
/// to `net`.
pub fn portfolio_cardinality(n: usize, net: i64) -> Result<u128> {
    let i = net.unsigned_abs();
    let n = n as u64;
    if i > n {
        return Err(invalid(format!("net position {net} exceeds asset count {n}")));
    }
    Ok((0..=(n - i) / 2)
        .map(|s| binomial(n, i + s) * binomial(n - i - s, s))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInstance {
    /// Expected daily percentage return per asset.
    pub returns: Vec<f64>,
    /// Covariance of daily percentage returns, already multiplied by
    /// [`RISK_SCALE`].
    pub covariance: Vec<Vec<f64>>,
    pub net_position: i64,
}

impl PortfolioInstance {
    pub fn new(returns: Vec<f64>, covariance: Vec<Vec<f64>>, net_position: i64) -> Result<Self> {
        let n = returns.len();
        if n == 0 {
            return Err(invalid("portfolio needs at least one asset"));
        }
        if covariance.len() != n || covariance.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("covariance must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (covariance[i][j], covariance[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(invalid(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        if net_position.unsigned_abs() > n as u64 {
            return Err(invalid(format!(
                "net position {net_position} exceeds asset count {n}"
            )));
        }
        Ok(Self {
            returns,
            covariance,
            net_position,
        })
    }

    pub fn assets(&self) -> usize {
        self.returns.len()
    }

    pub fn portfolio_return(&self, z: &[i8]) -> f64 {
        self.returns
            .iter()
            .zip(z)
            .map(|(r, &zi)| r * f64::from(zi))
            .sum()
    }

    pub fn risk(&self, z: &[i8]) -> f64 {
        let mut acc = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0 {
                continue;
            }
            for (j, &zj) in z.iter().enumerate() {
                acc += self.covariance[i][j] * f64::from(zi) * f64::from(zj);
            }
        }
        acc
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("assets", self.assets());
        doc.set("net_position", self.net_position);
        doc.set("returns", join(&self.returns));
        for (i, row) in self.covariance.iter().enumerate() {
            doc.set(format!("covariance.{i}"), join(row));
        }
        doc
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let n: usize = doc.parse_value("assets")?;
        let net = doc.parse_value("net_position")?;
        let returns: Vec<f64> = doc.parse_list("returns")?;
        if returns.len() != n {
            return Err(invalid(format!("expected {n} returns, got {}", returns.len())));
        }
        let covariance = (0..n)
            .map(|i| doc.parse_list(&format!("covariance.{i}")))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(returns, covariance, net)
    }
}

fn join(xs: &[f64]) -> String {
    // `{:?}` prints the shortest representation that round-trips exactly
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Risk and return of every valid portfolio, in lexicographic order of `z`
/// with entries ordered `-1 < 0 < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioTable {
    pub risk: Vec<f64>,
    pub ret: Vec<f64>,
}

pub fn portfolio_enumerate(inst: &PortfolioInstance) -> PortfolioTable {
    struct Walk<'a> {
        inst: &'a PortfolioInstance,
        z: Vec<i8>,
        table: PortfolioTable,
    }
    impl Walk<'_> {
        fn rec(&mut self, k: usize, sum: i64, risk: f64, ret: f64) {
            let n = self.inst.assets();
            if k == n {
                if sum == self.inst.net_position {
                    self.table.risk.push(risk);
                    self.table.ret.push(ret);
                }
                return;
            }
            let remaining = (n - k) as i64;
            for zk in [-1i8, 0, 1] {
                let s = sum + i64::from(zk);
                if (self.inst.net_position - s).abs() > remaining - 1 {
                    continue;
                }
                let (mut dr, dret) = (0.0, self.inst.returns[k] * f64::from(zk));
                if zk != 0 {
                    let row = &self.inst.covariance[k];
                    let cross: f64 = (0..k).map(|i| row[i] * f64::from(self.z[i])).sum();
                    dr = row[k] + 2.0 * f64::from(zk) * cross;
                }
                self.z[k] = zk;
                self.rec(k + 1, s, risk + dr, ret + dret);
            }
            self.z[k] = 0;
        }
    }
    let mut walk = Walk {
        inst,
        z: vec![0; inst.assets()],
        table: PortfolioTable {
            risk: Vec::new(),
            ret: Vec::new(),
        },
    };
    walk.rec(0, 0, 0.0, 0.0);
    walk.table
}

impl PortfolioTable {
    pub fn len(&self) -> usize {
        self.risk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.risk.is_empty()
    }

    /// Risk cutoff `c` such that `risk < c` selects `round(fraction * N)`
    /// portfolios (fewer when risks tie at the boundary).
    pub fn risk_cutoff(&self, fraction: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidProbability(fraction));
        }
        let dist = FiniteDistribution::from_qualities(self.risk.clone())?;
        QualityDistribution::Finite(dist).quantile(fraction)
    }

    /// Two-threshold marked ratio: the primary threshold applies to return in
    /// its sense, the secondary cutoff marks `risk < cutoff`.
    pub fn marked_ratio(&self, mark: &MarkingSpec) -> f64 {
        let marked = self
            .risk
            .iter()
            .zip(&self.ret)
            .filter(|(&risk, &ret)| {
                let primary = match mark.sense {
                    Sense::Maximise => ret > mark.threshold,
                    Sense::Minimise => ret < mark.threshold,
                };
                primary && mark.secondary.is_none_or(|c| risk < c)
            })
            .count();
        marked as f64 / self.len() as f64
    }

    /// Distribution of `-return` over portfolios with `risk < cutoff`, where
    /// the cutoff isolates the lowest-risk `fraction` of all portfolios.
    /// Returns the distribution and the cutoff.
    pub fn low_risk_objective(&self, fraction: f64) -> Result<(FiniteDistribution, f64)> {
        let cutoff = self.risk_cutoff(fraction)?;
        let qualities: Vec<f64> = self
            .risk
            .iter()
            .zip(&self.ret)
            .filter(|(&risk, _)| risk < cutoff)
            .map(|(_, &ret)| -ret)
            .collect();
        Ok((FiniteDistribution::from_qualities(qualities)?, cutoff))
    }
}

impl PortfolioTable {
    /// The full space with `-return` as quality, where only portfolios with
    /// `risk < cutoff` are eligible for marking; the cutoff isolates the
    /// lowest-risk `fraction`. Searching this space marks with both
    /// thresholds at once. Returns the distribution and the cutoff.
    pub fn filtered_objective(&self, fraction: f64) -> Result<(FilteredDistribution, f64)> {
        let cutoff = self.risk_cutoff(fraction)?;
        let (mut eligible, mut excluded) = (Vec::new(), Vec::new());
        for (&risk, &ret) in self.risk.iter().zip(&self.ret) {
            if risk < cutoff {
                eligible.push(-ret);
            } else {
                excluded.push(-ret);
            }
        }
        let excluded = if excluded.is_empty() {
            None
        } else {
            Some(FiniteDistribution::from_qualities(excluded)?)
        };
        let eligible = FiniteDistribution::from_qualities(eligible)?;
        Ok((FilteredDistribution::new(eligible, excluded), cutoff))
    }
}

/// Estimates returns and covariance from a CSV of daily prices.
///
/// The first row names the assets; each following row is one trading day.
/// Returns are arithmetic daily percentage changes; covariance uses the
/// `n - 1` denominator (zero when there is a single return sample) and is
/// scaled by [`RISK_SCALE`]. The net position of the result is 0.
pub fn ingest_prices(reader: impl Read) -> Result<(Vec<String>, PortfolioInstance)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let n = names.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no asset columns".into(),
        });
    }
    let mut prices: Vec<Vec<f64>> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("expected {n} prices, got {}", rec.len()),
            });
        }
        let day = rec
            .iter()
            .map(|cell| {
                let p: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric price {cell:?}"),
                })?;
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("price must be positive, got {cell}"),
                    });
                }
                Ok(p)
            })
            .collect::<Result<Vec<f64>>>()?;
        prices.push(day);
    }
    if prices.len() < 2 {
        return Err(invalid(format!(
            "need a header and at least 2 price rows, got {} rows",
            prices.len() + 1
        )));
    }
    let samples: Vec<Vec<f64>> = prices
        .windows(2)
        .map(|w| (0..n).map(|i| 100.0 * (w[1][i] / w[0][i] - 1.0)).collect())
        .collect();
    let m = samples.len() as f64;
    let means: Vec<f64> = (0..n)
        .map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / m)
        .collect();
    let denom = (m - 1.0).max(1.0);
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let c = samples
                .iter()
                .map(|s| (s[i] - means[i]) * (s[j] - means[j]))
                .sum::<f64>()
                / denom
                * RISK_SCALE;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok((names, PortfolioInstance::new(means, cov, 0)?))
}

/// Synthetic daily prices as CSV text: a geometric random walk driven by one
/// market factor plus idiosyncratic noise, so assets are correlated.
pub fn synthetic_prices(assets: usize, days: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let drift: Vec<f64> = (0..assets).map(|_| rng.random_range(-0.05..0.15)).collect();
    let beta: Vec<f64> = (0..assets).map(|_| rng.random_range(0.3..1.5)).collect();
    let vol: Vec<f64> = (0..assets).map(|_| rng.random_range(0.5..2.5)).collect();
    let mut price: Vec<f64> = (0..assets).map(|_| rng.random_range(5.0..100.0)).collect();
    let mut out = (0..assets)
        .map(|i| format!("A{i:02}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for day in 0..days {
        if day > 0 {
            let market: f64 = unit.sample(&mut rng);
            for i in 0..assets {
                let pct = drift[i] + beta[i] * market + vol[i] * unit.sample(&mut rng);
                price[i] *= (pct / 100.0).exp();
            }
        }
        let row = price
            .iter()
            .map(|p| format!("{p:.6}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}
