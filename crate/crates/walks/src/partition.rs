//! Amplification of a small marked set on large partitioned complete graphs.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::optimise::{mix_seed, multi_start_max, nelder_mead_max, MultiStart, NelderMeadConfig};
use crate::reduced::{partition_graph, single_iteration_amplification, QwoaParams};

/// Maximum of the single-round amplification for an `n`-vertex complete
/// graph, found by a grid over `[0, 2 pi] x [0, 2 pi / n]` and a local
/// refinement from the best grid point. Returns `(gamma, t, value)`.
pub fn maximise_single_iteration(n: f64, resolution: usize) -> Result<(f64, f64, f64)> {
    if !(n.is_finite() && n >= 1.0) || resolution < 2 {
        return Err(invalid("need n >= 1 and at least two grid points"));
    }
    let t_hi = 2.0 * PI / n;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..resolution {
        let g = 2.0 * PI * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let t = t_hi * j as f64 / (resolution - 1) as f64;
            let v = single_iteration_amplification(g, t, n);
            if v > best.2 {
                best = (g, t, v);
            }
        }
    }
    // refine in (gamma, n t) so both coordinates have unit scale
    let f = |x: &[f64]| single_iteration_amplification(x[0], x[1] / n, n);
    let step = 2.0 * PI / (resolution - 1) as f64;
    let cfg = NelderMeadConfig {
        initial_step: 1.0,
        tolerance: 1e-15,
        ..NelderMeadConfig::default()
    };
    let o = nelder_mead_max(&f, &[best.0, best.1 * n], &[step, step], &cfg)?;
    Ok((o.x[0], o.x[1] / n, o.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    pub parts: Vec<usize>,
    pub total: u64,
    pub marked: u64,
    pub max_rounds: usize,
    pub protocol: MultiStart,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            parts: vec![2, 3, 5, 10],
            total: 100_000_000,
            marked: 10,
            max_rounds: 10,
            protocol: MultiStart::new(500, 3, 4).expect("valid protocol"),
            seed: 0,
        }
    }
}

impl PartitionConfig {
    /// The full optimisation budget: 10,000 starts, best 3, 24 repeats.
    pub fn full_budget(mut self) -> Self {
        self.protocol = MultiStart::new(10_000, 3, 24).expect("valid protocol");
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionRow {
    pub parts: usize,
    pub rounds: usize,
    /// `optimised`, or `derived` for `(pi, pi/N)` repeated.
    pub mode: &'static str,
    pub probability: f64,
    pub amplification: f64,
    /// `(2r+1)^2`.
    pub low_convergence_bound: f64,
}

/// Optimised marked-group probability for each partition count and round
/// count `0..=max_rounds`, plus the derived parameters on the binary
/// partition.
pub fn partition_experiment(cfg: &PartitionConfig) -> Result<Vec<PartitionRow>> {
    if cfg.parts.iter().any(|&p| p < 2) {
        return Err(invalid("partition counts must be at least 2"));
    }
    let base = cfg.marked as f64 / cfg.total as f64;
    let mut jobs = Vec::new();
    for &p in &cfg.parts {
        for r in 0..=cfg.max_rounds {
            jobs.push((p, r));
        }
    }
    let graphs = cfg
        .parts
        .iter()
        .map(|&p| partition_graph(p, cfg.total, cfg.marked))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<PartitionRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(p, r))| {
            let g = &graphs[cfg.parts.iter().position(|&x| x == p).unwrap()];
            let probability = if r == 0 {
                g.group_probability(0, &QwoaParams::repeated(0.0, 0.0, 0))
            } else {
                let f = |x: &[f64]| g.group_probability(0, &QwoaParams::from_flat(x).expect("even length"));
                let t_range = 2.0 * PI / g.spectral_radius();
                let ranges: Vec<f64> = (0..r).flat_map(|_| [2.0 * PI, t_range]).collect();
                multi_start_max(&f, &ranges, &cfg.protocol, mix_seed(cfg.seed, i as u64))?.best.value
            };
            Ok(PartitionRow {
                parts: p,
                rounds: r,
                mode: "optimised",
                probability,
                amplification: probability / base,
                low_convergence_bound: ((2 * r + 1) as f64).powi(2),
            })
        })
        .collect::<Result<_>>()?;
    let binary = partition_graph(2, cfg.total, cfg.marked)?;
    let n = cfg.total as f64;
    for r in 0..=cfg.max_rounds {
        let probability = binary.group_probability(0, &QwoaParams::repeated(PI, PI / n, r));
        rows.push(PartitionRow {
            parts: 2,
            rounds: r,
            mode: "derived",
            probability,
            amplification: probability / base,
            low_convergence_bound: ((2 * r + 1) as f64).powi(2),
        });
    }
    Ok(rows)
}

pub fn write_partition_csv<W: Write>(rows: &[PartitionRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "p,r,mode,probability,amplification,low_convergence_bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.12e},{:.9},{}",
            r.parts, r.rounds, r.mode, r.probability, r.amplification, r.low_convergence_bound
        )?;
    }
    Ok(())
}
