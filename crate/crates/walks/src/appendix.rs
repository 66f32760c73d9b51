//! Single-vertex amplification studies on small circulant graphs.

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circulant::{enumerate_circulants, CirculantGraph, CirculantWalk};
use crate::error::{invalid, Error, Result};
use crate::optimise::{mix_seed, multi_start_max, MultiStart, MultiStartResult};
use crate::reduced::QwoaParams;

/// Vertex qualities with a single optimal vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityAssignment {
    pub qualities: Vec<f64>,
    pub optimal: usize,
    /// Number of distinct non-optimal qualities.
    pub degeneracy: usize,
}

impl QualityAssignment {
    /// Quality 1 on `optimal`, 0 elsewhere.
    pub fn binary(n: usize, optimal: usize) -> Result<Self> {
        Self::evenly_spaced(n, 1, optimal, None)
    }

    /// Vertex `optimal` has quality 1 and the others `j/(n-1)` in order,
    /// so the whole set is `i/(n-1)` with nothing repeated.
    pub fn uniform(n: usize, optimal: usize) -> Result<Self> {
        Self::evenly_spaced(n, n.saturating_sub(1), optimal, None)
    }

    /// Quality 1 on `optimal`; the other vertices cycle through
    /// `0, 1/d, ..., (d-1)/d`, shuffled when an rng is given.
    pub fn evenly_spaced(n: usize, d: usize, optimal: usize, rng: Option<&mut ChaCha8Rng>) -> Result<Self> {
        check(n, d, optimal)?;
        let values: Vec<f64> = (0..d).map(|j| j as f64 / d as f64).collect();
        Ok(Self::spread(n, &values, 1.0, optimal, rng))
    }

    /// Independent `U[0,1)` qualities; the optimal vertex is the largest.
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        check(n, n.saturating_sub(1), 0)?;
        let qualities: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let optimal = (0..n).max_by(|&a, &b| qualities[a].total_cmp(&qualities[b])).unwrap();
        Ok(Self {
            qualities,
            optimal,
            degeneracy: n - 1,
        })
    }

    /// `d + 1` values from `U[0,1)`: the largest goes to one random vertex
    /// and the rest are repeated over the other vertices in random order.
    pub fn random_degenerate(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        check(n, d, 0)?;
        let mut values: Vec<f64> = (0..=d).map(|_| rng.random()).collect();
        values.sort_by(f64::total_cmp);
        let top = values.pop().unwrap();
        let optimal = rng.random_range(0..n);
        Ok(Self::spread(n, &values, top, optimal, Some(rng)))
    }

    fn spread(n: usize, values: &[f64], top: f64, optimal: usize, rng: Option<&mut ChaCha8Rng>) -> Self {
        let mut rest: Vec<f64> = (0..n - 1).map(|i| values[i % values.len()]).collect();
        if let Some(rng) = rng {
            rest.shuffle(rng);
        }
        rest.insert(optimal, top);
        Self {
            qualities: rest,
            optimal,
            degeneracy: values.len(),
        }
    }
}

fn check(n: usize, d: usize, optimal: usize) -> Result<()> {
    if n < 2 || d == 0 || d > n - 1 || optimal >= n {
        return Err(invalid(format!(
            "need 1 <= degeneracy <= n-1 and optimal < n, got n={n}, d={d}, optimal={optimal}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    /// `2r` independent parameters.
    Free,
    /// One pair applied `r` times.
    Repeated,
}

impl ParamMode {
    pub fn name(self) -> &'static str {
        match self {
            ParamMode::Free => "free",
            ParamMode::Repeated => "repeated",
        }
    }
}

/// Probability on the optimal vertex after the parameters in `x`.
pub fn optimal_probability(walk: &CirculantWalk, q: &QualityAssignment, rounds: usize, mode: ParamMode, x: &[f64]) -> f64 {
    let params = match mode {
        ParamMode::Free => QwoaParams::from_flat(x).expect("even parameter count"),
        ParamMode::Repeated => QwoaParams::repeated(x[0], x[1], rounds),
    };
    walk.probability_at(&q.qualities, &params, q.optimal)
        .expect("quality count checked")
}

/// Multi-start maximisation of the optimal-vertex probability, with `gamma`
/// drawn from `[0, 2 pi)` and `t` from `[0, 2 pi / lambda_max)`.
pub fn optimise_amplification(
    walk: &CirculantWalk,
    q: &QualityAssignment,
    rounds: usize,
    mode: ParamMode,
    protocol: &MultiStart,
    seed: u64,
) -> Result<MultiStartResult> {
    let n = walk.graph().vertices();
    if q.qualities.len() != n {
        return Err(invalid(format!("expected {n} qualities, got {}", q.qualities.len())));
    }
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let t_range = 2.0 * PI / walk.graph().spectral_radius();
    let pairs = match mode {
        ParamMode::Free => rounds,
        ParamMode::Repeated => 1,
    };
    let ranges: Vec<f64> = (0..pairs).flat_map(|_| [2.0 * PI, t_range]).collect();
    let f = |x: &[f64]| optimal_probability(walk, q, rounds, mode, x);
    multi_start_max(&f, &ranges, protocol, seed)
}

/// Which parts of the suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    /// Random graphs of one class, here D12E12, each with random qualities.
    Replicates,
    /// One random graph per degree at fixed spectral count.
    DegreeSweep,
    /// One random graph per spectral count at fixed degree, plus the
    /// complete graph.
    SpectralSweep,
    /// Spectral sweep graphs crossed with degeneracy levels.
    DegeneracyGrid,
    /// Mean and spread of locally optimal values over many starts.
    LocalOptima,
    /// Binary and uniform qualities with one repeated pair.
    RepeatedPairs,
    /// Repeated-pair landscape on the complete graph, sampled on a grid.
    Landscape,
}

impl Study {
    pub const ALL: [Study; 7] = [
        Study::Replicates,
        Study::DegreeSweep,
        Study::SpectralSweep,
        Study::DegeneracyGrid,
        Study::LocalOptima,
        Study::RepeatedPairs,
        Study::Landscape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::Replicates => "replicates",
            Study::DegreeSweep => "degree-sweep",
            Study::SpectralSweep => "spectral-sweep",
            Study::DegeneracyGrid => "degeneracy-grid",
            Study::LocalOptima => "local-optima",
            Study::RepeatedPairs => "repeated-pairs",
            Study::Landscape => "landscape",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown study {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n: usize,
    pub rounds: usize,
    /// Quality distributions per graph in the random-quality studies.
    pub distributions: usize,
    /// Replicate graphs drawn from the replicate class.
    pub replicates: usize,
    pub replicate_degree: usize,
    pub replicate_spectral: usize,
    pub sweep_degree: usize,
    pub sweep_spectral: usize,
    pub degeneracy_levels: Vec<usize>,
    pub landscape_resolution: usize,
    /// Full restart budgets instead of the reduced defaults.
    pub full_budget: bool,
    pub studies: Vec<Study>,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n: 24,
            rounds: 3,
            distributions: 48,
            replicates: 9,
            replicate_degree: 12,
            replicate_spectral: 12,
            sweep_degree: 12,
            sweep_spectral: 13,
            degeneracy_levels: vec![1, 2, 4, 8, 23],
            landscape_resolution: 101,
            full_budget: false,
            studies: Study::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl SuiteConfig {
    /// Starts and refinements for the random-quality studies.
    pub fn best_of_protocol(&self) -> MultiStart {
        let starts = if self.full_budget { 10_000 } else { 1_000 };
        MultiStart::new(starts, 10, 1).expect("valid protocol")
    }

    /// Every start refined, for the spread of local optima.
    pub fn spread_protocol(&self) -> MultiStart {
        let starts = if self.full_budget { 240 } else { 24 };
        MultiStart::new(starts, starts, 1).expect("valid protocol")
    }

    pub fn pair_protocol(&self) -> MultiStart {
        let starts = if self.full_budget { 1_000 } else { 100 };
        MultiStart::new(starts, 10, 1).expect("valid protocol")
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n > crate::circulant::MAX_ENUMERATION_VERTICES {
            return Err(invalid(format!("suite vertex count {} out of range", self.n)));
        }
        if self.rounds == 0 || self.distributions == 0 || self.replicates == 0 {
            return Err(invalid("rounds, distributions and replicates must be positive"));
        }
        if self.landscape_resolution < 2 {
            return Err(invalid("landscape needs at least two points per axis"));
        }
        if let Some(&d) = self.degeneracy_levels.iter().find(|&&d| d == 0 || d >= self.n) {
            return Err(invalid(format!("degeneracy level {d} outside 1..{}", self.n)));
        }
        Ok(())
    }
}

/// One cell of a suite table.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub study: Study,
    pub label: String,
    pub connection_set: String,
    pub degeneracy: usize,
    pub rounds: usize,
    pub mode: ParamMode,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub best: f64,
    pub evaluations: u64,
    /// Some local search hit its iteration cap.
    pub capped: bool,
    /// `ok`, or why the cell has no data.
    pub status: String,
}

/// Probability on the optimal vertex over a `(gamma, t)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub label: String,
    pub qualities: String,
    pub rounds: usize,
    pub gammas: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[i][j]` at `gammas[i]`, `times[j]`.
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Matrix CSV: header of walk times, then one row per phase strength.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "gamma\\t")?;
        for t in &self.times {
            write!(w, ",{t:.9e}")?;
        }
        writeln!(w)?;
        for (g, row) in self.gammas.iter().zip(&self.values) {
            write!(w, "{g:.9}")?;
            for v in row {
                write!(w, ",{v:.12}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteTables {
    pub rows: Vec<SuiteRow>,
    pub landscapes: Vec<Landscape>,
}

impl SuiteTables {
    pub fn find(&self, study: Study, label: &str, degeneracy: usize) -> Option<&SuiteRow> {
        self.rows
            .iter()
            .find(|r| r.study == study && r.label == label && r.degeneracy == degeneracy)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "study,graph,connection_set,degeneracy,rounds,mode,samples,mean,std_dev,best,evaluations,capped,status"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:.12},{:.12},{:.12},{},{},{}",
                r.study.name(),
                r.label,
                r.connection_set,
                r.degeneracy,
                r.rounds,
                r.mode.name(),
                r.samples,
                r.mean,
                r.std_dev,
                r.best,
                r.evaluations,
                r.capped,
                r.status
            )?;
        }
        Ok(())
    }
}

fn set_string(g: &CirculantGraph) -> String {
    let s: Vec<String> = g.jumps().iter().map(usize::to_string).collect();
    s.join(" ")
}

/// Graph drawn uniformly from a class, or the reason there is none.
fn pick(n: usize, degree: usize, spectral: usize, rng: &mut ChaCha8Rng) -> std::result::Result<CirculantGraph, String> {
    match enumerate_circulants(n, Some(degree), Some(spectral)) {
        Ok(class) => Ok(class.choose(rng).expect("non-empty class").clone()),
        Err(Error::EmptyClass { .. }) => Err("empty-class".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn pick_many(n: usize, degree: usize, spectral: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CirculantGraph>> {
    let class = enumerate_circulants(n, Some(degree), Some(spectral))?;
    Ok(class.choose_multiple(rng, k.min(class.len())).cloned().collect())
}

/// Placeholder row for a graph class with no members.
fn missing(study: Study, label: String, degeneracy: usize, cfg: &SuiteConfig, mode: ParamMode, status: String) -> SuiteRow {
    SuiteRow {
        study,
        label,
        connection_set: String::new(),
        degeneracy,
        rounds: cfg.rounds,
        mode,
        samples: 0,
        mean: f64::NAN,
        std_dev: f64::NAN,
        best: f64::NAN,
        evaluations: 0,
        capped: false,
        status,
    }
}

struct Cell {
    study: Study,
    graph: CirculantGraph,
    degeneracy: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
}

/// Best optimal-vertex probability for each of `cfg.distributions` random
/// quality assignments on one graph.
fn random_quality_cell(cell: &Cell, cfg: &SuiteConfig, seed: u64) -> Result<SuiteRow> {
    let walk = CirculantWalk::new(cell.graph.clone());
    let protocol = cfg.best_of_protocol();
    let mut bests = Vec::with_capacity(cfg.distributions);
    let (mut evaluations, mut capped) = (0, false);
    for k in 0..cfg.distributions {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2 * k as u64));
        let q = if cell.degeneracy + 1 >= cfg.n {
            QualityAssignment::random(cfg.n, &mut rng)?
        } else {
            QualityAssignment::random_degenerate(cfg.n, cell.degeneracy, &mut rng)?
        };
        let res = optimise_amplification(&walk, &q, cfg.rounds, ParamMode::Free, &protocol, mix_seed(seed, 2 * k as u64 + 1))?;
        evaluations += res.best.evaluations;
        capped |= res.best.capped;
        bests.push(res.best.value);
    }
    let (mean, std_dev) = mean_std(&bests);
    Ok(SuiteRow {
        study: cell.study,
        label: cell.graph.label(),
        connection_set: set_string(&cell.graph),
        degeneracy: cell.degeneracy,
        rounds: cfg.rounds,
        mode: ParamMode::Free,
        samples: cfg.distributions,
        mean,
        std_dev,
        best: bests.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        evaluations,
        capped,
        status: "ok".into(),
    })
}

fn optimisation_row(
    study: Study,
    graph: &CirculantGraph,
    q: &QualityAssignment,
    cfg: &SuiteConfig,
    mode: ParamMode,
    protocol: &MultiStart,
    seed: u64,
) -> Result<SuiteRow> {
    let walk = CirculantWalk::new(graph.clone());
    let res = optimise_amplification(&walk, q, cfg.rounds, mode, protocol, seed)?;
    Ok(SuiteRow {
        study,
        label: graph.label(),
        connection_set: set_string(graph),
        degeneracy: q.degeneracy,
        rounds: cfg.rounds,
        mode,
        samples: res.refined.len(),
        mean: res.mean(),
        std_dev: res.std_dev(),
        best: res.best.value,
        evaluations: res.best.evaluations,
        capped: res.best.capped,
        status: "ok".into(),
    })
}

/// Graphs for the spectral sweep: one per spectral count at the sweep
/// degree, then the complete graph.
fn spectral_graphs(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<std::result::Result<CirculantGraph, (String, String)>> {
    let mut out: Vec<_> = (3..=cfg.sweep_spectral)
        .map(|e| pick(cfg.n, cfg.sweep_degree, e, rng).map_err(|s| (format!("D{}E{}", cfg.sweep_degree, e), s)))
        .collect();
    out.push(Ok(CirculantGraph::complete(cfg.n).expect("valid size")));
    out
}

pub fn run_appendix_suite(cfg: &SuiteConfig) -> Result<SuiteTables> {
    cfg.validate()?;
    let wants = |s| cfg.studies.contains(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, u64::MAX));
    let mut rows = Vec::new();
    let mut cells = Vec::new();

    if wants(Study::Replicates) {
        for g in pick_many(cfg.n, cfg.replicate_degree, cfg.replicate_spectral, cfg.replicates, &mut rng)? {
            cells.push(Cell {
                study: Study::Replicates,
                graph: g,
                degeneracy: cfg.n - 1,
            });
        }
    }
    if wants(Study::DegreeSweep) {
        for d in 2..cfg.n - 2 {
            match pick(cfg.n, d, cfg.sweep_spectral, &mut rng) {
                Ok(g) => cells.push(Cell {
                    study: Study::DegreeSweep,
                    graph: g,
                    degeneracy: cfg.n - 1,
                }),
                Err(s) => rows.push(missing(
                    Study::DegreeSweep,
                    format!("D{d}E{}", cfg.sweep_spectral),
                    cfg.n - 1,
                    cfg,
                    ParamMode::Free,
                    s,
                )),
            }
        }
    }
    let spectral = spectral_graphs(cfg, &mut rng);
    let graph_cells = |study: Study, levels: &[usize], rows: &mut Vec<SuiteRow>, cells: &mut Vec<Cell>| {
        for g in &spectral {
            for &d in levels {
                match g {
                    Ok(g) => cells.push(Cell {
                        study,
                        graph: g.clone(),
                        degeneracy: d,
                    }),
                    Err((label, s)) => rows.push(missing(study, label.clone(), d, cfg, ParamMode::Free, s.clone())),
                }
            }
        }
    };
    if wants(Study::SpectralSweep) {
        graph_cells(Study::SpectralSweep, &[cfg.n - 1], &mut rows, &mut cells);
    }
    if wants(Study::DegeneracyGrid) {
        graph_cells(Study::DegeneracyGrid, &cfg.degeneracy_levels, &mut rows, &mut cells);
    }

    let computed: Vec<SuiteRow> = cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| random_quality_cell(c, cfg, mix_seed(cfg.seed, i as u64)))
        .collect::<Result<_>>()?;
    rows.extend(computed);

    if wants(Study::LocalOptima) {
        // every graph sees the same arrangement of qualities
        let protocol = cfg.spread_protocol();
        let mut jobs = Vec::new();
        for &d in &cfg.degeneracy_levels {
            let mut qrng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1 << 32 | d as u64));
            let q = QualityAssignment::evenly_spaced(cfg.n, d, 0, Some(&mut qrng))?;
            for g in &spectral {
                match g {
                    Ok(g) => jobs.push((g.clone(), q.clone())),
                    Err((label, s)) => {
                        rows.push(missing(Study::LocalOptima, label.clone(), d, cfg, ParamMode::Free, s.clone()))
                    }
                }
            }
        }
        let out: Vec<SuiteRow> = jobs
            .par_iter()
            .enumerate()
            .map(|(i, (g, q))| {
                optimisation_row(Study::LocalOptima, g, q, cfg, ParamMode::Free, &protocol, mix_seed(cfg.seed, 2 << 32 | i as u64))
            })
            .collect::<Result<_>>()?;
        rows.extend(out);
    }

    if wants(Study::RepeatedPairs) {
        let protocol = cfg.pair_protocol();
        let mut jobs = Vec::new();
        for g in spectral.iter().flatten() {
            jobs.push((g.clone(), QualityAssignment::binary(cfg.n, 0)?));
            jobs.push((g.clone(), QualityAssignment::uniform(cfg.n, 0)?));
        }
        let out: Vec<SuiteRow> = jobs
            .par_iter()
            .enumerate()
            .map(|(i, (g, q))| {
                optimisation_row(Study::RepeatedPairs, g, q, cfg, ParamMode::Repeated, &protocol, mix_seed(cfg.seed, 3 << 32 | i as u64))
            })
            .collect::<Result<_>>()?;
        rows.extend(out);
    }

    let mut landscapes = Vec::new();
    if wants(Study::Landscape) {
        let walk = CirculantWalk::new(CirculantGraph::complete(cfg.n)?);
        for (name, q) in [
            ("binary", QualityAssignment::binary(cfg.n, 0)?),
            ("uniform", QualityAssignment::uniform(cfg.n, 0)?),
        ] {
            landscapes.push(landscape(&walk, &q, name, cfg.rounds, cfg.landscape_resolution));
        }
    }
    Ok(SuiteTables { rows, landscapes })
}

/// Repeated-pair probabilities over `gamma` in `[0, 2 pi]` and `t` in
/// `[0, 2 pi / lambda_max]`.
pub fn landscape(walk: &CirculantWalk, q: &QualityAssignment, name: &str, rounds: usize, resolution: usize) -> Landscape {
    let step = |hi: f64| -> Vec<f64> { (0..resolution).map(|i| hi * i as f64 / (resolution - 1) as f64).collect() };
    let gammas = step(2.0 * PI);
    let times = step(2.0 * PI / walk.graph().spectral_radius());
    let values = gammas
        .par_iter()
        .map(|&g| {
            times
                .iter()
                .map(|&t| optimal_probability(walk, q, rounds, ParamMode::Repeated, &[g, t]))
                .collect()
        })
        .collect();
    Landscape {
        label: walk.graph().label(),
        qualities: name.into(),
        rounds,
        gammas,
        times,
        values,
    }
}
